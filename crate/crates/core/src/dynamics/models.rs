use super::aero::AeroTable;
use super::{ControlSpec, InputChannel};
use crate::error::{Error, Result};

/// Vertical point mass `(ydot, y)` driven by thrust `u1` against gravity
/// with an additive vertical disturbance `d_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMass {
    pub gravity: f64,
    pub control: ControlSpec,
    pub disturbance: ControlSpec,
}

impl Default for PointMass {
    fn default() -> Self {
        PointMass {
            gravity: 9.8,
            control: ControlSpec::single("u1", InputChannel::Interval { lo: -60.0, hi: 60.0 }),
            disturbance: ControlSpec::single("d_y", InputChannel::Interval { lo: -10.0, hi: 10.0 }),
        }
    }
}

impl PointMass {
    pub(crate) fn flow(&self, x: &[f64], a: &[f64], b: &[f64], out: &mut [f64]) {
        out[0] = a[0] - self.gravity + b[0];
        out[1] = x[0];
    }

    pub(crate) fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let p0 = p[0];
        p0 * -self.gravity
            + self.control.channels[0].min_of(p0)
            + self.disturbance.channels[0].max_of(p0)
            + p[1] * x[0]
    }
}

/// Longitudinal glide dynamics `(h, V, gamma)` with angle of attack as the
/// control and a horizontal wind force as the disturbance.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedWing {
    pub mass: f64,
    pub gravity: f64,
    pub rho: f64,
    pub wing_area: f64,
    aero: AeroTable,
    pub control: ControlSpec,
    pub disturbance: ControlSpec,
    /// `(C_L, C_D)` at each control sample.
    coeffs: Vec<(f64, f64)>,
}

/// Number of angle-of-attack samples used when the control is given as an interval.
pub const DEFAULT_ALPHA_SAMPLES: usize = 27;

impl FixedWing {
    /// The lift and drag coefficients make the dynamics non-affine in the
    /// angle of attack, so an interval control is replaced by
    /// [`DEFAULT_ALPHA_SAMPLES`] uniform samples.
    pub fn new(
        mass: f64,
        gravity: f64,
        rho: f64,
        wing_area: f64,
        aero: AeroTable,
        alpha: InputChannel,
        wind: InputChannel,
    ) -> Result<FixedWing> {
        if !(mass > 0.0 && rho > 0.0 && wing_area > 0.0 && gravity.is_finite()) {
            return Err(Error::InvalidArgument(
                "mass, air density and wing area must be positive".into(),
            ));
        }
        let alpha = match alpha {
            InputChannel::Interval { lo, hi } => {
                InputChannel::samples(linspace(lo, hi, DEFAULT_ALPHA_SAMPLES))?
            }
            s => s,
        };
        let control = ControlSpec::single("alpha", alpha);
        let disturbance = ControlSpec::single("F_wind", wind);
        control.validate()?;
        disturbance.validate()?;
        let coeffs = control.channels[0].candidates().iter().map(|a| aero.eval(*a)).collect();
        Ok(FixedWing {
            mass,
            gravity,
            rho,
            wing_area,
            aero,
            control,
            disturbance,
            coeffs,
        })
    }

    /// Default airframe with the given aerodynamic table: angle of attack
    /// sampled over 0 to 13 degrees, wind force within ±10 kN.
    pub fn with_aero(aero: AeroTable) -> FixedWing {
        FixedWing::new(
            60_000.0,
            9.8,
            1.225,
            112.0,
            aero,
            InputChannel::Interval { lo: 0.0, hi: 13f64.to_radians() },
            InputChannel::Interval { lo: -10_000.0, hi: 10_000.0 },
        )
        .expect("default airframe is valid")
    }

    pub fn aero(&self) -> &AeroTable {
        &self.aero
    }

    pub(crate) fn flow(&self, x: &[f64], a: &[f64], b: &[f64], out: &mut [f64]) -> Result<()> {
        let (v, gamma) = (x[1], x[2]);
        if !(v > 0.0) {
            return Err(Error::Singular(format!("airspeed {v} is not positive")));
        }
        let (cl, cd) = self.aero.eval(a[0]);
        let q = 0.5 * self.rho * self.wing_area * v * v;
        let (s, c) = gamma.sin_cos();
        out[0] = v * s;
        out[1] = (-q * cd + b[0]) / self.mass - self.gravity * s;
        out[2] = q * cl / (self.mass * v) - self.gravity * c / v;
        Ok(())
    }

    /// Non-positive airspeed yields NaN, which the solver reports as a
    /// non-finite node.
    pub(crate) fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let (v, gamma) = (x[1], x[2]);
        if !(v > 0.0) {
            return f64::NAN;
        }
        let (s, c) = gamma.sin_cos();
        let k = 0.5 * self.rho * self.wing_area * v * v / self.mass;
        let (pv, pg) = (p[1], p[2]);
        let pg_v = pg / v;
        let aero = self
            .coeffs
            .iter()
            .map(|&(cl, cd)| k * (pg_v * cl - pv * cd))
            .fold(f64::INFINITY, f64::min);
        p[0] * v * s - pv * self.gravity * s - pg_v * self.gravity * c
            + aero
            + self.disturbance.channels[0].max_of(pv / self.mass)
    }
}

/// Constant velocity field with no inputs; used for solver verification.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantDrift {
    pub velocity: Vec<f64>,
}

impl ConstantDrift {
    pub(crate) fn flow(&self, out: &mut [f64]) {
        out.copy_from_slice(&self.velocity);
    }

    pub(crate) fn hamiltonian(&self, p: &[f64]) -> f64 {
        self.velocity.iter().zip(p).map(|(v, p)| v * p).sum()
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect()
}
