//! System models, admissible input sets and the min–max Hamiltonian of the
//! budget-augmented game.
//!
//! The augmented state appends the remaining violation budget `z` to the
//! system state. Its rate does not depend on the inputs, so the extremal
//! Hamiltonian splits into the system part, solved per model, plus
//! `p_z * (-rate)`.

mod aero;
mod models;

pub use aero::AeroTable;
pub(crate) use models::linspace;
pub use models::{ConstantDrift, FixedWing, PointMass, DEFAULT_ALPHA_SAMPLES};

use crate::error::{Error, Result};
use crate::geometry::ImplicitSet;
use crate::grid::Grid;

/// Admissible values of one input channel.
#[derive(Clone, Debug, PartialEq)]
pub enum InputChannel {
    Interval { lo: f64, hi: f64 },
    Samples(Vec<f64>),
}

impl InputChannel {
    pub fn interval(lo: f64, hi: f64) -> Result<InputChannel> {
        let ch = InputChannel::Interval { lo, hi };
        ch.validate()?;
        Ok(ch)
    }

    pub fn samples(values: Vec<f64>) -> Result<InputChannel> {
        let ch = InputChannel::Samples(values);
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InputChannel::Interval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::InvalidArgument(format!("bad input interval [{lo}, {hi}]")));
                }
            }
            InputChannel::Samples(v) => {
                if v.is_empty() {
                    return Err(Error::InvalidArgument("empty input sample list".into()));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite input sample".into()));
                }
            }
        }
        Ok(())
    }

    /// Values at which an extremum over this channel can occur: the
    /// endpoints of an interval (the dynamics are affine in such channels)
    /// or every sample.
    pub fn candidates(&self) -> Vec<f64> {
        match self {
            InputChannel::Interval { lo, hi } if lo == hi => vec![*lo],
            InputChannel::Interval { lo, hi } => vec![*lo, *hi],
            InputChannel::Samples(v) => v.clone(),
        }
    }

    /// Candidates plus zero when an interval contains it, so that exact
    /// ties can resolve to the smallest-magnitude input.
    fn tie_candidates(&self) -> Vec<f64> {
        let mut c = self.candidates();
        if let InputChannel::Interval { lo, hi } = self {
            if *lo < 0.0 && *hi > 0.0 {
                c.push(0.0);
            }
        }
        c
    }

    pub fn contains(&self, v: f64) -> bool {
        match self {
            InputChannel::Interval { lo, hi } => *lo <= v && v <= *hi,
            InputChannel::Samples(s) => s.contains(&v),
        }
    }

    /// `min` of `coef * v` over the channel.
    pub fn min_of(&self, coef: f64) -> f64 {
        match self {
            InputChannel::Interval { lo, hi } => (coef * lo).min(coef * hi),
            InputChannel::Samples(s) => s.iter().map(|v| coef * v).fold(f64::INFINITY, f64::min),
        }
    }

    /// `max` of `coef * v` over the channel.
    pub fn max_of(&self, coef: f64) -> f64 {
        -self.min_of(-coef)
    }
}

/// Named input channels of one player.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSpec {
    pub names: Vec<String>,
    pub channels: Vec<InputChannel>,
}

impl ControlSpec {
    pub fn single(name: &str, channel: InputChannel) -> ControlSpec {
        ControlSpec { names: vec![name.to_string()], channels: vec![channel] }
    }

    pub fn none() -> ControlSpec {
        ControlSpec { names: Vec::new(), channels: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.names.len() != self.channels.len() {
            return Err(Error::InvalidArgument("one name per input channel".into()));
        }
        self.channels.iter().try_for_each(InputChannel::validate)
    }

    /// Cartesian product of per-channel tie candidates, ordered by
    /// increasing Euclidean norm.
    pub(crate) fn ordered_candidates(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for ch in &self.channels {
            let vals = ch.tie_candidates();
            out = out
                .iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(*v);
                        next
                    })
                })
                .collect();
        }
        let norm = |v: &Vec<f64>| v.iter().map(|x| x * x).sum::<f64>();
        out.sort_by(|a, b| norm(a).total_cmp(&norm(b)));
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemModel {
    PointMass(PointMass),
    FixedWing(FixedWing),
    ConstantDrift(ConstantDrift),
}

impl SystemModel {
    pub fn point_mass() -> SystemModel {
        SystemModel::PointMass(PointMass::default())
    }

    pub fn id(&self) -> &'static str {
        match self {
            SystemModel::PointMass(_) => "point-mass",
            SystemModel::FixedWing(_) => "fixed-wing",
            SystemModel::ConstantDrift(_) => "constant-drift",
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            SystemModel::PointMass(_) => 2,
            SystemModel::FixedWing(_) => 3,
            SystemModel::ConstantDrift(m) => m.velocity.len(),
        }
    }

    pub fn state_names(&self) -> Vec<String> {
        match self {
            SystemModel::PointMass(_) => vec!["ydot".into(), "y".into()],
            SystemModel::FixedWing(_) => vec!["h".into(), "V".into(), "gamma".into()],
            SystemModel::ConstantDrift(m) => (0..m.velocity.len()).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn state_units(&self) -> Vec<&'static str> {
        match self {
            SystemModel::PointMass(_) => vec!["m/s", "m"],
            SystemModel::FixedWing(_) => vec!["m", "m/s", "rad"],
            SystemModel::ConstantDrift(m) => vec!["1"; m.velocity.len()],
        }
    }

    pub fn control(&self) -> &ControlSpec {
        static NONE: std::sync::OnceLock<ControlSpec> = std::sync::OnceLock::new();
        match self {
            SystemModel::PointMass(m) => &m.control,
            SystemModel::FixedWing(m) => &m.control,
            SystemModel::ConstantDrift(_) => NONE.get_or_init(ControlSpec::none),
        }
    }

    pub fn disturbance(&self) -> &ControlSpec {
        match self {
            SystemModel::PointMass(m) => &m.disturbance,
            SystemModel::FixedWing(m) => &m.disturbance,
            SystemModel::ConstantDrift(_) => self.control(),
        }
    }

    /// State rate into `out`. The models are time invariant.
    pub fn flow_into(&self, x: &[f64], a: &[f64], b: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.state_dim();
        if x.len() < n || a.len() != self.control().dim() || b.len() != self.disturbance().dim() {
            return Err(Error::InvalidArgument(format!(
                "{} flow expects {n} states, {} controls and {} disturbances",
                self.id(),
                self.control().dim(),
                self.disturbance().dim()
            )));
        }
        match self {
            SystemModel::PointMass(m) => m.flow(x, a, b, out),
            SystemModel::FixedWing(m) => m.flow(x, a, b, out)?,
            SystemModel::ConstantDrift(m) => m.flow(out),
        }
        Ok(())
    }

    pub fn flow(&self, _t: f64, x: &[f64], a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.state_dim()];
        self.flow_into(x, a, b, &mut out)?;
        Ok(out)
    }

    /// `min_a max_b p . f(x, a, b)` over the system state only, evaluated
    /// in closed form. `x` and `p` may carry trailing augmented entries.
    #[inline]
    pub fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        match self {
            SystemModel::PointMass(m) => m.hamiltonian(x, p),
            SystemModel::FixedWing(m) => m.hamiltonian(x, p),
            SystemModel::ConstantDrift(m) => m.hamiltonian(p),
        }
    }
}

/// Regularized violation rate `min(1, max(0, c2 / epsilon))`.
pub fn h_epsilon(c2: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok((c2 / epsilon).clamp(0.0, 1.0))
}

/// How fast the budget drains given the soft-constraint signed distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BudgetRate {
    /// Indicator of leaving the soft set.
    Exact,
    /// Ramp of width `epsilon` outside the soft set.
    Regularized { epsilon: f64 },
}

impl BudgetRate {
    pub fn regularized(epsilon: f64) -> Result<BudgetRate> {
        h_epsilon(0.0, epsilon)?;
        Ok(BudgetRate::Regularized { epsilon })
    }

    #[inline]
    pub fn rate(&self, c2: f64) -> f64 {
        match *self {
            BudgetRate::Exact => {
                if c2 > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            BudgetRate::Regularized { epsilon } => (c2 / epsilon).clamp(0.0, 1.0),
        }
    }
}

/// Rate of the augmented state `(x, z)`: the system flow followed by
/// `-rate(c2(t, x))`. The budget rate never depends on `z` itself.
#[allow(clippy::too_many_arguments)]
pub fn augmented_flow(
    model: &SystemModel,
    soft: &ImplicitSet,
    rate: BudgetRate,
    t: f64,
    x: &[f64],
    _z: f64,
    a: &[f64],
    b: &[f64],
) -> Result<Vec<f64>> {
    let n = model.state_dim();
    let mut out = vec![0.0; n + 1];
    model.flow_into(x, a, b, &mut out[..n])?;
    out[n] = -rate.rate(soft.sdf(t, &x[..n]));
    Ok(out)
}

/// Extremal Hamiltonian at the augmented point `x_aug` with costate
/// `p_aug`. When `p_aug` has one more entry than the state, the budget
/// term `p_z * (-rate)` is added.
pub fn extremal_hamiltonian(
    model: &SystemModel,
    soft: &ImplicitSet,
    rate: BudgetRate,
    t: f64,
    x_aug: &[f64],
    p_aug: &[f64],
) -> f64 {
    let n = model.state_dim();
    let mut h = model.hamiltonian(x_aug, p_aug);
    if p_aug.len() > n {
        h -= p_aug[n] * rate.rate(soft.sdf(t, &x_aug[..n]));
    }
    h
}

/// Saddle inputs found by enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct Isaacs {
    pub control: Vec<f64>,
    pub disturbance: Vec<f64>,
    pub value: f64,
}

fn beats(candidate: f64, best: f64) -> bool {
    candidate < best - 1e-12 * (1.0 + best.abs())
}

/// `min_a max_b p . f(x, a, b)` by enumerating the candidate inputs of each
/// player. Candidates are visited by increasing magnitude and only a
/// strict improvement replaces the incumbent, so ties go to the smallest
/// input.
pub fn isaacs_by_enumeration(model: &SystemModel, x: &[f64], p: &[f64]) -> Result<Isaacs> {
    let n = model.state_dim();
    let controls = model.control().ordered_candidates();
    let disturbances = model.disturbance().ordered_candidates();
    let mut f = vec![0.0; n];
    let mut best: Option<Isaacs> = None;
    for a in &controls {
        let mut inner: Option<(f64, &Vec<f64>)> = None;
        for b in &disturbances {
            model.flow_into(x, a, b, &mut f)?;
            let v: f64 = f.iter().zip(p).map(|(f, p)| f * p).sum();
            if inner.map_or(true, |(w, _)| beats(-v, -w)) {
                inner = Some((v, b));
            }
        }
        let (v, b) = inner.expect("disturbance candidates are never empty");
        if best.as_ref().map_or(true, |s| beats(v, s.value)) {
            best = Some(Isaacs { control: a.clone(), disturbance: b.clone(), value: v });
        }
    }
    Ok(best.expect("control candidates are never empty"))
}

/// Per-axis bound on `|f_i|` over the grid, used as Lax–Friedrichs
/// dissipation. State axes are bounded by evaluating every combination of
/// axis extremes (plus zero where an axis straddles it) with every input
/// candidate; a trailing budget axis, when `with_budget` is set, has bound 1.
pub fn speed_bounds(model: &SystemModel, grid: &Grid, with_budget: bool) -> Result<Vec<f64>> {
    let n = model.state_dim();
    let expected = n + usize::from(with_budget);
    if grid.dim() != expected {
        return Err(Error::InvalidArgument(format!(
            "{} needs a {expected}-axis grid, got {}",
            model.id(),
            grid.dim()
        )));
    }
    let per_axis: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let a = grid.axis(i);
            let mut v = vec![a.min, a.max];
            if a.min < 0.0 && a.max > 0.0 {
                v.push(0.0);
            }
            v
        })
        .collect();
    let controls = model.control().ordered_candidates();
    let disturbances = model.disturbance().ordered_candidates();
    let mut bounds = vec![0.0f64; expected];
    let mut x = vec![0.0; n];
    let mut f = vec![0.0; n];
    let total: usize = per_axis.iter().map(Vec::len).product();
    for mut code in 0..total {
        for i in (0..n).rev() {
            let len = per_axis[i].len();
            x[i] = per_axis[i][code % len];
            code /= len;
        }
        for a in &controls {
            for b in &disturbances {
                model.flow_into(&x, a, b, &mut f)?;
                for i in 0..n {
                    bounds[i] = bounds[i].max(f[i].abs());
                }
            }
        }
    }
    if with_budget {
        bounds[n] = 1.0;
    }
    Ok(bounds)
}
