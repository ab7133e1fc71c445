use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Lift and drag coefficients tabulated against angle of attack (radians),
/// linearly interpolated and clamped at the ends.
#[derive(Clone, Debug, PartialEq)]
pub struct AeroTable {
    alpha: Vec<f64>,
    cl: Vec<f64>,
    cd: Vec<f64>,
}

impl AeroTable {
    pub fn new(alpha: Vec<f64>, cl: Vec<f64>, cd: Vec<f64>) -> Result<AeroTable> {
        if alpha.len() < 2 || alpha.len() != cl.len() || alpha.len() != cd.len() {
            return Err(Error::InvalidArgument(
                "aero table needs at least two rows of equal length".into(),
            ));
        }
        if alpha.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("aero table angles must ascend".into()));
        }
        if cd.iter().any(|c| !(*c > 0.0)) || cl.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "drag coefficients must be positive and lift finite".into(),
            ));
        }
        Ok(AeroTable { alpha, cl, cd })
    }

    /// Linear lift slope with a parabolic drag polar,
    /// `C_L = cl0 + cl_alpha * alpha`, `C_D = cd0 + k * C_L^2`, sampled at `alphas`.
    pub fn from_polar(cl0: f64, cl_alpha: f64, cd0: f64, k: f64, alphas: &[f64]) -> Result<AeroTable> {
        let cl: Vec<f64> = alphas.iter().map(|a| cl0 + cl_alpha * a).collect();
        let cd = cl.iter().map(|c| cd0 + k * c * c).collect();
        AeroTable::new(alphas.to_vec(), cl, cd)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    /// `(C_L, C_D)` at angle `alpha` (radians).
    pub fn eval(&self, alpha: f64) -> (f64, f64) {
        let n = self.alpha.len();
        if alpha <= self.alpha[0] {
            return (self.cl[0], self.cd[0]);
        }
        if alpha >= self.alpha[n - 1] {
            return (self.cl[n - 1], self.cd[n - 1]);
        }
        let k = self.alpha.partition_point(|a| *a <= alpha) - 1;
        let w = (alpha - self.alpha[k]) / (self.alpha[k + 1] - self.alpha[k]);
        (
            self.cl[k] + w * (self.cl[k + 1] - self.cl[k]),
            self.cd[k] + w * (self.cd[k + 1] - self.cd[k]),
        )
    }

    /// Reads `alpha_deg,C_L,C_D` CSV (header required).
    pub fn from_csv<R: Read>(input: R) -> Result<AeroTable> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != ["alpha_deg", "C_L", "C_D"] {
            return Err(Error::Format(format!(
                "aero CSV header must be alpha_deg,C_L,C_D, got {}",
                header.join(",")
            )));
        }
        let (mut alpha, mut cl, mut cd) = (Vec::new(), Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Format(format!("aero CSV row {}: bad column {i}", row + 2)))
            };
            alpha.push(num(0)?.to_radians());
            cl.push(num(1)?);
            cd.push(num(2)?);
        }
        AeroTable::new(alpha, cl, cd)
    }

    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha_deg", "C_L", "C_D"])?;
        for i in 0..self.alpha.len() {
            w.write_record([
                format!("{:?}", self.alpha[i].to_degrees()),
                format!("{:?}", self.cl[i]),
                format!("{:?}", self.cd[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
