//! Closed-loop rollouts under the value-gradient policy and verification of
//! the reach–avoid clauses along the result.
//!
//! Inputs are recomputed at the start of each interval and held for its
//! duration. Both players read the same gradient: the controller takes the
//! minimizing input, the disturbance the maximizing response. The budget
//! drains at the exact rate (1 outside the soft set, 0 inside).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::isaacs_by_enumeration;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::solver::Game;

/// Controller and disturbance inputs minimizing and maximizing
/// `grad W . f` at `(t, x, z)`. Fields without a budget axis ignore `z`.
///
/// The gradient comes from central differences of the interpolated field
/// with half-spacing steps. Ties go to the smallest-magnitude input.
pub fn optimal_inputs(w: &ScalarField, game: &Game, t: f64, x: &[f64], z: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = value_gradient(w, game, t, x, z)?;
    let s = isaacs_by_enumeration(&game.model, x, &p[..game.state_dim()])?;
    Ok((s.control, s.disturbance))
}

fn field_point(w: &ScalarField, game: &Game, x: &[f64], z: f64) -> Result<Vec<f64>> {
    let n = game.state_dim();
    let d = w.grid().dim();
    if x.len() != n || (d != n && d != n + 1) {
        return Err(Error::InvalidArgument(format!(
            "state of length {} does not fit a {d}-axis field for a {n}-state model",
            x.len()
        )));
    }
    let mut p = x.to_vec();
    if d == n + 1 {
        let a = w.grid().axis(n);
        p.push(z.clamp(a.min, a.max));
    }
    Ok(p)
}

fn clamp_time(w: &ScalarField, t: f64) -> f64 {
    t.clamp(w.times()[0], *w.times().last().unwrap())
}

/// Central-difference gradient of `w` at the point, one entry per field axis.
pub fn value_gradient(w: &ScalarField, game: &Game, t: f64, x: &[f64], z: f64) -> Result<Vec<f64>> {
    let mut p = field_point(w, game, x, z)?;
    let t = clamp_time(w, t);
    let h = w.grid().spacings().to_vec();
    let mut grad = vec![0.0; p.len()];
    for i in 0..p.len() {
        let c = p[i];
        p[i] = c + 0.5 * h[i];
        let up = w.interpolate(t, &p)?;
        p[i] = c - 0.5 * h[i];
        let down = w.interpolate(t, &p)?;
        p[i] = c;
        grad[i] = (up - down) / h[i];
    }
    Ok(grad)
}

/// Verification record for one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// First stamp inside the target and the soft set.
    pub reached_at: Option<f64>,
    /// The hard constraint held at every stamp up to `reached_at`.
    pub hard_ok: bool,
    /// Time spent outside the soft set up to `reached_at` (or the end).
    pub violation_time: f64,
    pub budget: f64,
    pub within_budget: bool,
}

impl Verdict {
    pub fn satisfied(&self) -> bool {
        self.reached_at.is_some() && self.hard_ok && self.within_budget
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    /// Slack on the signed distances when testing membership.
    pub spatial: f64,
    /// Slack on the violation time.
    pub budget: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { spatial: 0.0, budget: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub state_names: Vec<String>,
    pub control_names: Vec<String>,
    pub disturbance_names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Remaining budget `z` per stamp.
    pub budget: Vec<f64>,
    /// Inputs held over each interval, one fewer than the stamps.
    pub controls: Vec<Vec<f64>>,
    pub disturbances: Vec<Vec<f64>>,
    /// Why the rollout stopped before the horizon without reaching the target.
    pub diagnostic: Option<String>,
    pub verdict: Option<Verdict>,
}

impl Trajectory {
    /// `t,<states>,z,<controls>,<disturbances>`, one row per stamp; the
    /// final stamp has no inputs.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.state_names.iter().cloned());
        header.push("z".into());
        header.extend(self.control_names.iter().cloned());
        header.extend(self.disturbance_names.iter().cloned());
        w.write_record(&header)?;
        let inputs = self.control_names.len() + self.disturbance_names.len();
        for k in 0..self.times.len() {
            let mut row = vec![format!("{:?}", self.times[k])];
            row.extend(self.states[k].iter().map(|v| format!("{v:?}")));
            row.push(format!("{:?}", self.budget[k]));
            if k < self.controls.len() {
                row.extend(self.controls[k].iter().map(|v| format!("{v:?}")));
                row.extend(self.disturbances[k].iter().map(|v| format!("{v:?}")));
            } else {
                row.extend(std::iter::repeat(String::new()).take(inputs));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Budget rate of the exact augmented dynamics.
fn indicator(game: &Game, t: f64, x: &[f64]) -> f64 {
    if game.soft.sdf(t, x) > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn augmented_rate(game: &Game, t: f64, y: &[f64], a: &[f64], b: &[f64], out: &mut [f64]) -> Result<()> {
    let n = game.state_dim();
    game.model.flow_into(&y[..n], a, b, &mut out[..n])?;
    out[n] = -indicator(game, t, &y[..n]);
    Ok(())
}

fn rk4_step(game: &Game, t: f64, y: &[f64], dt: f64, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let m = y.len();
    let mut k = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    let mut stage = vec![0.0; m];
    augmented_rate(game, t, y, a, b, &mut k[0])?;
    for (s, c) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
        let (prev, rest) = k.split_at_mut(s);
        for i in 0..m {
            stage[i] = y[i] + c * dt * prev[s - 1][i];
        }
        augmented_rate(game, t + c * dt, &stage, a, b, &mut rest[0])?;
    }
    Ok((0..m)
        .map(|i| y[i] + dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
        .collect())
}

/// Whether the rollout may stop: target reached inside the soft set with
/// budget left.
fn freeze_met(game: &Game, t: f64, x: &[f64], z: f64) -> bool {
    game.soft.sdf(t, x).max(-z).max(game.target.sdf(t, x)) <= 0.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RolloutConfig {
    pub dt: f64,
    pub start_time: f64,
    /// Length of the simulated window.
    pub horizon: f64,
}

/// Simulates from `x0` with budget `q0` under the value-gradient policy,
/// 4-stage integration with inputs held per interval. Stops at the first
/// stamp satisfying the freeze condition or at the end of the window. A
/// state that leaves the field or breaks the dynamics truncates the
/// trajectory with a diagnostic. The attached verdict uses zero tolerance.
pub fn rollout(game: &Game, w: &ScalarField, x0: &[f64], q0: f64, cfg: &RolloutConfig) -> Result<Trajectory> {
    if !(cfg.dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {}", cfg.dt)));
    }
    if !(cfg.horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be >= 0, got {}", cfg.horizon)));
    }
    if !(q0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("budget must be >= 0, got {q0}")));
    }
    let n = game.state_dim();
    w.interpolate(clamp_time(w, cfg.start_time), &field_point(w, game, x0, q0)?)?;

    let mut traj = Trajectory {
        state_names: game.model.state_names(),
        control_names: game.model.control().names.clone(),
        disturbance_names: game.model.disturbance().names.clone(),
        times: vec![cfg.start_time],
        states: vec![x0.to_vec()],
        budget: vec![q0],
        controls: Vec::new(),
        disturbances: Vec::new(),
        diagnostic: None,
        verdict: None,
    };
    let end = cfg.start_time + cfg.horizon;
    let mut y: Vec<f64> = x0.iter().copied().chain([q0]).collect();
    let mut t = cfg.start_time;
    let mut k = 0usize;
    while !freeze_met(game, t, &y[..n], y[n]) {
        let remaining = end - t;
        if remaining <= 1e-12 * cfg.dt.max(end.abs()) {
            break;
        }
        let dt = cfg.dt.min(remaining);
        let (a, b) = match optimal_inputs(w, game, t, &y[..n], y[n]) {
            Ok(ab) => ab,
            Err(e) => {
                traj.diagnostic = Some(format!("stopped at t = {t}: {e}"));
                break;
            }
        };
        let next = match rk4_step(game, t, &y, dt, &a, &b) {
            Ok(v) => v,
            Err(e) => {
                traj.diagnostic = Some(format!("stopped at t = {t}: {e}"));
                break;
            }
        };
        k += 1;
        t = if dt == remaining { end } else { cfg.start_time + k as f64 * cfg.dt };
        y = next;
        traj.controls.push(a);
        traj.disturbances.push(b);
        traj.times.push(t);
        traj.states.push(y[..n].to_vec());
        traj.budget.push(y[n]);
    }
    traj.verdict = Some(verify(&traj, game, &Tolerance { spatial: 0.0, budget: 0.0 }));
    Ok(traj)
}

/// Cumulative time outside the soft set at each stamp, counting an interval
/// as violating when the soft-set distance at its midpoint is positive.
pub fn violation_profile(traj: &Trajectory, game: &Game) -> Vec<f64> {
    let mut acc = vec![0.0; traj.times.len()];
    for k in 1..traj.times.len() {
        let (t0, t1) = (traj.times[k - 1], traj.times[k]);
        let mid: Vec<f64> = traj.states[k - 1]
            .iter()
            .zip(&traj.states[k])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let bad = game.soft.sdf(0.5 * (t0 + t1), &mid) > 0.0;
        acc[k] = acc[k - 1] + if bad { t1 - t0 } else { 0.0 };
    }
    acc
}

/// Evaluates the reach, hard-constraint and budget clauses along `traj`.
pub fn verify(traj: &Trajectory, game: &Game, tol: &Tolerance) -> Verdict {
    let reached = (0..traj.times.len()).find(|&k| {
        let (t, x) = (traj.times[k], &traj.states[k]);
        game.target.sdf(t, x) <= tol.spatial && game.soft.sdf(t, x) <= tol.spatial
    });
    let last = reached.unwrap_or(traj.times.len().saturating_sub(1));
    let hard_ok = (0..=last).all(|k| game.hard.sdf(traj.times[k], &traj.states[k]) <= tol.spatial);
    let violation_time = violation_profile(traj, game).get(last).copied().unwrap_or(0.0);
    let budget = traj.budget.first().copied().unwrap_or(0.0);
    Verdict {
        reached_at: reached.map(|k| traj.times[k]),
        hard_ok,
        violation_time,
        budget,
        within_budget: violation_time <= budget + tol.budget,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ConstantDrift, SystemModel};
    use crate::geometry::ImplicitSet;
    use crate::grid::Grid;

    fn game() -> Game {
        Game {
            model: SystemModel::point_mass(),
            target: ImplicitSet::axis_box(vec![-1.0, 0.0], vec![0.0, 0.7]).unwrap(),
            hard: ImplicitSet::axis_box(vec![-15.0, 0.0], vec![15.0, 18.0]).unwrap(),
            soft: ImplicitSet::axis_box(vec![-10.0, 0.0], vec![10.0, 18.0]).unwrap(),
            horizon: 1.0,
        }
    }

    fn field(f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let g = Grid::new(&[(-20.0, 20.0, 41), (-5.0, 20.0, 26), (-0.1, 1.0, 12)]).unwrap();
        ScalarField::from_fn(g, 0.0, f)
    }

    fn path(times: Vec<f64>, states: Vec<Vec<f64>>, q: f64) -> Trajectory {
        let n = times.len();
        Trajectory {
            state_names: vec!["ydot".into(), "y".into()],
            control_names: vec!["u1".into()],
            disturbance_names: vec!["d_y".into()],
            budget: vec![q; n],
            controls: vec![vec![0.0]; n - 1],
            disturbances: vec![vec![0.0]; n - 1],
            times,
            states,
            diagnostic: None,
            verdict: None,
        }
    }

    #[test]
    fn inputs_follow_the_gradient_sign() {
        let g = game();
        let (a, b) = optimal_inputs(&field(|p| p[0]), &g, 0.0, &[1.0, 5.0], 0.3).unwrap();
        assert_eq!((a[0], b[0]), (-60.0, 10.0));
        let (a, b) = optimal_inputs(&field(|p| -p[0]), &g, 0.0, &[1.0, 5.0], 0.3).unwrap();
        assert_eq!((a[0], b[0]), (60.0, -10.0));
    }

    #[test]
    fn flat_gradient_picks_smallest_inputs() {
        let g = game();
        let (a, b) = optimal_inputs(&field(|p| p[1]), &g, 0.0, &[1.0, 5.0], 0.3).unwrap();
        assert_eq!((a[0], b[0]), (0.0, 0.0));
        let (a, b) = optimal_inputs(&field(|_| 0.7), &g, 0.0, &[1.0, 5.0], 0.3).unwrap();
        assert_eq!((a[0], b[0]), (0.0, 0.0));
    }

    #[test]
    fn out_of_domain_query_is_an_error() {
        let err = optimal_inputs(&field(|p| p[0]), &game(), 0.0, &[40.0, 5.0], 0.3).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain { .. }));
    }

    #[test]
    fn verify_examples() {
        let g = game();
        let still = path(vec![0.0, 0.1, 0.2], vec![vec![-0.5, 0.3]; 3], 0.0);
        let v = verify(&still, &g, &Tolerance::default());
        assert_eq!(v.reached_at, Some(0.0));
        assert!(v.hard_ok && v.within_budget && v.violation_time == 0.0);

        let escape = path(
            vec![0.0, 0.1, 0.2],
            vec![vec![-16.0, 5.0], vec![-5.0, 3.0], vec![-0.5, 0.3]],
            1.0,
        );
        let v = verify(&escape, &g, &Tolerance::default());
        assert_eq!(v.reached_at, Some(0.2));
        assert!(!v.hard_ok && !v.satisfied());
    }

    #[test]
    fn violation_integral_of_a_constructed_path() {
        let dt = 0.01;
        let times: Vec<f64> = (0..=60).map(|k| k as f64 * dt).collect();
        let states = times
            .iter()
            .map(|&t| if t > 0.1 + 1e-9 && t < 0.4 + 1e-9 { vec![-12.0, 5.0] } else { vec![-5.0, 5.0] })
            .collect();
        let v = verify(&path(times, states, 0.3), &game(), &Tolerance::default());
        assert!((v.violation_time - 0.3).abs() <= dt + 1e-12, "{}", v.violation_time);
        assert!(v.reached_at.is_none());
    }

    #[test]
    fn whole_domain_target_is_reached_immediately() {
        let everywhere = ImplicitSet::axis_box(vec![-100.0, -100.0], vec![100.0, 100.0]).unwrap();
        let g = Game { target: everywhere.clone(), soft: everywhere, ..game() };
        let cfg = RolloutConfig { dt: 1e-3, start_time: 0.0, horizon: 1.0 };
        let tr = rollout(&g, &field(|p| p[0]), &[3.0, 4.0], 1.0, &cfg).unwrap();
        assert_eq!(tr.times, vec![0.0]);
        assert_eq!(tr.verdict.unwrap().reached_at, Some(0.0));
    }

    #[test]
    fn zero_dynamics_are_stationary() {
        let everywhere = ImplicitSet::axis_box(vec![-100.0, -100.0], vec![100.0, 100.0]).unwrap();
        let g = Game {
            model: SystemModel::ConstantDrift(ConstantDrift { velocity: vec![0.0, 0.0] }),
            hard: everywhere.clone(),
            soft: everywhere,
            ..game()
        };
        let cfg = RolloutConfig { dt: 0.01, start_time: 0.0, horizon: 0.5 };
        let x0 = [3.25, 4.5];
        let tr = rollout(&g, &field(|p| p[0]), &x0, 0.4, &cfg).unwrap();
        assert_eq!(tr.times.len(), 51);
        assert!(tr.states.iter().all(|s| s == &x0));
        assert!(tr.budget.iter().all(|z| *z == 0.4));
        assert_eq!(*tr.times.last().unwrap(), 0.5);
    }

    #[test]
    fn budget_trace_matches_the_violation_integral() {
        // Descending from high speed: the policy brakes across the soft
        // limit, so the trace crosses the soft boundary.
        let g = game();
        let w = field(|p| p[0].abs() - 8.0 + p[1] * 0.1 - p[2]);
        let cfg = RolloutConfig { dt: 1e-3, start_time: 0.0, horizon: 1.0 };
        let tr = rollout(&g, &w, &[-12.0, 15.0], 0.6, &cfg).unwrap();
        let acc = violation_profile(&tr, &g);
        assert!(acc.last().unwrap() > &0.0);
        for k in 0..tr.times.len() {
            assert!((tr.budget[k] - (0.6 - acc[k])).abs() <= 2.0 * cfg.dt, "stamp {k}");
        }
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,ydot,y,z,u1,d_y\n"));
        assert_eq!(text.lines().count(), tr.times.len() + 1);
    }

    #[test]
    fn rollout_rejects_bad_arguments() {
        let cfg = RolloutConfig { dt: 0.0, start_time: 0.0, horizon: 1.0 };
        assert!(rollout(&game(), &field(|p| p[0]), &[0.0, 1.0], 0.1, &cfg).is_err());
    }
}
