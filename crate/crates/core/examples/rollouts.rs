//! Closed-loop landings against the worst-case wind.
//!
//! Starts deep inside each soft set, follows the value-gradient controller
//! with the disturbance playing its best reply, and reports whether the
//! landing happened, the hard limits held and the time spent outside the
//! soft set stayed within the budget.
//!
//! `cargo run --release --example rollouts [-- <grid-scale>]`

use std::path::Path;

use softreach::scenario::Scenario;
use softreach::sets::{proxy_mask, BudgetSliceRequest};
use softreach::sim::{rollout, RolloutConfig};
use softreach::solver::{solve, Mode};

fn main() -> softreach::Result<()> {
    let scale: f64 = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse()).expect("grid scale");
    let scenario = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/pointmass.scenario"))?;
    let game = scenario.game()?;
    let (w, _) = solve(&game, &scenario.grid(Mode::Soft, scale)?, Mode::Soft, &scenario.solve_config())?;
    let cfg = RolloutConfig { dt: 1e-3 * scenario.horizon, start_time: 0.0, horizon: scenario.horizon };

    for &q in scenario.budgets.iter().filter(|q| **q > 0.0) {
        let inner = proxy_mask(&w, &BudgetSliceRequest::new(q).eta(scenario.eta))?.erode(2);
        let g = inner.grid();
        // Highest start: the one with the most room to go wrong.
        let Some(x0) = (0..g.len()).filter(|&i| inner.get(i)).map(|i| g.point(i)).reduce(|a, b| if b[1] > a[1] { b } else { a })
        else {
            println!("Q = {q}: no start two cells inside the set");
            continue;
        };
        let traj = rollout(&game, &w, &x0, q, &cfg)?;
        let v = traj.verdict.as_ref().expect("rollout attaches a verdict");
        println!(
            "Q = {q:<4} from ydot {:>6.2}, y {:>6.2}: landed at {}, hard limits {}, outside soft set {:.3} s, satisfied {}",
            x0[0],
            x0[1],
            v.reached_at.map_or("never".to_string(), |t| format!("t = {t:.3}")),
            if v.hard_ok { "held" } else { "broken" },
            v.violation_time,
            v.satisfied()
        );
    }
    Ok(())
}
