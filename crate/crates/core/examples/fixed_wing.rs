//! Landing envelope of the longitudinal fixed-wing model.
//!
//! Prints the highest altitude from which each set still certifies a
//! landing. Extra budget lets the aircraft start higher by tolerating a
//! short stretch outside the airspeed window. Takes a couple of minutes.
//!
//! `cargo run --release --example fixed_wing`

use std::path::Path;

use softreach::geometry::{sublevel_mask, SetMask};
use softreach::scenario::Scenario;
use softreach::sets::{proxy_mask, BudgetSliceRequest};
use softreach::solver::{solve, Mode};

fn highest(mask: &SetMask) -> Option<f64> {
    let g = mask.grid();
    (0..g.len()).filter(|&i| mask.get(i)).map(|i| g.point(i)[0]).reduce(f64::max)
}

fn main() -> softreach::Result<()> {
    let scenario = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/fixedwing.scenario"))?;
    let game = scenario.game()?;
    let config = scenario.solve_config();

    let (v, report) = solve(&game, &scenario.grid(Mode::Classical, 1.0)?, Mode::Classical, &config)?;
    let classical = sublevel_mask(&v, 0, 0.0);
    println!("classical ({} steps): {} nodes, highest start {:?} m", report.steps, classical.count(), highest(&classical));

    let (w, report) = solve(&game, &scenario.grid(Mode::Soft, 1.0)?, Mode::Soft, &config)?;
    println!("soft ({} steps):", report.steps);
    for &q in scenario.budgets.iter().filter(|q| **q > 0.0) {
        let mask = proxy_mask(&w, &BudgetSliceRequest::new(q).eta(scenario.eta))?;
        println!("  Q = {q:>4} s: {} nodes, highest start {:?} m", mask.count(), highest(&mask));
    }
    Ok(())
}
