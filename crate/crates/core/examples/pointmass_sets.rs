//! Solves the bundled point-mass landing scenario in both modes and prints
//! the size of each soft-constrained set next to the classical one.
//!
//! `cargo run --release --example pointmass_sets [-- <grid-scale>]`

use std::path::Path;
use std::time::Instant;

use softreach::geometry::{boundary_error, measure, sublevel_mask, BoundaryErrorOptions};
use softreach::scenario::Scenario;
use softreach::sets::{proxy_mask, slice_budget, BudgetSliceRequest};
use softreach::solver::{solve, Mode};

fn main() -> softreach::Result<()> {
    let scale: f64 = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse()).expect("grid scale");
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/pointmass.scenario");
    let scenario = Scenario::load(&path)?;
    let game = scenario.game()?;
    let config = scenario.solve_config();

    let grid = scenario.grid(Mode::Classical, scale)?;
    let clock = Instant::now();
    let (v, report) = solve(&game, &grid, Mode::Classical, &config)?;
    println!("classical: {} steps, dt {:.2e}, {:.1}s", report.steps, report.dt, clock.elapsed().as_secs_f64());
    let classical = sublevel_mask(&v, 0, 0.0);
    println!("  area {:.3} ({} nodes)", measure(&classical), classical.count());

    let grid = scenario.grid(Mode::Soft, scale)?;
    let clock = Instant::now();
    let (w, report) = solve(&game, &grid, Mode::Soft, &config)?;
    println!("soft: {} steps, dt {:.2e}, {:.1}s", report.steps, report.dt, clock.elapsed().as_secs_f64());
    for &q in &scenario.budgets {
        let mask = proxy_mask(&w, &BudgetSliceRequest::new(q).eta(scenario.eta))?;
        println!("  Q = {q:<5} area {:.3} ({} nodes)", measure(&mask), mask.count());
    }
    let ra0 = slice_budget(&w, &BudgetSliceRequest::new(0.0).eta(0.0))?;
    let opts = BoundaryErrorOptions { axis_scale: [1.0 / 40.0, 1.0 / 25.0], ..Default::default() };
    let err = boundary_error(&v.at_stamp(0), &ra0, &opts)?;
    println!("  classical boundary vs. the zero-budget slice: mean {:.4}, max {:.4} (normalized units)", err.mean, err.max);
    Ok(())
}
