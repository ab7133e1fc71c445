//! Refines the point-mass grid and measures how far the zero-budget slice
//! of the soft value sits from the classical boundary, in units where both
//! state axes have length one.
//!
//! `cargo run --release --example boundary_error [-- 41 61 81]`

use std::path::Path;

use softreach::cli::normalized_scale;
use softreach::geometry::{boundary_error, BoundaryErrorOptions};
use softreach::scenario::Scenario;
use softreach::sets::{field_at, slice_budget, BudgetSliceRequest};
use softreach::solver::{solve, Mode};

fn main() -> softreach::Result<()> {
    let mut sizes: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().expect("node count")).collect();
    if sizes.is_empty() {
        sizes = vec![41, 61, 81];
    }
    let base = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/pointmass.scenario"))?;
    let game = base.game()?;
    let opts = BoundaryErrorOptions { axis_scale: normalized_scale(&base), ..Default::default() };
    println!("{:>5} {:>8} {:>8} {:>8}", "n", "h", "mean", "max");
    for n in sizes {
        let mut s = base.clone();
        s.axes.iter_mut().for_each(|a| a.count = n);
        let (v, _) = solve(&game, &s.grid(Mode::Classical, 1.0)?, Mode::Classical, &s.solve_config())?;
        let (w, _) = solve(&game, &s.grid(Mode::Soft, 1.0)?, Mode::Soft, &s.solve_config())?;
        let slice = slice_budget(&w, &BudgetSliceRequest::new(0.0).eta(0.0))?;
        let h = std::f64::consts::SQRT_2 / (n - 1) as f64;
        match boundary_error(&field_at(&v, 0.0)?, &slice, &opts) {
            Ok(e) => println!("{n:>5} {h:>8.4} {:>8.4} {:>8.4}", e.mean, e.max),
            Err(e) => println!("{n:>5} {h:>8.4} {e}"),
        }
    }
    Ok(())
}
