//! Minimum-budget map and budget bands for the point-mass scenario.
//!
//! Every state gets the smallest budget that still certifies it; the bands
//! `(T1, T2]` then split the state space by how much violation a landing
//! from there needs. The band built from the map is checked against the one
//! built from set differences.
//!
//! `cargo run --release --example qmin_bands [-- <grid-scale>]`

use std::path::Path;

use softreach::geometry::measure;
use softreach::scenario::Scenario;
use softreach::sets::{band_set, qmin};
use softreach::solver::{solve, Mode};

fn main() -> softreach::Result<()> {
    let scale: f64 = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse()).expect("grid scale");
    let scenario = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/pointmass.scenario"))?;
    let game = scenario.game()?;
    let grid = scenario.grid(Mode::Soft, scale)?;
    let (w, _) = solve(&game, &grid, Mode::Soft, &scenario.solve_config())?;

    let q = qmin(&w, 0.0, scenario.eta)?;
    let feasible = (0..q.grid.len()).filter(|&i| q.is_feasible(i)).count();
    println!("{feasible} of {} states have a finite minimum budget", q.grid.len());

    let mut edges = vec![0.0];
    edges.extend(scenario.budgets.iter().copied().filter(|b| *b > 0.0));
    for pair in edges.windows(2) {
        let band = band_set(&w, &q, pair[0], pair[1])?;
        println!(
            "band ({:>4}, {:>4}]: {:>5} nodes, area {:.2}, {} disagreements with the set difference",
            pair[0],
            pair[1],
            band.mask.count(),
            measure(&band.mask),
            band.disagreements
        );
    }
    Ok(())
}
