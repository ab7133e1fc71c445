//! Shrinks the regularization width of the budget rate and watches the
//! proxy sets settle.
//!
//! `cargo run --release --example epsilon_study [-- <grid-scale>]`

use std::path::Path;

use softreach::scenario::Scenario;
use softreach::sets::epsilon_convergence_study;
use softreach::solver::Mode;

fn main() -> softreach::Result<()> {
    let scale: f64 = std::env::args().nth(1).map_or(Ok(0.5), |s| s.parse()).expect("grid scale");
    let scenario = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/pointmass.scenario"))?;
    let game = scenario.game()?;
    let grid = scenario.grid(Mode::Soft, scale)?;
    let eps = [10.0, 5.0, 1.0, 0.5];
    let qs = [0.06, 0.3, 0.6];
    let study = epsilon_convergence_study(&game, &grid, &scenario.solve_config(), &eps, &qs, scenario.eta)?;
    println!("cell area {:.3}", grid.without_axis(2)?.cell_volume());
    study.write_csv(std::io::stdout())
}
