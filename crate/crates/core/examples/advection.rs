//! A slab carried along x at unit speed: the smallest check that the
//! schemes move a front at the right rate.
//!
//! `cargo run --release --example advection`

use softreach::dynamics::{ConstantDrift, SystemModel};
use softreach::geometry::ImplicitSet;
use softreach::grid::Grid;
use softreach::solver::{solve, Game, Mode, Scheme, SolveConfig};

fn main() -> softreach::Result<()> {
    let everywhere = ImplicitSet::axis_box(vec![-1e3, -1e3], vec![1e3, 1e3])?;
    let game = Game {
        model: SystemModel::ConstantDrift(ConstantDrift { velocity: vec![1.0, 0.0] }),
        target: ImplicitSet::axis_box(vec![-0.25, -10.0], vec![0.25, 10.0])?,
        hard: everywhere.clone(),
        soft: everywhere,
        horizon: 1.0,
    };
    let grid = Grid::new(&[(-2.0, 2.0, 201), (-1.0, 1.0, 5)])?;
    for scheme in [Scheme::First, Scheme::Upwind, Scheme::Eno2] {
        let (field, report) = solve(&game, &grid, Mode::Classical, &SolveConfig { scheme, ..SolveConfig::default() })?;
        // The reach set at t = 0 is [-1.25, 0.25]; locate its left edge.
        let row: Vec<f64> = (0..201).map(|i| field.slice(0)[i * 5 + 2]).collect();
        let i = row.iter().position(|v| *v <= 0.0).expect("nonempty set");
        let (a, b) = (grid.coord(0, i - 1), grid.coord(0, i));
        let edge = a + (b - a) * row[i - 1] / (row[i - 1] - row[i]);
        println!("{scheme:?}: {} steps, left edge {edge:.4} (exact -1.25)", report.steps);
    }
    Ok(())
}
