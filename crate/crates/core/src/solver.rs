//! Backward integration of the reach–avoid variational inequalities.
//!
//! Each step applies an explicit update of the Hamiltonian term, then the
//! target freeze (`min`) and the obstacle clamp (`max`), in that order so
//! the hard constraint wins ties. The Hamiltonian term is chosen by
//! [`Scheme`]: Lax–Friedrichs with global dissipation (the default, with a
//! first-order or ENO2 stencil) or an input-wise upwind discretization.
//!
//! Lax–Friedrichs adds viscosity proportional to the largest speed on each
//! axis, which smears sets that are only a few cells thick. The upwind
//! scheme takes, for each candidate input pair, the one-sided difference
//! its flow points along and then the min–max over pairs. Its ghosts
//! repeat the face value, so it is monotone at every node, faces included.
//! Budget and ε ordering then carry over exactly, and it only pays
//! viscosity in proportion to the actual speed.
//!
//! | mode      | grid     | freeze              | obstacle      |
//! |-----------|----------|---------------------|---------------|
//! | classical | `x`      | `g`                 | `max(c1, c2)` |
//! | soft      | `(x, z)` | `max(c2, -z, g)`    | `c1`          |
//!
//! The terminal value is `max(freeze, obstacle)` in both modes.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{speed_bounds, BudgetRate, SystemModel};
use crate::error::{Error, Result};
use crate::geometry::ImplicitSet;
use crate::grid::{eno2_one_sided, one_sided, one_sided_flat, Grid, ScalarField, MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Classical,
    Soft,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "classical" => Ok(Mode::Classical),
            "soft" => Ok(Mode::Soft),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

/// The game data: dynamics, target, hard and soft constraint sets, horizon.
#[derive(Clone, Debug)]
pub struct Game {
    pub model: SystemModel,
    pub target: ImplicitSet,
    pub hard: ImplicitSet,
    pub soft: ImplicitSet,
    pub horizon: f64,
}

impl Game {
    pub fn state_dim(&self) -> usize {
        self.model.state_dim()
    }

    /// Checks that `grid` has the state axes, plus a trailing budget axis in
    /// soft mode.
    pub fn check_grid(&self, grid: &Grid, mode: Mode) -> Result<()> {
        let n = self.state_dim();
        match mode {
            Mode::Classical if grid.dim() != n => Err(Error::InvalidArgument(format!(
                "classical solve needs {n} state axes, grid has {}",
                grid.dim()
            ))),
            Mode::Soft if grid.dim() != n + 1 => Err(Error::InvalidArgument(format!(
                "soft solve needs {n} state axes plus a budget axis, grid has {}",
                grid.dim()
            ))),
            _ => Ok(()),
        }
    }

    fn freeze_obstacle(&self, mode: Mode, t: f64, p: &[f64]) -> (f64, f64) {
        let x = &p[..self.state_dim()];
        let (c1, c2, g) = (self.hard.sdf(t, x), self.soft.sdf(t, x), self.target.sdf(t, x));
        match mode {
            Mode::Classical => (g, c1.max(c2)),
            Mode::Soft => (c2.max(-p[x.len()]).max(g), c1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub cfl: f64,
    /// Store every k-th step.
    pub store_stride: usize,
    /// Stop once a step changes no node by more than this; 0 disables.
    pub fixed_point_tol: f64,
    pub epsilon: f64,
    pub parallel: bool,
    pub scheme: Scheme,
}

/// Spatial stencil and matching time integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// First-order one-sided differences with forward Euler.
    #[default]
    First,
    /// Second-order ENO differences with two-stage TVD Runge–Kutta.
    Eno2,
    /// First-order upwinding per input pair: each candidate `(a, b)` takes
    /// the one-sided difference its own flow points along, then the
    /// min–max is taken over candidates. Zero-gradient ghosts at the faces.
    /// Monotone, with no added viscosity.
    Upwind,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scheme> {
        match s {
            "first" => Ok(Scheme::First),
            "eno2" => Ok(Scheme::Eno2),
            "upwind" => Ok(Scheme::Upwind),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}` (first|eno2|upwind)"))),
        }
    }
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            cfl: 0.5,
            store_stride: 1,
            fixed_point_tol: 0.0,
            epsilon: 1e-3,
            parallel: true,
            scheme: Scheme::First,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self, mode: Mode) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidArgument(format!("cfl {} outside (0, 1]", self.cfl)));
        }
        if self.store_stride == 0 {
            return Err(Error::InvalidArgument("store stride must be at least 1".into()));
        }
        if !(self.fixed_point_tol >= 0.0) {
            return Err(Error::InvalidArgument("fixed-point tolerance must be >= 0".into()));
        }
        if mode == Mode::Soft && !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub mode: Mode,
    pub steps: usize,
    pub dt: f64,
    pub final_time: f64,
    pub converged: bool,
    pub speed_bounds: Vec<f64>,
    /// Sup-norm change of each step.
    pub residuals: Vec<f64>,
    /// Kept out of the JSON so that reruns write identical reports.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Value at the horizon: `max(freeze, obstacle)` at every node.
pub fn terminal_condition(game: &Game, grid: &Grid, mode: Mode) -> Result<ScalarField> {
    game.check_grid(grid, mode)?;
    let t = game.horizon;
    Ok(ScalarField::from_fn(grid.clone(), t, |p| {
        let (f, o) = game.freeze_obstacle(mode, t, p);
        f.max(o)
    }))
}

/// Lax–Friedrichs numerical Hamiltonian
/// `H((D- + D+)/2) - sum_i alpha_i (D+_i - D-_i) / 2` at one node.
///
/// This is the monotone flux for an equation advanced forward in its time
/// variable. The backward value equation `V_t + H = 0` is advanced in
/// reversed time with Hamiltonian `-H`, so a backward step adds
/// `-dt * lf_numerical_hamiltonian(.., -H, ..)`.
pub fn lf_numerical_hamiltonian(
    d_minus: &[f64],
    d_plus: &[f64],
    h: impl Fn(&[f64]) -> f64,
    alphas: &[f64],
) -> f64 {
    let mean: Vec<f64> = d_minus.iter().zip(d_plus).map(|(m, p)| 0.5 * (m + p)).collect();
    let diss: f64 = alphas
        .iter()
        .zip(d_minus.iter().zip(d_plus))
        .map(|(a, (m, p))| a * (p - m))
        .sum();
    h(&mean) - 0.5 * diss
}

struct Masks {
    time: f64,
    freeze: Vec<f64>,
    obstacle: Vec<f64>,
    /// Budget drain rate per node (soft mode only).
    rate: Vec<f64>,
}

/// Reusable single-step integrator for one game, grid and mode.
pub struct Stepper<'a> {
    game: &'a Game,
    grid: &'a Grid,
    mode: Mode,
    parallel: bool,
    rate: BudgetRate,
    alphas: Vec<f64>,
    inv_dx: Vec<f64>,
    coords: Vec<Vec<f64>>,
    dt_limit: f64,
    time_varying: bool,
    masks: Masks,
    scheme: Scheme,
    stage: Vec<f64>,
    /// Upwind scheme only: the state flow for every candidate pair at every
    /// state node, laid out `[node][control][disturbance][axis]`.
    flows: Vec<f64>,
    pairs: (usize, usize),
}

impl<'a> Stepper<'a> {
    pub fn new(game: &'a Game, grid: &'a Grid, mode: Mode, config: &SolveConfig) -> Result<Stepper<'a>> {
        config.validate(mode)?;
        game.check_grid(grid, mode)?;
        let alphas = speed_bounds(&game.model, grid, mode == Mode::Soft)?;
        let inv_dx: Vec<f64> = grid.spacings().iter().map(|h| 1.0 / h).collect();
        let rate_sum: f64 = alphas.iter().zip(&inv_dx).map(|(a, i)| a * i).sum();
        let dt_limit = if rate_sum > 0.0 { config.cfl / rate_sum } else { f64::INFINITY };
        let coords = (0..grid.dim())
            .map(|i| (0..grid.axis(i).count).map(|k| grid.coord(i, k)).collect())
            .collect();
        let time_varying =
            game.target.is_time_varying() || game.hard.is_time_varying() || game.soft.is_time_varying();
        let mut stepper = Stepper {
            game,
            grid,
            mode,
            parallel: config.parallel,
            rate: match mode {
                Mode::Soft => BudgetRate::regularized(config.epsilon)?,
                Mode::Classical => BudgetRate::Exact,
            },
            alphas,
            inv_dx,
            coords,
            dt_limit,
            time_varying,
            masks: Masks { time: f64::NAN, freeze: Vec::new(), obstacle: Vec::new(), rate: Vec::new() },
            scheme: config.scheme,
            stage: Vec::new(),
            flows: Vec::new(),
            pairs: (0, 0),
        };
        if config.scheme == Scheme::Upwind {
            stepper.tabulate_flows()?;
        }
        stepper.refresh(game.horizon);
        Ok(stepper)
    }

    /// Tabulates the flow of each candidate input pair over the state nodes.
    /// The flow never depends on time or on the budget, and evaluating it
    /// once per pair and step would dominate the upwind update.
    fn tabulate_flows(&mut self) -> Result<()> {
        let model = &self.game.model;
        let controls = model.control().ordered_candidates();
        let disturbances = model.disturbance().ordered_candidates();
        let n = self.game.state_dim();
        let state_grid = match self.mode {
            Mode::Soft => self.grid.without_axis(n)?,
            Mode::Classical => self.grid.clone(),
        };
        let mut flows = vec![0.0; state_grid.len() * controls.len() * disturbances.len() * n];
        let mut x = vec![0.0; n];
        let mut chunks = flows.chunks_mut(n);
        for node in 0..state_grid.len() {
            state_grid.node_point(node, &mut x);
            for a in &controls {
                for b in &disturbances {
                    model.flow_into(&x, a, b, chunks.next().expect("sized above"))?;
                }
            }
        }
        self.flows = flows;
        self.pairs = (controls.len(), disturbances.len());
        Ok(())
    }

    /// Largest admissible time step.
    pub fn dt_limit(&self) -> f64 {
        self.dt_limit
    }

    pub fn speed_bounds(&self) -> &[f64] {
        &self.alphas
    }

    fn refresh(&mut self, t: f64) {
        if self.masks.time == t || (!self.time_varying && !self.masks.freeze.is_empty()) {
            return;
        }
        let g = self.grid;
        let n = self.game.state_dim();
        let mut p = vec![0.0; g.dim()];
        let len = g.len();
        let (mut freeze, mut obstacle) = (Vec::with_capacity(len), Vec::with_capacity(len));
        let mut rate = Vec::new();
        for idx in 0..len {
            g.node_point(idx, &mut p);
            let (f, o) = self.game.freeze_obstacle(self.mode, t, &p);
            freeze.push(f);
            obstacle.push(o);
            if self.mode == Mode::Soft {
                rate.push(self.rate.rate(self.game.soft.sdf(t, &p[..n])));
            }
        }
        self.masks = Masks { time: t, freeze, obstacle, rate };
    }

    /// Explicit Euler update `values + dt * L(values)` of the nodes
    /// `start..start + out.len()`, without the obstacle clamps.
    fn euler_range(&self, values: &[f64], dt: f64, start: usize, out: &mut [f64]) {
        let g = self.grid;
        let d = g.dim();
        let n = self.game.state_dim();
        let soft = self.mode == Mode::Soft;
        let strides = g.strides();
        let mut counts = [0usize; MAX_DIM];
        for (i, c) in counts.iter_mut().enumerate().take(d) {
            *c = g.axis(i).count;
        }
        let mut m = [0usize; MAX_DIM];
        g.multi_index(start, &mut m[..d]);
        let mut x = [0.0f64; MAX_DIM];
        let mut p = [0.0f64; MAX_DIM];
        let rate = &self.masks.rate;
        let mut dms = [0.0f64; MAX_DIM];
        let mut dps = [0.0f64; MAX_DIM];
        for (off, o) in out.iter_mut().enumerate() {
            let idx = start + off;
            for i in 0..d {
                x[i] = self.coords[i][m[i]];
                (dms[i], dps[i]) = match self.scheme {
                    Scheme::Eno2 => eno2_one_sided(values, idx, m[i], counts[i], strides[i], self.inv_dx[i]),
                    Scheme::Upwind => one_sided_flat(values, idx, m[i], counts[i], strides[i], self.inv_dx[i]),
                    Scheme::First => one_sided(values, idx, m[i], counts[i], strides[i], self.inv_dx[i]),
                };
            }
            let h = if self.scheme == Scheme::Upwind {
                let (na, nb) = self.pairs;
                let node = if soft { idx / counts[n] } else { idx };
                let table = &self.flows[node * na * nb * n..(node + 1) * na * nb * n];
                let mut best = f64::INFINITY;
                for per_control in table.chunks_exact(nb * n) {
                    let mut worst = f64::NEG_INFINITY;
                    for f in per_control.chunks_exact(n) {
                        let mut s = 0.0;
                        for i in 0..n {
                            s += if f[i] > 0.0 { f[i] * dps[i] } else { f[i] * dms[i] };
                        }
                        worst = worst.max(s);
                    }
                    best = best.min(worst);
                }
                // The budget only drains, so its difference is always the lower one.
                if soft {
                    best -= rate[idx] * dms[n];
                }
                best
            } else {
                let mut diss = 0.0;
                for i in 0..d {
                    p[i] = 0.5 * (dms[i] + dps[i]);
                    diss += self.alphas[i] * (dps[i] - dms[i]);
                }
                let mut h = self.game.model.hamiltonian(&x[..n], &p[..n]);
                if soft {
                    h -= p[n] * rate[idx];
                }
                h + 0.5 * diss
            };
            *o = values[idx] + dt * h;

            let mut ax = d - 1;
            loop {
                m[ax] += 1;
                if m[ax] < counts[ax] || ax == 0 {
                    break;
                }
                m[ax] = 0;
                ax -= 1;
            }
        }
    }

    fn euler(&self, values: &[f64], dt: f64, out: &mut [f64]) {
        let slab = self.grid.strides()[0];
        if self.parallel {
            out.par_chunks_mut(slab)
                .enumerate()
                .for_each(|(k, chunk)| self.euler_range(values, dt, k * slab, chunk));
        } else {
            out.chunks_mut(slab)
                .enumerate()
                .for_each(|(k, chunk)| self.euler_range(values, dt, k * slab, chunk));
        }
    }

    /// One backward step from time `t` to `t - dt`, writing into `out`.
    /// Returns the sup-norm change.
    pub fn step(&mut self, values: &[f64], t: f64, dt: f64, out: &mut [f64]) -> Result<f64> {
        if !(dt > 0.0) || dt > self.dt_limit * (1.0 + 1e-9) {
            return Err(Error::Cfl { dt, limit: self.dt_limit });
        }
        let len = self.grid.len();
        if values.len() != len || out.len() != len {
            return Err(Error::GridMismatch);
        }
        let t_new = t - dt;
        self.refresh(t_new);
        match self.scheme {
            Scheme::First | Scheme::Upwind => self.euler(values, dt, out),
            Scheme::Eno2 => {
                let mut stage = std::mem::take(&mut self.stage);
                stage.resize(len, 0.0);
                self.euler(values, dt, &mut stage);
                self.euler(&stage, dt, out);
                for (o, w) in out.iter_mut().zip(values) {
                    *o = 0.5 * (*o + w);
                }
                self.stage = stage;
            }
        }
        let Masks { freeze, obstacle, .. } = &self.masks;
        for ((o, f), b) in out.iter_mut().zip(freeze).zip(obstacle) {
            *o = o.min(*f).max(*b);
        }
        let mut residual: f64 = 0.0;
        for (idx, (u, w)) in out.iter().zip(values).enumerate() {
            if !u.is_finite() {
                return Err(Error::NonFinite { node: idx, point: self.grid.point(idx), value: *u, t: t_new });
            }
            residual = residual.max((u - w).abs());
        }
        Ok(residual)
    }
}

/// One backward step of a single-stamp field; the result is stamped `t - dt`.
pub fn vi_step_backward(
    game: &Game,
    mode: Mode,
    config: &SolveConfig,
    field: &ScalarField,
    dt: f64,
) -> Result<ScalarField> {
    let grid = field.grid();
    let t = *field.times().last().unwrap();
    let mut stepper = Stepper::new(game, grid, mode, config)?;
    let mut out = vec![0.0; grid.len()];
    stepper.step(field.last_slice(), t, dt, &mut out)?;
    ScalarField::single(grid.clone(), t - dt, out)
}

/// Integrates from the horizon down to `t = 0` with the largest uniform step
/// the CFL condition allows. Stamps are returned in ascending time and
/// always include `t = 0` and the horizon. When the fixed-point test stops
/// the march early, the converged slice is also stored at `t = 0`.
pub fn solve(game: &Game, grid: &Grid, mode: Mode, config: &SolveConfig) -> Result<(ScalarField, SolveReport)> {
    let clock = Instant::now();
    if !(game.horizon > 0.0 && game.horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", game.horizon)));
    }
    let mut stepper = Stepper::new(game, grid, mode, config)?;
    let horizon = game.horizon;
    let steps = ((horizon / stepper.dt_limit()) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let dt = horizon / steps as f64;

    let (_, _, mut slices) = terminal_condition(game, grid, mode)?.into_parts();
    let mut current = slices.pop().unwrap();
    let mut next = vec![0.0; grid.len()];
    let mut stored = vec![(horizon, current.clone())];
    let mut residuals = Vec::with_capacity(steps);
    let mut converged = false;
    let mut final_time = horizon;
    for k in 1..=steps {
        let t = horizon * (steps - k + 1) as f64 / steps as f64;
        let t_new = horizon * (steps - k) as f64 / steps as f64;
        let r = stepper.step(&current, t, dt, &mut next)?;
        std::mem::swap(&mut current, &mut next);
        residuals.push(r);
        final_time = t_new;
        converged = config.fixed_point_tol > 0.0 && r < config.fixed_point_tol;
        if k % config.store_stride == 0 || k == steps || converged {
            stored.push((t_new, current.clone()));
        }
        if converged {
            if t_new > 0.0 {
                stored.push((0.0, current.clone()));
            }
            break;
        }
    }
    stored.reverse();
    let (times, values) = stored.into_iter().unzip();
    let field = ScalarField::new(grid.clone(), times, values)?;
    let report = SolveReport {
        mode,
        steps: residuals.len(),
        dt,
        final_time,
        converged,
        speed_bounds: stepper.speed_bounds().to_vec(),
        residuals,
        wall_time_s: clock.elapsed().as_secs_f64(),
    };
    Ok((field, report))
}
