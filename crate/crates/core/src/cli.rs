//! Command-line frontend: scenario file in, field dumps, masks, contours,
//! CSV tables and SVG plots out.
//!
//! ```text
//! softreach solve    SCENARIO [--mode classical|soft] [--grid-scale S] [--epsilon E] [--out DIR]
//! softreach extract  FIELD [--q 0,0.3] [--eta E] [--contours] [--svg] [--plane I,J] [--fix I=V]
//! softreach qmin     FIELD [--t T] [--eta E] [--band T1,T2]...
//! softreach simulate SCENARIO FIELD --x0 X,Y --q0 Q [--dt DT] [--horizon T] [--svg]
//! softreach study    SCENARIO --study boundary-error --n 51,101 | --study eps-convergence --eps 10,5,1,0.5
//! ```
//!
//! Every field dump records the scenario it came from, so `extract` and
//! `qmin` find the boxes and axis names without being told again
//! (`--scenario` overrides). Exit codes: 0 success, 2 invalid input or
//! unreadable files, 3 numerical failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{load_field, save_field, FieldDump};
use crate::geometry::{
    boundary_error, extract_contour, measure, sublevel_mask, BoundaryErrorOptions, ContourExport, Polyline,
    SetMask, SliceSpec,
};
use crate::grid::{Grid, ScalarField};
use crate::scenario::Scenario;
use crate::sets::{band_set, epsilon_convergence_study, field_at, qmin, slice_budget, BudgetSliceRequest};
use crate::sim::{rollout, RolloutConfig};
use crate::solver::{solve, Mode};
use crate::svg::{Plot, PALETTE};

#[derive(Parser, Debug)]
#[command(name = "softreach", version, about = "Soft-constrained reach-avoid sets on Cartesian grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve a scenario and dump the value field with a JSON report.
    Solve(SolveArgs),
    /// Sets, contours and an SVG from a solved field.
    Extract(ExtractArgs),
    /// Minimum-budget field and budget bands from a soft field.
    Qmin(QminArgs),
    /// Closed-loop rollout under the value-gradient policy.
    Simulate(SimulateArgs),
    /// Resolution and regularization studies.
    Study(StudyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Classical,
    Soft,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Classical => Mode::Classical,
            ModeArg::Soft => Mode::Soft,
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct SolveArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "classical")]
    pub mode: ModeArg,
    /// Multiplies every axis's interval count.
    #[arg(long, default_value_t = 1.0)]
    pub grid_scale: f64,
    /// Overrides the scenario's regularization width.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Output directory; defaults to the scenario's `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct ExtractArgs {
    pub field: PathBuf,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Budgets to slice at; required for soft fields.
    #[arg(long = "q", value_delimiter = ',')]
    pub q: Vec<f64>,
    /// Proxy margin; defaults to the scenario's `eta`.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    /// Write the level curves as JSON.
    #[arg(long)]
    pub contours: bool,
    /// Write an SVG of the sets over the constraint boxes.
    #[arg(long)]
    pub svg: bool,
    /// State axes spanning the plotted plane.
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1])]
    pub plane: Vec<usize>,
    /// Pins a state axis off the plane, e.g. `--fix 2=-0.005`; unpinned
    /// axes sit at the centre of the target box.
    #[arg(long, value_parser = parse_fix)]
    pub fix: Vec<(usize, f64)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct QminArgs {
    pub field: PathBuf,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Budget band `(T1, T2]`; may be repeated.
    #[arg(long, value_parser = parse_band)]
    pub band: Vec<(f64, f64)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    pub field: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub q0: f64,
    /// Integration step; defaults to 1e-3 of the horizon.
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    /// Simulated window; defaults to the scenario horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub svg: bool,
    /// File stem for the outputs.
    #[arg(long, default_value = "trajectory")]
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StudyKind {
    BoundaryError,
    EpsConvergence,
}

#[derive(clap::Args, Debug)]
pub struct StudyArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub study: StudyKind,
    /// Nodes per state axis for the boundary-error sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [51usize, 101])]
    pub n: Vec<usize>,
    /// Strictly descending regularization widths.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 5.0, 1.0, 0.5])]
    pub eps: Vec<f64>,
    /// Budgets compared in the ε study; defaults to the positive scenario budgets.
    #[arg(long = "q", value_delimiter = ',')]
    pub q: Vec<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub grid_scale: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_fix(s: &str) -> std::result::Result<(usize, f64), String> {
    let (a, v) = s.split_once('=').ok_or("expected AXIS=VALUE")?;
    Ok((a.trim().parse().map_err(|_| format!("bad axis `{a}`"))?, v.trim().parse().map_err(|_| format!("bad value `{v}`"))?))
}

fn parse_band(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected T1,T2")?;
    Ok((a.trim().parse().map_err(|_| format!("bad bound `{a}`"))?, b.trim().parse().map_err(|_| format!("bad bound `{b}`"))?))
}

/// Parses `args` (program name first) and runs the command. Usage errors
/// print clap's message and map to exit code 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::Qmin(a) => cmd_qmin(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Study(a) => cmd_study(&a),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text)?;
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Compact label for a number in file names: `0.06` → `0.06`, `-1` → `m1`.
fn tag(x: f64) -> String {
    format!("{x}").replace('-', "m")
}

fn mask_field(mask: &SetMask, t: f64) -> ScalarField {
    mask.to_field(t)
}

fn out_dir(flag: &Option<PathBuf>, fallback: impl FnOnce() -> PathBuf) -> PathBuf {
    flag.clone().unwrap_or_else(fallback)
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let mode = Mode::from(a.mode);
    let game = scenario.game()?;
    let grid = scenario.grid(mode, a.grid_scale)?;
    let mut config = scenario.solve_config();
    if let Some(e) = a.epsilon {
        config.epsilon = e;
    }
    let (field, report) = solve(&game, &grid, mode, &config)?;
    let mode_name = match mode {
        Mode::Classical => "classical",
        Mode::Soft => "soft",
    };
    let dir = out_dir(&a.out, || scenario.output_dir.clone());
    let stem = dir.join(format!("{}_{mode_name}", scenario.name));
    let mut meta = vec![
        ("kind", "value".to_string()),
        ("mode", mode_name.to_string()),
        ("grid_scale", format!("{:?}", a.grid_scale)),
        ("epsilon", format!("{:?}", config.epsilon)),
    ];
    let source = fs::canonicalize(&a.scenario)?;
    let source = source.to_string_lossy();
    if !source.contains(char::is_whitespace) {
        meta.push(("scenario", source.into_owned()));
    }
    let field_path = stem.with_extension("srfield");
    save_field(&field_path, &field, &meta)?;
    write_json(&stem.with_extension("json"), &report)?;
    println!(
        "{mode_name} solve of {}: {} nodes, {} steps of {:.3e}, wrote {}",
        scenario.name,
        grid.len(),
        report.steps,
        report.dt,
        field_path.display()
    );
    Ok(())
}

/// The scenario named by `--scenario` or recorded in the dump.
fn scenario_for(dump: &FieldDump, flag: &Option<PathBuf>) -> Result<Scenario> {
    let path = match (flag, dump.meta("scenario")) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => {
            return Err(Error::InvalidArgument("the field does not name its scenario; pass --scenario".into()))
        }
    };
    Scenario::load(&path)
}

fn field_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "field".into(), |s| s.to_string_lossy().into_owned())
}

/// Whether `field` carries a budget axis on top of the scenario's states.
fn has_budget_axis(field: &ScalarField, scenario: &Scenario) -> Result<bool> {
    let n = scenario.axes.len();
    match field.grid().dim() {
        d if d == n => Ok(false),
        d if d == n + 1 => Ok(true),
        d => Err(Error::InvalidArgument(format!("{d}-axis field does not fit a {n}-state scenario"))),
    }
}

/// Plane and pinned coordinates for contouring a state-space field.
fn slice_spec(scenario: &Scenario, plane: &[usize], fix: &[(usize, f64)]) -> Result<SliceSpec> {
    let n = scenario.axes.len();
    if plane.len() != 2 || plane[0] == plane[1] || plane.iter().any(|&i| i >= n) {
        return Err(Error::InvalidArgument(format!("--plane needs two distinct state axes below {n}")));
    }
    let mut spec = SliceSpec::plane(plane[0], plane[1]);
    for i in (0..n).filter(|i| !plane.contains(i)) {
        let v = fix
            .iter()
            .find(|(a, _)| *a == i)
            .map_or_else(|| 0.5 * (scenario.target[i].0 + scenario.target[i].1), |(_, v)| *v);
        spec = spec.with_fixed(i, v);
    }
    Ok(spec)
}

fn base_plot(scenario: &Scenario, title: &str, spec: &SliceSpec) -> Plot {
    let [a, b] = spec.axes;
    let (xa, ya) = (&scenario.axes[a], &scenario.axes[b]);
    let mut plot = Plot::new(title, &xa.name, &ya.name, (xa.min, xa.max), (ya.min, ya.max));
    let corners = |bx: &[(f64, f64)]| ([bx[a].0, bx[b].0], [bx[a].1, bx[b].1]);
    let (lo, hi) = corners(&scenario.hard);
    plot.rect(lo, hi, "#bbbbbb", "#555555", "hard constraint");
    let (lo, hi) = corners(&scenario.soft);
    plot.rect(lo, hi, "#9ecae1", "#3182bd", "soft constraint");
    let (lo, hi) = corners(&scenario.target);
    plot.rect(lo, hi, "#74c476", "#238b45", "target");
    for (axis, v) in &spec.fixed {
        plot.note(&format!("{} = {v:.4}", scenario.axes[*axis].name));
    }
    plot
}

#[derive(Serialize)]
struct ExtractedSet {
    #[serde(rename = "Q")]
    q: Option<f64>,
    nodes: usize,
    measure: f64,
    empty: bool,
    mask: String,
    contours: Option<ContourExport>,
}

#[derive(Serialize)]
struct ExtractSummary {
    field: String,
    t: f64,
    eta: f64,
    sets: Vec<ExtractedSet>,
}

fn cmd_extract(a: &ExtractArgs) -> Result<()> {
    let dump = load_field(&a.field)?;
    let scenario = scenario_for(&dump, &a.scenario)?;
    let field = &dump.field;
    let soft = has_budget_axis(field, &scenario)?;
    let eta = a.eta.unwrap_or(scenario.eta);
    let stem = field_stem(&a.field);
    let dir = out_dir(&a.out, || a.field.parent().map_or_else(PathBuf::new, Path::to_path_buf));
    let spec = slice_spec(&scenario, &a.plane, &a.fix)?;

    // (label, budget, state-space field whose zero sublevel set is the set)
    let mut layers: Vec<(String, Option<f64>, ScalarField)> = Vec::new();
    if soft {
        if a.q.is_empty() {
            return Err(Error::InvalidArgument("a soft field needs --q".into()));
        }
        for &q in &a.q {
            let req = BudgetSliceRequest::new(q).eta(eta).at(a.t);
            layers.push((format!("Q = {q}"), Some(q), slice_budget(field, &req)?));
        }
    } else {
        if !a.q.is_empty() {
            return Err(Error::InvalidArgument("--q needs a field with a budget axis".into()));
        }
        layers.push(("reach-avoid set".into(), None, field_at(field, a.t)?));
    }

    let mut plot = base_plot(&scenario, &format!("{} at t = {}", scenario.name, a.t), &spec);
    let mut sets = Vec::new();
    for (k, (label, q, state_field)) in layers.iter().enumerate() {
        let mask = sublevel_mask(state_field, 0, 0.0);
        let mask_path = dir.join(match q {
            Some(q) => format!("{stem}_Q{}.mask.srfield", tag(*q)),
            None => format!("{stem}.mask.srfield"),
        });
        let mut meta = vec![("kind", "mask".to_string()), ("eta", format!("{eta:?}"))];
        if let Some(q) = q {
            meta.push(("Q", format!("{q:?}")));
        }
        save_field(&mask_path, &mask_field(&mask, a.t), &meta)?;
        let lines = if mask.is_empty() { Vec::new() } else { extract_contour(state_field, 0, 0.0, &spec)? };
        if lines.is_empty() {
            plot.note(&format!("{label}: empty"));
        } else {
            plot.lines(&lines, PALETTE[k % PALETTE.len()], label);
        }
        let contours = a.contours.then(|| {
            let mut export = ContourExport::new(0.0);
            let fixed: BTreeMap<String, f64> =
                spec.fixed.iter().map(|(i, v)| (scenario.axes[*i].name.clone(), *v)).collect();
            export.push(fixed, &lines);
            export
        });
        println!("{label}: {} nodes, measure {:.6}", mask.count(), measure(&mask));
        sets.push(ExtractedSet {
            q: *q,
            nodes: mask.count(),
            measure: measure(&mask),
            empty: mask.is_empty(),
            mask: mask_path.file_name().unwrap().to_string_lossy().into_owned(),
            contours,
        });
    }
    let summary = ExtractSummary { field: a.field.display().to_string(), t: a.t, eta, sets };
    write_json(&dir.join(format!("{stem}_sets.json")), &summary)?;
    if a.svg {
        let path = dir.join(format!("{stem}_sets.svg"));
        write_text(&path, &plot.render())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct BandReport {
    t1: f64,
    t2: f64,
    nodes: usize,
    disagreements: usize,
    mask: String,
}

fn cmd_qmin(a: &QminArgs) -> Result<()> {
    let dump = load_field(&a.field)?;
    let scenario = scenario_for(&dump, &a.scenario)?;
    if !has_budget_axis(&dump.field, &scenario)? {
        return Err(Error::InvalidArgument("qmin needs a field with a budget axis".into()));
    }
    let eta = a.eta.unwrap_or(scenario.eta);
    let stem = field_stem(&a.field);
    let dir = out_dir(&a.out, || a.field.parent().map_or_else(PathBuf::new, Path::to_path_buf));
    let q = qmin(&dump.field, a.t, eta)?;
    let bands = a
        .band
        .iter()
        .map(|&(t1, t2)| band_set(&dump.field, &q, t1, t2).map(|b| (t1, t2, b)))
        .collect::<Result<Vec<_>>>()?;

    save_field(
        &dir.join(format!("{stem}_qmin.srfield")),
        &q.to_field(),
        &[("kind", "qmin".into()), ("sentinel", format!("{:?}", q.sentinel)), ("eta", format!("{eta:?}"))],
    )?;
    let mut w = csv::Writer::from_path({
        let p = dir.join(format!("{stem}_qmin.csv"));
        ensure_parent(&p)?;
        p
    })?;
    let mut header: Vec<String> = scenario.axes.iter().map(|x| x.name.clone()).collect();
    header.push("qmin".into());
    w.write_record(&header)?;
    let mut p = vec![0.0; q.grid.dim()];
    for idx in 0..q.grid.len() {
        q.grid.node_point(idx, &mut p);
        let mut row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        row.push(if q.is_feasible(idx) { format!("{:?}", q.values[idx]) } else { "inf".into() });
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut reports = Vec::new();
    for (t1, t2, band) in bands {
        let name = format!("{stem}_band_{}_{}.mask.srfield", tag(t1), tag(t2));
        save_field(
            &dir.join(&name),
            &mask_field(&band.mask, a.t),
            &[("kind", "band".into()), ("t1", format!("{t1:?}")), ("t2", format!("{t2:?}"))],
        )?;
        println!("band ({t1}, {t2}]: {} nodes, {} disagreements", band.mask.count(), band.disagreements);
        reports.push(BandReport { t1, t2, nodes: band.mask.count(), disagreements: band.disagreements, mask: name });
    }
    let feasible = (0..q.grid.len()).filter(|&i| q.is_feasible(i)).count();
    println!("qmin: {feasible} of {} nodes feasible within the budget axis", q.grid.len());
    write_json(&dir.join(format!("{stem}_bands.json")), &reports)?;
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let game = scenario.game()?;
    let dump = load_field(&a.field)?;
    has_budget_axis(&dump.field, &scenario)?;
    let dt = a.dt.unwrap_or(1e-3 * scenario.horizon);
    let cfg = RolloutConfig { dt, start_time: 0.0, horizon: a.horizon.unwrap_or(scenario.horizon) };
    let traj = rollout(&game, &dump.field, &a.x0, a.q0, &cfg)?;
    let dir = out_dir(&a.out, || scenario.output_dir.clone());
    let csv_path = dir.join(format!("{}.csv", a.name));
    ensure_parent(&csv_path)?;
    traj.write_csv(fs::File::create(&csv_path)?)?;
    let verdict = traj.verdict.clone().expect("rollout attaches a verdict");
    write_json(&dir.join(format!("{}.verdict.json", a.name)), &verdict)?;
    if let Some(d) = &traj.diagnostic {
        println!("note: {d}");
    }
    println!(
        "{}: reached {:?}, hard_ok {}, violation {:.4} of budget {} -> {}",
        a.name,
        verdict.reached_at,
        verdict.hard_ok,
        verdict.violation_time,
        verdict.budget,
        if verdict.satisfied() { "satisfied" } else { "not satisfied" }
    );
    if a.svg {
        let spec = slice_spec(&scenario, &[0, 1], &[])?;
        let mut plot = base_plot(&scenario, &format!("{} rollout, Q0 = {}", scenario.name, a.q0), &spec);
        let path = Polyline { points: traj.states.iter().map(|x| [x[0], x[1]]).collect(), closed: false };
        plot.lines(&[path], PALETTE[1], "trajectory");
        plot.note(&format!("budget left {:.3}", traj.budget.last().copied().unwrap_or(a.q0)));
        let svg = dir.join(format!("{}.svg", a.name));
        write_text(&svg, &plot.render())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundaryRow {
    n: usize,
    h: f64,
    mean: f64,
    max: f64,
}

/// Grid for a boundary-error run with `n` nodes on each state axis.
fn grid_with_nodes(scenario: &Scenario, mode: Mode, n: usize) -> Result<Grid> {
    let mut s = scenario.clone();
    for axis in &mut s.axes {
        axis.count = n;
    }
    s.grid(mode, 1.0)
}

/// Normalized units: every state axis rescaled to unit length.
pub fn normalized_scale(scenario: &Scenario) -> [f64; 2] {
    let span = |i: usize| scenario.axes[i].max - scenario.axes[i].min;
    [1.0 / span(0), 1.0 / span(1)]
}

fn cmd_study(a: &StudyArgs) -> Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let game = scenario.game()?;
    let config = scenario.solve_config();
    let eta = a.eta.unwrap_or(scenario.eta);
    let dir = out_dir(&a.out, || scenario.output_dir.clone());
    match a.study {
        StudyKind::BoundaryError => {
            if scenario.axes.len() != 2 {
                return Err(Error::InvalidArgument("the boundary-error study compares planar sets".into()));
            }
            let opts = BoundaryErrorOptions { axis_scale: normalized_scale(&scenario), ..Default::default() };
            let mut rows = Vec::new();
            for &n in &a.n {
                if n < 3 {
                    return Err(Error::InvalidArgument(format!("need at least 3 nodes per axis, got {n}")));
                }
                let (v, _) = solve(&game, &grid_with_nodes(&scenario, Mode::Classical, n)?, Mode::Classical, &config)?;
                let (w, _) = solve(&game, &grid_with_nodes(&scenario, Mode::Soft, n)?, Mode::Soft, &config)?;
                let ra0 = slice_budget(&w, &BudgetSliceRequest::new(0.0).eta(0.0))?;
                let err = boundary_error(&field_at(&v, 0.0)?, &ra0, &opts)?;
                let h = std::f64::consts::SQRT_2 / (n - 1) as f64;
                println!("N = {n}: h {h:.5}, mean {:.5}, max {:.5}", err.mean, err.max);
                rows.push(BoundaryRow { n, h, mean: err.mean, max: err.max });
            }
            let path = dir.join(format!("{}_boundary_error.csv", scenario.name));
            ensure_parent(&path)?;
            let mut w = csv::Writer::from_path(&path)?;
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        StudyKind::EpsConvergence => {
            let grid = scenario.grid(Mode::Soft, a.grid_scale)?;
            let qs: Vec<f64> = if a.q.is_empty() {
                scenario.budgets.iter().copied().filter(|q| *q > 0.0).collect()
            } else {
                a.q.clone()
            };
            let study = epsilon_convergence_study(&game, &grid, &config, &a.eps, &qs, eta)?;
            for r in &study.rows {
                println!(
                    "eps {} -> {}, Q = {}: sym diff {:.6}, measure {:.6}",
                    r.epsilon_hi, r.epsilon_lo, r.q, r.sym_diff_measure, r.set_measure_lo
                );
            }
            let path = dir.join(format!("{}_eps_convergence.csv", scenario.name));
            ensure_parent(&path)?;
            study.write_csv(fs::File::create(&path)?)?;
        }
    }
    Ok(())
}
