//! Scenario files: flat `key = value` text.
//!
//! ```text
//! # comment
//! name = pointmass
//! model = point-mass                 # point-mass | fixed-wing | constant-drift
//! model.gravity = 9.8
//! control.u1 = interval -60 60       # interval LO HI | samples V.. | linspace LO HI N
//! disturbance.d_y = interval -10 10
//! horizon = 1
//! target = box -1 0 0 0.7            # LO HI pair per state axis
//! hard = box -15 15 0 18
//! soft = box -10 10 0 18
//! grid.axis0 = ydot -20 20 101       # NAME MIN MAX COUNT, one per state axis
//! grid.axis1 = y -5 20 101
//! grid.budget = -0.1 1 56            # MIN MAX COUNT; needed for soft solves
//! epsilon = 0.001
//! budgets = 0 0.06 0.3 0.6
//! eta = 0.001
//! solver.cfl = 0.5
//! solver.store_stride = 10
//! solver.fixed_point_tol = 0
//! solver.scheme = upwind             # first | eno2 | upwind
//! sdf.weights = 1 1                  # per-axis distance weights for the boxes
//! output.dir = out/pointmass
//! ```
//!
//! Fixed-wing files add `model.mass`, `model.rho`, `model.wing_area` and
//! `model.aero`, either `polar CL0 CL_ALPHA CD0 K` (`C_L = CL0 + CL_ALPHA a`,
//! `C_D = CD0 + K C_L^2`) or `csv PATH` relative to the scenario file.
//! Constant-drift files give `model.velocity = V0 V1 ..`. Any number may
//! carry a `deg` suffix and is then converted to radians.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dynamics::{linspace, AeroTable, DEFAULT_ALPHA_SAMPLES, ConstantDrift, ControlSpec, FixedWing, InputChannel, PointMass, SystemModel};
use crate::error::{Error, Result};
use crate::geometry::ImplicitSet;
use crate::grid::{Axis, Grid};
use crate::solver::{Game, Mode, Scheme, SolveConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum AeroSource {
    Polar { cl0: f64, cl_alpha: f64, cd0: f64, k: f64 },
    Csv(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelConfig {
    PointMass { gravity: f64 },
    FixedWing { mass: f64, gravity: f64, rho: f64, wing_area: f64, aero: AeroSource },
    ConstantDrift { velocity: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxisSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub model: ModelConfig,
    pub control: Vec<(String, InputChannel)>,
    pub disturbance: Vec<(String, InputChannel)>,
    pub horizon: f64,
    /// `(lo, hi)` per state axis.
    pub target: Vec<(f64, f64)>,
    pub hard: Vec<(f64, f64)>,
    pub soft: Vec<(f64, f64)>,
    pub axes: Vec<AxisSpec>,
    pub budget_axis: Option<(f64, f64, usize)>,
    pub epsilon: f64,
    pub budgets: Vec<f64>,
    pub eta: f64,
    /// Per-axis weights on box distances; the sets themselves do not change.
    pub sdf_weights: Vec<f64>,
    pub cfl: f64,
    pub store_stride: usize,
    pub fixed_point_tol: f64,
    pub scheme: Scheme,
    pub output_dir: PathBuf,
    /// File the scenario was read from; relative paths resolve against it.
    pub source: PathBuf,
}

struct Lines {
    path: PathBuf,
    entries: HashMap<String, (usize, String)>,
    order: Vec<String>,
}

impl Lines {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Scenario { path: self.path.clone(), line, message: message.into() }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.0)
    }

    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &str)> {
        self.get(key).ok_or_else(|| self.err(0, format!("missing key `{key}`")))
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some((line, v)) => {
                let xs = self.numbers_in(line, v)?;
                if xs.len() != 1 {
                    return Err(self.err(line, format!("`{key}` takes one number")));
                }
                Ok(Some(xs[0]))
            }
        }
    }

    fn numbers_in(&self, line: usize, text: &str) -> Result<Vec<f64>> {
        text.split_whitespace().map(|tok| parse_number(tok).ok_or_else(|| self.err(line, format!("bad number `{tok}`")))).collect()
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    let v = match tok.strip_suffix("deg") {
        Some(d) => d.parse::<f64>().ok()?.to_radians(),
        None => tok.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

fn split_lines(text: &str, path: &Path) -> Result<Lines> {
    let mut lines = Lines { path: path.to_path_buf(), entries: HashMap::new(), order: Vec::new() };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| lines.err(line, format!("expected `key = value`, got `{content}`")))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() {
            return Err(lines.err(line, "empty key"));
        }
        if lines.entries.contains_key(&k) {
            return Err(lines.err(line, format!("duplicate key `{k}`")));
        }
        lines.order.push(k.clone());
        lines.entries.insert(k, (line, v));
    }
    Ok(lines)
}

fn parse_channel(lines: &Lines, line: usize, v: &str) -> Result<InputChannel> {
    let (kind, rest) = v.split_once(char::is_whitespace).unwrap_or((v, ""));
    let xs = lines.numbers_in(line, rest)?;
    let ch = match kind {
        "interval" if xs.len() == 2 => InputChannel::Interval { lo: xs[0], hi: xs[1] },
        "samples" => InputChannel::Samples(xs),
        "linspace" if xs.len() == 3 && xs[2] >= 1.0 && xs[2].fract() == 0.0 => {
            let n = xs[2] as usize;
            InputChannel::Samples(
                (0..n)
                    .map(|k| if n == 1 { xs[0] } else { xs[0] + (xs[1] - xs[0]) * k as f64 / (n - 1) as f64 })
                    .collect(),
            )
        }
        _ => return Err(lines.err(line, format!("expected `interval LO HI`, `samples ..` or `linspace LO HI N`, got `{v}`"))),
    };
    ch.validate().map_err(|e| lines.err(line, e.to_string()))?;
    Ok(ch)
}

fn parse_box(lines: &Lines, key: &str, dim: usize) -> Result<Vec<(f64, f64)>> {
    let (line, v) = lines.require(key)?;
    let rest = v
        .strip_prefix("box")
        .ok_or_else(|| lines.err(line, format!("`{key}` must be `box LO HI ..`")))?;
    let xs = lines.numbers_in(line, rest)?;
    if xs.len() != 2 * dim {
        return Err(lines.err(line, format!("`{key}` needs {dim} LO HI pairs, got {} numbers", xs.len())));
    }
    let pairs: Vec<(f64, f64)> = xs.chunks(2).map(|c| (c[0], c[1])).collect();
    if pairs.iter().any(|(lo, hi)| lo > hi) {
        return Err(lines.err(line, format!("`{key}` has LO > HI")));
    }
    Ok(pairs)
}

const KNOWN: &[&str] = &[
    "name",
    "model",
    "model.gravity",
    "model.mass",
    "model.rho",
    "model.wing_area",
    "model.aero",
    "model.velocity",
    "horizon",
    "target",
    "hard",
    "soft",
    "grid.budget",
    "epsilon",
    "budgets",
    "eta",
    "solver.cfl",
    "solver.store_stride",
    "solver.fixed_point_tol",
    "solver.scheme",
    "sdf.weights",
    "output.dir",
];

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path)?;
        Scenario::parse(&text, path)
    }

    /// Parses and validates `text`; `path` labels errors and anchors
    /// relative paths.
    pub fn parse(text: &str, path: &Path) -> Result<Scenario> {
        let lines = split_lines(text, path)?;
        for key in &lines.order {
            let ok = KNOWN.contains(&key.as_str())
                || key.starts_with("control.")
                || key.starts_with("disturbance.")
                || key.strip_prefix("grid.axis").is_some_and(|d| d.parse::<usize>().is_ok());
            if !ok {
                return Err(lines.err(lines.line_of(key), format!("unknown key `{key}`")));
            }
        }
        let (mline, mname) = lines.require("model")?;
        let num = |k: &str, default: f64| -> Result<f64> { Ok(lines.number(k)?.unwrap_or(default)) };
        let model = match mname {
            "point-mass" => ModelConfig::PointMass { gravity: num("model.gravity", 9.8)? },
            "fixed-wing" => {
                let (aline, aero) = lines.require("model.aero")?;
                let (kind, rest) = aero.split_once(char::is_whitespace).unwrap_or((aero, ""));
                let aero = match kind {
                    "polar" => {
                        let xs = lines.numbers_in(aline, rest)?;
                        if xs.len() != 4 {
                            return Err(lines.err(aline, "`polar` takes CL0 CL_ALPHA CD0 K"));
                        }
                        AeroSource::Polar { cl0: xs[0], cl_alpha: xs[1], cd0: xs[2], k: xs[3] }
                    }
                    "csv" if !rest.trim().is_empty() => AeroSource::Csv(PathBuf::from(rest.trim())),
                    _ => return Err(lines.err(aline, "`model.aero` must be `polar ..` or `csv PATH`")),
                };
                ModelConfig::FixedWing {
                    mass: num("model.mass", 60_000.0)?,
                    gravity: num("model.gravity", 9.8)?,
                    rho: num("model.rho", 1.225)?,
                    wing_area: num("model.wing_area", 112.0)?,
                    aero,
                }
            }
            "constant-drift" => {
                let (line, v) = lines.require("model.velocity")?;
                ModelConfig::ConstantDrift { velocity: lines.numbers_in(line, v)? }
            }
            other => return Err(lines.err(mline, format!("unknown model `{other}`"))),
        };
        let mut control = Vec::new();
        let mut disturbance = Vec::new();
        for key in &lines.order {
            let (line, v) = lines.get(key).unwrap();
            if let Some(name) = key.strip_prefix("control.") {
                control.push((name.to_string(), parse_channel(&lines, line, v)?));
            } else if let Some(name) = key.strip_prefix("disturbance.") {
                disturbance.push((name.to_string(), parse_channel(&lines, line, v)?));
            }
        }

        let dim = match &model {
            ModelConfig::PointMass { .. } => 2,
            ModelConfig::FixedWing { .. } => 3,
            ModelConfig::ConstantDrift { velocity } => velocity.len(),
        };
        let mut axes = Vec::new();
        for i in 0..dim {
            let key = format!("grid.axis{i}");
            let (line, v) = lines.require(&key)?;
            let toks: Vec<&str> = v.split_whitespace().collect();
            if toks.len() != 4 {
                return Err(lines.err(line, format!("`{key}` must be `NAME MIN MAX COUNT`")));
            }
            let xs = lines.numbers_in(line, &toks[1..3].join(" "))?;
            let count = toks[3]
                .parse::<usize>()
                .map_err(|_| lines.err(line, format!("bad node count `{}`", toks[3])))?;
            axes.push(AxisSpec { name: toks[0].to_string(), min: xs[0], max: xs[1], count });
        }
        if let Some(extra) = lines
            .order
            .iter()
            .find(|k| k.strip_prefix("grid.axis").and_then(|d| d.parse::<usize>().ok()).is_some_and(|d| d >= dim))
        {
            return Err(lines.err(lines.line_of(extra), format!("`{extra}` beyond the {dim} state axes")));
        }
        let budget_axis = match lines.get("grid.budget") {
            None => None,
            Some((line, v)) => {
                let toks: Vec<&str> = v.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(lines.err(line, "`grid.budget` must be `MIN MAX COUNT`"));
                }
                let xs = lines.numbers_in(line, &toks[..2].join(" "))?;
                let count = toks[2]
                    .parse::<usize>()
                    .map_err(|_| lines.err(line, format!("bad node count `{}`", toks[2])))?;
                Some((xs[0], xs[1], count))
            }
        };
        let budgets = match lines.get("budgets") {
            None => Vec::new(),
            Some((line, v)) => lines.numbers_in(line, v)?,
        };
        let store_stride = match lines.get("solver.store_stride") {
            None => 1,
            Some((line, v)) => v.parse::<usize>().map_err(|_| lines.err(line, format!("bad stride `{v}`")))?,
        };
        let scenario = Scenario {
            name: lines.get("name").map_or_else(|| "scenario".to_string(), |(_, v)| v.to_string()),
            model,
            control,
            disturbance,
            horizon: lines.number("horizon")?.ok_or_else(|| lines.err(0, "missing key `horizon`"))?,
            target: parse_box(&lines, "target", dim)?,
            hard: parse_box(&lines, "hard", dim)?,
            soft: parse_box(&lines, "soft", dim)?,
            axes,
            budget_axis,
            epsilon: num("epsilon", 1e-3)?,
            budgets,
            eta: num("eta", 1e-3)?,
            sdf_weights: match lines.get("sdf.weights") {
                None => vec![1.0; dim],
                Some((line, v)) => {
                    let w = lines.numbers_in(line, v)?;
                    if w.len() != dim || w.iter().any(|w| !(*w > 0.0)) {
                        return Err(lines.err(line, format!("`sdf.weights` needs {dim} positive numbers")));
                    }
                    w
                }
            },
            cfl: num("solver.cfl", 0.5)?,
            store_stride,
            fixed_point_tol: num("solver.fixed_point_tol", 0.0)?,
            scheme: match lines.get("solver.scheme") {
                None => Scheme::First,
                Some((line, v)) => v.parse().map_err(|e: Error| lines.err(line, e.to_string()))?,
            },
            output_dir: PathBuf::from(lines.get("output.dir").map_or("out", |(_, v)| v)),
            source: path.to_path_buf(),
        };
        scenario.validate_with(&lines)?;
        Ok(scenario)
    }

    fn validate_with(&self, lines: &Lines) -> Result<()> {
        let at = |key: &str, msg: String| lines.err(lines.line_of(key), msg);
        if !(self.horizon > 0.0) {
            return Err(at("horizon", "horizon must be positive".into()));
        }
        for (i, a) in self.axes.iter().enumerate() {
            let key = format!("grid.axis{i}");
            Grid::new(&[(a.min, a.max, a.count), (0.0, 1.0, 3)]).map_err(|e| at(&key, e.to_string()))?;
        }
        if let Some((lo, hi, n)) = self.budget_axis {
            Grid::new(&[(lo, hi, n), (0.0, 1.0, 3)]).map_err(|e| at("grid.budget", e.to_string()))?;
            if let Some(q) = self.budgets.iter().find(|q| !(**q >= 0.0 && **q >= lo && **q <= hi)) {
                return Err(at("budgets", format!("budget {q} outside the budget axis [{lo}, {hi}]")));
            }
        } else if !self.budgets.is_empty() {
            return Err(at("budgets", "budgets need a `grid.budget` axis".into()));
        }
        for key in ["target", "hard", "soft"] {
            let b = match key {
                "target" => &self.target,
                "hard" => &self.hard,
                _ => &self.soft,
            };
            for (i, ((lo, hi), a)) in b.iter().zip(&self.axes).enumerate() {
                if *lo < a.min || *hi > a.max {
                    return Err(at(
                        key,
                        format!("`{key}` axis {i} [{lo}, {hi}] leaves the grid [{}, {}]", a.min, a.max),
                    ));
                }
            }
        }
        if matches!(self.model, ModelConfig::FixedWing { .. }) && !(self.axes[1].min > 0.0) {
            return Err(at("grid.axis1", "the airspeed axis must stay above zero".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(at("epsilon", "epsilon must be positive".into()));
        }
        if !(self.eta >= 0.0) {
            return Err(at("eta", "eta must be >= 0".into()));
        }
        SolveConfig { epsilon: self.epsilon, ..self.solve_config() }
            .validate(Mode::Soft)
            .map_err(|e| at("solver.cfl", e.to_string()))?;
        self.build_model().map_err(|e| match e {
            Error::Scenario { .. } => e,
            other => at("model", other.to_string()),
        })?;
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        self.source.parent().map_or_else(|| p.to_path_buf(), |d| d.join(p))
    }

    fn control_spec(list: &[(String, InputChannel)], default: &ControlSpec) -> ControlSpec {
        if list.is_empty() {
            return default.clone();
        }
        ControlSpec {
            names: list.iter().map(|(n, _)| n.clone()).collect(),
            channels: list.iter().map(|(_, c)| c.clone()).collect(),
        }
    }

    pub fn build_model(&self) -> Result<SystemModel> {
        let model = match &self.model {
            ModelConfig::PointMass { gravity } => {
                let d = PointMass::default();
                let pm = PointMass {
                    gravity: *gravity,
                    control: Self::control_spec(&self.control, &d.control),
                    disturbance: Self::control_spec(&self.disturbance, &d.disturbance),
                };
                if pm.control.dim() != 1 || pm.disturbance.dim() != 1 {
                    return Err(Error::InvalidArgument("point mass takes one control and one disturbance".into()));
                }
                pm.control.validate()?;
                pm.disturbance.validate()?;
                SystemModel::PointMass(pm)
            }
            ModelConfig::FixedWing { mass, gravity, rho, wing_area, aero } => {
                let alpha_samples = match self.control.first() {
                    Some((_, InputChannel::Samples(v))) => {
                        let mut v = v.clone();
                        v.sort_by(f64::total_cmp);
                        v.dedup();
                        v
                    }
                    Some((_, InputChannel::Interval { lo, hi })) => linspace(*lo, *hi, DEFAULT_ALPHA_SAMPLES),
                    None => linspace(0.0, 13f64.to_radians(), DEFAULT_ALPHA_SAMPLES),
                };
                let table = match aero {
                    AeroSource::Polar { cl0, cl_alpha, cd0, k } => {
                        AeroTable::from_polar(*cl0, *cl_alpha, *cd0, *k, &alpha_samples)?
                    }
                    AeroSource::Csv(p) => AeroTable::from_csv(fs::File::open(self.resolve(p))?)?,
                };
                let default = FixedWing::with_aero(table.clone());
                let control = Self::control_spec(&self.control, &default.control);
                let disturbance = Self::control_spec(&self.disturbance, &default.disturbance);
                if control.dim() != 1 || disturbance.dim() != 1 {
                    return Err(Error::InvalidArgument("fixed wing takes one control and one disturbance".into()));
                }
                let mut fw = FixedWing::new(
                    *mass,
                    *gravity,
                    *rho,
                    *wing_area,
                    table,
                    control.channels[0].clone(),
                    disturbance.channels[0].clone(),
                )?;
                fw.control.names = control.names;
                fw.disturbance.names = disturbance.names;
                SystemModel::FixedWing(fw)
            }
            ModelConfig::ConstantDrift { velocity } => {
                if !self.control.is_empty() || !self.disturbance.is_empty() {
                    return Err(Error::InvalidArgument("constant drift has no inputs".into()));
                }
                SystemModel::ConstantDrift(ConstantDrift { velocity: velocity.clone() })
            }
        };
        Ok(model)
    }

    fn as_set(&self, b: &[(f64, f64)]) -> Result<ImplicitSet> {
        ImplicitSet::weighted_box(
            b.iter().map(|p| p.0).collect(),
            b.iter().map(|p| p.1).collect(),
            self.sdf_weights.clone(),
        )
    }

    pub fn game(&self) -> Result<Game> {
        Ok(Game {
            model: self.build_model()?,
            target: self.as_set(&self.target)?,
            hard: self.as_set(&self.hard)?,
            soft: self.as_set(&self.soft)?,
            horizon: self.horizon,
        })
    }

    /// `(count - 1) * scale` intervals, rounded, with at least two.
    fn scaled(count: usize, scale: f64) -> usize {
        (((count - 1) as f64 * scale).round() as usize).max(2) + 1
    }

    /// Grid for `mode`, every axis count scaled by `scale`.
    pub fn grid(&self, mode: Mode, scale: f64) -> Result<Grid> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid scale must be positive, got {scale}")));
        }
        let mut axes: Vec<Axis> = self
            .axes
            .iter()
            .map(|a| Axis::new(a.min, a.max, Self::scaled(a.count, scale)))
            .collect();
        if mode == Mode::Soft {
            let (lo, hi, n) = self.budget_axis.ok_or_else(|| Error::Scenario {
                path: self.source.clone(),
                line: 0,
                message: "soft solves need a `grid.budget` axis".into(),
            })?;
            axes.push(Axis::new(lo, hi, Self::scaled(n, scale)));
        }
        Grid::from_axes(axes)
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            cfl: self.cfl,
            store_stride: self.store_stride,
            fixed_point_tol: self.fixed_point_tol,
            epsilon: self.epsilon,
            parallel: true,
            scheme: self.scheme,
        }
    }

    pub fn state_names(&self) -> Vec<String> {
        self.axes.iter().map(|a| a.name.clone()).collect()
    }

    /// Canonical text form; parsing it yields this scenario again.
    pub fn to_text(&self) -> String {
        let f = |x: f64| format!("{x:?}");
        let list = |xs: &[f64]| xs.iter().map(|x| f(*x)).collect::<Vec<_>>().join(" ");
        let boxed = |b: &[(f64, f64)]| {
            let flat: Vec<f64> = b.iter().flat_map(|p| [p.0, p.1]).collect();
            format!("box {}", list(&flat))
        };
        let channel = |c: &InputChannel| match c {
            InputChannel::Interval { lo, hi } => format!("interval {} {}", f(*lo), f(*hi)),
            InputChannel::Samples(v) => format!("samples {}", list(v)),
        };
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        match &self.model {
            ModelConfig::PointMass { gravity } => {
                let _ = writeln!(s, "model = point-mass\nmodel.gravity = {}", f(*gravity));
            }
            ModelConfig::FixedWing { mass, gravity, rho, wing_area, aero } => {
                let _ = writeln!(s, "model = fixed-wing");
                let _ = writeln!(s, "model.mass = {}\nmodel.gravity = {}", f(*mass), f(*gravity));
                let _ = writeln!(s, "model.rho = {}\nmodel.wing_area = {}", f(*rho), f(*wing_area));
                match aero {
                    AeroSource::Polar { cl0, cl_alpha, cd0, k } => {
                        let _ = writeln!(s, "model.aero = polar {}", list(&[*cl0, *cl_alpha, *cd0, *k]));
                    }
                    AeroSource::Csv(p) => {
                        let _ = writeln!(s, "model.aero = csv {}", p.display());
                    }
                }
            }
            ModelConfig::ConstantDrift { velocity } => {
                let _ = writeln!(s, "model = constant-drift\nmodel.velocity = {}", list(velocity));
            }
        }
        for (n, c) in &self.control {
            let _ = writeln!(s, "control.{n} = {}", channel(c));
        }
        for (n, c) in &self.disturbance {
            let _ = writeln!(s, "disturbance.{n} = {}", channel(c));
        }
        let _ = writeln!(s, "horizon = {}", f(self.horizon));
        let _ = writeln!(s, "target = {}", boxed(&self.target));
        let _ = writeln!(s, "hard = {}", boxed(&self.hard));
        let _ = writeln!(s, "soft = {}", boxed(&self.soft));
        for (i, a) in self.axes.iter().enumerate() {
            let _ = writeln!(s, "grid.axis{i} = {} {} {} {}", a.name, f(a.min), f(a.max), a.count);
        }
        if let Some((lo, hi, n)) = self.budget_axis {
            let _ = writeln!(s, "grid.budget = {} {} {n}", f(lo), f(hi));
        }
        let _ = writeln!(s, "epsilon = {}", f(self.epsilon));
        if !self.budgets.is_empty() {
            let _ = writeln!(s, "budgets = {}", list(&self.budgets));
        }
        let _ = writeln!(s, "eta = {}", f(self.eta));
        let _ = writeln!(s, "solver.cfl = {}", f(self.cfl));
        let _ = writeln!(s, "solver.store_stride = {}", self.store_stride);
        let _ = writeln!(s, "solver.fixed_point_tol = {}", f(self.fixed_point_tol));
        let _ = writeln!(s, "solver.scheme = {}", match self.scheme {
            Scheme::First => "first",
            Scheme::Eno2 => "eno2",
            Scheme::Upwind => "upwind",
        });
        let _ = writeln!(s, "sdf.weights = {}", list(&self.sdf_weights));
        let _ = writeln!(s, "output.dir = {}", self.output_dir.display());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POINT_MASS: &str = "\
# vertical landing
name = pm
model = point-mass
control.u1 = interval -60 60
disturbance.d_y = interval -10 10
horizon = 1
target = box -1 0 0 0.7
hard = box -15 15 0 18
soft = box -10 10 0 18   # recommended range
grid.axis0 = ydot -20 20 41
grid.axis1 = y -5 20 26
grid.budget = -0.1 1 12
budgets = 0 0.3 0.6
solver.store_stride = 5
output.dir = out/pm
";

    fn parse(text: &str) -> Result<Scenario> {
        Scenario::parse(text, Path::new("test.scenario"))
    }

    #[test]
    fn parses_and_round_trips() {
        let s = parse(POINT_MASS).unwrap();
        assert_eq!(s.axes[1].count, 26);
        assert_eq!(s.budgets, vec![0.0, 0.3, 0.6]);
        assert_eq!(s.epsilon, 1e-3);
        let again = parse(&s.to_text()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_text(), s.to_text());
    }

    #[test]
    fn degree_suffix_and_linspace() {
        let text = "\
model = fixed-wing
model.aero = polar 0.2 5.5 0.02 0.06
control.alpha = linspace 0deg 13deg 27
disturbance.F_wind = interval -10000 10000
horizon = 10
target = box 0 1.5 61 83 -0.6deg 0deg
hard = box 0 40 61 83 -3deg 0deg
soft = box 0 40 66 78 -3deg 0deg
grid.axis0 = h -5 45 11
grid.axis1 = V 55 90 8
grid.axis2 = gamma -4.5deg 1.5deg 7
";
        let s = parse(text).unwrap();
        assert!((s.hard[2].0 + 3f64.to_radians()).abs() < 1e-15);
        match &s.control[0].1 {
            InputChannel::Samples(v) => {
                assert_eq!(v.len(), 27);
                assert!((v[26] - 13f64.to_radians()).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(s.game().unwrap().model, SystemModel::FixedWing(_)));
        assert_eq!(parse(&s.to_text()).unwrap(), s);
        assert!(s.grid(Mode::Soft, 1.0).is_err());
        assert_eq!(s.grid(Mode::Classical, 1.0).unwrap().dim(), 3);

        let zero_speed = text.replace("V 55 90 8", "V 0 90 8");
        let err = parse(&zero_speed).unwrap_err();
        assert!(err.to_string().contains("test.scenario:10"), "{err}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = POINT_MASS.replace("horizon = 1", "horizon = one");
        let err = parse(&bad).unwrap_err();
        assert!(matches!(err, Error::Scenario { line: 6, .. }), "{err}");
        assert_eq!(err.exit_code(), 2);

        let outside = POINT_MASS.replace("soft = box -10 10 0 18", "soft = box -30 10 0 18");
        assert!(matches!(parse(&outside).unwrap_err(), Error::Scenario { line: 9, .. }));

        let unknown = format!("{POINT_MASS}colour = blue\n");
        assert!(matches!(parse(&unknown).unwrap_err(), Error::Scenario { line: 16, .. }));

        let dup = format!("{POINT_MASS}eta = 0.1\neta = 0.2\n");
        assert!(matches!(parse(&dup).unwrap_err(), Error::Scenario { line: 17, .. }));

        let budget = POINT_MASS.replace("budgets = 0 0.3 0.6", "budgets = 0 0.3 1.6");
        assert!(matches!(parse(&budget).unwrap_err(), Error::Scenario { line: 13, .. }));
    }

    #[test]
    fn soft_grid_requires_budget_axis() {
        let text = POINT_MASS.replace("grid.budget = -0.1 1 12\n", "").replace("budgets = 0 0.3 0.6\n", "");
        let s = parse(&text).unwrap();
        assert!(matches!(s.grid(Mode::Soft, 1.0), Err(Error::Scenario { .. })));
        let s = parse(POINT_MASS).unwrap();
        let g = s.grid(Mode::Soft, 2.0).unwrap();
        assert_eq!(g.counts(), vec![81, 51, 23]);
    }
}
