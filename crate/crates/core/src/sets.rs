//! Reach–avoid sets from a budget-augmented value field.
//!
//! Fields handled here carry the budget `z` as their last axis. A budget
//! `Q` selects the plane `z = Q` by linear interpolation between the
//! bracketing nodes; adding a margin `eta` before thresholding at zero
//! gives the conservative proxy set `{W + eta <= 0}`.

use std::borrow::Cow;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{measure, sublevel_mask, symmetric_difference_measure, SetMask};
use crate::grid::{Grid, ScalarField};
use crate::solver::{solve, Game, Mode, SolveConfig};

pub const DEFAULT_ETA: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetSliceRequest {
    pub q: f64,
    pub eta: f64,
    pub t: f64,
}

impl BudgetSliceRequest {
    pub fn new(q: f64) -> Self {
        BudgetSliceRequest { q, eta: DEFAULT_ETA, t: 0.0 }
    }

    pub fn eta(self, eta: f64) -> Self {
        BudgetSliceRequest { eta, ..self }
    }

    pub fn at(self, t: f64) -> Self {
        BudgetSliceRequest { t, ..self }
    }
}

/// All nodes of `w` at time `t`, interpolated between stamps if needed.
fn values_at(w: &ScalarField, t: f64) -> Result<Cow<'_, [f64]>> {
    let (k, s) = w.locate_time(t)?;
    if s == 0.0 {
        return Ok(Cow::Borrowed(w.slice(k)));
    }
    let (a, b) = (w.slice(k), w.slice(k + 1));
    Ok(Cow::Owned(a.iter().zip(b).map(|(a, b)| a + s * (b - a)).collect()))
}

/// `w` at time `t` as a single-stamp field over the same grid.
pub fn field_at(w: &ScalarField, t: f64) -> Result<ScalarField> {
    ScalarField::single(w.grid().clone(), t, values_at(w, t)?.into_owned())
}

fn state_grid(w: &ScalarField) -> Result<Grid> {
    let g = w.grid();
    if g.dim() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a budget-augmented field needs a state grid plus a budget axis, got {} axes",
            g.dim()
        )));
    }
    g.without_axis(g.dim() - 1)
}

/// Bracketing budget plane and weight of `q`, which must lie within the
/// budget axis and be non-negative.
fn locate_budget(w: &ScalarField, q: f64) -> Result<(usize, f64)> {
    let g = w.grid();
    let z = g.axis(g.dim() - 1);
    if !(q >= 0.0 && q >= z.min && q <= z.max) {
        return Err(Error::InvalidArgument(format!(
            "budget {q} outside [max(0, {}), {}]",
            z.min, z.max
        )));
    }
    let h = z.spacing();
    let r = (q - z.min) / h;
    let k = r.round();
    if (r - k).abs() <= 64.0 * f64::EPSILON * r.abs().max(1.0) {
        let k = k as usize;
        return Ok(if k + 1 >= z.count { (z.count - 2, 1.0) } else { (k, 0.0) });
    }
    let k = (r.floor() as usize).min(z.count - 2);
    Ok((k, r - k as f64))
}

/// The plane `z = Q` of `w` at time `t`, shifted by `eta`.
pub fn slice_budget(w: &ScalarField, req: &BudgetSliceRequest) -> Result<ScalarField> {
    if !(req.eta >= 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be >= 0, got {}", req.eta)));
    }
    let sg = state_grid(w)?;
    let (k, s) = locate_budget(w, req.q)?;
    let nz = w.grid().axis(w.grid().dim() - 1).count;
    let vals = values_at(w, req.t)?;
    let out = (0..sg.len())
        .map(|i| {
            let a = vals[i * nz + k];
            let v = if s == 0.0 {
                a
            } else if s == 1.0 {
                vals[i * nz + k + 1]
            } else {
                a + s * (vals[i * nz + k + 1] - a)
            };
            v + req.eta
        })
        .collect();
    ScalarField::single(sg, req.t, out)
}

/// The proxy set `{W(t, ., Q) + eta <= 0}` as a state mask.
pub fn proxy_mask(w: &ScalarField, req: &BudgetSliceRequest) -> Result<SetMask> {
    Ok(sublevel_mask(&slice_budget(w, req)?, 0, 0.0))
}

/// Minimum feasible budget per state node.
#[derive(Clone, Debug, PartialEq)]
pub struct QminField {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Stands for "no budget on the axis suffices"; one above the axis top.
    pub sentinel: f64,
    pub t: f64,
    pub eta: f64,
}

impl QminField {
    pub fn is_feasible(&self, idx: usize) -> bool {
        self.values[idx] < self.sentinel
    }

    pub fn infeasible_mask(&self) -> SetMask {
        let bits = (0..self.values.len()).map(|i| !self.is_feasible(i)).collect();
        SetMask::new(self.grid.clone(), bits).expect("sizes match")
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField::single(self.grid.clone(), self.t, self.values.clone()).expect("sizes match")
    }
}

/// Smallest `Q >= 0` with `W(t, x, Q) + eta <= 0` per state node, refined
/// linearly between the bracketing budget planes.
pub fn qmin(w: &ScalarField, t: f64, eta: f64) -> Result<QminField> {
    if !(eta >= 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be >= 0, got {eta}")));
    }
    let sg = state_grid(w)?;
    let zg = w.grid().axis(w.grid().dim() - 1).clone();
    if zg.max < 0.0 {
        return Err(Error::InvalidArgument("budget axis has no non-negative part".into()));
    }
    let nz = zg.count;
    let vals = values_at(w, t)?;
    let sentinel = zg.max + 1.0;
    // Breakpoints on [0, zmax]: zero (by interpolation when it is not a
    // node) followed by every positive node.
    let start = (0.0f64).max(zg.min);
    let (k0, s0) = locate_budget(w, start)?;
    let last = w.grid().dim() - 1;
    let first_after = if s0 == 1.0 { k0 + 2 } else { k0 + 1 };
    let nodes: Vec<(f64, usize)> = (first_after..nz).map(|j| (w.grid().coord(last, j), j)).collect();
    let values = (0..sg.len())
        .map(|i| {
            let row = &vals[i * nz..(i + 1) * nz];
            let phi = |j: usize| row[j] + eta;
            let mut a = start;
            let mut fa = if s0 == 0.0 {
                phi(k0)
            } else if s0 == 1.0 {
                phi(k0 + 1)
            } else {
                phi(k0) + s0 * (phi(k0 + 1) - phi(k0))
            };
            if fa <= 0.0 {
                return a;
            }
            for &(b, j) in &nodes {
                let fb = phi(j);
                if fb <= 0.0 {
                    let f = fa / (fa - fb);
                    return if f >= 1.0 { b } else { (a + (b - a) * f).clamp(a, b) };
                }
                a = b;
                fa = fb;
            }
            sentinel
        })
        .collect();
    Ok(QminField { grid: sg, values, sentinel, t, eta })
}

/// Nodes whose minimum budget lies in `(t1, t2]`, with the number of nodes
/// where that disagrees with `complement(slice(t1)) & slice(t2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandSet {
    pub mask: SetMask,
    pub disagreements: usize,
}

pub fn band_set(w: &ScalarField, q: &QminField, t1: f64, t2: f64) -> Result<BandSet> {
    if !(t1 < t2) {
        return Err(Error::InvalidArgument(format!("band needs t1 < t2, got ({t1}, {t2}]")));
    }
    let bits = q.values.iter().map(|&v| v > t1 && v <= t2).collect();
    let mask = SetMask::new(q.grid.clone(), bits)?;
    let req = |b: f64| BudgetSliceRequest { q: b, eta: q.eta, t: q.t };
    let lower = proxy_mask(w, &req(t1))?;
    let upper = proxy_mask(w, &req(t2.min(w.grid().axis(w.grid().dim() - 1).max)))?;
    let algebra = lower.not().and(&upper)?;
    let disagreements = mask.xor(&algebra)?.count();
    Ok(BandSet { mask, disagreements })
}

/// One comparison between consecutive regularization widths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub epsilon_hi: f64,
    pub epsilon_lo: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub sym_diff_measure: f64,
    pub set_measure_lo: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonStudy {
    pub rows: Vec<StudyRow>,
    /// `(epsilon, Q, measure)` for every solve.
    pub measures: Vec<(f64, f64, f64)>,
}

impl EpsilonStudy {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Symmetric-difference table from proxy masks, `masks[k][j]` for
/// `eps[k]` and `qs[j]`.
pub fn compare_masks(eps: &[f64], qs: &[f64], masks: &[Vec<SetMask>]) -> Result<EpsilonStudy> {
    let mut rows = Vec::new();
    let mut measures = Vec::new();
    for (k, per_q) in masks.iter().enumerate() {
        for (j, m) in per_q.iter().enumerate() {
            measures.push((eps[k], qs[j], measure(m)));
        }
    }
    for k in 1..masks.len() {
        for (j, &q) in qs.iter().enumerate() {
            rows.push(StudyRow {
                epsilon_hi: eps[k - 1],
                epsilon_lo: eps[k],
                q,
                sym_diff_measure: symmetric_difference_measure(&masks[k - 1][j], &masks[k][j])?,
                set_measure_lo: measure(&masks[k][j]),
            });
        }
    }
    Ok(EpsilonStudy { rows, measures })
}

/// Solves the soft problem for each width in `eps` (strictly descending)
/// and compares the proxy sets at `t = 0` for every budget in `qs`.
pub fn epsilon_convergence_study(
    game: &Game,
    grid: &Grid,
    config: &SolveConfig,
    eps: &[f64],
    qs: &[f64],
    eta: f64,
) -> Result<EpsilonStudy> {
    if eps.len() < 2 || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "epsilon list must be strictly descending with at least two entries".into(),
        ));
    }
    let mut masks = Vec::with_capacity(eps.len());
    for &e in eps {
        let cfg = SolveConfig { epsilon: e, store_stride: usize::MAX, ..config.clone() };
        let (w, _) = solve(game, grid, Mode::Soft, &cfg)?;
        let per_q = qs
            .iter()
            .map(|&q| proxy_mask(&w, &BudgetSliceRequest { q, eta, t: 0.0 }))
            .collect::<Result<Vec<_>>>()?;
        masks.push(per_q);
    }
    compare_masks(eps, qs, &masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let g = Grid::new(&[(-1.0, 1.0, 11), (-1.0, 1.0, 11), (-0.1, 1.0, 12)]).unwrap();
        ScalarField::from_fn(g, 0.0, f)
    }

    #[test]
    fn slice_on_a_plane_is_exact() {
        let w = field(|p| p[0] * p[1] - p[2] * 0.37);
        let s = slice_budget(&w, &BudgetSliceRequest::new(0.3)).unwrap();
        for i in 0..s.grid().len() {
            assert_eq!(s.slice(0)[i], w.slice(0)[i * 12 + 4] + 1e-3);
        }
        let s = slice_budget(&w, &BudgetSliceRequest::new(1.0).eta(0.0)).unwrap();
        assert_eq!(s.slice(0)[7], w.slice(0)[7 * 12 + 11]);
        assert!(slice_budget(&w, &BudgetSliceRequest::new(1.5)).is_err());
        assert!(slice_budget(&w, &BudgetSliceRequest::new(-0.05)).is_err());
    }

    #[test]
    fn eta_moves_a_unit_slope_boundary_by_eta() {
        let w = field(|p| p[0] - 0.5);
        let exact = slice_budget(&w, &BudgetSliceRequest::new(0.5).eta(0.0)).unwrap();
        let proxy = slice_budget(&w, &BudgetSliceRequest::new(0.5)).unwrap();
        // Along x0 the zero crossing sits at the root of the linear field.
        let root = |s: &ScalarField| 0.4 + 0.2 * (0.0 - s.slice(0)[7 * 11]) / (s.slice(0)[8 * 11] - s.slice(0)[7 * 11]);
        let moved = root(&exact) - root(&proxy);
        assert!(moved > 0.0 && moved <= 1e-3 + 1e-12, "{moved}");
    }

    #[test]
    fn qmin_examples() {
        let w = field(|p| if p[0] < 0.0 { -1.0 } else { 0.5 - p[2] });
        let q = qmin(&w, 0.0, 0.0).unwrap();
        assert_eq!(q.values[0], 0.0);
        let right = 10 * 11 + 3;
        assert!((q.values[right] - 0.5).abs() < 1e-12);
        let w = field(|_| 0.0);
        let q = qmin(&w, 0.0, 1e-3).unwrap();
        assert!(q.values.iter().all(|v| *v == q.sentinel));
        assert_eq!(q.sentinel, 2.0);
    }

    #[test]
    fn qmin_interpolates_between_planes() {
        let w = field(|p| 0.25 - p[2]);
        let q = qmin(&w, 0.0, 0.0).unwrap();
        assert!((q.values[5] - 0.25).abs() < 1e-12, "{}", q.values[5]);
    }

    #[test]
    fn band_examples() {
        let w = field(|_| -1.0);
        let q = qmin(&w, 0.0, 0.0).unwrap();
        assert!(q.values.iter().all(|v| *v == 0.0));
        let b = band_set(&w, &q, 0.3, 0.6).unwrap();
        assert!(b.mask.is_empty());
        assert_eq!(b.disagreements, 0);
        assert!(band_set(&w, &q, 0.6, 0.6).is_err());

        let w = field(|_| 1.0);
        let q = qmin(&w, 0.0, 0.0).unwrap();
        let b = band_set(&w, &q, 0.0, 1.0).unwrap();
        assert!(b.mask.is_empty());
    }

    #[test]
    fn study_of_identical_masks_is_zero() {
        let g = Grid::new(&[(0.0, 1.0, 5), (0.0, 1.0, 5)]).unwrap();
        let a = SetMask::from_fn(g.clone(), |p| p[0] < 0.6);
        let mut bits = a.bits().to_vec();
        bits[0] = !bits[0];
        bits[24] = !bits[24];
        let b = SetMask::new(g.clone(), bits).unwrap();
        let s = compare_masks(&[1.0, 1.0, 0.5], &[0.3], &[vec![a.clone()], vec![a], vec![b]]).unwrap();
        assert_eq!(s.rows[0].sym_diff_measure, 0.0);
        assert_eq!(s.rows[1].sym_diff_measure, 2.0 * g.cell_volume());
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epsilon_hi,epsilon_lo,Q,sym_diff_measure,set_measure_lo\n"));
    }

    fn monotone_field(seed: Vec<f64>) -> ScalarField {
        // Random values made nonincreasing along the budget axis.
        let g = Grid::new(&[(-1.0, 1.0, 4), (-1.0, 1.0, 4), (-0.1, 1.0, 12)]).unwrap();
        let mut v = seed;
        for row in v.chunks_mut(12) {
            for j in 1..12 {
                row[j] = row[j].min(row[j - 1]);
            }
        }
        ScalarField::single(g, 0.0, v).unwrap()
    }

    proptest! {
        #[test]
        fn band_identity_and_partition(seed in prop::collection::vec(-1.0..1.0f64, 192), eta in 0.0..0.01f64) {
            let w = monotone_field(seed);
            let q = qmin(&w, 0.0, eta).unwrap();
            for (t1, t2) in [(0.0, 0.3), (0.3, 0.6), (0.1, 1.0), (0.06, 0.3)] {
                prop_assert_eq!(band_set(&w, &q, t1, t2).unwrap().disagreements, 0);
            }
            let band = band_set(&w, &q, 0.0, 1.0).unwrap().mask;
            let zero = proxy_mask(&w, &BudgetSliceRequest::new(0.0).eta(eta)).unwrap();
            let none = q.infeasible_mask();
            prop_assert_eq!(band.count() + zero.count() + none.count(), q.grid.len());
            prop_assert_eq!(band.or(&zero).unwrap().or(&none).unwrap().count(), q.grid.len());
        }

        #[test]
        fn masks_nest_in_budget_and_shrink_with_eta(seed in prop::collection::vec(-1.0..1.0f64, 192)) {
            let w = monotone_field(seed);
            let qs = [0.0, 0.06, 0.3, 0.6, 1.0];
            let masks: Vec<SetMask> = qs
                .iter()
                .map(|&q| proxy_mask(&w, &BudgetSliceRequest::new(q)).unwrap())
                .collect();
            for pair in masks.windows(2) {
                prop_assert!(pair[0].is_subset_of(&pair[1]).unwrap());
            }
            for &q in &qs {
                let tight = proxy_mask(&w, &BudgetSliceRequest::new(q).eta(0.0)).unwrap();
                let proxy = proxy_mask(&w, &BudgetSliceRequest::new(q)).unwrap();
                prop_assert!(proxy.is_subset_of(&tight).unwrap());
            }
        }

        #[test]
        fn narrowing_bands_shrink(seed in prop::collection::vec(-1.0..1.0f64, 192)) {
            let w = monotone_field(seed);
            let q = qmin(&w, 0.0, 0.0).unwrap();
            let sizes: Vec<usize> = [0.5, 0.3, 0.1, 0.01]
                .iter()
                .map(|d| band_set(&w, &q, 0.6 - d, 0.6).unwrap().mask.count())
                .collect();
            for pair in sizes.windows(2) {
                prop_assert!(pair[1] <= pair[0]);
            }
        }
    }
}
