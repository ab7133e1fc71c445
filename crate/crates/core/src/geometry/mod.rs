//! Implicit sets, node masks and set metrics.
//!
//! Sets are represented by signed-distance evaluators: negative inside,
//! positive outside, zero on the boundary. Boxes use the max-norm
//! distance `max_i max(lo_i - p_i, p_i - hi_i)`, which is 1-Lipschitz in
//! the max-norm and composes exactly under `max` (intersection) and `min`
//! (union).

mod boundary;
mod contour;

pub use boundary::{boundary_error, BoundaryError, BoundaryErrorOptions};
pub use contour::{extract_contour, ContourExport, ContourSlice, Polyline, SliceSpec};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

#[derive(Clone, Debug, PartialEq)]
pub enum ImplicitSet {
    /// Axis-aligned box over the leading `lo.len()` coordinates.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Intersection(Vec<ImplicitSet>),
    Union(Vec<ImplicitSet>),
    Complement(Box<ImplicitSet>),
    /// `set` evaluated at the point scaled axis by axis; `set` is expressed
    /// in the scaled coordinates.
    Stretched { set: Box<ImplicitSet>, weights: Vec<f64> },
    /// Interpolated samples; time-varying when the field has several stamps.
    Sampled(ScalarField),
}

impl ImplicitSet {
    pub fn axis_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<ImplicitSet> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidArgument("box bounds must pair up".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "box bounds must be finite with lo <= hi, got {lo:?} / {hi:?}"
            )));
        }
        Ok(ImplicitSet::Box { lo, hi })
    }

    /// Box whose distance along axis `i` is multiplied by `weights[i]`.
    /// Positive weights leave the set and its sign pattern unchanged and
    /// only rebalance axes measured in unlike units.
    pub fn weighted_box(lo: Vec<f64>, hi: Vec<f64>, weights: Vec<f64>) -> Result<ImplicitSet> {
        if weights.len() != lo.len() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "box weights must be {} positive numbers, got {weights:?}",
                lo.len()
            )));
        }
        if weights.iter().all(|w| *w == 1.0) {
            return ImplicitSet::axis_box(lo, hi);
        }
        let scale = |v: &[f64]| v.iter().zip(&weights).map(|(x, w)| x * w).collect::<Vec<_>>();
        let inner = ImplicitSet::axis_box(scale(&lo), scale(&hi))?;
        Ok(ImplicitSet::Stretched { set: Box::new(inner), weights })
    }

    pub fn intersect(self, other: ImplicitSet) -> ImplicitSet {
        ImplicitSet::Intersection(vec![self, other])
    }

    pub fn union(self, other: ImplicitSet) -> ImplicitSet {
        ImplicitSet::Union(vec![self, other])
    }

    pub fn complement(self) -> ImplicitSet {
        ImplicitSet::Complement(Box::new(self))
    }

    /// Signed value at time `t` and point `p`.
    pub fn sdf(&self, t: f64, p: &[f64]) -> f64 {
        match self {
            ImplicitSet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .zip(p)
                .map(|((l, h), x)| (l - x).max(x - h))
                .fold(f64::NEG_INFINITY, f64::max),
            ImplicitSet::Intersection(sets) => sets
                .iter()
                .map(|s| s.sdf(t, p))
                .fold(f64::NEG_INFINITY, f64::max),
            ImplicitSet::Union(sets) => sets
                .iter()
                .map(|s| s.sdf(t, p))
                .fold(f64::INFINITY, f64::min),
            ImplicitSet::Complement(s) => -s.sdf(t, p),
            ImplicitSet::Stretched { set, weights } => {
                let mut q = [0.0; crate::grid::MAX_DIM];
                for ((q, x), w) in q.iter_mut().zip(p).zip(weights) {
                    *q = x * w;
                }
                set.sdf(t, &q[..weights.len()])
            }
            ImplicitSet::Sampled(field) => sampled_sdf(field, t, p),
        }
    }

    pub fn contains(&self, t: f64, p: &[f64]) -> bool {
        self.sdf(t, p) <= 0.0
    }

    pub fn is_time_varying(&self) -> bool {
        match self {
            ImplicitSet::Box { .. } => false,
            ImplicitSet::Intersection(s) | ImplicitSet::Union(s) => {
                s.iter().any(ImplicitSet::is_time_varying)
            }
            ImplicitSet::Complement(s) | ImplicitSet::Stretched { set: s, .. } => s.is_time_varying(),
            ImplicitSet::Sampled(f) => f.stamps() > 1,
        }
    }

    /// Number of leading coordinates the evaluator reads.
    pub fn arity(&self) -> usize {
        match self {
            ImplicitSet::Box { lo, .. } => lo.len(),
            ImplicitSet::Intersection(s) | ImplicitSet::Union(s) => {
                s.iter().map(ImplicitSet::arity).max().unwrap_or(0)
            }
            ImplicitSet::Complement(s) | ImplicitSet::Stretched { set: s, .. } => s.arity(),
            ImplicitSet::Sampled(f) => f.grid().dim(),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)` of a box set.
    pub fn as_box(&self) -> Option<(&[f64], &[f64])> {
        match self {
            ImplicitSet::Box { lo, hi } => Some((lo, hi)),
            _ => None,
        }
    }
}

/// Sampled sets clamp the query onto the sample grid and add the max-norm
/// distance that was clamped away, which keeps the evaluator 1-Lipschitz
/// beyond the sampled domain.
fn sampled_sdf(field: &ScalarField, t: f64, p: &[f64]) -> f64 {
    let g = field.grid();
    let mut q = p[..g.dim()].to_vec();
    let mut outside: f64 = 0.0;
    for (i, x) in q.iter_mut().enumerate() {
        let a = g.axis(i);
        let c = x.clamp(a.min, a.max);
        outside = outside.max((*x - c).abs());
        *x = c;
    }
    let times = field.times();
    let t = t.clamp(times[0], *times.last().unwrap());
    field.interpolate(t, &q).expect("clamped query is in domain") + outside
}

/// One membership bit per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct SetMask {
    grid: Grid,
    bits: Vec<bool>,
}

impl SetMask {
    pub fn new(grid: Grid, bits: Vec<bool>) -> Result<SetMask> {
        if bits.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} bits for {} nodes",
                bits.len(),
                grid.len()
            )));
        }
        Ok(SetMask { grid, bits })
    }

    pub fn full(grid: Grid, value: bool) -> SetMask {
        let bits = vec![value; grid.len()];
        SetMask { grid, bits }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> bool) -> SetMask {
        let mut p = vec![0.0; grid.dim()];
        let bits = (0..grid.len())
            .map(|i| {
                grid.node_point(i, &mut p);
                f(&p)
            })
            .collect();
        SetMask { grid, bits }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn not(&self) -> SetMask {
        SetMask {
            grid: self.grid.clone(),
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    fn zip(&self, other: &SetMask, op: impl Fn(bool, bool) -> bool) -> Result<SetMask> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(SetMask {
            grid: self.grid.clone(),
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| op(*a, *b)).collect(),
        })
    }

    pub fn and(&self, other: &SetMask) -> Result<SetMask> {
        self.zip(other, |a, b| a && b)
    }

    pub fn or(&self, other: &SetMask) -> Result<SetMask> {
        self.zip(other, |a, b| a || b)
    }

    pub fn xor(&self, other: &SetMask) -> Result<SetMask> {
        self.zip(other, |a, b| a != b)
    }

    /// Nodes set here but not in `other`.
    pub fn count_not_in(&self, other: &SetMask) -> Result<usize> {
        Ok(self.zip(other, |a, b| a && !b)?.count())
    }

    pub fn is_subset_of(&self, other: &SetMask) -> Result<bool> {
        Ok(self.count_not_in(other)? == 0)
    }

    /// Members whose every node within `margin` steps (max-norm in index
    /// space) is also a member. Nodes near the grid faces only see the
    /// neighbours that exist.
    pub fn erode(&self, margin: usize) -> SetMask {
        let g = &self.grid;
        let d = g.dim();
        let mut bits = self.bits.clone();
        for axis in 0..d {
            let n = g.axis(axis).count;
            let s = g.strides()[axis];
            let prev = bits.clone();
            let mut multi = vec![0usize; d];
            for (idx, b) in bits.iter_mut().enumerate() {
                if !*b {
                    continue;
                }
                g.multi_index(idx, &mut multi);
                let k = multi[axis];
                let lo = k.saturating_sub(margin);
                let hi = (k + margin).min(n - 1);
                *b = (lo..=hi).all(|j| prev[idx - k * s + j * s]);
            }
        }
        SetMask {
            grid: self.grid.clone(),
            bits,
        }
    }

    /// Member nodes with at least one non-member axis neighbour.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let g = &self.grid;
        let mut multi = vec![0usize; g.dim()];
        (0..g.len())
            .filter(|&idx| {
                if !self.bits[idx] {
                    return false;
                }
                g.multi_index(idx, &mut multi);
                (0..g.dim()).any(|i| {
                    let s = g.strides()[i];
                    (multi[i] > 0 && !self.bits[idx - s])
                        || (multi[i] + 1 < g.axis(i).count && !self.bits[idx + s])
                })
            })
            .collect()
    }

    /// Mask as a 0/1 field for the dump format.
    pub fn to_field(&self, t: f64) -> ScalarField {
        let values = self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        ScalarField::single(self.grid.clone(), t, values).expect("sizes match")
    }
}

/// Nodes of stamp `t_index` whose value is at most `level`.
pub fn sublevel_mask(field: &ScalarField, t_index: usize, level: f64) -> SetMask {
    SetMask {
        grid: field.grid().clone(),
        bits: field.slice(t_index).iter().map(|&v| v <= level).collect(),
    }
}

/// Node-counting quadrature: member count times the cell volume.
pub fn measure(mask: &SetMask) -> f64 {
    mask.count() as f64 * mask.grid.cell_volume()
}

pub fn symmetric_difference_measure(a: &SetMask, b: &SetMask) -> Result<f64> {
    Ok(measure(&a.xor(b)?))
}

/// Hausdorff distance between two node sets in the max-norm.
pub fn hausdorff_distance(a: &SetMask, b: &SetMask) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch);
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("hausdorff distance needs non-empty operands".into()));
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

/// `sup_{x in a} dist(x, b)`. The nearest member of `b` to an outside node
/// can always be taken on the boundary of `b`, so only those are scanned.
fn directed_hausdorff(a: &SetMask, b: &SetMask) -> f64 {
    let g = &a.grid;
    let d = g.dim();
    let rim: Vec<Vec<usize>> = b
        .boundary_nodes()
        .into_iter()
        .map(|idx| {
            let mut m = vec![0; d];
            g.multi_index(idx, &mut m);
            m
        })
        .collect();
    let h = g.spacings();
    let mut worst: f64 = 0.0;
    let mut m = vec![0; d];
    for idx in 0..g.len() {
        if !a.bits[idx] || b.bits[idx] {
            continue;
        }
        g.multi_index(idx, &mut m);
        let nearest = rim
            .iter()
            .map(|r| {
                (0..d)
                    .map(|i| (m[i] as f64 - r[i] as f64).abs() * h[i])
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn landing_box() -> ImplicitSet {
        ImplicitSet::axis_box(vec![-1.0, 0.0], vec![0.0, 0.7]).unwrap()
    }

    #[test]
    fn box_signed_distance() {
        let b = landing_box();
        assert!((b.sdf(0.0, &[-0.5, 0.35]) + 0.35).abs() < 1e-15);
        assert_eq!(b.sdf(0.0, &[0.0, 0.7]), 0.0);
        assert_eq!(b.sdf(0.0, &[1.0, 0.35]), 1.0);
    }

    #[test]
    fn sublevel_masks() {
        let g = Grid::new(&[(-1.0, 1.0, 5), (0.0, 1.0, 3)]).unwrap();
        let zero = ScalarField::from_fn(g.clone(), 0.0, |_| 0.0);
        assert_eq!(sublevel_mask(&zero, 0, 0.0).count(), g.len());
        let x = ScalarField::from_fn(g.clone(), 0.0, |p| p[0]);
        let m = sublevel_mask(&x, 0, 0.0);
        for idx in 0..g.len() {
            assert_eq!(m.get(idx), g.point(idx)[0] <= 0.0);
        }
        assert!(sublevel_mask(&x, 0, -1e300).is_empty());
    }

    #[test]
    fn measures() {
        let g = Grid::new(&[(0.0, 1.0, 11), (0.0, 1.0, 11)]).unwrap();
        assert!((measure(&SetMask::full(g.clone(), true)) - 1.21).abs() < 1e-12);
        assert_eq!(measure(&SetMask::full(g, false)), 0.0);
        // Half-space x <= 0 on [-1, 1]^2 with 5 nodes per axis: 3 x 5 nodes of area 0.25.
        let g = Grid::new(&[(-1.0, 1.0, 5), (-1.0, 1.0, 5)]).unwrap();
        let half = SetMask::from_fn(g, |p| p[0] <= 0.0);
        assert_eq!(measure(&half), 3.75);
    }

    #[test]
    fn symmetric_differences() {
        let g = Grid::new(&[(0.0, 1.0, 11), (0.0, 1.0, 11)]).unwrap();
        let all = SetMask::full(g.clone(), true);
        let none = SetMask::full(g.clone(), false);
        assert_eq!(symmetric_difference_measure(&all, &all).unwrap(), 0.0);
        assert_eq!(symmetric_difference_measure(&all, &none).unwrap(), measure(&all));
        let left = SetMask::from_fn(g.clone(), |p| p[0] < 0.5);
        let right = left.not();
        let sum = measure(&left) + measure(&right);
        assert!((symmetric_difference_measure(&left, &right).unwrap() - sum).abs() < 1e-12);
        let other = SetMask::full(Grid::new(&[(0.0, 1.0, 5), (0.0, 1.0, 5)]).unwrap(), true);
        assert!(matches!(symmetric_difference_measure(&all, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn hausdorff_cases() {
        let g = Grid::new(&[(0.0, 2.0, 21), (0.0, 1.0, 21)]).unwrap();
        let boxed = |lo0: usize, hi0: usize, lo1: usize, hi1: usize| {
            let g2 = g.clone();
            let mut m = vec![0; 2];
            let bits = (0..g.len())
                .map(|i| {
                    g2.multi_index(i, &mut m);
                    (lo0..=hi0).contains(&m[0]) && (lo1..=hi1).contains(&m[1])
                })
                .collect();
            SetMask::new(g.clone(), bits).unwrap()
        };
        let a = boxed(5, 10, 5, 10);
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        let shifted = boxed(6, 11, 5, 10);
        assert!((hausdorff_distance(&a, &shifted).unwrap() - 0.1).abs() < 1e-12);
        let inner = boxed(8, 12, 8, 12);
        let outer = boxed(5, 15, 5, 15);
        assert!((hausdorff_distance(&outer, &inner).unwrap() - 0.3).abs() < 1e-12);
        let empty = SetMask::full(g.clone(), false);
        assert!(hausdorff_distance(&a, &empty).is_err());
    }

    #[test]
    fn erosion_peels_margin() {
        let g = Grid::new(&[(0.0, 1.0, 11), (0.0, 1.0, 11)]).unwrap();
        let m = SetMask::from_fn(g.clone(), |p| p[0] >= 0.2 - 1e-9 && p[0] <= 0.8 + 1e-9);
        let e = m.erode(2);
        assert_eq!(e.count(), 3 * 11);
    }

    fn box_strategy() -> impl Strategy<Value = ImplicitSet> {
        prop::collection::vec((-3.0..3.0f64, 0.0..2.0f64), 2).prop_map(|v| {
            ImplicitSet::axis_box(v.iter().map(|p| p.0).collect(), v.iter().map(|p| p.0 + p.1).collect())
                .unwrap()
        })
    }

    fn random_mask(g: &Grid, seed: &[bool]) -> SetMask {
        SetMask::new(g.clone(), seed.to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn intersection_is_pointwise_max(a in box_strategy(), b in box_strategy(),
                                         p in prop::collection::vec(-5.0..5.0f64, 2)) {
            let both = a.clone().intersect(b.clone());
            prop_assert_eq!(both.sdf(0.0, &p), a.sdf(0.0, &p).max(b.sdf(0.0, &p)));
            let either = a.clone().union(b.clone());
            prop_assert_eq!(either.sdf(0.0, &p), a.sdf(0.0, &p).min(b.sdf(0.0, &p)));
        }

        #[test]
        fn box_sdf_is_max_norm_lipschitz(a in box_strategy(),
                                        p in prop::collection::vec(-5.0..5.0f64, 2),
                                        q in prop::collection::vec(-5.0..5.0f64, 2)) {
            let dist = (p[0] - q[0]).abs().max((p[1] - q[1]).abs());
            prop_assert!((a.sdf(0.0, &p) - a.sdf(0.0, &q)).abs() <= dist + 1e-12);
        }

        #[test]
        fn symmetric_difference_is_a_pseudometric(
            a in prop::collection::vec(any::<bool>(), 25),
            b in prop::collection::vec(any::<bool>(), 25),
            c in prop::collection::vec(any::<bool>(), 25),
        ) {
            let g = Grid::new(&[(0.0, 1.0, 5), (0.0, 2.0, 5)]).unwrap();
            let (a, b, c) = (random_mask(&g, &a), random_mask(&g, &b), random_mask(&g, &c));
            let ab = symmetric_difference_measure(&a, &b).unwrap();
            let bc = symmetric_difference_measure(&b, &c).unwrap();
            let ac = symmetric_difference_measure(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert_eq!(ab, symmetric_difference_measure(&b, &a).unwrap());
        }

        #[test]
        fn complement_measures_add_up(a in prop::collection::vec(any::<bool>(), 25)) {
            let g = Grid::new(&[(0.0, 1.0, 5), (0.0, 2.0, 5)]).unwrap();
            let a = random_mask(&g, &a);
            let total = measure(&SetMask::full(g, true));
            prop_assert_eq!(measure(&a) + measure(&a.not()), total);
        }
    }
}
