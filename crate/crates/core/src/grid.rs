//! Uniform Cartesian grids and the scalar fields sampled on them.
//!
//! Nodes are stored row-major with axis 0 slowest. Node `k` on axis `i`
//! sits at `mins[i] + k * spacings[i]`; coordinates are always recomputed
//! from the integer index so there is no cumulative drift.
//!
//! Derivatives are one-sided differences, first order or second-order ENO.
//! At the grid faces missing neighbours are ghost values obtained by linear
//! extrapolation (`2 f_edge - f_inner` and so on), which keeps affine
//! fields exact everywhere.

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 4;
pub const MIN_COUNT: usize = 3;

/// Relative tolerance used to snap query coordinates onto nodes so that
/// interpolation at a node returns the stored value bit for bit.
const SNAP: f64 = 64.0 * f64::EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Axis { min, max, count }
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    spacings: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    /// Builds a grid from `(min, max, count)` triples, one per axis.
    pub fn new(specs: &[(f64, f64, usize)]) -> Result<Grid> {
        Self::from_axes(specs.iter().map(|&(lo, hi, n)| Axis::new(lo, hi, n)).collect())
    }

    pub fn from_axes(axes: Vec<Axis>) -> Result<Grid> {
        if axes.len() < MIN_DIM || axes.len() > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension {} outside {MIN_DIM}..={MAX_DIM}",
                axes.len()
            )));
        }
        for (i, a) in axes.iter().enumerate() {
            if !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidGrid(format!("axis {i} has non-finite bounds")));
            }
            if a.max <= a.min {
                return Err(Error::InvalidGrid(format!(
                    "axis {i}: max {} must exceed min {}",
                    a.max, a.min
                )));
            }
            if a.count < MIN_COUNT {
                return Err(Error::InvalidGrid(format!(
                    "axis {i}: {} nodes, need at least {MIN_COUNT}",
                    a.count
                )));
            }
        }
        let spacings = axes.iter().map(Axis::spacing).collect();
        let mut strides = vec![1; axes.len()];
        for i in (0..axes.len() - 1).rev() {
            strides[i] = strides[i + 1] * axes[i + 1].count;
        }
        let len = axes.iter().map(|a| a.count).product();
        Ok(Grid {
            axes,
            spacings,
            strides,
            len,
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn mins(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.min).collect()
    }

    pub fn maxs(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.max).collect()
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacings.iter().product()
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        let a = &self.axes[axis];
        if k + 1 == a.count {
            a.max
        } else {
            a.min + k as f64 * self.spacings[axis]
        }
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for (o, s) in out.iter_mut().zip(&self.strides) {
            *o = idx / s;
            idx %= s;
        }
    }

    /// Coordinates of node `idx`.
    pub fn node_point(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for (i, s) in self.strides.iter().enumerate() {
            let k = rem / s;
            rem %= s;
            out[i] = self.coord(i, k);
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.node_point(idx, &mut p);
        p
    }

    /// Rounding slack, in spacings, when snapping to node `r` of `axis`;
    /// covers the cancellation in `x - min` far from the origin.
    fn snap(&self, axis: usize, r: f64) -> f64 {
        let a = &self.axes[axis];
        SNAP * (r.abs().max(1.0) + (a.min.abs() + a.max.abs()) / self.spacings[axis])
    }

    /// Index of the node exactly at `p`, if `p` is a node.
    pub fn node_at(&self, p: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (i, &x) in p.iter().enumerate().take(self.dim()) {
            let s = (x - self.axes[i].min) / self.spacings[i];
            let r = s.round();
            if (s - r).abs() > self.snap(i, r) || r < 0.0 || r as usize >= self.axes[i].count {
                return None;
            }
            idx += r as usize * self.strides[i];
        }
        Some(idx)
    }

    /// Cell and fractional weight of coordinate `x` along `axis`.
    ///
    /// Queries up to one spacing outside the axis are clamped onto the
    /// face; anything farther is an out-of-domain error.
    pub fn locate(&self, axis: usize, x: f64, point: &[f64]) -> Result<(usize, f64)> {
        let a = &self.axes[axis];
        let h = self.spacings[axis];
        if !(x >= a.min - h && x <= a.max + h) {
            return Err(Error::OutOfDomain {
                axis,
                point: point.to_vec(),
                lo: a.min - h,
                hi: a.max + h,
            });
        }
        let s = ((x - a.min) / h).clamp(0.0, (a.count - 1) as f64);
        let r = s.round();
        let s = if (s - r).abs() <= self.snap(axis, r) { r } else { s };
        let last = a.count - 2;
        let cell = (s.floor() as usize).min(last);
        Ok((cell, s - cell as f64))
    }

    /// Whether two grids describe the same nodes.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.axes == other.axes
    }

    /// Grid with `axis` removed. Requires the result to keep at least two axes.
    pub fn without_axis(&self, axis: usize) -> Result<Grid> {
        let axes = self
            .axes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != axis)
            .map(|(_, a)| a.clone())
            .collect();
        Grid::from_axes(axes)
    }
}

/// Values on a grid at one or more time stamps.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl ScalarField {
    pub fn new(grid: Grid, times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<ScalarField> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} time stamps for {} slices",
                times.len(),
                values.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "time stamps must be finite and strictly ascending".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| v.len() != grid.len()) {
            return Err(Error::InvalidArgument(format!(
                "slice has {} values, grid has {} nodes",
                v.len(),
                grid.len()
            )));
        }
        Ok(ScalarField {
            grid,
            times,
            values,
        })
    }

    /// Single-stamp field.
    pub fn single(grid: Grid, t: f64, values: Vec<f64>) -> Result<ScalarField> {
        Self::new(grid, vec![t], vec![values])
    }

    /// Samples `f` at every node, single stamp at `t`.
    pub fn from_fn(grid: Grid, t: f64, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let mut p = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_point(i, &mut p);
                f(&p)
            })
            .collect();
        ScalarField {
            grid,
            times: vec![t],
            values: vec![values],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn stamps(&self) -> usize {
        self.times.len()
    }

    pub fn slice(&self, t_index: usize) -> &[f64] {
        &self.values[t_index]
    }

    pub fn slices(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn last_slice(&self) -> &[f64] {
        self.values.last().expect("field has at least one stamp")
    }

    pub fn into_parts(self) -> (Grid, Vec<f64>, Vec<Vec<f64>>) {
        (self.grid, self.times, self.values)
    }

    /// Field restricted to the stamp `t_index`.
    pub fn at_stamp(&self, t_index: usize) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            times: vec![self.times[t_index]],
            values: vec![self.values[t_index].clone()],
        }
    }

    /// Multilinear interpolation of stamp `t_index` at `p`.
    pub fn interpolate_at(&self, t_index: usize, p: &[f64]) -> Result<f64> {
        interpolate_values(&self.grid, &self.values[t_index], p)
    }

    /// Multilinear in space, linear in time between the bracketing stamps.
    pub fn interpolate(&self, t: f64, p: &[f64]) -> Result<f64> {
        let (k, w) = self.locate_time(t)?;
        let a = self.interpolate_at(k, p)?;
        if w == 0.0 {
            return Ok(a);
        }
        let b = self.interpolate_at(k + 1, p)?;
        Ok(a + w * (b - a))
    }

    /// Bracketing stamp and weight of `t`; exact stamps give weight 0.
    pub fn locate_time(&self, t: f64) -> Result<(usize, f64)> {
        let first = self.times[0];
        let last = *self.times.last().unwrap();
        if !(t >= first && t <= last) {
            return Err(Error::TimeOutOfRange { t, first, last });
        }
        match self.times.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(k) => Ok((k, 0.0)),
            Err(k) => {
                let (t0, t1) = (self.times[k - 1], self.times[k]);
                Ok((k - 1, (t - t0) / (t1 - t0)))
            }
        }
    }

    /// Per-axis backward and forward differences of stamp `t_index`.
    pub fn upwind_gradients(&self, t_index: usize) -> UpwindGradients {
        upwind_gradients(&self.grid, &self.values[t_index])
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Multilinear interpolation of nodal `values` at `p`.
pub fn interpolate_values(grid: &Grid, values: &[f64], p: &[f64]) -> Result<f64> {
    let d = grid.dim();
    let mut cell = [0usize; MAX_DIM];
    let mut w = [0.0f64; MAX_DIM];
    for i in 0..d {
        let (c, wi) = grid.locate(i, p[i], p)?;
        cell[i] = c;
        w[i] = wi;
    }
    let base: usize = (0..d).map(|i| cell[i] * grid.strides[i]).sum();
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut weight = 1.0;
        let mut idx = base;
        for i in 0..d {
            if corner >> i & 1 == 1 {
                weight *= w[i];
                idx += grid.strides[i];
            } else {
                weight *= 1.0 - w[i];
            }
        }
        if weight != 0.0 {
            acc += weight * values[idx];
        }
    }
    Ok(acc)
}

/// Backward (`minus`) and forward (`plus`) differences, one vector per axis.
#[derive(Clone, Debug)]
pub struct UpwindGradients {
    pub minus: Vec<Vec<f64>>,
    pub plus: Vec<Vec<f64>>,
}

pub fn upwind_gradients(grid: &Grid, values: &[f64]) -> UpwindGradients {
    let d = grid.dim();
    let mut minus = vec![vec![0.0; grid.len()]; d];
    let mut plus = vec![vec![0.0; grid.len()]; d];
    let mut multi = [0usize; MAX_DIM];
    for idx in 0..grid.len() {
        grid.multi_index(idx, &mut multi[..d]);
        for i in 0..d {
            let (m, p) = one_sided(
                values,
                idx,
                multi[i],
                grid.axes[i].count,
                grid.strides[i],
                1.0 / grid.spacings[i],
            );
            minus[i][idx] = m;
            plus[i][idx] = p;
        }
    }
    UpwindGradients { minus, plus }
}

/// One-sided differences at node `idx` along an axis where the node has
/// index `k` of `n`, with linear-extrapolation ghosts at the faces.
#[inline(always)]
pub(crate) fn one_sided(
    values: &[f64],
    idx: usize,
    k: usize,
    n: usize,
    stride: usize,
    inv_dx: f64,
) -> (f64, f64) {
    let c = values[idx];
    if k == 0 {
        let d = (values[idx + stride] - c) * inv_dx;
        (d, d)
    } else if k + 1 == n {
        let d = (c - values[idx - stride]) * inv_dx;
        (d, d)
    } else {
        (
            (c - values[idx - stride]) * inv_dx,
            (values[idx + stride] - c) * inv_dx,
        )
    }
}

/// Like [`one_sided`] but the ghost beyond a face repeats the face value,
/// so the outward difference is zero. Upwind stencils built on it keep
/// nonnegative weights at the faces too.
#[inline(always)]
pub(crate) fn one_sided_flat(
    values: &[f64],
    idx: usize,
    k: usize,
    n: usize,
    stride: usize,
    inv_dx: f64,
) -> (f64, f64) {
    let c = values[idx];
    let down = if k == 0 { 0.0 } else { (c - values[idx - stride]) * inv_dx };
    let up = if k + 1 == n { 0.0 } else { (values[idx + stride] - c) * inv_dx };
    (down, up)
}

/// Second-order ENO one-sided differences at node `k` of an axis with
/// `n` nodes. Each side takes the smaller-magnitude second difference of
/// its two candidate stencils. Nodes beyond a face come from linear
/// extrapolation, so affine data is still differentiated exactly.
pub(crate) fn eno2_one_sided(
    values: &[f64],
    idx: usize,
    k: usize,
    n: usize,
    stride: usize,
    inv_dx: f64,
) -> (f64, f64) {
    let at = |j: isize| -> f64 {
        let m = k as isize + j;
        if m < 0 {
            let lo = idx - k * stride;
            let (a, b) = (values[lo], values[lo + stride]);
            a + m as f64 * (b - a)
        } else if m >= n as isize {
            let hi = idx + (n - 1 - k) * stride;
            let (a, b) = (values[hi], values[hi - stride]);
            a + (m - n as isize + 1) as f64 * (a - b)
        } else {
            values[(idx as isize + j * stride as isize) as usize]
        }
    };
    let (m2, m1, c, p1, p2) = (at(-2), at(-1), values[idx], at(1), at(2));
    let smaller = |a: f64, b: f64| if a.abs() <= b.abs() { a } else { b };
    let mid = p1 - 2.0 * c + m1;
    let left = smaller(c - 2.0 * m1 + m2, mid);
    let right = smaller(mid, p2 - 2.0 * p1 + c);
    (((c - m1) + 0.5 * left) * inv_dx, ((p1 - c) - 0.5 * right) * inv_dx)
}
