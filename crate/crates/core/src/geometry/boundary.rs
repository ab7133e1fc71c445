//! Boundary discrepancy between two sets given as zero sublevel sets.
//!
//! Points are drawn uniformly by arc length from the zero contour of the
//! reference field. Each point is scored by its distance to the zero
//! contour of the candidate, i.e. by the signed distance function of the
//! candidate set evaluated there. All lengths are measured after scaling
//! each axis by `axis_scale`, so anisotropic domains can be compared in
//! normalized units.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::contour::{extract_contour, Polyline, SliceSpec};
use crate::error::{Error, Result};
use crate::grid::ScalarField;

#[derive(Clone, Debug)]
pub struct BoundaryErrorOptions {
    pub sample_count: usize,
    pub axis_scale: [f64; 2],
    pub seed: u64,
    pub reference_stamp: usize,
    pub candidate_stamp: usize,
}

impl Default for BoundaryErrorOptions {
    fn default() -> Self {
        BoundaryErrorOptions {
            sample_count: 50_000,
            axis_scale: [1.0, 1.0],
            seed: 0x5eed,
            reference_stamp: 0,
            candidate_stamp: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryError {
    pub mean: f64,
    pub max: f64,
}

fn scaled(lines: &[Polyline], s: [f64; 2]) -> Vec<([f64; 2], [f64; 2])> {
    lines
        .iter()
        .flat_map(|l| l.segments())
        .map(|(a, b)| ([a[0] * s[0], a[1] * s[1]], [b[0] * s[0], b[1] * s[1]]))
        .collect()
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (ex, ey) = (a[0] + s * dx - p[0], a[1] + s * dy - p[1]);
    (ex * ex + ey * ey).sqrt()
}

/// Mean and maximum distance from the reference boundary to the candidate
/// boundary. Both fields must be 2-D.
pub fn boundary_error(
    reference: &ScalarField,
    candidate: &ScalarField,
    opts: &BoundaryErrorOptions,
) -> Result<BoundaryError> {
    if reference.grid().dim() != 2 || candidate.grid().dim() != 2 {
        return Err(Error::InvalidArgument("boundary error compares 2-D fields".into()));
    }
    if opts.sample_count == 0 {
        return Err(Error::InvalidArgument("sample_count must be positive".into()));
    }
    let plane = SliceSpec::plane(0, 1);
    let ref_lines = extract_contour(reference, opts.reference_stamp, 0.0, &plane)?;
    let cand_lines = extract_contour(candidate, opts.candidate_stamp, 0.0, &plane)?;
    let ref_segs = scaled(&ref_lines, opts.axis_scale);
    let cand_segs = scaled(&cand_lines, opts.axis_scale);
    if ref_segs.is_empty() {
        return Err(Error::EmptySet("reference zero contour is empty".into()));
    }
    if cand_segs.is_empty() {
        return Err(Error::EmptySet("candidate zero contour is empty".into()));
    }

    let mut cumulative = Vec::with_capacity(ref_segs.len());
    let mut total = 0.0;
    for (a, b) in &ref_segs {
        total += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::EmptySet("reference zero contour has no length".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    for _ in 0..opts.sample_count {
        let u = rng.gen::<f64>() * total;
        let k = cumulative.partition_point(|c| *c < u).min(ref_segs.len() - 1);
        let (a, b) = ref_segs[k];
        let start = if k == 0 { 0.0 } else { cumulative[k - 1] };
        let len = cumulative[k] - start;
        let s = if len > 0.0 { ((u - start) / len).clamp(0.0, 1.0) } else { 0.0 };
        let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        let d = cand_segs
            .iter()
            .map(|(c, e)| point_segment_distance(p, *c, *e))
            .fold(f64::INFINITY, f64::min);
        sum += d;
        worst = worst.max(d);
    }
    Ok(BoundaryError {
        mean: sum / opts.sample_count as f64,
        max: worst,
    })
}
