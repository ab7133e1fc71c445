//! Marching-squares level curves on 2-D planes of a field.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Which plane of a field to contour: two free axes, every other axis
/// pinned to a coordinate (reached by interpolation).
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSpec {
    pub axes: [usize; 2],
    pub fixed: Vec<(usize, f64)>,
}

impl SliceSpec {
    pub fn plane(a: usize, b: usize) -> SliceSpec {
        SliceSpec {
            axes: [a, b],
            fixed: Vec::new(),
        }
    }

    pub fn with_fixed(mut self, axis: usize, value: f64) -> SliceSpec {
        self.fixed.push((axis, value));
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Polyline {
    /// Segments, including the closing one for closed curves.
    pub fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.points.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }
}

/// Samples of the plane: `values[i * ny + j]` at `(xs[i], ys[j])`.
pub(crate) struct Plane {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

pub(crate) fn sample_plane(field: &ScalarField, t_index: usize, spec: &SliceSpec) -> Result<Plane> {
    let g = field.grid();
    let d = g.dim();
    let [a, b] = spec.axes;
    if a >= d || b >= d || a == b {
        return Err(Error::InvalidArgument(format!("bad plane axes {a}, {b} for a {d}-D field")));
    }
    let mut point = vec![0.0; d];
    for i in (0..d).filter(|i| *i != a && *i != b) {
        let &(_, v) = spec
            .fixed
            .iter()
            .find(|(ax, _)| *ax == i)
            .ok_or_else(|| Error::InvalidArgument(format!("axis {i} is neither free nor fixed")))?;
        point[i] = v;
    }
    let xs: Vec<f64> = (0..g.axis(a).count).map(|k| g.coord(a, k)).collect();
    let ys: Vec<f64> = (0..g.axis(b).count).map(|k| g.coord(b, k)).collect();
    let mut values = Vec::with_capacity(xs.len() * ys.len());
    for &x in &xs {
        for &y in &ys {
            point[a] = x;
            point[b] = y;
            values.push(field.interpolate_at(t_index, &point)?);
        }
    }
    Ok(Plane { xs, ys, values })
}

/// Level curves of `field` at `level` on the plane `spec`.
///
/// Vertices are placed by linear interpolation along cell edges. Saddle
/// cells are split according to the sign of the cell-centre average.
/// A plane with no crossing yields an empty list.
pub fn extract_contour(
    field: &ScalarField,
    t_index: usize,
    level: f64,
    spec: &SliceSpec,
) -> Result<Vec<Polyline>> {
    let plane = sample_plane(field, t_index, spec)?;
    Ok(march(&plane, level))
}

pub(crate) fn march(plane: &Plane, level: f64) -> Vec<Polyline> {
    let (nx, ny) = (plane.xs.len(), plane.ys.len());
    let v = |i: usize, j: usize| plane.values[i * ny + j];
    // Edge ids: horizontal (i,j)-(i+1,j) -> 2*(i*ny+j); vertical (i,j)-(i,j+1) -> 2*(i*ny+j)+1.
    let h_edge = |i: usize, j: usize| 2 * (i * ny + j);
    let v_edge = |i: usize, j: usize| 2 * (i * ny + j) + 1;

    let mut segments: Vec<(usize, usize)> = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let corners = [v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
            let inside = corners.map(|c| c <= level);
            // Edges in corner order: bottom(0-1), right(1-2), top(3-2), left(0-3).
            let edges = [h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1), v_edge(i, j)];
            let crossing = [
                inside[0] != inside[1],
                inside[1] != inside[2],
                inside[2] != inside[3],
                inside[3] != inside[0],
            ];
            let n = crossing.iter().filter(|c| **c).count();
            if n == 2 {
                let mut it = (0..4).filter(|e| crossing[*e]);
                let (e0, e1) = (it.next().unwrap(), it.next().unwrap());
                segments.push((edges[e0], edges[e1]));
            } else if n == 4 {
                let centre_inside = corners.iter().sum::<f64>() / 4.0 <= level;
                // Corner k is cut off by edges (k-1 mod 4, k) in the order above.
                for k in 0..4 {
                    if inside[k] != centre_inside {
                        segments.push((edges[(k + 3) % 4], edges[k]));
                    }
                }
            }
        }
    }

    let vertex = |edge: usize| -> [f64; 2] {
        let cell = edge / 2;
        let (i, j) = (cell / ny, cell % ny);
        let (i1, j1) = if edge % 2 == 0 { (i + 1, j) } else { (i, j + 1) };
        let (a, b) = (v(i, j), v(i1, j1));
        let s = ((level - a) / (b - a)).clamp(0.0, 1.0);
        [
            plane.xs[i] + s * (plane.xs[i1] - plane.xs[i]),
            plane.ys[j] + s * (plane.ys[j1] - plane.ys[j]),
        ]
    };

    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(k);
        by_edge.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start_seg: usize, start_edge: usize, used: &mut Vec<bool>| -> Polyline {
        let mut edges = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            edges.push(next);
            at = next;
            match by_edge[&at].iter().find(|s| !used[**s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        let closed = edges.len() > 2 && edges.first() == edges.last();
        if closed {
            edges.pop();
        }
        Polyline {
            points: edges.into_iter().map(vertex).collect(),
            closed,
        }
    };

    // Open chains start at edges touched by a single segment (grid border).
    let mut ends: Vec<usize> = by_edge
        .iter()
        .filter(|(_, s)| s.len() == 1)
        .map(|(e, _)| *e)
        .collect();
    ends.sort_unstable();
    for e in ends {
        let s = by_edge[&e][0];
        if !used[s] {
            out.push(walk(s, e, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            out.push(walk(s, segments[s].0, &mut used));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ContourSlice {
    pub fixed: BTreeMap<String, f64>,
    pub polylines: Vec<Vec<[f64; 2]>>,
}

/// JSON export: `{"level":..,"slices":[{"fixed":{..},"polylines":[[[x,y],..]]}]}`.
/// Closed curves repeat their first vertex at the end.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ContourExport {
    pub level: f64,
    pub slices: Vec<ContourSlice>,
}

impl ContourExport {
    pub fn new(level: f64) -> Self {
        ContourExport {
            level,
            slices: Vec::new(),
        }
    }

    pub fn push(&mut self, fixed: BTreeMap<String, f64>, lines: &[Polyline]) {
        let polylines = lines
            .iter()
            .map(|l| {
                let mut pts = l.points.clone();
                if l.closed && !pts.is_empty() {
                    pts.push(pts[0]);
                }
                pts
            })
            .collect();
        self.slices.push(ContourSlice { fixed, polylines });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImplicitSet;
    use crate::grid::Grid;

    #[test]
    fn box_contour_is_a_closed_rectangle() {
        let g = Grid::new(&[(-2.0, 2.0, 41), (-2.0, 2.0, 41)]).unwrap();
        let b = ImplicitSet::axis_box(vec![-1.0, -0.5], vec![1.0, 0.5]).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |p| b.sdf(0.0, p));
        let lines = extract_contour(&f, 0, 0.0, &SliceSpec::plane(0, 1)).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for p in &lines[0].points {
            let on_edge = ((p[0].abs() - 1.0).abs() < 0.1 && p[1].abs() <= 0.6)
                || ((p[1].abs() - 0.5).abs() < 0.1 && p[0].abs() <= 1.1);
            assert!(on_edge, "{p:?}");
        }
    }

    #[test]
    fn circle_vertices_within_a_cell_diagonal() {
        let g = Grid::new(&[(-2.0, 2.0, 201), (-2.0, 2.0, 201)]).unwrap();
        let f = ScalarField::from_fn(g.clone(), 0.0, |p| p[0] * p[0] + p[1] * p[1] - 1.0);
        let lines = extract_contour(&f, 0, 0.0, &SliceSpec::plane(0, 1)).unwrap();
        assert_eq!(lines.len(), 1);
        let diag = (g.spacings()[0].powi(2) + g.spacings()[1].powi(2)).sqrt();
        let worst = lines[0]
            .points
            .iter()
            .map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < diag, "worst radius error {worst}");
    }

    #[test]
    fn constant_field_has_no_contour() {
        let g = Grid::new(&[(0.0, 1.0, 5), (0.0, 1.0, 5)]).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |_| 3.0);
        assert!(extract_contour(&f, 0, 0.0, &SliceSpec::plane(0, 1)).unwrap().is_empty());
    }

    #[test]
    fn open_contour_on_half_plane() {
        let g = Grid::new(&[(-1.0, 1.0, 11), (0.0, 1.0, 6)]).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |p| p[0] - 0.05);
        let lines = extract_contour(&f, 0, 0.0, &SliceSpec::plane(0, 1)).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        assert_eq!(lines[0].points.len(), 6);
        assert!(lines[0].points.iter().all(|p| (p[0] - 0.05).abs() < 1e-12));
    }

    #[test]
    fn saddle_uses_centre_value() {
        let g = Grid::new(&[(0.0, 1.0, 3), (0.0, 1.0, 3)]).unwrap();
        // Corner cell (0,0)-(1,1) alternates sign; its centre average is 0.
        let mut vals = vec![1.0; 9];
        vals[3] = -1.0; // node (1,0)
        vals[1] = -1.0; // node (0,1)
        let f = ScalarField::single(g, 0.0, vals).unwrap();
        let corner_cut = |lines: &[Polyline]| {
            lines.iter().any(|l| {
                l.points.len() == 2
                    && l.points.iter().any(|p| p[0] == 0.25 && p[1] == 0.0)
                    && l.points.iter().any(|p| p[0] == 0.0 && p[1] == 0.25)
            })
        };
        // Centre counts as inside at level 0: the outside corner (0,0) is cut off.
        let at_zero = extract_contour(&f, 0, 0.0, &SliceSpec::plane(0, 1)).unwrap();
        assert!(corner_cut(&at_zero));
        // Just below 0 the centre is outside and the inside corners are isolated instead.
        let below = extract_contour(&f, 0, -1e-9, &SliceSpec::plane(0, 1)).unwrap();
        assert!(!corner_cut(&below));
    }

    #[test]
    fn slices_of_a_3d_field() {
        let g = Grid::new(&[(-2.0, 2.0, 41), (-2.0, 2.0, 41), (0.0, 1.0, 11)]).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |p| p[0].abs().max(p[1].abs()) - 0.5 - p[2]);
        let spec = SliceSpec::plane(0, 1).with_fixed(2, 0.45);
        let lines = extract_contour(&f, 0, 0.0, &spec).unwrap();
        assert_eq!(lines.len(), 1);
        for p in &lines[0].points {
            assert!((p[0].abs().max(p[1].abs()) - 0.95).abs() < 1e-9);
        }
        assert!(extract_contour(&f, 0, 0.0, &SliceSpec::plane(0, 1)).is_err());
    }
}
