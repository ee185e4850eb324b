//! Tensor-product grids over a region, with Dirichlet exterior masking.
//!
//! A grid is a per-axis sorted list of coordinates plus the subset of tensor
//! nodes strictly inside the region. Base spacing is uniform at the requested
//! step; coordinates where coefficients kink (operator breakpoints) and where
//! the region boundary crosses an axis are inserted as extra nodes, and base
//! nodes closer than a quarter step to an inserted node are dropped so the
//! spacing never collapses. The resulting maximum spacing is at most 1.25×
//! the requested step.

use crate::domain::Region;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Grid {
    pub dim: usize,
    /// Sorted node coordinates per axis.
    pub axes: Vec<Vec<f64>>,
    /// Interior (strictly inside the region) tensor nodes, as per-axis indices.
    pub nodes: Vec<Vec<usize>>,
    /// Flat tensor index -> interior index (usize::MAX if exterior).
    pub index: Vec<usize>,
    /// Coordinates of interior nodes.
    pub points: Vec<Vec<f64>>,
    /// Requested step.
    pub h: f64,
    /// Largest spacing actually present on any axis.
    pub max_spacing: f64,
}

impl Grid {
    pub fn n_interior(&self) -> usize {
        self.points.len()
    }

    fn flat(&self, idx: &[usize]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[1] * self.axes[0].len() + idx[0],
        }
    }

    /// Interior index of the neighbor of node `k` along `axis` in direction
    /// `dir` (−1 or +1), if that tensor node is interior.
    pub fn neighbor(&self, k: usize, axis: usize, dir: isize) -> Option<usize> {
        let mut idx = self.nodes[k].clone();
        let i = idx[axis] as isize + dir;
        if i < 0 || i as usize >= self.axes[axis].len() {
            return None;
        }
        idx[axis] = i as usize;
        let v = self.index[self.flat(&idx)];
        (v != usize::MAX).then_some(v)
    }

    /// Spacings (h_minus, h_plus) around node `k` along `axis`.
    pub fn spacings(&self, k: usize, axis: usize) -> (f64, f64) {
        let ax = &self.axes[axis];
        let i = self.nodes[k][axis];
        (ax[i] - ax[i - 1], ax[i + 1] - ax[i])
    }

    /// Tensor-product trapezoidal weight of interior node `k`:
    /// ∏ over axes of (h_minus + h_plus)/2.
    pub fn weight(&self, k: usize) -> f64 {
        (0..self.dim)
            .map(|d| {
                let (hm, hp) = self.spacings(k, d);
                0.5 * (hm + hp)
            })
            .product()
    }
}

/// Build one axis: uniform base points on [lo, hi] at step <= h, plus the
/// given extra coordinates, with base points crowding an extra point removed.
fn build_axis(lo: f64, hi: f64, h: f64, extra: &[f64]) -> Result<Vec<f64>> {
    let extent = hi - lo;
    if !(extent > 0.0) || !(h > 0.0) {
        return Err(Error::DegenerateDomain(format!(
            "axis extent {extent} with step {h}"
        )));
    }
    let n = (extent / h).ceil() as usize;
    if n < 2 {
        return Err(Error::DegenerateDomain(format!(
            "axis extent {extent} supports fewer than 3 nodes at step {h}"
        )));
    }
    let base_h = extent / n as f64;
    let snap = 1e-12 * extent.max(1.0);
    let mut inserted: Vec<f64> = extra
        .iter()
        .copied()
        .filter(|&x| x > lo + snap && x < hi - snap)
        .collect();
    inserted.sort_by(|p, q| p.partial_cmp(q).unwrap());
    inserted.dedup_by(|p, q| (*p - *q).abs() <= snap);

    let mut axis = Vec::with_capacity(n + 1 + inserted.len());
    for k in 0..=n {
        let x = if k == n { hi } else { lo + k as f64 * base_h };
        let crowded = k != 0
            && k != n
            && inserted.iter().any(|&c| (x - c).abs() < 0.25 * base_h);
        if !crowded {
            axis.push(x);
        }
    }
    axis.extend_from_slice(&inserted);
    axis.sort_by(|p, q| p.partial_cmp(q).unwrap());
    axis.dedup_by(|p, q| (*p - *q).abs() <= snap);
    Ok(axis)
}

/// Build a grid over `region` at step `h`, inserting `breakpoints` on every
/// axis where they land inside the axis range.
pub fn build_grid(region: &Region, h: f64, breakpoints: &[f64]) -> Result<Grid> {
    let dim = region.dim();
    let bbox = region.bbox();
    let mut axes = Vec::with_capacity(dim);
    let mut max_spacing = 0.0f64;
    for (d, &(lo, hi)) in bbox.iter().enumerate() {
        let mut extra = region.axis_criticals(d);
        extra.extend_from_slice(breakpoints);
        let axis = build_axis(lo, hi, h, &extra)?;
        for w in axis.windows(2) {
            max_spacing = max_spacing.max(w[1] - w[0]);
        }
        axes.push(axis);
    }

    let mut nodes = Vec::new();
    let mut points = Vec::new();
    let counts: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();
    let mut index = vec![usize::MAX; total];
    match dim {
        1 => {
            for (i, &x) in axes[0].iter().enumerate() {
                if region.contains(&[x]) {
                    index[i] = points.len();
                    nodes.push(vec![i]);
                    points.push(vec![x]);
                }
            }
        }
        2 => {
            for (j, &y) in axes[1].iter().enumerate() {
                for (i, &x) in axes[0].iter().enumerate() {
                    if region.contains(&[x, y]) {
                        index[j * counts[0] + i] = points.len();
                        nodes.push(vec![i, j]);
                        points.push(vec![x, y]);
                    }
                }
            }
        }
        d => unreachable!("unsupported dimension {d}"),
    }
    if points.is_empty() {
        return Err(Error::DegenerateDomain(format!(
            "no interior nodes at step {h}"
        )));
    }
    // Interior nodes must have axis neighbors inside the axis arrays so the
    // three-point stencil is well formed; boundary coordinates always sit at
    // axis positions (bbox ends or inserted criticals), so a node at an axis
    // end can only be exterior. Guard anyway.
    for nd in &nodes {
        for d in 0..dim {
            if nd[d] == 0 || nd[d] + 1 == axes[d].len() {
                return Err(Error::DegenerateDomain(
                    "interior node at axis end; region boundary not resolved".into(),
                ));
            }
        }
    }
    Ok(Grid { dim, axes, nodes, index, points, h, max_spacing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainSpec, Geometry};

    fn interval(a: f64, b: f64) -> Region {
        DomainSpec::new(Geometry::Interval { a, b }).as_region().unwrap()
    }

    #[test]
    fn unit_interval_quarter_step() {
        let g = build_grid(&interval(0.0, 1.0), 0.25, &[]).unwrap();
        assert_eq!(g.axes[0], vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.n_interior(), 3);
        assert_eq!(g.points[1], vec![0.5]);
        assert_eq!(g.neighbor(1, 0, -1), Some(0));
        assert_eq!(g.neighbor(0, 0, -1), None); // x=0 eliminated
        assert_eq!(g.spacings(0, 0), (0.25, 0.25));
    }

    #[test]
    fn breakpoints_are_grid_nodes_and_crowding_is_resolved() {
        let g = build_grid(&interval(0.0, 1.0), 0.25, &[0.3]).unwrap();
        assert!(g.axes[0].iter().any(|&x| x == 0.3));
        // 0.25 is within a quarter step of 0.3 and must have been dropped
        assert!(!g.axes[0].iter().any(|&x| x == 0.25));
        assert!(g.max_spacing <= 1.25 * 0.25 + 1e-15);
    }

    #[test]
    fn thin_domain_is_degenerate() {
        let r = DomainSpec::new(Geometry::Disk { cx: 0.0, cy: 0.0, r: 0.1 }).as_region().unwrap();
        match build_grid(&r, 1.0, &[]) {
            Err(Error::DegenerateDomain(_)) => {}
            other => panic!("expected DegenerateDomain, got {other:?}"),
        }
    }

    #[test]
    fn disk_grid_masks_corners() {
        let r = DomainSpec::new(Geometry::Disk { cx: 0.0, cy: 0.0, r: 1.0 }).as_region().unwrap();
        let g = build_grid(&r, 0.05, &[]).unwrap();
        assert!(g.n_interior() > 0);
        for p in &g.points {
            assert!(p[0] * p[0] + p[1] * p[1] < 1.0);
        }
        // trapezoidal weights approach the disk area from inside; the
        // staircase boundary forfeits roughly a half-cell-wide ring
        let area: f64 = (0..g.n_interior()).map(|k| g.weight(k)).sum();
        let pi = std::f64::consts::PI;
        assert!(area < pi && area > pi - 2.0 * pi * 0.05, "area {area}");
    }

    #[test]
    fn two_segments_stay_disconnected() {
        let r = Region::Segments(vec![(-2.0, -1.0), (1.0, 2.0)]);
        let g = build_grid(&r, 0.25, &[]).unwrap();
        for p in &g.points {
            assert!(p[0].abs() > 1.0 && p[0].abs() < 2.0);
        }
        // nodes at the inner endpoints exist on the axis but are exterior
        assert!(g.axes[0].iter().any(|&x| x == -1.0));
        assert!(g.axes[0].iter().any(|&x| x == 1.0));
    }

    #[test]
    fn annulus_grid_respects_both_radii() {
        let r = DomainSpec::new(Geometry::Annulus {
            cx: 0.0,
            cy: 0.0,
            r_in: 0.5,
            r_out: 1.5,
        })
        .as_region().unwrap();
        let g = build_grid(&r, 0.1, &[]).unwrap();
        for p in &g.points {
            let d = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!(d > 0.5 && d < 1.5);
        }
    }
}
