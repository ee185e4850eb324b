//! Domains and the bounded computational regions cut out of them.
//!
//! A `DomainSpec` names the geometry (possibly unbounded). All solves happen
//! on a bounded `Region`: either the domain itself, a truncation Ω ∩ B_r, a
//! truncated tail Ω ∩ (B_R ∖ B̄_r), or an inflation Ω + B_δ. Balls are always
//! centered at the origin. Regions carry exact membership predicates; curved
//! boundaries are later realized as mask staircases on tensor grids.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Interval { a: f64, b: f64 },
    /// (a, +∞)
    HalfLine { a: f64 },
    FullLine,
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disk { cx: f64, cy: f64, r: f64 },
    Annulus { cx: f64, cy: f64, r_in: f64, r_out: f64 },
    FullPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub geometry: Geometry,
}

/// Bounded 2D base shapes a region can be cut from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AreaBase {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disk { cx: f64, cy: f64, r: f64 },
    Annulus { cx: f64, cy: f64, r_in: f64, r_out: f64 },
}

/// A bounded region ready for gridding.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// 1D: disjoint open intervals, sorted.
    Segments(Vec<(f64, f64)>),
    /// 2D: base shape, optionally intersected with {|p| < out} and
    /// {|p| > inner} (both balls centered at the origin).
    Area {
        base: AreaBase,
        clip_out: Option<f64>,
        clip_in: Option<f64>,
    },
}

impl DomainSpec {
    pub fn new(geometry: Geometry) -> Self {
        DomainSpec { geometry }
    }

    pub fn dim(&self) -> usize {
        match self.geometry {
            Geometry::Interval { .. } | Geometry::HalfLine { .. } | Geometry::FullLine => 1,
            _ => 2,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(
            self.geometry,
            Geometry::Interval { .. }
                | Geometry::Rectangle { .. }
                | Geometry::Disk { .. }
                | Geometry::Annulus { .. }
        )
    }

    /// Distance from the origin beyond which B_r covers the whole domain.
    pub fn circumradius(&self) -> Option<f64> {
        match self.geometry {
            Geometry::Interval { a, b } => Some(a.abs().max(b.abs())),
            Geometry::Rectangle { x0, y0, x1, y1 } => {
                let mut m: f64 = 0.0;
                for &cx in &[x0, x1] {
                    for &cy in &[y0, y1] {
                        m = m.max((cx * cx + cy * cy).sqrt());
                    }
                }
                Some(m)
            }
            Geometry::Disk { cx, cy, r } => Some((cx * cx + cy * cy).sqrt() + r),
            Geometry::Annulus { cx, cy, r_out, .. } => Some((cx * cx + cy * cy).sqrt() + r_out),
            _ => None,
        }
    }

    /// Does the domain contain `p` (strict interior)?
    pub fn contains(&self, p: &[f64]) -> bool {
        let x = p[0];
        match self.geometry {
            Geometry::Interval { a, b } => a < x && x < b,
            Geometry::HalfLine { a } => x > a,
            Geometry::FullLine => true,
            Geometry::Rectangle { x0, y0, x1, y1 } => {
                let y = p[1];
                x0 < x && x < x1 && y0 < y && y < y1
            }
            Geometry::Disk { cx, cy, r } => {
                let y = p[1];
                (x - cx).powi(2) + (y - cy).powi(2) < r * r
            }
            Geometry::Annulus { cx, cy, r_in, r_out } => {
                let y = p[1];
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                r_in * r_in < d2 && d2 < r_out * r_out
            }
            Geometry::FullPlane => true,
        }
    }

    /// Ω ∩ B_r as a bounded region. For bounded domains a ball beyond the
    /// circumradius leaves the domain untouched (no clip is recorded, so
    /// rectangles stay exact).
    pub fn truncation(&self, r: f64) -> Result<Region> {
        if r <= 0.0 {
            return Err(Error::PreconditionFailed(format!(
                "truncation radius must be positive, got {r}"
            )));
        }
        match self.geometry {
            Geometry::Interval { a, b } => segments_1d(&[(a.max(-r), b.min(r))]),
            Geometry::HalfLine { a } => segments_1d(&[(a.max(-r), r)]),
            Geometry::FullLine => segments_1d(&[(-r, r)]),
            Geometry::FullPlane => Ok(Region::Area {
                base: AreaBase::Disk { cx: 0.0, cy: 0.0, r },
                clip_out: None,
                clip_in: None,
            }),
            Geometry::Rectangle { x0, y0, x1, y1 } => Ok(Region::Area {
                base: AreaBase::Rect { x0, y0, x1, y1 },
                clip_out: clip_if_cutting(self, r),
                clip_in: None,
            }),
            Geometry::Disk { cx, cy, r: rr } => Ok(Region::Area {
                base: AreaBase::Disk { cx, cy, r: rr },
                clip_out: clip_if_cutting(self, r),
                clip_in: None,
            }),
            Geometry::Annulus { cx, cy, r_in, r_out } => Ok(Region::Area {
                base: AreaBase::Annulus { cx, cy, r_in, r_out },
                clip_out: clip_if_cutting(self, r),
                clip_in: None,
            }),
        }
    }

    /// Ω ∩ (B_R ∖ B̄_r): the truncated tail used for tail eigenvalues and
    /// tail coefficient suprema.
    pub fn tail_truncated(&self, r: f64, big_r: f64) -> Result<Region> {
        if !(r > 0.0 && big_r > r) {
            return Err(Error::PreconditionFailed(format!(
                "tail radii must satisfy 0 < r < R, got r={r}, R={big_r}"
            )));
        }
        if let Some(c) = self.circumradius() {
            if r >= c {
                return Err(Error::EmptyTail);
            }
        }
        match self.geometry {
            Geometry::Interval { a, b } => {
                segments_1d(&[(a.max(-big_r), b.min(-r)), (a.max(r), b.min(big_r))])
            }
            Geometry::HalfLine { a } => {
                segments_1d(&[(a.max(-big_r), -r), (a.max(r), big_r)])
            }
            Geometry::FullLine => segments_1d(&[(-big_r, -r), (r, big_r)]),
            Geometry::FullPlane => Ok(Region::Area {
                base: AreaBase::Annulus { cx: 0.0, cy: 0.0, r_in: r, r_out: big_r },
                clip_out: None,
                clip_in: None,
            }),
            Geometry::Rectangle { x0, y0, x1, y1 } => Ok(Region::Area {
                base: AreaBase::Rect { x0, y0, x1, y1 },
                clip_out: clip_if_cutting(self, big_r),
                clip_in: Some(r),
            }),
            Geometry::Disk { cx, cy, r: rr } => Ok(Region::Area {
                base: AreaBase::Disk { cx, cy, r: rr },
                clip_out: clip_if_cutting(self, big_r),
                clip_in: Some(r),
            }),
            Geometry::Annulus { cx, cy, r_in, r_out } => Ok(Region::Area {
                base: AreaBase::Annulus { cx, cy, r_in, r_out },
                clip_out: clip_if_cutting(self, big_r),
                clip_in: Some(r),
            }),
        }
    }

    /// Ω + B_δ for δ > 0 (used by the exterior approach Ω_n = Ω + B_{1/n});
    /// δ < 0 gives the interior offset Ω^{|δ|}. Bounded domains only.
    pub fn inflate(&self, delta: f64) -> Result<DomainSpec> {
        let bad = |what: &str| {
            Err(Error::DegenerateDomain(format!(
                "inflating by {delta} collapses the {what}"
            )))
        };
        let g = match self.geometry {
            Geometry::Interval { a, b } => {
                if b + delta <= a - delta {
                    return bad("interval");
                }
                Geometry::Interval { a: a - delta, b: b + delta }
            }
            Geometry::Rectangle { x0, y0, x1, y1 } => {
                if x1 + delta <= x0 - delta || y1 + delta <= y0 - delta {
                    return bad("rectangle");
                }
                Geometry::Rectangle {
                    x0: x0 - delta,
                    y0: y0 - delta,
                    x1: x1 + delta,
                    y1: y1 + delta,
                }
            }
            Geometry::Disk { cx, cy, r } => {
                if r + delta <= 0.0 {
                    return bad("disk");
                }
                Geometry::Disk { cx, cy, r: r + delta }
            }
            Geometry::Annulus { cx, cy, r_in, r_out } => {
                let r_in = (r_in - delta).max(0.0);
                let r_out = r_out + delta;
                if r_out <= r_in {
                    return bad("annulus");
                }
                Geometry::Annulus { cx, cy, r_in, r_out }
            }
            _ => {
                return Err(Error::PreconditionFailed(
                    "inflate is defined for bounded domains only".into(),
                ))
            }
        };
        Ok(DomainSpec { geometry: g })
    }

    /// Ω^ε = {x : dist(x, ∂Ω) > ε}.
    pub fn interior_offset(&self, eps: f64) -> Result<DomainSpec> {
        if eps < 0.0 {
            return Err(Error::PreconditionFailed("interior offset needs eps >= 0".into()));
        }
        self.inflate(-eps)
    }

    /// The whole bounded domain as a region.
    pub fn as_region(&self) -> Result<Region> {
        if !self.is_bounded() {
            return Err(Error::PreconditionFailed(
                "unbounded domain has no direct region; truncate first".into(),
            ));
        }
        // circumradius + 1 never cuts, so this is exact
        self.truncation(self.circumradius().unwrap() + 1.0)
    }
}

fn clip_if_cutting(dom: &DomainSpec, r: f64) -> Option<f64> {
    match dom.circumradius() {
        Some(c) if r >= c => None,
        _ => Some(r),
    }
}

fn segments_1d(raw: &[(f64, f64)]) -> Result<Region> {
    let mut segs: Vec<(f64, f64)> = raw.iter().copied().filter(|(a, b)| b > a).collect();
    segs.sort_by(|p, q| p.0.total_cmp(&q.0));
    if segs.is_empty() {
        return Err(Error::EmptyTail);
    }
    Ok(Region::Segments(segs))
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Segments(_) => 1,
            Region::Area { .. } => 2,
        }
    }

    /// Strict-interior membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Region::Segments(segs) => {
                let x = p[0];
                segs.iter().any(|&(a, b)| a < x && x < b)
            }
            Region::Area { base, clip_out, clip_in } => {
                let (x, y) = (p[0], p[1]);
                let inside_base = match *base {
                    AreaBase::Rect { x0, y0, x1, y1 } => x0 < x && x < x1 && y0 < y && y < y1,
                    AreaBase::Disk { cx, cy, r } => {
                        (x - cx).powi(2) + (y - cy).powi(2) < r * r
                    }
                    AreaBase::Annulus { cx, cy, r_in, r_out } => {
                        let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                        r_in * r_in < d2 && d2 < r_out * r_out
                    }
                };
                let d2 = x * x + y * y;
                inside_base
                    && clip_out.map_or(true, |r| d2 < r * r)
                    && clip_in.map_or(true, |r| d2 > r * r)
            }
        }
    }

    /// Per-axis bounding box.
    pub fn bbox(&self) -> Vec<(f64, f64)> {
        match self {
            Region::Segments(segs) => {
                vec![(segs[0].0, segs.last().unwrap().1)]
            }
            Region::Area { base, clip_out, .. } => {
                let (mut xa, mut xb, mut ya, mut yb) = match *base {
                    AreaBase::Rect { x0, y0, x1, y1 } => (x0, x1, y0, y1),
                    AreaBase::Disk { cx, cy, r } => (cx - r, cx + r, cy - r, cy + r),
                    AreaBase::Annulus { cx, cy, r_out, .. } => {
                        (cx - r_out, cx + r_out, cy - r_out, cy + r_out)
                    }
                };
                if let Some(r) = clip_out {
                    xa = xa.max(-r);
                    xb = xb.min(*r);
                    ya = ya.max(-r);
                    yb = yb.min(*r);
                }
                vec![(xa, xb), (ya, yb)]
            }
        }
    }

    /// Axis coordinates the grid must hit exactly: segment endpoints, shape
    /// edges, extreme points of clip circles.
    pub fn axis_criticals(&self, axis: usize) -> Vec<f64> {
        match self {
            Region::Segments(segs) => {
                let mut v = Vec::new();
                for &(a, b) in segs {
                    v.push(a);
                    v.push(b);
                }
                v
            }
            Region::Area { base, clip_out, clip_in } => {
                let mut v = Vec::new();
                match *base {
                    AreaBase::Rect { x0, y0, x1, y1 } => {
                        if axis == 0 {
                            v.extend([x0, x1]);
                        } else {
                            v.extend([y0, y1]);
                        }
                    }
                    AreaBase::Disk { cx, cy, r } => {
                        let c = if axis == 0 { cx } else { cy };
                        v.extend([c - r, c, c + r]);
                    }
                    AreaBase::Annulus { cx, cy, r_in, r_out } => {
                        let c = if axis == 0 { cx } else { cy };
                        v.extend([c - r_out, c - r_in, c, c + r_in, c + r_out]);
                    }
                }
                for r in [clip_out, clip_in].into_iter().flatten() {
                    v.extend([-r, 0.0, *r]);
                }
                v
            }
        }
    }

    /// Deterministic interior sample points (about `n` of them) for
    /// coefficient suprema and admissibility scans.
    pub fn interior_samples(&self, n: usize) -> Vec<Vec<f64>> {
        let n = n.max(8);
        match self {
            Region::Segments(segs) => {
                let total: f64 = segs.iter().map(|(a, b)| b - a).sum();
                let mut out = Vec::new();
                for &(a, b) in segs {
                    let k = ((b - a) / total * n as f64).ceil() as usize;
                    let k = k.max(4);
                    for i in 0..k {
                        // cell midpoints: stay strictly interior
                        let x = a + (b - a) * (i as f64 + 0.5) / k as f64;
                        out.push(vec![x]);
                    }
                }
                out
            }
            Region::Area { .. } => {
                let bb = self.bbox();
                let side = (n as f64).sqrt().ceil() as usize;
                let mut out = Vec::new();
                for i in 0..side {
                    for j in 0..side {
                        let x = bb[0].0 + (bb[0].1 - bb[0].0) * (i as f64 + 0.5) / side as f64;
                        let y = bb[1].0 + (bb[1].1 - bb[1].0) * (j as f64 + 0.5) / side as f64;
                        if self.contains(&[x, y]) {
                            out.push(vec![x, y]);
                        }
                    }
                }
                out
            }
        }
    }
}

/// Sample points of Ω on the shell {0.8 r ≤ |x| ≤ r}, used by growth checks
/// and decay-rate quotients. Returns an empty vector if the shell misses Ω.
pub fn shell_samples(dom: &DomainSpec, r: f64, n: usize) -> Vec<Vec<f64>> {
    let n = n.max(8);
    let mut out = Vec::new();
    match dom.dim() {
        1 => {
            for i in 0..n {
                let t = 0.8 * r + 0.2 * r * (i as f64 + 0.5) / n as f64;
                for x in [t, -t] {
                    if dom.contains(&[x]) {
                        out.push(vec![x]);
                    }
                }
            }
        }
        _ => {
            let rings = 8;
            let per_ring = (n / rings).max(16);
            for i in 0..rings {
                let rho = 0.8 * r + 0.2 * r * (i as f64 + 0.5) / rings as f64;
                for j in 0..per_ring {
                    let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / per_ring as f64;
                    let p = vec![rho * th.cos(), rho * th.sin()];
                    if dom.contains(&p) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncations_and_tails_of_the_line() {
        let dom = DomainSpec::new(Geometry::FullLine);
        assert_eq!(dom.truncation(3.0).unwrap(), Region::Segments(vec![(-3.0, 3.0)]));
        let tail = dom.tail_truncated(1.0, 5.0).unwrap();
        assert_eq!(tail, Region::Segments(vec![(-5.0, -1.0), (1.0, 5.0)]));
        assert!(tail.contains(&[2.0]));
        assert!(!tail.contains(&[0.5]));
        assert!(!tail.contains(&[1.0])); // boundary excluded
    }

    #[test]
    fn bounded_domains_report_empty_tails() {
        let dom = DomainSpec::new(Geometry::Interval { a: 0.0, b: 1.0 });
        assert!(matches!(dom.tail_truncated(2.0, 8.0), Err(Error::EmptyTail)));
        // r inside the interval still leaves a right piece
        let t = dom.tail_truncated(0.5, 8.0).unwrap();
        assert_eq!(t, Region::Segments(vec![(0.5, 1.0)]));
    }

    #[test]
    fn rectangle_truncation_stays_exact_beyond_circumradius() {
        let dom = DomainSpec::new(Geometry::Rectangle { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 });
        match dom.truncation(10.0).unwrap() {
            Region::Area { clip_out, .. } => assert!(clip_out.is_none()),
            r => panic!("unexpected region {r:?}"),
        }
    }

    #[test]
    fn inflation_grows_and_offset_shrinks() {
        let dom = DomainSpec::new(Geometry::Interval { a: 0.0, b: 1.0 });
        let grown = dom.inflate(0.5).unwrap();
        assert_eq!(grown.geometry, Geometry::Interval { a: -0.5, b: 1.5 });
        let shrunk = dom.interior_offset(0.25).unwrap();
        assert_eq!(shrunk.geometry, Geometry::Interval { a: 0.25, b: 0.75 });
        assert!(dom.interior_offset(0.6).is_err());
    }

    #[test]
    fn plane_truncation_is_a_disk() {
        let dom = DomainSpec::new(Geometry::FullPlane);
        let reg = dom.truncation(2.0).unwrap();
        assert!(reg.contains(&[1.0, 1.0]));
        assert!(!reg.contains(&[2.0, 1.0]));
        assert_eq!(reg.bbox(), vec![(-2.0, 2.0), (-2.0, 2.0)]);
    }

    #[test]
    fn shell_sampling_respects_the_domain() {
        let dom = DomainSpec::new(Geometry::HalfLine { a: 0.0 });
        let pts = shell_samples(&dom, 4.0, 32);
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| p[0] >= 3.2 && p[0] <= 4.0));
    }
}
