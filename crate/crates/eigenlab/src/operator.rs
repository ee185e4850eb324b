//! Operator specifications: Lu = tr(a D²u) + b·∇u + c u in non-divergence
//! form, or Lu = div(a ∇u) + c u in divergence (self-adjoint) form.
//!
//! Diffusion is scalar in 1D and diagonal (a_xx, a_yy) in 2D; cross terms are
//! out of scope. Coefficients are closed-form fields; `breakpoints` lists the
//! axis coordinates where any coefficient is merely piecewise-smooth, so that
//! grids can place nodes there and a.e. checks can skirt the kinks.

use crate::domain::{shell_samples, DomainSpec, Region};
use crate::error::{Error, Result};
use crate::expr::{eval_field, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorForm {
    NonDivergence,
    DivergenceSelfAdjoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub dim: usize,
    /// One entry in 1D; (a_xx, a_yy) in 2D.
    pub a: Vec<ScalarField>,
    /// Drift; one entry per dimension. Must be zero fields in divergence form.
    pub b: Vec<ScalarField>,
    pub c: ScalarField,
    pub form: OperatorForm,
    pub breakpoints: Vec<f64>,
}

impl OperatorSpec {
    /// 1D non-divergence operator a u'' + b u' + c u.
    pub fn new_1d(a: ScalarField, b: ScalarField, c: ScalarField) -> Self {
        OperatorSpec {
            dim: 1,
            a: vec![a],
            b: vec![b],
            c,
            form: OperatorForm::NonDivergence,
            breakpoints: Vec::new(),
        }
    }

    /// 1D non-divergence operator with coefficients parsed from strings.
    pub fn parse_1d(a: &str, b: &str, c: &str) -> Result<Self> {
        use crate::expr::parse_field;
        Ok(Self::new_1d(parse_field(a, 1)?, parse_field(b, 1)?, parse_field(c, 1)?))
    }

    /// 1D self-adjoint operator (a u')' + c u.
    pub fn new_1d_self_adjoint(a: ScalarField, c: ScalarField) -> Self {
        OperatorSpec {
            dim: 1,
            a: vec![a],
            b: vec![ScalarField::constant(0.0)],
            c,
            form: OperatorForm::DivergenceSelfAdjoint,
            breakpoints: Vec::new(),
        }
    }

    /// 1D self-adjoint operator with coefficients parsed from strings.
    pub fn parse_1d_self_adjoint(a: &str, c: &str) -> Result<Self> {
        use crate::expr::parse_field;
        Ok(Self::new_1d_self_adjoint(parse_field(a, 1)?, parse_field(c, 1)?))
    }

    /// 2D non-divergence operator a_xx u_xx + a_yy u_yy + b·∇u + c u.
    pub fn new_2d(
        a_xx: ScalarField,
        a_yy: ScalarField,
        b_x: ScalarField,
        b_y: ScalarField,
        c: ScalarField,
    ) -> Self {
        OperatorSpec {
            dim: 2,
            a: vec![a_xx, a_yy],
            b: vec![b_x, b_y],
            c,
            form: OperatorForm::NonDivergence,
            breakpoints: Vec::new(),
        }
    }

    /// 2D non-divergence operator with coefficients parsed from strings.
    pub fn parse_2d(a_xx: &str, a_yy: &str, b_x: &str, b_y: &str, c: &str) -> Result<Self> {
        use crate::expr::parse_field;
        Ok(Self::new_2d(
            parse_field(a_xx, 2)?,
            parse_field(a_yy, 2)?,
            parse_field(b_x, 2)?,
            parse_field(b_y, 2)?,
            parse_field(c, 2)?,
        ))
    }

    pub fn with_breakpoints(mut self, bps: &[f64]) -> Self {
        self.breakpoints = bps.to_vec();
        self
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.form == OperatorForm::DivergenceSelfAdjoint
    }

    /// Replace c by `field` (sweeps build their ladder through this).
    pub fn with_c(&self, field: ScalarField) -> Self {
        let mut op = self.clone();
        op.c = field;
        op
    }

    /// Scale every diffusion entry by `alpha`.
    pub fn with_a_scaled(&self, alpha: f64) -> Self {
        let mut op = self.clone();
        op.a = self.a.iter().map(|f| f.scaled(alpha)).collect();
        op
    }

    fn a_values(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.a.iter().map(|f| eval_field(f, p)).collect()
    }
}

/// Minimum and maximum eigenvalue of the diffusion matrix over deterministic
/// interior samples of `region`. Errors with `NonElliptic` if any sampled
/// eigenvalue fails to be strictly positive.
pub fn ellipticity_range(
    op: &OperatorSpec,
    region: &Region,
    samples: usize,
) -> Result<(f64, f64)> {
    let pts = region.interior_samples(samples);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in &pts {
        for v in op.a_values(p)? {
            if v <= 0.0 {
                return Err(Error::NonElliptic {
                    x: p[0],
                    y: if p.len() > 1 { p[1] } else { 0.0 },
                    value: v,
                });
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        return Err(Error::DegenerateDomain("no sample points in region".into()));
    }
    Ok((lo, hi))
}

/// One shell's worth of sampled growth quantities.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GrowthRow {
    pub r: f64,
    /// sup c over the shell.
    pub sup_c: f64,
    /// sup of |a|/|x|² (quadratic-growth quotient for the diffusion).
    pub sup_a_over_r2: f64,
    /// sup of |a| itself.
    pub sup_a: f64,
    /// sup of b·x/|x|² (drift quotient for the quadratic-growth gate).
    pub sup_bx_over_r2: f64,
    /// sup of b·x/|x| (drift quotient for the linear-growth gate).
    pub sup_bx_over_r: f64,
}

/// Sampled verdict on the coefficient-growth gates used by the unbounded
/// maximum principle. Always heuristic: suprema are sampled on finitely many
/// shells and trends are extrapolated by eye rules.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// sup c bounded, |a| = O(|x|²), b·x = O(|x|²) — the quadratic gate.
    pub quadratic_gate: bool,
    /// sup c bounded, |a| bounded, b·x = O(|x|) — the linear gate.
    pub linear_gate: bool,
    /// |a| looked bounded along the shells (needed for the self-adjoint
    /// identification of the principal value with its vanishing-boundary
    /// variant).
    pub a_bounded: bool,
    /// c looked unbounded along the shells.
    pub c_unbounded: bool,
    /// Always true; a finite sample can never certify a supremum.
    pub heuristic: bool,
}

impl GrowthReport {
    pub fn verdict(&self) -> &'static str {
        match (self.quadratic_gate, self.linear_gate) {
            (true, true) => "quadratic-ok linear-ok",
            (true, false) => "quadratic-ok",
            (false, true) => "linear-ok",
            (false, false) => "neither",
        }
    }
}

/// Is the sampled sequence q_r bounded-looking as r grows? Flags growth when
/// the tail keeps increasing and clears the early values by 25%.
pub(crate) fn bounded_looking(q: &[f64]) -> bool {
    let m = q.len();
    if m < 2 {
        return true;
    }
    let last = q[m - 1];
    let head_max = q[..m - 1].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let increasing_tail = m >= 3 && q[m - 1] > q[m - 2] && q[m - 2] > q[m - 3];
    let cleared = last > head_max.abs() * 0.25 + head_max + 1e-9;
    !(increasing_tail && cleared)
}

/// Sample the growth gates on shells at the given radii (must be increasing,
/// at least three for a trend). Bounded domains trivially pass both gates.
pub fn growth_check(op: &OperatorSpec, dom: &DomainSpec, radii: &[f64]) -> Result<GrowthReport> {
    if dom.is_bounded() {
        return Ok(GrowthReport {
            rows: Vec::new(),
            quadratic_gate: true,
            linear_gate: true,
            a_bounded: true,
            c_unbounded: false,
            heuristic: true,
        });
    }
    if radii.len() < 3 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::PreconditionFailed(
            "growth check needs at least three increasing radii".into(),
        ));
    }
    let mut rows = Vec::new();
    for &r in radii {
        let pts = shell_samples(dom, r, 256);
        if pts.is_empty() {
            continue;
        }
        let mut row = GrowthRow {
            r,
            sup_c: f64::NEG_INFINITY,
            sup_a_over_r2: f64::NEG_INFINITY,
            sup_a: f64::NEG_INFINITY,
            sup_bx_over_r2: f64::NEG_INFINITY,
            sup_bx_over_r: f64::NEG_INFINITY,
        };
        for p in &pts {
            let norm2: f64 = p.iter().map(|v| v * v).sum();
            let norm = norm2.sqrt();
            row.sup_c = row.sup_c.max(eval_field(&op.c, p)?);
            for v in op.a_values(p)? {
                row.sup_a = row.sup_a.max(v.abs());
                row.sup_a_over_r2 = row.sup_a_over_r2.max(v.abs() / norm2);
            }
            let mut bx = 0.0;
            for (i, bf) in op.b.iter().enumerate() {
                bx += eval_field(bf, p)? * p[i];
            }
            row.sup_bx_over_r2 = row.sup_bx_over_r2.max(bx / norm2);
            row.sup_bx_over_r = row.sup_bx_over_r.max(bx / norm);
        }
        rows.push(row);
    }
    let col = |f: fn(&GrowthRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let c_ok = bounded_looking(&col(|r| r.sup_c));
    let a_bounded = bounded_looking(&col(|r| r.sup_a));
    let quad = c_ok
        && bounded_looking(&col(|r| r.sup_a_over_r2))
        && bounded_looking(&col(|r| r.sup_bx_over_r2));
    let lin = c_ok && a_bounded && bounded_looking(&col(|r| r.sup_bx_over_r));
    Ok(GrowthReport {
        rows,
        quadratic_gate: quad,
        linear_gate: lin,
        a_bounded,
        c_unbounded: !c_ok,
        heuristic: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Geometry;
    use crate::expr::parse_field;

    fn f1(src: &str) -> ScalarField {
        parse_field(src, 1).unwrap()
    }

    #[test]
    fn ellipticity_range_of_a_growing_coefficient() {
        // a = 1 + x² on (−2, 2): range (1, 5) up to sampling resolution
        let op = OperatorSpec::new_1d(f1("1 + x^2"), f1("0"), f1("0"));
        let dom = DomainSpec::new(Geometry::Interval { a: -2.0, b: 2.0 });
        let (lo, hi) = ellipticity_range(&op, &dom.as_region().unwrap(), 4000).unwrap();
        assert!((lo - 1.0).abs() < 1e-5, "lo = {lo}");
        assert!((hi - 5.0).abs() < 1e-2, "hi = {hi}");
    }

    #[test]
    fn degenerate_diffusion_is_rejected() {
        let op = OperatorSpec::new_1d(f1("x"), f1("0"), f1("0"));
        let dom = DomainSpec::new(Geometry::Interval { a: -1.0, b: 1.0 });
        assert!(matches!(
            ellipticity_range(&op, &dom.as_region().unwrap(), 100),
            Err(Error::NonElliptic { .. })
        ));
    }

    #[test]
    fn laplacian_passes_both_gates() {
        let op = OperatorSpec::new_1d(f1("1"), f1("0"), f1("0"));
        let dom = DomainSpec::new(Geometry::FullLine);
        let rep = growth_check(&op, &dom, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap();
        assert!(rep.quadratic_gate && rep.linear_gate && rep.heuristic);
        assert_eq!(rep.verdict(), "quadratic-ok linear-ok");
    }

    #[test]
    fn unbounded_c_is_flagged() {
        let op = OperatorSpec::new_1d(f1("1"), f1("0"), f1("x"));
        let dom = DomainSpec::new(Geometry::FullLine);
        let rep = growth_check(&op, &dom, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap();
        assert!(rep.c_unbounded);
        assert_eq!(rep.verdict(), "neither");
    }

    #[test]
    fn superquadratic_diffusion_fails_quadratic_gate() {
        // |a|/|x|² ~ |x|^(1/2) grows; |a| itself also grows, so both gates fail
        let op = OperatorSpec::new_1d(f1("(1+abs(x))^2.5"), f1("0"), f1("0"));
        let dom = DomainSpec::new(Geometry::FullLine);
        let rep = growth_check(&op, &dom, &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0]).unwrap();
        assert!(!rep.quadratic_gate);
        assert!(!rep.linear_gate);
        assert!(!rep.c_unbounded);
    }

    #[test]
    fn linear_drift_passes_quadratic_gate_only() {
        // b = x: b·x/|x|² = 1 bounded, but b·x/|x| = |x| grows
        let op = OperatorSpec::new_1d(f1("1"), f1("x"), f1("0"));
        let dom = DomainSpec::new(Geometry::FullLine);
        let rep = growth_check(&op, &dom, &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0]).unwrap();
        assert!(rep.quadratic_gate);
        assert!(!rep.linear_gate);
    }
}
