//! Eigenvalues on unbounded domains.
//!
//! Nothing here is solved "at infinity": every number comes from Dirichlet
//! truncations Ω∩B_r, whose principal values decrease to the unbounded-domain
//! value as r grows. That one-sided convergence is the backbone of the
//! module: exhaustion reports carry a monotonicity flag and a slack derived
//! from the measured discretization error, extrapolation fits the truncation
//! tail, and the inf-bounded variant λ1″ is bracketed — never "computed" —
//! between the tail zero-order bound −sup c and the tail principal value.
//!
//! Sampling caveat, stated once here and flagged in provenance strings:
//! suprema and limsups over unbounded sets are approximated on finite sample
//! clouds. A sampled sup is a valid *lower* bound for the true sup, so every
//! inequality below is invoked in the direction finite sampling can honestly
//! certify; the residual risk (a spike between samples) is mitigated by
//! densification near the tail radius and cannot be eliminated.

use crate::discrete::assemble_with;
use crate::domain::{shell_samples, DomainSpec};
use crate::eig::{dense_gap, eig_extrapolated, eig_value, SolveParams};
use crate::error::{Error, Result};
use crate::expr::{eval_field, ScalarField};
use crate::grid::{build_grid, Grid};
use crate::operator::OperatorSpec;
use rayon::prelude::*;

/// Extrapolation model selected for an exhaustion sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Model {
    /// λ_r = λ_∞ + C r⁻² — the free-Laplacian truncation rate.
    InverseSquare,
    /// λ_r = λ_∞ + C e^{−κr} — decaying-eigenfunction rate.
    Exponential,
    /// Sequence already flat to within the slack.
    Plateau,
    /// Polynomial in 1/n — used by the exterior (shrinking) approach.
    Polynomial,
    /// No finite limit: the sequence keeps falling without deceleration.
    None,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::InverseSquare => "inverse-square",
            Model::Exponential => "exponential",
            Model::Plateau => "plateau",
            Model::Polynomial => "polynomial",
            Model::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ExhaustionRow {
    /// Truncation radius (or outer index n for the exterior approach;
    /// +∞ marks the direct bounded solve appended by that routine).
    pub r: f64,
    pub h: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ExhaustionReport {
    /// Ordered by r.
    pub rows: Vec<ExhaustionRow>,
    /// Monotone in the expected direction up to floating-point noise
    /// (violations beyond `slack` are errors, not flags).
    pub monotone: bool,
    pub extrapolated: f64,
    pub model: Model,
    /// RMS residual of the selected fit (∞ for the divergent sentinel).
    pub fit_residual: f64,
    /// 10 × the measured h-refinement change at the largest radius.
    pub slack: f64,
}

/// Bracket for a quantity the theory pins between two computable bounds.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IntervalEstimate {
    pub lo: f64,
    pub hi: f64,
    pub lo_source: String,
    pub hi_source: String,
}

/// Ties the grid step to the truncation radius so the discretization error
/// stays below the inter-radius change.
#[derive(Debug, Clone, Copy)]
pub enum HPolicy {
    Auto,
    Fixed(f64),
}

impl HPolicy {
    pub fn h_for(&self, dim: usize, r: f64) -> f64 {
        match *self {
            HPolicy::Fixed(h) => h,
            HPolicy::Auto => {
                if dim == 1 {
                    (0.01f64).min(1.0 / r)
                } else {
                    // cap 2D truncations near 80 nodes per axis so the
                    // halved-step refinement stays inside the direct-solver
                    // flop budget
                    (0.15f64).max(r / 40.0)
                }
            }
        }
    }

    /// Step for bounded solves in the exterior approach.
    pub fn h_for_bounded(&self, dim: usize) -> f64 {
        match *self {
            HPolicy::Fixed(h) => h,
            HPolicy::Auto => {
                if dim == 1 {
                    0.005
                } else {
                    0.02
                }
            }
        }
    }
}

/// One truncation solve: Richardson-extrapolated value over {h, h/2} plus
/// the measured refinement change (the discretization-error estimate).
fn row_solve(
    op: &OperatorSpec,
    region: &crate::domain::Region,
    h: f64,
    sp: SolveParams,
) -> Result<(f64, f64)> {
    let ex = eig_extrapolated(op, region, h, sp.scheme, sp.tol, sp.max_iter)?;
    Ok((ex.value, (ex.value - ex.fine).abs()))
}

fn require_increasing(schedule: &[f64], what: &str) -> Result<()> {
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::PreconditionFailed(format!(
            "{what} must be strictly increasing"
        )));
    }
    Ok(())
}

/// Least squares for y = p + q·g: returns (p, q, rms residual).
fn fit_affine(gs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = gs.len() as f64;
    let s1: f64 = gs.iter().sum();
    let s2: f64 = gs.iter().map(|g| g * g).sum();
    let t0: f64 = ys.iter().sum();
    let t1: f64 = gs.iter().zip(ys).map(|(g, y)| g * y).sum();
    let det = m * s2 - s1 * s1;
    let scale = (m * s2).abs().max(1e-300);
    if det.abs() < 1e-12 * scale {
        // collinear regressor: constant fit
        let p = t0 / m;
        let res = (ys.iter().map(|y| (y - p).powi(2)).sum::<f64>() / m).sqrt();
        return (p, 0.0, res);
    }
    let q = (m * t1 - s1 * t0) / det;
    let p = (t0 - q * s1) / m;
    let res = (gs
        .iter()
        .zip(ys)
        .map(|(g, y)| (y - p - q * g).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    (p, q, res)
}

/// Pick the truncation-tail model: divergent sentinel, plateau, or the
/// better of the r⁻² and e^{−κr} fits by RMS residual.
fn select_model(rs: &[f64], lams: &[f64], slack: f64) -> (Model, f64, f64) {
    let n = lams.len();
    let scale = lams.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
    let spread = lams.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        - lams.iter().fold(f64::INFINITY, |m, &v| m.min(v));

    // Divergence: still falling at the end, no slower than at the start.
    let d_first = lams[1] - lams[0];
    let d_last = lams[n - 1] - lams[n - 2];
    if d_last < 0.0
        && d_last.abs() >= 0.9 * d_first.abs()
        && d_last.abs() > 100.0 * slack.max(1e-9)
    {
        return (Model::None, f64::NEG_INFINITY, f64::INFINITY);
    }

    if spread <= slack.max(1e-8 * scale) {
        return (Model::Plateau, lams[n - 1], spread);
    }

    // Fit the asymptotic regime only.
    let m = n.min(5);
    let rs = &rs[n - m..];
    let lams = &lams[n - m..];

    let g_inv: Vec<f64> = rs.iter().map(|r| r.powi(-2)).collect();
    let (p_inv, _, res_inv) = fit_affine(&g_inv, lams);

    let mut best_exp = (f64::NAN, f64::INFINITY);
    for k in 0..61 {
        let kappa = 10f64.powf(-3.0 + 4.0 * k as f64 / 60.0);
        let g: Vec<f64> = rs.iter().map(|r| (-kappa * r).exp()).collect();
        let (p, _, res) = fit_affine(&g, lams);
        if res < best_exp.1 {
            best_exp = (p, res);
        }
    }

    if res_inv <= best_exp.1 {
        (Model::InverseSquare, p_inv, res_inv)
    } else {
        (Model::Exponential, best_exp.0, best_exp.1)
    }
}

/// Monotonicity bookkeeping shared by the shrinking and growing approaches:
/// `dir` = −1 for nonincreasing, +1 for nondecreasing sequences.
fn check_monotone(lams: &[f64], slack: f64, dir: f64) -> Result<bool> {
    let scale = lams.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
    let mut monotone = true;
    for (i, w) in lams.windows(2).enumerate() {
        let step = (w[1] - w[0]) * dir;
        if step < -slack {
            return Err(Error::NonMonotone {
                index: i + 1,
                prev: w[0],
                next: w[1],
                slack,
            });
        }
        if step < -1e-12 * scale {
            monotone = false;
        }
    }
    Ok(monotone)
}

/// λ1 on an unbounded domain by exhaustion over Dirichlet truncations Ω∩B_r.
/// The values decrease to λ1(Ω); the report extrapolates the truncation tail.
pub fn exhaust_lambda1(
    op: &OperatorSpec,
    dom: &DomainSpec,
    schedule: &[f64],
    h_policy: HPolicy,
    sp: SolveParams,
) -> Result<ExhaustionReport> {
    if dom.is_bounded() {
        return Err(Error::PreconditionFailed(
            "exhaustion applies to unbounded domains; solve bounded ones directly".into(),
        ));
    }
    if schedule.len() < 3 {
        return Err(Error::PreconditionFailed(format!(
            "exhaustion schedule needs at least 3 radii, got {}",
            schedule.len()
        )));
    }
    require_increasing(schedule, "exhaustion schedule")?;

    let solved: Result<Vec<(f64, f64, f64, f64)>> = schedule
        .par_iter()
        .map(|&r| {
            let h = h_policy.h_for(dom.dim(), r);
            let region = dom.truncation(r)?;
            let (lam, err) = row_solve(op, &region, h, sp)?;
            Ok((r, h, lam, err))
        })
        .collect();
    let solved = solved?;

    let rows: Vec<ExhaustionRow> = solved
        .iter()
        .map(|&(r, h, lambda, _)| ExhaustionRow { r, h, lambda })
        .collect();
    let slack = 10.0 * solved.last().unwrap().3 + 1e-12;
    let lams: Vec<f64> = rows.iter().map(|w| w.lambda).collect();
    let monotone = check_monotone(&lams, slack, -1.0)?;
    let rs: Vec<f64> = rows.iter().map(|w| w.r).collect();
    let (model, extrapolated, fit_residual) = select_model(&rs, &lams, slack);

    Ok(ExhaustionReport { rows, monotone, extrapolated, model, fit_residual, slack })
}

/// λ1 on a bounded domain approached from outside through the inflations
/// Ω_n = Ω + B_{1/n}. The values increase to λ1(Ω); a direct solve on Ω is
/// appended as the r = +∞ row, and the extrapolation is polynomial in 1/n
/// through the last rows.
pub fn exterior_approach(
    op: &OperatorSpec,
    dom: &DomainSpec,
    outer_schedule: &[f64],
    h_policy: HPolicy,
    sp: SolveParams,
) -> Result<ExhaustionReport> {
    if !dom.is_bounded() {
        return Err(Error::PreconditionFailed(
            "the exterior approach shrinks onto a bounded domain".into(),
        ));
    }
    if outer_schedule.len() < 3 {
        return Err(Error::PreconditionFailed(format!(
            "outer schedule needs at least 3 indices, got {}",
            outer_schedule.len()
        )));
    }
    if outer_schedule.iter().any(|&n| n <= 0.0) {
        return Err(Error::PreconditionFailed("outer indices must be positive".into()));
    }
    require_increasing(outer_schedule, "outer schedule")?;

    let h = h_policy.h_for_bounded(dom.dim());
    let solved: Result<Vec<(f64, f64, f64)>> = outer_schedule
        .par_iter()
        .map(|&n| {
            let inflated = dom.inflate(1.0 / n)?;
            let (lam, err) = row_solve(op, &inflated.as_region()?, h, sp)?;
            Ok((n, lam, err))
        })
        .collect();
    let solved = solved?;

    let mut rows: Vec<ExhaustionRow> = solved
        .iter()
        .map(|&(n, lambda, _)| ExhaustionRow { r: n, h, lambda })
        .collect();
    let slack = 10.0 * solved.last().unwrap().2 + 1e-12;

    // polynomial extrapolation in t = 1/n through the last (up to) 4 rows
    let m = rows.len().min(4);
    let ts: Vec<f64> = rows[rows.len() - m..].iter().map(|w| 1.0 / w.r).collect();
    let ys: Vec<f64> = rows[rows.len() - m..].iter().map(|w| w.lambda).collect();
    let extrapolated = lagrange_at_zero(&ts, &ys);

    let (direct, _) = row_solve(op, &dom.as_region()?, h, sp)?;
    rows.push(ExhaustionRow { r: f64::INFINITY, h, lambda: direct });

    let lams: Vec<f64> = rows.iter().map(|w| w.lambda).collect();
    let monotone = check_monotone(&lams, slack, 1.0)?;

    Ok(ExhaustionReport {
        rows,
        monotone,
        extrapolated,
        model: Model::Polynomial,
        fit_residual: (extrapolated - direct).abs(),
        slack,
    })
}

fn lagrange_at_zero(ts: &[f64], ys: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..ts.len() {
        let mut w = ys[i];
        for j in 0..ts.len() {
            if j != i {
                w *= ts[j] / (ts[j] - ts[i]);
            }
        }
        sum += w;
    }
    sum
}

/// Principal value of the truncated tail Ω∩(B_R∖B̄_r), exhausted over the
/// outer radius R and extrapolated. Disconnected tails (1D) take the minimum
/// over components inside the solver.
pub fn tail_lambda1(
    op: &OperatorSpec,
    dom: &DomainSpec,
    r: f64,
    big_r_schedule: &[f64],
    h_policy: HPolicy,
    sp: SolveParams,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::PreconditionFailed(format!(
            "tail radius must be positive, got {r}"
        )));
    }
    if big_r_schedule.is_empty() {
        return Err(Error::PreconditionFailed("outer-radius schedule is empty".into()));
    }
    require_increasing(big_r_schedule, "outer-radius schedule")?;
    if big_r_schedule[0] <= r {
        return Err(Error::PreconditionFailed(format!(
            "outer radii must exceed the tail radius {r}"
        )));
    }

    let solved: Result<Vec<f64>> = big_r_schedule
        .par_iter()
        .map(|&big_r| {
            let region = dom.tail_truncated(r, big_r)?;
            let h = h_policy.h_for(dom.dim(), big_r);
            eig_value(op, &region, h, sp.scheme, sp.tol, sp.max_iter)
        })
        .collect();
    let lams = solved?;
    if lams.len() < 3 {
        return Ok(*lams.last().unwrap());
    }
    // Fit against the effective span R − r (the free-tail rate is (π/(R−r))²).
    let spans: Vec<f64> = big_r_schedule.iter().map(|&big_r| big_r - r).collect();
    let (_, extrapolated, _) = {
        let (model, value, res) = select_model(&spans, &lams, 1e-9);
        (model, value, res)
    };
    if extrapolated.is_finite() {
        Ok(extrapolated)
    } else {
        Ok(*lams.last().unwrap())
    }
}

/// Clustered sample points of the tail Ω∩(B_{8r}∖B̄_r), densified near the
/// inner radius where tail suprema are typically attained.
fn tail_samples(dom: &DomainSpec, r: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    match dom.dim() {
        1 => {
            let m = 600;
            for k in 0..=m {
                let u = (k as f64 / m as f64).powi(3);
                let t = r * (1.0 + 1e-9) + 7.0 * r * u;
                for x in [t, -t] {
                    if dom.contains(&[x]) {
                        out.push(vec![x]);
                    }
                }
            }
        }
        _ => {
            let m = 80;
            let angles = 64;
            for k in 0..=m {
                let u = (k as f64 / m as f64).powi(3);
                let rho = r * (1.0 + 1e-9) + 7.0 * r * u;
                for j in 0..angles {
                    let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / angles as f64;
                    let p = vec![rho * th.cos(), rho * th.sin()];
                    if dom.contains(&p) && (p[0].powi(2) + p[1].powi(2)).sqrt() > r {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Sampled sup of c on the tail Ω∩(B_{8r}∖B̄_r). A lower bound for the true
/// sup; its negation is an (optimistic) tail zero-order bound for λ1″.
pub fn tail_c_sup(op: &OperatorSpec, dom: &DomainSpec, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::PreconditionFailed(format!(
            "tail radius must be positive, got {r}"
        )));
    }
    let samples = tail_samples(dom, r);
    if samples.is_empty() {
        return Err(Error::EmptyTail);
    }
    let mut sup = f64::NEG_INFINITY;
    for p in &samples {
        sup = sup.max(eval_field(&op.c, p)?);
    }
    Ok(sup)
}

/// Bracket for λ1″(−L, Ω): lo from the tail zero-order bound, hi from the
/// tail principal value, both capped by the full-domain estimate.
pub fn lambda_doubleprime_interval(
    op: &OperatorSpec,
    dom: &DomainSpec,
    lambda1_est: f64,
    radii: &[f64],
    h_policy: HPolicy,
    sp: SolveParams,
) -> Result<IntervalEstimate> {
    if radii.is_empty() {
        return Err(Error::PreconditionFailed("tail radii schedule is empty".into()));
    }
    require_increasing(radii, "tail radii")?;
    let r = *radii.last().unwrap();
    let csup = tail_c_sup(op, dom, r)?;
    let big_rs = [2.0 * r, 4.0 * r, 8.0 * r];
    let tl = tail_lambda1(op, dom, r, &big_rs, h_policy, sp)?;

    let mut lo = lambda1_est.min(-csup);
    let hi = lambda1_est.min(tl);
    let mut lo_source = if -csup < lambda1_est {
        format!(
            "tail zero-order bound: the inf-bounded value is at least -sup c over the \
             exterior of B_{r} (sampled sup c = {csup:.6e}, a limsup proxy; heuristic)"
        )
    } else {
        "full-domain estimate caps the lower endpoint".to_string()
    };
    let hi_source = if tl < lambda1_est {
        format!(
            "tail principal value: the inf-bounded value is at most the exhausted \
             eigenvalue of the exterior of B_{r} ({tl:.6e})"
        )
    } else {
        "full-domain estimate caps the upper endpoint".to_string()
    };
    if lo > hi {
        // exact theory forbids this; sampling/discretization noise does not
        lo = hi;
        lo_source.push_str("; clamped to the upper endpoint (sampling noise)");
    }
    Ok(IntervalEstimate { lo, hi, lo_source, hi_source })
}

impl IntervalEstimate {
    /// Collapse the bracket onto its upper endpoint, recording why (used when
    /// a classifier certifies the tail formula's minimum is attained there).
    pub fn collapse(&mut self, why: &str) {
        self.lo = self.hi;
        self.lo_source = format!("collapsed to the upper endpoint: {why}");
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Which structural case certifies that the λ1″ bracket collapses.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum Classification {
    /// User-supplied decomposition c = c̃ + γ with γ ≥ 0 vanishing at
    /// infinity; carries the sampled sup of γ.
    Case1 { gamma_sup: f64 },
    /// λ1 ≤ −limsup c: the tail bound already matches.
    Case2,
    /// Self-adjoint-like operator with bounded a whose c keeps plateauing
    /// near its limsup arbitrarily far out.
    Case3,
    Inconclusive,
}

impl Classification {
    pub fn certifies_collapse(&self) -> bool {
        !matches!(self, Classification::Inconclusive)
    }
}

fn shell_sup(field: &ScalarField, dom: &DomainSpec, r: f64, abs: bool) -> Result<f64> {
    let mut sup = f64::NEG_INFINITY;
    for p in shell_samples(dom, r, 256) {
        let v = eval_field(field, &p)?;
        sup = sup.max(if abs { v.abs() } else { v });
    }
    if sup.is_finite() {
        Ok(sup)
    } else {
        Err(Error::EmptyTail)
    }
}

/// Structural classifier for the λ1″ bracket collapse. Checks, in order:
/// the λ1 ≤ −limsup c inequality (Case2); a plateau of c near its limsup
/// recurring beyond every sampled radius, for drift-free-like operators with
/// bounded diffusion (Case3); a user-supplied nonnegative vanishing
/// decomposition term γ (Case1). Everything here is sampled, hence
/// heuristic; callers collapse brackets only on a positive verdict.
pub fn sc_classifier(
    op: &OperatorSpec,
    dom: &DomainSpec,
    lambda1_est: f64,
    radii: &[f64],
    gamma: Option<&ScalarField>,
) -> Result<Classification> {
    if radii.is_empty() {
        return Err(Error::PreconditionFailed("classifier radii schedule is empty".into()));
    }
    require_increasing(radii, "classifier radii")?;
    let r_max = *radii.last().unwrap();
    let limsup_c = tail_c_sup(op, dom, r_max)?;
    let scale = 1.0 + lambda1_est.abs().max(limsup_c.abs());
    if lambda1_est <= -limsup_c + 1e-3 * scale {
        return Ok(Classification::Case2);
    }

    // Case3 gates: vanishing (or absent) drift, non-growing diffusion,
    // recurring plateaus of c near its limsup.
    let b_near: Result<Vec<f64>> = op.b.iter().map(|f| shell_sup(f, dom, radii[0], true)).collect();
    let b_far: Result<Vec<f64>> = op.b.iter().map(|f| shell_sup(f, dom, r_max, true)).collect();
    let drift_ok = op.is_self_adjoint()
        || match (b_near, b_far) {
            (Ok(near), Ok(far)) => {
                let near: f64 = near.iter().fold(0.0f64, |m, &v| m.max(v));
                let far: f64 = far.iter().fold(0.0f64, |m, &v| m.max(v));
                far <= 1e-3 * (1.0 + near)
            }
            _ => false,
        };
    let a_bounded = {
        let mut ok = true;
        let mut prev = f64::NEG_INFINITY;
        for &r in radii {
            let s = op
                .a
                .iter()
                .map(|f| shell_sup(f, dom, r, false))
                .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?;
            if prev.is_finite() && s > 1.2 * prev.max(1e-12) {
                ok = false;
            }
            prev = prev.max(s);
        }
        ok
    };
    if drift_ok && a_bounded && plateau_scan(op, dom, radii, limsup_c)? {
        return Ok(Classification::Case3);
    }

    if let Some(g) = gamma {
        let mut sup = 0.0f64;
        let mut nonneg = true;
        let mut points = dom.truncation(r_max)?.interior_samples(512);
        points.extend(tail_samples(dom, radii[0]));
        for p in &points {
            let v = eval_field(g, p)?;
            if v < -1e-12 {
                nonneg = false;
            }
            sup = sup.max(v);
        }
        let far = shell_sup(g, dom, r_max, false)?;
        if nonneg && far <= 1e-2 * (1.0 + sup) {
            return Ok(Classification::Case1 { gamma_sup: sup });
        }
    }
    Ok(Classification::Inconclusive)
}

/// True when, beyond every radius in the schedule, some ball carries
/// inf c within 10% of the sampled limsup. Candidate centers are spaced
/// uniformly (0.2 apart radially) so narrow plateaus are not missed.
fn plateau_scan(
    op: &OperatorSpec,
    dom: &DomainSpec,
    radii: &[f64],
    limsup_c: f64,
) -> Result<bool> {
    let threshold = limsup_c - 0.1 * (1.0 + limsup_c.abs());
    let rho = 0.5;
    for &r in radii {
        let steps = ((7.0 * r / 0.2) as usize).clamp(16, 2000);
        let mut centers: Vec<Vec<f64>> = Vec::new();
        for k in 0..=steps {
            let t = (r + rho) + (7.0 * r - rho) * k as f64 / steps as f64;
            if dom.dim() == 1 {
                centers.push(vec![t]);
                centers.push(vec![-t]);
            } else {
                let angles = 32;
                for j in 0..angles {
                    let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / angles as f64;
                    centers.push(vec![t * th.cos(), t * th.sin()]);
                }
            }
        }
        let mut found = false;
        'centers: for cpt in &centers {
            // inf of c over a small ball around the candidate center
            let mut inf = f64::INFINITY;
            let m = 12;
            if dom.dim() == 1 {
                for i in 0..=m {
                    let x = cpt[0] - rho + 2.0 * rho * i as f64 / m as f64;
                    if !dom.contains(&[x]) {
                        continue 'centers;
                    }
                    inf = inf.min(eval_field(&op.c, &[x])?);
                }
            } else {
                for i in 0..=m {
                    for j in 0..=m {
                        let x = cpt[0] - rho + 2.0 * rho * i as f64 / m as f64;
                        let y = cpt[1] - rho + 2.0 * rho * j as f64 / m as f64;
                        if (x - cpt[0]).powi(2) + (y - cpt[1]).powi(2) > rho * rho {
                            continue;
                        }
                        if !dom.contains(&[x, y]) {
                            continue 'centers;
                        }
                        inf = inf.min(eval_field(&op.c, &[x, y])?);
                    }
                }
            }
            if inf > threshold {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sampled decay-rate bracket (Γ₋, Γ₊): the two roots of A s² − B s + c = 0
/// along rays, evaluated on the farthest shell. Requires a negative
/// zero-order tail so the roots are real and straddle zero.
pub fn decay_rates(op: &OperatorSpec, dom: &DomainSpec, radii: &[f64]) -> Result<(f64, f64)> {
    if radii.is_empty() {
        return Err(Error::PreconditionFailed("decay radii schedule is empty".into()));
    }
    require_increasing(radii, "decay radii")?;

    // precondition: sampled tail c < 0 on every given shell
    for &r in radii {
        let mut sup = f64::NEG_INFINITY;
        for p in shell_samples(dom, r, 256) {
            sup = sup.max(eval_field(&op.c, &p)?);
        }
        if !(sup < 0.0) {
            return Err(Error::PreconditionFailed(format!(
                "decay rates need a negative zero-order tail; sampled sup c = {sup:.6e} \
                 at radius {r}"
            )));
        }
    }

    let r = *radii.last().unwrap();
    let samples = shell_samples(dom, r, 512);
    if samples.is_empty() {
        return Err(Error::EmptyTail);
    }
    let mut gamma_minus = f64::NEG_INFINITY;
    let mut gamma_plus = f64::INFINITY;
    for p in &samples {
        let norm2: f64 = p.iter().map(|x| x * x).sum();
        let norm = norm2.sqrt();
        let a_quad: f64 = p
            .iter()
            .zip(&op.a)
            .map(|(&x, f)| Ok(eval_field(f, p)? * x * x))
            .sum::<Result<f64>>()?
            / norm2;
        let b_rad: f64 = p
            .iter()
            .zip(&op.b)
            .map(|(&x, f)| Ok(eval_field(f, p)? * x))
            .sum::<Result<f64>>()?
            / norm;
        let c = eval_field(&op.c, p)?;
        let disc = (b_rad * b_rad - 4.0 * a_quad * c).sqrt();
        gamma_minus = gamma_minus.max((b_rad - disc) / (2.0 * a_quad));
        gamma_plus = gamma_plus.min((b_rad + disc) / (2.0 * a_quad));
    }
    Ok((gamma_minus, gamma_plus))
}

/// Least-squares exponential rate of a positive grid function over the
/// window r1 ≤ |x| ≤ r2: returns η with φ ≈ C e^{−η|x|}.
pub fn measure_decay(phi: &[f64], grid: &Grid, window: (f64, f64)) -> Result<f64> {
    if phi.len() != grid.n_interior() {
        return Err(Error::SizeMismatch { expected: grid.n_interior(), got: phi.len() });
    }
    let (r1, r2) = window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, p) in grid.points.iter().enumerate() {
        let rad: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rad >= r1 && rad <= r2 {
            if !(phi[k] > 0.0) {
                return Err(Error::PreconditionFailed(format!(
                    "decay window requires positive samples; phi = {} at |x| = {rad}",
                    phi[k]
                )));
            }
            xs.push(rad);
            ys.push(phi[k].ln());
        }
    }
    if xs.len() < 10 {
        return Err(Error::WindowTooSmall { nodes: xs.len(), required: 10 });
    }
    let (_, slope, _) = fit_affine(&xs, &ys);
    Ok(-slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Simplicity {
    Simple,
    Unknown,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SimplicityReport {
    pub verdict: Simplicity,
    pub lambda1_est: f64,
    /// Extrapolated tail principal value at the largest radius (unbounded
    /// domains only).
    pub tail_value: Option<f64>,
    /// Discrete gap between the two smallest eigenvalues on a moderate
    /// truncation — corroboration, not proof.
    pub eigen_gap: Option<f64>,
}

/// Simplicity test: λ1 strictly below the tail principal value certifies (up
/// to sampling) the strict inequality behind uniqueness of the positive
/// eigenfunction. Bounded domains are simple outright.
pub fn simplicity_check(
    op: &OperatorSpec,
    dom: &DomainSpec,
    lambda1_est: f64,
    radii: &[f64],
    h_policy: HPolicy,
    sp: SolveParams,
) -> Result<SimplicityReport> {
    let gap_on = |r: f64| -> Option<f64> {
        let region = dom.truncation(r).ok()?;
        let h = (2.0 * r / 360.0).max(h_policy.h_for(dom.dim(), r));
        let grid = build_grid(&region, h, &op.breakpoints).ok()?;
        let d = assemble_with(op, &grid, sp.scheme).ok()?;
        dense_gap(&d).ok()
    };

    if dom.is_bounded() {
        let gap = dom.circumradius().and_then(|c| gap_on(2.0 * c));
        return Ok(SimplicityReport {
            verdict: Simplicity::Simple,
            lambda1_est,
            tail_value: None,
            eigen_gap: gap,
        });
    }
    if radii.is_empty() {
        return Err(Error::PreconditionFailed("simplicity radii schedule is empty".into()));
    }
    require_increasing(radii, "simplicity radii")?;
    let r = *radii.last().unwrap();
    let tl = tail_lambda1(op, dom, r, &[2.0 * r, 4.0 * r, 8.0 * r], h_policy, sp)?;
    let tol = 1e-3 * (1.0 + lambda1_est.abs().max(tl.abs()));
    let verdict = if lambda1_est + tol < tl { Simplicity::Simple } else { Simplicity::Unknown };
    Ok(SimplicityReport {
        verdict,
        lambda1_est,
        tail_value: Some(tl),
        eigen_gap: gap_on(r),
    })
}

/// CSV rendering of an exhaustion report (r, h, lambda, then the fit row).
pub fn exhaustion_csv(report: &ExhaustionReport) -> String {
    let mut out = String::from("r,h,lambda\n");
    for row in &report.rows {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", row.r, row.h, row.lambda));
    }
    out.push_str(&format!(
        "# model={} extrapolated={:.16e} fit_residual={:.16e} slack={:.16e} monotone={}\n",
        report.model, report.extrapolated, report.fit_residual, report.slack, report.monotone
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Geometry;

    fn line() -> DomainSpec {
        DomainSpec::new(Geometry::FullLine)
    }

    fn op(a: &str, b: &str, c: &str) -> OperatorSpec {
        OperatorSpec::parse_1d(a, b, c).unwrap()
    }

    #[test]
    fn free_line_exhaustion_matches_interval_law() {
        let rep = exhaust_lambda1(
            &op("1", "0", "0"),
            &line(),
            &[2.0, 4.0, 8.0, 16.0],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        for row in &rep.rows {
            let exact = (std::f64::consts::PI / (2.0 * row.r)).powi(2);
            assert!(
                (row.lambda - exact).abs() <= 0.01 * exact,
                "r={} lambda={} exact={}",
                row.r,
                row.lambda,
                exact
            );
        }
        assert!(rep.monotone);
        assert_eq!(rep.model, Model::InverseSquare);
        assert!(rep.extrapolated.abs() <= 1e-3);
    }

    #[test]
    fn unbounded_zero_order_growth_diverges() {
        let rep = exhaust_lambda1(
            &op("1", "0", "x"),
            &line(),
            &[2.0, 4.0, 8.0, 16.0],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        assert_eq!(rep.model, Model::None);
        assert_eq!(rep.extrapolated, f64::NEG_INFINITY);
        assert!(rep.rows.last().unwrap().lambda < -10.0);
        assert!(rep.monotone);
    }

    #[test]
    fn exhaustion_preconditions() {
        let o = op("1", "0", "0");
        let bounded = DomainSpec::new(Geometry::Interval { a: 0.0, b: 1.0 });
        assert!(matches!(
            exhaust_lambda1(&o, &bounded, &[2.0, 4.0, 8.0], HPolicy::Auto, SolveParams::default()),
            Err(Error::PreconditionFailed(_))
        ));
        assert!(matches!(
            exhaust_lambda1(&o, &line(), &[2.0, 4.0], HPolicy::Auto, SolveParams::default()),
            Err(Error::PreconditionFailed(_))
        ));
        assert!(matches!(
            exhaust_lambda1(&o, &line(), &[4.0, 2.0, 8.0], HPolicy::Auto, SolveParams::default()),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn exterior_approach_increases_to_the_interval_value() {
        let dom = DomainSpec::new(Geometry::Interval { a: 0.0, b: 1.0 });
        let rep = exterior_approach(
            &op("1", "0", "0"),
            &dom,
            &[16.0, 32.0, 64.0, 128.0],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        assert!(rep.monotone);
        let pi2 = std::f64::consts::PI.powi(2);
        for row in &rep.rows {
            if row.r.is_finite() {
                let exact = pi2 / (1.0 + 2.0 / row.r).powi(2);
                assert!(
                    (row.lambda - exact).abs() < 1e-6,
                    "n={}: lambda={} exact={}",
                    row.r,
                    row.lambda,
                    exact
                );
            }
        }
        assert!((rep.extrapolated - pi2).abs() < 1e-3);
        // the appended direct-solve row agrees with the extrapolated limit
        assert!((rep.rows.last().unwrap().lambda - pi2).abs() < 1e-8);
    }

    #[test]
    fn exterior_approach_in_two_dimensions() {
        let dom = DomainSpec::new(Geometry::Rectangle { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 });
        let o = OperatorSpec::parse_2d("1", "1", "0", "0", "0").unwrap();
        let rep = exterior_approach(
            &o,
            &dom,
            &[8.0, 16.0, 32.0, 64.0],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        assert!(rep.monotone);
        let exact = 2.0 * std::f64::consts::PI.powi(2);
        assert!(
            (rep.extrapolated - exact).abs() < 0.01,
            "extrapolated={} exact={exact}",
            rep.extrapolated
        );
    }

    #[test]
    fn free_tail_value_vanishes() {
        let tl = tail_lambda1(
            &op("1", "0", "0"),
            &line(),
            1.0,
            &[8.0, 16.0, 32.0],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        assert!(tl.abs() < 1e-3, "tail lambda = {tl}");
    }

    #[test]
    fn negative_tail_shifts_the_tail_value() {
        let pi = std::f64::consts::PI;
        let o = op("1", "0", "piecewise(abs(x) < pi, 0, -1)").with_breakpoints(&[-pi, pi]);
        let tl = tail_lambda1(
            &o,
            &line(),
            pi,
            &[8.0, 16.0, 32.0],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        assert!((tl - 1.0).abs() < 1e-3, "tail lambda = {tl}");
    }

    #[test]
    fn tail_of_a_bounded_domain_is_empty() {
        let dom = DomainSpec::new(Geometry::Interval { a: 0.0, b: 1.0 });
        assert!(matches!(
            tail_lambda1(
                &op("1", "0", "0"),
                &dom,
                5.0,
                &[10.0, 20.0],
                HPolicy::Auto,
                SolveParams::default()
            ),
            Err(Error::EmptyTail)
        ));
    }

    #[test]
    fn tail_sup_of_decaying_and_piecewise_fields() {
        let d = line();
        let g = tail_c_sup(&op("1", "0", "exp(-x^2)"), &d, 3.0).unwrap();
        assert!((g - (-9.0f64).exp()).abs() < 1e-10);

        let o = op("1", "0", "piecewise(abs(x) < pi, 0, -1)");
        assert_eq!(tail_c_sup(&o, &d, 4.0).unwrap(), -1.0);

        assert_eq!(tail_c_sup(&op("1", "0", "0"), &d, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn tail_sup_is_monotone_in_the_radius() {
        let o = op("1", "0", "exp(-x^2)");
        let d = line();
        let s2 = tail_c_sup(&o, &d, 2.0).unwrap();
        let s4 = tail_c_sup(&o, &d, 4.0).unwrap();
        assert!(s4 <= s2 + 1e-15);
    }

    #[test]
    fn bracket_collapses_when_the_tail_bound_exceeds_lambda() {
        let pi = std::f64::consts::PI;
        let o = op("1", "0", "piecewise(abs(x) < pi, 0, -1)").with_breakpoints(&[-pi, pi]);
        let rep = exhaust_lambda1(
            &o,
            &line(),
            &[4.0, 8.0, 16.0],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        let est = rep.extrapolated;
        assert!((est - 0.14215).abs() < 3e-3, "lambda1 = {est}");
        let iv = lambda_doubleprime_interval(
            &o,
            &line(),
            est,
            &[pi],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        assert!((iv.lo - iv.hi).abs() < 1e-12);
        assert!((iv.lo - est).abs() < 1e-12);
    }

    #[test]
    fn free_line_bracket_is_degenerate_at_zero() {
        let iv = lambda_doubleprime_interval(
            &op("1", "0", "0"),
            &line(),
            0.0,
            &[1.0, 2.0],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        assert!(iv.lo.abs() < 1e-3 && iv.hi.abs() < 1e-3);
        assert!(iv.lo <= iv.hi);
    }

    #[test]
    fn classifier_cases() {
        let d = line();
        // negative tail with small lambda: the inequality case
        let s3 = op("1", "0", "piecewise(abs(x) < pi, 0, -1)");
        assert_eq!(
            sc_classifier(&s3, &d, 0.1421, &[4.0, 8.0], None).unwrap(),
            Classification::Case2
        );
        // periodic self-adjoint: the plateau case
        let mathieu = OperatorSpec::parse_1d_self_adjoint("1", "cos(x)").unwrap();
        assert_eq!(
            sc_classifier(&mathieu, &d, -0.378, &[8.0, 16.0], None).unwrap(),
            Classification::Case3
        );
        // drifty operator with positive lambda: nothing applies
        let drifty = op("1", "1", "0");
        assert_eq!(
            sc_classifier(&drifty, &d, 0.25, &[4.0, 8.0], None).unwrap(),
            Classification::Inconclusive
        );
    }

    #[test]
    fn classifier_accepts_supplied_vanishing_decomposition() {
        use crate::expr::parse_field;
        // u″ + e^{−x²}: lambda1 ≈ −0.88, limsup c = 0 fails Case2 only if
        // lambda is above it — here it is below, so feed a positive lambda to
        // force the gamma branch.
        let o = op("1", "1", "exp(-x^2)");
        let gamma = parse_field("exp(-x^2)", 1).unwrap();
        let got = sc_classifier(&o, &line(), 0.5, &[4.0, 8.0], Some(&gamma)).unwrap();
        match got {
            Classification::Case1 { gamma_sup } => assert!(gamma_sup <= 1.0),
            other => panic!("expected Case1, got {other:?}"),
        }
    }

    #[test]
    fn decay_rate_quotients() {
        let d = line();
        let (gm, gp) = decay_rates(&op("1", "0", "-1"), &d, &[4.0, 8.0]).unwrap();
        assert!((gm + 1.0).abs() < 1e-12 && (gp - 1.0).abs() < 1e-12);

        let o = op("1", "piecewise(x < 0, -2, 2)", "-1");
        let (gm, gp) = decay_rates(&o, &d, &[4.0, 8.0]).unwrap();
        let s2 = 2.0f64.sqrt();
        assert!((gm - (1.0 - s2)).abs() < 1e-12);
        assert!((gp - (1.0 + s2)).abs() < 1e-12);

        assert!(matches!(
            decay_rates(&op("1", "0", "0"), &d, &[4.0]),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn decay_measurement_recovers_synthetic_rate() {
        let region = line().truncation(12.0).unwrap();
        let grid = build_grid(&region, 0.05, &[]).unwrap();
        let eta = 0.9262;
        let phi: Vec<f64> = grid.points.iter().map(|p| (-eta * p[0].abs()).exp()).collect();
        let got = measure_decay(&phi, &grid, (2.0, 10.0)).unwrap();
        assert!((got - eta).abs() < 1e-6);

        let flat = vec![1.0; grid.n_interior()];
        let got = measure_decay(&flat, &grid, (2.0, 10.0)).unwrap();
        assert!(got.abs() < 1e-12);

        assert!(matches!(
            measure_decay(&phi, &grid, (11.8, 11.9)),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn simplicity_verdicts() {
        let pi = std::f64::consts::PI;
        let d = line();
        let o = op("1", "0", "piecewise(abs(x) < pi, 0, -1)").with_breakpoints(&[-pi, pi]);
        let rep = simplicity_check(&o, &d, 0.1421, &[pi], HPolicy::Auto, SolveParams::default())
            .unwrap();
        assert_eq!(rep.verdict, Simplicity::Simple);
        assert!(rep.tail_value.unwrap() > 0.9);

        let free = simplicity_check(
            &op("1", "0", "0"),
            &d,
            0.0,
            &[2.0],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        assert_eq!(free.verdict, Simplicity::Unknown);

        let bounded = DomainSpec::new(Geometry::Interval { a: 0.0, b: 1.0 });
        let rep = simplicity_check(
            &op("1", "0", "0"),
            &bounded,
            pi * pi,
            &[],
            HPolicy::Auto,
            SolveParams::default(),
        )
        .unwrap();
        assert_eq!(rep.verdict, Simplicity::Simple);
        // the (0,1) Laplacian gap is 3π²
        let gap = rep.eigen_gap.unwrap();
        assert!((gap - 3.0 * pi * pi).abs() < 0.1, "gap = {gap}");
    }
}
