//! Executable catalog of worked examples.
//!
//! Each scenario bundles an operator/domain builder with a list of
//! expectations: quantities computed through the same public APIs the CLI
//! uses, compared against targets that are either stated by the underlying
//! theory, derived from an independent numerical oracle (bisection on a
//! matching equation, a dense periodic eigensolve), or direct API contracts.
//! A scenario passes iff every expectation passes; reports render to CSV
//! (byte-identical across runs) and JSON (which adds the runtime).
//!
//! Provenance tags on every expectation:
//! - `stated: …` — the target is asserted by the law named in the text;
//! - `oracle: …` — the target was computed by an independent method named
//!   in the text;
//! - `contract: …` — the target is a direct contract of the API being run.

use crate::discrete::assemble_with;
use crate::domain::{DomainSpec, Geometry};
use crate::eig::{principal_eig, richardson, SolveParams};
use crate::error::{Error, Result};
use crate::expr::{eval1, eval_field, parse_field, ScalarField};
use crate::grid::build_grid;
use crate::operator::{growth_check, OperatorSpec};
use crate::principles::{
    apply_operator, certify_barrier, check_mp_witness, mp_verdict_unbounded, BarrierCandidate,
    BarrierKind, MPVerdict, Verdict, WitnessVariant,
};
use crate::shooting::integrate_ivp;
use crate::unbounded::{
    exhaust_lambda1, exterior_approach, lambda_doubleprime_interval, measure_decay, sc_classifier,
    simplicity_check, Classification, HPolicy, Model, Simplicity,
};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_4, PI, TAU};

/// Exhaustion schedule shared by the catalog's full-line scenarios.
const RADII: [f64; 4] = [4.0, 8.0, 16.0, 32.0];
/// Longer schedule for slowly (1/r²) converging scenarios.
const RADII_LONG: [f64; 4] = [8.0, 16.0, 32.0, 64.0];
/// Shorter schedule for verdict calls that only need the bracket signs.
const RADII_SHORT: [f64; 3] = [4.0, 8.0, 16.0];

fn sp() -> SolveParams {
    SolveParams::default()
}

/// Render a float so that parsing it back yields the identical bits.
fn lit(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// expectations
// ---------------------------------------------------------------------------

/// One checked quantity of a scenario: what was measured, what it should be,
/// how it may deviate, where the target comes from, and whether it passed.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Expectation {
    pub quantity: String,
    pub target: String,
    pub measured: String,
    pub tolerance: f64,
    pub provenance: String,
    pub pass: bool,
}

impl Expectation {
    fn within(quantity: &str, target: f64, measured: f64, tol: f64, provenance: String) -> Self {
        Expectation {
            quantity: quantity.into(),
            target: fmt_f(target),
            measured: fmt_f(measured),
            tolerance: tol,
            provenance,
            pass: (measured - target).abs() <= tol,
        }
    }

    fn at_least(quantity: &str, bound: f64, measured: f64, provenance: String) -> Self {
        Expectation {
            quantity: quantity.into(),
            target: format!(">= {}", fmt_f(bound)),
            measured: fmt_f(measured),
            tolerance: 0.0,
            provenance,
            pass: measured >= bound,
        }
    }

    fn at_most(quantity: &str, bound: f64, measured: f64, provenance: String) -> Self {
        Expectation {
            quantity: quantity.into(),
            target: format!("<= {}", fmt_f(bound)),
            measured: fmt_f(measured),
            tolerance: 0.0,
            provenance,
            pass: measured <= bound,
        }
    }

    fn strictly_above(quantity: &str, bound: f64, measured: f64, provenance: String) -> Self {
        Expectation {
            quantity: quantity.into(),
            target: format!("> {}", fmt_f(bound)),
            measured: fmt_f(measured),
            tolerance: 0.0,
            provenance,
            pass: measured > bound,
        }
    }

    fn strictly_below(quantity: &str, bound: f64, measured: f64, provenance: String) -> Self {
        Expectation {
            quantity: quantity.into(),
            target: format!("< {}", fmt_f(bound)),
            measured: fmt_f(measured),
            tolerance: 0.0,
            provenance,
            pass: measured < bound,
        }
    }

    fn matches(quantity: &str, target: &str, measured: &str, provenance: String) -> Self {
        Expectation {
            quantity: quantity.into(),
            target: target.into(),
            measured: measured.into(),
            tolerance: 0.0,
            provenance,
            pass: target == measured,
        }
    }
}

fn stated(law: &str) -> String {
    format!("stated: {law}")
}

fn oracle(how: &str) -> String {
    format!("oracle: {how}")
}

fn contract(what: &str) -> String {
    format!("contract: {what}")
}

/// "accepted"/"rejected (…)" outcome of a certification attempt.
fn cert_outcome(r: &Result<crate::principles::BarrierCertificate>) -> String {
    match r {
        Ok(_) => "accepted".into(),
        Err(e) => format!("rejected ({e})"),
    }
}

// ---------------------------------------------------------------------------
// catalog plumbing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScenarioInfo {
    pub id: String,
    pub description: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScenarioReport {
    pub id: String,
    pub description: String,
    pub expectations: Vec<Expectation>,
    /// True iff every expectation passed.
    pub passed: bool,
    /// Wall-clock runtime; reported in JSON only, never in CSV.
    pub runtime_ms: u128,
}

struct Entry {
    id: &'static str,
    description: &'static str,
    build: fn() -> Result<(OperatorSpec, DomainSpec)>,
    exec: fn() -> Result<Vec<Expectation>>,
}

static CATALOG: &[Entry] = &[
    Entry {
        id: "S1",
        description: "piecewise outward drift around a bounded core: the principal value stays \
                      positive while the vanishing-boundary variant drops below -1, so the \
                      maximum principle fails despite a positive principal value",
        build: build_s1,
        exec: run_s1,
    },
    Entry {
        id: "S2",
        description: "zero-order well on (-1,1), zero outside: every principal-value variant \
                      vanishes, and the fundamental solutions are flat on one side and divergent \
                      on the other",
        build: build_s2,
        exec: run_s2,
    },
    Entry {
        id: "S3",
        description: "zero-order term -1 beyond (-pi,pi): the principal value sits strictly \
                      below the core interval's value, its eigenfunction decays at a computable \
                      rate, is unique, and the maximum principle holds",
        build: build_s3,
        exec: run_s3,
    },
    Entry {
        id: "S4",
        description: "outward arctan drift with no zero-order term: the inf-bounded bracket \
                      collapses to [0,0] while two independent bounded solutions show the \
                      vanishing-boundary variant is not simple",
        build: build_s4,
        exec: run_s4,
    },
    Entry {
        id: "S5",
        description: "negative zero-order term vanishing at infinity with clamped odd drift: \
                      the principal value is certified positive yet the maximum principle fails \
                      on the half-line",
        build: build_s5,
        exec: run_s5,
    },
    Entry {
        id: "S6",
        description: "periodic potential cos(x): the exhausted principal value on the line \
                      matches the periodic principal eigenvalue from a dense periodic solve",
        build: build_s6,
        exec: run_s6,
    },
    Entry {
        id: "S7",
        description: "free second derivative with exponential comparison weight: the weighted \
                      variants sit at -sigma^2, certified from both sides by hyperbolic-cosine \
                      barriers, while the plain principal value is 0",
        build: build_s7,
        exec: run_s7,
    },
    Entry {
        id: "S8",
        description: "Dirichlet problem on (0,1) approached by outer inflations: the inflated \
                      eigenvalues increase to pi^2 along the exact scaled-interval law",
        build: build_s8,
        exec: run_s8,
    },
    Entry {
        id: "S9",
        description: "unbounded zero-order growth c = x: truncated principal values fall \
                      without deceleration, the divergent sentinel is reported, and the \
                      zero-order growth gate fires",
        build: build_s9,
        exec: run_s9,
    },
    Entry {
        id: "S10",
        description: "zero-order growth c = |x| compensated by the inward drift b = -2x: \
                      truncated principal values plateau at a finite limit despite unbounded c",
        build: build_s10,
        exec: run_s10,
    },
];

/// Catalog listing (id + description), in fixed order.
pub fn list() -> Vec<ScenarioInfo> {
    CATALOG
        .iter()
        .map(|e| ScenarioInfo { id: e.id.into(), description: e.description.into() })
        .collect()
}

fn entry(id: &str) -> Result<&'static Entry> {
    CATALOG
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownScenario(id.to_string()))
}

/// The scenario's operator and domain, for running other commands (relations,
/// exhaustion, verdicts) against catalog entries.
pub fn build(id: &str) -> Result<(OperatorSpec, DomainSpec)> {
    (entry(id)?.build)()
}

/// Run one scenario: execute every expectation and report pass/fail.
pub fn run(id: &str) -> Result<ScenarioReport> {
    let e = entry(id)?;
    let started = std::time::Instant::now();
    let expectations = (e.exec)()?;
    let passed = expectations.iter().all(|x| x.pass);
    Ok(ScenarioReport {
        id: e.id.into(),
        description: e.description.into(),
        expectations,
        passed,
        runtime_ms: started.elapsed().as_millis(),
    })
}

/// Run the whole catalog concurrently; report order matches `list()`.
pub fn run_all() -> Result<Vec<ScenarioReport>> {
    CATALOG.par_iter().map(|e| run(e.id)).collect()
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV rendering of scenario reports. Deterministic byte-for-byte for a
/// fixed catalog: no runtimes, all floats printed with 17 significant
/// digits, rows in catalog-then-expectation order.
pub fn catalog_csv(reports: &[ScenarioReport]) -> String {
    let mut out = String::from("scenario,quantity,target,measured,tolerance,provenance,pass\n");
    for rep in reports {
        for x in &rep.expectations {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&rep.id),
                csv_field(&x.quantity),
                csv_field(&x.target),
                csv_field(&x.measured),
                fmt_f(x.tolerance),
                csv_field(&x.provenance),
                x.pass
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// the transcendental constants of the outward-drift counterexample
// ---------------------------------------------------------------------------

/// Constants of the outward-drift counterexample's explicit supersolution.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GammaConstants {
    /// Root of g·tan(pi·g/4) = 2 in (1,2).
    pub gamma: f64,
    /// Tail amplitude e^{pi/2}·cos(pi·gamma/4) matching the middle piece.
    pub k: f64,
    /// Certified supersolution level min(1, gamma² − 1).
    pub lambda_star: f64,
    /// |gamma·tan(pi·gamma/4) − 2| at the returned root.
    pub residual: f64,
}

/// Bisection for the tail-matching root gamma in (1,2). The bracket is
/// guaranteed: the function is −1 at 1 and grows without bound toward the
/// tangent's pole at 2.
pub fn find_gamma() -> GammaConstants {
    let f = |g: f64| g * (PI * g / 4.0).tan() - 2.0;
    let (mut lo, mut hi) = (1.0f64, 1.999_999f64);
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = 0.5 * (lo + hi);
    GammaConstants {
        gamma,
        k: (PI / 2.0).exp() * (PI * gamma / 4.0).cos(),
        lambda_star: (gamma * gamma - 1.0).min(1.0),
        residual: f(gamma).abs(),
    }
}

// ---------------------------------------------------------------------------
// S1 — outward drift, positive principal value, failing maximum principle
// ---------------------------------------------------------------------------

fn build_s1() -> Result<(OperatorSpec, DomainSpec)> {
    let p4 = lit(FRAC_PI_4);
    let b = format!("piecewise(x < -{p4}, -4, piecewise(x > {p4}, 4, 0))");
    let c = format!("piecewise(abs(x) <= {p4}, 1, 3)");
    let op = OperatorSpec::parse_1d("1", &b, &c)?.with_breakpoints(&[-FRAC_PI_4, FRAC_PI_4]);
    Ok((op, DomainSpec::new(Geometry::FullLine)))
}

fn run_s1() -> Result<Vec<Expectation>> {
    let (op, dom) = build_s1()?;
    let g = find_gamma();
    let p4 = lit(FRAC_PI_4);
    let mut out = Vec::new();

    out.push(Expectation::within(
        "root residual of the tail-matching equation g*tan(pi*g/4) = 2",
        0.0,
        g.residual,
        1e-12,
        contract("bisection root-finder stops below this residual"),
    ));

    let ex = exhaust_lambda1(&op, &dom, &RADII, HPolicy::Auto, sp())?;
    out.push(Expectation::strictly_above(
        "exhausted principal value",
        0.0,
        ex.extrapolated,
        stated("a positive supersolution exists at a positive level, so the principal value is positive"),
    ));
    out.push(Expectation::at_least(
        "exhausted principal value vs the certified supersolution level",
        g.lambda_star - 1e-2,
        ex.extrapolated,
        stated("the principal value dominates every level carrying a positive supersolution"),
    ));

    // Explicit supersolution: matched exponential tails around a cosine core.
    let v = format!(
        "piecewise(x < -{p4}, {k}*exp(2*x), piecewise(x > {p4}, {k}*exp(-2*x), cos({ga}*x)))",
        k = lit(g.k),
        ga = lit(g.gamma)
    );
    let super_cand = BarrierCandidate {
        kind: BarrierKind::Super,
        beta: parse_field(&format!("{}*exp(-2*abs(x))", lit(0.5)), 1)?,
        phi: parse_field(&v, 1)?,
        lambda: g.lambda_star,
    };
    let cert = certify_barrier(&op, &dom, &super_cand, 0.005, 12.0);
    out.push(Expectation::matches(
        "supersolution certificate for the matched-tail barrier at the explicit level",
        "accepted",
        &cert_outcome(&cert),
        stated("the matched-tail function is a positive supersolution at level min(1, gamma^2 - 1)"),
    ));

    // The constant 1 is a bounded positive subsolution at level -1 (c >= 1
    // everywhere), capping the vanishing-boundary variant at -1.
    let one = parse_field("1", 1)?;
    let sub_cand = BarrierCandidate {
        kind: BarrierKind::Sub,
        beta: one.clone(),
        phi: one,
        lambda: -1.0,
    };
    let sub_cert = certify_barrier(&op, &dom, &sub_cand, 0.005, 12.0);
    out.push(Expectation::matches(
        "bounded subsolution certificate for the constant 1 at level -1",
        "accepted",
        &cert_outcome(&sub_cert),
        stated("c - 1 >= 0 everywhere, so the constant caps the vanishing-boundary variant at -1"),
    ));

    // Explicit positive bounded solution: exponential tails around a scaled
    // cosine; its interior residual vanishes away from the matching points.
    let s = lit(2.0f64.sqrt() * (-FRAC_PI_4).exp());
    let ubar = parse_field(
        &format!("piecewise(x < -{p4}, exp(x), piecewise(x > {p4}, exp(-x), {s}*cos(x)))"),
        1,
    )?;
    let mut max_resid = 0.0f64;
    let mut x = -8.0f64;
    while x <= 8.0 {
        if (x.abs() - FRAC_PI_4).abs() > 0.03 {
            max_resid = max_resid.max(apply_operator(&op, &ubar, &[x])?.abs());
        }
        x += 0.01;
    }
    out.push(Expectation::within(
        "sup of |L u| for the explicit solution away from the matching points",
        0.0,
        max_resid,
        1e-6,
        stated("the matched exponential-cosine function solves Lu = 0 off the matching points"),
    ));

    let wit = check_mp_witness(&op, &dom, &ubar, WitnessVariant::DecayAtInfinity, 0.005, 12.0)?;
    out.push(Expectation::strictly_above(
        "maximum of the accepted decay-at-infinity witness",
        0.0,
        wit.max_u,
        stated("the explicit solution is positive, bounded, and decays, violating even the decay variant"),
    ));
    // Shell sups sample the band [0.8r, r]; for a decaying function the sup
    // sits at the inner edge, so the effective radii carry the 0.8 factor.
    let (r1, s1) = wit.shell_sups[0];
    let (r2, s2) = wit.shell_sups[1];
    let eta = (s1 / s2).ln() / (0.8 * (r2 - r1));
    out.push(Expectation::within(
        "tail decay rate of the explicit solution",
        1.0,
        eta,
        0.02,
        stated("the explicit solution's tails are unit-rate exponentials"),
    ));

    let verdict = mp_verdict_unbounded(
        &op,
        &dom,
        &RADII_SHORT,
        HPolicy::Auto,
        sp(),
        None,
        &[sub_cand],
    )?;
    out.push(Expectation::matches(
        "maximum-principle verdict",
        &Verdict::Fails.to_string(),
        &verdict.verdict.to_string(),
        stated("the vanishing-boundary variant is negative, so the maximum principle fails"),
    ));

    Ok(out)
}

// ---------------------------------------------------------------------------
// S2 — zero-order well: all variants vanish; flat/divergent fundamentals
// ---------------------------------------------------------------------------

fn build_s2() -> Result<(OperatorSpec, DomainSpec)> {
    let op = OperatorSpec::parse_1d("1", "0", "piecewise(abs(x) < 1, -1, 0)")?
        .with_breakpoints(&[-1.0, 1.0]);
    Ok((op, DomainSpec::new(Geometry::FullLine)))
}

fn s2_expectations_for(op: &OperatorSpec, dom: &DomainSpec, tag: &str) -> Result<Vec<Expectation>> {
    let mut out = Vec::new();
    // The truncated values follow an inverse-square law with an O(1) radius
    // shift from the well, so the schedule starts far out to keep the fit
    // bias below the tolerance.
    let ex = exhaust_lambda1(op, dom, &[32.0, 64.0, 128.0], HPolicy::Auto, sp())?;
    out.push(Expectation::within(
        &format!("exhausted principal value ({tag})"),
        0.0,
        ex.extrapolated,
        1e-3,
        stated("a negative well that is zero outside a compact set leaves every variant at 0"),
    ));
    let dp = lambda_doubleprime_interval(op, dom, ex.extrapolated, &[4.0, 8.0], HPolicy::Auto, sp())?;
    out.push(Expectation::within(
        &format!("inf-bounded bracket lower endpoint ({tag})"),
        0.0,
        dp.lo,
        1e-3,
        stated("the tail zero-order bound is 0 where c vanishes outside the well"),
    ));
    out.push(Expectation::within(
        &format!("inf-bounded bracket upper endpoint ({tag})"),
        0.0,
        dp.hi,
        1e-3,
        stated("the tail principal value drops to 0 along widening exterior spans"),
    ));

    // Fundamental solutions started flat at the well's edges: constant on the
    // outward side, divergent across the well.
    for (edge, flat_dir, diverge_dir, side) in
        [(-1.0, -20.0, 20.0, "left-started"), (1.0, 20.0, -20.0, "right-started")]
    {
        let (u, _, ls) = integrate_ivp(op, 0.0, edge, 1.0, 0.0, flat_dir)?;
        out.push(Expectation::within(
            &format!("fundamental solution stays flat outward ({tag}, {side})"),
            1.0,
            u * ls.exp(),
            1e-6,
            oracle("initial-value integration of Lu = 0 from a flat start at the well's edge"),
        ));
        let (u, _, ls) = integrate_ivp(op, 0.0, edge, 1.0, 0.0, diverge_dir)?;
        out.push(Expectation::at_least(
            &format!("fundamental solution diverges across the well ({tag}, {side})"),
            10.0,
            u * ls.exp(),
            oracle("initial-value integration of Lu = 0 across the well and beyond"),
        ));
    }
    Ok(out)
}

fn run_s2() -> Result<Vec<Expectation>> {
    let (op1, dom) = build_s2()?;
    let mut out = s2_expectations_for(&op1, &dom, "flat well")?;
    let op2 = OperatorSpec::parse_1d("1", "0", "piecewise(abs(x) < 1, x^2 - 1, 0)")?
        .with_breakpoints(&[-1.0, 1.0]);
    out.extend(s2_expectations_for(&op2, &dom, "parabolic well")?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// S3 — decaying eigenfunction, simplicity, maximum principle holds
// ---------------------------------------------------------------------------

fn build_s3() -> Result<(OperatorSpec, DomainSpec)> {
    let op = OperatorSpec::parse_1d("1", "0", "piecewise(abs(x) < pi, 0, -1)")?
        .with_breakpoints(&[-PI, PI]);
    Ok((op, DomainSpec::new(Geometry::FullLine)))
}

/// Root of sqrt(l)·tan(sqrt(l)·pi) = sqrt(1−l) in (0, 1/4): matching a
/// cosine core to exponential tails of rate sqrt(1−l).
fn s3_matching_root() -> f64 {
    let f = |l: f64| l.sqrt() * (l.sqrt() * PI).tan() - (1.0 - l).sqrt();
    let (mut lo, mut hi) = (1e-6f64, 0.25 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn run_s3() -> Result<Vec<Expectation>> {
    let (op, dom) = build_s3()?;
    let root = s3_matching_root();
    let mut out = Vec::new();

    let ex = exhaust_lambda1(&op, &dom, &RADII, HPolicy::Auto, sp())?;
    out.push(Expectation::within(
        "exhausted principal value",
        root,
        ex.extrapolated,
        1e-3,
        oracle("bisection on the core/tail matching equation sqrt(l)*tan(sqrt(l)*pi) = sqrt(1-l)"),
    ));
    out.push(Expectation::strictly_below(
        "exhausted principal value vs the core interval's value",
        0.25,
        ex.extrapolated,
        stated("enlarging the domain strictly decreases the principal value here"),
    ));

    // Decay rate of the computed eigenfunction on a wide truncation.
    let region = dom.truncation(16.0)?;
    let grid = build_grid(&region, 0.01, &op.breakpoints)?;
    let d = assemble_with(&op, &grid, sp().scheme)?;
    let eig = principal_eig(&d, sp().tol, sp().max_iter)?;
    let eta = measure_decay(&eig.phi, &grid, (PI + 0.5, 12.0))?;
    let eta_target = (1.0 - root).sqrt();
    out.push(Expectation::within(
        "eigenfunction tail decay rate",
        eta_target,
        eta,
        0.02 * eta_target,
        oracle("log-linear fit of the computed eigenfunction against the tail-root rate sqrt(1 - l)"),
    ));

    let simple = simplicity_check(&op, &dom, ex.extrapolated, &RADII_SHORT, HPolicy::Auto, sp())?;
    out.push(Expectation::matches(
        "simplicity verdict",
        &format!("{:?}", Simplicity::Simple),
        &format!("{:?}", simple.verdict),
        stated("the principal value sits strictly below the tail value, so the eigenfunction is unique"),
    ));

    let class = sc_classifier(&op, &dom, ex.extrapolated, &RADII_SHORT, None)?;
    out.push(Expectation::matches(
        "bracket-collapse classification",
        "Case2",
        match class {
            Classification::Case1 { .. } => "Case1",
            Classification::Case2 => "Case2",
            Classification::Case3 => "Case3",
            Classification::Inconclusive => "Inconclusive",
        },
        stated("the principal value sits at or below the tail's zero-order floor"),
    ));

    let verdict = mp_verdict_unbounded(&op, &dom, &RADII_SHORT, HPolicy::Auto, sp(), None, &[])?;
    out.push(Expectation::matches(
        "maximum-principle verdict",
        &Verdict::Holds.to_string(),
        &verdict.verdict.to_string(),
        stated("a positive inf-bounded bracket with a negative zero-order tail forces the maximum principle"),
    ));

    Ok(out)
}

// ---------------------------------------------------------------------------
// S4 — arctan drift: [0,0] bracket and two independent bounded solutions
// ---------------------------------------------------------------------------

fn build_s4() -> Result<(OperatorSpec, DomainSpec)> {
    let op = OperatorSpec::parse_1d("1", "2*x/(1 + x^2)", "0")?;
    Ok((op, DomainSpec::new(Geometry::FullLine)))
}

fn run_s4() -> Result<Vec<Expectation>> {
    let (op, dom) = build_s4()?;
    let mut out = Vec::new();

    // The truncation error here carries a slowly decaying correction on top
    // of the inverse-square law, so the schedule starts further out.
    let ex = exhaust_lambda1(&op, &dom, &[16.0, 32.0, 64.0, 128.0], HPolicy::Auto, sp())?;
    out.push(Expectation::within(
        "exhausted principal value",
        0.0,
        ex.extrapolated,
        1e-3,
        stated("the constant 1 solves Lu = 0, pinning every variant at 0"),
    ));

    let dp = lambda_doubleprime_interval(&op, &dom, ex.extrapolated, &[4.0, 8.0], HPolicy::Auto, sp())?;
    out.push(Expectation::within(
        "inf-bounded bracket lower endpoint",
        0.0,
        dp.lo,
        1e-3,
        stated("the tail zero-order bound is 0 for a vanishing zero-order term"),
    ));
    out.push(Expectation::within(
        "inf-bounded bracket upper endpoint",
        0.0,
        dp.hi,
        1e-3,
        stated("the tail principal value drops to 0 along widening exterior spans"),
    ));

    for (name, expr) in [("constant", "1"), ("arctan ramp", "atan(x) + pi")] {
        let u = parse_field(expr, 1)?;
        let mut max_resid = 0.0f64;
        let mut x = -8.0;
        while x <= 8.0 {
            max_resid = max_resid.max(apply_operator(&op, &u, &[x])?.abs());
            x += 0.01;
        }
        out.push(Expectation::within(
            &format!("sup of |L u| for the {name} solution"),
            0.0,
            max_resid,
            1e-7,
            stated("two independent bounded positive solutions of Lu = 0 exist, so the \
                    vanishing-boundary variant is not simple"),
        ));
    }

    Ok(out)
}

// ---------------------------------------------------------------------------
// S5 — certified positive principal value, failing half-line MP
// ---------------------------------------------------------------------------

fn build_s5() -> Result<(OperatorSpec, DomainSpec)> {
    let b = "2*min(1, max(-1, sqrt(3)*x))";
    let c = format!(
        "-((2 - 6*x^2)/(1 + x^2)^3 + {b}*2*x/(1 + x^2)^2)/(2 - 1/(1 + x^2))"
    );
    let op = OperatorSpec::parse_1d("1", b, &c)?
        .with_breakpoints(&[-1.0 / 3.0f64.sqrt(), 1.0 / 3.0f64.sqrt()]);
    Ok((op, DomainSpec::new(Geometry::FullLine)))
}

fn run_s5() -> Result<Vec<Expectation>> {
    let (op, dom) = build_s5()?;
    let mut out = Vec::new();

    // c is negative everywhere and vanishes at infinity.
    let mut sup_c = f64::NEG_INFINITY;
    let mut x = -50.0;
    while x <= 50.0 {
        sup_c = sup_c.max(eval_field(&op.c, &[x])?);
        x += 0.01;
    }
    out.push(Expectation::strictly_below(
        "sampled sup of the zero-order coefficient",
        0.0,
        sup_c,
        stated("c = -(u'' + b u')/u is negative for the chosen positive u"),
    ));
    let far = eval_field(&op.c, &[1000.0])?.abs().max(eval_field(&op.c, &[-1000.0])?.abs());
    out.push(Expectation::within(
        "magnitude of c far out",
        0.0,
        far,
        1e-3,
        stated("the zero-order term vanishes at infinity"),
    ));

    // Supersolution certificate at level 1/2: exponential outside the drift's
    // clamp radius, matched parabola inside.
    let s3v = 1.0 / 3.0f64.sqrt();
    let c1 = 0.5 * 3.0f64.sqrt() * (-s3v).exp();
    let c0 = (-s3v).exp() * (1.0 + 0.5 / 3.0f64.sqrt());
    let phi = format!(
        "piecewise(abs(x) < {s}, {c0} - {c1}*x^2, exp(-abs(x)))",
        s = lit(s3v),
        c0 = lit(c0),
        c1 = lit(c1)
    );
    let cand = BarrierCandidate {
        kind: BarrierKind::Super,
        beta: parse_field("exp(-abs(x))/2", 1)?,
        phi: parse_field(&phi, 1)?,
        lambda: 0.5,
    };
    let cert = certify_barrier(&op, &dom, &cand, 0.005, 12.0);
    out.push(Expectation::matches(
        "supersolution certificate at level 0.5",
        "accepted",
        &cert_outcome(&cert),
        stated("the matched exponential-parabola is a positive supersolution at a positive level"),
    ));

    let ex = exhaust_lambda1(&op, &dom, &RADII, HPolicy::Auto, sp())?;
    out.push(Expectation::at_least(
        "exhausted principal value vs the certified level",
        0.5 - 0.02,
        ex.extrapolated,
        stated("truncated values decrease to the principal value, which dominates the certified level"),
    ));

    // On the half-line, u - 1 satisfies every maximum-principle hypothesis
    // yet is positive: the principle fails there.
    let half = DomainSpec::new(Geometry::HalfLine { a: 0.0 });
    let wit = check_mp_witness(
        &op,
        &half,
        &parse_field("x^2/(1 + x^2)", 1)?,
        WitnessVariant::Plain,
        0.005,
        12.0,
    )?;
    let verdict = MPVerdict::fails_by_witness(wit)?;
    out.push(Expectation::matches(
        "maximum-principle verdict on the half-line",
        &Verdict::Fails.to_string(),
        &verdict.verdict.to_string(),
        stated("u - 1 is a bounded positive subsolution with zero boundary limit on the half-line"),
    ));

    Ok(out)
}

// ---------------------------------------------------------------------------
// S6 — periodic potential: exhausted value matches the periodic eigenvalue
// ---------------------------------------------------------------------------

fn build_s6() -> Result<(OperatorSpec, DomainSpec)> {
    let op = OperatorSpec::parse_1d_self_adjoint("1", "cos(x)")?;
    Ok((op, DomainSpec::new(Geometry::FullLine)))
}

/// Principal eigenvalue of −(u″ + c u) under periodic boundary conditions on
/// [0, 2π), from a dense symmetric eigensolve of the wrapped second
/// difference — the independent oracle for the periodic scenario.
fn periodic_principal_value(c: &ScalarField, n: usize) -> Result<f64> {
    let h = TAU / n as f64;
    let w = 1.0 / (h * h);
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let x = i as f64 * h;
        m[(i, i)] = -2.0 * w + eval1(c, x)?;
        m[(i, (i + 1) % n)] += w;
        m[(i, (i + n - 1) % n)] += w;
    }
    let eigenvalues = m.symmetric_eigen().eigenvalues;
    Ok(-eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

fn run_s6() -> Result<Vec<Expectation>> {
    let (op, dom) = build_s6()?;
    let coarse = periodic_principal_value(&op.c, 240)?;
    let fine = periodic_principal_value(&op.c, 480)?;
    let lambda_p = richardson(coarse, fine, 2);

    let ex = exhaust_lambda1(&op, &dom, &RADII_LONG, HPolicy::Auto, sp())?;
    Ok(vec![Expectation::within(
        "exhausted principal value vs the periodic principal eigenvalue",
        lambda_p,
        ex.extrapolated,
        1e-3,
        oracle("dense symmetric eigensolve of the wrapped one-period discretization, step-refined"),
    )])
}

// ---------------------------------------------------------------------------
// S7 — exponential comparison weight certified from both sides
// ---------------------------------------------------------------------------

fn build_s7() -> Result<(OperatorSpec, DomainSpec)> {
    Ok((OperatorSpec::parse_1d("1", "0", "0")?, DomainSpec::new(Geometry::FullLine)))
}

fn run_s7() -> Result<Vec<Expectation>> {
    let (op, dom) = build_s7()?;
    let mut out = Vec::new();
    let cosh = parse_field("(exp(x) + exp(-x))/2", 1)?;

    let ex = exhaust_lambda1(&op, &dom, &RADII, HPolicy::Auto, sp())?;
    out.push(Expectation::within(
        "exhausted principal value",
        0.0,
        ex.extrapolated,
        1e-3,
        stated("the free second derivative on the line has principal value 0"),
    ));

    // cosh(x) lies between e^{|x|}/2 and e^{|x|} and satisfies
    // (L + l)cosh = (1 + l)cosh: both weighted variants sit exactly at -1.
    for (kind, beta, lambda, want) in [
        (BarrierKind::Super, "exp(abs(x))/2", -1.0, "accepted"),
        (BarrierKind::Super, "exp(abs(x))/2", -0.9, "rejected"),
        (BarrierKind::Sub, "exp(abs(x))", -1.0, "accepted"),
        (BarrierKind::Sub, "exp(abs(x))", -1.1, "rejected"),
    ] {
        let cand = BarrierCandidate {
            kind,
            beta: parse_field(beta, 1)?,
            phi: cosh.clone(),
            lambda,
        };
        let r = certify_barrier(&op, &dom, &cand, 0.05, 12.0);
        let outcome = match &r {
            Ok(_) => "accepted".to_string(),
            Err(Error::CertificateRejected { .. }) => "rejected".to_string(),
            Err(e) => format!("failed ({e})"),
        };
        out.push(Expectation::matches(
            &format!(
                "{kind}-kind certificate for the hyperbolic cosine against {beta} at level {}",
                fmt_f(lambda)
            ),
            want,
            &outcome,
            stated("both weighted variants under the exponential comparison weight equal -1 exactly"),
        ));
    }

    Ok(out)
}

// ---------------------------------------------------------------------------
// S8 — outer inflations increasing to the Dirichlet value
// ---------------------------------------------------------------------------

fn build_s8() -> Result<(OperatorSpec, DomainSpec)> {
    Ok((
        OperatorSpec::parse_1d("1", "0", "0")?,
        DomainSpec::new(Geometry::Interval { a: 0.0, b: 1.0 }),
    ))
}

fn run_s8() -> Result<Vec<Expectation>> {
    let (op, dom) = build_s8()?;
    let schedule = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0];
    let rep = exterior_approach(&op, &dom, &schedule, HPolicy::Auto, sp())?;
    let mut out = Vec::new();

    let pi2 = PI * PI;
    let mut max_rel_dev = 0.0f64;
    for row in rep.rows.iter().filter(|r| r.r.is_finite()) {
        let exact = pi2 / (1.0 + 2.0 / row.r).powi(2);
        max_rel_dev = max_rel_dev.max((row.lambda - exact).abs() / exact);
    }
    out.push(Expectation::within(
        "max relative deviation of inflated eigenvalues from the scaled-interval law",
        0.0,
        max_rel_dev,
        1e-3,
        oracle("closed-form Dirichlet value pi^2/(1 + 2/n)^2 on the inflated interval"),
    ));
    out.push(Expectation::matches(
        "inflated eigenvalues increase monotonically",
        "true",
        &rep.monotone.to_string(),
        stated("the principal value decreases under domain inclusion, so inflations approach from below"),
    ));
    out.push(Expectation::within(
        "extrapolated limit of the inflation sequence",
        pi2,
        rep.extrapolated,
        1e-3,
        stated("outer approximations converge to the Dirichlet value on the closed interval"),
    ));
    let direct = rep.rows.last().unwrap().lambda;
    out.push(Expectation::within(
        "direct solve on the limit interval",
        pi2,
        direct,
        1e-3,
        oracle("closed-form Dirichlet value pi^2 on the unit interval"),
    ));

    Ok(out)
}

// ---------------------------------------------------------------------------
// S9 — divergence under unbounded zero-order growth
// ---------------------------------------------------------------------------

fn build_s9() -> Result<(OperatorSpec, DomainSpec)> {
    Ok((OperatorSpec::parse_1d("1", "0", "x")?, DomainSpec::new(Geometry::FullLine)))
}

fn run_s9() -> Result<Vec<Expectation>> {
    let (op, dom) = build_s9()?;
    let ex = exhaust_lambda1(&op, &dom, &RADII, HPolicy::Auto, sp())?;
    let mut out = Vec::new();

    out.push(Expectation::at_most(
        "truncated principal value at the schedule's end",
        -10.0,
        ex.rows.last().unwrap().lambda,
        stated("truncated values fall below every bound when c grows without bound"),
    ));
    out.push(Expectation::matches(
        "truncated values decrease monotonically",
        "true",
        &ex.monotone.to_string(),
        stated("the principal value decreases under domain inclusion"),
    ));
    out.push(Expectation::matches(
        "extrapolation model",
        &Model::None.to_string(),
        &ex.model.to_string(),
        contract("a sequence falling without deceleration selects the divergent sentinel"),
    ));
    out.push(Expectation::matches(
        "divergent sentinel",
        &fmt_f(f64::NEG_INFINITY),
        &fmt_f(ex.extrapolated),
        stated("unbounded zero-order growth drives the principal value to negative infinity"),
    ));

    let growth = growth_check(&op, &dom, &RADII)?;
    out.push(Expectation::matches(
        "zero-order growth gate flags an unbounded c",
        "true",
        &growth.c_unbounded.to_string(),
        contract("the sampled shell suprema of c keep climbing, so the gate must fire"),
    ));

    Ok(out)
}

// ---------------------------------------------------------------------------
// S10 — finite limit despite unbounded c, thanks to inward drift
// ---------------------------------------------------------------------------

fn build_s10() -> Result<(OperatorSpec, DomainSpec)> {
    let op = OperatorSpec::parse_1d("1", "-2*x", "abs(x)")?.with_breakpoints(&[0.0]);
    Ok((op, DomainSpec::new(Geometry::FullLine)))
}

fn run_s10() -> Result<Vec<Expectation>> {
    let (op, dom) = build_s10()?;
    let ex = exhaust_lambda1(&op, &dom, &RADII, HPolicy::Auto, sp())?;
    let mut out = Vec::new();

    let finite_plateau = ex.extrapolated.is_finite()
        && matches!(ex.model, Model::Plateau | Model::Exponential);
    out.push(Expectation::matches(
        "truncated values plateau at a finite limit",
        "true",
        &finite_plateau.to_string(),
        stated("zero-order growth dominated by the inward drift keeps the principal value finite"),
    ));
    out.push(Expectation::within(
        "gap between the last truncated value and the extrapolated limit",
        0.0,
        ex.rows.last().unwrap().lambda - ex.extrapolated,
        1e-3,
        contract("a plateaued sequence sits on its own extrapolation"),
    ));

    let growth = growth_check(&op, &dom, &RADII)?;
    out.push(Expectation::matches(
        "zero-order growth gate flags an unbounded c",
        "true",
        &growth.c_unbounded.to_string(),
        contract("c = |x| is unbounded, so the gate must fire even though the limit is finite"),
    ));

    // The drift-compensated growth ratio c/(1 + |b·x|/|x|) stays bounded.
    let mut ratio_sup = f64::NEG_INFINITY;
    let mut x = -64.0f64;
    while x <= 64.0 {
        if x.abs() > 1e-9 {
            let c = eval_field(&op.c, &[x])?;
            let b = eval_field(&op.b[0], &[x])?;
            ratio_sup = ratio_sup.max(c / (1.0 + (b * x).abs() / x.abs()));
        }
        x += 0.01;
    }
    out.push(Expectation::at_most(
        "sampled sup of the drift-compensated growth ratio",
        0.5 + 1e-9,
        ratio_sup,
        stated("the zero-order term scaled by the radial drift stays bounded, which keeps the limit finite"),
    ));

    Ok(out)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_constants_solve_the_tail_matching_equation() {
        let g = find_gamma();
        assert!(g.residual <= 1e-12, "residual {}", g.residual);
        assert!(g.gamma > 1.0 && g.gamma < 2.0);
        // frozen from an independent evaluation of the transcendental
        assert!((g.gamma - 1.2766).abs() < 5e-4, "gamma {}", g.gamma);
        assert!((g.lambda_star - 0.6297).abs() < 2e-3, "lambda* {}", g.lambda_star);
        let k_expected = (PI / 2.0).exp() * (PI * g.gamma / 4.0).cos();
        assert_eq!(g.k, k_expected);
        assert!(g.lambda_star < 1.0);
    }

    #[test]
    fn catalog_lists_ten_unique_scenarios_and_rejects_unknown_ids() {
        let infos = list();
        assert!(infos.len() >= 10);
        let mut ids: Vec<&str> = infos.iter().map(|i| i.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), infos.len(), "duplicate scenario ids");
        for want in ["S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "S9", "S10"] {
            assert!(infos.iter().any(|i| i.id == want), "missing {want}");
        }
        match run("bogus") {
            Err(Error::UnknownScenario(id)) => assert_eq!(id, "bogus"),
            other => panic!("expected UnknownScenario, got {other:?}"),
        }
        assert!(build("nope").is_err());
    }

    #[test]
    fn matching_root_for_the_decay_example() {
        let root = s3_matching_root();
        // frozen from an independent evaluation of the matching equation
        assert!((root - 0.14215).abs() < 5e-4, "root {root}");
        let g = root.sqrt() * (root.sqrt() * PI).tan() - (1.0 - root).sqrt();
        assert!(g.abs() < 1e-10, "residual {g}");
    }

    #[test]
    fn periodic_dense_oracle_is_step_stable() {
        let c = parse_field("cos(x)", 1).unwrap();
        let coarse = periodic_principal_value(&c, 120).unwrap();
        let fine = periodic_principal_value(&c, 240).unwrap();
        let extr = richardson(coarse, fine, 2);
        // step-halving must already agree to a few parts in 1e5
        assert!((coarse - fine).abs() < 5e-5, "coarse {coarse} fine {fine}");
        // frozen from the refined dense solve
        assert!((extr - (-0.37849)).abs() < 2e-3, "lambda_p {extr}");
    }

    #[test]
    fn arctan_drift_scenario_passes_and_renders_deterministic_csv() {
        let rep1 = run("S4").unwrap();
        for x in &rep1.expectations {
            assert!(x.pass, "failed: {} measured {} target {}", x.quantity, x.measured, x.target);
        }
        assert!(rep1.passed);
        let rep2 = run("S4").unwrap();
        assert_eq!(catalog_csv(&[rep1]), catalog_csv(&[rep2]));
    }

    #[test]
    fn exponential_weight_scenario_accepts_and_rejects_on_cue() {
        let rep = run("S7").unwrap();
        assert!(rep.passed, "{:#?}", rep.expectations);
        assert_eq!(rep.expectations.len(), 5);
    }

    #[test]
    fn csv_escapes_fields_with_commas_and_quotes() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
