//! Config-driven command front end.
//!
//! A run is described by a TOML file with named blocks — `[operator]`,
//! `[domain]`, `[solve]`, plus command-specific blocks (`[eig]`, `[tail]`,
//! `[sweep]`, `[[barrier]]`, `[witness]`, `[checks]`) — optionally patched by
//! repeatable `--set key.path=value` overrides. Unknown keys are rejected;
//! syntax errors carry line/column positions and schema errors name the
//! offending field.
//!
//! Every command writes `<out>/<command>.csv` and `<out>/<command>.json`.
//! CSV files are byte-stable for a fixed config (floats printed with 17
//! significant digits; no timings), except the sweep table whose spec'd row
//! schema includes per-row runtimes. JSON mirrors the full report and adds
//! the wall-clock runtime.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numeric failure,
//! 3 violated invariant (including `[checks]` assertions and failed
//! scenario expectations).

use crate::discrete::DriftScheme;
use crate::domain::{DomainSpec, Geometry};
use crate::eig::{eig_value, principal_eig, SolveParams};
use crate::error::{Error, Result};
use crate::expr::parse_field;
use crate::grid::build_grid;
use crate::operator::OperatorSpec;
use crate::principles::{
    certify_barrier, check_mp_witness, mp_verdict_unbounded, relations_report, BarrierCandidate,
    BarrierKind, MPVerdict, Verdict, WitnessVariant,
};
use crate::scenarios;
use crate::unbounded::{
    exhaust_lambda1, exterior_approach, lambda_doubleprime_interval, tail_c_sup, tail_lambda1,
    ExhaustionReport, HPolicy,
};
use crate::{asymptotics, discrete};
use clap::Parser;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// 17-significant-digit float rendering shared by all CSV output.
pub fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// command line
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "eigenlab",
    version,
    about = "principal eigenvalues of second-order elliptic operators and \
             maximum-principle verdicts",
    after_help = "Exit codes: 0 ok, 1 config error, 2 numeric failure, 3 violated invariant."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration (see README for the block grammar).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Dotted-path config override, e.g. --set solve.tol=1e-12 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Directory receiving <command>.csv and <command>.json.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    pub out: PathBuf,

    /// Worker threads (default: EIGENLAB_THREADS, then all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Solver tolerance override (wins over the config's solve.tol).
    #[arg(long, global = true, value_name = "X")]
    pub tol: Option<f64>,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Principal eigenvalue on a bounded domain.
    Eig,
    /// Truncation exhaustion (unbounded domains) or outer inflation
    /// (bounded domains) over the solve.radii schedule.
    Exhaust,
    /// Tail principal values beyond a fixed radius and the inf-bounded
    /// bracket they support.
    Tail,
    /// The full chain of eigenvalue relations with provenance lines.
    Relations,
    /// Maximum-principle verdict, optionally sharpened by barriers or
    /// refuted by a witness.
    Mp,
    /// Coefficient sweeps with derived law columns.
    Sweep,
    /// The worked-example catalog.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Debug, clap::Subcommand)]
pub enum ScenarioAction {
    /// List catalog entries.
    List,
    /// Run one entry by id (or `all`).
    Run { id: String },
}

// ---------------------------------------------------------------------------
// run configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub operator: Option<OperatorBlock>,
    pub domain: Option<DomainBlock>,
    #[serde(default)]
    pub solve: SolveBlock,
    pub eig: Option<EigBlock>,
    pub tail: Option<TailBlock>,
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub barrier: Vec<BarrierBlock>,
    pub witness: Option<WitnessBlock>,
    pub checks: Option<ChecksBlock>,
}

/// An expression field. Accepts a string (`c = "x^2 - 1"`) or a bare number
/// (`c = 0`), which is rendered to its shortest round-trip literal.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprString(pub String);

impl<'de> Deserialize<'de> for ExprString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = ExprString;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an expression string or a number")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<ExprString, E> {
                Ok(ExprString(v.to_string()))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<ExprString, E> {
                Ok(ExprString(v.to_string()))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<ExprString, E> {
                Ok(ExprString(v.to_string()))
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<ExprString, E> {
                Ok(ExprString(format!("{v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

/// Coefficient expressions: one entry in 1D, a list of entries in 2D
/// (`a = ["1", "1"]` for the two diagonal diffusion entries, `b = ["0", "0"]`
/// for the drift components).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    One(ExprString),
    Many(Vec<ExprString>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorBlock {
    pub dim: usize,
    pub a: Option<Coef>,
    pub b: Option<Coef>,
    #[serde(default = "zero_expr")]
    pub c: ExprString,
    /// "plain" (default) or "divergence" (1D self-adjoint (a u')' + c u).
    pub form: Option<String>,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
}

fn zero_expr() -> ExprString {
    ExprString("0".into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    /// interval | half_line | full_line | rectangle | disk | annulus | full_plane
    pub geometry: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub x0: Option<f64>,
    pub y0: Option<f64>,
    pub x1: Option<f64>,
    pub y1: Option<f64>,
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub r: Option<f64>,
    pub r_in: Option<f64>,
    pub r_out: Option<f64>,
    /// Optional declaration cross-checked against the geometry.
    pub unbounded: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    /// Fixed grid step; omit for the automatic radius-aware policy.
    pub h: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Truncation/inflation schedule for exhaustion-based commands.
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// "upwind" or "central_when_safe" (default).
    pub scheme: Option<String>,
}

fn default_radii() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0]
}

impl Default for SolveBlock {
    fn default() -> Self {
        SolveBlock { h: None, tol: None, max_iter: None, radii: default_radii(), scheme: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigBlock {
    /// Also write the eigenfunction samples to <out>/eig_phi.csv.
    #[serde(default)]
    pub save_phi: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailBlock {
    /// Inner radius of the tail region.
    pub r: f64,
    /// Outer radii; defaults to {2r, 4r, 8r}.
    #[serde(default)]
    pub outer: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// "c" scales the zero-order term, "a" scales the diffusion.
    pub coefficient: String,
    /// Parameter ladder ("c" requires a 0 entry; "a" must be positive).
    pub values: Vec<f64>,
    pub radius: Option<f64>,
    pub band: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierBlock {
    /// "sub" or "super".
    pub kind: String,
    pub beta: ExprString,
    pub phi: ExprString,
    pub lambda: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessBlock {
    pub u: ExprString,
    /// "plain" (default) or "decay".
    pub variant: Option<String>,
}

/// User-asserted bounds on the command's principal eigenvalue estimate;
/// violations exit with the invariant code (3), distinct from numeric
/// failures.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksBlock {
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
}

// ---------------------------------------------------------------------------
// config loading and --set overrides
// ---------------------------------------------------------------------------

fn parse_set_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("key v always present"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    }
}

fn apply_set(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{spec}`")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(|p| p.is_empty()) {
        return Err(Error::Config(format!("--set key path `{key}` has an empty segment")));
    }
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = root;
    for part in &parts[..parts.len() - 1] {
        let table = cur.as_table_mut().ok_or_else(|| {
            Error::Config(format!("--set path `{key}`: `{part}`'s parent is not a table"))
        })?;
        cur = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = cur.as_table_mut().ok_or_else(|| {
        Error::Config(format!("--set path `{key}` overwrites a non-table value"))
    })?;
    table.insert(parts.last().unwrap().to_string(), parse_set_value(raw));
    Ok(())
}

/// Load the run configuration: read the TOML file (if any), apply `--set`
/// overrides, and deserialize with unknown keys rejected. Parsing the file
/// without overrides preserves exact line/column diagnostics.
pub fn load_config(path: Option<&Path>, sets: &[String]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    if sets.is_empty() {
        return toml::from_str(&text).map_err(|e| Error::Config(e.to_string()));
    }
    let mut value: toml::Value =
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    for s in sets {
        apply_set(&mut value, s)?;
    }
    value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

// ---------------------------------------------------------------------------
// building specs from blocks
// ---------------------------------------------------------------------------

fn coef_one(c: &Option<Coef>, name: &str, default: &str) -> Result<String> {
    match c {
        None => Ok(default.to_string()),
        Some(Coef::One(s)) => Ok(s.0.clone()),
        Some(Coef::Many(_)) => Err(Error::Config(format!(
            "operator.{name} must be a single expression string in 1D"
        ))),
    }
}

fn coef_many(c: &Option<Coef>, name: &str, n: usize, default: &str) -> Result<Vec<String>> {
    match c {
        None => Ok(vec![default.to_string(); n]),
        Some(Coef::One(s)) => Ok(vec![s.0.clone(); n]),
        Some(Coef::Many(v)) if v.len() == n => Ok(v.iter().map(|s| s.0.clone()).collect()),
        Some(Coef::Many(v)) => Err(Error::Config(format!(
            "operator.{name} needs {n} expressions in 2D, got {}",
            v.len()
        ))),
    }
}

pub fn build_operator(block: &OperatorBlock) -> Result<OperatorSpec> {
    let form = block.form.as_deref().unwrap_or("plain");
    let op = match (block.dim, form) {
        (1, "plain") => OperatorSpec::parse_1d(
            &coef_one(&block.a, "a", "1")?,
            &coef_one(&block.b, "b", "0")?,
            &block.c.0,
        )?,
        (1, "divergence") => {
            if matches!(&block.b, Some(Coef::One(s)) if s.0.trim() != "0")
                || matches!(&block.b, Some(Coef::Many(_)))
            {
                return Err(Error::Config(
                    "operator.b is not allowed with form = \"divergence\" \
                     ((a u')' + c u has no separate drift)"
                        .into(),
                ));
            }
            OperatorSpec::parse_1d_self_adjoint(&coef_one(&block.a, "a", "1")?, &block.c.0)?
        }
        (2, "plain") => {
            let a = coef_many(&block.a, "a", 2, "1")?;
            let b = coef_many(&block.b, "b", 2, "0")?;
            OperatorSpec::parse_2d(&a[0], &a[1], &b[0], &b[1], &block.c.0)?
        }
        (2, "divergence") => {
            return Err(Error::Config(
                "form = \"divergence\" is one-dimensional; model 2D drift explicitly".into(),
            ))
        }
        (d, "plain" | "divergence") => {
            return Err(Error::Config(format!("operator.dim must be 1 or 2, got {d}")))
        }
        (_, other) => {
            return Err(Error::Config(format!(
                "operator.form must be \"plain\" or \"divergence\", got \"{other}\""
            )))
        }
    };
    Ok(op.with_breakpoints(&block.breakpoints))
}

fn req(v: Option<f64>, geometry: &str, field: &str) -> Result<f64> {
    v.ok_or_else(|| {
        Error::Config(format!("domain.geometry = \"{geometry}\" requires domain.{field}"))
    })
}

pub fn build_domain(block: &DomainBlock) -> Result<DomainSpec> {
    let g = block.geometry.as_str();
    let geometry = match g {
        "interval" => Geometry::Interval { a: req(block.a, g, "a")?, b: req(block.b, g, "b")? },
        "half_line" => Geometry::HalfLine { a: req(block.a, g, "a")? },
        "full_line" => Geometry::FullLine,
        "rectangle" => Geometry::Rectangle {
            x0: req(block.x0, g, "x0")?,
            y0: req(block.y0, g, "y0")?,
            x1: req(block.x1, g, "x1")?,
            y1: req(block.y1, g, "y1")?,
        },
        "disk" => Geometry::Disk {
            cx: block.cx.unwrap_or(0.0),
            cy: block.cy.unwrap_or(0.0),
            r: req(block.r, g, "r")?,
        },
        "annulus" => Geometry::Annulus {
            cx: block.cx.unwrap_or(0.0),
            cy: block.cy.unwrap_or(0.0),
            r_in: req(block.r_in, g, "r_in")?,
            r_out: req(block.r_out, g, "r_out")?,
        },
        "full_plane" => Geometry::FullPlane,
        other => {
            return Err(Error::Config(format!(
                "unknown domain.geometry \"{other}\" (expected interval, half_line, full_line, \
                 rectangle, disk, annulus, or full_plane)"
            )))
        }
    };
    let dom = DomainSpec::new(geometry);
    if let Some(unbounded) = block.unbounded {
        if unbounded == dom.is_bounded() {
            return Err(Error::Config(format!(
                "domain.unbounded = {unbounded} contradicts geometry \"{g}\""
            )));
        }
    }
    Ok(dom)
}

fn build_solve(block: &SolveBlock, tol_flag: Option<f64>) -> Result<SolveParams> {
    let mut sp = SolveParams::default();
    if let Some(t) = block.tol {
        sp.tol = t;
    }
    if let Some(t) = tol_flag {
        sp.tol = t;
    }
    if !(sp.tol > 0.0) {
        return Err(Error::Config(format!("solve.tol must be positive, got {}", sp.tol)));
    }
    if let Some(m) = block.max_iter {
        sp.max_iter = m;
    }
    match block.scheme.as_deref() {
        None => {}
        Some("upwind") => sp.scheme = DriftScheme::Upwind,
        Some("central_when_safe") => sp.scheme = DriftScheme::CentralWhenSafe,
        Some(other) => {
            return Err(Error::Config(format!(
                "solve.scheme must be \"upwind\" or \"central_when_safe\", got \"{other}\""
            )))
        }
    }
    Ok(sp)
}

fn h_policy(block: &SolveBlock) -> Result<HPolicy> {
    match block.h {
        None => Ok(HPolicy::Auto),
        Some(h) if h > 0.0 => Ok(HPolicy::Fixed(h)),
        Some(h) => Err(Error::Config(format!("solve.h must be positive, got {h}"))),
    }
}

fn build_barrier(block: &BarrierBlock, dim: usize) -> Result<BarrierCandidate> {
    let kind = match block.kind.as_str() {
        "sub" => BarrierKind::Sub,
        "super" => BarrierKind::Super,
        other => {
            return Err(Error::Config(format!(
                "barrier.kind must be \"sub\" or \"super\", got \"{other}\""
            )))
        }
    };
    Ok(BarrierCandidate {
        kind,
        beta: parse_field(&block.beta.0, dim)?,
        phi: parse_field(&block.phi.0, dim)?,
        lambda: block.lambda,
    })
}

fn operator_and_domain(cfg: &RunConfig) -> Result<(OperatorSpec, DomainSpec)> {
    let ob = cfg
        .operator
        .as_ref()
        .ok_or_else(|| Error::Config("this command requires an [operator] block".into()))?;
    let db = cfg
        .domain
        .as_ref()
        .ok_or_else(|| Error::Config("this command requires a [domain] block".into()))?;
    let op = build_operator(ob)?;
    let dom = build_domain(db)?;
    if op.dim != dom.dim() {
        return Err(Error::Config(format!(
            "operator.dim = {} does not match the {}-dimensional domain",
            op.dim,
            dom.dim()
        )));
    }
    Ok((op, dom))
}

fn apply_checks(checks: &Option<ChecksBlock>, what: &str, lambda: f64) -> Result<()> {
    if let Some(ch) = checks {
        if let Some(lo) = ch.lambda_min {
            if !(lambda >= lo) {
                return Err(Error::ChainViolation(format!(
                    "checks.lambda_min = {} asserted, but {what} = {}",
                    f17(lo),
                    f17(lambda)
                )));
            }
        }
        if let Some(hi) = ch.lambda_max {
            if !(lambda <= hi) {
                return Err(Error::ChainViolation(format!(
                    "checks.lambda_max = {} asserted, but {what} = {}",
                    f17(hi),
                    f17(lambda)
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// output plumbing
// ---------------------------------------------------------------------------

struct Outcome {
    csv: String,
    json: serde_json::Value,
    summary: String,
    /// Extra (name, csv) side files, e.g. the eigenfunction samples.
    extra: Vec<(String, String)>,
    /// Error to raise after the outputs are written (invariant failures
    /// still produce their tables).
    deferred: Option<Error>,
}

impl Outcome {
    fn new(csv: String, json: serde_json::Value, summary: String) -> Self {
        Outcome { csv, json, summary, extra: Vec::new(), deferred: None }
    }
}

fn schema_line(command: &str) -> String {
    format!("# schema eigenlab.{command} v1\n")
}

fn write_outputs(out_dir: &Path, command: &str, outcome: &Outcome) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{command}.csv"));
    std::fs::write(&csv_path, format!("{}{}", schema_line(command), outcome.csv))?;
    let json_path = out_dir.join(format!("{command}.json"));
    let mut json = serde_json::to_string_pretty(&outcome.json)
        .map_err(|e| Error::Config(format!("JSON encoding failed: {e}")))?;
    json.push('\n');
    std::fs::write(&json_path, json)?;
    for (name, body) in &outcome.extra {
        std::fs::write(out_dir.join(name), body)?;
    }
    Ok(())
}

fn exhaustion_table_csv(rep: &ExhaustionReport, row_kind: &str, row_prov: &str) -> String {
    let mut csv = String::from("kind,r,h,lambda,provenance\n");
    for row in &rep.rows {
        csv.push_str(&format!(
            "{row_kind},{},{},{},{}\n",
            if row.r.is_finite() { f17(row.r) } else { "inf".into() },
            f17(row.h),
            f17(row.lambda),
            row_prov
        ));
    }
    csv.push_str(&format!(
        "extrapolated,,,{},\"model {}, fit residual {}, monotone {}, slack {}\"\n",
        f17(rep.extrapolated),
        rep.model,
        f17(rep.fit_residual),
        rep.monotone,
        f17(rep.slack)
    ));
    csv
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

fn cmd_eig(cfg: &RunConfig, tol_flag: Option<f64>) -> Result<Outcome> {
    let (op, dom) = operator_and_domain(cfg)?;
    if !dom.is_bounded() {
        return Err(Error::PreconditionFailed(
            "eig needs a bounded domain; use exhaust on unbounded ones".into(),
        ));
    }
    let sp = build_solve(&cfg.solve, tol_flag)?;
    let h = match h_policy(&cfg.solve)? {
        HPolicy::Fixed(h) => h,
        auto => auto.h_for_bounded(dom.dim()),
    };
    let region = dom.as_region()?;
    let grid = build_grid(&region, h, &op.breakpoints)?;
    let d = discrete::assemble_with(&op, &grid, sp.scheme)?;
    let res = principal_eig(&d, sp.tol, sp.max_iter)?;
    apply_checks(&cfg.checks, "lambda", res.lambda)?;

    let mut csv = String::from("lambda,residual,iterations,h,nodes,method\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{}\n",
        f17(res.lambda),
        f17(res.residual),
        res.iterations,
        f17(h),
        grid.points.len(),
        res.method
    ));
    let json = serde_json::json!({
        "lambda": res.lambda,
        "residual": res.residual,
        "iterations": res.iterations,
        "h": h,
        "nodes": grid.points.len(),
        "method": res.method.to_string(),
    });
    let mut outcome = Outcome::new(
        csv,
        json,
        format!("lambda = {} (residual {}, {} iterations)", f17(res.lambda), f17(res.residual), res.iterations),
    );
    if cfg.eig.as_ref().is_some_and(|e| e.save_phi) {
        let mut phi_csv = String::from(if dom.dim() == 1 { "x,phi\n" } else { "x,y,phi\n" });
        for (p, v) in grid.points.iter().zip(&res.phi) {
            let coords: Vec<String> = p.iter().map(|&x| f17(x)).collect();
            phi_csv.push_str(&format!("{},{}\n", coords.join(","), f17(*v)));
        }
        outcome.extra.push(("eig_phi.csv".into(), phi_csv));
    }
    Ok(outcome)
}

fn cmd_exhaust(cfg: &RunConfig, tol_flag: Option<f64>) -> Result<Outcome> {
    let (op, dom) = operator_and_domain(cfg)?;
    let sp = build_solve(&cfg.solve, tol_flag)?;
    let hp = h_policy(&cfg.solve)?;
    let (rep, row_kind, row_prov) = if dom.is_bounded() {
        (
            exterior_approach(&op, &dom, &cfg.solve.radii, hp, sp)?,
            "inflation",
            "stated: principal values of shrinking inflations increase to the bounded-domain value",
        )
    } else {
        (
            exhaust_lambda1(&op, &dom, &cfg.solve.radii, hp, sp)?,
            "truncation",
            "stated: truncated principal values decrease to the limit under domain inclusion",
        )
    };
    apply_checks(&cfg.checks, "extrapolated lambda", rep.extrapolated)?;
    let csv = exhaustion_table_csv(&rep, row_kind, row_prov);
    let json = serde_json::to_value(&rep).map_err(|e| Error::Config(e.to_string()))?;
    let summary = format!(
        "extrapolated lambda = {} (model {}, {} {} rows)",
        f17(rep.extrapolated),
        rep.model,
        rep.rows.len(),
        row_kind
    );
    Ok(Outcome::new(csv, json, summary))
}

fn cmd_tail(cfg: &RunConfig, tol_flag: Option<f64>) -> Result<Outcome> {
    let (op, dom) = operator_and_domain(cfg)?;
    if dom.is_bounded() {
        return Err(Error::PreconditionFailed(
            "tail needs an unbounded domain; bounded domains have no tail".into(),
        ));
    }
    let tb = cfg
        .tail
        .as_ref()
        .ok_or_else(|| Error::Config("tail requires a [tail] block with r".into()))?;
    if !(tb.r > 0.0) {
        return Err(Error::Config(format!("tail.r must be positive, got {}", tb.r)));
    }
    let outer: Vec<f64> = if tb.outer.is_empty() {
        vec![2.0 * tb.r, 4.0 * tb.r, 8.0 * tb.r]
    } else {
        tb.outer.clone()
    };
    let sp = build_solve(&cfg.solve, tol_flag)?;
    let hp = h_policy(&cfg.solve)?;

    let mut csv = String::from("kind,R,h,lambda,provenance\n");
    let mut rows = Vec::new();
    for &big_r in &outer {
        let region = dom.tail_truncated(tb.r, big_r)?;
        let h = hp.h_for(dom.dim(), big_r);
        let lambda = eig_value(&op, &region, h, sp.scheme, sp.tol, sp.max_iter)?;
        csv.push_str(&format!(
            "tail,{},{},{},stated: tail principal values decrease in the outer radius\n",
            f17(big_r),
            f17(h),
            f17(lambda)
        ));
        rows.push(serde_json::json!({ "R": big_r, "h": h, "lambda": lambda }));
    }
    let tail_value = tail_lambda1(&op, &dom, tb.r, &outer, hp, sp)?;
    let csup = tail_c_sup(&op, &dom, tb.r)?;
    let lambda1_est = exhaust_lambda1(&op, &dom, &cfg.solve.radii, hp, sp)?.extrapolated;
    let dp = lambda_doubleprime_interval(&op, &dom, lambda1_est, &cfg.solve.radii, hp, sp)?;
    apply_checks(&cfg.checks, "tail lambda", tail_value)?;

    csv.push_str(&format!(
        "tail_extrapolated,,,{},contract: extrapolated limit of the rows above\n",
        f17(tail_value)
    ));
    csv.push_str(&format!(
        "minus_tail_c_sup,,,{},stated: the tail value dominates -sup of c over the tail\n",
        f17(-csup)
    ));
    csv.push_str(&format!(
        "doubleprime_lo,,,{},{}\n",
        f17(dp.lo),
        csv_quote(&format!("stated: {}", dp.lo_source))
    ));
    csv.push_str(&format!(
        "doubleprime_hi,,,{},{}\n",
        f17(dp.hi),
        csv_quote(&format!("stated: {}", dp.hi_source))
    ));

    let json = serde_json::json!({
        "r": tb.r,
        "outer": outer,
        "rows": rows,
        "tail_extrapolated": tail_value,
        "tail_c_sup": csup,
        "lambda1_est": lambda1_est,
        "doubleprime": dp,
    });
    let summary = format!(
        "tail lambda = {} beyond r = {}; inf-bounded bracket [{}, {}]",
        f17(tail_value),
        tb.r,
        f17(dp.lo),
        f17(dp.hi)
    );
    Ok(Outcome::new(csv, json, summary))
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_relations(cfg: &RunConfig, tol_flag: Option<f64>) -> Result<Outcome> {
    let (op, dom) = operator_and_domain(cfg)?;
    let sp = build_solve(&cfg.solve, tol_flag)?;
    let hp = h_policy(&cfg.solve)?;
    let rep = relations_report(&op, &dom, &cfg.solve.radii, hp, sp)?;
    apply_checks(&cfg.checks, "lambda1 estimate", rep.lambda1_est)?;

    let mut csv = String::from("quantity,lo,hi,provenance\n");
    csv.push_str(&format!(
        "minus_sup_c,{},{},stated: the whole chain is bounded below by -sup c\n",
        f17(rep.minus_sup_c),
        f17(rep.minus_sup_c)
    ));
    csv.push_str(&format!(
        "lambda1_doubleprime,{},{},{}\n",
        f17(rep.doubleprime.lo),
        f17(rep.doubleprime.hi),
        csv_quote(&format!("stated: {}; {}", rep.doubleprime.lo_source, rep.doubleprime.hi_source))
    ));
    csv.push_str(&format!(
        "lambda1_prime,{},{},{}\n",
        f17(rep.prime.lo),
        f17(rep.prime.hi),
        csv_quote(&format!("stated: {}; {}", rep.prime.lo_source, rep.prime.hi_source))
    ));
    csv.push_str(&format!(
        "lambda1,{},{},stated: exhaustion limit of truncated principal values\n",
        f17(rep.lambda1_est),
        f17(rep.lambda1_est)
    ));
    for line in &rep.lines {
        csv.push_str(&format!("relation,,,{}\n", csv_quote(line)));
    }
    let summary = rep.lines.join("\n");
    let json = serde_json::to_value(&rep).map_err(|e| Error::Config(e.to_string()))?;
    Ok(Outcome::new(csv, json, summary))
}

fn cmd_mp(cfg: &RunConfig, tol_flag: Option<f64>) -> Result<Outcome> {
    let (op, dom) = operator_and_domain(cfg)?;
    let sp = build_solve(&cfg.solve, tol_flag)?;
    let hp = h_policy(&cfg.solve)?;
    let radius = cfg.solve.radii.last().copied().unwrap_or(8.0) * 2.0;
    let h_cert = hp.h_for_bounded(dom.dim());

    let mut sub_cands = Vec::new();
    let mut barrier_rows = Vec::new();
    for block in &cfg.barrier {
        let cand = build_barrier(block, dom.dim())?;
        match cand.kind {
            BarrierKind::Sub => sub_cands.push(cand),
            BarrierKind::Super => {
                // Super barriers floor lambda1; certify and report them, but
                // the verdict consumes only sub barriers.
                let outcome = match certify_barrier(&op, &dom, &cand, h_cert, radius) {
                    Ok(_) => "accepted".to_string(),
                    Err(Error::CertificateRejected { x, y, inequality, value }) => format!(
                        "rejected at ({x}, {y}): {inequality} (value {value:.6e})"
                    ),
                    Err(e) => return Err(e),
                };
                barrier_rows.push((block.lambda, outcome));
            }
        }
    }

    let verdict: MPVerdict = if dom.is_bounded() {
        let h = match h_policy(&cfg.solve)? {
            HPolicy::Fixed(h) => h,
            auto => auto.h_for_bounded(dom.dim()),
        };
        let region = dom.as_region()?;
        let grid = build_grid(&region, h, &op.breakpoints)?;
        let d = discrete::assemble_with(&op, &grid, sp.scheme)?;
        let holds = crate::principles::discrete_mp_holds(&d)?;
        MPVerdict {
            verdict: if holds { Verdict::Holds } else { Verdict::Fails },
            basis: "discrete principal eigenvalue sign on the bounded domain".into(),
            witness: None,
        }
    } else {
        mp_verdict_unbounded(&op, &dom, &cfg.solve.radii, hp, sp, None, &sub_cands)?
    };

    // A user-supplied plain witness overrides with direct evidence; a decay
    // witness is checked and reported but refutes only the decay variant.
    let mut verdict = verdict;
    let mut decay_witness_note = None;
    if let Some(wb) = &cfg.witness {
        let variant = match wb.variant.as_deref() {
            None | Some("plain") => WitnessVariant::Plain,
            Some("decay") => WitnessVariant::DecayAtInfinity,
            Some(other) => {
                return Err(Error::Config(format!(
                    "witness.variant must be \"plain\" or \"decay\", got \"{other}\""
                )))
            }
        };
        let u = parse_field(&wb.u.0, dom.dim())?;
        let report = check_mp_witness(&op, &dom, &u, variant, h_cert, radius)?;
        if variant == WitnessVariant::Plain {
            verdict = MPVerdict::fails_by_witness(report)?;
        } else {
            decay_witness_note = Some(format!(
                "accepted decay-at-infinity witness with max u = {} (refutes the decay variant)",
                f17(report.max_u)
            ));
            verdict.witness = Some(report);
        }
    }

    let mut csv = String::from("quantity,value,provenance\n");
    csv.push_str(&format!(
        "verdict,{},{}\n",
        verdict.verdict,
        csv_quote(&verdict.basis)
    ));
    for (lambda, outcome) in &barrier_rows {
        csv.push_str(&format!(
            "super_barrier_at_{},{},stated: an accepted supersolution barrier floors lambda1 at its level\n",
            f17(*lambda),
            csv_quote(outcome)
        ));
    }
    if let Some(note) = &decay_witness_note {
        csv.push_str(&format!("decay_witness,accepted,{}\n", csv_quote(note)));
    }
    if let Some(w) = &verdict.witness {
        csv.push_str(&format!(
            "witness_max_u,{},contract: maximum of the accepted witness over the sampled region\n",
            f17(w.max_u)
        ));
    }
    let json = serde_json::to_value(&verdict).map_err(|e| Error::Config(e.to_string()))?;
    let summary = format!("maximum principle: {} ({})", verdict.verdict, verdict.basis);
    Ok(Outcome::new(csv, json, summary))
}

fn cmd_sweep(cfg: &RunConfig, tol_flag: Option<f64>) -> Result<Outcome> {
    let (op, dom) = operator_and_domain(cfg)?;
    let sb = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep requires a [sweep] block".into()))?;
    let mut settings = asymptotics::SweepSettings {
        h_policy: h_policy(&cfg.solve)?,
        solve: build_solve(&cfg.solve, tol_flag)?,
        ..Default::default()
    };
    if let Some(r) = sb.radius {
        settings.radius = r;
    }
    if let Some(band) = sb.band {
        settings.band = band;
    }
    let table = match sb.coefficient.as_str() {
        "c" => asymptotics::sweep_c(&op, &dom, &sb.values, &settings)?,
        "a" => asymptotics::sweep_a(&op, &dom, &sb.values, &settings)?,
        other => {
            return Err(Error::Config(format!(
                "sweep.coefficient must be \"c\" or \"a\", got \"{other}\""
            )))
        }
    };
    let csv = table.to_csv();
    let json = serde_json::to_value(&table).map_err(|e| Error::Config(e.to_string()))?;
    let summary = format!(
        "swept {} over {} values; tail slope {} vs -sup c = {}",
        table.parameter,
        table.rows.len(),
        f17(table.tail_slope),
        f17(table.minus_sup_c)
    );
    Ok(Outcome::new(csv, json, summary))
}

fn cmd_scenario(action: &ScenarioAction) -> Result<Outcome> {
    match action {
        ScenarioAction::List => {
            let infos = scenarios::list();
            let mut csv = String::from("id,description\n");
            for info in &infos {
                csv.push_str(&format!("{},{}\n", info.id, csv_quote(&info.description)));
            }
            let json = serde_json::to_value(&infos).map_err(|e| Error::Config(e.to_string()))?;
            let summary = format!("{} scenarios in the catalog", infos.len());
            Ok(Outcome::new(csv, json, summary))
        }
        ScenarioAction::Run { id } => {
            let reports = if id == "all" {
                scenarios::run_all()?
            } else {
                vec![scenarios::run(id)?]
            };
            let csv = scenarios::catalog_csv(&reports);
            let json =
                serde_json::to_value(&reports).map_err(|e| Error::Config(e.to_string()))?;
            let failed: Vec<&str> = reports
                .iter()
                .filter(|r| !r.passed)
                .map(|r| r.id.as_str())
                .collect();
            let summary = reports
                .iter()
                .map(|r| format!("{}: {}", r.id, if r.passed { "pass" } else { "FAIL" }))
                .collect::<Vec<_>>()
                .join("\n");
            let mut outcome = Outcome::new(csv, json, summary);
            if !failed.is_empty() {
                outcome.deferred = Some(Error::ChainViolation(format!(
                    "scenario expectations failed: {}",
                    failed.join(", ")
                )));
            }
            Ok(outcome)
        }
    }
}

// ---------------------------------------------------------------------------
// entry points
// ---------------------------------------------------------------------------

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("EIGENLAB_THREADS") {
        Ok(s) => {
            let n: usize = s.trim().parse().map_err(|_| {
                Error::Config(format!("EIGENLAB_THREADS must be a positive integer, got `{s}`"))
            })?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Eig => "eig",
        Command::Exhaust => "exhaust",
        Command::Tail => "tail",
        Command::Relations => "relations",
        Command::Mp => "mp",
        Command::Sweep => "sweep",
        Command::Scenario { .. } => "scenario",
    }
}

/// Run a parsed command line end to end: configure threads, load the config,
/// dispatch the command, and write `<out>/<command>.{csv,json}`. Returns the
/// human-readable summary for stdout.
pub fn run_cli(cli: &Cli) -> Result<String> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        // A second initialization (tests, repeated calls) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let name = command_name(&cli.command);
    let outcome = match &cli.command {
        Command::Scenario { action } => cmd_scenario(action)?,
        other => {
            let cfg = load_config(cli.config.as_deref(), &cli.set)?;
            match other {
                Command::Eig => cmd_eig(&cfg, cli.tol)?,
                Command::Exhaust => cmd_exhaust(&cfg, cli.tol)?,
                Command::Tail => cmd_tail(&cfg, cli.tol)?,
                Command::Relations => cmd_relations(&cfg, cli.tol)?,
                Command::Mp => cmd_mp(&cfg, cli.tol)?,
                Command::Sweep => cmd_sweep(&cfg, cli.tol)?,
                Command::Scenario { .. } => unreachable!(),
            }
        }
    };
    write_outputs(&cli.out, name, &outcome)?;
    if let Some(err) = outcome.deferred {
        return Err(err);
    }
    Ok(format!(
        "{}\nwrote {} and {}",
        outcome.summary,
        cli.out.join(format!("{name}.csv")).display(),
        cli.out.join(format!("{name}.json")).display()
    ))
}

/// Process-level entry: parse arguments, run, map errors to exit codes.
pub fn cli_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_from(text: &str, sets: &[&str]) -> Result<RunConfig> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        let sets: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
        load_config(Some(&path), &sets)
    }

    const BASE: &str = r#"
[operator]
dim = 1
a = "1"
b = "0"
c = "0"

[domain]
geometry = "interval"
a = 0.0
b = 1.0
"#;

    #[test]
    fn config_round_trip_builds_specs() {
        let cfg = cfg_from(BASE, &[]).unwrap();
        let (op, dom) = operator_and_domain(&cfg).unwrap();
        assert_eq!(op.dim, 1);
        assert!(dom.is_bounded());
        assert_eq!(cfg.solve.radii, vec![4.0, 8.0, 16.0, 32.0]);
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_field_name() {
        let err = cfg_from("[operator]\ndim = 1\nzz = 3\n", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("zz"), "diagnostic should name the field: {msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let err = cfg_from("[operator\ndim = 1\n", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "diagnostic should carry the line: {msg}");
    }

    #[test]
    fn set_overrides_apply_with_types() {
        let cfg = cfg_from(
            BASE,
            &["solve.tol=1e-9", "solve.radii=[2.0, 4.0, 8.0]", "operator.c=x^2", "checks.lambda_min=-5.0"],
        )
        .unwrap();
        assert_eq!(cfg.solve.tol, Some(1e-9));
        assert_eq!(cfg.solve.radii, vec![2.0, 4.0, 8.0]);
        // unquoted strings fall back to string values
        assert_eq!(cfg.operator.as_ref().unwrap().c.0, "x^2");
        assert_eq!(cfg.checks.unwrap().lambda_min, Some(-5.0));
    }

    #[test]
    fn set_without_equals_is_a_config_error() {
        let err = cfg_from(BASE, &["solve.tol"]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn set_on_fresh_tree_creates_tables() {
        let sets: Vec<String> =
            ["operator.dim=1", "operator.c=0", "domain.geometry=full_line"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        let cfg = load_config(None, &sets).unwrap();
        let (op, dom) = operator_and_domain(&cfg).unwrap();
        assert_eq!(op.dim, 1);
        assert!(!dom.is_bounded());
    }

    #[test]
    fn geometry_validation_names_the_missing_field() {
        let err = cfg_from("[domain]\ngeometry = \"interval\"\na = 0.0\n", &[])
            .map(|cfg| build_domain(cfg.domain.as_ref().unwrap()))
            .unwrap()
            .unwrap_err();
        assert!(err.to_string().contains("domain.b"), "{err}");
    }

    #[test]
    fn unbounded_flag_contradiction_is_rejected() {
        let block: DomainBlock = toml::from_str(
            "geometry = \"full_line\"\nunbounded = false\n",
        )
        .unwrap();
        let err = build_domain(&block).unwrap_err();
        assert!(err.to_string().contains("contradicts"), "{err}");
    }

    #[test]
    fn checks_violations_map_to_the_invariant_exit_code() {
        let checks = Some(ChecksBlock { lambda_min: Some(100.0), lambda_max: None });
        let err = apply_checks(&checks, "lambda", 9.87).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(apply_checks(&checks, "lambda", 100.0).is_ok());
        let both = Some(ChecksBlock { lambda_min: None, lambda_max: Some(9.0) });
        assert_eq!(apply_checks(&both, "lambda", 9.87).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn divergence_form_rejects_a_drift() {
        let block: OperatorBlock = toml::from_str(
            "dim = 1\na = \"1\"\nb = \"x\"\nc = \"0\"\nform = \"divergence\"\n",
        )
        .unwrap();
        assert!(build_operator(&block).is_err());
        let ok: OperatorBlock =
            toml::from_str("dim = 1\na = \"1\"\nc = \"cos(x)\"\nform = \"divergence\"\n").unwrap();
        assert!(build_operator(&ok).unwrap().is_self_adjoint());
    }

    #[test]
    fn two_dimensional_coefficients_need_two_entries() {
        let bad: OperatorBlock =
            toml::from_str("dim = 2\na = [\"1\"]\nc = \"0\"\n").unwrap();
        assert!(build_operator(&bad).is_err());
        let ok: OperatorBlock =
            toml::from_str("dim = 2\na = [\"1\", \"1\"]\nb = [\"0\", \"0\"]\nc = \"0\"\n")
                .unwrap();
        assert_eq!(build_operator(&ok).unwrap().dim, 2);
    }

    #[test]
    fn float_rendering_has_17_significant_digits() {
        assert_eq!(f17(std::f64::consts::PI), "3.1415926535897931e0");
        assert_eq!(f17(f64::NEG_INFINITY), "-inf");
    }
}
