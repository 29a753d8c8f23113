//! Command-line front end: one subcommand per library operation, JSON in,
//! a [`ResultEnvelope`] out.
//!
//! Every flag that takes a structured value accepts inline JSON or a path to
//! a JSON file. Exit status is 0 on success, 1 when a selftest criterion
//! fails, 2 on input errors and 3 on numerical failures.

use std::ffi::OsString;
use std::path::Path;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bohr::{self, FrequencySet, HaarMethod, Integrand};
use crate::error::{Error, Result};
use crate::gaussian::{self, CovarianceSeq, GaussianSampler};
use crate::kernels::{self, GridFunction, KernelSpec};
use crate::mc;
use crate::measure_core::{
    consistency_check, countable_product_measure, cylinder_measure, CountableConstraint, CylinderSet, MarginalTable,
    ProductMeasureSpec, ProductOptions, Sampler,
};
use crate::selftest::{self, Level};
use crate::seq::FiniteSequence;
use crate::support::{self, DiagonalOperator};
use crate::transform::{self, ShiftSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Default absolute tolerance for quadratures and product limits.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Per-axis points for Haar quadrature when neither `--points` nor `--mc` is given.
pub const DEFAULT_HAAR_POINTS: usize = 16;

// ---- typed inputs ------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleInputs {
    pub cov: CovarianceSeq,
    pub truncation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiInputs {
    pub cov: CovarianceSeq,
    pub vector: FiniteSequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentInputs {
    pub cov: CovarianceSeq,
    pub vectors: Vec<FiniteSequence>,
    /// Monte Carlo cross-check sample count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnDensityInputs {
    pub cov: CovarianceSeq,
    pub shift: FiniteSequence,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftAdmissibleInputs {
    pub cov: CovarianceSeq,
    pub shift: ShiftSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceInputs {
    pub cov_a: CovarianceSeq,
    pub cov_b: CovarianceSeq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailGrowthInputs {
    pub truncation: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportInputs {
    pub cov: CovarianceSeq,
    pub weights: DiagonalOperator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<TailGrowthInputs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsCheckInputs {
    pub weights: DiagonalOperator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelInputs {
    pub spec: KernelSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub at: Vec<f64>,
    /// Fixed Fourier cutoff; chosen from the tolerance when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bilinear: Option<(GridFunction, GridFunction)>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub regularity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BohrInputs {
    pub freqs: FrequencySet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_independence: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral: Option<Integrand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<HaarMethod>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductInputs {
    pub spec: ProductMeasureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinder: Option<CylinderSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<CountableConstraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyInputs {
    pub tables: Vec<MarginalTable>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestInputs {
    pub level: Level,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<u32>,
}

/// One module operation with its parsed inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", content = "inputs", rename_all = "kebab-case")]
pub enum Request {
    Sample(SampleInputs),
    Chi(ChiInputs),
    Moment(MomentInputs),
    RnDensity(RnDensityInputs),
    ShiftAdmissible(ShiftAdmissibleInputs),
    Equivalence(EquivalenceInputs),
    Support(SupportInputs),
    HsCheck(HsCheckInputs),
    Kernel(KernelInputs),
    Bohr(BohrInputs),
    Product(ProductInputs),
    Consistency(ConsistencyInputs),
    Selftest(SelftestInputs),
}

impl Request {
    pub fn name(&self) -> &'static str {
        match self {
            Request::Sample(_) => "sample",
            Request::Chi(_) => "chi",
            Request::Moment(_) => "moment",
            Request::RnDensity(_) => "rn-density",
            Request::ShiftAdmissible(_) => "shift-admissible",
            Request::Equivalence(_) => "equivalence",
            Request::Support(_) => "support",
            Request::HsCheck(_) => "hs-check",
            Request::Kernel(_) => "kernel",
            Request::Bohr(_) => "bohr",
            Request::Product(_) => "product",
            Request::Consistency(_) => "consistency",
            Request::Selftest(_) => "selftest",
        }
    }

    /// Whether the request draws random numbers and so needs a seed.
    pub fn is_stochastic(&self) -> bool {
        match self {
            Request::Sample(_) => true,
            Request::Moment(m) => m.mc_samples.is_some(),
            Request::Support(s) => s.mc.is_some(),
            Request::Bohr(b) => b.sample || matches!(b.method, Some(HaarMethod::Mc { .. })),
            Request::Selftest(s) => s.level == Level::Full,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub request: Request,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub out: OutputFormat,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::input(format!("--tol must be finite and > 0, got {t}")));
            }
        }
        if self.request.is_stochastic() && self.seed.is_none() {
            return Err(Error::input(format!("`{}` samples random numbers; pass --seed", self.request.name())));
        }
        match &self.request {
            Request::Kernel(k) => {
                k.spec.validate()?;
                if let Some((f, g)) = &k.bilinear {
                    f.validate()?;
                    g.validate()?;
                }
                if k.at.is_empty() && k.bilinear.is_none() && !k.regularity {
                    return Err(Error::input("kernel: give --at, --bilinear or --regularity"));
                }
            }
            Request::Bohr(b) => {
                if b.check_independence.is_none() && b.integral.is_none() && !b.sample {
                    return Err(Error::input("bohr: give --check-independence, --integral or --sample"));
                }
            }
            Request::Product(p) => {
                p.spec.validate()?;
                if p.cylinder.is_some() == p.constraint.is_some() {
                    return Err(Error::input("product: give exactly one of --cylinder and --constraint"));
                }
            }
            Request::Consistency(c) => {
                for t in &c.tables {
                    t.validate()?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of request, seed and tolerance.
    pub fn digest(&self) -> String {
        let canonical = json!({"request": self.request, "seed": self.seed, "tol": self.tol}).to_string();
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

// ---- output ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub subcommand: String,
    pub inputs: Value,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub inputs_digest: String,
    pub payload: Value,
    pub error_bounds: Value,
    /// Evidence records and oracle results backing the payload.
    pub details: Value,
    /// Which methods and oracles produced the numbers.
    pub provenance: Vec<String>,
    pub wall_time_ms: f64,
}

/// Rows for `--out csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::input(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::input(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Default)]
struct Outcome {
    payload: Value,
    error_bounds: Value,
    details: Value,
    provenance: Vec<String>,
    table: Option<Table>,
}

impl Outcome {
    fn new(payload: impl Serialize) -> Self {
        Outcome { payload: to_value(payload), error_bounds: json!({}), details: json!({}), ..Default::default() }
    }

    fn note(mut self, s: &str) -> Self {
        self.provenance.push(s.to_string());
        self
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("library types serialize to JSON")
}

fn set(target: &mut Value, key: &str, v: impl Serialize) {
    target[key] = to_value(v);
}

// ---- dispatch ----------------------------------------------------------

/// Runs the request and wraps the result. The CSV table, when the
/// subcommand has one, is returned alongside.
pub fn run(config: &RunConfig) -> Result<(ResultEnvelope, Option<Table>)> {
    config.validate()?;
    let start = Instant::now();
    let seed = config.seed.unwrap_or(0);
    let tol = config.tol.unwrap_or(DEFAULT_TOL);
    let out = match &config.request {
        Request::Sample(r) => run_sample(r, seed)?,
        Request::Chi(r) => Outcome::new(gaussian::chi(&r.vector, &r.cov)?).note("closed form exp(-½ Σ ρ_n ξ_n²)"),
        Request::Moment(r) => run_moment(r, seed)?,
        Request::RnDensity(r) => {
            let log = transform::log_rn_density(&r.x, &r.shift, &r.cov)?;
            let mut o = Outcome::new(log.exp()).note("closed form exp(Σ (x_n - y_n/2) y_n / ρ_n)");
            set(&mut o.details, "log_density", log);
            o
        }
        Request::ShiftAdmissible(r) => {
            let series = transform::cameron_martin_series(&r.shift, &r.cov)?;
            let mut o = Outcome::new(transform::shift_admissible(&r.shift, &r.cov)?)
                .note("symbolic convergence of Σ y_n² / ρ_n");
            set(&mut o.details, "series", series);
            o
        }
        Request::Equivalence(r) => {
            let v = transform::equivalence_classify(&r.cov_a, &r.cov_b);
            let mut o = Outcome::new(v.verdict).note("symbolic leading term of Σ ((ρ'_n - ρ_n)/ρ_n)²");
            set(&mut o.details, "evidence", v.evidence);
            o
        }
        Request::Support(r) => run_support(r, seed)?,
        Request::HsCheck(r) => {
            let series = support::hilbert_schmidt_series(&r.weights)?;
            let mut o =
                Outcome::new(support::hilbert_schmidt_check(&r.weights)?).note("symbolic convergence of Σ h_n²");
            set(&mut o.details, "series", series);
            o
        }
        Request::Kernel(r) => run_kernel(r, tol)?,
        Request::Bohr(r) => run_bohr(r, seed)?,
        Request::Product(r) => run_product(r, tol)?,
        Request::Consistency(r) => {
            let c = consistency_check(&r.tables)?;
            let mut o = Outcome::new(c.consistent).note("marginalization of every larger table onto every smaller one");
            set(&mut o.details, "violation", c.violation);
            o
        }
        Request::Selftest(r) => run_selftest(r, seed)?,
    };
    let envelope = ResultEnvelope {
        subcommand: config.request.name().to_string(),
        inputs: to_value(&config.request)["inputs"].clone(),
        seed: config.seed,
        tol: config.tol,
        inputs_digest: config.digest(),
        payload: out.payload,
        error_bounds: out.error_bounds,
        details: out.details,
        provenance: out.provenance,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((envelope, out.table))
}

fn run_sample(r: &SampleInputs, seed: u64) -> Result<Outcome> {
    let s = gaussian::sample(&r.cov, r.truncation, seed)?;
    let mut table = Table::new(&["index", "value"]);
    for (i, v) in s.values.iter().enumerate() {
        table.push(vec![(i + 1).to_string(), v.to_string()]);
    }
    let mut o = Outcome::new(&s.values).note("independent normals x_n = √ρ_n z_n, ChaCha8 stream 0");
    set(&mut o.details, "seed", s.seed);
    o.table = Some(table);
    Ok(o)
}

fn run_moment(r: &MomentInputs, seed: u64) -> Result<Outcome> {
    let w = gaussian::wick_moment(&r.cov, &r.vectors)?;
    let mut o = Outcome::new(w).note("Wick pairing sum (hafnian)");
    if let Some(n) = r.mc_samples {
        let dim = r.vectors.iter().map(FiniteSequence::max_index).max().unwrap_or(0).max(1) as usize;
        let sampler = GaussianSampler::new(&r.cov, dim)?;
        let e = mc::mean_estimate(n, seed, |rng| {
            let mut x = vec![0.0; dim];
            sampler.sample_into(rng, &mut x);
            Ok(r.vectors.iter().map(|v| v.iter().map(|(k, c)| c * x[k as usize - 1]).sum::<f64>()).product())
        })?;
        set(&mut o.details, "mc", e);
        set(&mut o.error_bounds, "mc_standard_error", e.standard_error);
        set(&mut o.error_bounds, "mc_z_score", e.z_score(w));
        o = o.note("Monte Carlo oracle on the truncated Gaussian");
    }
    Ok(o)
}

fn run_support(r: &SupportInputs, seed: u64) -> Result<Outcome> {
    let v = support::weighted_support_check(&r.cov, &r.weights);
    let mut o = Outcome::new(v.verdict).note("symbolic convergence of Σ a_n² ρ_n");
    set(&mut o.details, "evidence", &v);
    if let Some(mc) = r.mc {
        let g = support::mc_tail_growth(&r.cov, &r.weights, mc.truncation, mc.samples, seed)?;
        let mut table = Table::new(&["n", "mean", "standard_error"]);
        for p in &g.trace {
            table.push(vec![p.n.to_string(), p.mean.to_string(), p.standard_error.to_string()]);
        }
        set(&mut o.error_bounds, "plateau_standard_error", g.plateau_standard_error);
        set(&mut o.details, "tail_growth", &g);
        o.table = Some(table);
        o = o.note("Monte Carlo partial sums of Σ a_n² x_n²");
    }
    Ok(o)
}

fn run_kernel(r: &KernelInputs, tol: f64) -> Result<Outcome> {
    let mut payload = serde_json::Map::new();
    let mut o = Outcome::new(());
    let mut table = Table::new(&["x", "value", "quadrature", "error_bound"]);
    if !r.at.is_empty() {
        let mut values = Vec::new();
        let mut oracles = Vec::new();
        for &x in &r.at {
            let v = r.spec.eval(x)?;
            values.push(v);
            let mut row = vec![x.to_string(), v.to_string(), String::new(), String::new()];
            if let KernelSpec::MassiveFree1D { m } = r.spec {
                let q = kernels::kernel_fourier_quadrature(m, x, r.cutoff, tol)?;
                row[2] = q.value.to_string();
                row[3] = q.error_bound().to_string();
                oracles.push(json!({"x": x, "quadrature": q, "abs_difference": (q.value - v).abs()}));
            }
            table.push(row);
        }
        if matches!(r.spec, KernelSpec::MassiveFree1D { .. }) {
            let bound =
                oracles.iter().map(|q| q["abs_difference"].as_f64().unwrap_or(f64::INFINITY)).fold(0.0f64, f64::max);
            set(&mut o.error_bounds, "max_abs_difference_vs_quadrature", bound);
            set(&mut o.details, "quadrature", oracles);
            o = o
                .note("closed form e^{-m|x|}/(2m)")
                .note("Fourier quadrature oracle (1/2π)∫ e^{ipx}/(p² + m²) dp with tail bound");
        } else {
            o = o.note("tabulated kernel, linear interpolation");
        }
        payload.insert("at".into(), to_value(values));
    }
    if let Some((f, g)) = &r.bilinear {
        let b = kernels::covariance_bilinear(&r.spec, f, g)?;
        if let Some(e) = b.error_estimate {
            set(&mut o.error_bounds, "bilinear_richardson", e);
        }
        payload.insert("bilinear".into(), to_value(b.value));
        o = o.note("trapezoid double sum, Richardson error estimate");
    }
    if r.regularity {
        payload.insert("regularity".into(), to_value(kernels::support_regularity_flag(&r.spec)?));
        if matches!(r.spec, KernelSpec::Tabulated { .. }) {
            o = o.note("regularity of a tabulated kernel is a jump heuristic");
        }
    }
    // a single query collapses to its bare value
    o.payload = match (payload.len(), payload.get("at")) {
        (1, Some(Value::Array(v))) if v.len() == 1 => v[0].clone(),
        (1, _) => payload.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null),
        _ => Value::Object(payload),
    };
    if !r.at.is_empty() {
        o.table = Some(table);
    }
    Ok(o)
}

fn run_bohr(r: &BohrInputs, seed: u64) -> Result<Outcome> {
    let mut payload = serde_json::Map::new();
    let mut o = Outcome::new(());
    if let Some(bound) = r.check_independence {
        payload.insert("independence".into(), to_value(bohr::independence_check(&r.freqs, bound)?));
        o = o.note("exhaustive integer-relation search by sup-norm shells");
    }
    if let Some(f) = &r.integral {
        if f.arity() > r.freqs.len() {
            return Err(Error::input(format!(
                "integrand `{f}` needs {} frequencies, got {}",
                f.arity(),
                r.freqs.len()
            )));
        }
        let method = match r.method {
            Some(HaarMethod::Mc { n_samples, .. }) => HaarMethod::Mc { n_samples, seed },
            Some(m) => m,
            None => HaarMethod::Quadrature { points: DEFAULT_HAAR_POINTS },
        };
        let h = bohr::haar_cylinder_integral(&r.freqs, |t| f.eval(t), method)?;
        let exact = f.exact();
        set(&mut o.error_bounds, "abs_difference_vs_exact", (h.value() - exact).norm());
        if let Some(e) = h.error_estimate {
            set(&mut o.error_bounds, "quadrature", e);
        }
        set(&mut o.details, "integral", h);
        set(&mut o.details, "exact", [exact.re, exact.im]);
        payload.insert("integral".into(), json!([h.re, h.im]));
        o = o.note(match method {
            HaarMethod::Quadrature { .. } => "periodic trapezoid on the torus",
            HaarMethod::Mc { .. } => "Monte Carlo over uniform phases",
        });
        o = o.note("exact value from character orthogonality");
    }
    if r.sample {
        payload.insert("sample".into(), to_value(bohr::haar_sample(&r.freqs, seed)));
        o = o.note("independent uniform phases, ChaCha8 stream 0");
    }
    o.payload = if payload.len() == 1 {
        payload.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null)
    } else {
        Value::Object(payload)
    };
    Ok(o)
}

fn run_product(r: &ProductInputs, tol: f64) -> Result<Outcome> {
    if let Some(c) = &r.cylinder {
        return Ok(Outcome::new(cylinder_measure(&r.spec, c)).note("product of one-dimensional factor measures"));
    }
    let c = r.constraint.as_ref().expect("validated: one of cylinder or constraint");
    let opts = ProductOptions { tol, ..ProductOptions::default() };
    let limit = countable_product_measure(&r.spec, c, opts)?;
    let mut o = Outcome::new(limit.value).note("partial products with a rigorous tail bound");
    set(&mut o.error_bounds, "limit", limit.verdict);
    set(&mut o.details, "factors_used", limit.factors_used);
    Ok(o)
}

fn run_selftest(r: &SelftestInputs, seed: u64) -> Result<Outcome> {
    let report = match r.criterion {
        Some(id) => {
            let c = selftest::run_criterion(id, r.level, seed)?;
            selftest::SelftestReport {
                level: r.level,
                seed,
                passed: c.passed,
                first_failure: (!c.passed).then_some(id),
                criteria: vec![c],
            }
        }
        None => selftest::run_selftest(r.level, seed),
    };
    let mut table = Table::new(&["id", "name", "passed", "detail"]);
    for c in &report.criteria {
        table.push(vec![c.id.to_string(), c.name.clone(), c.passed.to_string(), c.detail.clone()]);
    }
    let mut o = Outcome::new(&report).note("acceptance criteria with analytic and Monte Carlo oracles");
    o.table = Some(table);
    Ok(o)
}

// ---- argument parsing --------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "infmeasure", version, about = "Measures on infinite-dimensional spaces, computed at desk scale")]
struct Cli {
    /// Seed for every sampling subcommand.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    out: OutputFormat,
    /// Absolute tolerance for quadratures and product limits.
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw the first N coordinates of a Gaussian measure.
    Sample {
        #[arg(long)]
        cov: String,
        #[arg(long)]
        truncation: usize,
    },
    /// Characteristic functional at one vector.
    Chi {
        #[arg(long)]
        cov: String,
        #[arg(long)]
        vector: String,
    },
    /// Moment of a product of linear functionals.
    Moment {
        #[arg(long)]
        cov: String,
        /// Comma-separated vectors: `e3`, `1:0.5;4:-2` or `0`.
        #[arg(long, value_delimiter = ',', required = true)]
        vectors: Vec<String>,
        /// Cross-check with this many Monte Carlo samples.
        #[arg(long)]
        mc: Option<usize>,
    },
    /// Cameron-Martin density of the shifted measure at a point.
    RnDensity {
        #[arg(long)]
        cov: String,
        #[arg(long)]
        shift: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
    /// Whether a shift lies in the Cameron-Martin space.
    ShiftAdmissible {
        #[arg(long)]
        cov: String,
        #[arg(long)]
        shift: String,
    },
    /// Equivalent or mutually singular Gaussian measures.
    Equivalence {
        #[arg(long)]
        cov_a: String,
        #[arg(long)]
        cov_b: String,
    },
    /// Whether the measure lives on a weighted l² space.
    Support {
        #[arg(long)]
        cov: String,
        #[arg(long)]
        weights: String,
        /// Monte Carlo tail growth: truncation N and sample count.
        #[arg(long, num_args = 2, value_names = ["N", "SAMPLES"])]
        mc: Option<Vec<usize>>,
    },
    /// Whether a diagonal operator is Hilbert-Schmidt.
    HsCheck {
        #[arg(long)]
        weights: String,
    },
    /// Covariance kernels: values, bilinear forms, regularity.
    Kernel {
        #[arg(long)]
        spec: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        #[arg(long)]
        cutoff: Option<f64>,
        #[arg(long, num_args = 2, value_names = ["F", "G"])]
        bilinear: Option<Vec<String>>,
        #[arg(long)]
        regularity: bool,
    },
    /// Bohr compactification: independence, Haar integrals, samples.
    Bohr {
        #[arg(long)]
        freqs: FrequencySet,
        #[arg(long)]
        check_independence: Option<u64>,
        /// `one`, `char:1,-1`, `cos2:1` or `abs2:1`.
        #[arg(long)]
        integral: Option<Integrand>,
        #[arg(long, conflicts_with = "mc")]
        points: Option<usize>,
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long)]
        sample: bool,
    },
    /// Product measure of a cylinder set or a countable box constraint.
    Product {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        cylinder: Option<String>,
        #[arg(long)]
        constraint: Option<String>,
    },
    /// Kolmogorov consistency of a family of marginal tables.
    Consistency {
        #[arg(long)]
        tables: String,
    },
    /// Run the acceptance criteria.
    Selftest {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
        #[arg(long)]
        criterion: Option<u32>,
    },
}

fn looks_inline(s: &str) -> bool {
    matches!(s.trim_start().chars().next(), Some('{' | '[' | '"'))
}

/// Parses inline JSON or the JSON file at `raw`, naming the offending key on
/// failure.
fn load<T: DeserializeOwned>(flag: &str, raw: &str) -> Result<T> {
    let text = if looks_inline(raw) {
        raw.to_string()
    } else {
        std::fs::read_to_string(raw).map_err(|e| Error::input(format!("--{flag}: cannot read `{raw}`: {e}")))?
    };
    let mut de = serde_json::Deserializer::from_str(&text);
    let v = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| Error::input(format!("--{flag}: at `{}`: {}", e.path(), e.inner())))?;
    de.end().map_err(|e| Error::input(format!("--{flag}: {e}")))?;
    Ok(v)
}

/// A vector literal (`e1`, `1:0.5;2:-1`), inline JSON or a JSON file.
fn load_vector(flag: &str, raw: &str) -> Result<FiniteSequence> {
    if looks_inline(raw) || Path::new(raw).is_file() {
        load(flag, raw)
    } else {
        raw.parse().map_err(|e: Error| Error::input(format!("--{flag}: {e}")))
    }
}

fn load_shift(raw: &str) -> Result<ShiftSpec> {
    if looks_inline(raw) || Path::new(raw).is_file() {
        load("shift", raw)
    } else {
        load_vector("shift", raw).map(ShiftSpec::Finite)
    }
}

fn build_request(cmd: Command) -> Result<Request> {
    Ok(match cmd {
        Command::Sample { cov, truncation } => Request::Sample(SampleInputs { cov: load("cov", &cov)?, truncation }),
        Command::Chi { cov, vector } => {
            Request::Chi(ChiInputs { cov: load("cov", &cov)?, vector: load_vector("vector", &vector)? })
        }
        Command::Moment { cov, vectors, mc } => Request::Moment(MomentInputs {
            cov: load("cov", &cov)?,
            vectors: vectors.iter().map(|v| load_vector("vectors", v)).collect::<Result<_>>()?,
            mc_samples: mc,
        }),
        Command::RnDensity { cov, shift, x } => {
            Request::RnDensity(RnDensityInputs { cov: load("cov", &cov)?, shift: load_vector("shift", &shift)?, x })
        }
        Command::ShiftAdmissible { cov, shift } => {
            Request::ShiftAdmissible(ShiftAdmissibleInputs { cov: load("cov", &cov)?, shift: load_shift(&shift)? })
        }
        Command::Equivalence { cov_a, cov_b } => {
            Request::Equivalence(EquivalenceInputs { cov_a: load("cov-a", &cov_a)?, cov_b: load("cov-b", &cov_b)? })
        }
        Command::Support { cov, weights, mc } => Request::Support(SupportInputs {
            cov: load("cov", &cov)?,
            weights: load("weights", &weights)?,
            mc: mc.map(|v| TailGrowthInputs { truncation: v[0], samples: v[1] }),
        }),
        Command::HsCheck { weights } => Request::HsCheck(HsCheckInputs { weights: load("weights", &weights)? }),
        Command::Kernel { spec, at, cutoff, bilinear, regularity } => Request::Kernel(KernelInputs {
            spec: load("spec", &spec)?,
            at,
            cutoff,
            bilinear: match bilinear {
                Some(v) => Some((load("bilinear", &v[0])?, load("bilinear", &v[1])?)),
                None => None,
            },
            regularity,
        }),
        Command::Bohr { freqs, check_independence, integral, points, mc, sample } => Request::Bohr(BohrInputs {
            freqs,
            check_independence,
            integral,
            method: match (points, mc) {
                (Some(points), _) => Some(HaarMethod::Quadrature { points }),
                // the seed is filled in from --seed at run time
                (None, Some(n_samples)) => Some(HaarMethod::Mc { n_samples, seed: 0 }),
                (None, None) => None,
            },
            sample,
        }),
        Command::Product { spec, cylinder, constraint } => Request::Product(ProductInputs {
            spec: load("spec", &spec)?,
            cylinder: cylinder.map(|c| load("cylinder", &c)).transpose()?,
            constraint: constraint.map(|c| load("constraint", &c)).transpose()?,
        }),
        Command::Consistency { tables } => Request::Consistency(ConsistencyInputs { tables: load("tables", &tables)? }),
        Command::Selftest { level, criterion } => Request::Selftest(SelftestInputs { level, criterion }),
    })
}

/// What a process invocation prints and returns.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::Precondition(_) => "precondition",
        Error::NonFinite { .. } => "non_finite",
        Error::Undecided(_) => "undecided",
        Error::BudgetExceeded { .. } => "budget_exceeded",
        Error::ToleranceUnreached { .. } => "tolerance_unreached",
    }
}

fn failure(e: &Error) -> Execution {
    let code = if e.is_numeric() { EXIT_NUMERIC } else { EXIT_INPUT };
    let body = json!({"error": {"kind": error_kind(e), "message": e.to_string()}});
    Execution { code, stdout: String::new(), stderr: format!("{body}\n") }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn execute<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Execution { code: EXIT_INPUT, stdout: String::new(), stderr: text }
            } else {
                Execution { code: EXIT_OK, stdout: text, stderr: String::new() }
            };
        }
    };
    let config = match build_request(cli.command) {
        Ok(request) => RunConfig { request, seed: cli.seed, tol: cli.tol, out: cli.out },
        Err(e) => return failure(&e),
    };
    execute_config(&config)
}

pub fn execute_config(config: &RunConfig) -> Execution {
    let (envelope, table) = match run(config) {
        Ok(r) => r,
        Err(e) => return failure(&e),
    };
    let stdout = match config.out {
        OutputFormat::Json => serde_json::to_string_pretty(&envelope).expect("envelope serializes") + "\n",
        OutputFormat::Csv => match table.map(|t| t.to_csv()) {
            Some(Ok(s)) => s,
            Some(Err(e)) => return failure(&e),
            None => {
                return failure(&Error::input(format!(
                    "`{}` has no tabular output; use --out json",
                    envelope.subcommand
                )))
            }
        },
    };
    let mut exec = Execution { code: EXIT_OK, stdout, stderr: String::new() };
    if envelope.subcommand == "selftest" && envelope.payload["passed"] == Value::Bool(false) {
        let id = envelope.payload["first_failure"].as_u64().unwrap_or(0) as u32;
        exec.code = EXIT_SELFTEST_FAILED;
        exec.stderr = format!("selftest failed: criterion {id} ({})\n", selftest::name(id));
    }
    exec
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(args: &[&str]) -> ResultEnvelope {
        let mut full = vec!["infmeasure"];
        full.extend_from_slice(args);
        let r = execute(full);
        assert_eq!(r.code, 0, "{}", r.stderr);
        serde_json::from_str(&r.stdout).unwrap()
    }

    fn code(args: &[&str]) -> i32 {
        let mut full = vec!["infmeasure"];
        full.extend_from_slice(args);
        execute(full).code
    }

    #[test]
    fn fourth_moment() {
        let e = ok(&["moment", "--cov", r#"{"constant":{"rho":1}}"#, "--vectors", "e1,e1,e1,e1"]);
        assert_eq!(e.payload, json!(3.0));
        assert_eq!(e.inputs_digest.len(), 64);
    }

    #[test]
    fn white_noise_is_singular() {
        let e = ok(&["equivalence", "--cov-a", r#"{"constant":{"rho":1}}"#, "--cov-b", r#"{"constant":{"rho":2}}"#]);
        assert_eq!(e.payload, json!("Singular"));
    }

    #[test]
    fn massive_kernel_at_zero() {
        let e = ok(&["kernel", "--spec", r#"{"massive_free_1d":{"m":1}}"#, "--at", "0"]);
        assert_eq!(e.payload, json!(0.5));
        assert!(e.error_bounds["max_abs_difference_vs_quadrature"].as_f64().unwrap() < 1e-6);
    }

    #[test]
    fn input_and_seed_errors_exit_2() {
        assert_eq!(code(&["sample", "--cov", r#"{"constant":{"rho":1}}"#, "--truncation", "3"]), EXIT_INPUT);
        assert_eq!(code(&["moment", "--cov", r#"{"constant":{"rho":1, "bogus": 2}}"#, "--vectors", "e1"]), EXIT_INPUT);
        assert_eq!(code(&["--tol", "-1", "selftest"]), EXIT_INPUT);
        assert_eq!(code(&["nonsense"]), EXIT_INPUT);
    }

    #[test]
    fn unknown_key_is_named() {
        let r = execute(["infmeasure", "chi", "--cov", r#"{"power":{"c":1,"p":2,"q":3}}"#, "--vector", "e1"]);
        assert_eq!(r.code, EXIT_INPUT);
        assert!(r.stderr.contains("power"), "{}", r.stderr);
    }

    #[test]
    fn unreachable_tolerance_exits_3() {
        let r = execute([
            "infmeasure",
            "--tol",
            "1e-30",
            "kernel",
            "--spec",
            r#"{"massive_free_1d":{"m":1}}"#,
            "--at",
            "0.3",
        ]);
        assert_eq!(r.code, EXIT_NUMERIC, "{}", r.stderr);
    }

    #[test]
    fn csv_sample() {
        let r = execute([
            "infmeasure",
            "--seed",
            "4",
            "--out",
            "csv",
            "sample",
            "--cov",
            r#"{"constant":{"rho":1}}"#,
            "--truncation",
            "3",
        ]);
        assert_eq!(r.code, 0);
        assert_eq!(r.stdout.lines().count(), 4);
        assert!(r.stdout.starts_with("index,value"));
    }

    #[test]
    fn csv_refused_for_scalars() {
        assert_eq!(code(&["--out", "csv", "hs-check", "--weights", r#"{"power":{"c":1,"p":1}}"#]), EXIT_INPUT);
    }

    #[test]
    fn envelope_inputs_round_trip() {
        let e = ok(&["rn-density", "--cov", r#"{"constant":{"rho":1}}"#, "--shift", "e1", "--x", "1,0"]);
        let back: Request = serde_json::from_value(json!({"subcommand": e.subcommand, "inputs": e.inputs})).unwrap();
        assert_eq!(back.name(), "rn-density");
        assert!((e.payload.as_f64().unwrap() - 0.5f64.exp()).abs() < 1e-15);
    }
}
