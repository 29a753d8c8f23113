//! The release gate: every acceptance criterion as a seeded, self-contained
//! check.
//!
//! `Quick` runs the deterministic parts of every criterion; `Full` adds the
//! Monte Carlo oracles. Each criterion reports a JSON payload that depends
//! only on `(level, seed)`, which criterion 11 uses to check reproducibility.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bohr::{self, FrequencySet, HaarMethod, Independence, Integrand};
use crate::error::Result;
use crate::gaussian::{self, CovarianceSeq, GaussianSampler};
use crate::kernels;
use crate::mc::{self, Estimate};
use crate::measure_core::{
    consistency_check, countable_product_measure, cylinder_measure, Component1DMeasure, CountableConstraint,
    CylinderSet, IntervalUnion, MarginalTable, ProductMeasureSpec, ProductOptions, Sampler, TailRule,
};
use crate::seq::FiniteSequence;
use crate::series::SeqClass;
use crate::support::{self, DiagonalOperator, Growth, Support};
use crate::transform::{self, Equivalence};

pub const CRITERIA: u32 = 11;
const MC_SAMPLES: usize = 1_000_000;
const QUICK_MC_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// One line per failed sub-check, or a summary when everything passed.
    pub detail: String,
    /// Checks that only run at `Full` level.
    pub skipped: Vec<String>,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub level: Level,
    pub seed: u64,
    pub passed: bool,
    pub first_failure: Option<u32>,
    pub criteria: Vec<CriterionReport>,
}

/// Accumulates sub-check outcomes for one criterion.
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
    skipped: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { failures: Vec::new(), notes: Vec::new(), skipped: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn skip(&mut self, what: &str) {
        self.skipped.push(what.to_string());
    }

    fn report(self, id: u32, payload: Value) -> CriterionReport {
        let passed = self.failures.is_empty();
        let detail = if passed { self.notes.join("; ") } else { self.failures.join("; ") };
        CriterionReport { id, name: name(id).to_string(), passed, detail, skipped: self.skipped, payload }
    }
}

pub fn name(id: u32) -> &'static str {
    match id {
        1 => "Wick moments vs Monte Carlo",
        2 => "odd moments vanish",
        3 => "pairing counts",
        4 => "Radon-Nikodym normalization and change of measure",
        5 => "equivalence classifier",
        6 => "support diagnostics",
        7 => "massive free kernel vs Fourier quadrature",
        8 => "Bochner Gram positivity",
        9 => "product measures and consistency",
        10 => "Haar measure on Bohr tori",
        11 => "determinism",
        _ => "unknown",
    }
}

fn rng_for(seed: u64, id: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mc::stream_seed(seed, 1000 + id as u64))
}

fn mc_seed(seed: u64, id: u32, case: u64) -> u64 {
    mc::stream_seed(mc::stream_seed(seed, id as u64), case)
}

fn cov(class: SeqClass) -> CovarianceSeq {
    CovarianceSeq::new(class).expect("catalog covariances are valid")
}

fn cov_catalog() -> Vec<CovarianceSeq> {
    vec![
        cov(SeqClass::constant(1.0)),
        cov(SeqClass::constant(0.5)),
        cov(SeqClass::power(1.0, 1.0)),
        cov(SeqClass::geometric(2.0, 0.8)),
    ]
}

fn random_vector(rng: &mut ChaCha8Rng, max_index: u64, max_support: usize) -> FiniteSequence {
    let size = rng.random_range(1..=max_support);
    let mut idx: Vec<u64> = (1..=max_index).collect();
    let mut entries = Vec::with_capacity(size);
    for _ in 0..size {
        let j = rng.random_range(0..idx.len());
        entries.push((idx.swap_remove(j), rng.random_range(-1.0..1.0)));
    }
    FiniteSequence::new(entries).expect("distinct indices")
}

fn linear(xi: &FiniteSequence, x: &[f64]) -> f64 {
    xi.iter().map(|(n, v)| v * x[n as usize - 1]).sum()
}

/// `K` Monte Carlo means of observables of `x ~ μ_ρ` truncated to `dim`.
fn gaussian_mc<const K: usize>(
    cov: &CovarianceSeq,
    dim: usize,
    n: usize,
    seed: u64,
    obs: impl Fn(&[f64]) -> [f64; K] + Sync,
) -> Result<[Estimate; K]> {
    let sampler = GaussianSampler::new(cov, dim)?;
    mc::mean_estimates::<K, _>(n, seed, |rng| {
        let mut buf = [0.0; 16];
        let x = &mut buf[..dim];
        sampler.sample_into(rng, x);
        Ok(obs(x))
    })
}

fn est_json(e: &Estimate) -> Value {
    json!({"estimate": e.estimate, "standard_error": e.standard_error, "n_samples": e.n_samples, "seed": e.seed})
}

fn samples(level: Level) -> usize {
    match level {
        Level::Quick => QUICK_MC_SAMPLES,
        Level::Full => MC_SAMPLES,
    }
}

// ---- criterion 1 -------------------------------------------------------

fn c1_mc(level: Level, seed: u64) -> Result<(Value, Vec<(bool, String)>)> {
    let n = samples(level);
    let c1 = cov(SeqClass::constant(1.0));
    let [m4] = gaussian_mc::<1>(&c1, 1, n, mc_seed(seed, 1, 0), |x| [x[0].powi(4)])?;
    let mut outcomes = vec![(
        (m4.estimate - 3.0).abs() <= 0.01 * 3.0,
        format!("MC E[x1^4] = {:.5} ± {:.5} (1% of 3)", m4.estimate, m4.standard_error),
    )];
    let catalog = cov_catalog();
    let mut rng = rng_for(seed, 1);
    let mut cases = Vec::new();
    let mut worst_z: f64 = 0.0;
    for case in 0..50u64 {
        let cv = &catalog[rng.random_range(0..catalog.len())];
        let two_n = 2 * rng.random_range(1..=3usize);
        let xs: Vec<FiniteSequence> = (0..two_n).map(|_| random_vector(&mut rng, 5, 5)).collect();
        let exact = gaussian::wick_moment(cv, &xs)?;
        let [e] =
            gaussian_mc::<1>(cv, 5, n, mc_seed(seed, 1, 1 + case), |x| [xs.iter().map(|xi| linear(xi, x)).product()])?;
        let z = e.z_score(exact);
        worst_z = worst_z.max(z);
        cases.push(json!({"order": two_n, "wick": exact, "mc": est_json(&e), "z": z}));
    }
    outcomes.push((worst_z <= 5.0, format!("50 random moments, worst |z| = {worst_z:.2} (limit 5)")));
    Ok((json!({"fourth_moment": est_json(&m4), "catalog": cases}), outcomes))
}

fn criterion_1(level: Level, seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    let c1 = cov(SeqClass::constant(1.0));
    let e1 = FiniteSequence::unit(1)?;
    let w = gaussian::wick_moment(&c1, &vec![e1; 4])?;
    c.check(w == 3.0, format!("wick_moment([e1;4]) = {w}"));
    let mut payload = json!({"wick_e1_4": w});
    match level {
        Level::Full => {
            let (mc_payload, outcomes) = c1_mc(level, seed)?;
            for (ok, what) in outcomes {
                c.check(ok, what);
            }
            payload["mc"] = mc_payload;
        }
        Level::Quick => c.skip("Monte Carlo fourth moment and 50-case catalog"),
    }
    Ok(c.report(1, payload))
}

// ---- criterion 2 -------------------------------------------------------

fn c2_mc(level: Level, seed: u64) -> Result<Estimate> {
    let [e] =
        gaussian_mc::<1>(&cov(SeqClass::constant(1.0)), 1, samples(level), mc_seed(seed, 2, 0), |x| [x[0].powi(3)])?;
    Ok(e)
}

fn criterion_2(level: Level, seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    let mut rng = rng_for(seed, 2);
    let catalog = cov_catalog();
    let mut all_zero = true;
    for _ in 0..30 {
        let cv = &catalog[rng.random_range(0..catalog.len())];
        let len = 2 * rng.random_range(0..=9usize) + 1;
        let xs: Vec<FiniteSequence> = (0..len).map(|_| random_vector(&mut rng, 6, 4)).collect();
        all_zero &= gaussian::wick_moment(cv, &xs)? == 0.0;
    }
    c.check(all_zero, "30 random odd lists (length <= 19) give exactly 0");
    let mut payload = json!({"odd_lists_zero": all_zero});
    match level {
        Level::Full => {
            let e = c2_mc(level, seed)?;
            c.check(e.within(0.0, 4.0), format!("MC E[x1^3] = {:.5} ± {:.5}", e.estimate, e.standard_error));
            payload["mc_third_moment"] = est_json(&e);
        }
        Level::Quick => c.skip("Monte Carlo third moment"),
    }
    Ok(c.report(2, payload))
}

// ---- criterion 3 -------------------------------------------------------

fn criterion_3(_level: Level, _seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    let mut counts = Vec::new();
    for (two_n, expected) in [(2usize, 1usize), (4, 3), (6, 15), (8, 105)] {
        let all: Vec<gaussian::Pairing> = gaussian::pairings(two_n)?.collect();
        let distinct = {
            let mut keys: Vec<_> = all.iter().map(|p| p.pairs.clone()).collect();
            keys.sort();
            keys.dedup();
            keys.len()
        };
        let df = gaussian::double_factorial(two_n as i64 - 1) as usize;
        c.check(
            all.len() == expected && distinct == expected && df == expected,
            format!("2n = {two_n}: {} pairings, {distinct} distinct, (2n-1)!! = {df}", all.len()),
        );
        counts.push(all.len());
    }
    Ok(c.report(3, json!({"counts": counts})))
}

// ---- criterion 4 -------------------------------------------------------

const RN_DIM: usize = 6;

fn poly(k: usize, x: &[f64]) -> f64 {
    match k {
        0 => x[0],
        1 => x[0] * x[1] + x[2] * x[2],
        2 => x[0].powi(3) - 2.0 * x[1],
        _ => x[0].powi(4) + x[1] * x[1] * x[2] - x[3],
    }
}

fn c4_mc(level: Level, seed: u64) -> Result<(Value, Vec<(bool, String)>)> {
    let catalog = [
        cov(SeqClass::constant(1.0)),
        cov(SeqClass::constant(2.0)),
        cov(SeqClass::power(1.0, 1.0)),
        cov(SeqClass::geometric(1.0, 0.7)),
    ];
    let mut rng = rng_for(seed, 4);
    let mut shifts = Vec::new();
    let (mut worst_norm, mut worst_com): (f64, f64) = (0.0, 0.0);
    for case in 0..10u64 {
        let cv = &catalog[case as usize % catalog.len()];
        let raw = random_vector(&mut rng, RN_DIM as u64, 4);
        let target = 4.0 * rng.random_range(0.05..=1.0);
        let y = raw.scale((target / cm_norm2(&raw, cv)?).sqrt());
        let cm = cm_norm2(&y, cv)?;
        let est = gaussian_mc::<5>(cv, RN_DIM, samples(level), mc_seed(seed, 4, case), |x| {
            let r = transform::rn_density(x, &y, cv).unwrap_or(f64::NAN);
            let shifted: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + y.get(i as u64 + 1)).collect();
            let mut out = [r, 0.0, 0.0, 0.0, 0.0];
            for k in 0..4 {
                out[k + 1] = r * poly(k, x) - poly(k, &shifted);
            }
            out
        })?;
        worst_norm = worst_norm.max(est[0].z_score(1.0));
        for e in &est[1..] {
            worst_com = worst_com.max(e.z_score(0.0));
        }
        shifts.push(json!({
            "shift": y,
            "cm_norm2": cm,
            "normalization": est_json(&est[0]),
            "change_of_measure": est[1..].iter().map(est_json).collect::<Vec<_>>(),
        }));
    }
    let outcomes = vec![
        (worst_norm <= 4.0, format!("10 shifts with Σy²/ρ <= 4: worst normalization |z| = {worst_norm:.2} (limit 4)")),
        (worst_com <= 5.0, format!("change of measure, 40 polynomial cases: worst |z| = {worst_com:.2} (limit 5)")),
    ];
    Ok((json!({"shifts": shifts}), outcomes))
}

// Σ y_n²/ρ_n
fn cm_norm2(y: &FiniteSequence, cv: &CovarianceSeq) -> Result<f64> {
    y.weighted_dot(y, |n| cv.rho(n).map(|r| 1.0 / r))
}

fn criterion_4(level: Level, seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    // deterministic identities: zero shift and the e1 example
    let c1 = cov(SeqClass::constant(1.0));
    let x = [1.0, 0.0];
    let zero = transform::rn_density(&x, &FiniteSequence::zero(), &c1)?;
    let e1 = transform::rn_density(&x, &FiniteSequence::unit(1)?, &c1)?;
    c.check(zero == 1.0 && (e1 - 0.5f64.exp()).abs() < 1e-15, "rn_density(y = 0) = 1, rn_density(e1; e1) = e^{1/2}");
    let mut payload = json!({"rn_e1": e1});
    match level {
        Level::Full => {
            let (p, outcomes) = c4_mc(level, seed)?;
            for (ok, what) in outcomes {
                c.check(ok, what);
            }
            payload["mc"] = p;
        }
        Level::Quick => c.skip("Monte Carlo normalization and change of measure"),
    }
    Ok(c.report(4, payload))
}

// ---- criterion 5 -------------------------------------------------------

fn equivalence_catalog() -> Vec<(SeqClass, SeqClass, Equivalence)> {
    use Equivalence::{Equivalent as E, Singular as S};
    let one = || SeqClass::constant(1.0);
    let two = || SeqClass::constant(2.0);
    let inv = || SeqClass::power(1.0, 1.0);
    let geo = || SeqClass::geometric(1.0, 0.5);
    let plus = |a: SeqClass, b: SeqClass| SeqClass::Sum(vec![a, b]);
    vec![
        (one(), one(), E),
        (one(), two(), S),
        (one(), plus(one(), inv()), E),
        (one(), plus(one(), SeqClass::power(1.0, 0.5)), S),
        (inv(), SeqClass::power(3.0, 1.0), S),
        (inv(), plus(inv(), SeqClass::power(1.0, 2.0)), E),
        (geo(), plus(geo(), SeqClass::geometric(1.0, 0.25)), E),
        (one(), SeqClass::prefixed(vec![5.0, 7.0], one()), E),
        (inv(), SeqClass::power(1.0, 2.0), S),
        (one(), inv(), S),
        (geo(), inv(), S),
        (two(), plus(one(), inv()), S),
        (SeqClass::prefixed(vec![5.0, 7.0], one()), plus(one(), inv()), E),
        (plus(one(), inv()), plus(one(), SeqClass::power(1.0, 0.5)), S),
        (plus(inv(), SeqClass::power(1.0, 2.0)), SeqClass::power(3.0, 1.0), S),
        (plus(geo(), SeqClass::geometric(1.0, 0.25)), plus(geo(), SeqClass::geometric(1.0, 0.25)), E),
        (two(), SeqClass::prefixed(vec![1.0], two()), E),
        (geo(), SeqClass::geometric(1.0, 0.6), S),
        (one(), SeqClass::Product(vec![one(), plus(one(), geo())]), E),
        (inv(), plus(inv(), SeqClass::power(1.0, 1.5)), S),
    ]
}

fn criterion_5(_level: Level, _seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    let wn = transform::equivalence_classify(&cov(SeqClass::constant(1.0)), &cov(SeqClass::constant(2.0)));
    c.check(wn.verdict == Equivalence::Singular, format!("white noise 1 vs 2: {:?}", wn.verdict));
    let pert = transform::equivalence_classify(
        &cov(SeqClass::constant(1.0)),
        &cov(SeqClass::Sum(vec![SeqClass::constant(1.0), SeqClass::power(1.0, 1.0)])),
    );
    c.check(pert.verdict == Equivalence::Equivalent, format!("1 vs 1 + 1/n: {:?}", pert.verdict));
    let mut verdicts = Vec::new();
    let (mut wrong, mut asym) = (Vec::new(), Vec::new());
    for (k, (a, b, expected)) in equivalence_catalog().into_iter().enumerate() {
        let (a, b) = (cov(a), cov(b));
        let fwd = transform::equivalence_classify(&a, &b).verdict;
        let back = transform::equivalence_classify(&b, &a).verdict;
        if fwd != expected {
            wrong.push(k + 1);
        }
        if fwd != back {
            asym.push(k + 1);
        }
        verdicts.push(fwd);
    }
    c.check(wrong.is_empty(), format!("20-case catalog matches expected verdicts (mismatches: {wrong:?})"));
    c.check(asym.is_empty(), format!("verdicts symmetric under swap (asymmetric: {asym:?})"));
    Ok(c.report(5, json!({"white_noise": wn, "perturbed": pert, "catalog": verdicts})))
}

// ---- criterion 6 -------------------------------------------------------

fn c6_mc(level: Level, seed: u64) -> Result<(Value, Vec<(bool, String)>)> {
    let c1 = cov(SeqClass::constant(1.0));
    let (n, samples) = match level {
        Level::Full => (10_000, 100),
        Level::Quick => (1_000, 100),
    };
    let ones = DiagonalOperator::new(SeqClass::constant(1.0))?;
    let inv = DiagonalOperator::new(SeqClass::power(1.0, 1.0))?;
    let g1 = support::mc_tail_growth(&c1, &ones, n, samples, mc_seed(seed, 6, 0))?;
    let g2 = support::mc_tail_growth(&c1, &inv, n, samples, mc_seed(seed, 6, 1))?;
    let target = PI * PI / 6.0;
    let outcomes = vec![
        (
            g1.verdict == Growth::Growing && (g1.slope - 1.0).abs() <= 0.05,
            format!("a = 1: {:?}, slope {:.4} (1 ± 5%)", g1.verdict, g1.slope),
        ),
        (
            g2.verdict == Growth::Plateau && (g2.plateau - target).abs() <= 0.05 * target,
            format!("a = 1/n: {:?}, plateau {:.4} (π²/6 ± 5%)", g2.verdict, g2.plateau),
        ),
    ];
    let strip = |g: &support::TailGrowth| {
        json!({"verdict": g.verdict, "slope": g.slope, "plateau": g.plateau,
               "plateau_standard_error": g.plateau_standard_error, "relative_growth": g.relative_growth,
               "n_samples": g.n_samples, "seed": g.seed})
    };
    Ok((json!({"constant": strip(&g1), "inverse": strip(&g2)}), outcomes))
}

fn criterion_6(level: Level, seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    let c1 = cov(SeqClass::constant(1.0));
    let ones = support::weighted_support_check(&c1, &DiagonalOperator::new(SeqClass::constant(1.0))?);
    let inv = support::weighted_support_check(&c1, &DiagonalOperator::new(SeqClass::power(1.0, 1.0))?);
    c.check(ones.verdict == Support::NotSupported, format!("a = 1: {:?}", ones.verdict));
    c.check(inv.verdict == Support::Supported, format!("a = 1/n: {:?}", inv.verdict));
    let mut payload = json!({"a_one": ones.verdict, "a_inverse": inv.verdict});
    match level {
        Level::Full => {
            let (p, outcomes) = c6_mc(level, seed)?;
            for (ok, what) in outcomes {
                c.check(ok, what);
            }
            payload["mc"] = p;
        }
        Level::Quick => c.skip("Monte Carlo tail growth at N = 10^4"),
    }
    Ok(c.report(6, payload))
}

// ---- criterion 7 -------------------------------------------------------

fn criterion_7(_level: Level, _seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    let mut rows = Vec::new();
    for m in [0.5, 1.0, 2.0] {
        let diffs: Vec<f64> = (0..=100)
            .into_par_iter()
            .map(|i| {
                let x = -5.0 + 0.1 * i as f64;
                kernels::kernel_fourier_quadrature(m, x, None, 1e-7)
                    .map(|q| (q.value - kernels::kernel_eval(m, x)).abs())
            })
            .collect::<Result<_>>()?;
        let max_diff = diffs.iter().fold(0.0f64, |a, &d| a.max(d));
        let (integral, bound) = kernels::kernel_integral(m, 1e-8)?;
        let int_err = (integral - 1.0 / (m * m)).abs();
        c.check(max_diff < 1e-6, format!("m = {m}: max |closed - quadrature| = {max_diff:.2e}"));
        c.check(int_err < 1e-6, format!("m = {m}: |∫ kernel - 1/m²| = {int_err:.2e}"));
        rows.push(json!({"m": m, "max_abs_diff": max_diff, "integral": integral, "integral_bound": bound}));
    }
    Ok(c.report(7, json!({"masses": rows})))
}

// ---- criterion 8 -------------------------------------------------------

fn criterion_8(_level: Level, seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    let mut rng = rng_for(seed, 8);
    let catalog = cov_catalog();
    let mut min_eig = f64::INFINITY;
    let mut all_psd = true;
    for _ in 0..100 {
        let cv = &catalog[rng.random_range(0..catalog.len())];
        let pts: Vec<FiniteSequence> = (0..8).map(|_| random_vector(&mut rng, 5, 3)).collect();
        let r = gaussian::positive_type_gram(|x| gaussian::chi(x, cv).unwrap_or(f64::NAN), &pts)?;
        min_eig = min_eig.min(r.min_eigenvalue);
        all_psd &= r.verdict == gaussian::GramVerdict::Psd;
    }
    c.check(
        all_psd && min_eig >= -gaussian::GRAM_TOL,
        format!("100 trials of 8 points, smallest eigenvalue {min_eig:.3e}"),
    );
    Ok(c.report(8, json!({"min_eigenvalue": min_eig})))
}

// ---- criterion 9 -------------------------------------------------------

fn random_component(rng: &mut ChaCha8Rng) -> Component1DMeasure {
    match rng.random_range(0..3) {
        0 => Component1DMeasure::Gaussian { rho: rng.random_range(0.2..3.0) },
        1 => {
            let a = rng.random_range(-2.0..0.0);
            Component1DMeasure::Uniform { a, b: a + rng.random_range(0.5..3.0) }
        }
        _ => Component1DMeasure::PointMass { c: rng.random_range(-1.0..1.0) },
    }
}

fn random_boxes(rng: &mut ChaCha8Rng) -> IntervalUnion {
    let k = rng.random_range(1..=2);
    let pairs: Vec<(f64, f64)> = (0..k)
        .map(|_| {
            let lo = rng.random_range(-3.0..2.0);
            (lo, lo + rng.random_range(0.1..2.0))
        })
        .collect();
    IntervalUnion::from_pairs(&pairs).expect("lo < hi")
}

fn random_cuts(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(-2.0..2.0)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

fn criterion_9(_level: Level, seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    let mut rng = rng_for(seed, 9);
    let (mut mult_fail, mut cons_fail) = (0, 0);
    for _ in 0..100 {
        let components = (1..=6u64).map(|i| (i, random_component(&mut rng))).collect();
        let spec = ProductMeasureSpec::Indexed { components, default: Component1DMeasure::Gaussian { rho: 1.0 } };
        let c1 = CylinderSet::new((1..=3).map(|i| (i, random_boxes(&mut rng))).collect())?;
        let c2 = CylinderSet::new((4..=6).map(|i| (i, random_boxes(&mut rng))).collect())?;
        let joint = cylinder_measure(&spec, &c1.intersect(&c2));
        let prod = cylinder_measure(&spec, &c1) * cylinder_measure(&spec, &c2);
        if (joint - prod).abs() > 1e-12 * joint.abs().max(1e-300) && (joint - prod).abs() > 1e-15 {
            mult_fail += 1;
        }
        let mut idx: Vec<u64> = (1..=6).collect();
        let chosen: Vec<u64> = (0..3).map(|_| idx.swap_remove(rng.random_range(0..idx.len()))).collect();
        let cuts: Vec<Vec<f64>> = chosen.iter().map(|_| random_cuts(&mut rng)).collect();
        let mut tables = Vec::new();
        for size in 1..=3 {
            let mut pick: Vec<(u64, Vec<f64>)> = chosen[..size]
                .iter()
                .zip(&cuts)
                .map(|(&i, cs)| (i, if size == 3 { cs.clone() } else { cs.iter().copied().step_by(2).collect() }))
                .collect();
            pick.sort_by_key(|p| p.0);
            let (indices, cut_lists): (Vec<u64>, Vec<Vec<f64>>) = pick.into_iter().unzip();
            tables.push(MarginalTable::from_product(&spec, indices, cut_lists)?);
        }
        if !consistency_check(&tables)?.consistent {
            cons_fail += 1;
        }
    }
    c.check(mult_fail == 0, format!("multiplicativity on 100 random families ({mult_fail} failures)"));
    c.check(cons_fail == 0, format!("consistency of 100 random marginal chains ({cons_fail} failures)"));
    let euler = countable_product_measure(
        &ProductMeasureSpec::Identical(Component1DMeasure::Uniform { a: 0.0, b: 1.0 }),
        &CountableConstraint { prefix: vec![], tail: TailRule::OneMinusGeometric { c: 1.0, q: 0.5 } },
        ProductOptions::default(),
    )?;
    let target = 0.288_788_095_086_602_4;
    c.check(
        (euler.value - target).abs() < 1e-6,
        format!("∏(1 - 2^-k) = {:.12} after {} factors", euler.value, euler.factors_used),
    );
    Ok(c.report(9, json!({"euler_product": euler.value, "factors_used": euler.factors_used})))
}

// ---- criterion 10 ------------------------------------------------------

fn all_vectors(n: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-r..=r).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

fn criterion_10(_level: Level, seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    let freqs = [1.0, 2f64.sqrt(), 3f64.sqrt()];
    let quad = HaarMethod::Quadrature { points: 8 };
    let mut worst_orth: f64 = 0.0;
    for n in 1..=3 {
        let gamma = FrequencySet::new(freqs[..n].to_vec())?;
        let vs = all_vectors(n, 3);
        let worst = vs
            .par_iter()
            .map(|a| {
                let mut w: f64 = 0.0;
                for b in &vs {
                    let ca = Integrand::Character(a.clone());
                    let cb = Integrand::Character(b.clone());
                    let r = bohr::haar_cylinder_integral(&gamma, |t| ca.eval(t) * cb.eval(t).conj(), quad)?;
                    let delta = if a == b { 1.0 } else { 0.0 };
                    w = w.max((r.value() - delta).norm());
                }
                Ok(w)
            })
            .collect::<Result<Vec<f64>>>()?;
        worst_orth = worst.into_iter().fold(worst_orth, f64::max);
    }
    c.check(
        worst_orth <= 1e-8,
        format!("character orthogonality, n <= 3, |m_i| <= 3: worst deviation {worst_orth:.2e}"),
    );

    let mut rng = rng_for(seed, 10);
    let mut worst_inv: f64 = 0.0;
    for trial in 0..20 {
        let n = 2 + trial % 2;
        let gamma = FrequencySet::new(freqs[..n].to_vec())?;
        let terms: Vec<(num_complex::Complex64, Integrand)> = (0..4)
            .map(|_| {
                let coef = num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (coef, Integrand::Character((0..n).map(|_| rng.random_range(-3..=3)).collect()))
            })
            .collect();
        let offset: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let f = |t: &[f64]| terms.iter().map(|(c, ch)| c * ch.eval(t)).sum::<num_complex::Complex64>();
        let base = bohr::haar_cylinder_integral(&gamma, f, quad)?;
        let moved = bohr::haar_cylinder_integral(
            &gamma,
            |t| {
                let s: Vec<f64> = t.iter().zip(&offset).map(|(a, b)| a + b).collect();
                f(&s)
            },
            quad,
        )?;
        let allowed = 1e-12 + base.error_estimate.unwrap_or(0.0) + moved.error_estimate.unwrap_or(0.0);
        let d = (base.value() - moved.value()).norm();
        worst_inv = worst_inv.max(d / allowed);
    }
    c.check(
        worst_inv <= 1.0,
        format!("translation invariance on 20 random offsets (worst diff / method error = {worst_inv:.2e})"),
    );

    let ind = bohr::independence_check(&FrequencySet::new(vec![1.0, 2f64.sqrt()])?, 100)?;
    c.check(ind == Independence::IndependentUpTo { bound: 100 }, format!("{{1, √2}}: {ind:?}"));
    Ok(c.report(10, json!({"orthogonality_worst": worst_orth, "independence": ind})))
}

// ---- criterion 11 ------------------------------------------------------

/// The stochastic payloads of criteria 1, 2, 4 and 6.
fn stochastic_payloads(level: Level, seed: u64) -> Result<Vec<String>> {
    let haar = bohr::haar_sample(&FrequencySet::new(vec![1.0, 2f64.sqrt()])?, seed);
    let gauss = gaussian::sample(&cov(SeqClass::constant(1.0)), 8, seed)?;
    Ok(vec![
        c1_mc(level, seed)?.0.to_string(),
        est_json(&c2_mc(level, seed)?).to_string(),
        c4_mc(level, seed)?.0.to_string(),
        c6_mc(level, seed)?.0.to_string(),
        json!({"haar": haar, "gaussian": gauss}).to_string(),
    ])
}

fn criterion_11(level: Level, seed: u64) -> Result<CriterionReport> {
    let mut c = Checks::new();
    let first = stochastic_payloads(level, seed)?;
    let second = stochastic_payloads(level, seed)?;
    let labels = ["criterion 1", "criterion 2", "criterion 4", "criterion 6", "samplers"];
    for ((a, b), label) in first.iter().zip(&second).zip(labels) {
        c.check(a == b, format!("{label}: {} bytes, identical = {}", a.len(), a == b));
    }
    if level == Level::Quick {
        c.skip("full-size reruns (quick compares 10^4-sample payloads)");
    }
    Ok(c.report(11, json!({"payload_bytes": first.iter().map(String::len).collect::<Vec<_>>()})))
}

// ---- driver ------------------------------------------------------------

/// Runs one criterion. Errors are turned into failed reports by
/// [`run_selftest`]; here they propagate.
pub fn run_criterion(id: u32, level: Level, seed: u64) -> Result<CriterionReport> {
    match id {
        1 => criterion_1(level, seed),
        2 => criterion_2(level, seed),
        3 => criterion_3(level, seed),
        4 => criterion_4(level, seed),
        5 => criterion_5(level, seed),
        6 => criterion_6(level, seed),
        7 => criterion_7(level, seed),
        8 => criterion_8(level, seed),
        9 => criterion_9(level, seed),
        10 => criterion_10(level, seed),
        11 => criterion_11(level, seed),
        _ => Err(crate::Error::InvalidInput(format!("no criterion {id}; criteria are 1..={CRITERIA}"))),
    }
}

pub fn run_selftest(level: Level, seed: u64) -> SelftestReport {
    let criteria: Vec<CriterionReport> = (1..=CRITERIA)
        .map(|id| {
            run_criterion(id, level, seed).unwrap_or_else(|e| CriterionReport {
                id,
                name: name(id).to_string(),
                passed: false,
                detail: format!("error: {e}"),
                skipped: vec![],
                payload: Value::Null,
            })
        })
        .collect();
    let first_failure = criteria.iter().find(|c| !c.passed).map(|c| c.id);
    SelftestReport { level, seed, passed: first_failure.is_none(), first_failure, criteria }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_level_passes() {
        let r = run_selftest(Level::Quick, 7);
        for c in &r.criteria {
            assert!(c.passed, "criterion {}: {}", c.id, c.detail);
        }
        assert_eq!(r.first_failure, None);
    }

    #[test]
    fn unknown_criterion_is_rejected() {
        assert!(run_criterion(12, Level::Quick, 0).is_err());
    }
}
