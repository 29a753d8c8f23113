//! Translation-invariant covariance kernels on the line.
//!
//! The massive free field in one dimension has covariance operator
//! `(m² - d²/dx²)^{-1}`, whose kernel is
//! `(1/2π) ∫ e^{ipx} / (m² + p²) dp = e^{-m|x|} / (2m)`.
//! White noise of strength `σ` has the kernel `σ δ(x)`, which is not a
//! function; its bilinear form is `σ ∫ f g`.

pub mod quad;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    WhiteNoise {
        sigma: f64,
    },
    #[serde(rename = "massive_free_1d")]
    MassiveFree1D {
        m: f64,
    },
    /// Values on a strictly increasing grid, linearly interpolated and zero
    /// outside it.
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("{what} must be finite and > 0, got {v}")))
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::WhiteNoise { sigma } => positive(*sigma, "sigma"),
            KernelSpec::MassiveFree1D { m } => positive(*m, "mass m"),
            KernelSpec::Tabulated { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(Error::input("tabulated kernel needs >= 2 grid points and one value per point"));
                }
                if grid.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::input("tabulated kernel has non-finite entries"));
                }
                if grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::input("tabulated kernel grid must be strictly increasing"));
                }
                Ok(())
            }
        }
    }

    /// Pointwise value; white noise has none.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.validate()?;
        match self {
            KernelSpec::WhiteNoise { .. } => {
                Err(Error::input("the white-noise kernel is a multiple of δ and has no pointwise values"))
            }
            KernelSpec::MassiveFree1D { m } => Ok(kernel_eval(*m, x)),
            KernelSpec::Tabulated { grid, values } => Ok(interpolate(grid, values, x)),
        }
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x < grid[0] || x > grid[grid.len() - 1] {
        return 0.0;
    }
    let i = grid.partition_point(|&g| g <= x).clamp(1, grid.len() - 1);
    let t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
    values[i - 1] + t * (values[i] - values[i - 1])
}

/// `e^{-m|x|} / (2m)`.
pub fn kernel_eval(m: f64, x: f64) -> f64 {
    (-m * x.abs()).exp() / (2.0 * m)
}

/// Truncated Fourier integral of the massive free kernel with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelQuadrature {
    pub value: f64,
    pub p_cutoff: f64,
    /// Estimated error of the quadrature on `[-P, P]`.
    pub quadrature_error: f64,
    /// Bound on the neglected `|p| > P` part.
    pub tail_bound: f64,
    pub evaluations: usize,
}

impl KernelQuadrature {
    pub fn error_bound(&self) -> f64 {
        self.quadrature_error + self.tail_bound
    }
}

/// Bound on `|(1/2π) ∫_{|p|>P} cos(px) / (m² + p²) dp|`.
///
/// Always at most `(1/πm) atan(m/P)`; for `x ≠ 0` an integration by parts
/// also gives `2 / (π |x| (m² + P²))`.
pub fn fourier_tail_bound(m: f64, x: f64, p_cutoff: f64) -> f64 {
    let plain = (m / p_cutoff).atan() / (PI * m);
    if x == 0.0 {
        plain
    } else {
        plain.min(2.0 / (PI * x.abs() * (m * m + p_cutoff * p_cutoff)))
    }
}

/// Smallest cutoff whose tail bound is at most `budget`.
pub fn auto_cutoff(m: f64, x: f64, budget: f64) -> f64 {
    let angle = PI * m * budget;
    let plain = if angle < PI / 2.0 { m / angle.tan() } else { f64::MIN_POSITIVE };
    if x == 0.0 {
        return plain;
    }
    let parts = (2.0 / (PI * x.abs() * budget) - m * m).max(0.0).sqrt();
    plain.min(parts).max(f64::MIN_POSITIVE)
}

const MAX_PANELS: usize = 1 << 20;

/// `(1/2π) ∫_{-P}^{P} cos(px) / (m² + p²) dp`, adaptively refined until the
/// quadrature error plus the tail bound is at most `tol`.
///
/// Without an explicit `p_cutoff`, the cutoff is chosen so that the tail
/// bound takes half of `tol`.
pub fn kernel_fourier_quadrature(m: f64, x: f64, p_cutoff: Option<f64>, tol: f64) -> Result<KernelQuadrature> {
    positive(m, "mass m")?;
    positive(tol, "tol")?;
    if !x.is_finite() {
        return Err(Error::input(format!("x must be finite, got {x}")));
    }
    let p = match p_cutoff {
        Some(p) => {
            positive(p, "p_cutoff")?;
            p
        }
        None => auto_cutoff(m, x, 0.5 * tol),
    };
    let tail_bound = fourier_tail_bound(m, x, p);
    if tail_bound >= tol {
        return Err(Error::ToleranceUnreached { requested: tol, achieved: tail_bound });
    }
    // Even integrand: integrate over [0, P]. Panels follow the oscillation
    // period and, near the origin, the width m of the Lorentzian.
    let mut breaks = vec![0.0];
    let mut b = m;
    while b < p {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.push(p);
    if x != 0.0 {
        let period = 2.0 * PI / x.abs();
        let n = (p / period).ceil() as usize;
        if n > MAX_PANELS / 2 {
            if p_cutoff.is_some() {
                return Err(Error::input(format!("cutoff {p:e} needs {n} oscillation panels; lower the cutoff")));
            }
            let p_max = period * (MAX_PANELS / 2) as f64;
            return Err(Error::ToleranceUnreached { requested: tol, achieved: fourier_tail_bound(m, x, p_max) });
        }
        breaks.extend((1..n).map(|k| k as f64 * period));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }
    let f = |q: f64| (q * x).cos() / (m * m + q * q);
    let budget = (tol - tail_bound) * PI;
    let r = quad::integrate(f, &breaks, budget, MAX_PANELS).map_err(|e| match e {
        Error::ToleranceUnreached { achieved, .. } => {
            Error::ToleranceUnreached { requested: tol, achieved: achieved / PI + tail_bound }
        }
        e => e,
    })?;
    Ok(KernelQuadrature {
        value: r.value / PI,
        p_cutoff: p,
        quadrature_error: r.error / PI,
        tail_bound,
        evaluations: r.evaluations,
    })
}

/// `∫_ℝ e^{-m|x|} / (2m) dx` by quadrature, with its error bound; the exact
/// value is `1/m²`.
pub fn kernel_integral(m: f64, tol: f64) -> Result<(f64, f64)> {
    positive(m, "mass m")?;
    positive(tol, "tol")?;
    // beyond L the two tails carry e^{-mL} / m²
    let l = ((2.0 / (tol * m * m)).ln() / m).max(1.0 / m);
    let tail = (-m * l).exp() / (m * m);
    let breaks: Vec<f64> = (0..=16).map(|k| l * k as f64 / 16.0).collect();
    let r = quad::integrate(|x| kernel_eval(m, x), &breaks, 0.25 * tol, MAX_PANELS)?;
    Ok((2.0 * r.value, 2.0 * r.error + tail))
}

/// A function tabulated on the uniform grid `x0 + i dx`, `i = 0..values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFunction {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        let g = GridFunction { x0, dx, values };
        g.validate()?;
        Ok(g)
    }

    /// Samples `f` at `count` points spaced `dx` apart starting at `x0`.
    pub fn sample(x0: f64, dx: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridFunction::new(x0, dx, (0..count).map(|i| f(x0 + i as f64 * dx)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::input("a grid function needs at least 2 points"));
        }
        positive(self.dx, "dx")?;
        if !self.x0.is_finite() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("grid function has non-finite entries"));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    fn compatible(&self, o: &GridFunction) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        if self.values.len() != o.values.len() || !close(self.x0, o.x0) || !close(self.dx, o.dx) {
            return Err(Error::input(format!(
                "incompatible grids: ({}, {}, {}) vs ({}, {}, {})",
                self.x0,
                self.dx,
                self.values.len(),
                o.x0,
                o.dx,
                o.values.len()
            )));
        }
        Ok(())
    }

    /// Every other point, when the point count allows it.
    fn coarsened(&self) -> Option<GridFunction> {
        let n = self.values.len();
        if n < 5 || n.is_multiple_of(2) {
            return None;
        }
        Some(GridFunction { x0: self.x0, dx: 2.0 * self.dx, values: self.values.iter().step_by(2).copied().collect() })
    }
}

fn trapezoid_weight(i: usize, n: usize, dx: f64) -> f64 {
    if i == 0 || i == n - 1 {
        0.5 * dx
    } else {
        dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bilinear {
    pub value: f64,
    /// Richardson estimate `|I_h - I_2h| / 3` of the `O(Δx²)` error; absent
    /// when the grid has an even number of points and cannot be coarsened.
    pub error_estimate: Option<f64>,
}

fn bilinear_raw(k: &KernelSpec, f: &GridFunction, g: &GridFunction) -> Result<f64> {
    let n = f.values.len();
    let w = |i| trapezoid_weight(i, n, f.dx);
    if let KernelSpec::WhiteNoise { sigma } = k {
        return Ok(sigma * (0..n).map(|i| w(i) * f.values[i] * g.values[i]).sum::<f64>());
    }
    let mut total = 0.0;
    for i in 0..n {
        if f.values[i] == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for j in 0..n {
            inner += w(j) * k.eval(f.x(i) - g.x(j))? * g.values[j];
        }
        total += w(i) * f.values[i] * inner;
    }
    Ok(total)
}

/// Trapezoid value of `∫∫ f(x) C(x - x') g(x') dx dx'`; for white noise
/// `σ ∫ f g dx`.
pub fn covariance_bilinear(k: &KernelSpec, f: &GridFunction, g: &GridFunction) -> Result<Bilinear> {
    k.validate()?;
    f.validate()?;
    g.validate()?;
    f.compatible(g)?;
    let value = bilinear_raw(k, f, g)?;
    let error_estimate = match (f.coarsened(), g.coarsened()) {
        (Some(fc), Some(gc)) => Some((value - bilinear_raw(k, &fc, &gc)?).abs() / 3.0),
        _ => None,
    };
    Ok(Bilinear { value, error_estimate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    /// The kernel is a continuous function; samples live on continuous paths.
    ContinuousKernel,
    /// The kernel is no continuous function; samples are not signed measures
    /// on any open set.
    NowhereSignedMeasure,
}

/// Jump heuristic thresholds for tabulated kernels.
pub const JUMP_MEDIAN_FACTOR: f64 = 10.0;
pub const JUMP_SCALE_FACTOR: f64 = 1e-3;
/// Neighbouring jumps on each side that a jump is compared with.
pub const JUMP_WINDOW: usize = 4;

/// Regularity class of the kernel. Exact for the closed forms; for tabulated
/// kernels a heuristic: discontinuous when some adjacent jump exceeds both
/// `10 ×` the median of the neighbouring jumps and `1e-3 ×` the largest
/// absolute value. A global median would flag smooth kernels with long flat
/// tails, such as `e^{-|x|}` on a wide grid.
pub fn support_regularity_flag(k: &KernelSpec) -> Result<Regularity> {
    k.validate()?;
    Ok(match k {
        KernelSpec::WhiteNoise { .. } => Regularity::NowhereSignedMeasure,
        KernelSpec::MassiveFree1D { .. } => Regularity::ContinuousKernel,
        KernelSpec::Tabulated { values, .. } => {
            let jumps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let broken = (0..jumps.len()).any(|i| {
                let mut near: Vec<f64> = (i.saturating_sub(JUMP_WINDOW)..(i + JUMP_WINDOW + 1).min(jumps.len()))
                    .filter(|&j| j != i)
                    .map(|j| jumps[j])
                    .collect();
                if near.is_empty() {
                    return false;
                }
                near.sort_by(f64::total_cmp);
                let median = near[near.len() / 2];
                jumps[i] > JUMP_MEDIAN_FACTOR * median && jumps[i] > JUMP_SCALE_FACTOR * scale
            });
            if broken {
                Regularity::NowhereSignedMeasure
            } else {
                Regularity::ContinuousKernel
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(kernel_eval(1.0, 0.0), 0.5);
        assert_eq!(kernel_eval(0.7, 1.3), kernel_eval(0.7, -1.3));
        assert!((kernel_eval(1.0, 5.0) - 0.003_368_973_499_542_734).abs() < 1e-15);
    }

    #[test]
    fn fourier_quadrature_examples() {
        let q = kernel_fourier_quadrature(1.0, 0.0, Some(1e4), 1e-4).unwrap();
        assert!((q.value - 0.5).abs() < 1e-4);
        assert!(q.error_bound() <= 1e-4);
        let q = kernel_fourier_quadrature(2.0, 0.0, None, 1e-8).unwrap();
        assert!((q.value - 0.25).abs() < 1e-8);
        let q = kernel_fourier_quadrature(1.0, 5.0, None, 1e-8).unwrap();
        assert!((q.value - kernel_eval(1.0, 5.0)).abs() < 1e-8);
    }

    #[test]
    fn tail_bound_is_a_bound() {
        // exact tail at x = 0 is (1/πm) atan(m/P)
        for m in [0.5f64, 1.0, 2.0, 5.0] {
            let p = 100.0;
            let exact = (m / p).atan() / (PI * m);
            assert!(fourier_tail_bound(m, 0.0, p) >= exact * (1.0 - 1e-15));
        }
        assert!(fourier_tail_bound(1.0, 2.0, 100.0) < fourier_tail_bound(1.0, 0.0, 100.0));
    }

    #[test]
    fn unreachable_cutoff_is_reported() {
        let e = kernel_fourier_quadrature(1.0, 0.0, Some(10.0), 1e-6).unwrap_err();
        match e {
            Error::ToleranceUnreached { achieved, .. } => assert!(achieved > 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integral_is_inverse_mass_squared() {
        for m in [0.5, 1.0, 2.0] {
            let (v, err) = kernel_integral(m, 1e-8).unwrap();
            assert!((v - 1.0 / (m * m)).abs() < 1e-7, "m = {m}: {v}");
            assert!(err < 1e-7);
        }
    }

    fn bump(x: f64) -> f64 {
        (-x * x / 2.0).exp() / PI.sqrt().sqrt()
    }

    #[test]
    fn white_noise_bilinear() {
        let f = GridFunction::sample(-8.0, 0.01, 1601, bump).unwrap();
        let b = covariance_bilinear(&KernelSpec::WhiteNoise { sigma: 3.0 }, &f, &f).unwrap();
        assert!((b.value - 3.0).abs() < 1e-10);
        let zero = GridFunction::new(-8.0, 0.01, vec![0.0; 1601]).unwrap();
        let b = covariance_bilinear(&KernelSpec::MassiveFree1D { m: 1.0 }, &f, &zero).unwrap();
        assert_eq!(b.value, 0.0);
    }

    #[test]
    fn massive_bilinear_refines() {
        let k = KernelSpec::MassiveFree1D { m: 1.0 };
        let coarse = GridFunction::sample(-6.0, 0.1, 121, bump).unwrap();
        let fine = GridFunction::sample(-6.0, 0.025, 481, bump).unwrap();
        let bc = covariance_bilinear(&k, &coarse, &coarse).unwrap();
        let bf = covariance_bilinear(&k, &fine, &fine).unwrap();
        assert!(bc.value > 0.0);
        assert!((bc.value - bf.value).abs() < 0.01 * bf.value);
        assert!(bf.error_estimate.unwrap() < bc.error_estimate.unwrap());
    }

    #[test]
    fn grids_must_match() {
        let f = GridFunction::sample(0.0, 0.1, 11, |x| x).unwrap();
        let g = GridFunction::sample(0.0, 0.2, 11, |x| x).unwrap();
        assert!(covariance_bilinear(&KernelSpec::WhiteNoise { sigma: 1.0 }, &f, &g).is_err());
    }

    #[test]
    fn regularity_flags() {
        assert_eq!(
            support_regularity_flag(&KernelSpec::WhiteNoise { sigma: 1.0 }).unwrap(),
            Regularity::NowhereSignedMeasure
        );
        assert_eq!(
            support_regularity_flag(&KernelSpec::MassiveFree1D { m: 2.0 }).unwrap(),
            Regularity::ContinuousKernel
        );
        let grid: Vec<f64> = (0..=60).map(|i| -3.0 + 0.1 * i as f64).collect();
        let values: Vec<f64> = grid.iter().map(|x| (-x.abs()).exp()).collect();
        let smooth = KernelSpec::Tabulated { grid: grid.clone(), values };
        assert_eq!(support_regularity_flag(&smooth).unwrap(), Regularity::ContinuousKernel);
        let spike: Vec<f64> = grid.iter().map(|&x| if x.abs() < 1e-9 { 1.0 } else { 0.0 }).collect();
        let spike = KernelSpec::Tabulated { grid, values: spike };
        assert_eq!(support_regularity_flag(&spike).unwrap(), Regularity::NowhereSignedMeasure);
        let wide: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
        let step: Vec<f64> = wide.iter().map(|&x| if x < 1.0 { (-x.abs()).exp() } else { 0.0 }).collect();
        let values = wide.iter().map(|x| (-x.abs()).exp()).collect();
        let smooth = KernelSpec::Tabulated { grid: wide.clone(), values };
        assert_eq!(support_regularity_flag(&smooth).unwrap(), Regularity::ContinuousKernel);
        let step = KernelSpec::Tabulated { grid: wide, values: step };
        assert_eq!(support_regularity_flag(&step).unwrap(), Regularity::NowhereSignedMeasure);
    }

    #[test]
    fn tabulated_interpolation_and_json() {
        let k: KernelSpec =
            serde_json::from_str(r#"{"tabulated": {"grid": [-1, 0, 1], "values": [0, 2, 0]}}"#).unwrap();
        assert_eq!(k.eval(0.5).unwrap(), 1.0);
        assert_eq!(k.eval(3.0).unwrap(), 0.0);
        let m: KernelSpec = serde_json::from_str(r#"{"massive_free_1d": {"m": 1}}"#).unwrap();
        assert_eq!(m.eval(0.0).unwrap(), 0.5);
        assert!(KernelSpec::WhiteNoise { sigma: 1.0 }.eval(0.0).is_err());
    }
}
