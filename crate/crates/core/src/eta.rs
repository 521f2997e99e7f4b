//! Eta-function partial sums, the heat-trace estimate of the eta
//! invariant, the circle example, and the sign check `sign η = sign c`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::assembly::{assemble_3d, assemble_axisymmetric};
use crate::error::{Error, Result};
use crate::geometry::MetricFamily;
use crate::perturbation::coefficient_c;
use crate::spectral::{eig_hermitian, SpectrumReport};

/// Eigenvalues with `|λ|` below this are excluded from `Σ sign λ / |λ|^s`.
pub const ETA_ZERO: f64 = 1e-10;

/// Below this `|c|` the sign check is skipped.
pub const C_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum EtaScheme {
    PartialSum {
        s: f64,
    },
    HeatTrace {
        t_min: f64,
        t_max: f64,
        /// Spectral cutoff `Λ`: only `|λ| ≤ Λ` enters.
        cutoff: f64,
        panels: usize,
        nodes_per_panel: usize,
        /// Quadrature over `[t_min, t_max]`.
        quadrature: f64,
        /// Closed-form tail of the near-zero cluster over `[t_max, ∞)`.
        tail: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaEstimate {
    pub value: f64,
    #[serde(flatten)]
    pub scheme: EtaScheme,
    pub error_indicator: f64,
    pub warnings: Vec<String>,
}

/// Kahan-free but order-fixed sum of `sign λ · w(|λ|)`: positive and
/// negative parts are summed separately in ascending modulus, so negating the
/// spectrum negates the result exactly.
fn odd_sum(eigenvalues: &[f64], w: impl Fn(f64) -> f64) -> f64 {
    let mut pos: Vec<f64> = eigenvalues.iter().copied().filter(|x| *x > 0.0).collect();
    let mut neg: Vec<f64> = eigenvalues.iter().filter(|x| **x < 0.0).map(|x| -x).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let p: f64 = pos.iter().map(|&x| w(x)).sum();
    let n: f64 = neg.iter().map(|&x| w(x)).sum();
    p - n
}

/// `Σ sign λ / |λ|^s` over the nonzero eigenvalues.
///
/// The error indicator is the magnitude of the contribution from the upper
/// half of the spectrum, `|λ| > max|λ|/2`.
pub fn eta_partial(spectrum: &SpectrumReport, s: f64) -> Result<EtaEstimate> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eta exponent s must be positive, got {s}"
        )));
    }
    let nonzero: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .copied()
        .filter(|x| x.abs() >= ETA_ZERO)
        .collect();
    let mut warnings = Vec::new();
    if nonzero.is_empty() {
        warnings.push("spectrum has no nonzero eigenvalues; eta partial sum is 0".to_string());
    }
    let top = nonzero.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let upper: Vec<f64> = nonzero.iter().copied().filter(|x| x.abs() > 0.5 * top).collect();
    Ok(EtaEstimate {
        value: odd_sum(&nonzero, |x| x.powf(-s)),
        scheme: EtaScheme::PartialSum { s },
        error_indicator: odd_sum(&upper, |x| x.powf(-s)).abs(),
        warnings,
    })
}

/// `Tr[A e^{-tA²}] = Σ λ e^{-tλ²}`.
pub fn heat_trace(eigenvalues: &[f64], t: f64) -> f64 {
    odd_sum(eigenvalues, |x| x * (-t * x * x).exp())
}

/// Parameters of [`eta_invariant_heat`]; `None` selects the default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatParams {
    /// Default `1/Λ²`.
    pub t_min: Option<f64>,
    /// Default `50/μ²` with `μ` the smallest modulus outside the near-zero
    /// cluster.
    pub t_max: Option<f64>,
    /// Default `max|λ|/2`, raised if needed to keep the near-zero cluster.
    pub cutoff: Option<f64>,
    pub nodes_per_panel: usize,
}

impl Default for HeatParams {
    fn default() -> Self {
        Self {
            t_min: None,
            t_max: None,
            cutoff: None,
            nodes_per_panel: 16,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Golub-Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Eigenvalues of the near-zero cluster: `|λ|` up to the second smallest
/// modulus (the C-pair of the protected eigenvalue).
fn near_zero_cluster(eigenvalues: &[f64]) -> (Vec<f64>, f64) {
    let mut moduli: Vec<f64> = eigenvalues.iter().map(|x| x.abs()).collect();
    moduli.sort_by(f64::total_cmp);
    let bound = moduli.get(1).or(moduli.first()).copied().unwrap_or(0.0) * (1.0 + 1e-9);
    let cluster: Vec<f64> = eigenvalues.iter().copied().filter(|x| x.abs() <= bound).collect();
    let next = moduli.iter().copied().find(|m| *m > bound).unwrap_or(f64::INFINITY);
    (cluster, next)
}

struct HeatRun {
    value: f64,
    quadrature: f64,
    tail: f64,
    panels: usize,
}

fn heat_estimate(kept: &[f64], cluster: &[f64], t_min: f64, t_max: f64, nodes: usize) -> HeatRun {
    // (1/√π) ∫ f(t)/√t dt = (2/√π) ∫ f(u²) du, u = √t, on panels [u_k, 2u_k].
    let (u0, u1) = (t_min.sqrt(), t_max.sqrt());
    let panels = ((u1 / u0).log2().ceil() as usize).max(1);
    let ratio = (u1 / u0).powf(1.0 / panels as f64);
    let (x, w) = gauss_legendre(nodes);
    let parts: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|p| {
            let a = u0 * ratio.powi(p as i32);
            let b = if p + 1 == panels { u1 } else { a * ratio };
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let u = mid + half * xi;
                    wi * half * heat_trace(kept, u * u)
                })
                .sum()
        })
        .collect();
    let quadrature = 2.0 / std::f64::consts::PI.sqrt() * parts.iter().sum::<f64>();
    let tail = odd_sum(cluster, |x| erfc(x * t_max.sqrt()));
    HeatRun {
        value: quadrature + tail,
        quadrature,
        tail,
        panels,
    }
}

/// `η(0) ≈ (1/√π) ∫_{t_min}^{t_max} Tr[A e^{-tA²}] t^{-1/2} dt + tail`,
/// restricted to `|λ| ≤ Λ`, with the near-zero cluster integrated in closed
/// form over `[t_max, ∞)`: `Σ sign λ · erfc(|λ| √t_max)`.
///
/// The region `t < t_min` is dropped: the truncated spectrum does not
/// resolve it, and `t_min Λ² ≥ 1` is enforced. The error indicator is the
/// larger change under halving `t_min` and under doubling `Λ` (capped by the
/// available spectrum).
pub fn eta_invariant_heat(spectrum: &SpectrumReport, params: HeatParams) -> Result<EtaEstimate> {
    let ev = &spectrum.eigenvalues;
    if ev.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if params.nodes_per_panel < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 quadrature nodes per panel".into(),
        ));
    }
    let top = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (cluster, next) = near_zero_cluster(ev);
    let cluster_max = cluster.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cutoff = params.cutoff.unwrap_or_else(|| (0.5 * top).max(cluster_max));
    if !(cutoff > 0.0) {
        return Err(Error::InvalidArgument("spectral cutoff must be positive".into()));
    }
    let t_min = params.t_min.unwrap_or(1.0 / (cutoff * cutoff));
    if !(t_min > 0.0) || t_min * cutoff * cutoff < 1.0 - 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "t_min={t_min:e} is below the resolution floor 1/Λ² = {:e}",
            1.0 / (cutoff * cutoff)
        )));
    }
    let t_max = params
        .t_max
        .unwrap_or_else(|| {
            if next.is_finite() {
                50.0 / (next * next)
            } else {
                50.0 / (top * top)
            }
        })
        .max(t_min);
    let keep = |lim: f64| -> Vec<f64> { ev.iter().copied().filter(|x| x.abs() <= lim).collect() };
    let kept = keep(cutoff);
    let cluster_kept: Vec<f64> = cluster.iter().copied().filter(|x| x.abs() <= cutoff).collect();
    let nodes = params.nodes_per_panel;
    let base = heat_estimate(&kept, &cluster_kept, t_min, t_max, nodes);
    let halved = heat_estimate(&kept, &cluster_kept, 0.5 * t_min, t_max, nodes);
    let wide_cut = (2.0 * cutoff).min(top).max(cutoff);
    let widened = heat_estimate(&keep(wide_cut), &cluster_kept, t_min, t_max, nodes);
    let error_indicator = (halved.value - base.value)
        .abs()
        .max((widened.value - base.value).abs());
    let mut warnings = Vec::new();
    if kept.len() == ev.len() && params.cutoff.is_none() {
        warnings.push("cutoff keeps the whole spectrum; truncation edge is not excluded".into());
    }
    Ok(EtaEstimate {
        value: base.value,
        scheme: EtaScheme::HeatTrace {
            t_min,
            t_max,
            cutoff,
            panels: base.panels,
            nodes_per_panel: nodes,
            quadrature: base.quadrature,
            tail: base.tail,
        },
        error_indicator,
        warnings,
    })
}

/// `η_{H(ε)}(0) = 1 - 2ε` for `H(ε) = -i d/dx + ε` on the circle, `ε ∈ (0, 1)`.
pub fn circle_eta(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "circle eta needs epsilon in the open interval (0, 1), got {eps}"
        )));
    }
    Ok(1.0 - 2.0 * eps)
}

/// Number of explicitly summed pairs in [`circle_eta_numeric`].
pub const CIRCLE_PAIRS: usize = 1000;
/// Exponents used for the extrapolation `s → 0`.
pub const CIRCLE_EXPONENTS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// `η(s) = Σ_{n≥0} [(n+ε)^{-s} - (n+1-ε)^{-s}]` for `s > 0`: the positive
/// eigenvalue `n + ε` is paired with the negative one `-(n + 1 - ε)`. The
/// first [`CIRCLE_PAIRS`] pairs are summed directly and the rest by
/// Euler-Maclaurin.
pub fn circle_eta_at(eps: f64, s: f64) -> f64 {
    let (a, b) = (eps, 1.0 - eps);
    let m = CIRCLE_PAIRS as f64;
    let head: f64 = (0..CIRCLE_PAIRS)
        .map(|n| (n as f64 + a).powf(-s) - (n as f64 + b).powf(-s))
        .sum();
    let f = |x: f64| (x + a).powf(-s) - (x + b).powf(-s);
    let d1 = |x: f64| -s * ((x + a).powf(-s - 1.0) - (x + b).powf(-s - 1.0));
    let d3 = |x: f64| {
        let k = -s * (-s - 1.0) * (-s - 2.0);
        k * ((x + a).powf(-s - 3.0) - (x + b).powf(-s - 3.0))
    };
    let integral = ((m + b).powf(1.0 - s) - (m + a).powf(1.0 - s)) / (1.0 - s);
    head + integral + 0.5 * f(m) - d1(m) / 12.0 + d3(m) / 720.0
}

/// Numeric continuation of the circle eta function to `s = 0` by Neville
/// extrapolation through [`CIRCLE_EXPONENTS`].
pub fn circle_eta_numeric(eps: f64) -> Result<f64> {
    circle_eta(eps)?;
    let xs = CIRCLE_EXPONENTS;
    let mut p: Vec<f64> = xs.par_iter().map(|&s| circle_eta_at(eps, s)).collect();
    let n = xs.len();
    for level in 1..n {
        for i in 0..(n - level) {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    Ok(p[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub epsilon: f64,
    pub c: f64,
    pub status: CheckStatus,
    pub eta: Option<EtaEstimate>,
    pub lambda0: Option<f64>,
}

/// Compares the sign of the heat-trace eta estimate with `sign c`.
///
/// Axisymmetric families use the 1D assembly with `n` modes on each side;
/// others use the 3D cube of radius `n`. Skipped when `c = 0`.
pub fn corollary_sign_check(fam: &MetricFamily, eps: f64, n: usize, g: usize) -> Result<CorollaryReport> {
    let c = coefficient_c(&fam.h())?;
    if c.abs() < C_ZERO {
        return Ok(CorollaryReport {
            epsilon: eps,
            c,
            status: CheckStatus::Skipped,
            eta: None,
            lambda0: None,
        });
    }
    let op = if fam.is_axisymmetric() {
        assemble_axisymmetric(fam, eps, n, g)?
    } else {
        assemble_3d(fam, eps, n, g)?
    };
    let spectrum = eig_hermitian(&op, false)?;
    let eta = eta_invariant_heat(&spectrum, HeatParams::default())?;
    let status = if eta.value != 0.0 && eta.value.signum() == c.signum() {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(CorollaryReport {
        epsilon: eps,
        c,
        status,
        eta: Some(eta),
        lambda0: Some(spectrum.lambda0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(v: &[f64]) -> SpectrumReport {
        SpectrumReport::from_eigenvalues(v.to_vec())
    }

    #[test]
    fn two_term_partial_sum() {
        let e = eta_partial(&spectrum(&[2.0, -1.0]), 1.0).unwrap();
        assert!((e.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn partial_sum_rejects_nonpositive_s() {
        assert!(eta_partial(&spectrum(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn zero_spectrum_warns() {
        let e = eta_partial(&spectrum(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.warnings.len(), 1);
    }

    #[test]
    fn double_eigenvalue_heat_trace() {
        let (l, t) = (-0.3, 2.0);
        assert!((heat_trace(&[l, l], t) - 2.0 * l * (-t * l * l).exp()).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((integral - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    /// The exact per-eigenvalue integral is sign λ · [erfc(|λ|√t_min) - erfc(|λ|√t_max)];
    /// the library erfc is good to about 1e-11 here.
    #[test]
    fn quadrature_matches_closed_form() {
        let ev = [-2.5, -1.2, -0.05, -0.05, 0.9, 1.7, 3.1];
        let rep = spectrum(&ev);
        let params = HeatParams {
            t_min: Some(0.2),
            t_max: Some(30.0),
            cutoff: Some(3.2),
            nodes_per_panel: 40,
        };
        let est = eta_invariant_heat(&rep, params).unwrap();
        let EtaScheme::HeatTrace { quadrature, tail, .. } = est.scheme else {
            panic!()
        };
        let exact: f64 = ev
            .iter()
            .map(|l: &f64| l.signum() * (erfc(l.abs() * 0.2f64.sqrt()) - erfc(l.abs() * 30f64.sqrt())))
            .sum();
        assert!((quadrature - exact).abs() < 1e-9, "{quadrature} vs {exact}");
        // same integral in 30-digit arithmetic
        assert!((quadrature + 0.212_771_232_310_429_15).abs() < 1e-13);
        assert!((tail + 2.0 * erfc(0.05 * 30f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn heat_estimate_rejects_small_t_min() {
        let params = HeatParams {
            t_min: Some(0.01),
            cutoff: Some(2.0),
            ..HeatParams::default()
        };
        assert!(eta_invariant_heat(&spectrum(&[-1.0, 1.5]), params).is_err());
    }

    #[test]
    fn lone_pair_tends_to_two_sign() {
        let lam = -1e-3;
        let params = HeatParams {
            cutoff: Some(1.0),
            ..HeatParams::default()
        };
        let est = eta_invariant_heat(&spectrum(&[lam, lam]), params).unwrap();
        assert!((est.value + 2.0).abs() < 1e-2, "{}", est.value);
    }

    #[test]
    fn circle_closed_form() {
        assert_eq!(circle_eta(0.25).unwrap(), 0.5);
        assert_eq!(circle_eta(0.5).unwrap(), 0.0);
        assert!((circle_eta(1e-9).unwrap() - 1.0).abs() < 1e-8);
        assert!(circle_eta(0.0).is_err());
        assert!(circle_eta(1.0).is_err());
    }

    #[test]
    fn circle_numeric_path() {
        for eps in [0.1, 0.25, 0.4, 0.75] {
            let num = circle_eta_numeric(eps).unwrap();
            assert!((num - (1.0 - 2.0 * eps)).abs() < 1e-3, "{eps}: {num}");
        }
    }

    #[test]
    fn circle_partial_sums_are_finite_for_positive_s() {
        // at s = 1 the paired series converges without the tail; compare
        let eps = 0.3;
        let direct: f64 = (0..2_000_000)
            .map(|n| 1.0 / (n as f64 + eps) - 1.0 / (n as f64 + 1.0 - eps))
            .sum();
        assert!((circle_eta_at(eps, 1.0 - 1e-9) - direct).abs() < 1e-5);
    }
}
