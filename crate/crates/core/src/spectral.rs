//! Hermitian eigensolves, smallest-modulus extraction, conjugation pairing
//! and `λ₀(ε)` sweeps.

use faer::Side;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble_3d, assemble_axisymmetric, GalerkinOperator};
use crate::error::{Error, Result};
use crate::fourier::{charge_conjugate, SpinorVector, TruncationBox};
use crate::geometry::MetricFamily;
use crate::linalg::{dot, DenseMatrix};

/// Eigenvalues closer to zero than this are treated as zero.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

/// Default tolerance for even-multiplicity pairing.
pub const PAIRING_TOL: f64 = 1e-9;

/// Greedy adjacent pairing of a sorted spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
    pub max_gap: f64,
    /// Largest distance of `C(v)` from the span of its pair, over pairs
    /// separated from their neighbours; `None` without eigenvectors.
    pub conjugation_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub vectors: Option<Vec<SpinorVector>>,
    /// Eigenvalue of smallest modulus, sign preserved.
    pub lambda0: f64,
    /// Set when distinct eigenvalues `±|λ₀|` are both present.
    pub tie: bool,
    pub pairing: Option<Pairing>,
}

impl SpectrumReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let (lambda0, tie) = smallest_modulus(&eigenvalues);
        Self {
            eigenvalues,
            vectors: None,
            lambda0,
            tie,
            pairing: None,
        }
    }

    /// The spectrum with every eigenvalue negated, still ascending.
    pub fn negated(&self) -> Self {
        Self::from_eigenvalues(self.eigenvalues.iter().map(|x| -x).collect())
    }

    /// Eigenvalues with `|λ| ≤ cutoff`.
    pub fn window(&self, cutoff: f64) -> Vec<f64> {
        self.eigenvalues.iter().copied().filter(|x| x.abs() <= cutoff).collect()
    }
}

/// Full spectrum of a Hermitian Galerkin matrix; with `want_vectors`, every
/// eigenpair is checked against `‖Av - λv‖ ≤ 1e-9 ‖A‖`.
pub fn eig_hermitian(op: &GalerkinOperator, want_vectors: bool) -> Result<SpectrumReport> {
    let dim = op.dim();
    let defect = op.hermiticity_defect();
    if defect > 1e-10 * op.matrix.max_abs().max(1.0) {
        return Err(Error::Eigensolver {
            dim,
            reason: format!("matrix is not Hermitian (defect {defect:.3e})"),
        });
    }
    let a = op.matrix.to_faer();
    if !want_vectors {
        let vals = a
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver {
                dim,
                reason: format!("{e:?} (max entry {:.3e})", op.matrix.max_abs()),
            })?;
        return Ok(SpectrumReport::from_eigenvalues(vals));
    }
    let eig = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigensolver {
        dim,
        reason: format!("{e:?} (max entry {:.3e})", op.matrix.max_abs()),
    })?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let vals: Vec<f64> = (0..dim).map(|i| s[i].re).collect();
    let scale = vals.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let bound = 1e-9 * scale;
    let mut vectors = Vec::with_capacity(dim);
    for (j, &lam) in vals.iter().enumerate() {
        let data: Vec<_> = (0..dim).map(|i| u[(i, j)]).collect();
        let av = op.matrix.matvec(&data);
        let residual = av
            .iter()
            .zip(&data)
            .map(|(x, y)| (x - y * lam).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > bound {
            return Err(Error::EigenResidual { residual, bound });
        }
        vectors.push(SpinorVector::from_vec(op.basis, data)?);
    }
    let (lambda0, tie) = smallest_modulus(&vals);
    Ok(SpectrumReport {
        eigenvalues: vals,
        vectors: Some(vectors),
        lambda0,
        tie,
        pairing: None,
    })
}

/// Eigenvalues of a plain Hermitian matrix, ascending.
pub fn eigenvalues(matrix: &DenseMatrix) -> Result<Vec<f64>> {
    matrix
        .to_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver {
            dim: matrix.dim(),
            reason: format!("{e:?}"),
        })
}

/// Eigenvalue of smallest modulus and a tie flag.
///
/// Values with `|λ| < 1e-12` count as zero and return `0` without a tie.
/// When `λ` and `-λ` are both present (within `1e-12`), the one of smaller
/// modulus is returned (the negative one on an exact tie) and the tie is
/// flagged.
pub fn smallest_modulus(eigenvalues: &[f64]) -> (f64, bool) {
    let Some(&best) = eigenvalues.iter().min_by(|a, b| a.abs().total_cmp(&b.abs())) else {
        return (f64::NAN, false);
    };
    if best.abs() < ZERO_EIGENVALUE {
        return (0.0, false);
    }
    let opposite = eigenvalues
        .iter()
        .filter(|&&x| x.signum() != best.signum())
        .min_by(|a, b| a.abs().total_cmp(&b.abs()));
    match opposite {
        Some(&o) if (o.abs() - best.abs()).abs() <= ZERO_EIGENVALUE => {
            let pick = if o.abs() < best.abs() || (o.abs() == best.abs() && o < 0.0) {
                o
            } else {
                best
            };
            (pick, true)
        }
        _ => (best, false),
    }
}

/// Pairs adjacent eigenvalues `(0,1), (2,3), …` and checks the gaps.
///
/// With eigenvectors present, each pair whose neighbours are further than
/// `100 tol` away is checked for `C(v)` lying in the pair's span.
pub fn verify_pairing(report: &SpectrumReport, tol: f64) -> Result<Pairing> {
    let ev = &report.eigenvalues;
    if ev.len() % 2 == 1 {
        return Err(Error::OddSpectrum { len: ev.len() });
    }
    let mut pairs = Vec::with_capacity(ev.len() / 2);
    let mut max_gap = 0.0f64;
    for i in (0..ev.len()).step_by(2) {
        let gap = ev[i + 1] - ev[i];
        if gap > tol {
            return Err(Error::PairingGap { index: i, gap, tol });
        }
        max_gap = max_gap.max(gap);
        pairs.push((i, i + 1));
    }
    let conjugation_residual = report.vectors.as_ref().map(|vs| {
        let sep = 100.0 * tol.max(1e-12);
        pairs
            .iter()
            .filter(|&&(i, j)| {
                let below = i == 0 || ev[i] - ev[i - 1] > sep;
                let above = j + 1 == ev.len() || ev[j + 1] - ev[j] > sep;
                below && above
            })
            .map(|&(i, j)| {
                let cv = charge_conjugate(&vs[i]);
                let mut rest = cv.clone();
                for k in [i, j] {
                    let c = dot(cv.as_slice(), vs[k].as_slice());
                    rest = rest.add_scaled(-c, &vs[k]);
                }
                rest.norm() / cv.norm()
            })
            .fold(0.0, f64::max)
    });
    Ok(Pairing {
        pairs,
        max_gap,
        conjugation_residual,
    })
}

/// Closed-form spectrum of the flat operator on a box: a double zero and
/// `±‖m‖` for every nonzero mode.
pub fn unperturbed_spectrum(basis: TruncationBox) -> SpectrumReport {
    let mut vals = Vec::with_capacity(basis.dim());
    for m in basis.modes() {
        let r = m.norm();
        vals.push(-r);
        vals.push(r);
    }
    SpectrumReport::from_eigenvalues(vals)
}

/// Which assembly a sweep uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Assembly {
    Full,
    Axisymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub lambda0: f64,
    /// `λ₀/ε²`, absent at `ε = 0`.
    pub lambda0_over_eps2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Least-squares fit of `λ₀/ε² ≡ ĉ`, i.e. the mean ratio.
    pub c_hat: f64,
    /// `max |λ₀ - ĉ ε²|` over the fitted rows.
    pub max_residual: f64,
}

/// `λ₀(ε)` over a list of `ε`, eigensolves in parallel, then a fit of
/// `λ₀ = ĉ ε²`. Rows with `ε = 0` are reported but not fitted.
pub fn lambda0_sweep(fam: &MetricFamily, epsilons: &[f64], n: usize, g: usize, assembly: Assembly) -> Result<Sweep> {
    let fitted = epsilons.iter().filter(|e| **e != 0.0).count();
    if fitted < 3 {
        return Err(Error::InvalidArgument(format!(
            "a sweep needs at least 3 nonzero epsilon values, got {fitted}"
        )));
    }
    let rows: Vec<SweepRow> = epsilons
        .par_iter()
        .map(|&eps| {
            let op = match assembly {
                Assembly::Full => assemble_3d(fam, eps, n, g),
                Assembly::Axisymmetric => assemble_axisymmetric(fam, eps, n, g),
            };
            let lambda0 = op
                .and_then(|op| eig_hermitian(&op, false))
                .map_err(|e| Error::SweepFailed {
                    epsilon: eps,
                    source: Box::new(e),
                })?
                .lambda0;
            Ok(SweepRow {
                epsilon: eps,
                lambda0,
                lambda0_over_eps2: (eps != 0.0).then(|| lambda0 / (eps * eps)),
            })
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.lambda0_over_eps2).collect();
    let c_hat = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max_residual = rows
        .iter()
        .filter(|r| r.epsilon != 0.0)
        .map(|r| (r.lambda0 - c_hat * r.epsilon * r.epsilon).abs())
        .fold(0.0, f64::max);
    Ok(Sweep {
        rows,
        c_hat,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::unperturbed_operator;
    use crate::fourier::LatticeVector;
    use crate::linalg::pauli_pattern;
    use num_complex::Complex64;

    #[test]
    fn single_block_gives_plus_minus_norm() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let b = pauli_pattern(c(1.0), c(2.0), c(2.0));
        let m = DenseMatrix::from_fn(2, |i, j| b[(i, j)]);
        let ev = eigenvalues(&m).unwrap();
        assert!((ev[0] + 3.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn flat_spectrum_matches_closed_form() {
        let basis = TruncationBox::cube(1);
        let rep = eig_hermitian(&unperturbed_operator(basis), true).unwrap();
        let exact = unperturbed_spectrum(basis);
        for (a, b) in rep.eigenvalues.iter().zip(&exact.eigenvalues) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(rep.lambda0, 0.0);
        assert!(!rep.tie);
        let p = verify_pairing(&rep, 1e-12).unwrap();
        assert_eq!(p.pairs.len(), 27);
    }

    #[test]
    fn closed_form_shell_counts() {
        let exact = unperturbed_spectrum(TruncationBox::cube(1));
        let count = |v: f64| exact.eigenvalues.iter().filter(|x| (**x - v).abs() < 1e-12).count();
        assert_eq!(count(0.0), 2);
        for (r, k) in [(1.0f64, 6), (2.0f64.sqrt(), 12), (3.0f64.sqrt(), 8)] {
            assert_eq!(count(r), k);
            assert_eq!(count(-r), k);
        }
        assert_eq!(exact.eigenvalues.len(), 2 * 27);
        let _ = LatticeVector::ZERO;
    }

    #[test]
    fn smallest_modulus_rules() {
        assert_eq!(smallest_modulus(&[-1.0, 0.0, 0.0, 1.0]), (0.0, false));
        assert_eq!(smallest_modulus(&[-2.0, -0.5, 0.7, 3.0]), (-0.5, false));
        assert_eq!(smallest_modulus(&[-0.5, 0.5]), (-0.5, true));
        assert_eq!(smallest_modulus(&[-2.0, 0.3, 0.3]), (0.3, false));
    }

    #[test]
    fn pairing_failures() {
        let odd = SpectrumReport::from_eigenvalues(vec![1.0, 1.0, 2.0]);
        assert!(matches!(verify_pairing(&odd, 1e-9), Err(Error::OddSpectrum { len: 3 })));
        let split = SpectrumReport::from_eigenvalues(vec![1.0, 1.1, 2.0, 2.0]);
        assert!(matches!(
            verify_pairing(&split, 1e-9),
            Err(Error::PairingGap { index: 0, .. })
        ));
    }

    #[test]
    fn sweep_needs_three_points() {
        let r = lambda0_sweep(
            &MetricFamily::QuadraticExample,
            &[0.0, 0.1, 0.2],
            2,
            32,
            Assembly::Axisymmetric,
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}
