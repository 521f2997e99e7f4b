//! Perturbation theory for the protected double eigenvalue: the coefficient
//! `c` by direct summation, the operators `A⁽¹⁾` and `A⁽²⁾_sub`, the
//! pseudoinverse `Q`, Taylor coefficients of `A(ε)`, and the order-by-order
//! Rellich recurrence.

use faer::Side;
use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble_3d, assemble_axisymmetric, GalerkinOperator, OperatorSymbol};
use crate::error::{Error, Result};
use crate::fourier::{charge_conjugate, inner_product, LatticeVector, SpinorVector, TensorFourierField, TruncationBox};
use crate::geometry::{levi_civita, MetricFamily};
use crate::linalg::{dot, pauli_pattern, Block, DenseMatrix, I, ZERO};
use crate::spectral::Assembly;

/// Reality defects of `h` above this are rejected.
pub const REALITY_TOL: f64 = 1e-12;

/// Bound on `|⟨f⁽ᵏ⁾, C(v⁽⁰⁾)⟩|` in the Rellich recurrence.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

fn check_reality(h: &TensorFourierField) -> Result<()> {
    let (defect, mode) = h.reality_defect();
    if defect > REALITY_TOL {
        return Err(Error::RealityViolation { mode: mode.0, defect });
    }
    Ok(())
}

/// `c = (i/16) ε_{αβγ} Σ_{m≠0} (δ_{μν} - m_μ m_ν/‖m‖²) m_α ĥ_{βμ}(m) conj(ĥ_{γν}(m))`
/// over the support of `h`.
pub fn coefficient_c(h: &TensorFourierField) -> Result<f64> {
    check_reality(h)?;
    let mut total = ZERO;
    let mut scale = 0.0f64;
    for (m, hat) in h.iter() {
        if m == LatticeVector::ZERO || hat.iter().all(|c| *c == ZERO) {
            continue;
        }
        let mf = m.as_f64();
        let r2 = m.norm_sq() as f64;
        let proj = |mu: usize, nu: usize| f64::from(u8::from(mu == nu)) - mf[mu] * mf[nu] / r2;
        let mut s = ZERO;
        for a in 0..3 {
            if mf[a] == 0.0 {
                continue;
            }
            for b in 0..3 {
                for g in 0..3 {
                    let eps = levi_civita(a, b, g);
                    if eps == 0.0 {
                        continue;
                    }
                    for mu in 0..3 {
                        for nu in 0..3 {
                            let p = proj(mu, nu);
                            if p != 0.0 {
                                s += hat[(b, mu)] * hat[(g, nu)].conj() * (eps * p * mf[a]);
                            }
                        }
                    }
                }
            }
        }
        scale = scale.max(s.norm());
        total += s;
    }
    let c = I * total / 16.0;
    let imag_tol = 1e-12 * scale.max(1.0);
    if c.im.abs() > imag_tol {
        return Err(Error::InvalidArgument(format!(
            "coefficient c has imaginary residual {:.3e}",
            c.im
        )));
    }
    Ok(c.re)
}

/// `c = -(1/8) Σ_{m₁≥1} m₁ tr[Ĥ σ₂ Ĥ*]` with `Ĥ` the `(2,3)×(2,3)` block
/// of `ĥ(m₁, 0, 0)`.
pub fn coefficient_c_axisymmetric(h: &TensorFourierField) -> Result<f64> {
    if let Some(m) = h.off_axis_mode(0.0) {
        return Err(Error::NotAxisymmetric { mode: m.0 });
    }
    check_reality(h)?;
    let sigma2 = Matrix2::new(ZERO, -I, I, ZERO);
    let mut total = ZERO;
    for (m, hat) in h.iter() {
        let m1 = m.0[0];
        if m1 < 1 {
            continue;
        }
        let block = Matrix2::new(hat[(1, 1)], hat[(1, 2)], hat[(2, 1)], hat[(2, 2)]);
        total += (block * sigma2 * block.adjoint()).trace() * f64::from(m1);
    }
    Ok(-total.re / 8.0)
}

/// First-order operator: blocks `½(m+m')_α N̂^α(m'-m)` with
/// `N^α = -½ [[h₃α, h₁α - i h₂α], [h₁α + i h₂α, -h₃α]]`; no zero-order part.
pub fn operator_a1(h: &TensorFourierField, basis: TruncationBox) -> Result<GalerkinOperator> {
    check_reality(h)?;
    let support = h.support();
    let symbol = OperatorSymbol::from_fn(
        support,
        |a, k| {
            let hat = h.get(k);
            pauli_pattern(hat[(0, a)], hat[(1, a)], hat[(2, a)]) * Complex64::new(-0.5, 0.0)
        },
        |_| ZERO,
    );
    Ok(GalerkinOperator::new(basis, symbol.galerkin(basis)))
}

/// Mean of `A⁽²⁾_sub = -(1/16) ε_{βγδ} h_{αβ} ∂_δ h_{αγ}`, i.e.
/// `⟨A⁽²⁾_sub v⁽⁰⁾, v⁽⁰⁾⟩`.
pub fn a2_sub_mean(h: &TensorFourierField) -> f64 {
    let mut total = ZERO;
    for (m, hat) in h.iter() {
        let minus = h.get(m.neg());
        let mf = m.as_f64();
        for a in 0..3 {
            for b in 0..3 {
                for g in 0..3 {
                    for d in 0..3 {
                        let eps = levi_civita(b, g, d);
                        if eps == 0.0 || mf[d] == 0.0 {
                            continue;
                        }
                        total += minus[(a, b)] * I * mf[d] * hat[(a, g)] * eps;
                    }
                }
            }
        }
    }
    -total.re / 16.0
}

/// The two contributions to `λ⁽²⁾` from the operator route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambda2Terms {
    /// `⟨A⁽¹⁾ v⁽⁰⁾, v⁽⁰⁾⟩`.
    pub lambda1: f64,
    /// `⟨A⁽²⁾_sub v⁽⁰⁾, v⁽⁰⁾⟩`.
    pub subprincipal: f64,
    /// `⟨A⁽¹⁾ Q A⁽¹⁾ v⁽⁰⁾, v⁽⁰⁾⟩`.
    pub resolvent: f64,
    /// `subprincipal - resolvent`.
    pub lambda2: f64,
}

/// `λ⁽²⁾ = ⟨A⁽²⁾_sub v⁽⁰⁾, v⁽⁰⁾⟩ - ⟨A⁽¹⁾ Q A⁽¹⁾ v⁽⁰⁾, v⁽⁰⁾⟩` on `basis`.
///
/// `A⁽¹⁾ v⁽⁰⁾` lives on the support of `ĥ` and `Q` is diagonal in modes, so
/// the value is exact as soon as the box contains that support.
pub fn lambda2_operator_route(h: &TensorFourierField, basis: TruncationBox) -> Result<Lambda2Terms> {
    check_reality(h)?;
    let needed = h.support_radius(0.0);
    if needed > basis.n() {
        return Err(Error::BoxTooSmall { n: basis.n(), needed });
    }
    if let (crate::fourier::BoxShape::Axis, Some(m)) = (basis.shape(), h.off_axis_mode(0.0)) {
        return Err(Error::NotAxisymmetric { mode: m.0 });
    }
    let a1 = operator_a1(h, basis)?;
    let v0 = SpinorVector::ground(basis);
    let a1v0 = a1.apply(&v0)?;
    let lambda1 = inner_product(&a1v0, &v0)?.re;
    let q = Pseudoinverse::flat(basis);
    let qa = q.apply(&a1v0)?;
    let resolvent = inner_product(&a1.apply(&qa)?, &v0)?.re;
    let subprincipal = a2_sub_mean(h);
    Ok(Lambda2Terms {
        lambda1,
        subprincipal,
        resolvent,
        lambda2: subprincipal - resolvent,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum QKind {
    /// Per-mode blocks `m·σ / ‖m‖²`, zero at `m = 0`.
    Flat,
    /// `Σ u_k u_k* / (λ_k - λ⁽⁰⁾)` over the complement of the protected pair.
    Spectral(DenseMatrix),
}

/// Inverse of `A⁽⁰⁾ - λ⁽⁰⁾` on the orthogonal complement of
/// `{v⁽⁰⁾, C(v⁽⁰⁾)}`, extended by zero on that pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudoinverse {
    basis: TruncationBox,
    lambda0: f64,
    kind: QKind,
}

impl Pseudoinverse {
    /// Closed form for the flat operator at `λ⁽⁰⁾ = 0`.
    pub fn flat(basis: TruncationBox) -> Self {
        Self {
            basis,
            lambda0: 0.0,
            kind: QKind::Flat,
        }
    }

    /// From an eigendecomposition of `a0`; the eigenspace of `lambda0`
    /// must be exactly two-dimensional.
    pub fn spectral(a0: &GalerkinOperator, lambda0: f64) -> Result<Self> {
        let dim = a0.dim();
        let eig = a0
            .matrix
            .to_faer()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigensolver {
                dim,
                reason: format!("{e:?}"),
            })?;
        let s = eig.S().column_vector();
        let u = eig.U();
        let vals: Vec<f64> = (0..dim).map(|i| s[i].re).collect();
        let near: Vec<usize> = (0..dim).filter(|&i| (vals[i] - lambda0).abs() < 1e-8).collect();
        if near.len() != 2 {
            return Err(Error::Multiplicity {
                lambda0,
                multiplicity: near.len(),
            });
        }
        let mut q = DenseMatrix::zeros(dim);
        for k in (0..dim).filter(|k| !near.contains(k)) {
            let w = 1.0 / (vals[k] - lambda0);
            for i in 0..dim {
                let ui = u[(i, k)] * w;
                for j in 0..dim {
                    q.add_at(i, j, ui * u[(j, k)].conj());
                }
            }
        }
        q.hermitize();
        Ok(Self {
            basis: a0.basis,
            lambda0,
            kind: QKind::Spectral(q),
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn apply(&self, f: &SpinorVector) -> Result<SpinorVector> {
        if f.basis() != self.basis {
            return Err(Error::BoxMismatch);
        }
        match &self.kind {
            QKind::Flat => {
                let mut out = Vec::with_capacity(f.as_slice().len());
                for (i, m) in self.basis.modes().into_iter().enumerate() {
                    let x = f.as_slice()[2 * i];
                    let y = f.as_slice()[2 * i + 1];
                    if m == LatticeVector::ZERO {
                        out.extend([ZERO, ZERO]);
                        continue;
                    }
                    let w = m.as_f64();
                    let c = |v: f64| Complex64::new(v, 0.0);
                    let b: Block = pauli_pattern(c(w[0]), c(w[1]), c(w[2])) / c(m.norm_sq() as f64);
                    out.push(b[(0, 0)] * x + b[(0, 1)] * y);
                    out.push(b[(1, 0)] * x + b[(1, 1)] * y);
                }
                Ok(f.map_data(out))
            }
            QKind::Spectral(q) => Ok(f.map_data(q.matvec(f.as_slice()))),
        }
    }
}

/// Taylor coefficients `A⁽⁰⁾ … A⁽ᴷ⁾` of `ε ↦ A(ε)` with per-order error
/// indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorMatrices {
    pub basis: TruncationBox,
    pub matrices: Vec<DenseMatrix>,
    pub error_indicators: Vec<f64>,
    pub radius: f64,
    pub nodes: usize,
}

/// Default half-width of the `ε` interval sampled for Taylor coefficients.
pub const TAYLOR_RADIUS: f64 = 0.5;
/// Default number of Chebyshev nodes.
pub const TAYLOR_NODES: usize = 24;

/// Monomial coefficients of the Chebyshev polynomials `T₀ … T_{p-1}`.
fn chebyshev_monomials(p: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; p]; p];
    t[0][0] = 1.0;
    if p > 1 {
        t[1][1] = 1.0;
    }
    for n in 2..p {
        for k in 0..p {
            let shifted = if k > 0 { 2.0 * t[n - 1][k - 1] } else { 0.0 };
            t[n][k] = shifted - t[n - 2][k];
        }
    }
    t
}

/// Taylor coefficients at `ε = 0` of an operator family, by Chebyshev
/// interpolation on `[-radius, radius]` with `nodes` points.
///
/// `A⁽⁰⁾` is the exact assembly at `ε = 0`. Each coefficient is a fixed
/// linear combination of the samples, so the samples are accumulated in
/// batches without being stored. The error indicator of order `k` is the
/// contribution of the two highest Chebyshev coefficients.
pub fn taylor_coefficients<F>(
    build: F,
    basis: TruncationBox,
    order: usize,
    radius: f64,
    nodes: usize,
) -> Result<TaylorMatrices>
where
    F: Fn(f64) -> Result<GalerkinOperator> + Sync,
{
    if order > 6 {
        return Err(Error::InvalidArgument(format!("Taylor order {order} exceeds 6")));
    }
    if nodes < order + 4 || !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need radius > 0 and at least {} nodes",
            order + 4
        )));
    }
    let p = nodes;
    let mono = chebyshev_monomials(p);
    let theta: Vec<f64> = (0..p)
        .map(|j| std::f64::consts::PI * (j as f64 + 0.5) / p as f64)
        .collect();
    // Chebyshev coefficient c_n = (2/p) Σ_j f_j cos(n θ_j), halved for n = 0.
    let cheb_weight = |n: usize, j: usize| {
        let w = 2.0 / p as f64 * (n as f64 * theta[j]).cos();
        if n == 0 {
            0.5 * w
        } else {
            w
        }
    };
    let weights: Vec<Vec<f64>> = (0..=order)
        .map(|k| {
            (0..p)
                .map(|j| (0..p).map(|n| cheb_weight(n, j) * mono[n][k]).sum::<f64>() / radius.powi(k as i32))
                .collect()
        })
        .collect();
    let dim = basis.dim();
    let mut acc = vec![DenseMatrix::zeros(dim); order + 1];
    let mut tail = [DenseMatrix::zeros(dim), DenseMatrix::zeros(dim)];
    let batch = rayon::current_num_threads().max(1);
    for start in (0..p).step_by(batch) {
        let idx: Vec<usize> = (start..(start + batch).min(p)).collect();
        let ops: Vec<GalerkinOperator> = idx
            .par_iter()
            .map(|&j| build(radius * theta[j].cos()))
            .collect::<Result<_>>()?;
        for (&j, op) in idx.iter().zip(&ops) {
            if op.basis != basis {
                return Err(Error::BoxMismatch);
            }
            for k in 1..=order {
                acc[k].axpy(weights[k][j], &op.matrix);
            }
            tail[0].axpy(cheb_weight(p - 1, j), &op.matrix);
            tail[1].axpy(cheb_weight(p - 2, j), &op.matrix);
        }
    }
    acc[0] = build(0.0)?.matrix;
    let tail_size = [tail[0].max_abs(), tail[1].max_abs()];
    let error_indicators = (0..=order)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            (tail_size[0] * mono[p - 1][k].abs() + tail_size[1] * mono[p - 2][k].abs()) / radius.powi(k as i32)
        })
        .collect();
    for m in acc.iter_mut() {
        m.hermitize();
    }
    Ok(TaylorMatrices {
        basis,
        matrices: acc,
        error_indicators,
        radius,
        nodes,
    })
}

/// Taylor coefficients of the 3D or axisymmetric assembly of a family.
pub fn taylor_matrices(
    fam: &MetricFamily,
    n: usize,
    g: usize,
    assembly: Assembly,
    order: usize,
    radius: f64,
) -> Result<TaylorMatrices> {
    let basis = match assembly {
        Assembly::Full => TruncationBox::cube(n),
        Assembly::Axisymmetric => TruncationBox::axis(n),
    };
    let build = |eps: f64| match assembly {
        Assembly::Full => assemble_3d(fam, eps, n, g),
        Assembly::Axisymmetric => assemble_axisymmetric(fam, eps, n, g),
    };
    taylor_coefficients(build, basis, order, radius, TAYLOR_NODES)
}

/// Coefficients `λ⁽⁰⁾ … λ⁽ᴷ⁾` and corrections `v⁽⁰⁾ … v⁽ᴷ⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSeries {
    pub order: usize,
    pub lambdas: Vec<f64>,
    pub corrections: Vec<SpinorVector>,
    /// `|⟨f⁽ᵏ⁾, C(v⁽⁰⁾)⟩|` for `k = 1 … K` (index 0 holds 0).
    pub orthogonality_residuals: Vec<f64>,
}

/// Rellich recurrence for the eigenvalue branch through `(λ⁽⁰⁾, v⁽⁰⁾)`.
///
/// At order `k`, with `g⁽ᵏ⁾ = Σ_{j=1..k} A⁽ʲ⁾ v⁽ᵏ⁻ʲ⁾ - Σ_{j=1..k-1} λ⁽ʲ⁾ v⁽ᵏ⁻ʲ⁾`:
/// `λ⁽ᵏ⁾ = ⟨g⁽ᵏ⁾, v⁽⁰⁾⟩`, `f⁽ᵏ⁾ = -g⁽ᵏ⁾ + λ⁽ᵏ⁾ v⁽⁰⁾`, `v⁽ᵏ⁾ = Q f⁽ᵏ⁾`.
/// The solvability condition against `C(v⁽⁰⁾)` is not imposed but checked.
pub fn rellich_series(
    a: &[DenseMatrix],
    lambda0: f64,
    v0: &SpinorVector,
    q: &Pseudoinverse,
    order: usize,
) -> Result<PerturbationSeries> {
    if a.len() < order + 1 {
        return Err(Error::InvalidArgument(format!(
            "need {} Taylor matrices for order {order}, got {}",
            order + 1,
            a.len()
        )));
    }
    let basis = v0.basis();
    if a.iter().any(|m| m.dim() != basis.dim()) {
        return Err(Error::BoxMismatch);
    }
    let a0v = a[0].matvec(v0.as_slice());
    let residual = a0v
        .iter()
        .zip(v0.as_slice())
        .map(|(x, y)| (x - y * lambda0).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if residual > 1e-10 {
        return Err(Error::NotAnEigenvector { residual });
    }
    let cv0 = charge_conjugate(v0);
    let mut lambdas = vec![lambda0];
    let mut corrections = vec![v0.clone()];
    let mut orthogonality_residuals = vec![0.0];
    for k in 1..=order {
        let mut g = vec![ZERO; basis.dim()];
        for j in 1..=k {
            let prev = corrections[k - j].as_slice();
            let av = a[j].matvec(prev);
            for (gi, x) in g.iter_mut().zip(&av) {
                *gi += x;
            }
            if j < k {
                for (gi, x) in g.iter_mut().zip(prev) {
                    *gi -= x * lambdas[j];
                }
            }
        }
        let lambda_k = dot(&g, v0.as_slice());
        let orth = dot(&g, cv0.as_slice()).norm();
        if orth > ORTHOGONALITY_TOL {
            return Err(Error::SymmetryBreaking {
                order: k,
                residual: orth,
            });
        }
        let f: Vec<Complex64> = g.iter().zip(v0.as_slice()).map(|(gi, v)| -gi + v * lambda_k).collect();
        let vk = q.apply(&v0.map_data(f))?;
        lambdas.push(lambda_k.re);
        corrections.push(vk);
        orthogonality_residuals.push(orth);
    }
    Ok(PerturbationSeries {
        order,
        lambdas,
        corrections,
        orthogonality_residuals,
    })
}

/// Rellich series of a family about the flat double zero.
pub fn family_series(
    fam: &MetricFamily,
    n: usize,
    g: usize,
    assembly: Assembly,
    order: usize,
) -> Result<(PerturbationSeries, TaylorMatrices)> {
    let taylor = taylor_matrices(fam, n, g, assembly, order, TAYLOR_RADIUS)?;
    let v0 = SpinorVector::ground(taylor.basis);
    let q = Pseudoinverse::flat(taylor.basis);
    let series = rellich_series(&taylor.matrices, 0.0, &v0, &q, order)?;
    Ok((series, taylor))
}

/// `c` by every applicable route on one family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CRoutes {
    /// Direct summation over the Fourier support of `h`.
    pub direct: f64,
    /// One-dimensional summation; absent for families depending on `x²`, `x³`.
    pub axisymmetric: Option<f64>,
    /// `⟨A⁽²⁾_sub v⁽⁰⁾, v⁽⁰⁾⟩ - ⟨A⁽¹⁾ Q A⁽¹⁾ v⁽⁰⁾, v⁽⁰⁾⟩` on the cube.
    pub operator: Lambda2Terms,
    /// `λ⁽²⁾` of the Rellich series of the 3D assembly.
    pub rellich: f64,
    pub rellich_error_indicator: f64,
    pub rellich_orthogonality_residual: f64,
    /// Largest pairwise difference between the routes.
    pub max_delta: f64,
}

/// Evaluates `c` by direct summation, the axisymmetric formula when it
/// applies, the operator route and the second Rellich coefficient of the 3D
/// assembly with truncation `n` and grid `g`.
pub fn c_routes(fam: &MetricFamily, n: usize, g: usize) -> Result<CRoutes> {
    let h = fam.h();
    let direct = coefficient_c(&h)?;
    let axisymmetric = if fam.is_axisymmetric() {
        Some(coefficient_c_axisymmetric(&h)?)
    } else {
        None
    };
    let operator = lambda2_operator_route(&h, TruncationBox::cube(n))?;
    let (series, taylor) = family_series(fam, n, g, Assembly::Full, 2)?;
    let rellich = series.lambdas[2];
    let values: Vec<f64> = [Some(direct), axisymmetric, Some(operator.lambda2), Some(rellich)]
        .into_iter()
        .flatten()
        .collect();
    let max_delta = values
        .iter()
        .flat_map(|a| values.iter().map(move |b| (a - b).abs()))
        .fold(0.0, f64::max);
    Ok(CRoutes {
        direct,
        axisymmetric,
        operator,
        rellich,
        rellich_error_indicator: taylor.error_indicators[2],
        rellich_orthogonality_residual: series.orthogonality_residuals.iter().copied().fold(0.0, f64::max),
        max_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::unperturbed_operator;
    use nalgebra::Matrix3;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn chebyshev_monomials_low_order() {
        let t = chebyshev_monomials(5);
        assert_eq!(t[2], vec![-1.0, 0.0, 2.0, 0.0, 0.0]);
        assert_eq!(t[3], vec![0.0, -3.0, 0.0, 4.0, 0.0]);
        assert_eq!(t[4], vec![1.0, 0.0, -8.0, 0.0, 8.0]);
    }

    #[test]
    fn taylor_of_scalar_polynomial() {
        // A(ε) = (1 + 2ε - 3ε³ + ε⁴) I on a one-mode box
        let basis = TruncationBox::axis(0);
        let build = |e: f64| {
            let v = 1.0 + 2.0 * e - 3.0 * e.powi(3) + e.powi(4);
            Ok(GalerkinOperator::new(basis, DenseMatrix::identity(2).scaled(v)))
        };
        let t = taylor_coefficients(build, basis, 5, 0.5, 16).unwrap();
        let expect = [1.0, 2.0, 0.0, -3.0, 1.0, 0.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((t.matrices[k].get(0, 0).re - e).abs() < 1e-9, "order {k}");
            assert!(t.error_indicators[k] < 1e-9);
        }
    }

    #[test]
    fn flat_pseudoinverse_single_mode() {
        let basis = TruncationBox::cube(1);
        let q = Pseudoinverse::flat(basis);
        let f = SpinorVector::unit(basis, LatticeVector::new(1, 0, 0), 0);
        let v = q.apply(&f).unwrap();
        assert!((v.entry(LatticeVector::new(1, 0, 0), 1) - c(1.0)).norm() < 1e-15);
        assert!(v.entry(LatticeVector::new(1, 0, 0), 0).norm() < 1e-15);
        assert!(q.apply(&SpinorVector::ground(basis)).unwrap().norm() == 0.0);
    }

    #[test]
    fn flat_and_spectral_pseudoinverse_agree() {
        use rand::SeedableRng;
        let basis = TruncationBox::cube(1);
        let flat = Pseudoinverse::flat(basis);
        let spec = Pseudoinverse::spectral(&unperturbed_operator(basis), 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let f = SpinorVector::random(basis, &mut rng);
            let d = flat.apply(&f).unwrap().sub(&spec.apply(&f).unwrap()).norm();
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn c_axisymmetric_real_diagonal_block_is_zero() {
        let mut hat = Matrix3::zeros();
        hat[(1, 1)] = c(1.0);
        let h = TensorFourierField::from_modes(&[(LatticeVector::new(1, 0, 0), hat)]).with_reality_partners();
        assert_eq!(coefficient_c_axisymmetric(&h).unwrap(), 0.0);
    }

    #[test]
    fn c_rejects_non_real_field() {
        let mut hat = Matrix3::zeros();
        hat[(1, 2)] = c(1.0);
        hat[(2, 1)] = c(1.0);
        let h = TensorFourierField::from_modes(&[(LatticeVector::new(1, 0, 0), hat)]);
        assert!(matches!(coefficient_c(&h), Err(Error::RealityViolation { .. })));
    }

    #[test]
    fn operator_route_rejects_small_box() {
        let h = TensorFourierField::from_modes(&[(LatticeVector::new(2, 0, 0), Matrix3::identity() * c(0.1))])
            .with_reality_partners();
        assert!(matches!(
            lambda2_operator_route(&h, TruncationBox::cube(1)),
            Err(Error::BoxTooSmall { n: 1, needed: 2 })
        ));
    }

    #[test]
    fn rellich_rejects_wrong_ground_state() {
        let basis = TruncationBox::axis(1);
        let a0 = unperturbed_operator(basis).matrix;
        let v = SpinorVector::unit(basis, LatticeVector::new(1, 0, 0), 0);
        let q = Pseudoinverse::flat(basis);
        assert!(matches!(
            rellich_series(&[a0], 0.0, &v, &q, 0),
            Err(Error::NotAnEigenvector { .. })
        ));
    }
}
