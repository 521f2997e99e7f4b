//! Galerkin matrices of the massless Dirac operator on half-densities.
//!
//! The operator `L = -(i/2)(M^α ∂_α + ∂_α M^α) + s I` acts on the
//! orthonormal plane waves `φ_m = (2π)^{-3/2} e^{i m·x}`. Since
//! `∂_α φ_m = i m_α φ_m` and multiplication by `M^α` shifts modes by the
//! Fourier index of `M^α`, the block in row `m'`, column `m` is
//!
//! ```text
//! ½ (m + m')_α M̂^α(m' - m) + ŝ(m' - m) I₂.
//! ```
//!
//! The principal fields are `M^α = [[e₃^α, e₁^α - i e₂^α], [e₁^α + i e₂^α, -e₃^α]]`
//! built from the symmetric-gauge frame, and `s = (3/4) *T^ax`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{
    charge_conjugate, fft_analyze, inner_product, BoxShape, LatticeVector, ScalarFourierField, SpinorVector,
    TruncationBox,
};
use crate::geometry::{frame_grid, FrameJet, FrameSample, MetricFamily};
use crate::linalg::{dot, pauli_pattern, Block, DenseMatrix, I, ONE, ZERO};

/// Coefficient shells above this magnitude trigger an aliasing warning.
pub const ALIASING_WARN: f64 = 1e-8;

/// `(σ-pattern of e^{(α)})` for a frame sample, `α = 1, 2, 3`.
pub fn principal_matrices(frame: &FrameSample) -> [Block; 3] {
    let f = &frame.frame;
    [0, 1, 2].map(|a| {
        pauli_pattern(
            Complex64::new(f[(0, a)], 0.0),
            Complex64::new(f[(1, a)], 0.0),
            Complex64::new(f[(2, a)], 0.0),
        )
    })
}

/// Fourier coefficients of the principal fields `M^α` and the scalar
/// subprincipal part.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSymbol {
    support: TruncationBox,
    principal: [Vec<Block>; 3],
    sub: ScalarFourierField,
}

impl OperatorSymbol {
    /// Builds a symbol from the nine frame coefficient fields `e_j^α` and `s`.
    pub fn from_frame_fields(frame: &[[ScalarFourierField; 3]; 3], sub: ScalarFourierField) -> Self {
        let support = sub.support();
        let principal = [0, 1, 2].map(|a| {
            support
                .modes()
                .into_iter()
                .map(|k| pauli_pattern(frame[0][a].get(k), frame[1][a].get(k), frame[2][a].get(k)))
                .collect()
        });
        Self {
            support,
            principal,
            sub,
        }
    }

    /// Builds a symbol from explicit coefficient functions.
    pub fn from_fn(
        support: TruncationBox,
        principal: impl Fn(usize, LatticeVector) -> Block,
        sub: impl Fn(LatticeVector) -> Complex64,
    ) -> Self {
        let modes = support.modes();
        let principal = [0, 1, 2].map(|a| modes.iter().map(|&k| principal(a, k)).collect());
        let mut s = ScalarFourierField::zeros(support);
        for &k in &modes {
            s.set(k, sub(k));
        }
        Self {
            support,
            principal,
            sub: s,
        }
    }

    pub fn support(&self) -> TruncationBox {
        self.support
    }

    /// `M̂^α(k)`, zero outside the stored support.
    pub fn principal(&self, alpha: usize, k: LatticeVector) -> Block {
        match self.support.index_of(k) {
            Some(i) => self.principal[alpha][i],
            None => Block::zeros(),
        }
    }

    pub fn sub(&self) -> &ScalarFourierField {
        &self.sub
    }

    /// Galerkin matrix on `basis`, block formula from the module docs.
    pub fn galerkin(&self, basis: TruncationBox) -> DenseMatrix {
        let modes = basis.modes();
        let dim = basis.dim();
        let rows: Vec<Vec<Complex64>> = modes
            .par_iter()
            .map(|&mp| {
                let mut row = vec![ZERO; 2 * dim];
                for (j, &m) in modes.iter().enumerate() {
                    let k = mp.sub(m);
                    let Some(ki) = self.support.index_of(k) else {
                        continue;
                    };
                    let w = mp.add(m).as_f64();
                    let mut b = Block::identity() * self.sub.get(k);
                    for (a, wa) in w.iter().enumerate() {
                        if *wa != 0.0 {
                            b += self.principal[a][ki] * Complex64::new(0.5 * wa, 0.0);
                        }
                    }
                    for r in 0..2 {
                        for c in 0..2 {
                            row[r * dim + 2 * j + c] = b[(r, c)];
                        }
                    }
                }
                row
            })
            .collect();
        let mut out = DenseMatrix::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            for r in 0..2 {
                for c in 0..dim {
                    out.set(2 * i + r, c, row[r * dim + c]);
                }
            }
        }
        out
    }
}

/// Finite Hermitian matrix of the Dirac operator in the plane-wave basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinOperator {
    pub basis: TruncationBox,
    pub matrix: DenseMatrix,
    /// Largest coefficient magnitude on the first discarded shell.
    pub aliasing_residual: f64,
    pub warnings: Vec<String>,
}

impl GalerkinOperator {
    pub fn new(basis: TruncationBox, matrix: DenseMatrix) -> Self {
        assert_eq!(basis.dim(), matrix.dim());
        Self {
            basis,
            matrix,
            aliasing_residual: 0.0,
            warnings: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, v: &SpinorVector) -> Result<SpinorVector> {
        if v.basis() != self.basis {
            return Err(Error::BoxMismatch);
        }
        Ok(v.map_data(self.matrix.matvec(v.as_slice())))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.hermiticity_defect()
    }

    /// `‖A C(v) - C(A v)‖ / ‖v‖`.
    pub fn conjugation_residual(&self, v: &SpinorVector) -> Result<f64> {
        let lhs = self.apply(&charge_conjugate(v))?;
        let rhs = charge_conjugate(&self.apply(v)?);
        Ok(lhs.sub(&rhs).norm() / v.norm())
    }

    /// `|⟨A v, C(v)⟩| / ‖v‖²`.
    pub fn special_property_residual(&self, v: &SpinorVector) -> Result<f64> {
        let av = self.apply(v)?;
        Ok(inner_product(&av, &charge_conjugate(v))?.norm() / v.norm().powi(2))
    }

    /// Rows belonging to modes with `m₂ = m₃ = 0`, in ascending `m₁`.
    pub fn axial_rows(&self) -> Vec<usize> {
        self.basis
            .modes()
            .into_iter()
            .enumerate()
            .filter(|(_, m)| m.is_axial())
            .flat_map(|(i, _)| [2 * i, 2 * i + 1])
            .collect()
    }
}

fn record_aliasing(op: &mut GalerkinOperator, residual: f64, shell: usize) {
    op.aliasing_residual = residual;
    if residual > ALIASING_WARN {
        op.warnings.push(format!(
            "aliasing residual {residual:.3e} on coefficient shell {shell} exceeds {ALIASING_WARN:.0e}"
        ));
    }
}

fn analyze_real(samples: Vec<f64>, g: usize, target: TruncationBox) -> Result<ScalarFourierField> {
    let c: Vec<Complex64> = samples.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    let mut f = fft_analyze(&c, g, target)?;
    f.enforce_reality();
    Ok(f)
}

fn check_grid(g: usize, n: usize) -> Result<()> {
    let floor = 4 * n + 4;
    if g < floor {
        return Err(Error::GridTooSmall { grid: g, floor, n });
    }
    Ok(())
}

fn frame_fields(frames: &[FrameJet], g: usize, target: TruncationBox) -> Result<[[ScalarFourierField; 3]; 3]> {
    let mut out: Vec<Vec<ScalarFourierField>> = Vec::with_capacity(3);
    for j in 0..3 {
        let mut row = Vec::with_capacity(3);
        for a in 0..3 {
            let s: Vec<f64> = frames.iter().map(|f| f.sample.frame[(j, a)]).collect();
            row.push(analyze_real(s, g, target)?);
        }
        out.push(row);
    }
    Ok(out
        .into_iter()
        .map(|r| <[ScalarFourierField; 3]>::try_from(r).expect("three columns"))
        .collect::<Vec<_>>()
        .try_into()
        .expect("three rows"))
}

/// Symbol of the operator for `fam` at `ε`, sampled on a `g³` grid and kept
/// to coefficient radius `radius`; also returns the largest coefficient on
/// shell `radius + 1` (requires `g ≥ 2 radius + 4`).
pub fn symbol_3d(fam: &MetricFamily, eps: f64, g: usize, radius: usize) -> Result<(OperatorSymbol, f64)> {
    let frames = frame_grid(fam, eps, g, BoxShape::Cube)?;
    let target = TruncationBox::cube(radius + 1);
    let frame = frame_fields(&frames, g, target)?;
    let torsion: Vec<f64> = frames.iter().map(|f| 0.75 * f.axial_torsion()).collect();
    let sub = analyze_real(torsion, g, target)?;
    let mut fields: Vec<&ScalarFourierField> = frame.iter().flatten().collect();
    fields.push(&sub);
    let residual = fields.iter().map(|f| f.max_on_shell(radius + 1)).fold(0.0, f64::max);
    Ok((OperatorSymbol::from_frame_fields(&frame, sub), residual))
}

/// Full 3D Galerkin matrix on the cube `max|m_α| ≤ n`, sampled on a `g³` grid.
pub fn assemble_3d(fam: &MetricFamily, eps: f64, n: usize, g: usize) -> Result<GalerkinOperator> {
    check_grid(g, n)?;
    let (symbol, residual) = symbol_3d(fam, eps, g, 2 * n)?;
    let basis = TruncationBox::cube(n);
    let mut op = GalerkinOperator::new(basis, symbol.galerkin(basis));
    record_aliasing(&mut op, residual, 2 * n + 1);
    Ok(op)
}

/// Symbol of the axisymmetric operator: only `M^{(1)}` enters, and the
/// zero-order term is `(1/(4 vol)) Σ_j (e^j₃ ∂₁e^j₂ - e^j₂ ∂₁e^j₃)`.
pub fn symbol_axisymmetric(fam: &MetricFamily, eps: f64, g: usize, radius: usize) -> Result<(OperatorSymbol, f64)> {
    if let Some(m) = fam_off_axis(fam) {
        return Err(Error::NotAxisymmetric { mode: m.0 });
    }
    let frames = frame_grid(fam, eps, g, BoxShape::Axis)?;
    let target = TruncationBox::axis(radius + 1);
    let col: Vec<ScalarFourierField> = (0..3)
        .map(|j| analyze_real(frames.iter().map(|f| f.sample.frame[(j, 0)]).collect(), g, target))
        .collect::<Result<_>>()?;
    let z: Vec<f64> = frames
        .iter()
        .map(|f| {
            let e = &f.sample.coframe;
            let de = &f.dcoframe[0];
            let s: f64 = (0..3).map(|j| e[(j, 2)] * de[(j, 1)] - e[(j, 1)] * de[(j, 2)]).sum();
            s / (4.0 * f.sample.vol)
        })
        .collect();
    let sub = analyze_real(z, g, target)?;
    let residual = col
        .iter()
        .chain(std::iter::once(&sub))
        .map(|f| f.max_on_shell(radius + 1))
        .fold(0.0, f64::max);
    let symbol = OperatorSymbol::from_fn(
        target,
        |a, k| {
            if a == 0 {
                pauli_pattern(col[0].get(k), col[1].get(k), col[2].get(k))
            } else {
                Block::zeros()
            }
        },
        |k| sub.get(k),
    );
    Ok((symbol, residual))
}

fn fam_off_axis(fam: &MetricFamily) -> Option<LatticeVector> {
    if fam.is_axisymmetric() {
        None
    } else {
        // report the first offending mode of h
        fam.h()
            .iter()
            .find(|(m, c)| !m.is_axial() && c.norm() > 0.0)
            .map(|(m, _)| m)
            .or(Some(LatticeVector::new(0, 1, 0)))
    }
}

/// 1D Galerkin matrix on modes `(m₁, 0, 0)`, `|m₁| ≤ n1`, sampled on `g`
/// points along `x¹`.
pub fn assemble_axisymmetric(fam: &MetricFamily, eps: f64, n1: usize, g: usize) -> Result<GalerkinOperator> {
    check_grid(g, n1)?;
    let (symbol, residual) = symbol_axisymmetric(fam, eps, g, 2 * n1)?;
    let basis = TruncationBox::axis(n1);
    let mut op = GalerkinOperator::new(basis, symbol.galerkin(basis));
    record_aliasing(&mut op, residual, 2 * n1 + 1);
    Ok(op)
}

/// Flat operator: blocks `[[m₃, m₁ - i m₂], [m₁ + i m₂, -m₃]]` on the diagonal.
pub fn unperturbed_operator(basis: TruncationBox) -> GalerkinOperator {
    let symbol = OperatorSymbol::from_fn(
        TruncationBox::cube(0),
        |a, _| {
            let mut w = [ZERO; 3];
            w[a] = ONE;
            pauli_pattern(w[0], w[1], w[2])
        },
        |_| ZERO,
    );
    GalerkinOperator::new(basis, symbol.galerkin(basis))
}

/// The axisymmetric quartic-example operator written with its original
/// non-symmetric coframe: `M¹ = σ₁ - ε S(x¹)`, `S = [[sin, -i cos], [i cos, -sin]]`,
/// zero-order term `-ε²/4`.
pub fn quartic_reference_operator(eps: f64, n1: usize) -> GalerkinOperator {
    let e1 = LatticeVector::new(1, 0, 0);
    let half = Complex64::new(0.5, 0.0);
    // sin x = (e^{ix} - e^{-ix})/(2i), cos x = (e^{ix} + e^{-ix})/2
    let sin_hat = |k: LatticeVector| {
        if k == e1 {
            -I * half
        } else if k == e1.neg() {
            I * half
        } else {
            ZERO
        }
    };
    let cos_hat = |k: LatticeVector| if k == e1 || k == e1.neg() { half } else { ZERO };
    let symbol = OperatorSymbol::from_fn(
        TruncationBox::axis(1),
        |a, k| {
            if a != 0 {
                return Block::zeros();
            }
            let s = Block::new(sin_hat(k), -I * cos_hat(k), I * cos_hat(k), -sin_hat(k));
            let base = if k == LatticeVector::ZERO {
                pauli_pattern(ONE, ZERO, ZERO)
            } else {
                Block::zeros()
            };
            base - s * Complex64::new(eps, 0.0)
        },
        |k| {
            if k == LatticeVector::ZERO {
                Complex64::new(-eps * eps / 4.0, 0.0)
            } else {
                ZERO
            }
        },
    );
    let basis = TruncationBox::axis(n1);
    GalerkinOperator::new(basis, symbol.galerkin(basis))
}

/// The rotated quartic operator: `M¹ = σ₃ - ε T(x¹)`,
/// `T = [[0, -i e^{-ix¹}], [i e^{ix¹}, 0]]`, zero-order term `-ε²/4`.
pub fn quartic_tilde_operator(eps: f64, n1: usize) -> GalerkinOperator {
    let e1 = LatticeVector::new(1, 0, 0);
    let symbol = OperatorSymbol::from_fn(
        TruncationBox::axis(1),
        |a, k| {
            if a != 0 {
                return Block::zeros();
            }
            let mut b = Block::zeros();
            if k == LatticeVector::ZERO {
                b = pauli_pattern(ZERO, ZERO, ONE);
            }
            if k == e1.neg() {
                b[(0, 1)] = I * eps;
            }
            if k == e1 {
                b[(1, 0)] = -I * eps;
            }
            b
        },
        |k| {
            if k == LatticeVector::ZERO {
                Complex64::new(-eps * eps / 4.0, 0.0)
            } else {
                ZERO
            }
        },
    );
    let basis = TruncationBox::axis(n1);
    GalerkinOperator::new(basis, symbol.galerkin(basis))
}

/// The constant special unitary matrix `(1/√2) [[1, 1], [-1, 1]]`.
pub fn quartic_rotation() -> Block {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Block::new(s, s, -s, s)
}

/// Blockwise conjugation `A ↦ R A R*` by a constant SU(2) matrix.
pub fn gauge_conjugate(op: &GalerkinOperator, r: &Block) -> Result<GalerkinOperator> {
    let unitarity = (r * r.adjoint() - Block::identity()).norm();
    let det = (r.determinant() - ONE).norm();
    if unitarity > 1e-12 || det > 1e-12 {
        return Err(Error::NotSpecialUnitary { unitarity, det });
    }
    let modes = op.basis.mode_count();
    let mut out = op.matrix.clone();
    let ra = r.adjoint();
    for i in 0..modes {
        for j in 0..modes {
            let b = Block::from_fn(|p, q| op.matrix.get(2 * i + p, 2 * j + q));
            let c = r * b * ra;
            for p in 0..2 {
                for q in 0..2 {
                    out.set(2 * i + p, 2 * j + q, c[(p, q)]);
                }
            }
        }
    }
    Ok(GalerkinOperator {
        basis: op.basis,
        matrix: out,
        aliasing_residual: op.aliasing_residual,
        warnings: op.warnings.clone(),
    })
}

/// `⟨A v, w⟩` for operator-level checks.
pub fn matrix_element(op: &GalerkinOperator, v: &SpinorVector, w: &SpinorVector) -> Result<Complex64> {
    if w.basis() != op.basis {
        return Err(Error::BoxMismatch);
    }
    Ok(dot(op.apply(v)?.as_slice(), w.as_slice()))
}
