//! Metric families on the torus, the symmetric-gauge coframe, and the
//! axial-torsion scalar.
//!
//! Matrices follow the row/column convention "first index is the row":
//! the coframe `e^j_α` has row `j`, column `α`, so `g = eᵀ e`; the frame
//! `e_j^α` is the inverse transpose of the coframe. In the symmetric gauge
//! the coframe is the positive square root of `g` and the frame is simply
//! its inverse.

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{
    fft_analyze, grid_len, grid_point, synthesize, synthesize_grid, BoxShape, LatticeVector, ScalarFourierField,
    TensorFourierField, TruncationBox,
};

/// Smallest admissible metric eigenvalue on a sample grid.
pub const MIN_METRIC_EIGENVALUE: f64 = 1e-6;

/// `ε_{abc}` with `ε_{123} = +1` (zero-based indices).
pub fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// A one-parameter family of metrics `g(x; ε)` with `g(x; 0) = δ`.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricFamily {
    /// `g = δ + ε h`.
    Linear { h: TensorFourierField },
    /// `g = e^{2εφ} δ`.
    Conformal { phi: ScalarFourierField },
    /// Coframe `δ + ε [[0,0,0],[0,cos x¹,sin x¹],[0,sin x¹,-cos x¹]]`.
    QuadraticExample,
    /// Coframe `δ + ε [[0,cos x¹,sin x¹],[0,0,0],[0,0,0]]`.
    QuarticExample,
    /// The pull-back `g(-x; ε)` of another family.
    Reflected(Box<MetricFamily>),
}

/// Metric and its first coordinate derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet {
    pub g: Matrix3<f64>,
    /// `dg[δ] = ∂g/∂x^δ`.
    pub dg: [Matrix3<f64>; 3],
}

/// Coframe, frame and Riemannian density at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSample {
    pub coframe: Matrix3<f64>,
    pub frame: Matrix3<f64>,
    /// `√det g = det coframe`.
    pub vol: f64,
}

/// Symmetric-gauge frame data together with coframe derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameJet {
    pub sample: FrameSample,
    /// `dcoframe[δ] = ∂e/∂x^δ`.
    pub dcoframe: [Matrix3<f64>; 3],
}

impl FrameJet {
    /// `*T^ax = (1/(3 vol)) ε_{αδβ} e^k_α ∂_δ e^k_β`.
    pub fn axial_torsion(&self) -> f64 {
        let e = &self.sample.coframe;
        let mut acc = 0.0;
        for a in 0..3 {
            for d in 0..3 {
                for b in 0..3 {
                    let s = levi_civita(a, d, b);
                    if s == 0.0 {
                        continue;
                    }
                    let de = &self.dcoframe[d];
                    acc += s * (0..3).map(|k| e[(k, a)] * de[(k, b)]).sum::<f64>();
                }
            }
        }
        acc / (3.0 * self.sample.vol)
    }
}

/// Coframe of the quadratic example and its `x¹`-derivative.
pub fn quadratic_example_coframe(x1: f64, eps: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let (s, c) = x1.sin_cos();
    let e = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0 + eps * c, eps * s, 0.0, eps * s, 1.0 - eps * c);
    let de = Matrix3::new(0.0, 0.0, 0.0, 0.0, -eps * s, eps * c, 0.0, eps * c, eps * s);
    (e, de)
}

/// Non-symmetric coframe of the quartic example and its `x¹`-derivative.
pub fn quartic_example_coframe(x1: f64, eps: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let (s, c) = x1.sin_cos();
    let e = Matrix3::new(1.0, eps * c, eps * s, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
    let de = Matrix3::new(0.0, -eps * s, eps * c, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    (e, de)
}

fn jet_from_coframe(e: Matrix3<f64>, de1: Matrix3<f64>) -> MetricJet {
    let g = e.transpose() * e;
    let dg1 = de1.transpose() * e + e.transpose() * de1;
    MetricJet {
        g,
        dg: [dg1, Matrix3::zeros(), Matrix3::zeros()],
    }
}

fn real_part(m: &Matrix3<Complex64>) -> Matrix3<f64> {
    m.map(|c| c.re)
}

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl MetricFamily {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Linear { .. } => "linear",
            Self::Conformal { .. } => "conformal",
            Self::QuadraticExample => "quadratic-example",
            Self::QuarticExample => "quartic-example",
            Self::Reflected(_) => "reflected",
        }
    }

    pub fn reflected(self) -> Self {
        Self::Reflected(Box::new(self))
    }

    /// True when the metric depends on `x¹` only.
    pub fn is_axisymmetric(&self) -> bool {
        self.off_axis_mode().is_none()
    }

    fn off_axis_mode(&self) -> Option<LatticeVector> {
        match self {
            Self::Linear { h } => h.off_axis_mode(0.0),
            Self::Conformal { phi } => phi
                .iter()
                .find(|(m, c)| !m.is_axial() && c.norm() > 0.0)
                .map(|(m, _)| m),
            Self::QuadraticExample | Self::QuarticExample => None,
            Self::Reflected(inner) => inner.off_axis_mode().map(|m| m.neg()),
        }
    }

    /// Metric and derivatives at a single point.
    pub fn jet_at(&self, x: [f64; 3], eps: f64) -> MetricJet {
        match self {
            Self::Linear { h } => {
                let mut g = Matrix3::identity();
                let mut dg = [Matrix3::zeros(); 3];
                for a in 0..3 {
                    for b in 0..3 {
                        let comp = h.component(a, b);
                        g[(a, b)] += eps * synthesize(&comp, x).re;
                        for (d, dgd) in dg.iter_mut().enumerate() {
                            dgd[(a, b)] = eps * synthesize(&comp.derivative(d), x).re;
                        }
                    }
                }
                MetricJet { g, dg }
            }
            Self::Conformal { phi } => {
                let p = synthesize(phi, x).re;
                let w = (2.0 * eps * p).exp();
                let mut dg = [Matrix3::zeros(); 3];
                for (d, dgd) in dg.iter_mut().enumerate() {
                    let dp = synthesize(&phi.derivative(d), x).re;
                    *dgd = Matrix3::identity() * (2.0 * eps * dp * w);
                }
                MetricJet {
                    g: Matrix3::identity() * w,
                    dg,
                }
            }
            Self::QuadraticExample => {
                let (e, de) = quadratic_example_coframe(x[0], eps);
                jet_from_coframe(e, de)
            }
            Self::QuarticExample => {
                let (e, de) = quartic_example_coframe(x[0], eps);
                jet_from_coframe(e, de)
            }
            Self::Reflected(inner) => {
                let j = inner.jet_at([-x[0], -x[1], -x[2]], eps);
                MetricJet {
                    g: j.g,
                    dg: j.dg.map(|d| -d),
                }
            }
        }
    }

    /// Metric jets on the uniform sample grid of the given shape.
    pub fn jet_grid(&self, eps: f64, g: usize, shape: BoxShape) -> Result<Vec<MetricJet>> {
        let len = grid_len(g, shape);
        match self {
            Self::Linear { h } => {
                let mut vals = vec![[[0.0f64; 4]; 6]; len];
                let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    let comp = h.component(a, b);
                    let mut fields = vec![synthesize_grid(&comp, g, shape)?];
                    for d in 0..3 {
                        fields.push(synthesize_grid(&comp.derivative(d), g, shape)?);
                    }
                    for (i, v) in vals.iter_mut().enumerate() {
                        for (k, f) in fields.iter().enumerate() {
                            v[p][k] = f[i].re;
                        }
                    }
                }
                Ok(vals
                    .into_iter()
                    .map(|v| {
                        let mut g = Matrix3::identity();
                        let mut dg = [Matrix3::zeros(); 3];
                        for (p, &(a, b)) in pairs.iter().enumerate() {
                            g[(a, b)] += eps * v[p][0];
                            g[(b, a)] = g[(a, b)];
                            for d in 0..3 {
                                dg[d][(a, b)] = eps * v[p][d + 1];
                                dg[d][(b, a)] = dg[d][(a, b)];
                            }
                        }
                        MetricJet { g, dg }
                    })
                    .collect())
            }
            Self::Conformal { phi } => {
                let p = synthesize_grid(phi, g, shape)?;
                let dp: Vec<_> = (0..3)
                    .map(|d| synthesize_grid(&phi.derivative(d), g, shape))
                    .collect::<Result<_>>()?;
                Ok((0..len)
                    .map(|i| {
                        let w = (2.0 * eps * p[i].re).exp();
                        MetricJet {
                            g: Matrix3::identity() * w,
                            dg: [0, 1, 2].map(|d| Matrix3::identity() * (2.0 * eps * dp[d][i].re * w)),
                        }
                    })
                    .collect())
            }
            Self::QuadraticExample | Self::QuarticExample => {
                Ok((0..len).map(|i| self.jet_at(grid_point(i, g, shape), eps)).collect())
            }
            Self::Reflected(inner) => {
                let base = inner.jet_grid(eps, g, shape)?;
                Ok((0..len)
                    .map(|i| {
                        let j = base[reflect_index(i, g, shape)];
                        MetricJet {
                            g: j.g,
                            dg: j.dg.map(|d| -d),
                        }
                    })
                    .collect())
            }
        }
    }

    /// `∂g/∂ε` at `ε = 0` as Fourier coefficients.
    pub fn h(&self) -> TensorFourierField {
        let e1 = LatticeVector::new(1, 0, 0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Self::Linear { h } => h.clone(),
            Self::Conformal { phi } => {
                let mut out = TensorFourierField::zeros(phi.support());
                for (m, c) in phi.iter() {
                    out.set(m, nalgebra::Matrix3::identity() * (c * 2.0));
                }
                out
            }
            Self::QuadraticExample => {
                let z = c64(0.0);
                let hat = Matrix3::new(z, z, z, z, c64(1.0), -i, z, -i, c64(-1.0));
                TensorFourierField::from_modes(&[(e1, hat), (e1.neg(), hat.map(|c| c.conj()))])
            }
            Self::QuarticExample => {
                let z = c64(0.0);
                let hat = Matrix3::new(z, c64(0.5), -i * 0.5, c64(0.5), z, z, -i * 0.5, z, z);
                TensorFourierField::from_modes(&[(e1, hat), (e1.neg(), hat.map(|c| c.conj()))])
            }
            Self::Reflected(inner) => inner.h().reflected(),
        }
    }
}

fn reflect_index(i: usize, g: usize, shape: BoxShape) -> usize {
    let r = |k: usize| (g - k) % g;
    match shape {
        BoxShape::Cube => {
            let (i1, i2, i3) = (i / (g * g), (i / g) % g, i % g);
            (r(i1) * g + r(i2)) * g + r(i3)
        }
        BoxShape::Axis => r(i),
    }
}

/// Metric at a point; fails if it is not positive definite.
pub fn metric_at(fam: &MetricFamily, x: [f64; 3], eps: f64) -> Result<Matrix3<f64>> {
    let g = fam.jet_at(x, eps).g;
    let min = SymmetricEigen::new(g).eigenvalues.min();
    if min <= MIN_METRIC_EIGENVALUE {
        return Err(Error::NotPositiveDefinite {
            epsilon: Some(eps),
            min_eigenvalue: min,
        });
    }
    Ok(g)
}

/// Positive square root of an SPD matrix, its inverse, and determinant.
pub fn symmetric_coframe(g: &Matrix3<f64>) -> Result<FrameSample> {
    Ok(frame_jet(&MetricJet {
        g: *g,
        dg: [Matrix3::zeros(); 3],
    })?
    .sample)
}

/// Symmetric coframe with derivatives from `S ∂S + ∂S S = ∂g`, solved in the
/// eigenbasis of `g`.
pub fn frame_jet(jet: &MetricJet) -> Result<FrameJet> {
    let sym = (jet.g + jet.g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.min();
    if min <= MIN_METRIC_EIGENVALUE || !min.is_finite() {
        return Err(Error::NotPositiveDefinite {
            epsilon: None,
            min_eigenvalue: min,
        });
    }
    let q = eig.eigenvectors;
    let s = eig.eigenvalues.map(f64::sqrt);
    let coframe = q * Matrix3::from_diagonal(&s) * q.transpose();
    let frame = q * Matrix3::from_diagonal(&s.map(|v| 1.0 / v)) * q.transpose();
    let vol = s.iter().product();
    let dcoframe = jet.dg.map(|dg| {
        let rot = q.transpose() * dg * q;
        let solved = Matrix3::from_fn(|i, j| rot[(i, j)] / (s[i] + s[j]));
        q * solved * q.transpose()
    });
    Ok(FrameJet {
        sample: FrameSample {
            coframe: (coframe + coframe.transpose()) * 0.5,
            frame: (frame + frame.transpose()) * 0.5,
            vol,
        },
        dcoframe,
    })
}

/// Symmetric-gauge frame jets on a sample grid, in parallel.
pub fn frame_grid(fam: &MetricFamily, eps: f64, g: usize, shape: BoxShape) -> Result<Vec<FrameJet>> {
    let jets = fam.jet_grid(eps, g, shape)?;
    jets.par_iter()
        .map(|j| {
            frame_jet(j).map_err(|e| match e {
                Error::NotPositiveDefinite { min_eigenvalue, .. } => Error::NotPositiveDefinite {
                    epsilon: Some(eps),
                    min_eigenvalue,
                },
                other => other,
            })
        })
        .collect()
}

/// `∂g/∂ε |_{ε=0}` for a family.
pub fn h_from_family(fam: &MetricFamily) -> TensorFourierField {
    fam.h()
}

/// Fourier coefficients of `*T^ax(x; ε)` on a `g³` grid, truncated to the
/// cube `N = (g - 2)/2`.
pub fn axial_torsion(fam: &MetricFamily, eps: f64, g: usize) -> Result<ScalarFourierField> {
    let frames = frame_grid(fam, eps, g, BoxShape::Cube)?;
    let samples: Vec<Complex64> = frames.iter().map(|f| c64(f.axial_torsion())).collect();
    let mut field = fft_analyze(&samples, g, TruncationBox::cube(g.saturating_sub(2) / 2))?;
    field.enforce_reality();
    Ok(field)
}

/// Leading `ε²` coefficient field of `*T^ax` for a linear family:
/// `-(1/12) ε_{βγδ} h_{αβ} ∂_δ h_{αγ}`, sampled pointwise.
pub fn axial_torsion_leading(h: &TensorFourierField, x: [f64; 3]) -> f64 {
    let hv = Matrix3::from_fn(|a, b| synthesize(&h.component(a, b), x).re);
    let dh: Vec<Matrix3<f64>> = (0..3)
        .map(|d| Matrix3::from_fn(|a, b| synthesize(&h.component(a, b).derivative(d), x).re))
        .collect();
    let mut acc = 0.0;
    for b in 0..3 {
        for c in 0..3 {
            for d in 0..3 {
                let s = levi_civita(b, c, d);
                if s == 0.0 {
                    continue;
                }
                acc += s * (0..3).map(|a| hv[(a, b)] * dh[d][(a, c)]).sum::<f64>();
            }
        }
    }
    -acc / 12.0
}

/// Real part helper for tensor coefficients at `m = 0`.
pub fn mean_tensor(h: &TensorFourierField) -> Matrix3<f64> {
    real_part(&h.get(LatticeVector::ZERO))
}

/// Random real symmetric trigonometric perturbation with modes in the cube of
/// the given radius, zero mean, coefficient parts uniform in `±amp/2`.
pub fn random_h<R: Rng + ?Sized>(rng: &mut R, radius: usize, amp: f64) -> TensorFourierField {
    let b = TruncationBox::cube(radius);
    let mut h = TensorFourierField::zeros(b);
    for (i, m) in b.modes().into_iter().enumerate() {
        if i >= b.neg_index(i) {
            continue;
        }
        let mut hat = Matrix3::zeros();
        for a in 0..3 {
            for bb in a..3 {
                let c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * amp;
                hat[(a, bb)] = c;
                hat[(bb, a)] = c;
            }
        }
        h.set(m, hat);
    }
    h.with_reality_partners()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_at_zero_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fams = [
            MetricFamily::QuadraticExample,
            MetricFamily::QuarticExample,
            MetricFamily::Linear {
                h: random_h(&mut rng, 1, 0.3),
            },
        ];
        for f in &fams {
            let g = metric_at(f, [0.3, 1.2, 2.0], 0.0).unwrap();
            assert!((g - Matrix3::identity()).norm() < 1e-15);
        }
    }

    #[test]
    fn quadratic_metric_at_origin() {
        let eps = 0.3;
        let g = metric_at(&MetricFamily::QuadraticExample, [0.0, 0.0, 0.0], eps).unwrap();
        assert!((g[(1, 1)] - (1.0 + eps).powi(2)).abs() < 1e-15);
        assert!((g[(2, 2)] - (1.0 - eps).powi(2)).abs() < 1e-15);
        assert!(g[(1, 2)].abs() < 1e-15);
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quartic_metric_at_origin() {
        let eps = 0.3;
        let g = metric_at(&MetricFamily::QuarticExample, [0.0, 0.0, 0.0], eps).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((g[(0, 1)] - eps).abs() < 1e-15);
        assert!((g[(1, 1)] - (1.0 + eps * eps)).abs() < 1e-15);
        assert!(g[(0, 2)].abs() < 1e-15);
    }

    #[test]
    fn identity_coframe() {
        let f = symmetric_coframe(&Matrix3::identity()).unwrap();
        assert!((f.coframe - Matrix3::identity()).norm() < 1e-15);
        assert!((f.frame - Matrix3::identity()).norm() < 1e-15);
        assert!((f.vol - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coframe_rejects_indefinite() {
        let g = Matrix3::new(1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        match symmetric_coframe(&g) {
            Err(Error::NotPositiveDefinite { min_eigenvalue, .. }) => {
                assert!((min_eigenvalue + 1.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quadratic_symmetric_coframe_matches_closed_form() {
        let eps = 0.27;
        for k in 0..9 {
            let x1 = 0.7 * k as f64;
            let g = metric_at(&MetricFamily::QuadraticExample, [x1, 0.0, 0.0], eps).unwrap();
            let f = symmetric_coframe(&g).unwrap();
            let (e, _) = quadratic_example_coframe(x1, eps);
            assert!((f.coframe - e).norm() < 1e-13);
            assert!((f.vol - (1.0 - eps * eps)).abs() < 1e-13);
            assert!((f.coframe.transpose() * f.coframe - g).norm() < 1e-12);
            assert!((f.frame * f.coframe - Matrix3::identity()).norm() < 1e-12);
        }
    }

    #[test]
    fn linear_family_coframe_slope_is_half_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_h(&mut rng, 1, 0.4);
        let fam = MetricFamily::Linear { h: h.clone() };
        let x = [0.4, 2.2, 5.0];
        let hx = Matrix3::from_fn(|a, b| synthesize(&h.component(a, b), x).re);
        let d = 1e-5;
        let up = symmetric_coframe(&metric_at(&fam, x, d).unwrap()).unwrap();
        let dn = symmetric_coframe(&metric_at(&fam, x, -d).unwrap()).unwrap();
        let slope_co = (up.coframe - dn.coframe) / (2.0 * d);
        let slope_fr = (up.frame - dn.frame) / (2.0 * d);
        assert!((slope_co - hx * 0.5).norm() < 1e-6);
        assert!((slope_fr + hx * 0.5).norm() < 1e-6);
    }

    #[test]
    fn coframe_derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fam = MetricFamily::Linear {
            h: random_h(&mut rng, 1, 0.5),
        };
        let x = [1.0, 0.5, 3.0];
        let eps = 0.4;
        let fj = frame_jet(&fam.jet_at(x, eps)).unwrap();
        let d = 1e-5;
        for delta in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[delta] += d;
            xm[delta] -= d;
            let ep = symmetric_coframe(&metric_at(&fam, xp, eps).unwrap()).unwrap().coframe;
            let em = symmetric_coframe(&metric_at(&fam, xm, eps).unwrap()).unwrap().coframe;
            assert!(((ep - em) / (2.0 * d) - fj.dcoframe[delta]).norm() < 1e-8);
        }
    }

    #[test]
    fn h_of_examples() {
        let i = Complex64::new(0.0, 1.0);
        let q = MetricFamily::QuadraticExample.h();
        let hat = q.get(LatticeVector::new(1, 0, 0));
        assert_eq!(hat[(1, 1)], c64(1.0));
        assert_eq!(hat[(1, 2)], -i);
        assert_eq!(hat[(2, 2)], c64(-1.0));
        assert_eq!(q.reality_defect().0, 0.0);
        let r = MetricFamily::QuarticExample.h();
        let hat = r.get(LatticeVector::new(1, 0, 0));
        assert_eq!(hat[(0, 1)], c64(0.5));
        assert_eq!(hat[(0, 2)], -i * 0.5);
        assert_eq!(hat[(1, 2)], c64(0.0));
        let phi = ScalarFourierField::from_modes(&[
            (LatticeVector::new(1, 0, 0), c64(1.0)),
            (LatticeVector::new(-1, 0, 0), c64(1.0)),
        ]);
        let conf = MetricFamily::Conformal { phi }.h();
        assert_eq!(conf.get(LatticeVector::new(-1, 0, 0)), Matrix3::identity() * c64(2.0));
    }

    /// ∂g/∂ε by finite differences, then Fourier analysis; independent of `h()`.
    #[test]
    fn h_matches_epsilon_derivative_of_metric() {
        let g = 16;
        let d = 1e-6;
        for fam in [MetricFamily::QuadraticExample, MetricFamily::QuarticExample] {
            let hat = fam.h();
            for a in 0..3 {
                for b in 0..3 {
                    let samples: Vec<_> = (0..g)
                        .map(|i| {
                            let x = grid_point(i, g, BoxShape::Axis);
                            let p = metric_at(&fam, x, d).unwrap()[(a, b)];
                            let m = metric_at(&fam, x, -d).unwrap()[(a, b)];
                            c64((p - m) / (2.0 * d))
                        })
                        .collect();
                    let f = fft_analyze(&samples, g, TruncationBox::axis(3)).unwrap();
                    for m in TruncationBox::axis(3).modes() {
                        assert!((f.get(m) - hat.get(m)[(a, b)]).norm() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn torsion_vanishes_when_flat() {
        let t = axial_torsion(&MetricFamily::QuadraticExample, 0.0, 8).unwrap();
        assert!(t.iter().all(|(_, c)| c.norm() < 1e-15));
    }

    #[test]
    fn quadratic_torsion_is_constant() {
        let eps = 0.3;
        let t = axial_torsion(&MetricFamily::QuadraticExample, eps, 16).unwrap();
        let expect = -(2.0 / 3.0) * eps * eps / (1.0 - eps * eps);
        for (m, c) in t.iter() {
            let e = if m == LatticeVector::ZERO { expect } else { 0.0 };
            assert!((c - c64(e)).norm() < 1e-13, "{m:?} {c}");
        }
        // (3/4) *T^ax is the constant of the closed-form operator
        assert!((0.75 * expect + eps * eps / (2.0 * (1.0 - eps * eps))).abs() < 1e-15);
    }

    #[test]
    fn linear_torsion_leading_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = random_h(&mut rng, 1, 0.5);
        let fam = MetricFamily::Linear { h: h.clone() };
        let x = [0.9, 4.1, 2.5];
        let torsion_at = |eps: f64| frame_jet(&fam.jet_at(x, eps)).unwrap().axial_torsion();
        // even part (T(ε)+T(-ε))/(2ε²) = a + O(ε²); one Richardson step removes O(ε²)
        let even = |d: f64| (torsion_at(d) + torsion_at(-d)) / (2.0 * d * d);
        let d = 2e-3;
        let a = (4.0 * even(d) - even(2.0 * d)) / 3.0;
        let expect = axial_torsion_leading(&h, x);
        assert!((a - expect).abs() < 1e-6, "{a} vs {expect}");
        assert!(torsion_at(0.0).abs() < 1e-15);
    }

    #[test]
    fn torsion_field_is_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let fam = MetricFamily::Linear {
            h: random_h(&mut rng, 1, 0.2),
        };
        let t = axial_torsion(&fam, 0.3, 16).unwrap();
        for k in 0..5 {
            let x = [0.3 * k as f64, 1.1, 0.2 * k as f64];
            assert!(synthesize(&t, x).im.abs() < 1e-10);
        }
    }

    #[test]
    fn quartic_volume_is_one() {
        let frames = frame_grid(&MetricFamily::QuarticExample, 0.4, 12, BoxShape::Axis).unwrap();
        for f in frames {
            assert!((f.sample.vol - 1.0).abs() < 1e-13);
            assert!(f.sample.coframe.symmetric_eigenvalues().min() > 0.0);
            assert!((f.sample.coframe - f.sample.coframe.transpose()).norm() < 1e-15);
        }
    }

    #[test]
    fn reflected_family_flips_derivatives() {
        let fam = MetricFamily::QuadraticExample.reflected();
        let x = [0.8, 0.0, 0.0];
        let j = fam.jet_at(x, 0.2);
        let base = MetricFamily::QuadraticExample.jet_at([-0.8, 0.0, 0.0], 0.2);
        assert_eq!(j.g, base.g);
        assert_eq!(j.dg[0], -base.dg[0]);
        let grid = fam.jet_grid(0.2, 8, BoxShape::Axis).unwrap();
        let direct: Vec<_> = (0..8)
            .map(|i| fam.jet_at(grid_point(i, 8, BoxShape::Axis), 0.2))
            .collect();
        for (a, b) in grid.iter().zip(&direct) {
            assert!((a.g - b.g).norm() < 1e-14);
            assert!((a.dg[0] - b.dg[0]).norm() < 1e-14);
        }
    }

    #[test]
    fn linear_grid_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fam = MetricFamily::Linear {
            h: random_h(&mut rng, 1, 0.4),
        };
        let g = 6;
        let grid = fam.jet_grid(0.3, g, BoxShape::Cube).unwrap();
        for i in [0, 17, 100, 215] {
            let j = fam.jet_at(grid_point(i, g, BoxShape::Cube), 0.3);
            assert!((grid[i].g - j.g).norm() < 1e-13);
            for d in 0..3 {
                assert!((grid[i].dg[d] - j.dg[d]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn large_epsilon_is_rejected() {
        let fam = MetricFamily::Linear {
            h: TensorFourierField::from_modes(&[(LatticeVector::ZERO, Matrix3::identity() * c64(-1.0))]),
        };
        assert!(matches!(
            metric_at(&fam, [0.0; 3], 1.5),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(frame_grid(&fam, 1.5, 4, BoxShape::Cube).is_err());
    }
}
