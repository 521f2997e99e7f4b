//! Lattice-indexed Fourier representations on the torus `[0, 2π)³`.
//!
//! Conventions:
//! - `f̂(m) = (2π)⁻³ ∫ e^{-i m·x} f(x) dx`, so `f(x) = Σ f̂(m) e^{i m·x}`.
//! - Spinor fields are expanded in the orthonormal basis
//!   `φ_m = (2π)^{-3/2} e^{i m·x}`; the L² inner product is then the
//!   Euclidean one on coefficient vectors.
//! - Modes of a [`TruncationBox`] are ordered lexicographically in
//!   `(m1, m2, m3)`; a spinor vector stores component 1 and 2 of each mode
//!   next to each other (row `2·index + s`).

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeVector(pub [i32; 3]);

impl LatticeVector {
    pub const ZERO: Self = Self([0, 0, 0]);

    pub const fn new(m1: i32, m2: i32, m3: i32) -> Self {
        Self([m1, m2, m3])
    }

    pub fn neg(self) -> Self {
        Self([-self.0[0], -self.0[1], -self.0[2]])
    }

    pub fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    pub fn norm_sq(self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// `max_α |m_α|`.
    pub fn max_abs(self) -> usize {
        self.0.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn as_f64(self) -> [f64; 3] {
        [self.0[0] as f64, self.0[1] as f64, self.0[2] as f64]
    }

    /// True when `m2 = m3 = 0`.
    pub fn is_axial(self) -> bool {
        self.0[1] == 0 && self.0[2] == 0
    }

    pub fn dot_x(self, x: [f64; 3]) -> f64 {
        self.0[0] as f64 * x[0] + self.0[1] as f64 * x[1] + self.0[2] as f64 * x[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxShape {
    /// All modes with `max_α |m_α| ≤ N`.
    Cube,
    /// Modes `(m1, 0, 0)` with `|m1| ≤ N` (axisymmetric sector).
    Axis,
}

/// Finite set of lattice modes spanning a Galerkin subspace.
///
/// Both shapes are symmetric under `m ↦ -m`, and the lexicographic order
/// maps `-m` to `count - 1 - index(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationBox {
    n: usize,
    shape: BoxShape,
}

impl TruncationBox {
    pub fn cube(n: usize) -> Self {
        Self {
            n,
            shape: BoxShape::Cube,
        }
    }

    pub fn axis(n: usize) -> Self {
        Self {
            n,
            shape: BoxShape::Axis,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> BoxShape {
        self.shape
    }

    fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn mode_count(&self) -> usize {
        match self.shape {
            BoxShape::Cube => self.side().pow(3),
            BoxShape::Axis => self.side(),
        }
    }

    /// Spinor dimension `2 · mode_count`.
    pub fn dim(&self) -> usize {
        2 * self.mode_count()
    }

    pub fn contains(&self, m: LatticeVector) -> bool {
        match self.shape {
            BoxShape::Cube => m.max_abs() <= self.n,
            BoxShape::Axis => m.is_axial() && m.max_abs() <= self.n,
        }
    }

    pub fn index_of(&self, m: LatticeVector) -> Option<usize> {
        if !self.contains(m) {
            return None;
        }
        let n = self.n as i32;
        let s = self.side();
        let [a, b, c] = m.0;
        Some(match self.shape {
            BoxShape::Cube => (((a + n) as usize) * s + (b + n) as usize) * s + (c + n) as usize,
            BoxShape::Axis => (a + n) as usize,
        })
    }

    pub fn mode(&self, index: usize) -> LatticeVector {
        let n = self.n as i32;
        let s = self.side();
        match self.shape {
            BoxShape::Cube => {
                let c = (index % s) as i32 - n;
                let b = ((index / s) % s) as i32 - n;
                let a = (index / (s * s)) as i32 - n;
                LatticeVector([a, b, c])
            }
            BoxShape::Axis => LatticeVector([index as i32 - n, 0, 0]),
        }
    }

    pub fn modes(&self) -> Vec<LatticeVector> {
        (0..self.mode_count()).map(|i| self.mode(i)).collect()
    }

    /// Index of `-m` given the index of `m`.
    #[inline]
    pub fn neg_index(&self, index: usize) -> usize {
        self.mode_count() - 1 - index
    }
}

/// Fourier coefficients of a scalar field, stored densely on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFourierField {
    support: TruncationBox,
    coeffs: Vec<Complex64>,
}

impl ScalarFourierField {
    pub fn zeros(support: TruncationBox) -> Self {
        Self {
            support,
            coeffs: vec![ZERO; support.mode_count()],
        }
    }

    /// Builds a field from explicit modes; the support is the smallest cube
    /// containing them.
    pub fn from_modes(modes: &[(LatticeVector, Complex64)]) -> Self {
        let r = modes.iter().map(|(m, _)| m.max_abs()).max().unwrap_or(0);
        let mut f = Self::zeros(TruncationBox::cube(r));
        for &(m, c) in modes {
            f.set(m, c);
        }
        f
    }

    pub fn support(&self) -> TruncationBox {
        self.support
    }

    pub fn get(&self, m: LatticeVector) -> Complex64 {
        self.support.index_of(m).map_or(ZERO, |i| self.coeffs[i])
    }

    /// Panics when `m` lies outside the support.
    pub fn set(&mut self, m: LatticeVector, c: Complex64) {
        let i = self
            .support
            .index_of(m)
            .unwrap_or_else(|| panic!("mode {:?} outside support", m.0));
        self.coeffs[i] = c;
    }

    pub fn iter(&self) -> impl Iterator<Item = (LatticeVector, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(|(i, &c)| (self.support.mode(i), c))
    }

    /// `max_m |f̂(-m) - conj f̂(m)|`.
    pub fn reality_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.support.neg_index(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Projects onto real-valued fields: `f̂(m) ← (f̂(m) + conj f̂(-m))/2`.
    pub fn enforce_reality(&mut self) {
        let old = self.coeffs.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            *c = (old[i] + old[self.support.neg_index(i)].conj()) * 0.5;
        }
    }

    /// Largest coefficient modulus on the shell `max|m_α| = r`.
    pub fn max_on_shell(&self, r: usize) -> f64 {
        self.iter()
            .filter(|(m, _)| m.max_abs() == r)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    /// Coefficients of `∂f/∂x^δ`.
    pub fn derivative(&self, delta: usize) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let m = self.support.mode(i);
            *c *= Complex64::new(0.0, m.0[delta] as f64);
        }
        out
    }

    /// Coefficients of `x ↦ f(-x)`.
    pub fn reflected(&self) -> Self {
        let mut out = self.clone();
        out.coeffs.reverse();
        out
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            support: self.support,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Largest `max|m_α|` carrying a coefficient above `tol`.
    pub fn support_radius(&self, tol: f64) -> usize {
        self.iter()
            .filter(|(_, c)| c.norm() > tol)
            .map(|(m, _)| m.max_abs())
            .max()
            .unwrap_or(0)
    }
}

/// Fourier coefficients of a symmetric rank-two tensor field.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFourierField {
    support: TruncationBox,
    coeffs: Vec<Matrix3<Complex64>>,
}

impl TensorFourierField {
    pub fn zeros(support: TruncationBox) -> Self {
        Self {
            support,
            coeffs: vec![Matrix3::zeros(); support.mode_count()],
        }
    }

    pub fn from_modes(modes: &[(LatticeVector, Matrix3<Complex64>)]) -> Self {
        let r = modes.iter().map(|(m, _)| m.max_abs()).max().unwrap_or(0);
        let mut f = Self::zeros(TruncationBox::cube(r));
        for &(m, c) in modes {
            f.set(m, c);
        }
        f
    }

    /// Adds `conj ĥ(m)` at `-m` for every `m` whose partner is zero.
    pub fn with_reality_partners(mut self) -> Self {
        for i in 0..self.coeffs.len() {
            let j = self.support.neg_index(i);
            if self.coeffs[j].iter().all(|c| c.norm() == 0.0) {
                self.coeffs[j] = self.coeffs[i].map(|c| c.conj());
            }
        }
        self
    }

    pub fn support(&self) -> TruncationBox {
        self.support
    }

    pub fn get(&self, m: LatticeVector) -> Matrix3<Complex64> {
        self.support.index_of(m).map_or_else(Matrix3::zeros, |i| self.coeffs[i])
    }

    pub fn set(&mut self, m: LatticeVector, c: Matrix3<Complex64>) {
        let i = self
            .support
            .index_of(m)
            .unwrap_or_else(|| panic!("mode {:?} outside support", m.0));
        self.coeffs[i] = c;
    }

    pub fn iter(&self) -> impl Iterator<Item = (LatticeVector, &Matrix3<Complex64>)> + '_ {
        self.coeffs.iter().enumerate().map(|(i, c)| (self.support.mode(i), c))
    }

    /// Worst violation of `ĥ(-m) = conj ĥ(m)` and the mode where it occurs.
    pub fn reality_defect(&self) -> (f64, LatticeVector) {
        let mut worst = (0.0, LatticeVector::ZERO);
        for i in 0..self.coeffs.len() {
            let j = self.support.neg_index(i);
            let d = (self.coeffs[j] - self.coeffs[i].map(|c| c.conj())).norm();
            if d > worst.0 {
                worst = (d, self.support.mode(i));
            }
        }
        worst
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| (c - c.transpose()).norm())
            .fold(0.0, f64::max)
    }

    pub fn symmetrize(&mut self) {
        for c in &mut self.coeffs {
            *c = (*c + c.transpose()) * Complex64::new(0.5, 0.0);
        }
    }

    pub fn component(&self, a: usize, b: usize) -> ScalarFourierField {
        ScalarFourierField {
            support: self.support,
            coeffs: self.coeffs.iter().map(|c| c[(a, b)]).collect(),
        }
    }

    pub fn reflected(&self) -> Self {
        let mut out = self.clone();
        out.coeffs.reverse();
        out
    }

    pub fn support_radius(&self, tol: f64) -> usize {
        self.iter()
            .filter(|(_, c)| c.norm() > tol)
            .map(|(m, _)| m.max_abs())
            .max()
            .unwrap_or(0)
    }

    /// First nonzero mode off the `x¹` axis, if any.
    pub fn off_axis_mode(&self, tol: f64) -> Option<LatticeVector> {
        self.iter()
            .find(|(m, c)| !m.is_axial() && c.norm() > tol)
            .map(|(m, _)| m)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            support: self.support,
            coeffs: self.coeffs.iter().map(|c| c * Complex64::new(s, 0.0)).collect(),
        }
    }
}

/// Dimension of sample grids accepted by [`fft_analyze`].
fn grid_dims(shape: BoxShape) -> usize {
    match shape {
        BoxShape::Cube => 3,
        BoxShape::Axis => 1,
    }
}

/// Grid coordinates `x^α = 2π i_α / g` for a flat sample index.
pub fn grid_point(index: usize, g: usize, shape: BoxShape) -> [f64; 3] {
    let h = 2.0 * PI / g as f64;
    match shape {
        BoxShape::Cube => {
            let i3 = index % g;
            let i2 = (index / g) % g;
            let i1 = index / (g * g);
            [i1 as f64 * h, i2 as f64 * h, i3 as f64 * h]
        }
        BoxShape::Axis => [index as f64 * h, 0.0, 0.0],
    }
}

pub fn grid_len(g: usize, shape: BoxShape) -> usize {
    g.pow(grid_dims(shape) as u32)
}

/// In-place multidimensional FFT over a `g^d` grid (last axis contiguous).
fn fft_nd(data: &mut [Complex64], g: usize, dims: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(g)
    } else {
        planner.plan_fft_forward(g)
    };
    // innermost axis: contiguous rows
    fft.process(data);
    if dims == 1 {
        return;
    }
    let mut buf = vec![ZERO; g];
    for axis_stride in [g, g * g] {
        let outer = data.len() / (g * axis_stride);
        for o in 0..outer {
            for inner in 0..axis_stride {
                let base = o * g * axis_stride + inner;
                for k in 0..g {
                    buf[k] = data[base + k * axis_stride];
                }
                fft.process(&mut buf);
                for k in 0..g {
                    data[base + k * axis_stride] = buf[k];
                }
            }
        }
    }
}

fn wrap(m: i32, g: usize) -> usize {
    m.rem_euclid(g as i32) as usize
}

fn grid_offset(m: LatticeVector, g: usize, shape: BoxShape) -> usize {
    match shape {
        BoxShape::Cube => (wrap(m.0[0], g) * g + wrap(m.0[1], g)) * g + wrap(m.0[2], g),
        BoxShape::Axis => wrap(m.0[0], g),
    }
}

/// Discrete Fourier analysis of samples on a uniform `g^d` grid, restricted
/// to the modes of `target` (`d = 3` for cubes, `d = 1` along `x¹` for axes).
pub fn fft_analyze(samples: &[Complex64], g: usize, target: TruncationBox) -> Result<ScalarFourierField> {
    let floor = 2 * target.n() + 2;
    if g < floor {
        return Err(Error::GridTooSmall {
            grid: g,
            floor,
            n: target.n(),
        });
    }
    let shape = target.shape();
    let len = grid_len(g, shape);
    if samples.len() != len {
        return Err(Error::InvalidArgument(format!(
            "expected {len} samples on a {g}-point grid, got {}",
            samples.len()
        )));
    }
    let mut data = samples.to_vec();
    fft_nd(&mut data, g, grid_dims(shape), false);
    let scale = 1.0 / len as f64;
    let mut out = ScalarFourierField::zeros(target);
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        let m = target.mode(i);
        *c = data[grid_offset(m, g, shape)] * scale;
    }
    Ok(out)
}

/// Evaluates `Σ_m f̂(m) e^{i m·x}` at a point.
pub fn synthesize(field: &ScalarFourierField, x: [f64; 3]) -> Complex64 {
    field
        .iter()
        .filter(|(_, c)| *c != ZERO)
        .map(|(m, c)| c * Complex64::from_polar(1.0, m.dot_x(x)))
        .sum()
}

/// Samples a band-limited field on a uniform grid via inverse FFT.
///
/// `shape` selects a `g³` grid or a `g`-point grid along `x¹` (in the latter
/// case only axial modes may be present).
pub fn synthesize_grid(field: &ScalarFourierField, g: usize, shape: BoxShape) -> Result<Vec<Complex64>> {
    let r = field.support_radius(0.0);
    if g < 2 * r + 1 {
        return Err(Error::GridTooSmall {
            grid: g,
            floor: 2 * r + 1,
            n: r,
        });
    }
    let mut data = vec![ZERO; grid_len(g, shape)];
    for (m, c) in field.iter() {
        if c == ZERO {
            continue;
        }
        if shape == BoxShape::Axis && !m.is_axial() {
            return Err(Error::NotAxisymmetric { mode: m.0 });
        }
        data[grid_offset(m, g, shape)] += c;
    }
    fft_nd(&mut data, g, grid_dims(shape), true);
    Ok(data)
}

/// Spinor field in coefficient form over a truncation box.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorVector {
    basis: TruncationBox,
    data: Vec<Complex64>,
}

impl SpinorVector {
    pub fn zeros(basis: TruncationBox) -> Self {
        Self {
            basis,
            data: vec![ZERO; basis.dim()],
        }
    }

    pub fn from_vec(basis: TruncationBox, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != basis.dim() {
            return Err(Error::InvalidArgument(format!(
                "spinor vector of length {} does not match basis dimension {}",
                data.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, data })
    }

    /// Unit coefficient at `(m, component)`; `component` is 0 or 1.
    pub fn unit(basis: TruncationBox, m: LatticeVector, component: usize) -> Self {
        let mut v = Self::zeros(basis);
        let i = basis.index_of(m).expect("mode outside basis");
        v.data[2 * i + component] = linalg::ONE;
        v
    }

    /// The normalized constant spinor `(1, 0)` at `m = 0`.
    pub fn ground(basis: TruncationBox) -> Self {
        Self::unit(basis, LatticeVector::ZERO, 0)
    }

    pub fn random<R: Rng + ?Sized>(basis: TruncationBox, rng: &mut R) -> Self {
        let data = (0..basis.dim())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        Self { basis, data }
    }

    pub fn basis(&self) -> TruncationBox {
        self.basis
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn entry(&self, m: LatticeVector, component: usize) -> Complex64 {
        self.basis.index_of(m).map_or(ZERO, |i| self.data[2 * i + component])
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.data)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            basis: self.basis,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, s: Complex64, other: &Self) -> Self {
        assert_eq!(self.basis, other.basis);
        Self {
            basis: self.basis,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-linalg::ONE, other)
    }

    pub fn map_data(&self, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        Self {
            basis: self.basis,
            data,
        }
    }
}

/// Charge conjugation `(v₁, v₂) ↦ (-conj v₂, conj v₁)` in coefficient form:
/// the output at mode `m` is built from the input at `-m`.
pub fn charge_conjugate(v: &SpinorVector) -> SpinorVector {
    let basis = v.basis;
    let mut out = vec![ZERO; v.data.len()];
    for i in 0..basis.mode_count() {
        let j = basis.neg_index(i);
        out[2 * i] = -v.data[2 * j + 1].conj();
        out[2 * i + 1] = v.data[2 * j].conj();
    }
    SpinorVector { basis, data: out }
}

/// `⟨v, w⟩ = ∫ w* v dx`, i.e. `Σ_m w(m)* v(m)` in the orthonormal basis.
pub fn inner_product(v: &SpinorVector, w: &SpinorVector) -> Result<Complex64> {
    if v.basis != w.basis {
        return Err(Error::BoxMismatch);
    }
    Ok(linalg::dot(&v.data, &w.data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn box_mode_counts_and_order() {
        let b = TruncationBox::cube(2);
        assert_eq!(b.mode_count(), 125);
        let modes = b.modes();
        assert!(modes.windows(2).all(|w| w[0] < w[1]), "lexicographic");
        for (i, m) in modes.iter().enumerate() {
            assert_eq!(b.index_of(*m), Some(i));
            assert_eq!(b.mode(b.neg_index(i)), m.neg());
        }
        let a = TruncationBox::axis(3);
        assert_eq!(a.mode_count(), 7);
        assert_eq!(a.index_of(LatticeVector::new(0, 1, 0)), None);
        assert_eq!(a.mode(a.neg_index(1)), LatticeVector::new(2, 0, 0));
    }

    #[test]
    fn analyze_constant_and_cosine() {
        let g = 32;
        let b = TruncationBox::cube(2);
        let ones = vec![c(1.0, 0.0); g * g * g];
        let f = fft_analyze(&ones, g, b).unwrap();
        for (m, v) in f.iter() {
            let expect = if m == LatticeVector::ZERO { 1.0 } else { 0.0 };
            assert!((v - c(expect, 0.0)).norm() < 1e-14);
        }
        let cosx: Vec<_> = (0..g * g * g)
            .map(|i| c(grid_point(i, g, BoxShape::Cube)[0].cos(), 0.0))
            .collect();
        let f = fft_analyze(&cosx, g, b).unwrap();
        for (m, v) in f.iter() {
            let expect = if m == LatticeVector::new(1, 0, 0) || m == LatticeVector::new(-1, 0, 0) {
                0.5
            } else {
                0.0
            };
            assert!((v - c(expect, 0.0)).norm() < 1e-14, "{m:?} {v}");
        }
    }

    #[test]
    fn analyze_rejects_small_grid() {
        let err = fft_analyze(&[c(0.0, 0.0); 125], 5, TruncationBox::cube(2)).unwrap_err();
        assert!(matches!(err, Error::GridTooSmall { floor: 6, .. }));
    }

    #[test]
    fn synthesize_constant_and_quadratic_h22() {
        let f = ScalarFourierField::from_modes(&[(LatticeVector::ZERO, c(1.0, 0.0))]);
        assert!((synthesize(&f, [0.3, 1.0, 4.0]) - c(1.0, 0.0)).norm() < 1e-15);
        // h22 = 2 cos x¹ has coefficients 1 at ±(1,0,0)
        let h22 = ScalarFourierField::from_modes(&[
            (LatticeVector::new(1, 0, 0), c(1.0, 0.0)),
            (LatticeVector::new(-1, 0, 0), c(1.0, 0.0)),
        ]);
        assert!((synthesize(&h22, [0.0, 0.7, 0.2]) - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn round_trip_band_limited() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = TruncationBox::cube(3);
        let mut f = ScalarFourierField::zeros(b);
        for m in b.modes() {
            f.set(m, c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        }
        f.enforce_reality();
        let g = 16;
        let samples = synthesize_grid(&f, g, BoxShape::Cube).unwrap();
        assert!(samples.iter().all(|s| s.im.abs() < 1e-12));
        let back = fft_analyze(&samples, g, b).unwrap();
        for m in b.modes() {
            assert!((back.get(m) - f.get(m)).norm() < 1e-12);
        }
        // point synthesis agrees with the grid
        let x = grid_point(1234, g, BoxShape::Cube);
        assert!((synthesize(&f, x) - samples[1234]).norm() < 1e-12);
    }

    #[test]
    fn axis_round_trip() {
        let f = ScalarFourierField::from_modes(&[
            (LatticeVector::new(2, 0, 0), c(0.25, -0.5)),
            (LatticeVector::new(-2, 0, 0), c(0.25, 0.5)),
            (LatticeVector::ZERO, c(3.0, 0.0)),
        ]);
        let s = synthesize_grid(&f, 12, BoxShape::Axis).unwrap();
        let back = fft_analyze(&s, 12, TruncationBox::axis(3)).unwrap();
        for m in TruncationBox::axis(3).modes() {
            assert!((back.get(m) - f.get(m)).norm() < 1e-14);
        }
    }

    #[test]
    fn charge_conjugation_of_ground_state() {
        let b = TruncationBox::cube(1);
        let v0 = SpinorVector::ground(b);
        let cv = charge_conjugate(&v0);
        assert_eq!(cv, SpinorVector::unit(b, LatticeVector::ZERO, 1));
        assert!((inner_product(&v0, &v0).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn conjugation_identities_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for basis in [TruncationBox::cube(1), TruncationBox::axis(4)] {
            for _ in 0..100 {
                let v = SpinorVector::random(basis, &mut rng);
                let w = SpinorVector::random(basis, &mut rng);
                let cv = charge_conjugate(&v);
                let cw = charge_conjugate(&w);
                // C(C(v)) = -v
                let ccv = charge_conjugate(&cv);
                assert!(ccv.add_scaled(linalg::ONE, &v).norm() < 1e-12);
                // <v, C v> = 0
                assert!(inner_product(&v, &cv).unwrap().norm() < 1e-12);
                // <C v, C w> = <w, v>
                let lhs = inner_product(&cv, &cw).unwrap();
                let rhs = inner_product(&w, &v).unwrap();
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn charge_conjugation_is_antilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = TruncationBox::cube(1);
        let v = SpinorVector::random(b, &mut rng);
        let w = SpinorVector::random(b, &mut rng);
        let (a, s) = (c(0.3, -1.1), c(-2.0, 0.4));
        let lhs = charge_conjugate(&v.scaled(a).add_scaled(s, &w));
        let rhs = charge_conjugate(&v)
            .scaled(a.conj())
            .add_scaled(s.conj(), &charge_conjugate(&w));
        assert!(lhs.sub(&rhs).norm() < 1e-14);
    }

    #[test]
    fn basis_vectors_are_orthonormal() {
        let b = TruncationBox::cube(1);
        for (i, m) in b.modes().into_iter().enumerate().step_by(5) {
            for m2 in b.modes().into_iter().step_by(4) {
                let ip = inner_product(&SpinorVector::unit(b, m, 1), &SpinorVector::unit(b, m2, 1)).unwrap();
                let expect = if m == m2 { 1.0 } else { 0.0 };
                assert!((ip - c(expect, 0.0)).norm() < 1e-15, "{i}");
            }
        }
    }

    #[test]
    fn inner_product_rejects_mismatched_boxes() {
        let v = SpinorVector::zeros(TruncationBox::cube(1));
        let w = SpinorVector::zeros(TruncationBox::cube(2));
        assert!(matches!(inner_product(&v, &w), Err(Error::BoxMismatch)));
    }
}
