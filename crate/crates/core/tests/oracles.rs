//! Cross-checks between independently computed quantities.

use dirac_asym::assembly::{assemble_3d, assemble_axisymmetric, unperturbed_operator};
use dirac_asym::eta::{eta_invariant_heat, eta_partial, HeatParams};
use dirac_asym::fourier::{LatticeVector, SpinorVector, TruncationBox};
use dirac_asym::geometry::{random_h, MetricFamily};
use dirac_asym::perturbation::{coefficient_c, family_series, operator_a1, Pseudoinverse};
use dirac_asym::spectral::{eig_hermitian, Assembly, SpectrumReport};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Taylor coefficients of `-ε²/(2(1-ε²)) = -½ Σ_{k≥1} ε^{2k}`, by the series
/// product `(1 - ε²) · q(ε) = -ε²/2`.
fn quadratic_closed_form_taylor(order: usize) -> Vec<f64> {
    let mut q = vec![0.0; order + 1];
    for k in 0..=order {
        let rhs = if k == 2 { -0.5 } else { 0.0 };
        q[k] = rhs + if k >= 2 { q[k - 2] } else { 0.0 };
    }
    q
}

#[test]
fn quadratic_series_matches_closed_form_taylor() {
    let (s, _) = family_series(&MetricFamily::QuadraticExample, 10, 80, Assembly::Axisymmetric, 4).unwrap();
    let expect = quadratic_closed_form_taylor(4);
    assert_eq!(expect, vec![0.0, 0.0, -0.5, 0.0, -0.5]);
    for (k, (a, b)) in s.lambdas.iter().zip(&expect).enumerate() {
        assert!((a - b).abs() < 1e-7, "order {k}: {a} vs {b}");
    }
}

#[test]
fn axial_sector_of_3d_matches_1d_assembly() {
    for fam in [MetricFamily::QuadraticExample, MetricFamily::QuarticExample] {
        let full = assemble_3d(&fam, 0.25, 2, 32).unwrap();
        let axial = assemble_axisymmetric(&fam, 0.25, 2, 32).unwrap();
        let sub = full.matrix.submatrix(&full.axial_rows());
        assert!(sub.max_abs_diff(&axial.matrix) < 1e-10, "{}", fam.kind_name());
    }
}

#[test]
fn first_order_operator_matches_central_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = random_h(&mut rng, 1, 0.3);
    let fam = MetricFamily::Linear { h: h.clone() };
    let basis = TruncationBox::cube(2);
    let d = 1e-4;
    let mut fd = assemble_3d(&fam, d, 2, 32).unwrap().matrix;
    fd.axpy(-1.0, &assemble_3d(&fam, -d, 2, 32).unwrap().matrix);
    let fd = fd.scaled(0.5 / d);
    let a1 = operator_a1(&h, basis).unwrap();
    assert!(fd.max_abs_diff(&a1.matrix) < 1e-7, "{}", fd.max_abs_diff(&a1.matrix));
}

#[test]
fn flat_pseudoinverse_inverts_on_complement() {
    let basis = TruncationBox::cube(1);
    let a0 = unperturbed_operator(basis);
    let q = Pseudoinverse::flat(basis);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v = SpinorVector::random(basis, &mut rng);
    // Project out the m = 0 pair, then A⁽⁰⁾ Q is the identity.
    let mut w = v.clone();
    for c in 0..2 {
        let unit = SpinorVector::unit(basis, LatticeVector::ZERO, c);
        w = w.add_scaled(-v.entry(LatticeVector::ZERO, c), &unit);
    }
    let back = a0.apply(&q.apply(&w).unwrap()).unwrap();
    assert!(back.sub(&w).norm() < 1e-14);
}

#[test]
fn heat_and_partial_sum_are_odd() {
    let rep = eig_hermitian(
        &assemble_axisymmetric(&MetricFamily::QuadraticExample, 0.2, 20, 160).unwrap(),
        false,
    )
    .unwrap();
    let neg = rep.negated();
    let a = eta_invariant_heat(&rep, HeatParams::default()).unwrap().value;
    let b = eta_invariant_heat(&neg, HeatParams::default()).unwrap().value;
    assert_eq!(a, -b);
    let a = eta_partial(&rep, 1.5).unwrap().value;
    let b = eta_partial(&neg, 1.5).unwrap().value;
    assert_eq!(a, -b);
}

#[test]
fn symmetric_spectrum_has_zero_eta() {
    let rep = SpectrumReport::from_eigenvalues(vec![-2.0, -1.0, -1.0, 0.0, 0.0, 1.0, 1.0, 2.0]);
    assert_eq!(eta_invariant_heat(&rep, HeatParams::default()).unwrap().value, 0.0);
    assert_eq!(eta_partial(&rep, 0.5).unwrap().value, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn c_is_quadratic_and_odd_under_reflection(seed in any::<u64>(), scale in 0.1f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_h(&mut rng, 2, 0.5);
        let c = coefficient_c(&h).unwrap();
        let scaled = coefficient_c(&h.scaled(scale)).unwrap();
        prop_assert!((scaled - scale * scale * c).abs() <= 1e-12 * (1.0 + scaled.abs()));
        let reflected = coefficient_c(&h.reflected()).unwrap();
        prop_assert!((reflected + c).abs() <= 1e-13);
    }

    #[test]
    fn assembled_operator_commutes_with_conjugation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam = MetricFamily::Linear { h: random_h(&mut rng, 1, 0.2) };
        let op = assemble_3d(&fam, 0.3, 1, 32).unwrap();
        prop_assert!(op.hermiticity_defect() < 1e-13);
        let v = SpinorVector::random(op.basis, &mut rng);
        prop_assert!(op.conjugation_residual(&v).unwrap() < 1e-12);
        prop_assert!(op.special_property_residual(&v).unwrap() < 1e-12);
    }
}
