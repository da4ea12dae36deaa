use nalab::assoc::*;
use proptest::prelude::*;

#[test]
fn fourth_power_vacuum_polynomial() {
    let v = vacuum_expectation_corrections(4).unwrap();
    assert_eq!(v.to_string(), "⟨core₄⟩ + m²⟨core₂⟩ + m⁴");
    assert_eq!(v.to_ascii(), "<core4> + m^2<core2> + m^4");
}

#[test]
fn degree_bookkeeping_up_to_ten() {
    for n in 1..=10usize {
        let norm = normalize(&build_power_expression(n).unwrap()).unwrap();
        assert_eq!(norm.power as usize, n);
        assert_eq!(norm.core.power(), n);
        for t in &norm.series.terms {
            assert_eq!(t.k as usize + 2 * t.j as usize, n, "n={n}");
            assert_eq!(t.core.power(), t.k as usize);
        }
        assert_eq!(norm.series.len(), n / 2);
    }
}

#[test]
fn odd_vacuum_powers_have_no_pure_number() {
    for n in (1..=15).step_by(2) {
        assert!(
            !vacuum_expectation_corrections(n).unwrap().has_pure_number(),
            "n={n}"
        );
    }
    for n in (2..=14).step_by(2) {
        assert!(
            vacuum_expectation_corrections(n).unwrap().has_pure_number(),
            "n={n}"
        );
    }
}

#[test]
fn zero_associator_keeps_only_the_core() {
    for n in 1..=10 {
        let norm = normalize(&build_power_expression(n).unwrap()).unwrap();
        let terms = norm.substitute(0.0);
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].core, &norm.core);
        assert_eq!(terms[0].coefficient, 1.0);
    }
}

#[test]
fn gauge_mass_term_needs_nonzero_associator() {
    let c = gauge_quartic_correction(3, AssociatorConstant::Symbolic).unwrap();
    assert!(!c.mass_terms.is_empty());
    assert!(gauge_quartic_correction(3, AssociatorConstant::Value(0.0))
        .unwrap()
        .mass_terms
        .is_empty());
    assert!(gauge_quartic_correction(1, AssociatorConstant::Value(0.25)).is_err());
}

proptest! {
    #[test]
    fn substitution_weights_are_powers_of_m2(n in 1usize..=12, m2 in 0.01f64..3.0) {
        let norm = normalize(&build_power_expression(n).unwrap()).unwrap();
        let terms = norm.substitute(m2);
        prop_assert_eq!(terms.len(), 1 + n / 2);
        for t in &terms {
            let j = (n - t.k as usize) / 2;
            prop_assert!((t.coefficient - m2.powi(j as i32)).abs() <= 1e-12 * t.coefficient.abs());
        }
    }

    #[test]
    fn normal_form_is_deterministic(n in 1usize..=12) {
        let a = normalize(&build_power_expression(n).unwrap()).unwrap();
        let b = normalize(&build_power_expression(n).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn radius_is_inverse_mass(m in 1e-6f64..1e6) {
        let r = interaction_radius(m).unwrap();
        prop_assert!((r * m - 1.0).abs() < 1e-15);
    }
}
