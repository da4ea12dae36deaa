use nalab::charge::*;
use nalab::Execution;

fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[test]
fn field_energy_matches_closed_form() {
    let m = ChargeModel::unit();
    let e = energy_report(&m, 1e-3, 1e-12).unwrap();
    assert!((e.field_energy - 0.5).abs() < 1e-8, "{}", e.field_energy);
    assert_eq!(e.closed_form_field_energy, 0.5);
}

#[test]
fn self_energy_tracks_divergent_closed_form() {
    let m = ChargeModel::unit();
    for r_min in [1e-2, 1e-3, 1e-4] {
        let e = energy_report(&m, r_min, 1e-12).unwrap();
        let u = m.alpha / r_min;
        let exact = (u - u.tanh()) / (2.0 * m.alpha);
        assert!(
            ((e.self_energy - exact) / exact).abs() < 1e-6,
            "r_min {r_min}"
        );
        assert_eq!(
            e.closed_form_self_energy,
            closed_form_self_energy(&m, r_min)
        );
    }
}

#[test]
fn gauss_law_residual_is_second_order() {
    let m = ChargeModel::unit();
    let a = m.alpha;
    let coarse = gauss_residual(&m, &log_grid(0.1 * a, 10.0 * a, 101)).unwrap();
    let fine = gauss_residual(&m, &log_grid(0.1 * a, 10.0 * a, 201)).unwrap();
    let ratio = coarse / fine;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    assert_eq!(
        gauss_residual(
            &ChargeModel::new(0.0, UnitsConfig::default()),
            &log_grid(0.1, 10.0, 50)
        )
        .unwrap(),
        0.0
    );
}

#[test]
fn grid_sampling_is_schedule_independent() {
    let m = ChargeModel::new(-2.5, UnitsConfig::new(0.7, 1.3).unwrap());
    let radii = log_grid(1e-3, 1e3, 500);
    let seq = sample_grid(&m, &radii, Execution::Sequential).unwrap();
    let par = sample_grid(&m, &radii, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    // Deep inside the core both fields underflow to zero.
    assert!(seq.iter().all(|s| s.e_r <= 0.0 && s.rho <= 0.0));
    assert!(seq
        .iter()
        .filter(|s| s.r > m.alpha.abs() / 100.0)
        .all(|s| s.e_r < 0.0 && s.rho < 0.0));
}

#[test]
fn origin_is_regular() {
    let m = ChargeModel::unit();
    let s = exact_solution(m.alpha / 50.0, &m).unwrap();
    assert!(s.e_r < 1e-12 && s.rho < 1e-12);
}
