//! Point charge regularized by the torsion-corrected Maxwell system.
//!
//! With `α = q√G/c²` the closed-form spherical solution is
//!
//! ```text
//! φ   = (c²/√G) sinh(α/r)
//! E_r = q / (r² cosh(α/r))
//! ρ   = (√G/4πc²) tanh(α/r)/cosh(α/r) · q²/r⁴
//! ```
//!
//! `E_r` and `ρ` vanish at the origin while `φ` diverges. The field energy is
//! finite, `q c²/(2√G)`, but the self-interaction `½ρφ` integrates to
//! `(q²/2α)(U − tanh U)` above `r_min = α/U`, which grows without bound.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::numerics::diff::nonuniform_centered;
use crate::numerics::quad::{quad_breakpoints, quad_semi_infinite, QuadError};
use crate::par::{self, Execution};

/// Above this `|α/r|` the hyperbolic functions are replaced by their
/// exponential asymptotics; the neglected terms are `O(e^{-60})`.
pub const ASYMPTOTIC_SWITCH: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChargeError {
    #[error("radius must be positive and finite, got {0}")]
    Domain(f64),
    #[error("units must be positive and finite (G = {g}, c = {c})")]
    InvalidUnits { g: f64, c: f64 },
    #[error("grid needs at least 5 strictly increasing positive radii")]
    DegenerateGrid,
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitsConfig {
    /// Newton constant.
    #[serde(rename = "G")]
    pub g: f64,
    /// Speed of light.
    pub c: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self { g: 1.0, c: 1.0 }
    }
}

impl UnitsConfig {
    pub fn new(g: f64, c: f64) -> Result<Self, ChargeError> {
        if g > 0.0 && c > 0.0 && g.is_finite() && c.is_finite() {
            Ok(Self { g, c })
        } else {
            Err(ChargeError::InvalidUnits { g, c })
        }
    }

    /// `G/c⁴`, the coupling in front of `φ²`.
    pub fn coupling(&self) -> f64 {
        self.g / self.c.powi(4)
    }

    /// `√G/c²`, converts a potential into the dimensionless `sinh` argument scale.
    pub fn potential_scale(&self) -> f64 {
        self.g.sqrt() / (self.c * self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChargeModel {
    pub q: f64,
    pub units: UnitsConfig,
    /// `q√G/c²`, a length.
    pub alpha: f64,
}

impl ChargeModel {
    pub fn new(q: f64, units: UnitsConfig) -> Self {
        Self {
            q,
            units,
            alpha: q * units.potential_scale(),
        }
    }

    /// Unit charge with `G = c = 1`.
    pub fn unit() -> Self {
        Self::new(1.0, UnitsConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub r: f64,
    pub phi: f64,
    #[serde(rename = "E_r")]
    pub e_r: f64,
    pub rho: f64,
}

/// `(sech x, tanh x · sech x)` without overflow.
fn sech_and_tanh_sech(x: f64) -> (f64, f64) {
    let ax = x.abs();
    if ax > ASYMPTOTIC_SWITCH {
        let s = 2.0 * (-ax).exp();
        (s, x.signum() * s)
    } else {
        let sech = 1.0 / x.cosh();
        (sech, x.tanh() * sech)
    }
}

pub fn exact_solution(r: f64, model: &ChargeModel) -> Result<FieldSample, ChargeError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ChargeError::Domain(r));
    }
    let x = model.alpha / r;
    let scale = model.units.potential_scale();
    let (sech, tanh_sech) = sech_and_tanh_sech(x);
    // For |x| > ~710 the potential itself exceeds f64 and becomes ±inf.
    let phi = x.sinh() / scale;
    let e_r = model.q * sech / (r * r);
    let rho = scale / (4.0 * PI) * tanh_sech * model.q * model.q / r.powi(4);
    Ok(FieldSample { r, phi, e_r, rho })
}

/// `ρφ` evaluated as `q² tanh²(α/r) / (4π r⁴)`, finite even where `φ` overflows.
pub fn self_interaction_density(r: f64, model: &ChargeModel) -> Result<f64, ChargeError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ChargeError::Domain(r));
    }
    let t = (model.alpha / r).tanh();
    Ok(model.q * model.q * t * t / (4.0 * PI * r.powi(4)))
}

/// Batch evaluation over a grid of radii.
pub fn sample_grid(
    model: &ChargeModel,
    radii: &[f64],
    exec: Execution,
) -> Result<Vec<FieldSample>, ChargeError> {
    par::map_slice(radii, exec, |&r| exact_solution(r, model))
        .into_iter()
        .collect()
}

/// `E_r = −φ′ / (1 + (G/c⁴)φ²)`.
pub fn corrected_field_tensor(phi: f64, dphi_dr: f64, units: &UnitsConfig) -> f64 {
    -dphi_dr / (1.0 + units.coupling() * phi * phi)
}

/// `ρ = (G/4πc⁴) E² φ`.
pub fn induced_charge_density(e_r: f64, phi: f64, units: &UnitsConfig) -> f64 {
    units.coupling() / (4.0 * PI) * e_r * e_r * phi
}

fn check_grid(grid: &[f64]) -> Result<(), ChargeError> {
    let ok = grid.len() >= 5
        && grid.iter().all(|r| *r > 0.0 && r.is_finite())
        && grid.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(ChargeError::DegenerateGrid)
    }
}

/// Largest relative residual of `(1/r²) d(r² E_r)/dr − 4πρ`, the derivative
/// taken by second-order differences on the closed form, over interior nodes.
pub fn gauss_residual(model: &ChargeModel, grid: &[f64]) -> Result<f64, ChargeError> {
    check_grid(grid)?;
    if model.q == 0.0 {
        return Ok(0.0);
    }
    let samples: Vec<FieldSample> = grid
        .iter()
        .map(|&r| exact_solution(r, model))
        .collect::<Result<_, _>>()?;
    let flux: Vec<f64> = samples.iter().map(|s| s.r * s.r * s.e_r).collect();
    let mut worst = 0.0f64;
    for i in 1..grid.len() - 1 {
        let d = nonuniform_centered(
            flux[i - 1],
            flux[i],
            flux[i + 1],
            grid[i] - grid[i - 1],
            grid[i + 1] - grid[i],
        );
        let div = d / (grid[i] * grid[i]);
        let source = 4.0 * PI * samples[i].rho;
        let residual = if source == 0.0 {
            div.abs()
        } else {
            ((div - source) / source).abs()
        };
        worst = worst.max(residual);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `∫ E²/8π d³x` over all space, by quadrature.
    pub field_energy: f64,
    /// `∫ ½ρφ d³x` over `r ≥ r_min`, by quadrature.
    pub self_energy: f64,
    pub closed_form_field_energy: f64,
    pub closed_form_self_energy: f64,
}

impl EnergyReport {
    /// `∫ (E²/8π − ½ρφ) d³x` above `r_min`.
    pub fn total_energy(&self) -> f64 {
        self.field_energy - self.self_energy
    }
}

/// `(q²/2|α|)(U − tanh U)` with `U = |α|/r_min`.
pub fn closed_form_self_energy(model: &ChargeModel, r_min: f64) -> f64 {
    if model.q == 0.0 {
        return 0.0;
    }
    let a = model.alpha.abs();
    let u = a / r_min;
    model.q * model.q / (2.0 * a) * (u - u.tanh())
}

/// `|q| c²/(2√G)`.
pub fn closed_form_field_energy(model: &ChargeModel) -> f64 {
    model.q.abs() / (2.0 * model.units.potential_scale())
}

/// Both energy integrals by quadrature in `u = |α|/r`, where
/// `dr = −|α|/u² du` maps `r ∈ (0, ∞)` onto `u ∈ (0, ∞)` and `r ≥ r_min`
/// onto `u ≤ |α|/r_min`.
pub fn energy_report(
    model: &ChargeModel,
    r_min: f64,
    tol: f64,
) -> Result<EnergyReport, ChargeError> {
    if !(r_min > 0.0 && r_min.is_finite()) {
        return Err(ChargeError::Domain(r_min));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(ChargeError::InvalidTolerance(tol));
    }
    let closed_form_field_energy = closed_form_field_energy(model);
    let closed_form_self_energy = closed_form_self_energy(model, r_min);
    if model.q == 0.0 {
        return Ok(EnergyReport {
            field_energy: 0.0,
            self_energy: 0.0,
            closed_form_field_energy,
            closed_form_self_energy,
        });
    }

    let a = model.alpha.abs();
    let jacobian = |u: f64| a / (u * u);

    let field_density = |u: f64| {
        let r = a / u;
        match exact_solution(r, model) {
            Ok(s) => s.e_r * s.e_r / (8.0 * PI) * 4.0 * PI * r * r * jacobian(u),
            Err(_) => f64::NAN,
        }
    };
    let field = quad_semi_infinite(field_density, 0.0, tol)?;

    let self_density = |u: f64| {
        let r = a / u;
        match self_interaction_density(r, model) {
            Ok(rho_phi) => 0.5 * rho_phi * 4.0 * PI * r * r * jacobian(u),
            Err(_) => f64::NAN,
        }
    };
    let u_max = a / r_min;
    // tanh² saturates within u ≈ 20; octave breakpoints keep that region
    // resolved however large u_max is.
    let mut points = vec![0.0];
    let mut edge = 1.0_f64.min(u_max);
    while edge < u_max {
        points.push(edge);
        edge *= 2.0;
    }
    points.push(u_max);
    let selfe = quad_breakpoints(self_density, &points, tol)?;

    Ok(EnergyReport {
        field_energy: field.value,
        self_energy: selfe.value,
        closed_form_field_energy,
        closed_form_self_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coulomb_limit() {
        let m = ChargeModel::unit();
        let s = exact_solution(100.0, &m).unwrap();
        assert!((s.e_r - 1.0 / (0.01f64.cosh() * 1e4)).abs() < 1e-18);
        assert!((s.r * s.r * s.e_r - 1.0).abs() < 5e-5);
    }

    #[test]
    fn coulomb_recovery_is_monotone_from_below() {
        let m = ChargeModel::unit();
        let mut prev = 0.0;
        for k in 0..60 {
            let r = 0.1 * 1.2f64.powi(k);
            let s = exact_solution(r, &m).unwrap();
            let ratio = r * r * s.e_r / m.q;
            assert!(ratio < 1.0 && ratio > prev, "r={r}");
            prev = ratio;
        }
    }

    #[test]
    fn regular_at_the_origin() {
        let m = ChargeModel::unit();
        let s = exact_solution(m.alpha / 50.0, &m).unwrap();
        assert!(s.e_r < 1e-12 && s.rho < 1e-12);
        assert!(s.e_r > 0.0 && s.rho > 0.0);
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for k in [10.0, 20.0, 50.0, 100.0, 300.0, 600.0] {
            let s = exact_solution(m.alpha / k, &m).unwrap();
            assert!(s.e_r < prev.0 && s.rho < prev.1);
            prev = (s.e_r, s.rho);
        }
    }

    #[test]
    fn asymptotic_branch_is_continuous() {
        let m = ChargeModel::unit();
        let eps = 1e-9;
        let below = exact_solution(m.alpha / (ASYMPTOTIC_SWITCH - eps), &m).unwrap();
        let above = exact_solution(m.alpha / (ASYMPTOTIC_SWITCH + eps), &m).unwrap();
        assert!(((below.e_r - above.e_r) / below.e_r).abs() < 1e-7);
        assert!(((below.rho - above.rho) / below.rho).abs() < 1e-7);
    }

    #[test]
    fn zero_charge() {
        let m = ChargeModel::new(0.0, UnitsConfig::default());
        for r in [1e-3, 1.0, 1e3] {
            let s = exact_solution(r, &m).unwrap();
            assert_eq!((s.phi, s.e_r, s.rho), (0.0, 0.0, 0.0));
        }
        assert_eq!(gauss_residual(&m, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 0.0);
        let e = energy_report(&m, 1e-3, 1e-8).unwrap();
        assert_eq!((e.field_energy, e.self_energy), (0.0, 0.0));
    }

    #[test]
    fn domain_errors() {
        let m = ChargeModel::unit();
        assert_eq!(exact_solution(0.0, &m), Err(ChargeError::Domain(0.0)));
        assert!(exact_solution(-1.0, &m).is_err());
        assert_eq!(
            gauss_residual(&m, &[1.0, 2.0, 3.0]),
            Err(ChargeError::DegenerateGrid)
        );
        assert_eq!(
            gauss_residual(&m, &[1.0, 2.0, 2.0, 3.0, 4.0]),
            Err(ChargeError::DegenerateGrid)
        );
        assert!(UnitsConfig::new(0.0, 1.0).is_err());
    }

    #[test]
    fn correction_factor_reproduces_closed_form_field() {
        let units = UnitsConfig::default();
        assert_eq!(corrected_field_tensor(0.0, -2.5, &units), 2.5);
        // At r = α: φ = sinh 1, φ' = -cosh 1 / α (α = 1), E_r = 1/cosh 1.
        let e = corrected_field_tensor(1f64.sinh(), -(1f64.cosh()), &units);
        assert!((e - 1.0 / 1f64.cosh()).abs() < 1e-15);
        let s = exact_solution(1.0, &ChargeModel::unit()).unwrap();
        assert!((e - s.e_r).abs() < 1e-15);
        // Strong coupling: E ≈ -φ'/(κφ²).
        let e = corrected_field_tensor(1e4, -1.0, &units);
        assert!((e * 1e8 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn corrected_field_with_general_units() {
        let units = UnitsConfig::new(2.0, 3.0).unwrap();
        let m = ChargeModel::new(1.7, units);
        for r in [0.05, 0.2, 1.0, 4.0] {
            // φ' by differentiating the closed form: -(c²/√G) cosh(α/r) α/r².
            let x = m.alpha / r;
            let dphi = -x.cosh() * m.alpha / (r * r) / units.potential_scale();
            let s = exact_solution(r, &m).unwrap();
            let e = corrected_field_tensor(s.phi, dphi, &units);
            assert!(((e - s.e_r) / s.e_r).abs() < 1e-13, "r={r}");
        }
    }

    #[test]
    fn induced_density_matches_closed_form() {
        let units = UnitsConfig::default();
        assert_eq!(induced_charge_density(0.0, 5.0, &units), 0.0);
        let rho = induced_charge_density(1.0 / 1f64.cosh(), 1f64.sinh(), &units);
        let expected = 1.0 / (4.0 * PI) * 1f64.sinh() / 1f64.cosh().powi(2);
        assert!((rho - expected).abs() < 1e-16);

        let m = ChargeModel::new(0.8, UnitsConfig::new(1.5, 0.7).unwrap());
        for k in 0..40 {
            let r = 0.05 * 1.25f64.powi(k);
            let s = exact_solution(r, &m).unwrap();
            let rho = induced_charge_density(s.e_r, s.phi, &m.units);
            assert!(((rho - s.rho) / s.rho).abs() < 1e-14, "r={r}");
        }
    }

    #[test]
    fn self_interaction_density_matches_product() {
        let m = ChargeModel::unit();
        for r in [0.1, 0.5, 1.0, 7.0] {
            let s = exact_solution(r, &m).unwrap();
            assert!(
                ((s.rho * s.phi - self_interaction_density(r, &m).unwrap()) / (s.rho * s.phi))
                    .abs()
                    < 1e-14
            );
        }
    }

    fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn gauss_law_converges_at_second_order() {
        let m = ChargeModel::unit();
        let coarse = gauss_residual(&m, &log_grid(0.1, 10.0, 101)).unwrap();
        let fine = gauss_residual(&m, &log_grid(0.1, 10.0, 201)).unwrap();
        let ratio = coarse / fine;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn energies_match_closed_forms() {
        let m = ChargeModel::unit();
        let e = energy_report(&m, 1e-3, 1e-10).unwrap();
        assert!((e.field_energy - 0.5).abs() < 1e-8);
        assert_eq!(e.closed_form_field_energy, 0.5);
        let expected = 0.5 * (1000.0 - 1000f64.tanh());
        assert!(((e.self_energy - expected) / expected).abs() < 1e-6);
        assert!((e.closed_form_self_energy - 499.5).abs() < 1e-12);
    }

    #[test]
    fn energies_in_general_units_and_negative_charge() {
        let units = UnitsConfig::new(0.5, 2.0).unwrap();
        let m = ChargeModel::new(-3.0, units);
        let e = energy_report(&m, 0.01, 1e-10).unwrap();
        assert!(
            ((e.field_energy - e.closed_form_field_energy) / e.closed_form_field_energy).abs()
                < 1e-8
        );
        assert!(
            ((e.self_energy - e.closed_form_self_energy) / e.closed_form_self_energy).abs() < 1e-8
        );
    }

    #[test]
    fn self_energy_diverges_like_inverse_radius() {
        let m = ChargeModel::unit();
        let r_min = 1e-3;
        let a = energy_report(&m, r_min, 1e-10).unwrap().self_energy;
        let b = energy_report(&m, r_min / 2.0, 1e-10).unwrap().self_energy;
        assert!(b > a);
        let increment = b - a;
        let expected = 0.5 / r_min;
        assert!(((increment - expected) / expected).abs() < 1e-6);
    }
}
