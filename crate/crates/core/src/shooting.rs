//! Shooting solver for the regular gravitoelectric charge.
//!
//! With `φ = (c²/√G) sinh(η/2)` the static Maxwell equation with the quartic
//! quantum potential reduces to
//!
//! ```text
//! (1/r²)(r² η′)′ = −λ̃ sinh η [sinh²(η/2) − m²],   η(0) = η₀,  η′(0) = 0.
//! ```
//!
//! Read as a particle moving in "time" `r` with friction `2η′/r`, the
//! right side is `−W′(η)` for an even potential `W` with a hilltop at `η = 0`
//! (false vacuum) and valleys at `η = ±arccosh(1 + 2m²)` (true vacua).
//! Starting too low the particle falls back into the valley (undershoot);
//! starting too high it rolls past the hilltop (overshoot). The special
//! regular solution sits at the crossover `η*₀` and decays with the Yukawa
//! law `η ∝ e^{−μr}/r`, `μ = m√λ̃`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::charge::UnitsConfig;
use crate::numerics::diff::{self, DiffError};
use crate::numerics::ode::{
    rk_integrate_observed, BlowUpReason, Controls, Flow, OdeError, OdeState, Sampling,
};
use crate::numerics::root::{bisect_classified, BisectError, Side};
use crate::par::{self, Execution};

pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_R_MAX: f64 = 80.0;
pub const DEFAULT_BRACKET: (f64, f64) = (0.2, 2.0);
pub const DEFAULT_TOL: f64 = 1e-5;
/// A turning point counts as undershoot only beyond this multiple of `ε`.
pub const TURN_GUARD: f64 = 10.0;
/// Classification needs `μ r_max` at least this large; below it the two
/// outcomes are not separated inside the horizon.
pub const MIN_HORIZON: f64 = 2.0;
/// Largest admissible max-abs residual of the `ln(rη)` straight-line fit.
pub const DECAY_FIT_RESIDUAL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShootError {
    #[error("coupling parameters must be positive and finite (lambda = {lambda_tilde}, m = {m})")]
    InvalidParams { lambda_tilde: f64, m: f64 },
    #[error("series start needs 0 < eps < r_max, got eps = {eps}, r_max = {r_max}")]
    InvalidStart { eps: f64, r_max: f64 },
    #[error("invalid integrator controls: {0}")]
    InvalidControls(String),
    #[error("invalid bracket: eta0 = {a} and eta0 = {b} both {side}")]
    InvalidBracket { a: f64, b: f64, side: &'static str },
    #[error("classifier ambiguity at eta0 = {eta0}: {reason}")]
    Ambiguous { eta0: f64, reason: String },
    #[error("need at least {needed} samples, trajectory has {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("fit window [{lo}, {hi}] is not covered by the trajectory (last r = {last})")]
    WindowNotReached { lo: f64, hi: f64, last: f64 },
    #[error("eta is not positive at r = {r} inside the fit window")]
    NonPositiveWindow { r: f64 },
    #[error("exponential tail model does not fit: max residual {residual:.3e} > {threshold:.1e}")]
    PoorFit { residual: f64, threshold: f64 },
}

pub fn side_name(side: Side) -> &'static str {
    match side {
        Side::Low => "undershoot",
        Side::High => "overshoot",
    }
}

/// `λ̃ = (c⁴/G)λ` and `m` with `m² = (G/c⁴)A₀²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    pub lambda_tilde: f64,
    pub m: f64,
}

impl CouplingParams {
    pub fn new(lambda_tilde: f64, m: f64) -> Result<Self, ShootError> {
        if lambda_tilde > 0.0 && m > 0.0 && lambda_tilde.is_finite() && m.is_finite() {
            Ok(Self { lambda_tilde, m })
        } else {
            Err(ShootError::InvalidParams { lambda_tilde, m })
        }
    }

    /// True vacuum `η_v = arccosh(1 + 2m²)`, where `sinh²(η_v/2) = m²`.
    pub fn vacuum_eta(&self) -> f64 {
        (1.0 + 2.0 * self.m * self.m).acosh()
    }

    /// `μ = m√λ̃`, the decay rate of the linearized tail.
    pub fn yukawa_rate(&self) -> f64 {
        self.m * self.lambda_tilde.sqrt()
    }

    /// Right side of the radial equation, `−λ̃ sinh η (sinh²(η/2) − m²)`.
    pub fn source(&self, eta: f64) -> f64 {
        let s = (0.5 * eta).sinh();
        -self.lambda_tilde * eta.sinh() * (s * s - self.m * self.m)
    }

    /// Mechanical potential `W` with `W′ = −source` and `W(0) = 0`:
    /// `λ̃ [sinh²η / 4 − (1 + 2m²) sinh²(η/2)]`.
    pub fn potential(&self, eta: f64) -> f64 {
        let s = eta.sinh();
        let h = (0.5 * eta).sinh();
        self.lambda_tilde * (0.25 * s * s - (1.0 + 2.0 * self.m * self.m) * h * h)
    }

    /// `½η′² + W(η)`; the friction term makes it non-increasing in `r`.
    pub fn mechanical_energy(&self, eta: f64, deta: f64) -> f64 {
        0.5 * deta * deta + self.potential(eta)
    }
}

/// `η″ = −(2/r)η′ − λ̃ sinh η (sinh²(η/2) − m²)`.
pub fn ode_rhs(r: f64, eta: f64, deta: f64, p: &CouplingParams) -> f64 {
    -2.0 / r * deta + p.source(eta)
}

/// Regular start off the coordinate singularity:
/// `η(ε) = η₀ + aε²`, `η′(ε) = 2aε` with `a = source(η₀)/6`.
pub fn series_start(eta0: f64, p: &CouplingParams, eps: f64) -> Result<OdeState, ShootError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ShootError::InvalidStart {
            eps,
            r_max: f64::NAN,
        });
    }
    let a = series_coefficient(eta0, p);
    Ok(OdeState::new(eps, [eta0 + a * eps * eps, 2.0 * a * eps]))
}

/// Leading Taylor coefficient `a` in `η = η₀ + ar² + …`.
pub fn series_coefficient(eta0: f64, p: &CouplingParams) -> f64 {
    p.source(eta0) / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootControls {
    pub eps: f64,
    pub r_max: f64,
    pub ode: Controls,
    /// Stop integrating at the first overshoot/undershoot event.
    pub stop_at_classification: bool,
}

impl Default for ShootControls {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            r_max: DEFAULT_R_MAX,
            ode: Controls::default(),
            stop_at_classification: true,
        }
    }
}

impl ShootControls {
    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedRMax,
    /// `η` crossed zero at radius `r`.
    Overshoot {
        r: f64,
    },
    /// `η′` turned from negative to positive with `η > 0` at radius `r`.
    Undershoot {
        r: f64,
    },
    BlowUp {
        r: f64,
        reason: BlowUpReason,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub eta0: f64,
    pub params: CouplingParams,
    /// `(r, [η, η′])`, strictly increasing in `r`.
    pub samples: Vec<OdeState>,
    pub termination: Termination,
    /// Last integrated state, whether or not it was sampled.
    pub last: OdeState,
}

impl Trajectory {
    pub fn radii(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.r).collect()
    }
}

/// Integrates from the series start and classifies the outcome. With
/// `grid`, samples exactly at those radii instead of at every step.
pub fn integrate_profile(
    eta0: f64,
    p: &CouplingParams,
    controls: &ShootControls,
) -> Result<Trajectory, ShootError> {
    integrate_sampled(eta0, p, controls, &Sampling::EveryStep)
}

pub fn integrate_profile_on_grid(
    eta0: f64,
    p: &CouplingParams,
    controls: &ShootControls,
    grid: &[f64],
) -> Result<Trajectory, ShootError> {
    integrate_sampled(eta0, p, controls, &Sampling::Grid(grid.to_vec()))
}

fn integrate_sampled(
    eta0: f64,
    p: &CouplingParams,
    controls: &ShootControls,
    sampling: &Sampling,
) -> Result<Trajectory, ShootError> {
    if !(controls.eps > 0.0 && controls.r_max > controls.eps && controls.r_max.is_finite()) {
        return Err(ShootError::InvalidStart {
            eps: controls.eps,
            r_max: controls.r_max,
        });
    }
    let start = series_start(eta0, p, controls.eps)?;
    let sign = if eta0 < 0.0 { -1.0 } else { 1.0 };
    let guard = TURN_GUARD * controls.eps;
    let mut event: Option<Termination> = None;

    let rhs = |r: f64, y: [f64; 2]| [y[1], ode_rhs(r, y[0], y[1], p)];
    let observer = |prev: &OdeState, cur: &OdeState| {
        if event.is_none() {
            if sign * cur.y[0] < 0.0 {
                event = Some(Termination::Overshoot { r: cur.r });
            } else if cur.r > guard && sign * prev.y[1] < 0.0 && sign * cur.y[1] >= 0.0 {
                event = Some(Termination::Undershoot { r: cur.r });
            }
        }
        if controls.stop_at_classification && event.is_some() {
            Flow::Stop
        } else {
            Flow::Continue
        }
    };

    // The start state itself belongs to the trajectory even on a grid.
    let result = rk_integrate_observed(
        rhs,
        start,
        controls.r_max,
        &controls.ode,
        sampling,
        observer,
    );
    let prepend_start = |mut samples: Vec<OdeState>| {
        if samples.first().is_none_or(|s| s.r > start.r) && matches!(sampling, Sampling::EveryStep)
        {
            samples.insert(0, start);
        }
        samples
    };

    match result {
        Ok(run) => Ok(Trajectory {
            eta0,
            params: *p,
            samples: prepend_start(run.samples),
            termination: event.unwrap_or(Termination::ReachedRMax),
            last: run.last,
        }),
        Err(OdeError::BlowUp {
            last,
            reason,
            samples,
        }) => Ok(Trajectory {
            eta0,
            params: *p,
            samples: prepend_start(samples),
            termination: event.unwrap_or(Termination::BlowUp { r: last.r, reason }),
            last,
        }),
        Err(OdeError::InvalidGrid) => Err(ShootError::InvalidControls(
            "profile grid must be strictly increasing inside [eps, r_max]".into(),
        )),
        Err(e) => Err(ShootError::InvalidControls(e.to_string())),
    }
}

/// Decomposition of the end state onto the two linearized tail modes
/// `rη = A e^{−μr} + B e^{μr}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailProjection {
    /// `B e^{μr}`
    pub growing: f64,
    /// `A e^{−μr}`
    pub decaying: f64,
}

pub fn tail_projection(state: &OdeState, p: &CouplingParams) -> TailProjection {
    let mu = p.yukawa_rate();
    let r = state.r;
    let [eta, deta] = state.y;
    let u = r * eta;
    let du = (eta + r * deta) / mu;
    TailProjection {
        growing: 0.5 * (u + du),
        decaying: 0.5 * (u - du),
    }
}

/// Overshoot (`High`) or undershoot (`Low`). A trajectory that reaches
/// `r_max` unclassified is resolved by the sign of its growing tail mode,
/// provided it is in the linear regime and that mode stands clear of the
/// cancellation noise.
pub fn classify(traj: &Trajectory) -> Result<Side, ShootError> {
    match traj.termination {
        Termination::Overshoot { .. } | Termination::BlowUp { .. } => Ok(Side::High),
        Termination::Undershoot { .. } => Ok(Side::Low),
        Termination::ReachedRMax => {
            let p = &traj.params;
            let sign = if traj.eta0 < 0.0 { -1.0 } else { 1.0 };
            let eta = traj.last.y[0];
            if traj.eta0 == 0.0 || eta.abs() > 0.1 * p.vacuum_eta() {
                return Err(ShootError::Ambiguous {
                    eta0: traj.eta0,
                    reason: format!(
                        "reached r_max = {} without classification and outside the linear tail regime; enlarge r_max",
                        traj.last.r
                    ),
                });
            }
            let tail = tail_projection(&traj.last, p);
            let scale = tail.growing.abs() + tail.decaying.abs();
            if tail.growing.abs() <= 1e-6 * scale {
                return Err(ShootError::Ambiguous {
                    eta0: traj.eta0,
                    reason: format!(
                        "reached r_max = {} with an unresolved tail; enlarge r_max or loosen tol",
                        traj.last.r
                    ),
                });
            }
            Ok(if sign * tail.growing > 0.0 {
                Side::Low
            } else {
                Side::High
            })
        }
    }
}

fn classify_eta0(
    eta0: f64,
    p: &CouplingParams,
    controls: &ShootControls,
) -> Result<(Side, Trajectory), ShootError> {
    let traj = integrate_profile(eta0, p, controls)?;
    Ok((classify(&traj)?, traj))
}

/// Classifies every starting value, independently and in input order.
pub fn scan_classifier(
    p: &CouplingParams,
    eta0s: &[f64],
    controls: &ShootControls,
    exec: Execution,
) -> Vec<Result<Side, ShootError>> {
    par::map_slice(eta0s, exec, |&e| {
        classify_eta0(e, p, controls).map(|(s, _)| s)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndDiagnostics {
    pub eta0: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootResult {
    pub eta0_star: f64,
    /// Final bracket `(undershooting end, overshooting end)`.
    pub bracket: (f64, f64),
    pub iterations: u32,
    pub lower: EndDiagnostics,
    pub upper: EndDiagnostics,
    /// Start of `trajectory`: the final bracket refined for as long as the
    /// classifier still resolves it.
    pub separatrix_eta0: f64,
    /// Trajectory that tracks the regular solution across the horizon.
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Bisects the overshoot/undershoot classifier down to a bracket of width `tol`.
pub fn find_regular_eta0(
    p: &CouplingParams,
    bracket: (f64, f64),
    tol: f64,
    controls: &ShootControls,
    exec: Execution,
) -> Result<ShootResult, ShootError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(ShootError::InvalidControls(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let horizon = p.yukawa_rate() * controls.r_max;
    if horizon < MIN_HORIZON {
        return Err(ShootError::Ambiguous {
            eta0: bracket.0,
            reason: format!(
                "vacuum separation degenerates: m*sqrt(lambda)*r_max = {horizon:.3} < {MIN_HORIZON}; \
                 enlarge r_max beyond {:.1}",
                MIN_HORIZON / p.yukawa_rate()
            ),
        });
    }

    let ends = par::map_slice(&[bracket.0, bracket.1], exec, |&e| {
        classify_eta0(e, p, controls)
    });
    let mut ends = ends.into_iter();
    let (side_a, traj_a) = ends.next().expect("two ends")?;
    let (side_b, traj_b) = ends.next().expect("two ends")?;
    if side_a == side_b {
        return Err(ShootError::InvalidBracket {
            a: bracket.0,
            b: bracket.1,
            side: side_name(side_a),
        });
    }
    let (low_end, high_end) = if side_a == Side::Low {
        (
            (bracket.0, traj_a.termination),
            (bracket.1, traj_b.termination),
        )
    } else {
        (
            (bracket.1, traj_b.termination),
            (bracket.0, traj_a.termination),
        )
    };

    let bisection = bisect_classified(
        |e| classify_eta0(e, p, controls).map(|(s, _)| s),
        (low_end.0, Side::Low),
        high_end.0,
        tol,
    )
    .map_err(|e| match e {
        BisectError::Predicate(inner) => inner,
        other => ShootError::InvalidControls(other.to_string()),
    })?;

    let eta0_star = bisection.root;
    let separatrix_eta0 = refine_to_separatrix(p, bisection.bracket, controls);
    let trajectory = integrate_profile(separatrix_eta0, p, controls)?;
    Ok(ShootResult {
        eta0_star,
        bracket: bisection.bracket,
        iterations: bisection.iterations,
        lower: EndDiagnostics {
            eta0: low_end.0,
            termination: low_end.1,
        },
        upper: EndDiagnostics {
            eta0: high_end.0,
            termination: high_end.1,
        },
        separatrix_eta0,
        trajectory,
    })
}

/// A start `δ` off the crossover grows a mode `∝ δ e^{μr}` that swamps the
/// decaying tail once `e^{2μr} δ ~ 1`. Keeps bisecting `(low, high)` until
/// the bracket hits float resolution or the classifier turns ambiguous.
fn refine_to_separatrix(
    p: &CouplingParams,
    (mut lo, mut hi): (f64, f64),
    controls: &ShootControls,
) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            return mid;
        }
        match classify_eta0(mid, p, controls) {
            Ok((Side::Low, _)) => lo = mid,
            Ok((Side::High, _)) => hi = mid,
            Err(_) => return mid,
        }
    }
}

/// Plot-ready fields along a trajectory. Scaled columns are dimensionless:
/// `(√G/c²)φ`, `(√G/c²)E_r`, `16π(√G/c²)ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub r: f64,
    pub eta: f64,
    pub deta_dr: f64,
    pub phi_scaled: f64,
    #[serde(rename = "E_scaled")]
    pub e_scaled: f64,
    pub rho_scaled: f64,
    pub phi: f64,
    #[serde(rename = "E_r")]
    pub e_r: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub samples: Vec<ProfileSample>,
}

/// `φ̂ = sinh(η/2)`, `Ê = −η′/(2cosh(η/2))` and `ρ̂ = 16π·(1/4π)(1/r²)(r²Ê)′`,
/// so that `div E = 4πρ` holds by construction.
pub fn derive_fields(traj: &Trajectory, units: &UnitsConfig) -> Result<Profile, ShootError> {
    let n = traj.samples.len();
    if n < 5 {
        return Err(ShootError::TooFewSamples { needed: 5, got: n });
    }
    let scale = units.potential_scale();
    let radii = traj.radii();
    let e_scaled: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| -s.y[1] / (2.0 * (0.5 * s.y[0]).cosh()))
        .collect();
    let flux: Vec<f64> = radii
        .iter()
        .zip(&e_scaled)
        .map(|(r, e)| r * r * e)
        .collect();
    let dflux = diff::derivative(&radii, &flux).map_err(|e| match e {
        DiffError::TooFewSamples { needed, got } => ShootError::TooFewSamples { needed, got },
        other => ShootError::InvalidControls(other.to_string()),
    })?;

    let samples = traj
        .samples
        .iter()
        .zip(e_scaled)
        .zip(dflux)
        .map(|((s, e), df)| {
            let r = s.r;
            let phi_scaled = (0.5 * s.y[0]).sinh();
            let rho_scaled = 4.0 * df / (r * r);
            ProfileSample {
                r,
                eta: s.y[0],
                deta_dr: s.y[1],
                phi_scaled,
                e_scaled: e,
                rho_scaled,
                phi: phi_scaled / scale,
                e_r: e / scale,
                rho: rho_scaled / (16.0 * PI * scale),
            }
        })
        .collect();
    Ok(Profile { samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub mu: f64,
    /// Largest `|ln(rη) − fit|` over the window.
    pub max_residual: f64,
    pub points: usize,
}

/// Least-squares slope of `ln(rη)` against `r` over the window; `μ = −slope`.
pub fn decay_rate(traj: &Trajectory, window: (f64, f64)) -> Result<DecayFit, ShootError> {
    let (lo, hi) = window;
    let last = traj.samples.last().map_or(f64::NAN, |s| s.r);
    if !(lo < hi) || !(last >= hi) {
        return Err(ShootError::WindowNotReached { lo, hi, last });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in traj.samples.iter().filter(|s| s.r >= lo && s.r <= hi) {
        if !(s.y[0] > 0.0) {
            return Err(ShootError::NonPositiveWindow { r: s.r });
        }
        xs.push(s.r);
        ys.push((s.r * s.y[0]).ln());
    }
    if xs.len() < 3 {
        return Err(ShootError::TooFewSamples {
            needed: 3,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    if max_residual > DECAY_FIT_RESIDUAL {
        return Err(ShootError::PoorFit {
            residual: max_residual,
            threshold: DECAY_FIT_RESIDUAL,
        });
    }
    Ok(DecayFit {
        mu: -slope,
        max_residual,
        points: xs.len(),
    })
}
