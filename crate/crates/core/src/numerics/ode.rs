//! Explicit Runge–Kutta integration of second-order scalar problems written
//! as first-order pairs `y = (η, η′)` in a radial coordinate `r > 0`.
//!
//! Two steppers are available: classic fixed-step RK4, and the adaptive
//! Dormand–Prince 5(4) pair with local extrapolation.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeState {
    pub r: f64,
    pub y: [f64; 2],
}

impl OdeState {
    pub fn new(r: f64, y: [f64; 2]) -> Self {
        Self { r, y }
    }

    fn is_finite(&self) -> bool {
        self.r.is_finite() && self.y.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepping {
    Fixed {
        h: f64,
    },
    Adaptive {
        rtol: f64,
        atol: f64,
        /// Initial trial step; `None` picks one from the interval length.
        h_initial: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub stepping: Stepping,
    pub max_steps: usize,
    /// Smallest admissible adaptive step before reporting underflow.
    pub h_min: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            stepping: Stepping::Adaptive {
                rtol: 1e-10,
                atol: 1e-12,
                h_initial: None,
            },
            max_steps: 2_000_000,
            h_min: 1e-14,
        }
    }
}

impl Controls {
    pub fn fixed(h: f64) -> Self {
        Self {
            stepping: Stepping::Fixed { h },
            ..Self::default()
        }
    }

    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        Self {
            stepping: Stepping::Adaptive {
                rtol,
                atol,
                h_initial: None,
            },
            ..Self::default()
        }
    }
}

/// Which states end up in the returned trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Sampling {
    /// The initial state and every accepted step.
    #[default]
    EveryStep,
    /// Exactly these radii (strictly increasing); steps are clipped to land on them.
    Grid(Vec<f64>),
}

/// Observer verdict after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpReason {
    NonFinite,
    StepUnderflow,
    StepBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeRun {
    pub samples: Vec<OdeState>,
    /// Last accepted state (equal to the final sample under `EveryStep`).
    pub last: OdeState,
    pub stopped_by_observer: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("invalid start: r0 = {r0} must be positive, finite and below r_end = {r_end}")]
    InvalidStart { r0: f64, r_end: f64 },
    #[error("invalid controls: {0}")]
    InvalidControls(&'static str),
    #[error("sampling grid must be strictly increasing inside [r0, r_end]")]
    InvalidGrid,
    #[error("integration blow-up ({reason:?}) after r = {}", last.r)]
    BlowUp {
        last: OdeState,
        reason: BlowUpReason,
        samples: Vec<OdeState>,
    },
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: [f64; 2], terms: &[(f64, [f64; 2])]) -> [f64; 2] {
    let mut out = y;
    for (c, k) in terms {
        out[0] += c * k[0];
        out[1] += c * k[1];
    }
    out
}

fn rk4_step<F>(rhs: &F, r: f64, y: [f64; 2], h: f64) -> [f64; 2]
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    let k1 = rhs(r, y);
    let k2 = rhs(r + 0.5 * h, axpy(y, &[(0.5 * h, k1)]));
    let k3 = rhs(r + 0.5 * h, axpy(y, &[(0.5 * h, k2)]));
    let k4 = rhs(r + h, axpy(y, &[(h, k3)]));
    axpy(
        y,
        &[(h / 6.0, k1), (h / 3.0, k2), (h / 3.0, k3), (h / 6.0, k4)],
    )
}

/// One Dormand–Prince step; returns the fifth-order solution and the
/// componentwise error estimate.
fn dopri_step<F>(rhs: &F, r: f64, y: [f64; 2], h: f64) -> ([f64; 2], [f64; 2])
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    let k1 = rhs(r, y);
    let k2 = rhs(r + C2 * h, axpy(y, &[(h * A21, k1)]));
    let k3 = rhs(r + C3 * h, axpy(y, &[(h * A31, k1), (h * A32, k2)]));
    let k4 = rhs(
        r + C4 * h,
        axpy(y, &[(h * A41, k1), (h * A42, k2), (h * A43, k3)]),
    );
    let k5 = rhs(
        r + C5 * h,
        axpy(
            y,
            &[(h * A51, k1), (h * A52, k2), (h * A53, k3), (h * A54, k4)],
        ),
    );
    let k6 = rhs(
        r + h,
        axpy(
            y,
            &[
                (h * A61, k1),
                (h * A62, k2),
                (h * A63, k3),
                (h * A64, k4),
                (h * A65, k5),
            ],
        ),
    );
    let y_new = axpy(
        y,
        &[
            (h * B1, k1),
            (h * B3, k3),
            (h * B4, k4),
            (h * B5, k5),
            (h * B6, k6),
        ],
    );
    let k7 = rhs(r + h, y_new);
    let err = axpy(
        [0.0, 0.0],
        &[
            (h * E1, k1),
            (h * E3, k3),
            (h * E4, k4),
            (h * E5, k5),
            (h * E6, k6),
            (h * E7, k7),
        ],
    );
    (y_new, err)
}

/// Integrates from `state0` to `r_end`, sampling every accepted step.
pub fn rk_integrate<F>(
    rhs: F,
    state0: OdeState,
    r_end: f64,
    controls: &Controls,
) -> Result<OdeRun, OdeError>
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    rk_integrate_observed(
        rhs,
        state0,
        r_end,
        controls,
        &Sampling::EveryStep,
        |_, _| Flow::Continue,
    )
}

/// Integrates from `state0` to `r_end`, calling `observer(previous, current)`
/// after each accepted step. The observer may stop the integration early.
pub fn rk_integrate_observed<F, O>(
    rhs: F,
    state0: OdeState,
    r_end: f64,
    controls: &Controls,
    sampling: &Sampling,
    mut observer: O,
) -> Result<OdeRun, OdeError>
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
    O: FnMut(&OdeState, &OdeState) -> Flow,
{
    let r0 = state0.r;
    if !(r0 > 0.0 && r0.is_finite() && r_end.is_finite() && r_end > r0) {
        return Err(OdeError::InvalidStart { r0, r_end });
    }
    if controls.max_steps == 0 {
        return Err(OdeError::InvalidControls("max_steps must be positive"));
    }
    match controls.stepping {
        Stepping::Fixed { h } if !(h > 0.0 && h.is_finite()) => {
            return Err(OdeError::InvalidControls("fixed step must be positive"))
        }
        Stepping::Adaptive { rtol, atol, .. } if !(rtol > 0.0 && atol >= 0.0) => {
            return Err(OdeError::InvalidControls("tolerances must be positive"))
        }
        _ => {}
    }

    let grid: &[f64] = match sampling {
        Sampling::EveryStep => &[],
        Sampling::Grid(points) => {
            let ok = points.windows(2).all(|w| w[0] < w[1])
                && points.first().is_none_or(|&p| p >= r0)
                && points.last().is_none_or(|&p| p <= r_end);
            if !ok {
                return Err(OdeError::InvalidGrid);
            }
            points
        }
    };
    let every_step = matches!(sampling, Sampling::EveryStep);

    let mut samples = Vec::new();
    let mut next_grid = 0;
    if every_step {
        samples.push(state0);
    } else if grid.first() == Some(&r0) {
        samples.push(state0);
        next_grid = 1;
    }

    let blow_up = |last: OdeState, reason, samples: Vec<OdeState>| OdeError::BlowUp {
        last,
        reason,
        samples,
    };

    if !state0.is_finite() || !rhs(r0, state0.y).iter().all(|v| v.is_finite()) {
        return Err(blow_up(state0, BlowUpReason::NonFinite, samples));
    }

    let mut current = state0;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut h = match controls.stepping {
        Stepping::Fixed { h } => h,
        Stepping::Adaptive { h_initial, .. } => {
            h_initial.unwrap_or_else(|| (1e-6 * (r_end - r0)).max(0.1 * r0))
        }
    };

    while current.r < r_end {
        if accepted + rejected >= controls.max_steps {
            return Err(blow_up(current, BlowUpReason::StepBudget, samples));
        }
        let target = grid.get(next_grid).copied().unwrap_or(r_end);
        let remaining = target - current.r;
        let clipped = h >= remaining;
        let step = if clipped { remaining } else { h };

        let (y_new, accept, h_next) = match controls.stepping {
            Stepping::Fixed { .. } => (rk4_step(&rhs, current.r, current.y, step), true, h),
            Stepping::Adaptive { rtol, atol, .. } => {
                let (y_new, err) = dopri_step(&rhs, current.r, current.y, step);
                let mut norm = 0.0f64;
                for i in 0..2 {
                    let scale = atol + rtol * current.y[i].abs().max(y_new[i].abs());
                    norm = norm.max((err[i] / scale).abs());
                }
                // f64::max drops NaN, so finiteness is checked on the inputs.
                let finite = y_new.iter().chain(&err).all(|v| v.is_finite());
                if !finite || !norm.is_finite() {
                    (y_new, false, 0.25 * step)
                } else {
                    let factor = if norm == 0.0 {
                        5.0
                    } else {
                        (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    let accept = norm <= 1.0;
                    // An accepted clipped step keeps the natural step length.
                    let h_next = if clipped && accept { h } else { step * factor };
                    (y_new, accept, h_next)
                }
            }
        };

        if !accept {
            rejected += 1;
            if h_next < controls.h_min {
                let reason = if y_new.iter().all(|v| v.is_finite()) {
                    BlowUpReason::StepUnderflow
                } else {
                    BlowUpReason::NonFinite
                };
                return Err(blow_up(current, reason, samples));
            }
            h = h_next;
            continue;
        }

        let r_new = if clipped { target } else { current.r + step };
        let next = OdeState::new(r_new, y_new);
        if !next.is_finite() {
            return Err(blow_up(current, BlowUpReason::NonFinite, samples));
        }
        accepted += 1;
        let previous = current;
        current = next;
        if every_step {
            samples.push(current);
        } else if clipped && next_grid < grid.len() {
            samples.push(current);
            next_grid += 1;
        }
        h = h_next;

        if observer(&previous, &current) == Flow::Stop {
            return Ok(OdeRun {
                samples,
                last: current,
                stopped_by_observer: true,
                accepted_steps: accepted,
                rejected_steps: rejected,
            });
        }
    }

    Ok(OdeRun {
        samples,
        last: current,
        stopped_by_observer: false,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}
