//! Adaptive Gauss–Kronrod (7, 15) quadrature.
//!
//! Intervals are bisected greedily, largest error first, until the summed
//! error estimate drops below `max(tol, tol * |value|)` or the evaluation
//! budget runs out. The per-interval error estimate follows the QUADPACK
//! `qk15` heuristic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

/// Kronrod abscissae on [-1, 1], non-negative half. Odd indices are the
/// embedded 7-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Default cap on integrand evaluations (15 per panel).
pub const DEFAULT_MAX_EVALUATIONS: usize = 15 * 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// Absolute error estimate, always non-negative.
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid integration interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
    #[error(
        "quadrature budget exceeded after {} evaluations (partial value {}, error estimate {})",
        partial.evaluations, partial.value, partial.error_estimate
    )]
    BudgetExceeded { partial: QuadResult },
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64, QuadError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadError::NonFinite { x })
        }
    };

    let fc = eval(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kronrod;
    let mut resasc = WGK[7] * (fc - mean).abs();
    let mut resabs = WGK[7] * fc.abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
        resabs += WGK[j] * (fv1[j].abs() + fv2[j].abs());
    }
    let resasc = resasc * half.abs();
    let resabs = resabs * half.abs();

    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && roundoff > error {
        error = roundoff;
    }

    Ok(Panel {
        a,
        b,
        value: kronrod * half,
        error,
    })
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn quad_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    quad_adaptive_with_budget(f, a, b, tol, DEFAULT_MAX_EVALUATIONS)
}

pub fn quad_adaptive_with_budget<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_evaluations: usize,
) -> Result<QuadResult, QuadError> {
    quad_breakpoints_with_budget(f, &[a, b], tol, max_evaluations)
}

/// Integrates over `[points[0], points[last]]` starting from one panel per
/// consecutive pair of breakpoints. Use it when the integrand has structure
/// on a scale much smaller than the interval, which a single 15-point panel
/// can step over without noticing.
pub fn quad_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: f64,
) -> Result<QuadResult, QuadError> {
    quad_breakpoints_with_budget(f, points, tol, DEFAULT_MAX_EVALUATIONS)
}

pub fn quad_breakpoints_with_budget<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: f64,
    max_evaluations: usize,
) -> Result<QuadResult, QuadError> {
    let (a, b) = match points {
        [first, .., last] => (*first, *last),
        _ => {
            return Err(QuadError::InvalidInterval {
                a: f64::NAN,
                b: f64::NAN,
            })
        }
    };
    if !points.iter().all(|x| x.is_finite()) || !points.windows(2).all(|w| w[0] < w[1]) {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(QuadError::InvalidTolerance(tol));
    }

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let mut value = 0.0;
    let mut error = 0.0;
    for w in points.windows(2) {
        let panel = kronrod_panel(&f, w[0], w[1])?;
        evaluations += 15;
        value += panel.value;
        error += panel.error;
        heap.push(panel);
    }

    loop {
        if error <= tol.max(tol * value.abs()) {
            return Ok(QuadResult {
                value,
                error_estimate: error,
                evaluations,
            });
        }
        if evaluations + 30 > max_evaluations {
            return Err(QuadError::BudgetExceeded {
                partial: QuadResult {
                    value,
                    error_estimate: error,
                    evaluations,
                },
            });
        }
        let Some(worst) = heap.pop() else {
            unreachable!("panel heap is never empty")
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel collapsed to adjacent floats; nothing left to refine.
            return Err(QuadError::BudgetExceeded {
                partial: QuadResult {
                    value,
                    error_estimate: error,
                    evaluations,
                },
            });
        }
        let left = kronrod_panel(&f, worst.a, mid)?;
        let right = kronrod_panel(&f, mid, worst.b)?;
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);

        // Re-sum occasionally so the running totals do not drift.
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
}

/// Integrates `f` over `[a, ∞)` with `a ≥ 0`.
///
/// The tail beyond `max(a, 1)` is mapped onto a finite interval with
/// `u = 1/r`, so `∫_c^∞ f(r) dr = ∫_0^{1/c} f(1/u) / u² du`. Gauss nodes never
/// touch `u = 0`, but `f` must decay fast enough that `f(1/u)/u²` stays finite.
pub fn quad_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(QuadError::InvalidInterval {
            a,
            b: f64::INFINITY,
        });
    }
    let split = a.max(1.0);
    let tail = |u: f64| {
        let r = 1.0 / u;
        let y = f(r);
        if y == 0.0 {
            0.0
        } else {
            y * r * r
        }
    };
    let upper = quad_adaptive(tail, 0.0, 1.0 / split, 0.5 * tol)?;
    if split > a {
        let lower = quad_adaptive(&f, a, split, 0.5 * tol)?;
        Ok(QuadResult {
            value: lower.value + upper.value,
            error_estimate: lower.error_estimate + upper.error_estimate,
            evaluations: lower.evaluations + upper.evaluations,
        })
    } else {
        Ok(upper)
    }
}
