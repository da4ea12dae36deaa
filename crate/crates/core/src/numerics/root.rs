//! Bracketing bisection on a two-way classifier.

use serde::Serialize;
use thiserror::Error;

/// Which side of the sought transition a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bisection {
    /// Midpoint of the final bracket.
    pub root: f64,
    /// Final bracket, ordered as (classified like the original lower end, the other).
    pub bracket: (f64, f64),
    pub iterations: u32,
}

impl Bisection {
    pub fn width(&self) -> f64 {
        (self.bracket.1 - self.bracket.0).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BisectError<E> {
    #[error("invalid bracket: both ends ({a}, {b}) classify as {side:?}")]
    InvalidBracket { a: f64, b: f64, side: Side },
    #[error("bisection tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Predicate(E),
}

/// Number of halvings needed to shrink `width` to at most `tol`.
pub fn iterations_needed(width: f64, tol: f64) -> u32 {
    if width <= tol {
        0
    } else {
        (width / tol).log2().ceil() as u32
    }
}

/// Bisection with an infallible classifier.
pub fn bisect<P>(
    mut predicate: P,
    bracket: (f64, f64),
    tol: f64,
) -> Result<Bisection, BisectError<std::convert::Infallible>>
where
    P: FnMut(f64) -> Side,
{
    try_bisect(|x| Ok(predicate(x)), bracket, tol)
}

/// Bisection with a classifier that may fail; failures abort the search.
pub fn try_bisect<P, E>(
    mut predicate: P,
    bracket: (f64, f64),
    tol: f64,
) -> Result<Bisection, BisectError<E>>
where
    P: FnMut(f64) -> Result<Side, E>,
{
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(BisectError::InvalidTolerance(tol));
    }
    let (a, b) = bracket;
    let side_a = predicate(a).map_err(BisectError::Predicate)?;
    let side_b = predicate(b).map_err(BisectError::Predicate)?;
    if side_a == side_b {
        return Err(BisectError::InvalidBracket { a, b, side: side_a });
    }
    bisect_classified(predicate, (a, side_a), b, tol)
}

/// Bisection when the end classifications are already known to differ.
pub(crate) fn bisect_classified<P, E>(
    mut predicate: P,
    (mut a, side_a): (f64, Side),
    mut b: f64,
    tol: f64,
) -> Result<Bisection, BisectError<E>>
where
    P: FnMut(f64) -> Result<Side, E>,
{
    let mut iterations = 0;
    while (b - a).abs() > tol {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if predicate(mid).map_err(BisectError::Predicate)? == side_a {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    Ok(Bisection {
        root: 0.5 * (a + b),
        bracket: (a, b),
        iterations,
    })
}
