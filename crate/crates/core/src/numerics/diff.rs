//! Second-order finite differences.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("abscissae must be finite and strictly increasing")]
    NotIncreasing,
    #[error("abscissae and ordinates differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Centered first derivative from samples at `x - h` and `x + h`.
#[inline]
pub fn centered(f_minus: f64, f_plus: f64, h: f64) -> f64 {
    (f_plus - f_minus) / (2.0 * h)
}

/// First derivative at the interior node `x_i` of a possibly non-uniform
/// grid, exact for quadratics: with `h₋ = x_i − x_{i−1}` and
/// `h₊ = x_{i+1} − x_i`.
#[inline]
pub fn nonuniform_centered(f_prev: f64, f_mid: f64, f_next: f64, h_minus: f64, h_plus: f64) -> f64 {
    (h_minus * h_minus * f_next - h_plus * h_plus * f_prev
        + (h_plus * h_plus - h_minus * h_minus) * f_mid)
        / (h_plus * h_minus * (h_plus + h_minus))
}

fn check(xs: &[f64], ys: &[f64], needed: usize) -> Result<(), DiffError> {
    if xs.len() != ys.len() {
        return Err(DiffError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < needed {
        return Err(DiffError::TooFewSamples {
            needed,
            got: xs.len(),
        });
    }
    if !xs.iter().all(|x| x.is_finite()) || !xs.windows(2).all(|w| w[0] < w[1]) {
        return Err(DiffError::NotIncreasing);
    }
    Ok(())
}

/// Derivative at interior nodes only; element `i` of the output belongs to `xs[i + 1]`.
pub fn interior_derivative(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>, DiffError> {
    check(xs, ys, 3)?;
    Ok((1..xs.len() - 1)
        .map(|i| {
            nonuniform_centered(
                ys[i - 1],
                ys[i],
                ys[i + 1],
                xs[i] - xs[i - 1],
                xs[i + 1] - xs[i],
            )
        })
        .collect())
}

/// Derivative at every node: centered in the interior, second-order
/// one-sided three-point formulas at both ends.
pub fn derivative(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>, DiffError> {
    check(xs, ys, 3)?;
    let n = xs.len();
    let mut out = Vec::with_capacity(n);
    out.push(one_sided(xs[0], xs[1], xs[2], ys[0], ys[1], ys[2]));
    out.extend(interior_derivative(xs, ys)?);
    out.push(one_sided(
        xs[n - 1],
        xs[n - 2],
        xs[n - 3],
        ys[n - 1],
        ys[n - 2],
        ys[n - 3],
    ));
    Ok(out)
}

/// Derivative at `x0` of the parabola through three points.
fn one_sided(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> f64 {
    let d1 = x1 - x0;
    let d2 = x2 - x0;
    // Lagrange basis derivatives evaluated at x0.
    let l0 = -(d1 + d2) / (d1 * d2);
    let l1 = d2 / (d1 * (d2 - d1));
    let l2 = -d1 / (d2 * (d2 - d1));
    l0 * y0 + l1 * y1 + l2 * y2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quadratics_for_any_spacing() {
        let xs = [0.1, 0.3, 0.35, 0.9, 1.7, 1.75];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x - 2.0 * x + 0.5).collect();
        let d = derivative(&xs, &ys).unwrap();
        for (x, dx) in xs.iter().zip(&d) {
            assert!((dx - (6.0 * x - 2.0)).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn centered_is_second_order() {
        let err = |h: f64| (centered((1.0 - h).sin(), (1.0 + h).sin(), h) - 1f64.cos()).abs();
        let ratio = err(1e-2) / err(5e-3);
        assert!((3.9..4.1).contains(&ratio));
    }

    #[test]
    fn rejects_short_or_unsorted_input() {
        assert!(matches!(
            derivative(&[0.0, 1.0], &[0.0, 1.0]),
            Err(DiffError::TooFewSamples { .. })
        ));
        assert_eq!(
            derivative(&[0.0, 2.0, 1.0], &[0.0, 1.0, 2.0]),
            Err(DiffError::NotIncreasing)
        );
    }
}
