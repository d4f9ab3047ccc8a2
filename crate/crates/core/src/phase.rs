//! Circle arithmetic shared by the phase-level modules.

use crate::TWO_PI;
use std::f64::consts::PI;

/// Wraps onto `[0, 2π)`.
#[inline]
pub fn wrap_2pi(x: f64) -> f64 {
    let r = x.rem_euclid(TWO_PI);
    // rem_euclid may round up to exactly 2π for tiny negative inputs
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Wraps onto `(-π, π]`.
#[inline]
pub fn wrap_pi(x: f64) -> f64 {
    let r = wrap_2pi(x);
    if r > PI {
        r - TWO_PI
    } else {
        r
    }
}

/// Shortest angular distance between two phases.
#[inline]
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_pi(a - b).abs()
}

/// The contraction metric of ordered phase configurations:
/// `|x₁| + Σ|x_k − x_{k+1}| + |x_{N−1}|`.
///
/// Applied to a difference of two configurations it measures how far apart
/// the consecutive gaps are.
pub fn gap_norm(x: &[f64]) -> f64 {
    match x {
        [] => 0.0,
        [first, ..] => {
            let inner: f64 = x.windows(2).map(|w| (w[0] - w[1]).abs()).sum();
            first.abs() + inner + x[x.len() - 1].abs()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_ranges() {
        assert_eq!(wrap_2pi(-1e-300), 0.0);
        assert!((wrap_2pi(-0.5) - (TWO_PI - 0.5)).abs() < 1e-15);
        assert!((wrap_pi(PI) - PI).abs() < 1e-15);
        assert!((wrap_pi(-PI) - PI).abs() < 1e-15);
        assert!((wrap_pi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn gap_norm_of_single_component() {
        assert_eq!(gap_norm(&[0.5]), 1.0);
        assert_eq!(gap_norm(&[1.0, 1.0]), 2.0);
        assert_eq!(gap_norm(&[1.0, -1.0]), 4.0);
    }
}
