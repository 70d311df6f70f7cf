//! Chebyshev points of the second kind and barycentric Lagrange basis
//! evaluation in one dimension. Tensor products are assembled by callers.

use std::f64::consts::PI;

use crate::error::{BltcError, Result};

/// Distance below which a coordinate is considered to sit on a node: the
/// smallest positive normal `f64`.
pub const COINCIDENCE_TOL: f64 = f64::MIN_POSITIVE;

/// Chebyshev points of the second kind mapped onto `[a, b]`, in native order
/// (`points[0] == b`, `points[n] == a`).
pub fn chebyshev_points(n: usize, a: f64, b: f64) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    if n == 0 {
        return vec![mid];
    }
    let half = 0.5 * (b - a);
    let two_n = 2.0 * n as f64;
    let mut points: Vec<f64> = (0..=n)
        .map(|k| {
            // sin(pi (n - 2k) / 2n) == cos(pi k / n), but exactly antisymmetric
            let s = (PI * (n as f64 - 2.0 * k as f64) / two_n).sin();
            mid + half * s
        })
        .collect();
    points[0] = b;
    points[n] = a;
    points
}

/// `w_k = (-1)^k delta_k`, halved at both ends. Independent of the interval.
pub fn barycentric_weights(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n {
                0.5 * sign
            } else {
                sign
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevGrid1D {
    pub degree: usize,
    pub a: f64,
    pub b: f64,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ChebyshevGrid1D {
    pub fn new(degree: usize, a: f64, b: f64) -> Self {
        debug_assert!(a <= b, "interval [{a}, {b}] is reversed");
        Self {
            degree,
            a,
            b,
            points: chebyshev_points(degree, a, b),
            weights: barycentric_weights(degree),
        }
    }

    pub fn num_points(&self) -> usize {
        self.degree + 1
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.a < self.b)
    }

    /// Index of the node `x` coincides with, if any.
    #[inline]
    pub fn coincident_node(&self, x: f64) -> Option<usize> {
        self.points.iter().position(|&s| (x - s).abs() < COINCIDENCE_TOL)
    }

    /// Writes `w_k / (x - s_k)` into `terms` and returns their sum, or
    /// returns `Err(k)` if `x` coincides with node `k`.
    #[inline]
    pub fn barycentric_terms(&self, x: f64, terms: &mut [f64]) -> std::result::Result<f64, usize> {
        if let Some(k) = self.coincident_node(x) {
            return Err(k);
        }
        let mut sum = 0.0;
        for ((t, &w), &s) in terms.iter_mut().zip(&self.weights).zip(&self.points) {
            *t = w / (x - s);
            sum += *t;
        }
        Ok(sum)
    }
}

/// Evaluates every Lagrange basis polynomial of `grid` at `x`.
///
/// Within [`COINCIDENCE_TOL`] of a node the removable singularity is resolved
/// to the Kronecker delta for that node.
pub fn lagrange_basis_all(grid: &ChebyshevGrid1D, x: f64) -> Result<Vec<f64>> {
    if grid.is_degenerate() {
        return Err(BltcError::DegenerateGrid { a: grid.a, b: grid.b });
    }
    let mut out = vec![0.0; grid.num_points()];
    match grid.barycentric_terms(x, &mut out) {
        Ok(denom) => out.iter_mut().for_each(|t| *t /= denom),
        Err(k) => {
            out.iter_mut().for_each(|t| *t = 0.0);
            out[k] = 1.0;
        }
    }
    Ok(out)
}
