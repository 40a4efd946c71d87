//! Polar quadrature for mode-overlap integrals.
//!
//! The projection integral c = int conj(LG) E rho drho dphi is split into a
//! Gauss-Legendre rule on rho in [0, R_max] and a uniform trapezoid on phi.
//! The uniform azimuthal rule is exact for trigonometric polynomials below
//! the Nyquist order, which is precisely what a finite ell' range needs; the
//! radial factor is smooth and rapidly decaying, where Gauss-Legendre
//! converges superexponentially.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::spline::SplineField;

/// Newton iteration on the Legendre recurrence. Nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, accurate enough for global convergence
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // the cosine guess walks from +1 down; store ascending
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// Radial Gauss-Legendre nodes on [0, R_max] with a uniform azimuthal rule.
#[derive(Debug, Clone)]
pub struct PolarQuadrature {
    /// Strictly increasing radii in meters.
    pub r_nodes: Vec<f64>,
    /// Positive weights including the interval scaling (but not the factor rho).
    pub r_weights: Vec<f64>,
    pub n_phi: usize,
    pub r_max: f64,
}

impl PolarQuadrature {
    pub fn new(n_r: usize, n_phi: usize, r_max: f64) -> Result<Self> {
        if n_r < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 radial nodes, got {n_r}")));
        }
        if n_phi < 4 {
            return Err(Error::InvalidParameter(format!("need at least 4 azimuthal samples, got {n_phi}")));
        }
        if !(r_max > 0.0) {
            return Err(Error::InvalidParameter(format!("R_max must be positive, got {r_max}")));
        }
        let (x, w) = gauss_legendre(n_r);
        let half = 0.5 * r_max;
        let r_nodes: Vec<f64> = x.iter().map(|&t| half * (t + 1.0)).collect();
        let r_weights: Vec<f64> = w.iter().map(|&t| half * t).collect();
        Ok(PolarQuadrature { r_nodes, r_weights, n_phi, r_max })
    }

    /// Default rule for decomposing fields on the given grid: 160 radial
    /// nodes, 256 azimuthal samples, radius one cell short of the half
    /// extent so every quadrature point interpolates inside the grid.
    pub fn default_for(grid: &crate::grid::GridSpec) -> Result<Self> {
        let r_max = grid.extent_min() / 2.0 - grid.dx.max(grid.dy);
        PolarQuadrature::new(160, 256, r_max)
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n_phi as f64
    }

    /// Azimuthal cell measure.
    pub fn d_phi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_phi as f64
    }

    /// Largest azimuthal order this rule resolves, from n_phi >= 4 (|ell|+1).
    pub fn max_azimuthal_order(&self) -> i32 {
        (self.n_phi as i32) / 4 - 1
    }
}

/// Field values at every quadrature node, resampled from the Cartesian grid
/// by prefiltered cubic B-spline interpolation (see `spline`); the O(h^4)
/// bias keeps resampling error out of coefficients down to 1e-8. Layout:
/// node (i, j) at index i * n_phi + j.
pub fn resample_polar(field: &ComplexField, quad: &PolarQuadrature) -> Vec<Complex64> {
    let spline = SplineField::new(field);
    let (ox, oy) = field.grid.origin;
    let mut out = Vec::with_capacity(quad.r_nodes.len() * quad.n_phi);
    for &r in &quad.r_nodes {
        for j in 0..quad.n_phi {
            let phi = quad.phi(j);
            out.push(spline.eval(ox + r * phi.cos(), oy + r * phi.sin()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn five_point_rule_matches_tabulated_values() {
        // Abramowitz & Stegun table 25.4
        let (x, w) = gauss_legendre(5);
        let x_ref = [-0.906179845938664, -0.538469310105683, 0.0, 0.538469310105683, 0.906179845938664];
        let w_ref = [0.236926885056189, 0.478628670499366, 0.568888888888889, 0.478628670499366, 0.236926885056189];
        for i in 0..5 {
            assert_abs_diff_eq!(x[i], x_ref[i], epsilon = 1e-14);
            assert_abs_diff_eq!(w[i], w_ref[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn degree_2n_minus_1_is_exact() {
        // n-point rule integrates x^(2n-1) and below exactly
        let (x, w) = gauss_legendre(3);
        for pow in 0..=5u32 {
            let q: f64 = x.iter().zip(&w).map(|(&t, &wt)| wt * t.powi(pow as i32)).sum();
            let exact = if pow % 2 == 1 { 0.0 } else { 2.0 / (pow as f64 + 1.0) };
            assert_abs_diff_eq!(q, exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn nodes_increase_and_weights_are_positive() {
        for n in [2usize, 16, 160] {
            let q = PolarQuadrature::new(n, 64, 1e-3).unwrap();
            assert!(q.r_weights.iter().all(|&w| w > 0.0));
            assert!(q.r_nodes.windows(2).all(|p| p[0] < p[1]));
            assert!(q.r_nodes[0] > 0.0 && *q.r_nodes.last().unwrap() < 1e-3);
            let sum: f64 = q.r_weights.iter().sum();
            assert_abs_diff_eq!(sum, 1e-3, epsilon = 1e-16);
        }
    }

    #[test]
    fn gaussian_power_via_polar_rule() {
        // int |G|^2 over the plane = 1 for the unit-norm Gaussian
        let w0 = 250e-6;
        let q = PolarQuadrature::new(80, 32, 1.2e-3).unwrap();
        let norm = (2.0 / std::f64::consts::PI).sqrt() / w0;
        let mut acc = 0.0;
        for (&r, &wr) in q.r_nodes.iter().zip(&q.r_weights) {
            let a = norm * (-(r * r) / (w0 * w0)).exp();
            acc += a * a * r * wr * q.n_phi as f64 * q.d_phi();
        }
        assert_abs_diff_eq!(acc, 1.0, epsilon = 1e-12);
    }
}
