//! Laguerre-Gaussian envelopes at the waist plane.
//!
//! LG_p^ell(rho, phi) = N (rho sqrt(2)/w0)^|ell| L_p^|ell|(2 rho^2/w0^2)
//!                        exp(-rho^2/w0^2) exp(i ell phi),
//! N = sqrt(2 p! / (pi (p+|ell|)!)) / w0,
//! so the continuum L2 norm equals |amplitude|. Gouy phase and wavefront
//! curvature never enter: all decompositions happen at the common waist
//! plane, and the tilt displacements stay far below the Rayleigh range.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};

/// Mode indices: topological charge ell (signed) and radial index p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LGIndex {
    pub ell: i32,
    pub p: u32,
}

impl LGIndex {
    pub fn new(ell: i32, p: u32) -> Self {
        LGIndex { ell, p }
    }
}

/// Waist, overall complex amplitude, and wavelength of a beam. The
/// wavelength only matters to the propagation diagnostics; the waist-plane
/// basis is achromatic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    pub w0: f64,
    pub amplitude: Complex64,
    pub wavelength: f64,
}

impl BeamParams {
    pub fn new(w0: f64, wavelength: f64) -> Result<Self> {
        if !(w0 > 0.0) {
            return Err(Error::InvalidParameter(format!("waist must be positive, got {w0}")));
        }
        if !(wavelength > 0.0) {
            return Err(Error::InvalidParameter(format!("wavelength must be positive, got {wavelength}")));
        }
        Ok(BeamParams { w0, amplitude: Complex64::new(1.0, 0.0), wavelength })
    }

    /// Parameters for waist-plane-only evaluation, where the wavelength
    /// never enters; it is set to a placeholder 1 m. Used by decomposition
    /// bases, which exist purely on the z' = 0 plane.
    pub fn waist_only(w0: f64) -> Result<Self> {
        BeamParams::new(w0, 1.0)
    }

    pub fn with_amplitude(mut self, a: Complex64) -> Self {
        self.amplitude = a;
        self
    }

    pub fn rayleigh_range(&self) -> f64 {
        std::f64::consts::PI * self.w0 * self.w0 / self.wavelength
    }
}

/// Associated Laguerre polynomial L_k^alpha(x) by the three-term recurrence
/// (k+1) L_{k+1} = (2k+1+alpha-x) L_k - (k+alpha) L_{k-1}.
pub fn assoc_laguerre(k: u32, alpha: f64, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + alpha - x;
    for i in 1..k {
        let i = i as f64;
        let lp1 = ((2.0 * i + 1.0 + alpha - x) * l - (i + alpha) * lm1) / (i + 1.0);
        lm1 = l;
        l = lp1;
    }
    l
}

/// Normalization constant; p!/(p+|ell|)! is accumulated as a running ratio
/// so no factorial is ever materialized.
fn lg_norm(idx: LGIndex, w0: f64) -> f64 {
    let a = idx.ell.unsigned_abs();
    let mut ratio = 1.0;
    for k in (idx.p + 1)..=(idx.p + a) {
        ratio /= k as f64;
    }
    (2.0 * ratio / std::f64::consts::PI).sqrt() / w0
}

/// Complex LG amplitude at a single point of the waist plane.
pub fn lg_amplitude(idx: LGIndex, beam: &BeamParams, rho: f64, phi: f64) -> Complex64 {
    let a = idx.ell.unsigned_abs();
    let u = rho / beam.w0;
    let x = 2.0 * u * u;
    let radial = lg_norm(idx, beam.w0)
        * (rho * std::f64::consts::SQRT_2 / beam.w0).powi(a as i32)
        * assoc_laguerre(idx.p, a as f64, x)
        * (-u * u).exp();
    beam.amplitude * Complex64::from_polar(1.0, idx.ell as f64 * phi) * radial
}

/// Samples the mode on a grid centered on the beam axis.
pub fn sample_lg(idx: LGIndex, beam: &BeamParams, grid: &GridSpec) -> Result<ComplexField> {
    grid.require_waist(beam.w0)?;
    let (ox, oy) = grid.origin;
    let beam = *beam;
    Ok(ComplexField::from_fn(*grid, move |x, y| {
        let (dx, dy) = (x - ox, y - oy);
        lg_amplitude(idx, &beam, (dx * dx + dy * dy).sqrt(), dy.atan2(dx))
    }))
}

/// Radius of the p = 0 intensity ring, sqrt(|ell|/2) w0.
pub fn ring_radius(ell: i32, w0: f64) -> Result<f64> {
    if ell == 0 {
        return Err(Error::NoRing);
    }
    Ok((ell.unsigned_abs() as f64 / 2.0).sqrt() * w0)
}

/// Grid extent that keeps a mode set orthonormal to 1e-6 at 512^2 samples:
/// eight times the second-moment waist w0 sqrt(2p + |ell| + 1) of the widest
/// mode. Reduces to the plain 8 w0 for the fundamental. Sizing by the bare
/// waist is not enough: high-order Laguerre tails carry percent-level power
/// beyond 4 w0.
pub fn extent_for_modes(modes: &[LGIndex], w0: f64) -> f64 {
    let worst = modes
        .iter()
        .map(|m| (2.0 * m.p as f64 + m.ell.unsigned_abs() as f64 + 1.0).sqrt())
        .fold(1.0f64, f64::max);
    8.0 * w0 * worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const W0: f64 = 250e-6;
    const LAMBDA: f64 = 852e-9;

    fn beam() -> BeamParams {
        BeamParams::new(W0, LAMBDA).unwrap()
    }

    #[test]
    fn laguerre_low_orders_are_the_textbook_polynomials() {
        for x in [0.0, 0.7, 3.0, 11.5] {
            assert_abs_diff_eq!(assoc_laguerre(0, 2.0, x), 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(assoc_laguerre(1, 2.0, x), 3.0 - x, epsilon = 1e-12);
            // L_2^1(x) = x^2/2 - 3x + 3
            assert_abs_diff_eq!(assoc_laguerre(2, 1.0, x), 0.5 * x * x - 3.0 * x + 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gaussian_peak_is_the_normalization_constant() {
        let a = lg_amplitude(LGIndex::new(0, 0), &beam(), 0.0, 0.3);
        let n = (2.0 / std::f64::consts::PI).sqrt() / W0;
        assert_relative_eq!(a.re, n, epsilon = 1e-12);
        assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ring_radius_formula() {
        assert_relative_eq!(ring_radius(1, W0).unwrap(), 176.776695e-6, epsilon = 1e-12);
        assert_relative_eq!(ring_radius(4, W0).unwrap(), 353.553391e-6, epsilon = 1e-12);
        assert_eq!(ring_radius(-2, W0).unwrap(), ring_radius(2, W0).unwrap());
        assert!(matches!(ring_radius(0, W0), Err(Error::NoRing)));
    }

    #[test]
    fn radial_maximum_sits_on_the_ring() {
        // |LG_(ell,0)| peaks at sqrt(ell/2) w0; scan rho on a grid-step comb
        let d = 2e-3 / 512.0;
        for ell in 1..=4 {
            let expect = ring_radius(ell, W0).unwrap();
            let mut best = (0.0, 0.0);
            let mut rho = d;
            while rho < 1e-3 {
                let v = lg_amplitude(LGIndex::new(ell, 0), &beam(), rho, 0.0).norm();
                if v > best.1 {
                    best = (rho, v);
                }
                rho += d;
            }
            assert!((best.0 - expect).abs() <= d, "ell={ell}: {} vs {}", best.0, expect);
        }
    }

    #[test]
    fn conjugation_flips_the_charge() {
        for &(rho, phi) in &[(120e-6, 0.4), (300e-6, -2.0), (40e-6, 3.0)] {
            let plus = lg_amplitude(LGIndex::new(3, 1), &beam(), rho, phi);
            let minus = lg_amplitude(LGIndex::new(-3, 1), &beam(), rho, phi);
            assert_abs_diff_eq!(plus.re, minus.conj().re, epsilon = 1e-18);
            assert_abs_diff_eq!(plus.im, minus.conj().im, epsilon = 1e-18);
        }
    }

    #[test]
    fn p1_mode_has_one_interior_zero() {
        // L_1^2(2 rho^2/w^2) changes sign exactly once for rho > 0
        let mut crossings = 0;
        let mut prev = lg_amplitude(LGIndex::new(2, 1), &beam(), 1e-6, 0.0).re;
        let mut rho = 2e-6;
        while rho < 1.2e-3 {
            let v = lg_amplitude(LGIndex::new(2, 1), &beam(), rho, 0.0).re;
            if prev != 0.0 && v != 0.0 && prev.signum() != v.signum() {
                crossings += 1;
            }
            prev = v;
            rho += 1e-6;
        }
        assert_eq!(crossings, 1);
    }

    #[test]
    fn sampled_mode_power_and_winding() {
        let grid = GridSpec::square(512, 8.0 * W0).unwrap();
        for (ell, p) in [(0i32, 0u32), (3, 0), (-2, 0), (1, 1)] {
            let f = sample_lg(LGIndex::new(ell, p), &beam(), &grid).unwrap();
            assert_relative_eq!(crate::grid::total_power(&f), 1.0, epsilon = 1e-6);
            if ell != 0 {
                let r = ring_radius(ell, W0).unwrap();
                assert_eq!(crate::grid::winding_number(&f, r).unwrap(), ell);
            }
        }
    }

    #[test]
    fn amplitude_scale_carries_through() {
        let grid = GridSpec::square(256, 8.0 * W0).unwrap();
        let b = beam().with_amplitude(Complex64::new(0.0, 2.0));
        let f = sample_lg(LGIndex::new(1, 0), &b, &grid).unwrap();
        assert_relative_eq!(crate::grid::total_power(&f), 4.0, epsilon = 4e-6);
    }

    #[test]
    fn undersized_grid_is_rejected() {
        let grid = GridSpec::square(64, 3.0 * W0).unwrap();
        match sample_lg(LGIndex::new(0, 0), &beam(), &grid) {
            Err(Error::GridTruncatesMode { .. }) => {}
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn mode_set_extent_scales_with_order() {
        assert_abs_diff_eq!(extent_for_modes(&[LGIndex::new(0, 0)], W0), 8.0 * W0, epsilon = 1e-12);
        let modes = [LGIndex::new(5, 5)];
        // 2p + |ell| + 1 = 16 -> 32 w0
        assert_abs_diff_eq!(extent_for_modes(&modes, W0), 32.0 * W0, epsilon = 1e-12);
    }
}
