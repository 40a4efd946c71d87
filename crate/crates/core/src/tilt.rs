//! Retrieval along a tilted axis.
//!
//! The stored grating is written by W (an LG mode of waist w0) and read out
//! by W' (a Gaussian of waist waist_ratio * w0) traveling along an axis z'
//! rotated by theta around x. With R a uniform plane wave and the plane-wave
//! carriers absorbed by phase matching (k_C = -k_W'), the retrieved envelope
//! on the plane z' = 0 is
//!
//!   E_C(x', y') = e^{-gamma t_s} E_W(x', y' cos(theta)) conj(E_W'(x', y')).
//!
//! The W envelope is evaluated at the geometrically mapped point; its
//! z-dependence is neglected because |z| <= y' sin(theta) stays far below
//! the Rayleigh range for every parameter set of interest. At theta = 0 the
//! product of the two Gaussian envelopes is again an LG mode, of effective
//! waist w_eff = w0 w1 / sqrt(w0^2 + w1^2).

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};
use crate::lg::{lg_amplitude, BeamParams, LGIndex};

/// Rotation of the retrieval axis: angle between z and z', axis fixed to x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltGeometry {
    theta: f64,
}

impl TiltGeometry {
    /// theta in radians, restricted to [0, pi/2): at pi/2 the retrieval
    /// plane contains the storage axis and the projection degenerates.
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "tilt angle must lie in [0, pi/2) radians, got {theta}"
            )));
        }
        Ok(TiltGeometry { theta })
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Storage decay, read-pulse shape, and read-beam waist ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalConfig {
    /// Homogeneous decay rate of the ground-state coherence, 1/s.
    pub gamma: f64,
    /// Storage time between write and read, s.
    pub t_s: f64,
    /// Time constant of the exponential-saturation pulse envelope, s.
    pub tau_r: f64,
    /// w_{W'} / w_W.
    pub waist_ratio: f64,
}

impl RetrievalConfig {
    pub fn new(gamma: f64, t_s: f64, tau_r: f64, waist_ratio: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("decay rate must be >= 0, got {gamma}")));
        }
        if !(t_s >= 0.0) {
            return Err(Error::InvalidParameter(format!("storage time must be >= 0, got {t_s}")));
        }
        if !(tau_r > 0.0) {
            return Err(Error::InvalidParameter(format!("pulse time constant must be > 0, got {tau_r}")));
        }
        if !(waist_ratio > 0.0) {
            return Err(Error::InvalidParameter(format!("waist ratio must be > 0, got {waist_ratio}")));
        }
        Ok(RetrievalConfig { gamma, t_s, tau_r, waist_ratio })
    }
}

impl Default for RetrievalConfig {
    /// gamma = 1/(5 us), t_s = 2 us, tau_r = 1 us, waist ratio 1.4.
    fn default() -> Self {
        RetrievalConfig { gamma: 2.0e5, t_s: 2.0e-6, tau_r: 1.0e-6, waist_ratio: 1.4 }
    }
}

/// Lab-frame coordinates of the point (x', y', 0) on the retrieval plane:
/// (x', y' cos(theta), y' sin(theta)). Identity on the plane at theta = 0.
pub fn map_plane_point(geom: TiltGeometry, xp: f64, yp: f64) -> (f64, f64, f64) {
    let (s, c) = geom.theta.sin_cos();
    (xp, yp * c, yp * s)
}

/// e^{-gamma t_s}, the coherence surviving the storage interval.
pub fn storage_decay(cfg: &RetrievalConfig) -> f64 {
    (-cfg.gamma * cfg.t_s).exp()
}

/// Dimensionless retrieved-pulse envelope, 1 - e^{-t/tau_R}; a stand-in
/// parametrization (monotone, 0 at turn-on, saturating to 1).
pub fn retrieved_pulse(cfg: &RetrievalConfig, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("pulse time must be >= 0, got {t}")));
    }
    Ok(-(-t / cfg.tau_r).exp_m1())
}

/// Waist of the LG mode produced at theta = 0: w0 w1 / sqrt(w0^2 + w1^2)
/// with w1 = waist_ratio * w0.
pub fn effective_waist(w0: f64, waist_ratio: f64) -> f64 {
    let w1 = waist_ratio * w0;
    w0 * w1 / (w0 * w0 + w1 * w1).sqrt()
}

/// Retrieved envelope on the plane z' = 0, sampled over a grid in the
/// (x', y') retrieval frame. The grid must comfortably hold the effective
/// waist; the anamorphic cos(theta) mapping only shrinks the field, so the
/// theta = 0 footprint is the widest.
pub fn synthesize_retrieved_field(
    ell_in: i32,
    w_beam: &BeamParams,
    geom: TiltGeometry,
    cfg: &RetrievalConfig,
    grid: &GridSpec,
) -> Result<ComplexField> {
    grid.require_waist(effective_waist(w_beam.w0, cfg.waist_ratio))?;
    let read_beam = BeamParams::new(cfg.waist_ratio * w_beam.w0, w_beam.wavelength)?;
    let stored = LGIndex::new(ell_in, 0);
    let gauss = LGIndex::new(0, 0);
    let decay = storage_decay(cfg);
    let cos_t = geom.theta.cos();
    let (ox, oy) = grid.origin;
    let w_beam = *w_beam;
    Ok(ComplexField::from_fn(*grid, move |xp, yp| {
        let (x, y) = (xp - ox, (yp - oy) * cos_t);
        let w = lg_amplitude(stored, &w_beam, (x * x + y * y).sqrt(), y.atan2(x));
        let (xr, yr) = (xp - ox, yp - oy);
        let r = lg_amplitude(gauss, &read_beam, (xr * xr + yr * yr).sqrt(), yr.atan2(xr));
        decay * w * r.conj()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product, total_power, winding_number};
    use crate::lg::{ring_radius, sample_lg};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const W0: f64 = 250e-6;
    const LAMBDA: f64 = 852e-9;

    fn beam() -> BeamParams {
        BeamParams::new(W0, LAMBDA).unwrap()
    }

    fn grid() -> GridSpec {
        GridSpec::square(512, 8.0 * W0).unwrap()
    }

    #[test]
    fn plane_map_identity_and_trig() {
        let flat = TiltGeometry::new(0.0).unwrap();
        assert_eq!(map_plane_point(flat, 1e-3, 1e-3), (1e-3, 1e-3, 0.0));

        let g = TiltGeometry::from_degrees(2.0).unwrap();
        let (x, y, z) = map_plane_point(g, 0.0, 350e-6);
        assert_abs_diff_eq!(x, 0.0);
        assert_abs_diff_eq!(y, 349.786789e-6, epsilon = 1e-12);
        assert_abs_diff_eq!(z, 12.214824e-6, epsilon = 1e-12);
    }

    #[test]
    fn plane_map_preserves_norm() {
        for deg in [0.0, 2.0, 20.0, 77.0] {
            let g = TiltGeometry::from_degrees(deg).unwrap();
            for &(xp, yp) in &[(1e-3, -3e-4), (0.0, 1e-3), (2e-4, 2e-4)] {
                let (x, y, z) = map_plane_point(g, xp, yp);
                assert_relative_eq!(x * x + y * y + z * z, xp * xp + yp * yp, epsilon = 1e-24);
            }
        }
    }

    #[test]
    fn tilt_domain_is_enforced() {
        assert!(TiltGeometry::new(-0.1).is_err());
        assert!(TiltGeometry::new(std::f64::consts::FRAC_PI_2).is_err());
        assert!(TiltGeometry::from_degrees(89.9).is_ok());
    }

    #[test]
    fn decay_and_pulse_scalars() {
        let cfg = RetrievalConfig::default();
        // gamma t_s = 0.4
        assert_relative_eq!(storage_decay(&cfg), 0.670320046, epsilon = 1e-9);
        let fresh = RetrievalConfig::new(0.0, 7.0e-6, 1e-6, 1.4).unwrap();
        assert_eq!(storage_decay(&fresh), 1.0);
        let instant = RetrievalConfig::new(2e5, 0.0, 1e-6, 1.4).unwrap();
        assert_eq!(storage_decay(&instant), 1.0);

        assert_eq!(retrieved_pulse(&cfg, 0.0).unwrap(), 0.0);
        assert_relative_eq!(retrieved_pulse(&cfg, cfg.tau_r).unwrap(), 0.632120559, epsilon = 1e-9);
        assert!(retrieved_pulse(&cfg, 20.0 * cfg.tau_r).unwrap() > 1.0 - 1e-8);
        assert!(matches!(retrieved_pulse(&cfg, -1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn untilted_output_is_a_pure_lg_of_effective_waist() {
        let cfg = RetrievalConfig { t_s: 0.0, ..RetrievalConfig::default() };
        let w_eff = effective_waist(W0, cfg.waist_ratio);
        assert_relative_eq!(w_eff, 203.433368e-6, epsilon = 1e-12);
        let flat = TiltGeometry::new(0.0).unwrap();
        for ell in 0..=4 {
            let f = synthesize_retrieved_field(ell, &beam(), flat, &cfg, &grid()).unwrap();
            let basis = sample_lg(LGIndex::new(ell, 0), &BeamParams::new(w_eff, LAMBDA).unwrap(), &grid()).unwrap();
            let c = inner_product(&basis, &f).unwrap();
            // overlap fraction |<b,f>|^2 / (|b|^2 |f|^2): the residual is
            // pure roundoff because the Gaussian product is exactly an LG
            let frac = c.norm_sqr() / (total_power(&basis) * total_power(&f));
            assert!(1.0 - frac < 1e-12, "ell={ell}: impurity {}", 1.0 - frac);
        }
    }

    #[test]
    fn decay_factor_scales_the_field_linearly() {
        let g = TiltGeometry::from_degrees(10.0).unwrap();
        let cfg = RetrievalConfig::default();
        let doubled = RetrievalConfig { t_s: 2.0 * cfg.t_s, ..cfg };
        let a = synthesize_retrieved_field(2, &beam(), g, &cfg, &grid()).unwrap();
        let b = synthesize_retrieved_field(2, &beam(), g, &doubled, &grid()).unwrap();
        let scale = storage_decay(&cfg);
        let floor = 1e-12 * a.max_abs();
        // exp(-2 gamma t) and exp(-gamma t)^2 agree only to roundoff
        for i in (0..a.samples.len()).step_by(7919) {
            assert_abs_diff_eq!(b.samples[i].re, scale * a.samples[i].re, epsilon = floor);
            assert_abs_diff_eq!(b.samples[i].im, scale * a.samples[i].im, epsilon = floor);
        }
    }

    #[test]
    fn charge_conjugation_symmetry() {
        let g = TiltGeometry::from_degrees(15.0).unwrap();
        let cfg = RetrievalConfig::default();
        let plus = synthesize_retrieved_field(3, &beam(), g, &cfg, &grid()).unwrap();
        let minus = synthesize_retrieved_field(-3, &beam(), g, &cfg, &grid()).unwrap();
        for i in (0..plus.samples.len()).step_by(4093) {
            assert_abs_diff_eq!(plus.samples[i].re, minus.samples[i].conj().re, epsilon = 1e-18);
            assert_abs_diff_eq!(plus.samples[i].im, minus.samples[i].conj().im, epsilon = 1e-18);
        }
    }

    #[test]
    fn retrieved_charge_survives_small_tilt() {
        let g = TiltGeometry::from_degrees(2.0).unwrap();
        let cfg = RetrievalConfig::default();
        let w_eff = effective_waist(W0, cfg.waist_ratio);
        for ell in 1..=4 {
            let f = synthesize_retrieved_field(ell, &beam(), g, &cfg, &grid()).unwrap();
            let r = ring_radius(ell, w_eff).unwrap();
            assert_eq!(winding_number(&f, r).unwrap(), ell);
        }
    }

    #[test]
    fn undersized_grid_is_rejected() {
        let small = GridSpec::square(64, 2.5 * W0).unwrap();
        let g = TiltGeometry::new(0.0).unwrap();
        match synthesize_retrieved_field(1, &beam(), g, &RetrievalConfig::default(), &small) {
            Err(Error::GridTruncatesMode { .. }) => {}
            other => panic!("expected truncation error, got {other:?}"),
        }
    }
}
