//! The three experimental probes: astigmatic tilted-lens charge test,
//! spiral interferogram, and Larmor oscillation of the stored grating.
//!
//! The lens test exploits astigmatic mode conversion: an LG beam passed
//! through a lens with fx != fy picks up different Gouy phases along the
//! two axes and, observed near a line focus, self-interferes into a
//! Hermite-Gaussian-like stripe pattern with exactly |ell| dark fringes,
//! tilted into the +45 or -45 diagonal according to sign(ell). The spiral
//! test interferes the vortex with a Gaussian of mismatched wavefront
//! curvature, producing |ell| spiral arms whose handedness follows
//! sign(ell) * sign(R). The Larmor probe is a scalar modulation of the
//! retrieved intensity at twice the coherence precession rate.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, IntensityMap};
use crate::lg::{lg_amplitude, BeamParams, LGIndex};

/// Thin astigmatic lens followed by free propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AstigmaticLens {
    pub fx: f64,
    pub fy: f64,
    /// Observation distance behind the lens.
    pub distance: f64,
}

/// Default focal asymmetry of the calibrated lens.
pub const LENS_RATIO_DEFAULT: f64 = 1.05;

/// Distance at which a waist placed at the lens images along one axis:
/// f / (1 + (f/zR)^2). For f << zR this is just f.
pub fn focus_distance(f: f64, rayleigh_range: f64) -> f64 {
    let q = f / rayleigh_range;
    f / (1.0 + q * q)
}

impl AstigmaticLens {
    /// fx = fy is accepted: the symmetric lens is the control case that
    /// keeps an LG input annular.
    pub fn new(fx: f64, fy: f64, distance: f64) -> Result<Self> {
        for (name, v) in [("fx", fx), ("fy", fy), ("distance", distance)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("lens {name} must be positive, got {v}")));
            }
        }
        Ok(AstigmaticLens { fx, fy, distance })
    }

    /// Lens strength that makes the mode conversion order-one for a given
    /// beam. The conversion parameter chi = zR (fx - fy)/(fx fy) must be
    /// O(1) for the Gouy-phase splitting to develop within the focal
    /// region; with the default 5% asymmetry, fy = zR/21 gives chi = 1
    /// exactly. Observation distance defaults to the x-axis focus.
    pub fn calibrated(beam: &BeamParams) -> Result<Self> {
        let zr = beam.rayleigh_range();
        let fy = zr / 21.0;
        let fx = LENS_RATIO_DEFAULT * fy;
        AstigmaticLens::new(fx, fy, focus_distance(fx, zr))
    }

    pub fn with_distance(mut self, distance: f64) -> Result<Self> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(Error::InvalidParameter(format!("lens distance must be positive, got {distance}")));
        }
        self.distance = distance;
        Ok(self)
    }
}

/// In-place 2D FFT over the x-major sample layout: rows (contiguous y runs)
/// first, then columns through a transpose. Unnormalized in both directions.
fn fft2(samples: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let along_y = if inverse { planner.plan_fft_inverse(ny) } else { planner.plan_fft_forward(ny) };
    along_y.process(samples);
    let along_x = if inverse { planner.plan_fft_inverse(nx) } else { planner.plan_fft_forward(nx) };
    let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
    for ix in 0..nx {
        for iy in 0..ny {
            t[iy * nx + ix] = samples[ix * ny + iy];
        }
    }
    along_x.process(&mut t);
    for ix in 0..nx {
        for iy in 0..ny {
            samples[ix * ny + iy] = t[iy * nx + ix];
        }
    }
}

/// Spatial angular frequency of FFT bin m: 2 pi m_signed / (n h).
fn k_bin(m: usize, n: usize, h: f64) -> f64 {
    let ms = if 2 * m < n { m as f64 } else { m as f64 - n as f64 };
    2.0 * std::f64::consts::PI * ms / (n as f64 * h)
}

/// Thin-lens phase with distinct curvatures along x and y, then exact
/// angular-spectrum propagation by `lens.distance`. Output grid equals the
/// input grid; the propagation is unitary (evanescent components, which the
/// envelopes here never populate, decay instead of wrapping).
///
/// The guard is the lens-chirp Nyquist bound: the quadratic phase at the
/// grid edge must stay below half a cycle per sample along each axis,
/// n >= extent^2 / (lambda f). Propagation-kernel sampling is looser than
/// this for every focal regime the diagnostic uses.
pub fn astigmatic_transform(
    field: &ComplexField,
    lens: &AstigmaticLens,
    wavelength: f64,
) -> Result<ComplexField> {
    if !(wavelength > 0.0) {
        return Err(Error::InvalidParameter(format!("wavelength must be positive, got {wavelength}")));
    }
    let g = field.grid;
    let need_x = (g.extent_x() * g.extent_x() / (wavelength * lens.fx)).ceil() as usize;
    let need_y = (g.extent_y() * g.extent_y() / (wavelength * lens.fy)).ceil() as usize;
    if g.nx < need_x || g.ny < need_y {
        return Err(Error::FresnelAliasing { required_n: need_x.max(need_y) });
    }

    let k = 2.0 * std::f64::consts::PI / wavelength;
    let (ox, oy) = g.origin;
    let mut samples = field.samples.clone();
    for ix in 0..g.nx {
        let x = g.x(ix) - ox;
        let px = x * x / lens.fx;
        for iy in 0..g.ny {
            let y = g.y(iy) - oy;
            let chirp = Complex64::from_polar(1.0, -0.5 * k * (px + y * y / lens.fy));
            samples[ix * g.ny + iy] *= chirp;
        }
    }

    fft2(&mut samples, g.nx, g.ny, false);
    for ix in 0..g.nx {
        let kx = k_bin(ix, g.nx, g.dx);
        for iy in 0..g.ny {
            let ky = k_bin(iy, g.ny, g.dy);
            let kz2 = k * k - kx * kx - ky * ky;
            let kernel = if kz2 >= 0.0 {
                Complex64::from_polar(1.0, lens.distance * kz2.sqrt())
            } else {
                Complex64::new((-lens.distance * (-kz2).sqrt()).exp(), 0.0)
            };
            samples[ix * g.ny + iy] *= kernel;
        }
    }
    fft2(&mut samples, g.nx, g.ny, true);
    let scale = 1.0 / (g.nx * g.ny) as f64;
    for s in &mut samples {
        *s *= scale;
    }
    Ok(ComplexField { grid: g, samples })
}

/// Intensity-weighted principal-axis angle from second moments, in
/// (-pi/2, pi/2]. Errors on fields with no usable contrast.
fn principal_axis(map: &IntensityMap) -> Result<(f64, f64, f64)> {
    let max = map.max();
    let min = map.values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if max <= 0.0 || (max - min) < 1e-9 * max {
        return Err(Error::NoPattern);
    }
    let g = map.grid;
    let total = map.total();
    let (mut cx, mut cy) = (0.0, 0.0);
    for ix in 0..g.nx {
        let x = g.x(ix);
        for iy in 0..g.ny {
            let v = map.at(ix, iy);
            cx += v * x;
            cy += v * g.y(iy);
        }
    }
    cx /= total;
    cy /= total;
    let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
    for ix in 0..g.nx {
        let x = g.x(ix) - cx;
        for iy in 0..g.ny {
            let y = g.y(iy) - cy;
            let v = map.at(ix, iy);
            xx += v * x * x;
            yy += v * y * y;
            xy += v * x * y;
        }
    }
    Ok((0.5 * (2.0 * xy).atan2(xx - yy), cx, cy))
}

/// Intensity profile along the principal axis through the centroid,
/// cropped to the 5%-of-peak support interval (interior dips below 5% are
/// kept: those are the dark fringes being counted).
fn axis_profile(map: &IntensityMap) -> Result<(Vec<f64>, f64, f64)> {
    let (angle, cx, cy) = principal_axis(map)?;
    let g = map.grid;
    let (ux, uy) = (angle.cos(), angle.sin());
    let smax = g.extent_min() / 2.0;
    let ns = 2 * g.nx.max(g.ny);
    let step = 2.0 * smax / (ns - 1) as f64;
    let prof: Vec<f64> = (0..ns)
        .map(|k| {
            let s = -smax + k as f64 * step;
            map.bilinear(cx + s * ux, cy + s * uy)
        })
        .collect();
    let peak = prof.iter().fold(0.0f64, |m, &v| m.max(v));
    if peak <= 0.0 {
        return Err(Error::NoPattern);
    }
    let lo = prof.iter().position(|&v| v > 0.05 * peak).unwrap();
    let hi = prof.iter().rposition(|&v| v > 0.05 * peak).unwrap();
    Ok((prof[lo..=hi].to_vec(), peak, angle))
}

/// Bright lobes are maximal runs above 20% of peak; the gaps between them
/// are the dark fringes.
fn lobe_runs(prof: &[f64], peak: f64) -> usize {
    let mut runs = 0;
    let mut prev = false;
    for &v in prof {
        let above = v >= 0.2 * peak;
        if above && !prev {
            runs += 1;
        }
        prev = above;
    }
    runs
}

/// Counts dark fringes along the principal axis of the pattern and reports
/// the orientation sign: +1 when the axis lies in the +45-degree diagonal
/// (positive principal angle), -1 for the -45 side. With fx > fy and
/// observation at the x focus, positive charges map to +1.
pub fn count_fringe_minima(map: &IntensityMap) -> Result<(u32, i32)> {
    let (prof, peak, angle) = axis_profile(map)?;
    let runs = lobe_runs(&prof, peak);
    if runs == 0 {
        return Err(Error::NoPattern);
    }
    Ok(((runs - 1) as u32, if angle > 0.0 { 1 } else { -1 }))
}

/// Depth of the deepest gap between the outermost lobes, (peak - m)/(peak + m);
/// zero when the pattern has not split into lobes at all.
pub fn fringe_contrast(map: &IntensityMap) -> Result<f64> {
    let (prof, peak, _) = axis_profile(map)?;
    let above: Vec<usize> = prof
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= 0.2 * peak)
        .map(|(i, _)| i)
        .collect();
    let (first, last) = (above[0], *above.last().unwrap());
    if lobe_runs(&prof, peak) < 2 {
        return Ok(0.0);
    }
    let m = prof[first..=last].iter().fold(f64::INFINITY, |a, &v| a.min(v));
    Ok((peak - m) / (peak + m))
}

/// Scans candidate observation distances and keeps the one with the
/// deepest fringes; stands in for the laboratory calibration the charge
/// test needs before it can be trusted.
pub fn calibrate_distance(
    probe: &ComplexField,
    fx: f64,
    fy: f64,
    wavelength: f64,
    candidates: &[f64],
) -> Result<AstigmaticLens> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("calibration needs at least one candidate distance".into()));
    }
    let mut best: Option<(f64, AstigmaticLens)> = None;
    for &d in candidates {
        let lens = AstigmaticLens::new(fx, fy, d)?;
        let out = astigmatic_transform(probe, &lens, wavelength)?;
        let c = fringe_contrast(&out.intensity())?;
        if best.as_ref().map_or(true, |(bc, _)| c > *bc) {
            best = Some((c, lens));
        }
    }
    Ok(best.unwrap().1)
}

/// Reference beam waist in units of the LG waist.
pub const SPIRAL_REF_WAIST_RATIO: f64 = 2.0;

/// |LG_0^ell + G exp(i pi rho^2 / (lambda R))|^2: the vortex interfered
/// with a curvature-mismatched Gaussian. `reference_curvature` is the
/// radius R in meters; `None` means a flat reference, which cannot produce
/// spirals from a charged beam.
pub fn spiral_interferogram(
    ell: i32,
    beam: &BeamParams,
    reference_curvature: Option<f64>,
    grid: &GridSpec,
) -> Result<IntensityMap> {
    if let Some(r) = reference_curvature {
        if !(r.is_finite() && r != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "curvature radius must be finite and nonzero, got {r}; use None for a flat reference"
            )));
        }
    } else if ell != 0 {
        return Err(Error::DegenerateFringes);
    }
    grid.require_waist(beam.w0)?;
    let reference = BeamParams::new(SPIRAL_REF_WAIST_RATIO * beam.w0, beam.wavelength)?;
    let vortex = LGIndex::new(ell, 0);
    let gauss = LGIndex::new(0, 0);
    let chirp = reference_curvature.map(|r| std::f64::consts::PI / (beam.wavelength * r));
    let (ox, oy) = grid.origin;
    let beam = *beam;
    let field = ComplexField::from_fn(*grid, move |x, y| {
        let (dx, dy) = (x - ox, y - oy);
        let rho2 = dx * dx + dy * dy;
        let (rho, phi) = (rho2.sqrt(), dy.atan2(dx));
        let lg = lg_amplitude(vortex, &beam, rho, phi);
        let mut g = lg_amplitude(gauss, &reference, rho, phi);
        if let Some(c) = chirp {
            g *= Complex64::from_polar(1.0, c * rho2);
        }
        lg + g
    });
    Ok(field.intensity())
}

const RING_PHI_SAMPLES: usize = 256;
const ARM_HARMONIC_MAX: u32 = 8;
const ARM_MODULATION_FLOOR: f64 = 0.05;
const RING_INTENSITY_FLOOR: f64 = 0.01;

fn ring_samples(map: &IntensityMap, r: f64) -> Vec<f64> {
    (0..RING_PHI_SAMPLES)
        .map(|j| {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / RING_PHI_SAMPLES as f64;
            map.bilinear(r * phi.cos(), r * phi.sin())
        })
        .collect()
}

/// sum_j v_j e^{-i m phi_j}, the m-th azimuthal harmonic of a ring.
fn ring_harmonic(ring: &[f64], m: u32) -> Complex64 {
    let n = ring.len() as f64;
    ring.iter()
        .enumerate()
        .map(|(j, &v)| v * Complex64::from_polar(1.0, -(m as f64) * 2.0 * std::f64::consts::PI * j as f64 / n))
        .sum()
}

/// Strongest (modulation, harmonic, radius) over rings that carry enough
/// intensity to be trusted; dim outer rings are excluded because the square
/// grid imprints a spurious 4-fold harmonic on them.
fn strongest_ring(map: &IntensityMap) -> Option<(f64, u32, f64)> {
    let imax = map.max();
    if imax <= 0.0 {
        return None;
    }
    let g = map.grid;
    let step = g.dx.max(g.dy);
    let mut best: Option<(f64, u32, f64)> = None;
    let mut r = step;
    while r < 0.475 * g.extent_min() {
        let ring = ring_samples(map, r);
        let total: f64 = ring.iter().sum();
        if total / RING_PHI_SAMPLES as f64 > RING_INTENSITY_FLOOR * imax {
            for m in 1..=ARM_HARMONIC_MAX {
                let modulation = ring_harmonic(&ring, m).norm() / total;
                if best.map_or(true, |(bm, _, _)| modulation > bm) {
                    best = Some((modulation, m, r));
                }
            }
        }
        r += step;
    }
    best
}

/// Dominant azimuthal harmonic on the ring of maximal modulation; 0 when no
/// ring is modulated above the floor (the ell = 0 bullseye).
pub fn count_spiral_arms(map: &IntensityMap) -> Result<u32> {
    match strongest_ring(map) {
        Some((modulation, m, _)) if modulation >= ARM_MODULATION_FLOOR => Ok(m),
        _ => Ok(0),
    }
}

/// Sense of the spiral: the azimuthal phase of the dominant harmonic drifts
/// with radius on a spiral; its drift sign gives the handedness, normalized
/// so that ell > 0 with R > 0 reads +1 (equivalently sign(ell) sign(R)).
pub fn spiral_handedness(map: &IntensityMap) -> Result<i32> {
    let (modulation, m, r) = strongest_ring(map).ok_or(Error::NoPattern)?;
    if modulation < ARM_MODULATION_FLOOR {
        return Err(Error::NoPattern);
    }
    let step = map.grid.dx.max(map.grid.dy);
    let psi = |radius: f64| ring_harmonic(&ring_samples(map, radius), m).arg();
    let mut drift = psi(r + 2.0 * step) - psi(r - 2.0 * step);
    drift = (drift + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
    Ok(if drift > 0.0 { -1 } else { 1 })
}

/// mu_B / hbar expressed per gauss: 2 pi x 1.3996 MHz/G.
pub const MU_B_OVER_HBAR_PER_GAUSS: f64 = 2.0 * std::f64::consts::PI * 1.3996e6;

/// Scalar model of the stored grating precessing under a dc field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LarmorConfig {
    pub b_gauss: f64,
    pub g_factor: f64,
    /// Coherence order: 1 for adjacent sublevels, 2 for the
    /// opposite-circular-polarization geometry.
    pub delta_m: u32,
    pub gamma: f64,
}

impl LarmorConfig {
    pub fn new(b_gauss: f64, g_factor: f64, delta_m: u32, gamma: f64) -> Result<Self> {
        if !(b_gauss >= 0.0) {
            return Err(Error::InvalidParameter(format!("field must be >= 0 gauss, got {b_gauss}")));
        }
        if !(1..=2).contains(&delta_m) {
            return Err(Error::InvalidParameter(format!("coherence order must be 1 or 2, got {delta_m}")));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("decay rate must be >= 0, got {gamma}")));
        }
        Ok(LarmorConfig { b_gauss, g_factor, delta_m, gamma })
    }
}

impl Default for LarmorConfig {
    /// 0.3 G, g = 0.25, delta_m = 2, 1/gamma = 20 us.
    fn default() -> Self {
        LarmorConfig { b_gauss: 0.3, g_factor: 0.25, delta_m: 2, gamma: 5.0e4 }
    }
}

/// omega_L = g mu_B B / hbar, rad/s.
pub fn larmor_frequency(cfg: &LarmorConfig) -> f64 {
    cfg.g_factor * MU_B_OVER_HBAR_PER_GAUSS * cfg.b_gauss
}

/// Retrieved intensity vs storage time, normalized to I0 = 1:
/// e^{-2 gamma t} cos^2(delta_m omega_L t / 2). The coherence accumulates
/// delta_m omega_L t of precession phase; the retrieved amplitude goes as
/// its cosine and the intensity as the square.
pub fn larmor_signal(cfg: &LarmorConfig, t_grid: &[f64]) -> Result<Vec<f64>> {
    if t_grid.first().is_some_and(|&t| t < 0.0) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be nonnegative and strictly increasing".into()));
    }
    let omega = larmor_frequency(cfg);
    Ok(t_grid
        .iter()
        .map(|&t| {
            let c = (cfg.delta_m as f64 * omega * t / 2.0).cos();
            (-2.0 * cfg.gamma * t).exp() * c * c
        })
        .collect())
}

/// Period of the intensity oscillation, 2 pi / (delta_m omega_L); the decay
/// envelope shifts every maximum by the same amount, so peak-to-peak
/// spacing equals this exactly for any gamma.
pub fn larmor_period(cfg: &LarmorConfig) -> Result<f64> {
    let omega = larmor_frequency(cfg);
    if omega == 0.0 {
        return Err(Error::NoPrecession);
    }
    Ok(2.0 * std::f64::consts::PI / (cfg.delta_m as f64 * omega))
}
