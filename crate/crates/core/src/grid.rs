//! Transverse sampling grids and complex scalar fields.
//!
//! A beam cross-section lives on a rectangular grid of complex amplitudes.
//! Coordinates are centered: x_i = ox + (i - (nx-1)/2) dx, so the sample set
//! is point-symmetric about the grid center for any parity of nx. That
//! symmetry is what makes the parity selection rule of the tilt projection
//! exact on the grid rather than approximate.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Sampling geometry of a transverse plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Sample pitch in meters.
    pub dx: f64,
    pub dy: f64,
    /// Physical coordinate of the grid center in meters.
    pub origin: (f64, f64),
}

/// How comfortably a waist fits on a grid. Extents below 4 waists clip the
/// mode outright; below 6 the tails are marginal for 1e-6 work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaistFit {
    Ample,
    Marginal,
    Truncating,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2x2 samples, got {nx}x{ny}")));
        }
        if !(dx > 0.0) || !(dy > 0.0) {
            return Err(Error::InvalidGrid(format!("pitch must be positive, got {dx} x {dy}")));
        }
        Ok(GridSpec { nx, ny, dx, dy, origin: (0.0, 0.0) })
    }

    /// Square grid of n x n samples covering `extent` meters per side.
    pub fn square(n: usize, extent: f64) -> Result<Self> {
        if !(extent > 0.0) {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        let d = extent / n as f64;
        GridSpec::new(n, n, d, d)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin.0 + (i as f64 - (self.nx as f64 - 1.0) / 2.0) * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin.1 + (j as f64 - (self.ny as f64 - 1.0) / 2.0) * self.dy
    }

    pub fn extent_x(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn extent_y(&self) -> f64 {
        self.ny as f64 * self.dy
    }

    /// Smaller of the two physical extents.
    pub fn extent_min(&self) -> f64 {
        self.extent_x().min(self.extent_y())
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Fractional grid index of a physical point; used by the resamplers.
    pub fn frac_index(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin.0) / self.dx + (self.nx as f64 - 1.0) / 2.0,
            (y - self.origin.1) / self.dy + (self.ny as f64 - 1.0) / 2.0,
        )
    }

    pub fn waist_fit(&self, w0: f64) -> WaistFit {
        let e = self.extent_min();
        if e < 4.0 * w0 {
            WaistFit::Truncating
        } else if e < 6.0 * w0 {
            WaistFit::Marginal
        } else {
            WaistFit::Ample
        }
    }

    /// Errors when the grid clips a beam of the given waist.
    pub fn require_waist(&self, w0: f64) -> Result<()> {
        match self.waist_fit(w0) {
            WaistFit::Truncating => Err(Error::GridTruncatesMode {
                extent_um: self.extent_min() * 1e6,
                waist_um: w0 * 1e6,
            }),
            _ => Ok(()),
        }
    }

    fn describe(&self) -> String {
        format!("{}x{} @ {:.3}x{:.3} um", self.nx, self.ny, self.dx * 1e6, self.dy * 1e6)
    }
}

/// Complex scalar amplitude sampled on a grid. Samples are stored x-major:
/// index = ix * ny + iy.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: GridSpec,
    pub samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: GridSpec) -> Self {
        ComplexField { grid, samples: vec![Complex64::new(0.0, 0.0); grid.nx * grid.ny] }
    }

    /// Evaluates `f(x, y)` at every node, in parallel over grid columns.
    /// Sample order is fixed by the grid, so the result is deterministic.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Self {
        let ny = grid.ny;
        let mut samples = vec![Complex64::new(0.0, 0.0); grid.nx * ny];
        samples
            .par_chunks_mut(ny)
            .enumerate()
            .for_each(|(ix, col)| {
                let x = grid.x(ix);
                for (iy, s) in col.iter_mut().enumerate() {
                    *s = f(x, grid.y(iy));
                }
            });
        ComplexField { grid, samples }
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.samples[ix * self.grid.ny + iy]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: Complex64) {
        self.samples[ix * self.grid.ny + iy] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.norm()))
    }

    pub fn scale(&mut self, a: Complex64) {
        for s in &mut self.samples {
            *s *= a;
        }
    }

    /// Bilinear interpolation at a physical point; zero outside the grid.
    pub fn bilinear(&self, x: f64, y: f64) -> Complex64 {
        let (gx, gy) = self.grid.frac_index(x, y);
        if gx < 0.0 || gy < 0.0 || gx > (self.grid.nx - 1) as f64 || gy > (self.grid.ny - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i0 = (gx.floor() as usize).min(self.grid.nx - 2);
        let j0 = (gy.floor() as usize).min(self.grid.ny - 2);
        let tx = gx - i0 as f64;
        let ty = gy - j0 as f64;
        let f00 = self.at(i0, j0);
        let f10 = self.at(i0 + 1, j0);
        let f01 = self.at(i0, j0 + 1);
        let f11 = self.at(i0 + 1, j0 + 1);
        f00 * ((1.0 - tx) * (1.0 - ty))
            + f10 * (tx * (1.0 - ty))
            + f01 * ((1.0 - tx) * ty)
            + f11 * (tx * ty)
    }

    /// Nearest sample at a physical point; panics outside the grid.
    pub fn nearest(&self, x: f64, y: f64) -> Complex64 {
        let (gx, gy) = self.grid.frac_index(x, y);
        let ix = gx.round().clamp(0.0, (self.grid.nx - 1) as f64) as usize;
        let iy = gy.round().clamp(0.0, (self.grid.ny - 1) as f64) as usize;
        self.at(ix, iy)
    }

    /// |E|^2 per node.
    pub fn intensity(&self) -> IntensityMap {
        IntensityMap {
            grid: self.grid,
            values: self.samples.iter().map(|s| s.norm_sqr()).collect(),
        }
    }

    /// arg(E) per node in (-pi, pi].
    pub fn phase(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.arg()).collect()
    }

    /// The same envelope expressed in the frame of a counter-propagating
    /// observer: x -> -x. On the centered grid this is an exact sample
    /// permutation. A beam retrieved along -z' appears charge-conjugated in
    /// this view, which is how the readout camera sees it.
    pub fn mirror_x(&self) -> ComplexField {
        let mut out = ComplexField::zeros(self.grid);
        for ix in 0..self.grid.nx {
            let sx = self.grid.nx - 1 - ix;
            for iy in 0..self.grid.ny {
                out.set(ix, iy, self.at(sx, iy));
            }
        }
        out
    }
}

/// Real nonnegative intensity on a grid; the diagnostics consume these.
#[derive(Debug, Clone)]
pub struct IntensityMap {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl IntensityMap {
    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.grid.ny + iy]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v))
    }

    pub fn nearest(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = self.grid.frac_index(x, y);
        let ix = gx.round().clamp(0.0, (self.grid.nx - 1) as f64) as usize;
        let iy = gy.round().clamp(0.0, (self.grid.ny - 1) as f64) as usize;
        self.at(ix, iy)
    }

    /// Bilinear interpolation at a physical point; zero outside the grid.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = self.grid.frac_index(x, y);
        if gx < 0.0 || gy < 0.0 || gx > (self.grid.nx - 1) as f64 || gy > (self.grid.ny - 1) as f64 {
            return 0.0;
        }
        let i0 = (gx.floor() as usize).min(self.grid.nx - 2);
        let j0 = (gy.floor() as usize).min(self.grid.ny - 2);
        let tx = gx - i0 as f64;
        let ty = gy - j0 as f64;
        self.at(i0, j0) * (1.0 - tx) * (1.0 - ty)
            + self.at(i0 + 1, j0) * tx * (1.0 - ty)
            + self.at(i0, j0 + 1) * (1.0 - tx) * ty
            + self.at(i0 + 1, j0 + 1) * tx * ty
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn require_same_grid(f: &ComplexField, g: &ComplexField) -> Result<()> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch { a: f.grid.describe(), b: g.grid.describe() });
    }
    Ok(())
}

/// Discrete L2 inner product <f, g> = sum conj(f) g dx dy.
///
/// Midpoint rule on the Cartesian grid; for the smooth, rapidly decaying
/// envelopes used here it converges superalgebraically, so the grid and the
/// polar Gauss-Legendre quadrature can serve as mutual oracles. Sequential
/// summation keeps the result bit-reproducible.
pub fn inner_product(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    require_same_grid(f, g)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in f.samples.iter().zip(&g.samples) {
        acc += a.conj() * b;
    }
    Ok(acc * f.grid.cell_area())
}

/// <f, f>, guaranteed real and nonnegative.
pub fn total_power(f: &ComplexField) -> f64 {
    let s: f64 = f.samples.iter().map(|a| a.norm_sqr()).sum();
    s * f.grid.cell_area()
}

/// Number of phase-sampling points on the winding circle. Well above the
/// contract minimum of 256 so the unwrap steps stay far from +-pi even for
/// charges of a few tens.
const WINDING_SAMPLES: usize = 1024;

/// Topological charge as the unwrapped phase circulation on a circle of the
/// given radius around the grid center, in units of 2 pi.
///
/// Nearest-sample lookup is enough: the integer output is insensitive to
/// interpolation order as long as the amplitude stays off zero, which is
/// checked against 1e-6 of the field maximum at every sampled point.
pub fn winding_number(f: &ComplexField, radius: f64) -> Result<i32> {
    let grid = &f.grid;
    let step = grid.dx.max(grid.dy);
    if !(radius > 2.0 * step) {
        return Err(Error::InvalidParameter(format!(
            "winding radius {:.2} um must exceed two grid steps ({:.2} um)",
            radius * 1e6,
            2.0 * step * 1e6
        )));
    }
    if radius > grid.extent_x() / 2.0 - grid.dx || radius > grid.extent_y() / 2.0 - grid.dy {
        return Err(Error::CircleOutsideGrid { radius_um: radius * 1e6 });
    }
    let floor = 1e-6 * f.max_abs();
    let (ox, oy) = grid.origin;
    let mut prev: Option<f64> = None;
    let mut acc = 0.0;
    for k in 0..=WINDING_SAMPLES {
        // closes the loop: sample WINDING_SAMPLES is sample 0 again
        let t = 2.0 * std::f64::consts::PI * (k % WINDING_SAMPLES) as f64 / WINDING_SAMPLES as f64;
        let v = f.nearest(ox + radius * t.cos(), oy + radius * t.sin());
        if v.norm() <= floor {
            return Err(Error::ChargeUndefined { radius_um: radius * 1e6 });
        }
        let ph = v.arg();
        if let Some(p) = prev {
            let mut d: f64 = ph - p;
            // principal-value increment
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            acc += d;
        }
        prev = Some(ph);
    }
    Ok((acc / (2.0 * std::f64::consts::PI)).round() as i32)
}
