//! Separable cubic B-spline interpolation of gridded complex fields.
//!
//! The mode projection is only as clean as the polar resampling that feeds
//! it. Bilinear interpolation carries an O(h^2) bias, about 4e-4 of the peak
//! at the default pitch of w0/64, which leaks into recovered coefficients at
//! the 1e-4 level and buries crosstalk powers near 1e-7. The prefiltered
//! cubic B-spline passes through the interior grid samples exactly, carries
//! an O(h^4) bias (3e-8 of peak at the same pitch), and keeps the basis
//! round trip below 1e-8.
//!
//! Prefiltering inverts the direct filter (z + 4 + 1/z)/6 by one causal and
//! one anticausal first-order recursion with pole z1 = sqrt(3) - 2, after
//! Unser. The causal pass is seeded with the truncated power series of the
//! filter response, which equals the exact boundary sum to machine epsilon
//! once the line is longer than the 28-tap horizon.

use num_complex::Complex64;

use crate::grid::{ComplexField, GridSpec};

/// Taps beyond which |z1|^k underflows 1e-16; seeds the causal recursion.
const INIT_HORIZON: usize = 28;

/// In-place spline prefilter of one line. Output values are the B-spline
/// coefficients whose cardinal interpolant passes through the input samples.
fn prefilter_line(line: &mut [Complex64], scratch: &mut Vec<Complex64>) {
    let z1 = 3.0f64.sqrt() - 2.0;
    let n = line.len();
    scratch.clear();
    scratch.resize(n, Complex64::new(0.0, 0.0));
    // causal pass into scratch
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zk = 1.0;
    for k in 0..n.min(INIT_HORIZON) {
        acc += line[k] * zk;
        zk *= z1;
    }
    scratch[0] = acc;
    for i in 1..n {
        scratch[i] = line[i] + scratch[i - 1] * z1;
    }
    // anticausal pass back into the line
    line[n - 1] = (scratch[n - 1] + scratch[n - 2] * z1) * (z1 / (z1 * z1 - 1.0));
    for i in (0..n - 1).rev() {
        line[i] = (line[i + 1] - scratch[i]) * z1;
    }
    for v in line.iter_mut() {
        *v *= 6.0;
    }
}

/// Cubic B-spline kernel weights at integer offsets -1..=2 for a fractional
/// position t in [0, 1).
#[inline]
fn bspline_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        (1.0 - t).powi(3) / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// A complex field prepared for cubic B-spline evaluation at arbitrary
/// physical points. Construction prefilters once; evaluation is a 4x4
/// stencil. Points outside the grid evaluate to zero, matching the
/// convention of `ComplexField::bilinear`, and stencil taps falling past
/// the boundary are dropped, so the outermost cell ring interpolates on a
/// truncated stencil. Fields honoring the waist-fit contract have decayed
/// to ~1e-7 of peak there, which keeps the truncation invisible at the
/// 1e-8 level the quadrature cares about.
#[derive(Debug, Clone)]
pub struct SplineField {
    grid: GridSpec,
    /// B-spline coefficients, x-major like `ComplexField::samples`.
    coeffs: Vec<Complex64>,
}

impl SplineField {
    pub fn new(field: &ComplexField) -> SplineField {
        let grid = field.grid;
        let (nx, ny) = (grid.nx, grid.ny);
        let mut coeffs = field.samples.clone();
        let mut scratch = Vec::new();
        // separable: filter the contiguous y-lines, then the strided x-lines
        for row in coeffs.chunks_mut(ny) {
            prefilter_line(row, &mut scratch);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); nx];
        for iy in 0..ny {
            for ix in 0..nx {
                column[ix] = coeffs[ix * ny + iy];
            }
            prefilter_line(&mut column, &mut scratch);
            for ix in 0..nx {
                coeffs[ix * ny + iy] = column[ix];
            }
        }
        SplineField { grid, coeffs }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Interpolated value at a physical point; zero outside the grid.
    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let (gx, gy) = self.grid.frac_index(x, y);
        if gx < 0.0 || gy < 0.0 || gx > (nx - 1) as f64 || gy > (ny - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i0 = gx.floor() as isize;
        let j0 = gy.floor() as isize;
        let wx = bspline_weights(gx - i0 as f64);
        let wy = bspline_weights(gy - j0 as f64);
        let mut v = Complex64::new(0.0, 0.0);
        for a in -1..=2isize {
            let i = i0 + a;
            if i < 0 || i >= nx as isize {
                continue;
            }
            let base = i as usize * ny;
            let mut row = Complex64::new(0.0, 0.0);
            for b in -1..=2isize {
                let j = j0 + b;
                if j < 0 || j >= ny as isize {
                    continue;
                }
                row += self.coeffs[base + j as usize] * wy[(b + 1) as usize];
            }
            v += row * wx[(a + 1) as usize];
        }
        v
    }
}
