//! Error taxonomy shared by every module.
//!
//! Structural errors (grid mismatches, undersized grids) are distinguished
//! from numerical ones (nodal circles, degenerate spectra) so callers can map
//! them onto different exit codes.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("grid mismatch: {a} vs {b}")]
    GridMismatch { a: String, b: String },

    #[error("grid truncates mode: extent {extent_um:.1} um < 4x waist {waist_um:.1} um")]
    GridTruncatesMode { extent_um: f64, waist_um: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("charge undefined on nodal circle (|field| < threshold at radius {radius_um:.1} um)")]
    ChargeUndefined { radius_um: f64 },

    #[error("circle of radius {radius_um:.1} um does not fit the grid")]
    CircleOutsideGrid { radius_um: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no ring for Gaussian (ell = 0 has no intensity ring)")]
    NoRing,

    #[error("azimuthal range cap exceeded: |ell'| up to {requested} > {cap}")]
    RangeCap { requested: i32, cap: i32 },

    #[error("aliasing risk: {samples_per_fringe:.1} grid samples per fringe at the ell'={ell} ring, need >= {required:.0}")]
    AliasingRisk {
        ell: i32,
        samples_per_fringe: f64,
        required: f64,
    },

    #[error("degenerate spectrum: all coefficients vanish")]
    DegenerateSpectrum,

    #[error("Fresnel aliasing: lens chirp exceeds the grid bandwidth, need at least {required_n}x{required_n} samples at this extent")]
    FresnelAliasing { required_n: usize },

    #[error("no pattern: intensity map has no usable modulation")]
    NoPattern,

    #[error("degenerate fringes: concentric rings require ell=0")]
    DegenerateFringes,

    #[error("no precession: B = 0")]
    NoPrecession,

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
