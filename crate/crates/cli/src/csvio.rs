//! Deterministic CSV serialization.
//!
//! RFC-4180-style: comma separators, one header row, "\n" line endings.
//! Floats go through Rust's shortest round-trip formatting, which is
//! locale-independent (always "." decimal) and deterministic, so identical
//! runs produce byte-identical files and the full double survives a
//! read-back.

use oamtilt_core::ModeSpectrum;

/// One spectrum line; a (theta, ell_in) group is the set of rows sharing
/// those two columns, and its power_frac column sums to 1 by construction.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumRow {
    pub theta_deg: f64,
    pub ell_in: i32,
    pub ell_prime: i32,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub abs_maxnorm: f64,
    pub power_frac: f64,
}

pub const SPECTRUM_HEADER: &str = "theta_deg,ell_in,ell_prime,re,im,abs,abs_maxnorm,power_frac";

/// Rows for one decomposition group. Requires a nondegenerate spectrum
/// (the command layer guards max_abs > 0 before calling).
pub fn group_rows(theta_deg: f64, ell_in: i32, spec: &ModeSpectrum) -> Vec<SpectrumRow> {
    let max = spec.max_abs();
    let power = spec.captured_power();
    spec.iter()
        .map(|(l, c)| SpectrumRow {
            theta_deg,
            ell_in,
            ell_prime: l,
            re: c.re,
            im: c.im,
            abs: c.norm(),
            abs_maxnorm: c.norm() / max,
            power_frac: c.norm_sqr() / power,
        })
        .collect()
}

pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.theta_deg, r.ell_in, r.ell_prime, r.re, r.im, r.abs, r.abs_maxnorm, r.power_frac
        ));
    }
    out
}

/// Time series with a comment line naming the physical parameters.
pub fn larmor_csv(b_gauss: f64, g_factor: f64, delta_m: u32, gamma_per_us: f64, samples: &[(f64, f64)]) -> String {
    let mut out = String::with_capacity(32 * (samples.len() + 2));
    out.push_str(&format!(
        "# B = {b_gauss} gauss, g_factor = {g_factor}, delta_m = {delta_m}, gamma = {gamma_per_us} /us\n"
    ));
    out.push_str("t_us,intensity\n");
    for (t, v) in samples {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}
