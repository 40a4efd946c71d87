//! Run configuration: defaults, config-file parsing, flag overrides.
//!
//! Values are held in laboratory units (degrees, micrometers,
//! microseconds, gauss) and converted to SI in one place, the accessor
//! methods that hand them to the core crate. Precedence: built-in defaults,
//! then the config file, then explicit flags.

use std::path::{Path, PathBuf};

use oamtilt_core::{
    effective_waist, focus_distance, AstigmaticLens, BeamParams, GridSpec, LarmorConfig,
    RetrievalConfig, TiltGeometry,
};

use crate::Failure;

/// Basis for the OAM decomposition: the effective waist of the untilted
/// retrieval, or an explicit override in micrometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisWaist {
    Auto,
    ExplicitUm(f64),
}

/// Flag overrides shared by every subcommand. All lengths in micrometers,
/// times in microseconds, rates in 1/us, fields in gauss, angles in degrees.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Config file: one `key = value` per line, `#` comments.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Tilt angle between storage and retrieval axes, degrees.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Input OAM charge.
    #[arg(long)]
    pub ell: Option<i32>,
    /// Write-beam waist, micrometers.
    #[arg(long)]
    pub w0: Option<f64>,
    /// Read-beam to write-beam waist ratio.
    #[arg(long)]
    pub waist_ratio: Option<f64>,
    /// Basis waist for the decomposition: "auto" or micrometers.
    #[arg(long)]
    pub basis_waist: Option<String>,
    /// Wavelength, micrometers.
    #[arg(long)]
    pub wavelength: Option<f64>,
    /// Grid samples per side.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Grid extent per side, micrometers.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Coherence decay rate, 1/us.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Storage time, us.
    #[arg(long)]
    pub t_s: Option<f64>,
    /// Magnetic field, gauss.
    #[arg(long)]
    pub b: Option<f64>,
    /// Lande factor of the storage coherence.
    #[arg(long)]
    pub g_factor: Option<f64>,
    /// Zeeman coherence order (1 or 2).
    #[arg(long)]
    pub delta_m: Option<u32>,
    /// Lens focal length along x, micrometers (set together with --fy).
    #[arg(long)]
    pub fx: Option<f64>,
    /// Lens focal length along y, micrometers.
    #[arg(long)]
    pub fy: Option<f64>,
    /// Observation distance behind the lens, micrometers.
    #[arg(long)]
    pub lens_distance: Option<f64>,
    /// Spiral reference curvature radius, micrometers; sign picks the
    /// handedness, 0 is rejected.
    #[arg(long, allow_hyphen_values = true)]
    pub curvature: Option<f64>,
    /// Larmor trace length, us.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Larmor time step, us.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Output path (defaults to a per-command name in the working directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Every module parameter, in CLI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub theta_deg: f64,
    pub ell_in: i32,
    pub w0_um: f64,
    pub waist_ratio: f64,
    pub basis_waist: BasisWaist,
    pub wavelength_um: f64,
    pub grid_n: Option<usize>,
    pub extent_um: Option<f64>,
    pub gamma_per_us: f64,
    pub t_s_us: f64,
    pub b_gauss: f64,
    pub g_factor: f64,
    pub delta_m: u32,
    pub fx_um: Option<f64>,
    pub fy_um: Option<f64>,
    pub lens_distance_um: Option<f64>,
    pub curvature_um: f64,
    pub t_max_us: f64,
    pub dt_us: f64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            theta_deg: 0.0,
            ell_in: 1,
            w0_um: 250.0,
            waist_ratio: 1.4,
            basis_waist: BasisWaist::Auto,
            wavelength_um: 0.852,
            grid_n: None,
            extent_um: None,
            gamma_per_us: 0.2,
            t_s_us: 2.0,
            b_gauss: 0.3,
            g_factor: 0.25,
            delta_m: 2,
            fx_um: None,
            fy_um: None,
            lens_distance_um: None,
            curvature_um: 5.0e5,
            t_max_us: 20.0,
            dt_us: 0.02,
            out: None,
        }
    }
}

/// Which default grid a command wants when the config does not pin one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPurpose {
    /// Synthesis and decomposition: 512 cells over 8 w0.
    Transverse,
    /// Behind the calibrated lens the pattern shrinks to the focal scale
    /// and the lens chirp needs finer Nyquist headroom: 2048 over 14.4 w0.
    LensPlane,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Failure> {
    v.trim()
        .parse()
        .map_err(|_| Failure::Config(format!("config key {key}: cannot parse {v:?}")))
}

impl RunConfig {
    /// Defaults -> file -> flags.
    pub fn resolve(o: &Overrides) -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &o.config {
            cfg.apply_file(path)?;
        }
        cfg.apply_flags(o)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("config file {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Failure::Config(format!("config file {}:{}: expected key = value", path.display(), lineno + 1))
            })?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        match key {
            "theta" => self.theta_deg = parse_num(key, value)?,
            "ell" => self.ell_in = parse_num(key, value)?,
            "w0" => self.w0_um = parse_num(key, value)?,
            "waist_ratio" => self.waist_ratio = parse_num(key, value)?,
            "basis_waist" => {
                self.basis_waist = if value.eq_ignore_ascii_case("auto") {
                    BasisWaist::Auto
                } else {
                    BasisWaist::ExplicitUm(parse_num(key, value)?)
                }
            }
            "wavelength" => self.wavelength_um = parse_num(key, value)?,
            "grid_n" => self.grid_n = Some(parse_num(key, value)?),
            "extent" => self.extent_um = Some(parse_num(key, value)?),
            "gamma" => self.gamma_per_us = parse_num(key, value)?,
            "t_s" => self.t_s_us = parse_num(key, value)?,
            "b" => self.b_gauss = parse_num(key, value)?,
            "g_factor" => self.g_factor = parse_num(key, value)?,
            "delta_m" => self.delta_m = parse_num(key, value)?,
            "fx" => self.fx_um = Some(parse_num(key, value)?),
            "fy" => self.fy_um = Some(parse_num(key, value)?),
            "lens_distance" => self.lens_distance_um = Some(parse_num(key, value)?),
            "curvature" => self.curvature_um = parse_num(key, value)?,
            "t_max" => self.t_max_us = parse_num(key, value)?,
            "dt" => self.dt_us = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Failure::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    fn apply_flags(&mut self, o: &Overrides) -> Result<(), Failure> {
        if let Some(v) = o.theta {
            self.theta_deg = v;
        }
        if let Some(v) = o.ell {
            self.ell_in = v;
        }
        if let Some(v) = o.w0 {
            self.w0_um = v;
        }
        if let Some(v) = o.waist_ratio {
            self.waist_ratio = v;
        }
        if let Some(v) = &o.basis_waist {
            self.apply_kv("basis_waist", v)?;
        }
        if let Some(v) = o.wavelength {
            self.wavelength_um = v;
        }
        if let Some(v) = o.grid_n {
            self.grid_n = Some(v);
        }
        if let Some(v) = o.extent {
            self.extent_um = Some(v);
        }
        if let Some(v) = o.gamma {
            self.gamma_per_us = v;
        }
        if let Some(v) = o.t_s {
            self.t_s_us = v;
        }
        if let Some(v) = o.b {
            self.b_gauss = v;
        }
        if let Some(v) = o.g_factor {
            self.g_factor = v;
        }
        if let Some(v) = o.delta_m {
            self.delta_m = v;
        }
        if let Some(v) = o.fx {
            self.fx_um = Some(v);
        }
        if let Some(v) = o.fy {
            self.fy_um = Some(v);
        }
        if let Some(v) = o.lens_distance {
            self.lens_distance_um = Some(v);
        }
        if let Some(v) = o.curvature {
            self.curvature_um = v;
        }
        if let Some(v) = o.t_max {
            self.t_max_us = v;
        }
        if let Some(v) = o.dt {
            self.dt_us = v;
        }
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
        Ok(())
    }

    /// Cheap structural checks; physical invariants re-check inside the
    /// core constructors, so nothing invalid ever reaches a computation.
    fn validate(&self) -> Result<(), Failure> {
        let positive = [
            ("w0", self.w0_um),
            ("waist_ratio", self.waist_ratio),
            ("wavelength", self.wavelength_um),
            ("dt", self.dt_us),
            ("t_max", self.t_max_us),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let nonnegative = [
            ("theta", self.theta_deg),
            ("gamma", self.gamma_per_us),
            ("t_s", self.t_s_us),
            ("b", self.b_gauss),
        ];
        for (name, v) in nonnegative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Failure::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if let BasisWaist::ExplicitUm(v) = self.basis_waist {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::Config(format!("basis_waist must be positive, got {v}")));
            }
        }
        if self.t_max_us <= self.dt_us {
            return Err(Failure::Config(format!(
                "t_max = {} us must exceed dt = {} us",
                self.t_max_us, self.dt_us
            )));
        }
        if self.fx_um.is_some() != self.fy_um.is_some() {
            return Err(Failure::Config("set both fx and fy, or neither (calibrated lens)".into()));
        }
        Ok(())
    }

    pub fn beam(&self) -> Result<BeamParams, Failure> {
        Ok(BeamParams::new(self.w0_um * 1e-6, self.wavelength_um * 1e-6)?)
    }

    pub fn geometry(&self) -> Result<TiltGeometry, Failure> {
        Ok(TiltGeometry::from_degrees(self.theta_deg)?)
    }

    pub fn retrieval(&self) -> Result<RetrievalConfig, Failure> {
        let base = RetrievalConfig::default();
        Ok(RetrievalConfig::new(
            self.gamma_per_us * 1e6,
            self.t_s_us * 1e-6,
            base.tau_r,
            self.waist_ratio,
        )?)
    }

    pub fn basis_waist_m(&self) -> f64 {
        match self.basis_waist {
            BasisWaist::Auto => effective_waist(self.w0_um * 1e-6, self.waist_ratio),
            BasisWaist::ExplicitUm(um) => um * 1e-6,
        }
    }

    pub fn grid(&self, purpose: GridPurpose) -> Result<GridSpec, Failure> {
        let (n_def, ext_def) = match purpose {
            GridPurpose::Transverse => (512, 8.0 * self.w0_um),
            GridPurpose::LensPlane => (2048, 14.4 * self.w0_um),
        };
        let n = self.grid_n.unwrap_or(n_def);
        let extent = self.extent_um.unwrap_or(ext_def) * 1e-6;
        Ok(GridSpec::square(n, extent)?)
    }

    /// Explicit focals when given (distance defaulting to the x focus),
    /// otherwise the calibrated lens.
    pub fn lens(&self, beam: &BeamParams) -> Result<AstigmaticLens, Failure> {
        let lens = match (self.fx_um, self.fy_um) {
            (Some(fx), Some(fy)) => {
                let d = self
                    .lens_distance_um
                    .map(|um| um * 1e-6)
                    .unwrap_or_else(|| focus_distance(fx * 1e-6, beam.rayleigh_range()));
                AstigmaticLens::new(fx * 1e-6, fy * 1e-6, d)?
            }
            _ => {
                let lens = AstigmaticLens::calibrated(beam)?;
                match self.lens_distance_um {
                    Some(um) => lens.with_distance(um * 1e-6)?,
                    None => lens,
                }
            }
        };
        Ok(lens)
    }

    pub fn larmor(&self) -> Result<LarmorConfig, Failure> {
        Ok(LarmorConfig::new(self.b_gauss, self.g_factor, self.delta_m, self.gamma_per_us * 1e6)?)
    }

    pub fn curvature_m(&self) -> f64 {
        self.curvature_um * 1e-6
    }

    pub fn out_or(&self, default_name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default_name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    #[test]
    fn defaults_convert_to_si() {
        let cfg = RunConfig::default();
        let beam = cfg.beam().unwrap();
        assert_abs_diff_eq!(beam.w0, 250e-6, epsilon = 1e-18);
        assert_abs_diff_eq!(beam.wavelength, 852e-9, epsilon = 1e-21);
        let r = cfg.retrieval().unwrap();
        assert_abs_diff_eq!(r.gamma, 2.0e5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.t_s, 2.0e-6, epsilon = 1e-18);
        let g = cfg.grid(GridPurpose::Transverse).unwrap();
        assert_eq!(g.nx, 512);
        assert_abs_diff_eq!(g.extent_x(), 2e-3, epsilon = 1e-12);
        let lens = cfg.grid(GridPurpose::LensPlane).unwrap();
        assert_eq!(lens.nx, 2048);
        assert_abs_diff_eq!(lens.extent_x(), 3.6e-3, epsilon = 1e-12);
    }

    #[test]
    fn auto_basis_is_the_effective_waist() {
        let cfg = RunConfig::default();
        assert_abs_diff_eq!(cfg.basis_waist_m(), 203.43336780168374e-6, epsilon = 1e-18);
        let explicit = RunConfig { basis_waist: BasisWaist::ExplicitUm(300.0), ..cfg };
        assert_abs_diff_eq!(explicit.basis_waist_m(), 300e-6, epsilon = 1e-18);
    }

    #[test]
    fn file_then_flags_precedence() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(tmp, "# comment line").unwrap();
        writeln!(tmp, "theta = 10").unwrap();
        writeln!(tmp, "ell = 3   # trailing comment").unwrap();
        writeln!(tmp, "gamma = 0.1").unwrap();
        tmp.flush().unwrap();
        let o = Overrides {
            config: Some(tmp.path().to_path_buf()),
            theta: Some(5.0),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(&o).unwrap();
        assert_abs_diff_eq!(cfg.theta_deg, 5.0, epsilon = 1e-15); // flag wins
        assert_eq!(cfg.ell_in, 3); // file wins over default
        assert_abs_diff_eq!(cfg.gamma_per_us, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn bad_config_inputs_are_config_failures() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(tmp, "no_such_key = 1").unwrap();
        tmp.flush().unwrap();
        let o = Overrides { config: Some(tmp.path().to_path_buf()), ..Overrides::default() };
        match RunConfig::resolve(&o) {
            Err(f @ Failure::Config(_)) => assert_eq!(f.exit_code(), 2),
            other => panic!("expected config failure, got {other:?}"),
        }

        let o = Overrides { w0: Some(-1.0), ..Overrides::default() };
        assert!(matches!(RunConfig::resolve(&o), Err(Failure::Config(_))));

        let o = Overrides { fx: Some(11e3), ..Overrides::default() };
        assert!(matches!(RunConfig::resolve(&o), Err(Failure::Config(_))));
    }

    #[test]
    fn calibrated_lens_by_default() {
        let cfg = RunConfig::default();
        let beam = cfg.beam().unwrap();
        let lens = cfg.lens(&beam).unwrap();
        let zr = beam.rayleigh_range();
        assert_abs_diff_eq!(lens.fy, zr / 21.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lens.fx, 1.05 * zr / 21.0, epsilon = 1e-12);
        // explicit focals in micrometers
        let explicit = RunConfig { fx_um: Some(11e3), fy_um: Some(10e3), ..cfg };
        let lens = explicit.lens(&beam).unwrap();
        assert_abs_diff_eq!(lens.fx, 11e-3, epsilon = 1e-12);
        assert_abs_diff_eq!(lens.fy, 10e-3, epsilon = 1e-12);
    }
}
