//! Experiment configuration, read from TOML.
//!
//! Every section except `[potential]`, `[factorization]`, `[scatterers]`,
//! `[wave]` and `[effective]` may be omitted; `configs/example.toml` lists
//! all keys with their defaults.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::effective::{LsOptions, Matvec, QSampling};
use crate::error::{Error, Result};
use crate::fields::{factorize_potential, BoundedDomain, Factorization, Point, PotentialSpec, Profile, WaveContext};
use crate::foldy_lax::{SolveMode, SolverOptions};
use crate::krylov::GmresConfig;
use crate::oned::Interval1D;
use crate::placement::PlacementParams;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Required in 3D.
    #[serde(default)]
    pub domain: Option<BoundedDomain>,
    /// Required in 1D.
    #[serde(default)]
    pub interval: Option<IntervalConfig>,
    pub potential: Profile,
    pub factorization: FactorizationConfig,
    pub scatterers: ScattererConfig,
    pub wave: WaveConfig,
    pub effective: EffectiveConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub far_field: FarFieldConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_dimension() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalConfig {
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationConfig {
    pub strategy: Factorization,
    pub level: f64,
    #[serde(default = "default_n_max")]
    pub n_max: f64,
}

fn default_n_max() -> f64 {
    crate::fields::N_MAX_DEFAULT
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererConfig {
    /// Strictly decreasing.
    pub radii: Vec<f64>,
    #[serde(default = "default_cell_scale")]
    pub cell_scale: f64,
    #[serde(default = "default_samples")]
    pub samples_per_axis: usize,
}

fn default_cell_scale() -> f64 {
    2.0
}

fn default_samples() -> usize {
    6
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    pub k: f64,
    /// Defaults to `+z` in 3D; 1D always uses `+x`.
    #[serde(default)]
    pub direction: Option<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingConfig {
    Node,
    CellAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveConfig {
    pub h: f64,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingConfig,
    #[serde(default = "default_cell_samples")]
    pub cell_samples: usize,
}

fn default_sampling() -> SamplingConfig {
    SamplingConfig::Node
}

fn default_cell_samples() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub points_per_axis: usize,
    /// Probe box size relative to the domain's bounding box.
    pub scale: f64,
    /// Probe points closer than `exclusion * a` to a center are dropped.
    pub exclusion: f64,
    pub points_1d: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            points_per_axis: 9,
            scale: 1.2,
            exclusion: 2.0,
            points_1d: 401,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FarFieldConfig {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for FarFieldConfig {
    fn default() -> Self {
        FarFieldConfig { n_theta: 18, n_phi: 36 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: String,
    pub tol: f64,
    pub restart: usize,
    pub max_iters: usize,
    pub dense_cap: usize,
    pub ka_warn: f64,
    pub ka_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverConfig {
            mode: "iterative".into(),
            tol: o.gmres.tol,
            restart: o.gmres.restart,
            max_iters: o.gmres.max_iters,
            dense_cap: o.dense_cap,
            ka_warn: o.ka_warn,
            ka_limit: o.ka_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                msg: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn domain(&self) -> Result<BoundedDomain> {
        let d = self
            .domain
            .ok_or_else(|| Error::Config("3D runs need a [domain] section".into()))?;
        d.validate()?;
        Ok(d)
    }

    pub fn interval(&self) -> Result<Interval1D> {
        let i = self
            .interval
            .ok_or_else(|| Error::Config("1D runs need an [interval] section".into()))?;
        Interval1D::new(i.c, i.d)
    }

    pub fn wave_context(&self) -> Result<WaveContext> {
        let dir = if self.dimension == 1 {
            [1.0, 0.0, 0.0]
        } else {
            self.wave.direction.unwrap_or([0.0, 0.0, 1.0])
        };
        WaveContext::new(self.wave.k, dir)
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        self.potential.validate()?;
        let f = &self.factorization;
        factorize_potential(self.potential.clone().into_field(), f.strategy, f.level, f.n_max)
    }

    pub fn solve_mode(&self) -> Result<SolveMode> {
        self.solver.mode.parse()
    }

    pub fn solver_options(&self) -> Result<SolverOptions> {
        let s = &self.solver;
        Ok(SolverOptions {
            mode: self.solve_mode()?,
            gmres: self.gmres(),
            dense_cap: s.dense_cap,
            ka_warn: s.ka_warn,
            ka_limit: s.ka_limit,
            ..Default::default()
        })
    }

    fn gmres(&self) -> GmresConfig {
        GmresConfig {
            restart: self.solver.restart,
            max_iters: self.solver.max_iters,
            tol: self.solver.tol,
        }
    }

    pub fn ls_options(&self) -> LsOptions {
        LsOptions {
            gmres: self.gmres(),
            matvec: Matvec::Fft,
            sampling: match self.effective.sampling {
                SamplingConfig::Node => QSampling::Node,
                SamplingConfig::CellAverage => QSampling::CellAverage {
                    per_axis: self.effective.cell_samples,
                },
            },
            ..Default::default()
        }
    }

    pub fn placement_params(&self) -> PlacementParams {
        PlacementParams {
            cell_scale: self.scatterers.cell_scale,
            samples_per_axis: self.scatterers.samples_per_axis,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// One problem found in a config, with a suggested fix.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub hint: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}[{}]: {} (hint: {})", self.code, self.message, self.hint)
    }
}

/// Every violation in `cfg`; empty when the config is well formed.
pub fn validate_config(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |severity, code, message: String, hint: &str| {
        out.push(Diagnostic {
            severity,
            code,
            message,
            hint: hint.to_string(),
        })
    };
    use Severity::{Error as E, Warning as W};

    match cfg.dimension {
        3 => {
            if let Err(e) = cfg.domain() {
                push(E, "domain", e.to_string(), "give [domain] kind = \"box\" or \"ball\" with valid extents");
            }
        }
        1 => {
            if let Err(e) = cfg.interval() {
                push(E, "domain", e.to_string(), "give [interval] c and d with c < d");
            }
        }
        d => push(E, "dimension", format!("dimension must be 1 or 3, got {d}"), "set dimension = 3 or 1"),
    }
    if let Err(e) = cfg.potential.validate() {
        push(E, "potential", e.to_string(), "check the [potential] parameters");
    }
    if let Err(e) = cfg.wave_context() {
        push(E, "wave", e.to_string(), "use k > 0 and a nonzero direction");
    }
    if cfg.dimension == 1 && cfg.wave.direction.is_some_and(|d| d != [1.0, 0.0, 0.0]) {
        push(W, "wave", "1D runs ignore [wave] direction".into(), "remove the direction key");
    }

    let radii = &cfg.scatterers.radii;
    if radii.is_empty() {
        push(E, "radii", "scatterers.radii is empty".into(), "list at least one radius");
    }
    if radii.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        push(E, "radii", "radii must be positive and finite".into(), "remove non-positive radii");
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        push(E, "radii", "radii must be strictly decreasing".into(), "sort radii from largest to smallest");
    }
    let k = cfg.wave.k;
    if let Some(&a_max) = radii.iter().max_by(|a, b| a.total_cmp(b)) {
        let ka = k * a_max;
        if ka > cfg.solver.ka_limit {
            push(
                E,
                "ka",
                format!("k a = {ka:.3} at a = {a_max} is outside the ka<<1 regime (limit {})", cfg.solver.ka_limit),
                "use smaller radii or a smaller wavenumber",
            );
        } else if ka > cfg.solver.ka_warn {
            push(
                W,
                "ka",
                format!("k a = {ka:.3} at a = {a_max} is only marginally small (ka<<1 expected)"),
                "expect slower convergence at this level",
            );
        }
    }

    if let Err(e) = cfg.potential_spec() {
        let code = if e.to_string().contains("n_max") { "n_max" } else { "factorization" };
        push(
            E,
            code,
            e.to_string(),
            "lower the density level (balls overlap above n_max) or switch strategy",
        );
    }

    let h = cfg.effective.h;
    let kh_limit = if cfg.dimension == 1 { 0.2 } else { LsOptions::default().kh_limit };
    if !(h > 0.0) {
        push(E, "resolution", format!("effective.h must be > 0, got {h}"), "set a positive grid spacing");
    } else {
        if k * h > kh_limit {
            push(
                E,
                "resolution",
                format!("k h = {:.3} exceeds {kh_limit}", k * h),
                "refine effective.h to resolve the wavelength",
            );
        }
        let scale = cfg.potential.length_scale();
        if h > scale / 4.0 {
            push(
                W,
                "resolution",
                format!("h = {h} is coarse next to the potential's length scale {scale}"),
                "use h at most a quarter of the length scale",
            );
        }
    }
    if cfg.probe.points_per_axis < 2 || cfg.probe.points_1d < 2 || !(cfg.probe.scale > 0.0) {
        push(E, "probe", "probe needs >= 2 points per axis and scale > 0".into(), "see [probe]");
    }
    if cfg.far_field.n_theta == 0 || cfg.far_field.n_phi == 0 {
        push(E, "far-field", "far-field quadrature is empty".into(), "set n_theta and n_phi > 0");
    }
    if let Err(e) = cfg.solve_mode() {
        push(E, "solver", e.to_string(), "use mode = \"dense\" or \"iterative\"");
    }
    if !(cfg.solver.tol > 0.0) {
        push(E, "solver", "solver.tol must be > 0".into(), "use e.g. 1e-8");
    }
    out
}
