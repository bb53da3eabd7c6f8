//! Run configuration: a flat TOML document with dotted sections, plus
//! construction of initial data from the configured family.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dynamics::SolutionState;
use crate::evolution::StepControl;
use crate::grid::{PeriodicField, PeriodicGrid};
use crate::Error;

const TWO_PI: f64 = 2.0 * PI;

fn default_n() -> usize {
    256
}
fn default_t_end() -> f64 {
    1.0
}
fn default_dealias() -> bool {
    true
}
fn default_output_stride() -> usize {
    10
}
fn default_output() -> String {
    "out".to_string()
}

/// Complete description of one run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dealias")]
    pub dealias: bool,
    #[serde(default = "default_output_stride")]
    pub output_stride: usize,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub step: StepControl,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub track: TrackSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("empty document parses to defaults")
    }
}

/// Which characteristics to track.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TrackSpec {
    /// "auto": evaluate the criterion first and track its x0.
    Mode(String),
    /// Explicit starting points.
    Points(Vec<f64>),
}

impl Default for TrackSpec {
    fn default() -> Self {
        TrackSpec::Mode("auto".to_string())
    }
}

/// Initial-data family.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// u0 = amp_u sin(2 pi x + phase_u), v0 = amp_v sin(2 pi x + phase_v).
    Sine {
        #[serde(default)]
        amp_u: f64,
        #[serde(default)]
        amp_v: f64,
        #[serde(default)]
        phase_u: f64,
        #[serde(default)]
        phase_v: f64,
    },
    /// u0 = a exp(kappa (cos 2 pi (x - center) - 1)), v0 per v_mode.
    Bump {
        a: f64,
        kappa: f64,
        #[serde(default = "default_center")]
        center: f64,
        #[serde(default)]
        v_mode: VMode,
    },
    /// One-sided coefficient lists: entries [k, re, im] for k >= 0; the
    /// negative wavenumbers are filled by Hermitian symmetry.
    Fourier {
        #[serde(default)]
        u_modes: Vec<(i64, f64, f64)>,
        #[serde(default)]
        v_modes: Vec<(i64, f64, f64)>,
    },
    /// Whitespace-separated "u v" sample rows, one per grid node.
    File { path: String },
}

fn default_center() -> f64 {
    0.5
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Sine {
            amp_u: 0.05,
            amp_v: 0.0,
            phase_u: 0.0,
            phase_v: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum VMode {
    #[default]
    Zero,
    Equal,
}

/// One-parameter family axis for sweep mode.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Name of the bump parameter to vary: "a" or "kappa".
    pub parameter: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    /// Also simulate each member and report break_time / tstar.
    #[serde(default)]
    pub simulate: bool,
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, Error> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &RunConfig) -> Result<String, Error> {
    toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))
}

fn validate(cfg: &RunConfig) -> Result<(), Error> {
    if cfg.n < 16 || !cfg.n.is_power_of_two() {
        return Err(Error::Config(format!(
            "n must be a power of two >= 16, got {}",
            cfg.n
        )));
    }
    if !(cfg.t_end > 0.0) {
        return Err(Error::Config(format!("t_end must be positive, got {}", cfg.t_end)));
    }
    if cfg.output_stride == 0 {
        return Err(Error::Config("output_stride must be positive".to_string()));
    }
    cfg.step.validate()?;
    match &cfg.initial {
        InitialSpec::Sine {
            amp_u,
            amp_v,
            phase_u,
            phase_v,
        } => {
            for (key, v) in [
                ("initial.amp_u", amp_u),
                ("initial.amp_v", amp_v),
                ("initial.phase_u", phase_u),
                ("initial.phase_v", phase_v),
            ] {
                if !v.is_finite() {
                    return Err(Error::Config(format!("{key} must be finite")));
                }
            }
        }
        InitialSpec::Bump { a, kappa, center, .. } => {
            if !a.is_finite() || !center.is_finite() {
                return Err(Error::Config("initial.a and initial.center must be finite".into()));
            }
            if !(*kappa > 0.0) {
                return Err(Error::Config(format!(
                    "initial.kappa must be positive, got {kappa}"
                )));
            }
        }
        InitialSpec::Fourier { u_modes, v_modes } => {
            for (key, modes) in [("initial.u_modes", u_modes), ("initial.v_modes", v_modes)] {
                for &(k, re, im) in modes {
                    if k < 0 {
                        return Err(Error::Config(format!(
                            "{key}: wavenumbers must be nonnegative (negative side is Hermitian), got {k}"
                        )));
                    }
                    if !re.is_finite() || !im.is_finite() {
                        return Err(Error::Config(format!("{key}: coefficients must be finite")));
                    }
                    if k == 0 && im != 0.0 {
                        return Err(Error::Config(format!(
                            "{key}: the k = 0 coefficient must be real for a real field"
                        )));
                    }
                }
            }
        }
        InitialSpec::File { .. } => {}
    }
    match &cfg.track {
        TrackSpec::Mode(m) if m != "auto" => {
            return Err(Error::Config(format!(
                "track must be \"auto\" or a list of positions, got {m:?}"
            )));
        }
        TrackSpec::Points(pts) => {
            if pts.iter().any(|p| !p.is_finite()) {
                return Err(Error::Config("track points must be finite".to_string()));
            }
        }
        _ => {}
    }
    if let Some(sweep) = &cfg.sweep {
        if sweep.parameter != "a" && sweep.parameter != "kappa" {
            return Err(Error::Config(format!(
                "sweep.parameter must be \"a\" or \"kappa\", got {:?}",
                sweep.parameter
            )));
        }
        if sweep.count == 0 {
            return Err(Error::Config("sweep.count must be positive".to_string()));
        }
        if sweep.count > 1 && !(sweep.max > sweep.min) {
            return Err(Error::Config("sweep.max must exceed sweep.min".to_string()));
        }
    }
    Ok(())
}

fn one_sided_field(grid: &PeriodicGrid, modes: &[(i64, f64, f64)]) -> PeriodicField {
    let mut s = grid.zeros().to_spectrum();
    let half = grid.len() as i64 / 2;
    for &(k, re, im) in modes {
        debug_assert!(k >= 0);
        if k >= half {
            continue;
        }
        *s.coeff_mut(k) = num_complex::Complex64::new(re, im);
        if k > 0 {
            *s.coeff_mut(-k) = num_complex::Complex64::new(re, -im);
        }
    }
    s.to_field()
}

/// Sample the configured family on the grid at t = 0.
pub fn build_initial(spec: &InitialSpec, grid: &PeriodicGrid) -> Result<SolutionState, Error> {
    let (u, v) = match spec {
        InitialSpec::Sine {
            amp_u,
            amp_v,
            phase_u,
            phase_v,
        } => (
            grid.field_from_fn(|x| amp_u * (TWO_PI * x + phase_u).sin()),
            grid.field_from_fn(|x| amp_v * (TWO_PI * x + phase_v).sin()),
        ),
        InitialSpec::Bump {
            a,
            kappa,
            center,
            v_mode,
        } => {
            let u = grid.field_from_fn(|x| a * (kappa * ((TWO_PI * (x - center)).cos() - 1.0)).exp());
            let v = match v_mode {
                VMode::Zero => grid.zeros(),
                VMode::Equal => u.clone(),
            };
            (u, v)
        }
        InitialSpec::Fourier { u_modes, v_modes } => (
            one_sided_field(grid, u_modes),
            one_sided_field(grid, v_modes),
        ),
        InitialSpec::File { path } => {
            let text = std::fs::read_to_string(path)?;
            let mut us = Vec::new();
            let mut vs = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let mut it = line.split_whitespace();
                let parse = |tok: Option<&str>| -> Result<f64, Error> {
                    tok.ok_or_else(|| {
                        Error::Config(format!("{path}:{}: expected two columns", lineno + 1))
                    })?
                    .parse()
                    .map_err(|e| Error::Config(format!("{path}:{}: {e}", lineno + 1)))
                };
                us.push(parse(it.next())?);
                vs.push(parse(it.next())?);
            }
            if us.len() != grid.len() {
                return Err(Error::Config(format!(
                    "{path}: {} rows but the grid has {} nodes",
                    us.len(),
                    grid.len()
                )));
            }
            (
                PeriodicField::new(grid.clone(), us),
                PeriodicField::new(grid.clone(), vs),
            )
        }
    };
    if !u.is_finite() || !v.is_finite() {
        return Err(Error::NonFiniteField);
    }
    Ok(SolutionState::new(0.0, u, v))
}

/// The frozen breaking fixture: a steep symmetric bump on a fine grid that
/// satisfies the blowup criterion and whose simulated breaking time, break
/// location and tracked characteristic all land inside the predicted bounds.
pub fn fixture_breaking_config() -> RunConfig {
    RunConfig {
        n: 1024,
        t_end: 3e-3,
        step: StepControl {
            slope_threshold: 2200.0,
            ..StepControl::default()
        },
        initial: InitialSpec::Bump {
            a: 20.0,
            kappa: 60.0,
            center: 0.5,
            v_mode: VMode::Equal,
        },
        ..RunConfig::default()
    }
}

/// Smooth-regime bump with u0 = v0, used by the reduction oracle.
pub fn fixture_smooth_bump() -> InitialSpec {
    InitialSpec::Bump {
        a: 0.05,
        kappa: 10.0,
        center: 0.5,
        v_mode: VMode::Equal,
    }
}
