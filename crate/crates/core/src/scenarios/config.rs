//! TOML scenario configuration.
//!
//! ```toml
//! scenario = "double_slit"          # required
//! output_dir = "out/dsi"            # default "output/<scenario>"
//!
//! [grid]                            # nx, ny, lx, ly
//! nx = 512
//!
//! [[vortex]]                        # one or two entries; replaces the defaults
//! l = 13
//! sigma = 2.0
//! center = [0.0, 3.0]
//! weight = [1.0, 0.0]               # re, im
//!
//! [params]                          # v0, g1, g2, g12
//!
//! [coupling]                        # kappa | kappa_over_pi | [[coupling.segment]]
//! kappa_over_pi = 50.0
//!
//! [evolution]                       # dt, n_steps | t_end, snapshot_stride,
//! t_end = 5.0                       # boundary_warn_threshold, snapshots
//!
//! [double_slit]                     # mode, measure_time, collapse_kappa_over_pi, y_screen
//! mode = "QMBDSI"
//!
//! [free_particle]                   # varpi = [0.0, 3.0, -3.0]
//!
//! [rabi_validation]                 # tolerance
//! ```
//!
//! Unknown keys are rejected. See the README for every default.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::Deserialize;

use crate::dynamics::{CouplingSchedule, EvolutionConfig, PhysicalParams};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::oracle::OracleRegime;
use crate::states::VortexSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    RabiValidation,
    VortexLattice,
    SingleVortex,
    FreeParticle,
    DoubleSlit,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::RabiValidation => "rabi_validation",
            Self::VortexLattice => "vortex_lattice",
            Self::SingleVortex => "single_vortex",
            Self::FreeParticle => "free_particle",
            Self::DoubleSlit => "double_slit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SlitMode {
    #[serde(rename = "DSI")]
    Dsi,
    #[serde(rename = "QMBDSI")]
    Qmbdsi,
    #[serde(rename = "QMADSI")]
    Qmadsi,
}

impl SlitMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dsi => "DSI",
            Self::Qmbdsi => "QMBDSI",
            Self::Qmadsi => "QMADSI",
        }
    }

    pub fn collapses(self) -> bool {
        self != Self::Dsi
    }

    /// Default collapse instant as a fraction of the run.
    pub fn default_measure_fraction(self) -> Option<f64> {
        match self {
            Self::Dsi => None,
            Self::Qmbdsi => Some(0.2),
            Self::Qmadsi => Some(0.6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotPolicy {
    /// Every `snapshot_stride` steps, plus the final state.
    All,
    Final,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSlitConfig {
    pub mode: SlitMode,
    pub kappa0: f64,
    pub collapse_kappa: f64,
    pub measure_time: Option<f64>,
    pub y_screen: f64,
}

/// Fully resolved, validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub grid: GridSpec,
    /// One spec (single_vortex) or two.
    pub specs: Vec<VortexSpec>,
    pub params: PhysicalParams,
    pub schedule: CouplingSchedule,
    pub evolution: EvolutionConfig,
    pub snapshots: SnapshotPolicy,
    pub double_slit: Option<DoubleSlitConfig>,
    /// Phase rates swept by free_particle; empty elsewhere.
    pub varpi: Vec<f64>,
    /// Oracle agreement bound for rabi_validation.
    pub tolerance: f64,
    pub output_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn t_end(&self) -> f64 {
        self.evolution.dt * self.evolution.n_steps as f64
    }

    pub fn y_screen(&self) -> Option<f64> {
        self.double_slit.as_ref().map(|d| d.y_screen)
    }

    pub fn measure_time(&self) -> Option<f64> {
        self.double_slit.as_ref().and_then(|d| d.measure_time)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<ScenarioKind>,
    output_dir: Option<PathBuf>,
    grid: Option<RawGrid>,
    vortex: Option<Vec<RawVortex>>,
    params: Option<RawParams>,
    coupling: Option<RawCoupling>,
    evolution: Option<RawEvolution>,
    double_slit: Option<RawDoubleSlit>,
    free_particle: Option<RawFreeParticle>,
    rabi_validation: Option<RawRabi>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: Option<usize>,
    ny: Option<usize>,
    lx: Option<f64>,
    ly: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVortex {
    l: i32,
    sigma: Option<f64>,
    center: Option<[f64; 2]>,
    weight: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    v0: Option<f64>,
    g1: Option<f64>,
    g2: Option<f64>,
    g12: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    kappa: Option<f64>,
    kappa_over_pi: Option<f64>,
    segment: Option<Vec<RawSegment>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    t_start: f64,
    kappa: Option<f64>,
    kappa_over_pi: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvolution {
    dt: Option<f64>,
    n_steps: Option<usize>,
    t_end: Option<f64>,
    snapshot_stride: Option<usize>,
    boundary_warn_threshold: Option<f64>,
    snapshots: Option<SnapshotPolicy>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoubleSlit {
    mode: Option<SlitMode>,
    measure_time: Option<f64>,
    collapse_kappa_over_pi: Option<f64>,
    y_screen: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFreeParticle {
    varpi: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRabi {
    tolerance: Option<f64>,
}

/// Scenario defaults applied to absent keys.
struct Defaults {
    grid: (usize, f64),
    specs: Vec<VortexSpec>,
    v0: f64,
    kappa: f64,
    dt: f64,
    n_steps: usize,
    stride: usize,
    snapshots: SnapshotPolicy,
}

fn defaults(kind: ScenarioKind, v0: Option<f64>) -> Defaults {
    match kind {
        ScenarioKind::RabiValidation => {
            let v0 = v0.unwrap_or(0.5);
            let sigma = v0.powf(-0.25);
            Defaults {
                grid: (256, 24.0),
                specs: vec![
                    VortexSpec::centered(6, sigma),
                    VortexSpec::centered(0, sigma),
                ],
                v0,
                kappa: 25.0 * PI,
                dt: 1e-4,
                n_steps: 800,
                stride: 10,
                snapshots: SnapshotPolicy::Final,
            }
        }
        ScenarioKind::VortexLattice => Defaults {
            grid: (256, 24.0),
            specs: vec![VortexSpec::centered(6, 2.0), VortexSpec::centered(0, 2.0)],
            v0: 0.5,
            kappa: 25.0 * PI,
            dt: 1e-4,
            n_steps: 10_000,
            stride: 500,
            snapshots: SnapshotPolicy::All,
        },
        ScenarioKind::SingleVortex => Defaults {
            grid: (256, 24.0),
            specs: vec![VortexSpec::centered(6, 2.0)],
            v0: 0.5,
            kappa: 0.0,
            dt: 1e-4,
            n_steps: 2000,
            stride: 200,
            snapshots: SnapshotPolicy::All,
        },
        ScenarioKind::FreeParticle => {
            let s = VortexSpec::centered(13, 0.5).at(2.0, 0.0);
            Defaults {
                grid: (256, 24.0),
                specs: vec![s, s],
                v0: 0.0,
                kappa: 15.0 * PI,
                dt: 1e-4,
                n_steps: 2500,
                stride: 250,
                snapshots: SnapshotPolicy::Final,
            }
        }
        ScenarioKind::DoubleSlit => Defaults {
            grid: (512, 128.0),
            specs: vec![
                VortexSpec::centered(13, 2.0).at(0.0, 3.0),
                VortexSpec::centered(-13, 2.0).at(0.0, 9.0),
            ],
            v0: 0.0,
            kappa: 50.0 * PI,
            dt: 2.5e-3,
            n_steps: 2000,
            stride: 200,
            snapshots: SnapshotPolicy::Final,
        },
    }
}

pub const DEFAULT_Y_SCREEN: f64 = 28.0;
pub const DEFAULT_COLLAPSE_KAPPA_OVER_PI: f64 = 0.05;
pub const DEFAULT_VARPI: [f64; 3] = [0.0, 3.0, -3.0];
pub const DEFAULT_RABI_TOLERANCE: f64 = 1e-6;

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        other => Error::config(other.to_string()),
    }
}

fn pick_kappa(kappa: Option<f64>, over_pi: Option<f64>, what: &str) -> Result<Option<f64>> {
    match (kappa, over_pi) {
        (Some(_), Some(_)) => Err(Error::config(format!(
            "{what}: give kappa or kappa_over_pi, not both"
        ))),
        (Some(k), None) => Ok(Some(k)),
        (None, Some(k)) => Ok(Some(k * PI)),
        (None, None) => Ok(None),
    }
}

fn unused(present: bool, key: &str, kind: ScenarioKind) -> Result<()> {
    if present {
        Err(Error::config(format!(
            "[{key}] does not apply to scenario {}",
            kind.name()
        )))
    } else {
        Ok(())
    }
}

/// Parses and validates a configuration, filling scenario defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|s| line_of(text, s.start)),
        msg: e.message().trim().to_string(),
    })?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ScenarioConfig> {
    let kind = raw
        .scenario
        .ok_or_else(|| Error::config("missing required key `scenario`"))?;
    let raw_params = raw.params.unwrap_or_default();
    let d = defaults(kind, raw_params.v0);

    let g = raw.grid.unwrap_or_default();
    let grid = GridSpec::new(
        g.nx.unwrap_or(d.grid.0),
        g.ny.unwrap_or(d.grid.0),
        g.lx.unwrap_or(d.grid.1),
        g.ly.unwrap_or(d.grid.1),
    )
    .map_err(cfg_err)?;

    let default_sigma = d.specs[0].sigma;
    let specs = match raw.vortex {
        None => d.specs.clone(),
        Some(list) => list
            .into_iter()
            .map(|v| {
                let c = v.center.unwrap_or([0.0, 0.0]);
                let w = v.weight.unwrap_or([1.0, 0.0]);
                VortexSpec::centered(v.l, v.sigma.unwrap_or(default_sigma))
                    .at(c[0], c[1])
                    .with_weight(Complex64::new(w[0], w[1]))
            })
            .collect(),
    };
    let wanted = if kind == ScenarioKind::SingleVortex {
        1..=1
    } else {
        1..=2
    };
    if !wanted.contains(&specs.len()) {
        return Err(Error::config(format!(
            "scenario {} takes {} [[vortex]] entries, got {}",
            kind.name(),
            if kind == ScenarioKind::SingleVortex {
                "one"
            } else {
                "one or two"
            },
            specs.len()
        )));
    }
    let specs = if specs.len() == 1 && kind != ScenarioKind::SingleVortex {
        if kind != ScenarioKind::FreeParticle {
            return Err(Error::config(format!(
                "scenario {} needs two [[vortex]] entries",
                kind.name()
            )));
        }
        vec![specs[0], specs[0]]
    } else {
        specs
    };
    for s in &specs {
        s.validate().map_err(cfg_err)?;
    }

    let params = PhysicalParams {
        v0: raw_params.v0.unwrap_or(d.v0),
        g1: raw_params.g1.unwrap_or(0.0),
        g2: raw_params.g2.unwrap_or(0.0),
        g12: raw_params.g12.unwrap_or(0.0),
        phase_rate: 0.0,
    };
    params.validate().map_err(cfg_err)?;

    let ev = raw.evolution.unwrap_or_default();
    let dt = ev.dt.unwrap_or(d.dt);
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config(format!(
            "evolution.dt = {dt} must be positive"
        )));
    }
    let n_steps = match (ev.n_steps, ev.t_end) {
        (Some(_), Some(_)) => {
            return Err(Error::config("evolution: give n_steps or t_end, not both"));
        }
        (Some(n), None) => n,
        (None, Some(t)) => {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::config(format!(
                    "evolution.t_end = {t} must be positive"
                )));
            }
            let n = (t / dt).round();
            if ((n * dt - t) / t).abs() > 1e-9 {
                return Err(Error::config(format!(
                    "evolution.t_end = {t} is not a whole number of steps of dt = {dt}"
                )));
            }
            n as usize
        }
        (None, None) => d.n_steps,
    };
    let mut evolution = EvolutionConfig::new(dt, n_steps, ev.snapshot_stride.unwrap_or(d.stride));
    if let Some(b) = ev.boundary_warn_threshold {
        evolution.boundary_warn_threshold = b;
    }
    evolution.validate().map_err(cfg_err)?;
    let t_end = dt * n_steps as f64;

    let coupling = raw.coupling.unwrap_or_default();
    let constant = pick_kappa(coupling.kappa, coupling.kappa_over_pi, "coupling")?;
    let segments = match coupling.segment {
        Some(list) => {
            if constant.is_some() {
                return Err(Error::config(
                    "coupling: give a constant kappa or segments, not both",
                ));
            }
            let mut out = Vec::with_capacity(list.len());
            for (i, s) in list.iter().enumerate() {
                let k = pick_kappa(s.kappa, s.kappa_over_pi, &format!("coupling.segment[{i}]"))?
                    .ok_or_else(|| {
                        Error::config(format!(
                            "coupling.segment[{i}] needs kappa or kappa_over_pi"
                        ))
                    })?;
                out.push((s.t_start, k));
            }
            Some(out)
        }
        None => None,
    };

    unused(
        raw.double_slit.is_some() && kind != ScenarioKind::DoubleSlit,
        "double_slit",
        kind,
    )?;
    unused(
        raw.free_particle.is_some() && kind != ScenarioKind::FreeParticle,
        "free_particle",
        kind,
    )?;
    unused(
        raw.rabi_validation.is_some() && kind != ScenarioKind::RabiValidation,
        "rabi_validation",
        kind,
    )?;

    let mut double_slit = None;
    let schedule = if kind == ScenarioKind::DoubleSlit {
        if segments.is_some() {
            return Err(Error::config(
                "double_slit builds its schedule from kappa and the mode; segments are not allowed",
            ));
        }
        let ds = raw.double_slit.unwrap_or_default();
        let mode = ds.mode.unwrap_or(SlitMode::Dsi);
        let kappa0 = constant.unwrap_or(d.kappa);
        let collapse_kappa = ds
            .collapse_kappa_over_pi
            .unwrap_or(DEFAULT_COLLAPSE_KAPPA_OVER_PI)
            * PI;
        if !collapse_kappa.is_finite() {
            return Err(Error::config(
                "double_slit.collapse_kappa_over_pi must be finite",
            ));
        }
        let y_screen = ds.y_screen.unwrap_or(DEFAULT_Y_SCREEN);
        if grid.nearest_row(y_screen).is_none() {
            return Err(Error::config(format!(
                "double_slit.y_screen = {y_screen} lies outside the box"
            )));
        }
        let measure_time = match (mode.default_measure_fraction(), ds.measure_time) {
            (None, Some(_)) => {
                return Err(Error::config(
                    "double_slit.measure_time requires mode QMBDSI or QMADSI",
                ));
            }
            (None, None) => None,
            (Some(f), m) => {
                let m = m.unwrap_or(f * t_end);
                if !(m > 0.0 && m < t_end) {
                    return Err(Error::config(format!(
                        "double_slit.measure_time = {m} must lie inside the run (0, {t_end})"
                    )));
                }
                Some(m)
            }
        };
        let schedule = match measure_time {
            None => CouplingSchedule::constant(kappa0),
            Some(m) => {
                CouplingSchedule::new(vec![(0.0, kappa0), (m, collapse_kappa)]).map_err(cfg_err)?
            }
        };
        double_slit = Some(DoubleSlitConfig {
            mode,
            kappa0,
            collapse_kappa,
            measure_time,
            y_screen,
        });
        schedule
    } else {
        match segments {
            Some(s) => CouplingSchedule::new(s).map_err(cfg_err)?,
            None => CouplingSchedule::constant(constant.unwrap_or(d.kappa)),
        }
    };

    let varpi = if kind == ScenarioKind::FreeParticle {
        let v = raw
            .free_particle
            .and_then(|f| f.varpi)
            .unwrap_or_else(|| DEFAULT_VARPI.to_vec());
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::config(
                "free_particle.varpi must be a non-empty list of finite values",
            ));
        }
        v
    } else {
        Vec::new()
    };

    let tolerance = raw
        .rabi_validation
        .and_then(|r| r.tolerance)
        .unwrap_or(DEFAULT_RABI_TOLERANCE);
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::config("rabi_validation.tolerance must be positive"));
    }
    if kind == ScenarioKind::RabiValidation {
        let kappa = schedule.segments()[0].1;
        if schedule.segments().len() != 1 {
            return Err(Error::config("rabi_validation needs a constant kappa"));
        }
        OracleRegime::new(&params, specs[0], specs[1], kappa).map_err(cfg_err)?;
    }

    Ok(ScenarioConfig {
        scenario: kind,
        grid,
        specs,
        params,
        schedule,
        evolution,
        snapshots: ev.snapshots.unwrap_or(d.snapshots),
        double_slit,
        varpi,
        tolerance,
        output_dir: raw
            .output_dir
            .unwrap_or_else(|| PathBuf::from("output").join(kind.name())),
    })
}

/// Reads and parses a config file; read failures are I/O errors.
pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
