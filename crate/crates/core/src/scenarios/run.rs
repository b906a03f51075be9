use std::f64::consts::FRAC_1_SQRT_2;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::diagnostics::{
    self, centroid, coincidence_envelope, coincidence_pattern, count_modes, detect_vortex_cores,
    fringe_period, fringe_signal, fringe_visibility, loop_winding, screen_profile,
    DiagnosticsRecorder, CORE_DENSITY_FLOOR, FRINGE_THRESHOLD, SUPPORT_LEVEL,
};
use crate::dynamics::{evolve, BoundaryWarning, EvolutionSink, PhysicalParams};
use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::oracle::{analytic_state, OracleRegime};
use crate::states::{cvss_initial, vortex_ansatz, TwoComponentState, VortexSpec};

use super::config::{ScenarioConfig, ScenarioKind, SnapshotPolicy};
use super::output::{
    columns_csv, diagnostics_csv, sha256_hex, write_manifest, Check, Manifest, OutputDir,
};
use super::snapshot::{encode, Snapshot, FORMAT_VERSION};

/// Largest relative L2 difference allowed between free-particle densities
/// for different ϖ.
pub const VARPI_TOLERANCE: f64 = 1e-12;

/// Accepted band for the coincidence / one-particle fringe-period ratio.
pub const FRINGE_RATIO_TARGET: f64 = 0.5;
pub const FRINGE_RATIO_TOL: f64 = 0.05;

/// Relative slack on the source separation recovered from per-source centroids.
pub const LOBE_SEPARATION_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scenario: ScenarioKind,
    pub output_dir: PathBuf,
    pub manifest_path: PathBuf,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub metadata: Map<String, Value>,
}

impl RunSummary {
    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(Value::as_f64)
    }
}

struct Ctx<'a> {
    config: &'a ScenarioConfig,
    out: OutputDir,
    checks: Vec<Check>,
    metadata: Map<String, Value>,
    warnings: Vec<String>,
}

impl Ctx<'_> {
    fn meta(&mut self, key: &str, v: impl Into<Value>) {
        self.metadata.insert(key.into(), v.into());
    }

    fn note_boundary(&mut self, label: &str, w: &[BoundaryWarning]) {
        if let Some(worst) = w.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)) {
            self.warnings.push(format!(
                "{label}: edge magnitude above threshold at {} observations (first t = {:.6}, worst {:.3e} at t = {:.6})",
                w.len(),
                w[0].t,
                worst.ratio,
                worst.t
            ));
        }
    }
}

/// Runs a scenario, writing all outputs and the manifest into `config.output_dir`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunSummary> {
    run_scenario_with_source(config, None)
}

/// As `run_scenario`, recording the digest of the config text in the manifest.
pub fn run_scenario_with_source(
    config: &ScenarioConfig,
    source: Option<&str>,
) -> Result<RunSummary> {
    let mut ctx = Ctx {
        config,
        out: OutputDir::create(&config.output_dir)?,
        checks: Vec::new(),
        metadata: Map::new(),
        warnings: Vec::new(),
    };
    describe(&mut ctx);
    log::info!(
        "running {} ({} steps of dt = {})",
        config.scenario.name(),
        config.evolution.n_steps,
        config.evolution.dt
    );
    match config.scenario {
        ScenarioKind::RabiValidation => rabi_validation(&mut ctx)?,
        ScenarioKind::VortexLattice => vortex_lattice(&mut ctx)?,
        ScenarioKind::SingleVortex => single_vortex(&mut ctx)?,
        ScenarioKind::FreeParticle => free_particle(&mut ctx)?,
        ScenarioKind::DoubleSlit => double_slit(&mut ctx)?,
    }
    let passed = ctx.checks.iter().all(|c| c.passed);
    let manifest = Manifest {
        scenario: config.scenario.name().into(),
        format_version: FORMAT_VERSION,
        config_sha256: source.map(|s| sha256_hex(s.as_bytes())),
        passed,
        checks: ctx.checks.clone(),
        files: ctx.out.files().to_vec(),
        metadata: ctx.metadata.clone(),
        warnings: ctx.warnings.clone(),
    };
    let manifest_path = write_manifest(ctx.out.root(), &manifest)?;
    for c in &ctx.checks {
        log::info!(
            "check {}: {} (value {:e}, {})",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.value,
            c.threshold
        );
    }
    Ok(RunSummary {
        scenario: config.scenario,
        output_dir: config.output_dir.clone(),
        manifest_path,
        checks: ctx.checks,
        passed,
        metadata: ctx.metadata,
    })
}

fn spec_json(s: &VortexSpec) -> Value {
    json!({
        "l": s.l,
        "sigma": s.sigma,
        "center": [s.center.0, s.center.1],
        "weight": [s.weight.re, s.weight.im],
    })
}

fn describe(ctx: &mut Ctx) {
    let c = ctx.config;
    ctx.meta(
        "grid",
        json!({"nx": c.grid.nx(), "ny": c.grid.ny(), "lx": c.grid.lx(), "ly": c.grid.ly()}),
    );
    ctx.meta(
        "specs",
        Value::Array(c.specs.iter().map(spec_json).collect()),
    );
    ctx.meta(
        "params",
        json!({"v0": c.params.v0, "g1": c.params.g1, "g2": c.params.g2, "g12": c.params.g12}),
    );
    ctx.meta(
        "coupling_segments",
        Value::Array(
            c.schedule
                .segments()
                .iter()
                .map(|(t, k)| json!({"t_start": t, "kappa": k}))
                .collect(),
        ),
    );
    ctx.meta("dt", c.evolution.dt);
    ctx.meta("n_steps", c.evolution.n_steps as u64);
    ctx.meta("snapshot_stride", c.evolution.snapshot_stride as u64);
    ctx.meta("t_end", c.t_end());
}

fn unit_ansatz(grid: &crate::grid::GridSpec, spec: &VortexSpec) -> Result<ComplexField> {
    vortex_ansatz(grid, &spec.with_weight(Complex64::new(1.0, 0.0)))
}

/// Extra per-observation hook used by the scenario runners.
type Observer<'a> = dyn FnMut(usize, &TwoComponentState) -> Result<()> + 'a;

/// Diagnostics, optional snapshots and optional core logging for one evolution.
struct RunSink<'a, 'b> {
    recorder: DiagnosticsRecorder,
    out: &'a mut OutputDir,
    policy: SnapshotPolicy,
    n_steps: usize,
    prefix: String,
    cores: Option<String>,
    extra: Option<&'b mut Observer<'b>>,
}

impl EvolutionSink for RunSink<'_, '_> {
    fn observe(&mut self, step: usize, state: &TwoComponentState, kappa: f64) -> Result<()> {
        self.recorder.observe(step, state, kappa)?;
        let write = match self.policy {
            SnapshotPolicy::All => true,
            SnapshotPolicy::Final => step == self.n_steps,
            SnapshotPolicy::None => false,
        };
        if write {
            let name = format!("{}snap_{step:07}.cvss", self.prefix);
            self.out
                .write(&name, "snapshot", &encode(&Snapshot::from_state(state))?)?;
        }
        if let Some(rows) = self.cores.as_mut() {
            for c in detect_vortex_cores(&state.superposition(), CORE_DENSITY_FLOOR) {
                rows.push_str(&format!(
                    "{step},{:.16e},{:.16e},{:.16e},{}\n",
                    state.t, c.x, c.y, c.charge
                ));
            }
        }
        if let Some(f) = self.extra.as_mut() {
            f(step, state)?;
        }
        Ok(())
    }
}

struct Outcome {
    state: TwoComponentState,
    records: Vec<diagnostics::DiagnosticsRecord>,
}

fn simulate<'x>(
    ctx: &mut Ctx,
    initial: &TwoComponentState,
    params: &PhysicalParams,
    prefix: &str,
    log_cores: bool,
    extra: Option<&'x mut Observer<'x>>,
) -> Result<Outcome> {
    let c = ctx.config;
    let grid = *initial.grid();
    let r1 = unit_ansatz(&grid, &c.specs[0])?;
    let r2 = match c.specs.get(1) {
        Some(s) => unit_ansatz(&grid, s)?,
        None => ComplexField::zeros(grid),
    };
    let mut sink = RunSink {
        recorder: DiagnosticsRecorder::new(*params, r1, r2)?,
        out: &mut ctx.out,
        policy: c.snapshots,
        n_steps: c.evolution.n_steps,
        prefix: prefix.into(),
        cores: log_cores.then(|| "step,t,x,y,charge\n".to_string()),
        extra,
    };
    let evo = evolve(initial, params, &c.schedule, &c.evolution, &mut sink)?;
    let cores = sink.cores.take();
    let records = sink.recorder.into_records();
    ctx.out.write(
        &format!("{prefix}diagnostics.csv"),
        "diagnostics",
        diagnostics_csv(&records).as_bytes(),
    )?;
    if let Some(rows) = cores {
        ctx.out
            .write(&format!("{prefix}cores.csv"), "cores", rows.as_bytes())?;
    }
    ctx.note_boundary(
        if prefix.is_empty() {
            "evolution"
        } else {
            prefix
        },
        &evo.warnings,
    );

    let n0 = initial.total_norm();
    let drift = records
        .iter()
        .map(|r| ((r.norm1 + r.norm2 - n0) / n0).abs())
        .fold(0.0, f64::max);
    ctx.checks
        .push(Check::at_most(&format!("{prefix}norm_drift"), drift, 1e-10));
    Ok(Outcome {
        state: evo.state,
        records,
    })
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn rabi_validation(ctx: &mut Ctx) -> Result<()> {
    let c = ctx.config;
    let kappa = c.schedule.segments()[0].1;
    let regime = OracleRegime::new(&c.params, c.specs[0], c.specs[1], kappa)?;
    let initial = cvss_initial(&c.grid, &c.specs[0], &c.specs[1])?;
    let grid = c.grid;
    let (mut density_dev, mut proj_dev) = (0.0f64, 0.0f64);
    let mut rows = String::from("t,density_dev,proj11,proj11_oracle,proj12,proj12_oracle\n");
    let r1 = unit_ansatz(&grid, &c.specs[0])?;
    let r2 = unit_ansatz(&grid, &c.specs[1])?;
    let mut compare = |_: usize, s: &TwoComponentState| -> Result<()> {
        let exact = analytic_state(&regime, &grid, s.t)?;
        let mut dev = 0.0f64;
        for (sim, ana) in [(&s.psi1, &exact.psi1), (&s.psi2, &exact.psi2)] {
            let peak = ana.max_abs().powi(2);
            let d = sim
                .data()
                .iter()
                .zip(ana.data())
                .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
                .fold(0.0, f64::max);
            dev = dev.max(d / peak);
        }
        let (s2, c2) = ((kappa * s.t).sin().powi(2), (kappa * s.t).cos().powi(2));
        let p11 = diagnostics::projection(&r1, &s.psi1)?;
        let p12 = diagnostics::projection(&r2, &s.psi1)?;
        density_dev = density_dev.max(dev);
        proj_dev = proj_dev
            .max((p11 - 0.5 * c2).abs())
            .max((p12 - 0.5 * s2).abs());
        rows.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            s.t,
            dev,
            p11,
            0.5 * c2,
            p12,
            0.5 * s2
        ));
        Ok(())
    };
    let params = c.params;
    simulate(ctx, &initial, &params, "", false, Some(&mut compare))?;
    ctx.out
        .write("oracle_comparison.csv", "oracle", rows.as_bytes())?;
    ctx.meta("max_density_deviation", density_dev);
    ctx.meta("max_projection_deviation", proj_dev);
    ctx.meta(
        "density_deviation_definition",
        "max |rho_sim - rho_exact| / max rho_exact per component",
    );
    let tol = c.tolerance;
    ctx.checks
        .push(Check::at_most("density_deviation", density_dev, tol));
    ctx.checks
        .push(Check::at_most("projection_deviation", proj_dev, tol));
    Ok(())
}

fn vortex_lattice(ctx: &mut Ctx) -> Result<()> {
    let c = ctx.config;
    let initial = cvss_initial(&c.grid, &c.specs[0], &c.specs[1])?;
    let params = c.params;
    let outcome = simulate(ctx, &initial, &params, "", true, None)?;
    let expected = (c.specs[0].l - c.specs[1].l).unsigned_abs() as f64;
    let wrong = outcome
        .records
        .iter()
        .filter(|r| r.n_cores as f64 != expected)
        .count();
    let last = outcome.records.last().map_or(0, |r| r.n_cores);
    ctx.meta("expected_cores", expected);
    ctx.meta("final_cores", last as u64);
    ctx.checks.push(Check::equals(
        "snapshots_with_wrong_core_count",
        wrong as f64,
        0.0,
    ));
    ctx.checks
        .push(Check::equals("final_core_count", last as f64, expected));
    Ok(())
}

/// RMS radius of a field about `center`.
fn rms_radius(field: &ComplexField, center: (f64, f64)) -> f64 {
    let g = field.grid();
    let (mut m, mut r2) = (0.0, 0.0);
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let d = field.at(i, j).norm_sqr();
            m += d;
            r2 += d * ((g.x(i) - center.0).powi(2) + (g.y(j) - center.1).powi(2));
        }
    }
    (r2 / m).sqrt()
}

fn single_vortex(ctx: &mut Ctx) -> Result<()> {
    let c = ctx.config;
    let spec = c.specs[0];
    let psi = vortex_ansatz(&c.grid, &spec)?;
    let initial = TwoComponentState::new(psi, ComplexField::zeros(c.grid), 0.0)?;
    let mut phase_rows = String::from("step,t,loop_radius,winding\n");
    let mut mismatches = 0usize;
    let mut winding = |step: usize, s: &TwoComponentState| -> Result<()> {
        let r = rms_radius(&s.psi1, spec.center);
        let w = loop_winding(&s.psi1, spec.center, r)?;
        if w != spec.l as i64 {
            mismatches += 1;
        }
        phase_rows.push_str(&format!("{step},{:.16e},{:.16e},{w}\n", s.t, r));
        Ok(())
    };
    let params = c.params;
    let outcome = simulate(ctx, &initial, &params, "", true, Some(&mut winding))?;
    ctx.out
        .write("winding.csv", "winding", phase_rows.as_bytes())?;
    let final_field = &outcome.state.psi1;
    let density: Vec<f64> = final_field.density();
    let phase = diagnostics::phase_map(final_field);
    let panel = |v: &[f64]| {
        let mut s = String::new();
        for row in v.chunks(c.grid.nx()) {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    };
    let masked: Vec<f64> = phase
        .phase
        .iter()
        .zip(&phase.valid)
        .map(|(p, &ok)| if ok { *p } else { f64::NAN })
        .collect();
    ctx.out.write(
        "final_density.csv",
        "density_panel",
        panel(&density).as_bytes(),
    )?;
    ctx.out
        .write("final_phase.csv", "phase_panel", panel(&masked).as_bytes())?;
    ctx.meta(
        "phase_panel_invalid_marker",
        "NaN where density < 1e-12 of max",
    );
    ctx.checks.push(Check::equals(
        "snapshots_with_wrong_winding",
        mismatches as f64,
        0.0,
    ));
    Ok(())
}

fn free_particle(ctx: &mut Ctx) -> Result<()> {
    let c = ctx.config;
    let initial = cvss_initial(&c.grid, &c.specs[0], &c.specs[1])?;
    if c.specs[0] == c.specs[1] {
        ctx.meta(
            "coupling_note",
            "both components carry the same vortex, so the coupling rotation mixes identical fields; densities equal those at kappa = 0",
        );
    }
    let mut finals: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for (i, &w) in c.varpi.iter().enumerate() {
        let params = PhysicalParams {
            phase_rate: w,
            ..c.params
        };
        let outcome = simulate(ctx, &initial, &params, &format!("varpi{i}_"), false, None)?;
        finals.push((
            w,
            outcome.state.psi1.density(),
            outcome.state.psi2.density(),
        ));
    }
    ctx.meta("varpi", c.varpi.clone());
    let mut worst = 0.0f64;
    for a in 0..finals.len() {
        for b in a + 1..finals.len() {
            worst = worst
                .max(rel_l2(&finals[a].1, &finals[b].1))
                .max(rel_l2(&finals[a].2, &finals[b].2));
        }
    }
    ctx.meta("max_density_difference_across_varpi", worst);
    ctx.checks.push(Check::at_most(
        "varpi_density_difference",
        worst,
        VARPI_TOLERANCE,
    ));
    Ok(())
}

/// Per-source fields recovered from the final state by undoing the
/// accumulated coupling rotation. Exact when g = 0.
pub fn source_fields(state: &TwoComponentState, angle: f64) -> (ComplexField, ComplexField) {
    let (a, b) = crate::dynamics::unrotate(state, angle);
    let s = Complex64::new(std::f64::consts::SQRT_2, 0.0);
    (a.scaled(s), b.scaled(s))
}

/// Screen-line profiles of the two-source experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SlitProfiles {
    pub x: Vec<f64>,
    pub coherent: Vec<f64>,
    pub incoherent: Vec<f64>,
    pub source_l: Vec<f64>,
    pub source_r: Vec<f64>,
    pub coincidence: Vec<f64>,
    pub coincidence_envelope: Vec<f64>,
}

impl SlitProfiles {
    pub fn new(l: &ComplexField, r: &ComplexField, y_screen: f64) -> Result<Self> {
        let source_l = screen_profile(l, y_screen)?;
        let source_r = screen_profile(r, y_screen)?;
        let g = l.grid();
        let j = g
            .nearest_row(y_screen)
            .ok_or_else(|| Error::InvalidArgument("y_screen".into()))?;
        let coherent = (0..g.nx())
            .map(|i| (l.at(i, j) + r.at(i, j)).norm_sqr())
            .collect();
        let incoherent = source_l.iter().zip(&source_r).map(|(a, b)| a + b).collect();
        Ok(Self {
            x: g.xs(),
            coherent,
            incoherent,
            source_l,
            source_r,
            coincidence: coincidence_pattern(l, r, y_screen)?,
            coincidence_envelope: coincidence_envelope(l, r, y_screen)?,
        })
    }

    /// Common window where both envelopes exceed `SUPPORT_LEVEL` of their maxima.
    pub fn window(&self) -> Vec<bool> {
        let a = diagnostics::support_mask(&self.incoherent, SUPPORT_LEVEL);
        let b = diagnostics::support_mask(&self.coincidence_envelope, SUPPORT_LEVEL);
        a.iter().zip(&b).map(|(x, y)| *x && *y).collect()
    }

    /// `(one-particle period, coincidence period)` of the envelope-normalized
    /// fringe signals.
    pub fn periods(&self) -> Result<(f64, f64)> {
        let dx = self.x[1] - self.x[0];
        let m = self.window();
        let one = fringe_signal(&self.coherent, &self.incoherent, &m);
        let two = fringe_signal(&self.coincidence, &self.coincidence_envelope, &m);
        Ok((fringe_period(&one, dx)?, fringe_period(&two, dx)?))
    }
}

fn double_slit(ctx: &mut Ctx) -> Result<()> {
    let c = ctx.config;
    let ds = c
        .double_slit
        .clone()
        .ok_or_else(|| Error::config("double_slit section missing"))?;
    let initial = cvss_initial(&c.grid, &c.specs[0], &c.specs[1])?;
    let params = c.params;
    let outcome = simulate(ctx, &initial, &params, "", false, None)?;

    let angle = c
        .schedule
        .accumulated_angle(0.0, c.evolution.dt, c.evolution.n_steps);
    let (l, r) = source_fields(&outcome.state, angle);
    let p = SlitProfiles::new(&l, &r, ds.y_screen)?;
    let collapsed = ds.mode.collapses();
    let physical = if collapsed {
        &p.incoherent
    } else {
        &p.coherent
    };

    let mut columns: Vec<(&str, &[f64])> = vec![
        ("x", &p.x),
        ("one_particle", physical),
        ("source_l", &p.source_l),
        ("source_r", &p.source_r),
        ("coincidence", &p.coincidence),
    ];
    if collapsed {
        columns.push(("coherent_reference_unphysical", &p.coherent));
    }
    ctx.out
        .write("profiles.csv", "profiles", columns_csv(&columns).as_bytes())?;

    let g = c.grid;
    let sources = Snapshot {
        grid: g,
        t: outcome.state.t,
        components: vec![l.clone(), r.clone()],
    };
    ctx.out
        .write("sources_final.cvss", "source_snapshot", &encode(&sources)?)?;

    ctx.meta("mode", ds.mode.name());
    ctx.meta("y_screen", ds.y_screen);
    ctx.meta("y_screen_row", g.y(g.nearest_row(ds.y_screen).unwrap_or(0)));
    ctx.meta("accumulated_coupling_angle", angle);
    if let Some(m) = ds.measure_time {
        ctx.meta("measure_time", m);
        ctx.meta("collapse_kappa", ds.collapse_kappa);
    }
    ctx.meta(
        "one_particle_model",
        if collapsed {
            "incoherent |psi_L|^2 + |psi_R|^2"
        } else {
            "coherent |psi_L + psi_R|^2"
        },
    );
    ctx.meta("coherent_reference_physical", !collapsed);
    ctx.meta(
        "screen_note",
        "profiles are a fixed-time screen-line reduction of the 2D density; an interpretation, not an accumulated detector signal",
    );
    ctx.meta(
        "coincidence_model",
        "|psi_L(x) psi_R(-x) + psi_R(x) psi_L(-x)|^2 along the screen row",
    );

    let vis = fringe_visibility(physical)?;
    let vis_coherent = fringe_visibility(&p.coherent)?;
    let modes = count_modes(physical, SUPPORT_LEVEL);
    ctx.meta("visibility_one_particle", vis);
    ctx.meta("visibility_coherent_reference", vis_coherent);
    ctx.meta("modes_one_particle", modes as u64);
    ctx.meta("fringe_threshold", FRINGE_THRESHOLD);
    match p.periods() {
        Ok((p1, p2)) => {
            ctx.meta("period_one_particle", p1);
            ctx.meta("period_coincidence", p2);
            ctx.meta("period_ratio", p2 / p1);
        }
        Err(e) => ctx
            .warnings
            .push(format!("fringe periods unavailable: {e}")),
    }

    match ds.mode {
        super::config::SlitMode::Dsi => {
            ctx.checks.push(Check::at_least(
                "visibility_above_threshold",
                vis,
                FRINGE_THRESHOLD,
            ));
            let ratio = ctx
                .metadata
                .get("period_ratio")
                .and_then(Value::as_f64)
                .unwrap_or(f64::NAN);
            ctx.checks.push(Check::within(
                "fringe_period_ratio",
                ratio,
                FRINGE_RATIO_TARGET,
                FRINGE_RATIO_TOL,
            ));
        }
        super::config::SlitMode::Qmbdsi => {
            ctx.checks.push(Check::at_most(
                "visibility_below_threshold",
                vis,
                FRINGE_THRESHOLD,
            ));
            ctx.checks
                .push(Check::equals("unimodal_profile", modes as f64, 1.0));
        }
        super::config::SlitMode::Qmadsi => {
            let phi_l = l.scaled(Complex64::new(FRAC_1_SQRT_2, 0.0));
            let phi_r = r.scaled(Complex64::new(FRAC_1_SQRT_2, 0.0));
            let (xl, yl, ml) = centroid(&phi_l)?;
            let (xr, yr, mr) = centroid(&phi_r)?;
            let sep = (xl - xr).hypot(yl - yr);
            let (c1, c2) = (c.specs[0].center, c.specs[1].center);
            let expected = (c1.0 - c2.0).hypot(c1.1 - c2.1);
            ctx.meta("lobe_centroids", json!([[xl, yl], [xr, yr]]));
            ctx.meta("lobe_masses", json!([ml, mr]));
            ctx.meta("lobe_separation", sep);
            let n = initial.total_norm();
            ctx.checks.push(Check::within(
                "lobe_separation",
                sep,
                expected,
                LOBE_SEPARATION_TOL * expected,
            ));
            ctx.checks.push(Check::within(
                "lobe_l_mass",
                ml,
                initial.psi1.norm_sqr(),
                1e-6 * n,
            ));
            ctx.checks.push(Check::within(
                "lobe_r_mass",
                mr,
                initial.psi2.norm_sqr(),
                1e-6 * n,
            ));
        }
    }
    Ok(())
}

/// Output directory for a config run with an optional override.
pub fn with_output_dir(mut config: ScenarioConfig, dir: Option<&Path>) -> ScenarioConfig {
    if let Some(d) = dir {
        config.output_dir = d.to_path_buf();
    }
    config
}
