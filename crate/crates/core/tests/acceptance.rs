//! Acceptance suite. Runs every primary criterion, prints one PASS/FAIL line
//! per criterion and exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::{angle, default_grid, rel_l2, rel_l2_real, HarmonicPropagator};
use cvss::diagnostics::{
    coincidence_envelope, coincidence_pattern, detect_vortex_cores, fringe_period, fringe_signal,
    loop_winding, screen_profile, support_mask, DiagnosticsRecorder, CORE_DENSITY_FLOOR,
    SUPPORT_LEVEL,
};
use cvss::dynamics::{evolve, evolve_steps, CouplingSchedule, EvolutionConfig, PhysicalParams};
use cvss::grid::{make_grid, ComplexField, GridSpec};
use cvss::oracle::{analytic_state, lz_curves, OracleRegime};
use cvss::scenarios::config::{load_config, parse_config};
use cvss::scenarios::run::with_output_dir;
use cvss::scenarios::snapshot::{read_snapshot, write_state, Snapshot};
use cvss::scenarios::{run_scenario, RunSummary};
use cvss::states::{cvss_initial, vortex_ansatz, TwoComponentState, VortexSpec};
use cvss::Result;
use num_complex::Complex64;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_config(name: &str, out: &Path) -> Result<RunSummary> {
    let config = load_config(&configs_dir().join(name))?;
    run_scenario(&with_output_dir(
        config,
        Some(&out.join(name.trim_end_matches(".toml"))),
    ))
}

fn lattice_state(grid: &GridSpec) -> TwoComponentState {
    cvss_initial(
        grid,
        &VortexSpec::centered(6, 2.0),
        &VortexSpec::centered(0, 2.0),
    )
    .unwrap()
}

fn max_norm_drift(norms: &[f64]) -> f64 {
    norms
        .iter()
        .map(|n| ((n - norms[0]) / norms[0]).abs())
        .fold(0.0, f64::max)
}

/// Observations of the trapped lattice run (l1 = 6, l2 = 0, σ = 2, V0 = 0.5, κ = 25π,
/// g = 0), shared by the unitarity and lattice criteria.
struct LatticeRun {
    grid: GridSpec,
    times: Vec<f64>,
    norms: Vec<f64>,
    cores: Vec<Vec<(f64, f64, i32)>>,
}

fn lattice_run() -> Result<LatticeRun> {
    let grid = default_grid();
    let (mut times, mut norms, mut cores) = (Vec::new(), Vec::new(), Vec::new());
    let mut sink = |step: usize, s: &TwoComponentState, _: f64| -> Result<()> {
        norms.push(s.total_norm());
        if step.is_multiple_of(500) {
            times.push(s.t);
            let found = detect_vortex_cores(&s.superposition(), CORE_DENSITY_FLOOR);
            cores.push(found.iter().map(|c| (c.x, c.y, c.charge)).collect());
        }
        Ok(())
    };
    evolve(
        &lattice_state(&grid),
        &PhysicalParams::linear(0.5),
        &CouplingSchedule::constant(25.0 * PI),
        &EvolutionConfig::new(1e-4, 10_000, 100),
        &mut sink,
    )?;
    Ok(LatticeRun {
        grid,
        times,
        norms,
        cores,
    })
}

fn unitarity(run: &LatticeRun) -> Result<Outcome> {
    let linear = max_norm_drift(&run.norms);

    // Nonlinear coupled run on a smaller box.
    let grid = make_grid(64, 64, 12.0, 12.0)?;
    let params = PhysicalParams {
        v0: 0.5,
        g1: 2.0,
        g2: 1.0,
        g12: 0.5,
        phase_rate: 0.0,
    };
    let initial = cvss_initial(
        &grid,
        &VortexSpec::centered(2, 1.5),
        &VortexSpec::centered(-1, 1.5),
    )?;
    let mut norms = Vec::new();
    let mut sink = |_: usize, s: &TwoComponentState, _: f64| -> Result<()> {
        norms.push(s.total_norm());
        Ok(())
    };
    evolve(
        &initial,
        &params,
        &CouplingSchedule::constant(5.0),
        &EvolutionConfig::new(1e-4, 10_000, 100),
        &mut sink,
    )?;
    let nonlinear = max_norm_drift(&norms);
    outcome(
        linear <= 1e-10 && nonlinear <= 1e-10,
        format!(
            "max relative norm drift over 10^4 steps: trap lattice {linear:.2e}, nonlinear g = (2, 1, 0.5) {nonlinear:.2e} (limit 1e-10)"
        ),
    )
}

/// Max over observations of `max |ρ_sim - ρ_exact| / max ρ_exact`, both
/// components, plus the max projection deviation.
fn oracle_deviation(dt: f64, t_end: f64) -> Result<(f64, f64, f64)> {
    let grid = default_grid();
    let kappa = 25.0 * PI;
    let regime = OracleRegime::eigen(0.5, 6, 0, kappa)?;
    let (s1, s2) = regime.specs();
    let initial = cvss_initial(&grid, &s1, &s2)?;
    let r1 = vortex_ansatz(&grid, &s1)?;
    let r2 = vortex_ansatz(&grid, &s2)?;
    let n = (t_end / dt).round() as usize;
    let stride = n / 80;
    let prop = HarmonicPropagator {
        v0: 0.5,
        sigma: s1.sigma,
    };
    let (mut dens, mut proj, mut sum_dev) = (0.0f64, 0.0f64, 0.0f64);
    let mut sink = |_: usize, s: &TwoComponentState, _: f64| -> Result<()> {
        let exact = analytic_state(&regime, &grid, s.t)?;
        for (sim, ana) in [(&s.psi1, &exact.psi1), (&s.psi2, &exact.psi2)] {
            let peak = ana.max_abs().powi(2);
            let d = sim
                .data()
                .iter()
                .zip(ana.data())
                .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
                .fold(0.0, f64::max);
            dens = dens.max(d / peak);
        }
        let p11 = cvss::diagnostics::projection(&r1, &s.psi1)?;
        let p12 = cvss::diagnostics::projection(&r2, &s.psi1)?;
        let (c2, s2) = ((kappa * s.t).cos().powi(2), (kappa * s.t).sin().powi(2));
        proj = proj.max((p11 - 0.5 * c2).abs()).max((p12 - 0.5 * s2).abs());

        // ψ1 + ψ2 density against ½|e^{-iμ1 t}ψ_l1 + e^{-iμ2 t}ψ_l2|², built
        // from the closed-form propagator rather than the library oracle.
        let a = prop.field(&grid, 6, s.t);
        let b = prop.field(&grid, 0, s.t);
        let expected: Vec<f64> = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(p, q)| 0.5 * (p + q).norm_sqr())
            .collect();
        sum_dev = sum_dev.max(rel_l2_real(&s.superposition().density(), &expected));
        Ok(())
    };
    evolve(
        &initial,
        &PhysicalParams::linear(0.5),
        &CouplingSchedule::constant(kappa),
        &EvolutionConfig::new(dt, n, stride),
        &mut sink,
    )?;
    Ok((dens, proj, sum_dev))
}

fn oracle_equivalence(coarse: (f64, f64, f64), fine: (f64, f64, f64)) -> Result<Outcome> {
    let ratio = coarse.0 / fine.0;
    outcome(
        coarse.0 <= 1e-6 && coarse.1 <= 1e-6 && (3.5..=4.5).contains(&ratio),
        format!(
            "two Rabi periods (kappa = 25 pi, t = 0.08): density dev {:.2e}, projection dev {:.2e} at dt = 1e-4; density dev {:.2e} at dt = 5e-5, ratio {ratio:.3} (need [3.5, 4.5])",
            coarse.0, coarse.1, fine.0
        ),
    )
}

fn superposition_identity(coarse: (f64, f64, f64)) -> Result<Outcome> {
    outcome(
        coarse.2 <= 1e-6,
        format!(
            "max relative L2 of |psi1 + psi2|^2 against the analytic superposition pattern: {:.2e} (limit 1e-6)",
            coarse.2
        ),
    )
}

fn lz_criterion() -> Result<Outcome> {
    let grid = default_grid();
    let kappa = 25.0 * PI;
    let mut details = Vec::new();
    let mut ok = true;
    for (l1, l2) in [(6, 0), (6, -6)] {
        let regime = OracleRegime::eigen(0.5, l1, l2, kappa)?;
        let (s1, s2) = regime.specs();
        let initial = cvss_initial(&grid, &s1, &s2)?;
        let mut recorder = DiagnosticsRecorder::new(
            PhysicalParams::linear(0.5),
            vortex_ansatz(&grid, &s1)?,
            vortex_ansatz(&grid, &s2)?,
        )?;
        evolve(
            &initial,
            &PhysicalParams::linear(0.5),
            &CouplingSchedule::constant(kappa),
            &EvolutionConfig::new(1e-4, 800, 10),
            &mut recorder,
        )?;
        let records = recorder.into_records();
        let mut curve_dev = 0.0f64;
        let total = |r: &cvss::diagnostics::DiagnosticsRecord| r.lz1 * r.norm1 + r.lz2 * r.norm2;
        let scale = (0.5 * (l1 + l2) as f64)
            .abs()
            .max(0.5 * l1.abs().max(l2.abs()) as f64);
        let mut sum_dev = 0.0f64;
        for r in &records {
            let (a, b) = lz_curves(r.t, l1, l2, kappa);
            // The curves are for norm-½ components; records are per unit norm.
            curve_dev = curve_dev
                .max((r.lz1 - 2.0 * a).abs())
                .max((r.lz2 - 2.0 * b).abs());
            sum_dev = sum_dev.max((total(r) - total(&records[0])).abs() / scale);
        }
        ok &= curve_dev <= 1e-4 && sum_dev <= 1e-6;
        details.push(format!(
            "({l1},{l2}): curve dev {curve_dev:.2e}, L1z+L2z relative drift {sum_dev:.2e}"
        ));
    }
    outcome(ok, format!("{} (limits 1e-4, 1e-6)", details.join("; ")))
}

fn lattice(run: &LatticeRun) -> Result<Outcome> {
    let prop = HarmonicPropagator {
        v0: 0.5,
        sigma: 2.0,
    };
    let rotation = prop.lattice_rotation(6, &run.times).abs();
    let cell = run.grid.dx();
    let mut worst = 0.0f64;
    let mut bad_counts = 0;
    for (t, cores) in run.times.iter().zip(&run.cores) {
        if cores.len() != 6 || cores.iter().any(|c| c.2 != 1) {
            bad_counts += 1;
            continue;
        }
        let roots = prop.lattice_roots(6, *t);
        let mut found: Vec<(f64, f64)> = cores.iter().map(|c| (c.0, c.1)).collect();
        found.sort_by(|p, q| angle(*p).total_cmp(&angle(*q)));
        for r in &roots {
            let d = found
                .iter()
                .map(|f| (f.0 - r.0).hypot(f.1 - r.1))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    let covers = rotation >= 2.0 * PI / 6.0;
    outcome(
        bad_counts == 0 && worst <= cell && covers,
        format!(
            "{} snapshots over t in [0, {:.2}]: {} with a core set other than six +1 cores; max core offset from oracle roots {:.3} (cell {:.3}); lattice rotation {:.3} rad (one period 1.047)",
            run.times.len(),
            run.times.last().copied().unwrap_or(0.0),
            bad_counts,
            worst,
            cell,
            rotation
        ),
    )
}

fn rms_radius(field: &ComplexField) -> f64 {
    let g = field.grid();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let d = field.at(i, j).norm_sqr();
            num += d * (g.x(i).powi(2) + g.y(j).powi(2));
            den += d;
        }
    }
    (num / den).sqrt()
}

fn winding() -> Result<Outcome> {
    let grid = default_grid();
    let mut details = Vec::new();
    let mut ok = true;
    for l in [1, 3, 6, 13] {
        let spec = VortexSpec::centered(l, 2.0);
        let psi = vortex_ansatz(&grid, &spec)?;
        let initial = loop_winding(&psi, (0.0, 0.0), rms_radius(&psi))?;
        let state = TwoComponentState::new(psi.clone(), ComplexField::zeros(grid), 0.0)?;
        let evolved = evolve_steps(
            &state,
            &PhysicalParams::linear(0.5),
            &CouplingSchedule::constant(0.0),
            1e-4,
            2000,
        )?;
        let after = loop_winding(&evolved.psi1, (0.0, 0.0), rms_radius(&evolved.psi1))?;
        ok &= initial == l as i64 && after == l as i64;
        details.push(format!("l={l}: {initial} initial, {after} at t=0.2"));
    }
    outcome(ok, details.join("; "))
}

fn plane_wave_ratio() -> Result<f64> {
    // Two counter-propagating plane waves on a periodic row.
    let grid = make_grid(1024, 8, 64.0, 1.0)?;
    let k = 2.0 * PI * 8.0 / 64.0;
    let left = ComplexField::from_fn(grid, |x, _| Complex64::from_polar(1.0, k * x));
    let right = ComplexField::from_fn(grid, |x, _| Complex64::from_polar(1.0, -k * x));
    let sum = ComplexField::new(
        grid,
        left.data()
            .iter()
            .zip(right.data())
            .map(|(a, b)| a + b)
            .collect(),
    )?;
    let one = screen_profile(&sum, 0.0)?;
    let coinc = coincidence_pattern(&left, &right, 0.0)?;
    let env = coincidence_envelope(&left, &right, 0.0)?;
    let mask = support_mask(&env, SUPPORT_LEVEL);
    let p1 = fringe_period(&one, grid.dx())?;
    let p2 = fringe_period(&fringe_signal(&coinc, &env, &mask), grid.dx())?;
    Ok(p2 / p1)
}

fn fringe_halving(dsi: &RunSummary) -> Result<Outcome> {
    let ratio = dsi.metric("period_ratio").unwrap_or(f64::NAN);
    let plane = plane_wave_ratio()?;
    outcome(
        (ratio - 0.5).abs() <= 0.05 && (plane - 0.5).abs() <= 0.01,
        format!(
            "DSI coincidence/one-particle period ratio {ratio:.4} (0.5 +/- 0.05; periods {:.4}, {:.4}); plane-wave ratio {plane:.4} (0.5 +/- 0.01)",
            dsi.metric("period_coincidence").unwrap_or(f64::NAN),
            dsi.metric("period_one_particle").unwrap_or(f64::NAN)
        ),
    )
}

fn collapse(dsi: &RunSummary, before: &RunSummary, after: &RunSummary) -> Result<Outcome> {
    let v_dsi = dsi.metric("visibility_one_particle").unwrap_or(f64::NAN);
    let v_before = before.metric("visibility_one_particle").unwrap_or(f64::NAN);
    let modes = before.metric("modes_one_particle").unwrap_or(f64::NAN);
    let sep = after.metric("lobe_separation").unwrap_or(f64::NAN);
    let lobe_checks = after
        .checks
        .iter()
        .filter(|c| c.name.starts_with("lobe_"))
        .collect::<Vec<_>>();
    let lobes_ok = lobe_checks.len() == 3 && lobe_checks.iter().all(|c| c.passed);
    outcome(
        v_dsi >= 2.0 * v_before && modes == 1.0 && lobes_ok,
        format!(
            "visibility DSI {v_dsi:.3} vs QMBDSI {v_before:.3} (need >= 2x); QMBDSI modes {modes}; QMADSI lobe separation {sep:.3} (6 +/- 5%), lobe checks {}",
            if lobes_ok { "pass" } else { "FAIL" }
        ),
    )
}

fn varpi_independence() -> Result<Outcome> {
    let config = load_config(&configs_dir().join("free_particle.toml"))?;
    let initial = cvss_initial(&config.grid, &config.specs[0], &config.specs[1])?;
    let mut runs: Vec<Vec<Vec<f64>>> = Vec::new();
    for &w in &config.varpi {
        let params = PhysicalParams {
            phase_rate: w,
            ..config.params
        };
        let mut densities = Vec::new();
        let mut sink = |_: usize, s: &TwoComponentState, _: f64| -> Result<()> {
            densities.push(s.psi1.density());
            densities.push(s.psi2.density());
            Ok(())
        };
        evolve(
            &initial,
            &params,
            &config.schedule,
            &config.evolution,
            &mut sink,
        )?;
        runs.push(densities);
    }
    let mut worst = 0.0f64;
    for a in 0..runs.len() {
        for b in a + 1..runs.len() {
            for (x, y) in runs[a].iter().zip(&runs[b]) {
                worst = worst.max(rel_l2_real(x, y));
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!(
            "varpi {:?}: max pairwise relative L2 density difference over {} observations {worst:.2e} (limit 1e-12)",
            config.varpi,
            runs[0].len() / 2
        ),
    )
}

fn time_reversal() -> Result<Outcome> {
    let grid = default_grid();
    let initial = lattice_state(&grid);
    let params = PhysicalParams::linear(0.5);
    let schedule = CouplingSchedule::constant(25.0 * PI);
    let forward = evolve_steps(&initial, &params, &schedule, 1e-4, 1000)?;
    let back = evolve_steps(&forward, &params, &schedule, -1e-4, 1000)?;
    let mut a = back.psi1.data().to_vec();
    a.extend_from_slice(back.psi2.data());
    let mut b = initial.psi1.data().to_vec();
    b.extend_from_slice(initial.psi2.data());
    let err = rel_l2(&a, &b);
    outcome(
        err <= 1e-8,
        format!("1000 steps forward then 1000 back (dt = 1e-4): relative L2 error {err:.2e} (limit 1e-8)"),
    )
}

const MALFORMED: [(&str, &str); 10] = [
    ("syntax error", "scenario = \"vortex_lattice\"\n[grid\nnx = 256\n"),
    ("unknown key", "scenario = \"vortex_lattice\"\nspeed = 3\n"),
    ("unknown scenario", "scenario = \"triple_slit\"\n"),
    ("missing scenario", "[grid]\nnx = 128\n"),
    (
        "segments out of order",
        "scenario = \"vortex_lattice\"\n[coupling]\nsegments = [{ t_start = 0.5, kappa = 1.0 }, { t_start = 0.1, kappa = 2.0 }]\n",
    ),
    ("negative dt", "scenario = \"vortex_lattice\"\n[evolution]\ndt = -1e-4\n"),
    ("wrong type", "scenario = \"vortex_lattice\"\n[evolution]\ndt = \"fast\"\n"),
    (
        "non-positive sigma",
        "scenario = \"single_vortex\"\n[[vortex]]\nl = 3\nsigma = 0.0\n",
    ),
    (
        "kappa given twice",
        "scenario = \"vortex_lattice\"\n[coupling]\nkappa = 1.0\nkappa_over_pi = 2.0\n",
    ),
    (
        "section for another scenario",
        "scenario = \"rabi_validation\"\n[double_slit]\nmode = \"DSI\"\n",
    ),
];

fn io_criterion(dir: &Path) -> Result<Outcome> {
    let grid = default_grid();
    let state = lattice_state(&grid);
    let path = dir.join("roundtrip.cvss");
    write_state(&path, &state)?;
    let back = read_snapshot(&path)?;
    let original = Snapshot::from_state(&state);
    let identical = back.t.to_bits() == original.t.to_bits()
        && back.grid == original.grid
        && back.components.len() == 2
        && back
            .components
            .iter()
            .zip(&original.components)
            .all(|(x, y)| {
                x.data().iter().zip(y.data()).all(|(p, q)| {
                    p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits()
                })
            });

    let mut failures = Vec::new();
    for (i, (name, text)) in MALFORMED.iter().enumerate() {
        if parse_config(text).is_ok() {
            failures.push(format!("{name}: accepted by the parser"));
            continue;
        }
        let cfg = dir.join(format!("bad{i}.toml"));
        std::fs::write(&cfg, text).map_err(|e| cvss::Error::Io {
            path: cfg.clone(),
            source: e,
        })?;
        let status = Command::new(env!("CARGO_BIN_EXE_cvss"))
            .args(["--quiet", "--output-dir"])
            .arg(dir.join(format!("out{i}")))
            .arg("run")
            .arg(&cfg)
            .stderr(std::process::Stdio::null())
            .status()
            .map_err(|e| cvss::Error::Io {
                path: cfg.clone(),
                source: e,
            })?;
        if status.code() != Some(2) {
            failures.push(format!("{name}: exit {:?}", status.code()));
        }
    }
    outcome(
        identical && failures.is_empty(),
        format!(
            "snapshot round trip {}; {}/{} malformed configs exit with code 2{}",
            if identical {
                "bit-identical"
            } else {
                "DIFFERS"
            },
            MALFORMED.len() - failures.len(),
            MALFORMED.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!(" (failed: {})", failures.join(", "))
            }
        ),
    )
}

fn report(results: &mut Vec<bool>, name: &str, secs: f64, r: Result<Outcome>) {
    match r {
        Ok(o) => {
            println!(
                "{} {name}: {} [{secs:.1}s]",
                if o.passed { "PASS" } else { "FAIL" },
                o.detail
            );
            results.push(o.passed);
        }
        Err(e) => {
            println!("FAIL {name}: error: {e} [{secs:.1}s]");
            results.push(false);
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

// Errors are reported as text, so shared inputs can feed several criteria.
fn shared<T>(r: &std::result::Result<T, String>) -> Result<&T> {
    r.as_ref().map_err(|e| cvss::Error::Evolution(e.clone()))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut results = Vec::new();
    let text = |e: cvss::Error| e.to_string();

    let (run, lattice_secs) = timed(|| lattice_run().map_err(text));
    let (r, secs) = timed(|| shared(&run).and_then(unitarity));
    report(&mut results, "unitarity", lattice_secs + secs, r);

    let (oracle, oracle_secs) = timed(|| {
        let coarse = oracle_deviation(1e-4, 0.08)?;
        Ok((coarse, oracle_deviation(5e-5, 0.08)?))
    });
    let oracle = oracle.map_err(text);
    let r = shared(&oracle).and_then(|(c, f)| oracle_equivalence(*c, *f));
    report(&mut results, "oracle_equivalence", oracle_secs, r);
    let r = shared(&oracle).and_then(|(c, _)| superposition_identity(*c));
    report(&mut results, "superposition_identity", oracle_secs, r);

    let (r, secs) = timed(lz_criterion);
    report(&mut results, "lz_curves", secs, r);

    let (r, secs) = timed(|| shared(&run).and_then(lattice));
    report(&mut results, "vortex_lattice", lattice_secs + secs, r);

    let (r, secs) = timed(winding);
    report(&mut results, "phase_winding", secs, r);

    let (dsi, dsi_secs) = timed(|| run_config("double_slit_dsi.toml", tmp.path()).map_err(text));
    let (r, secs) = timed(|| shared(&dsi).and_then(fringe_halving));
    report(&mut results, "fringe_halving", dsi_secs + secs, r);

    let (r, secs) = timed(|| {
        let before = run_config("double_slit_qmbdsi.toml", tmp.path())?;
        let after = run_config("double_slit_qmadsi.toml", tmp.path())?;
        collapse(shared(&dsi)?, &before, &after)
    });
    report(&mut results, "collapse_contrast", dsi_secs + secs, r);

    let (r, secs) = timed(varpi_independence);
    report(&mut results, "varpi_independence", secs, r);

    let (r, secs) = timed(time_reversal);
    report(&mut results, "time_reversal", secs, r);

    let (r, secs) = timed(|| io_criterion(tmp.path()));
    report(&mut results, "io", secs, r);

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
