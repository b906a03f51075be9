//! Time integration of the coupled system
//!
//! ```text
//! i∂ψ1/∂t = [-∇² + V + g1|ψ1|² + g12|ψ2|²]ψ1 - κψ2
//! i∂ψ2/∂t = [-∇² + V + g2|ψ2|² + g12|ψ1|²]ψ2 - κψ1
//! ```
//!
//! by the symmetric splitting `K(dt/2) C(dt/2) N(dt) C(dt/2) K(dt/2)`: `K` is the
//! spectral free propagator, `C` the exact Josephson rotation and `N` the exact
//! pointwise phase of trap plus mean field. Each substep is unitary.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, Spectral};
use crate::states::TwoComponentState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Trap strength, `V(r) = v0 r²`.
    pub v0: f64,
    pub g1: f64,
    pub g2: f64,
    pub g12: f64,
    /// Uniform phase rate ϖ: both components pick up `e^{iϖt}`.
    pub phase_rate: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            v0: 0.0,
            g1: 0.0,
            g2: 0.0,
            g12: 0.0,
            phase_rate: 0.0,
        }
    }
}

impl PhysicalParams {
    pub fn linear(v0: f64) -> Self {
        Self {
            v0,
            ..Self::default()
        }
    }

    pub fn is_linear(&self) -> bool {
        self.g1 == 0.0 && self.g2 == 0.0 && self.g12 == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0.is_finite() && self.v0 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "v0 = {} must be >= 0",
                self.v0
            )));
        }
        if ![self.g1, self.g2, self.g12, self.phase_rate]
            .iter()
            .all(|g| g.is_finite())
        {
            return Err(Error::InvalidArgument(
                "interaction constants must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn potential(&self, x: f64, y: f64) -> f64 {
        self.v0 * (x * x + y * y)
    }
}

/// Piecewise-constant κ(t).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSchedule {
    segments: Vec<(f64, f64)>,
}

// Step boundaries are accumulated in floating point; a segment whose start
// coincides with a boundary up to this relative slack is already active there.
const SCHEDULE_SLACK: f64 = 1e-9;

impl CouplingSchedule {
    /// `segments` are `(t_start, kappa)` pairs; starts strictly increasing from 0.
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::InvalidArgument("coupling schedule is empty".into()));
        };
        if first.0 != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "first coupling segment must start at t = 0, not {}",
                first.0
            )));
        }
        for w in segments.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidArgument(format!(
                    "coupling segment starts must increase ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if segments
            .iter()
            .any(|(t, k)| !t.is_finite() || !k.is_finite())
        {
            return Err(Error::InvalidArgument(
                "coupling schedule must be finite".into(),
            ));
        }
        Ok(Self { segments })
    }

    pub fn constant(kappa: f64) -> Self {
        Self {
            segments: vec![(0.0, kappa)],
        }
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn kappa_at(&self, t: f64) -> f64 {
        let slack = SCHEDULE_SLACK * t.abs().max(1.0);
        self.segments
            .iter()
            .take_while(|(start, _)| *start <= t + slack)
            .last()
            .map_or(self.segments[0].1, |s| s.1)
    }

    /// `∫₀ᵗ κ` as accumulated by `n` frozen steps of size `dt` from `t0`.
    pub fn accumulated_angle(&self, t0: f64, dt: f64, n: usize) -> f64 {
        (0..n).map(|k| self.kappa_at(t0 + k as f64 * dt) * dt).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub snapshot_stride: usize,
    pub boundary_warn_threshold: f64,
}

impl EvolutionConfig {
    pub fn new(dt: f64, n_steps: usize, snapshot_stride: usize) -> Self {
        Self {
            dt,
            n_steps,
            snapshot_stride,
            boundary_warn_threshold: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Evolution(format!(
                "dt = {} must be positive",
                self.dt
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::Evolution("n_steps must be at least 1".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Evolution(
                "snapshot_stride must be at least 1".into(),
            ));
        }
        if !(self.boundary_warn_threshold.is_finite() && self.boundary_warn_threshold >= 0.0) {
            return Err(Error::Evolution(
                "boundary_warn_threshold must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

fn rotate_pointwise(a: &mut [Complex64], b: &mut [Complex64], kappa: f64, tau: f64) {
    let (s, c) = (kappa * tau).sin_cos();
    let is = Complex64::new(0.0, s);
    for (p, q) in a.iter_mut().zip(b.iter_mut()) {
        let (u, v) = (*p, *q);
        *p = u * c + is * v;
        *q = is * u + v * c;
    }
}

/// Exact solution of `i∂ψ1/∂t = -κψ2, i∂ψ2/∂t = -κψ1` over `tau`.
pub fn coupling_rotation(state: &TwoComponentState, kappa: f64, tau: f64) -> TwoComponentState {
    let mut out = state.clone();
    rotate_pointwise(out.psi1.data_mut(), out.psi2.data_mut(), kappa, tau);
    out
}

fn phase_pointwise(
    a: &mut [Complex64],
    b: &mut [Complex64],
    potential: &[f64],
    params: &PhysicalParams,
    tau: f64,
) {
    let offset = -params.phase_rate;
    for ((p, q), v) in a.iter_mut().zip(b.iter_mut()).zip(potential) {
        let (d1, d2) = (p.norm_sqr(), q.norm_sqr());
        let e1 = v + offset + params.g1 * d1 + params.g12 * d2;
        let e2 = v + offset + params.g2 * d2 + params.g12 * d1;
        *p *= Complex64::from_polar(1.0, -e1 * tau);
        *q *= Complex64::from_polar(1.0, -e2 * tau);
    }
}

fn potential_table(grid: &GridSpec, params: &PhysicalParams) -> Vec<f64> {
    let mut v = Vec::with_capacity(grid.len());
    for j in 0..grid.ny() {
        let y = grid.y(j);
        for i in 0..grid.nx() {
            v.push(params.potential(grid.x(i), y));
        }
    }
    v
}

/// Exact diagonal substep: moduli are conserved, so trap and mean-field
/// phases integrate in closed form.
pub fn local_phase_step(
    state: &TwoComponentState,
    params: &PhysicalParams,
    tau: f64,
) -> TwoComponentState {
    let mut out = state.clone();
    let v = potential_table(state.grid(), params);
    phase_pointwise(out.psi1.data_mut(), out.psi2.data_mut(), &v, params, tau);
    out
}

/// Reusable integrator: FFT plans, potential and propagator tables for one
/// grid, parameter set and step size.
pub struct Stepper {
    params: PhysicalParams,
    dt: f64,
    potential: Vec<f64>,
    // exp(-i(V - ϖ)dt), used when all g vanish
    linear_phase: Option<Vec<Complex64>>,
    half_kinetic: Vec<Complex64>,
    full_kinetic: Vec<Complex64>,
    spectral: [Spectral; 2],
}

impl Stepper {
    pub fn new(grid: GridSpec, params: PhysicalParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::Evolution(format!(
                "dt = {dt} must be finite and non-zero"
            )));
        }
        let spectral = [Spectral::new(grid), Spectral::new(grid)];
        let potential = potential_table(&grid, &params);
        let linear_phase = params.is_linear().then(|| {
            potential
                .iter()
                .map(|v| Complex64::from_polar(1.0, -(v - params.phase_rate) * dt))
                .collect()
        });
        Ok(Self {
            params,
            dt,
            potential,
            linear_phase,
            half_kinetic: spectral[0].kinetic_table(0.5 * dt),
            full_kinetic: spectral[0].kinetic_table(dt),
            spectral,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn kinetic(&mut self, state: &mut TwoComponentState, full: bool) {
        let table = if full {
            &self.full_kinetic
        } else {
            &self.half_kinetic
        };
        let [s1, s2] = &mut self.spectral;
        let (a, b) = (state.psi1.data_mut(), state.psi2.data_mut());
        rayon::join(|| s1.apply_table(a, table), || s2.apply_table(b, table));
    }

    fn check(state: &TwoComponentState, step: usize, substep: &'static str) -> Result<()> {
        if state.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { step, substep })
        }
    }

    // C(dt/2) N(dt) C(dt/2)
    fn middle(&self, state: &mut TwoComponentState, kappa: f64, step: usize) -> Result<()> {
        let half = 0.5 * self.dt;
        if let Some(phase) = &self.linear_phase {
            // Linear N is a fixed diagonal factor; fuse the three pointwise substeps.
            let (s, c) = (kappa * half).sin_cos();
            let is = Complex64::new(0.0, s);
            for ((p, q), e) in state
                .psi1
                .data_mut()
                .iter_mut()
                .zip(state.psi2.data_mut().iter_mut())
                .zip(phase)
            {
                let (u, v) = (*p, *q);
                let (u, v) = ((u * c + is * v) * e, (is * u + v * c) * e);
                *p = u * c + is * v;
                *q = is * u + v * c;
            }
            return Self::check(state, step, "coupling and local phase");
        }
        rotate_pointwise(state.psi1.data_mut(), state.psi2.data_mut(), kappa, half);
        Self::check(state, step, "coupling")?;
        phase_pointwise(
            state.psi1.data_mut(),
            state.psi2.data_mut(),
            &self.potential,
            &self.params,
            self.dt,
        );
        Self::check(state, step, "local phase")?;
        rotate_pointwise(state.psi1.data_mut(), state.psi2.data_mut(), kappa, half);
        Self::check(state, step, "coupling")
    }

    /// One full Strang step with κ frozen at its value at `state.t`.
    pub fn step(
        &mut self,
        state: &mut TwoComponentState,
        schedule: &CouplingSchedule,
        step_index: usize,
    ) -> Result<()> {
        let kappa = schedule.kappa_at(state.t);
        self.kinetic(state, false);
        Self::check(state, step_index, "kinetic")?;
        self.middle(state, kappa, step_index)?;
        self.kinetic(state, false);
        Self::check(state, step_index, "kinetic")?;
        state.t += self.dt;
        Ok(())
    }

    /// Runs `n` steps from `t0 = state.t`, merging the trailing half kinetic
    /// step of one step with the leading one of the next. Step times are
    /// `t0 + k*dt`.
    pub fn run(
        &mut self,
        state: &mut TwoComponentState,
        schedule: &CouplingSchedule,
        n: usize,
        first_index: usize,
    ) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let t0 = state.t;
        self.kinetic(state, false);
        for k in 0..n {
            let index = first_index + k;
            let kappa = schedule.kappa_at(t0 + k as f64 * self.dt);
            if k > 0 {
                self.kinetic(state, true);
            }
            Self::check(state, index, "kinetic")?;
            self.middle(state, kappa, index)?;
        }
        self.kinetic(state, false);
        Self::check(state, first_index + n - 1, "kinetic")?;
        state.t = t0 + n as f64 * self.dt;
        Ok(())
    }
}

/// One Strang step of size `dt` (negative `dt` runs backwards).
pub fn step(
    state: &TwoComponentState,
    params: &PhysicalParams,
    schedule: &CouplingSchedule,
    dt: f64,
) -> Result<TwoComponentState> {
    let mut stepper = Stepper::new(*state.grid(), *params, dt)?;
    let mut out = state.clone();
    stepper.step(&mut out, schedule, 0)?;
    Ok(out)
}

/// Receives the state at step 0, every `snapshot_stride` steps, and at the end.
pub trait EvolutionSink {
    fn observe(&mut self, step: usize, state: &TwoComponentState, kappa: f64) -> Result<()>;
}

impl<F> EvolutionSink for F
where
    F: FnMut(usize, &TwoComponentState, f64) -> Result<()>,
{
    fn observe(&mut self, step: usize, state: &TwoComponentState, kappa: f64) -> Result<()> {
        self(step, state, kappa)
    }
}

/// Sink that ignores everything.
pub struct NullSink;

impl EvolutionSink for NullSink {
    fn observe(&mut self, _: usize, _: &TwoComponentState, _: f64) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryWarning {
    pub step: usize,
    pub t: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: TwoComponentState,
    pub warnings: Vec<BoundaryWarning>,
}

/// Driver loop: `config.n_steps` steps with snapshots every `snapshot_stride`.
pub fn evolve(
    state: &TwoComponentState,
    params: &PhysicalParams,
    schedule: &CouplingSchedule,
    config: &EvolutionConfig,
    sink: &mut dyn EvolutionSink,
) -> Result<Evolution> {
    config.validate()?;
    let mut stepper = Stepper::new(*state.grid(), *params, config.dt)?;
    let mut current = state.clone();
    let t_start = state.t;
    let mut warnings = Vec::new();

    let mut observe =
        |step: usize, s: &TwoComponentState, w: &mut Vec<BoundaryWarning>| -> Result<()> {
            let ratio = s.psi1.boundary_ratio().max(s.psi2.boundary_ratio());
            if ratio > config.boundary_warn_threshold {
                log::warn!(
                    "step {step} (t = {:.6}): edge magnitude {ratio:.3e} of max",
                    s.t
                );
                w.push(BoundaryWarning {
                    step,
                    t: s.t,
                    ratio,
                });
            }
            sink.observe(step, s, schedule.kappa_at(s.t))
        };

    observe(0, &current, &mut warnings)?;
    let mut done = 0;
    while done < config.n_steps {
        let chunk = config.snapshot_stride.min(config.n_steps - done);
        current.t = t_start + done as f64 * config.dt;
        stepper.run(&mut current, schedule, chunk, done)?;
        done += chunk;
        current.t = t_start + done as f64 * config.dt;
        observe(done, &current, &mut warnings)?;
    }
    Ok(Evolution {
        state: current,
        warnings,
    })
}

/// Convenience: evolve `n` steps without observing.
pub fn evolve_steps(
    state: &TwoComponentState,
    params: &PhysicalParams,
    schedule: &CouplingSchedule,
    dt: f64,
    n: usize,
) -> Result<TwoComponentState> {
    let mut stepper = Stepper::new(*state.grid(), *params, dt)?;
    let mut out = state.clone();
    stepper.run(&mut out, schedule, n, 0)?;
    Ok(out)
}

/// Applies the inverse coupling rotation, i.e. rotates by `-angle`.
pub fn unrotate(state: &TwoComponentState, angle: f64) -> (ComplexField, ComplexField) {
    let s = coupling_rotation(state, 1.0, -angle);
    (s.psi1, s.psi2)
}
