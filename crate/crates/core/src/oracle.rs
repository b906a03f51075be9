//! Closed-form solutions of the linear constant-coupling problem.
//!
//! With `g = 0` and constant κ the Josephson rotation commutes with the
//! single-particle Hamiltonian `H0 = -∇² + v0 r²`. If the components start in
//! eigenstates `ψ_{l1}`, `ψ_{l2}` of `H0` (Gaussian vortices with
//! `σ = v0^{-1/4}`) with weights `√2/2`:
//!
//! ```text
//! ψ1(t) = √2/2 (cos κt ψ_{l1}(t) + i sin κt ψ_{l2}(t))
//! ψ2(t) = √2/2 (i sin κt ψ_{l1}(t) + cos κt ψ_{l2}(t))
//! ψ_l(t) = e^{-iμ_l t} ψ_l,   μ_l = 2√v0 (|l| + 1)
//! ```

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::dynamics::PhysicalParams;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};
use crate::states::{vortex_ansatz, TwoComponentState, VortexSpec};

/// Mixing amplitudes: `ψ_j(t) ∝ c_{j1} ψ_{l1}(t) + c_{j2} ψ_{l2}(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiCoefficients {
    pub c11: Complex64,
    pub c12: Complex64,
    pub c21: Complex64,
    pub c22: Complex64,
    pub t: f64,
    pub kappa: f64,
}

pub fn rabi_coefficients(t: f64, kappa: f64) -> RabiCoefficients {
    let (s, c) = (kappa * t).sin_cos();
    let diag = Complex64::new(c, 0.0);
    let off = Complex64::new(0.0, s);
    RabiCoefficients {
        c11: diag,
        c12: off,
        c21: off,
        c22: diag,
        t,
        kappa,
    }
}

/// Relative slack on `σ = v0^{-1/4}`.
pub const EIGEN_SIGMA_TOL: f64 = 1e-12;

/// Eigenvalue of the centered Gaussian vortex in the trap `v0 r²`.
pub fn eigen_mu(l: i32, v0: f64) -> f64 {
    2.0 * v0.sqrt() * (l.unsigned_abs() as f64 + 1.0)
}

/// Parameters under which the closed form is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRegime {
    v0: f64,
    specs: (VortexSpec, VortexSpec),
    kappa: f64,
    mu1: f64,
    mu2: f64,
}

impl OracleRegime {
    /// Rejects nonlinear couplings, a phase rate, `v0 = 0`, off-center or
    /// weighted specs and non-eigenstate widths.
    pub fn new(
        params: &PhysicalParams,
        spec1: VortexSpec,
        spec2: VortexSpec,
        kappa: f64,
    ) -> Result<Self> {
        if !params.is_linear() {
            return Err(Error::Regime("requires g1 = g2 = g12 = 0".into()));
        }
        if params.phase_rate != 0.0 {
            return Err(Error::Regime("requires phase_rate = 0".into()));
        }
        if !(params.v0.is_finite() && params.v0 > 0.0) {
            return Err(Error::Regime(format!(
                "requires a trap, got v0 = {}",
                params.v0
            )));
        }
        if !kappa.is_finite() {
            return Err(Error::Regime("kappa must be finite".into()));
        }
        let sigma_eig = params.v0.powf(-0.25);
        for spec in [&spec1, &spec2] {
            spec.validate()?;
            if spec.center != (0.0, 0.0) {
                return Err(Error::Regime(
                    "vortices must be centered at the origin".into(),
                ));
            }
            if spec.weight != Complex64::new(1.0, 0.0) {
                return Err(Error::Regime("vortex weights must be 1".into()));
            }
            if ((spec.sigma - sigma_eig) / sigma_eig).abs() > EIGEN_SIGMA_TOL {
                return Err(Error::Regime(format!(
                    "sigma = {} is not the eigenstate width {sigma_eig} for v0 = {}",
                    spec.sigma, params.v0
                )));
            }
        }
        Ok(Self {
            v0: params.v0,
            specs: (spec1, spec2),
            kappa,
            mu1: eigen_mu(spec1.l, params.v0),
            mu2: eigen_mu(spec2.l, params.v0),
        })
    }

    /// Shorthand for centered eigenstate vortices `l1`, `l2`.
    pub fn eigen(v0: f64, l1: i32, l2: i32, kappa: f64) -> Result<Self> {
        let sigma = v0.powf(-0.25);
        Self::new(
            &PhysicalParams::linear(v0),
            VortexSpec::centered(l1, sigma),
            VortexSpec::centered(l2, sigma),
            kappa,
        )
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn specs(&self) -> (VortexSpec, VortexSpec) {
        self.specs
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }
}

/// Closed-form state at time `t`, with `χ = 0`.
pub fn analytic_state(regime: &OracleRegime, grid: &GridSpec, t: f64) -> Result<TwoComponentState> {
    let f1 = vortex_ansatz(grid, &regime.specs.0)?;
    let f2 = vortex_ansatz(grid, &regime.specs.1)?;
    let p1 = Complex64::from_polar(FRAC_1_SQRT_2, -regime.mu1 * t);
    let p2 = Complex64::from_polar(FRAC_1_SQRT_2, -regime.mu2 * t);
    let c = rabi_coefficients(t, regime.kappa);
    let combine = |a: Complex64, b: Complex64| {
        let (a, b) = (a * p1, b * p2);
        let data = f1
            .data()
            .iter()
            .zip(f2.data())
            .map(|(x, y)| a * x + b * y)
            .collect();
        ComplexField::new(*grid, data)
    };
    TwoComponentState::new(combine(c.c11, c.c12)?, combine(c.c21, c.c22)?, t)
}

/// `(L1z, L2z)` with `L1z = l1/2 - (l1-l2)/2 sin²κt` and `L1z + L2z = (l1+l2)/2`.
/// These are `⟨ψj|Lz|ψj⟩` for components of norm ½ each.
pub fn lz_curves(t: f64, l1: i32, l2: i32, kappa: f64) -> (f64, f64) {
    let s2 = (kappa * t).sin().powi(2);
    let d = 0.5 * (l1 as f64 - l2 as f64);
    (0.5 * l1 as f64 - d * s2, 0.5 * l2 as f64 + d * s2)
}

/// `α = (|l| + 1)/σ²`.
pub fn alpha(l: i32, sigma: f64) -> f64 {
    (l.unsigned_abs() as f64 + 1.0) / (sigma * sigma)
}

/// `-(α - μ)/2`, the g = 0 branch of the vacuum-coupling phase rate.
pub fn vacuum_phase_rate(l: i32, sigma: f64, mu: f64) -> f64 {
    -0.5 * (alpha(l, sigma) - mu)
}
