//! Vortex ansatz fields and the two-component initial data built from them.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};
use num_complex::Complex64;

/// Largest accepted |l|.
pub const MAX_WINDING: i32 = 64;

/// Relative edge magnitude above which an ansatz is reported as clipped by the box.
pub const ANSATZ_TAIL_WARN: f64 = 1e-8;

/// Parameters of one Gaussian vortex `A e^{-r²/2σ²} (r/σ)^{|l|} e^{ilθ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexSpec {
    pub l: i32,
    pub sigma: f64,
    pub center: (f64, f64),
    pub weight: Complex64,
}

impl VortexSpec {
    /// Unit-weight vortex centered at the origin.
    pub fn centered(l: i32, sigma: f64) -> Self {
        Self {
            l,
            sigma,
            center: (0.0, 0.0),
            weight: Complex64::new(1.0, 0.0),
        }
    }

    pub fn at(mut self, x: f64, y: f64) -> Self {
        self.center = (x, y);
        self
    }

    pub fn with_weight(mut self, weight: Complex64) -> Self {
        self.weight = weight;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Spec(format!(
                "sigma = {} must be positive",
                self.sigma
            )));
        }
        if self.l.abs() > MAX_WINDING {
            return Err(Error::Spec(format!(
                "|l| = {} exceeds {MAX_WINDING}",
                self.l.abs()
            )));
        }
        if !(self.center.0.is_finite() && self.center.1.is_finite() && self.weight.is_finite()) {
            return Err(Error::Spec("center and weight must be finite".into()));
        }
        Ok(())
    }
}

/// `ln(n!)` as a sum of logs; exact enough for every admissible winding.
pub fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `A` with `A² = 1 / (π σ² |l|!)`.
pub fn normalization_constant(l: i32, sigma: f64) -> f64 {
    let ln_a2 = -(PI.ln() + 2.0 * sigma.ln() + ln_factorial(l.unsigned_abs()));
    (0.5 * ln_a2).exp()
}

/// Evaluates the ansatz at a point relative to its center (no weight).
pub(crate) fn ansatz_value(l: i32, sigma: f64, dx: f64, dy: f64, ln_a: f64) -> Complex64 {
    let r2 = dx * dx + dy * dy;
    let m = l.unsigned_abs();
    if m == 0 {
        return Complex64::new((ln_a - 0.5 * r2 / (sigma * sigma)).exp(), 0.0);
    }
    if r2 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let ln_mag = ln_a - 0.5 * r2 / (sigma * sigma) + 0.5 * m as f64 * (r2 / (sigma * sigma)).ln();
    Complex64::from_polar(ln_mag.exp(), l as f64 * dy.atan2(dx))
}

/// Samples the weighted ansatz on the grid.
pub fn vortex_ansatz(grid: &GridSpec, spec: &VortexSpec) -> Result<ComplexField> {
    spec.validate()?;
    let ln_a = normalization_constant(spec.l, spec.sigma).ln();
    let (cx, cy) = spec.center;
    let field = ComplexField::from_fn(*grid, |x, y| {
        spec.weight * ansatz_value(spec.l, spec.sigma, x - cx, y - cy, ln_a)
    });
    let tail = field.boundary_ratio();
    if tail > ANSATZ_TAIL_WARN {
        log::warn!(
            "vortex ansatz l={} sigma={} reaches the box edge ({tail:.2e} of peak)",
            spec.l,
            spec.sigma
        );
    }
    Ok(field)
}

/// Pointwise weighted sum, not renormalized.
pub fn superpose(fields: &[ComplexField], weights: &[Complex64]) -> Result<ComplexField> {
    if fields.is_empty() || fields.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "superpose needs matching non-empty lists (got {} fields, {} weights)",
            fields.len(),
            weights.len()
        )));
    }
    let grid = *fields[0].grid();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (f, w) in fields.iter().zip(weights) {
        f.ensure_same_grid(&fields[0])?;
        for (o, z) in out.iter_mut().zip(f.data()) {
            *o += w * z;
        }
    }
    Ok(ComplexField::from_raw(grid, out))
}

/// The two coupled components and the current time.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoComponentState {
    pub psi1: ComplexField,
    pub psi2: ComplexField,
    pub t: f64,
}

impl TwoComponentState {
    pub fn new(psi1: ComplexField, psi2: ComplexField, t: f64) -> Result<Self> {
        psi1.ensure_same_grid(&psi2)?;
        let state = Self { psi1, psi2, t };
        let n = state.total_norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(state)
    }

    pub fn grid(&self) -> &GridSpec {
        self.psi1.grid()
    }

    pub fn total_norm(&self) -> f64 {
        self.psi1.norm_sqr() + self.psi2.norm_sqr()
    }

    /// `ψ_τ = ψ1 + ψ2`.
    pub fn superposition(&self) -> ComplexField {
        let data = self
            .psi1
            .data()
            .iter()
            .zip(self.psi2.data())
            .map(|(a, b)| a + b)
            .collect();
        ComplexField::from_raw(*self.grid(), data)
    }

    pub fn is_finite(&self) -> bool {
        self.psi1.is_finite() && self.psi2.is_finite()
    }
}

/// Each component gets weight `√2/2` times the (weighted) ansatz of its spec.
pub fn cvss_initial(
    grid: &GridSpec,
    spec1: &VortexSpec,
    spec2: &VortexSpec,
) -> Result<TwoComponentState> {
    let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let psi1 = vortex_ansatz(grid, spec1)?.scaled(half);
    let psi2 = vortex_ansatz(grid, spec2)?.scaled(half);
    TwoComponentState::new(psi1, psi2, 0.0)
}
