//! Closed-form references shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use cvss::grid::{make_grid, ComplexField, GridSpec};
use cvss::states::normalization_constant;
use num_complex::Complex64;

pub fn default_grid() -> GridSpec {
    make_grid(256, 256, 24.0, 24.0).unwrap()
}

pub fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

pub fn rel_l2_real(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Free evolution of the centered Gaussian vortex under `-∇² + v0 r²`
/// (`v0 = 0` allowed). Every member of the family keeps the form
/// `N (x ± iy)^|l| D^(|l|+1) exp(-a r²)`.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicPropagator {
    pub v0: f64,
    pub sigma: f64,
}

impl HarmonicPropagator {
    /// `(D, a)` at time `t`.
    pub fn coefficients(&self, t: f64) -> (Complex64, Complex64) {
        let s = self.v0.sqrt();
        let a0 = 0.5 / (self.sigma * self.sigma);
        let (c, sn) = ((2.0 * s * t).cos(), sinc(2.0 * s * t));
        let d = Complex64::new(c, 4.0 * a0 * t * sn).inv();
        let a = Complex64::new(a0 * c, s * s * t * sn) * d;
        (d, a)
    }

    /// Prefactor multiplying `(x ± iy)^|l|` at `t = 0`.
    pub fn prefactor(&self, l: i32) -> f64 {
        normalization_constant(l, self.sigma) / self.sigma.powi(l.abs())
    }

    pub fn value(&self, l: i32, t: f64, x: f64, y: f64) -> Complex64 {
        let (d, a) = self.coefficients(t);
        let z = Complex64::new(x, if l >= 0 { y } else { -y });
        let m = l.unsigned_abs() as i32;
        z.powi(m) * d.powi(m + 1) * (-a * (x * x + y * y)).exp() * self.prefactor(l)
    }

    pub fn field(&self, grid: &GridSpec, l: i32, t: f64) -> ComplexField {
        ComplexField::from_fn(*grid, |x, y| self.value(l, t, x, y))
    }

    /// Zeros of `ψ_l(t) + ψ_0(t)` for `l > 0`: the roots of
    /// `z^l = -N_0 / (N_l D^l)`, sorted by angle in `[0, 2π)`.
    pub fn lattice_roots(&self, l: i32, t: f64) -> Vec<(f64, f64)> {
        assert!(l > 0);
        let (d, _) = self.coefficients(t);
        let rhs = -self.prefactor(0) / (self.prefactor(l) * d.powi(l));
        let (r, th) = rhs.to_polar();
        let radius = r.powf(1.0 / l as f64);
        let mut roots: Vec<(f64, f64)> = (0..l)
            .map(|k| {
                let ang = (th + 2.0 * PI * k as f64) / l as f64;
                (radius * ang.cos(), radius * ang.sin())
            })
            .collect();
        roots.sort_by(|p, q| angle(*p).total_cmp(&angle(*q)));
        roots
    }

    /// Continuous angle of one lattice root, unwrapped over `times`.
    pub fn lattice_rotation(&self, l: i32, times: &[f64]) -> f64 {
        let ang = |t: f64| {
            let (d, _) = self.coefficients(t);
            let rhs = -self.prefactor(0) / (self.prefactor(l) * d.powi(l));
            rhs.arg() / l as f64
        };
        let mut total = 0.0;
        let mut prev = ang(times[0]);
        for &t in &times[1..] {
            let a = ang(t);
            let mut d = a - prev;
            let period = 2.0 * PI / l as f64;
            while d > period / 2.0 {
                d -= period;
            }
            while d < -period / 2.0 {
                d += period;
            }
            total += d;
            prev = a;
        }
        total
    }
}

pub fn angle(p: (f64, f64)) -> f64 {
    p.1.atan2(p.0).rem_euclid(2.0 * PI)
}
