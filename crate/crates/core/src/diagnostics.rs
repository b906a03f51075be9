//! Observables on fields and states: norms and overlaps, angular momentum,
//! phase maps, vortex cores, energy, screen profiles and fringe metrics.
//!
//! All reductions run sequentially in grid order, so repeated evaluation
//! gives identical bits.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dynamics::{EvolutionSink, PhysicalParams};
use crate::error::{Error, Result};
use crate::grid::{apply_lz_quiet, apply_lz_with, ComplexField, GridSpec, Spectral};
use crate::states::TwoComponentState;

/// Default `density_floor` for core detection, relative to the peak density.
pub const CORE_DENSITY_FLOOR: f64 = 1e-6;

/// Densities below this fraction of the peak have no meaningful phase.
pub const PHASE_FLOOR: f64 = 1e-12;

/// Visibility separating fringe patterns from smooth profiles.
pub const FRINGE_THRESHOLD: f64 = 0.2;

/// Relative level defining a profile's support.
pub const SUPPORT_LEVEL: f64 = 0.01;

pub fn norm(field: &ComplexField) -> f64 {
    field.norm_sqr()
}

/// `⟨a|b⟩ = ∫ a* b dx dy`.
pub fn overlap(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    a.ensure_same_grid(b)?;
    let s: Complex64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(s * a.grid().cell_area())
}

/// `|⟨reference|field⟩|²`.
pub fn projection(reference: &ComplexField, field: &ComplexField) -> Result<f64> {
    Ok(overlap(reference, field)?.norm_sqr())
}

/// Unnormalized `Re⟨ψ|Lz ψ⟩`.
pub fn lz_moment_with(spectral: &mut Spectral, field: &ComplexField) -> f64 {
    lz_moment_of(field, &apply_lz_with(spectral, field))
}

fn lz_moment_of(field: &ComplexField, lz: &ComplexField) -> f64 {
    let s: f64 = field
        .data()
        .iter()
        .zip(lz.data())
        .map(|(a, b)| (a.conj() * b).re)
        .sum();
    s * field.grid().cell_area()
}

pub fn lz_moment(field: &ComplexField) -> f64 {
    lz_moment_with(&mut Spectral::new(*field.grid()), field)
}

/// `Re⟨ψ|Lz ψ⟩ / ⟨ψ|ψ⟩`, with `Lz` about the grid origin.
pub fn lz_expectation(field: &ComplexField) -> Result<f64> {
    lz_expectation_with(&mut Spectral::new(*field.grid()), field)
}

pub fn lz_expectation_with(spectral: &mut Spectral, field: &ComplexField) -> Result<f64> {
    let n = field.norm_sqr();
    if !(n > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(lz_moment_with(spectral, field) / n)
}

/// Pointwise `arg ψ` in `(-π, π]`; `valid` is false where the density is
/// below `PHASE_FLOOR` of its maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub grid: GridSpec,
    pub phase: Vec<f64>,
    pub valid: Vec<bool>,
}

fn arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

pub fn phase_map(field: &ComplexField) -> PhaseMap {
    let cut = PHASE_FLOOR * field.max_abs().powi(2);
    let max_zero = cut == 0.0;
    PhaseMap {
        grid: *field.grid(),
        phase: field.data().iter().map(|&z| arg(z)).collect(),
        valid: field
            .data()
            .iter()
            .map(|z| !max_zero && z.norm_sqr() >= cut)
            .collect(),
    }
}

/// Maps a phase difference into `(-π, π]`.
pub fn wrap_phase(d: f64) -> f64 {
    let w = d.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexCore {
    pub x: f64,
    pub y: f64,
    pub charge: i32,
}

/// Plaquette winding scan. Each cell with all four corner densities above
/// `density_floor * max` is walked counterclockwise; cells with winding ±1
/// are reported at their centers. Only interior cells are scanned.
///
/// A core sitting exactly on a grid node zeroes that node and hides it from
/// all four adjacent cells, so a node below the floor whose eight neighbors
/// are all above it is walked around its neighbor ring instead and reported
/// at the node.
pub fn detect_vortex_cores(field: &ComplexField, density_floor: f64) -> Vec<VortexCore> {
    let g = *field.grid();
    let dens = field.density();
    let peak = dens.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Vec::new();
    }
    let cut = density_floor * peak;
    let phase: Vec<f64> = field.data().iter().map(|&z| arg(z)).collect();
    let mut cores = Vec::new();
    for j in 0..g.ny() - 1 {
        for i in 0..g.nx() - 1 {
            let corners = [
                g.index(i, j),
                g.index(i + 1, j),
                g.index(i + 1, j + 1),
                g.index(i, j + 1),
            ];
            if corners.iter().any(|&c| !(dens[c] > cut)) {
                continue;
            }
            let mut sum = 0.0;
            for k in 0..4 {
                sum += wrap_phase(phase[corners[(k + 1) % 4]] - phase[corners[k]]);
            }
            let w = (sum / TAU).round() as i32;
            if w.abs() == 1 {
                cores.push(VortexCore {
                    x: g.x(i) + 0.5 * g.dx(),
                    y: g.y(j) + 0.5 * g.dy(),
                    charge: w,
                });
            }
        }
    }
    const RING: [(isize, isize); 8] = [
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
    ];
    for j in 1..g.ny() - 1 {
        for i in 1..g.nx() - 1 {
            if dens[g.index(i, j)] > cut {
                continue;
            }
            let ring = RING
                .map(|(di, dj)| g.index((i as isize + di) as usize, (j as isize + dj) as usize));
            if ring.iter().any(|&c| !(dens[c] > cut)) {
                continue;
            }
            let sum: f64 = (0..8)
                .map(|k| wrap_phase(phase[ring[(k + 1) % 8]] - phase[ring[k]]))
                .sum();
            let w = (sum / TAU).round() as i32;
            if w.abs() == 1 {
                cores.push(VortexCore {
                    x: g.x(i),
                    y: g.y(j),
                    charge: w,
                });
            }
        }
    }
    cores
}

fn bilinear(field: &ComplexField, x: f64, y: f64) -> Option<Complex64> {
    let g = field.grid();
    let fx = (x - g.x0()) / g.dx();
    let fy = (y - g.y0()) / g.dy();
    if !(fx >= 0.0 && fy >= 0.0) {
        return None;
    }
    let (i, j) = (fx.floor() as usize, fy.floor() as usize);
    if i + 1 >= g.nx() || j + 1 >= g.ny() {
        return None;
    }
    let (u, v) = (fx - i as f64, fy - j as f64);
    Some(
        field.at(i, j) * ((1.0 - u) * (1.0 - v))
            + field.at(i + 1, j) * (u * (1.0 - v))
            + field.at(i, j + 1) * ((1.0 - u) * v)
            + field.at(i + 1, j + 1) * (u * v),
    )
}

/// Relative amplitude below which a loop sample counts as a zero.
pub const LOOP_FLOOR: f64 = 1e-15;

/// Total phase winding of `field` along a counterclockwise circle, sampled
/// with bilinear interpolation at sub-cell spacing.
pub fn loop_winding(field: &ComplexField, center: (f64, f64), radius: f64) -> Result<i64> {
    let g = field.grid();
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "loop radius {radius} must be positive"
        )));
    }
    let h = g.dx().min(g.dy());
    let n = ((TAU * radius / h).ceil() as usize * 8).max(64);
    let floor = LOOP_FLOOR * field.max_abs();
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let th = TAU * k as f64 / n as f64;
        let z = bilinear(
            field,
            center.0 + radius * th.cos(),
            center.1 + radius * th.sin(),
        )
        .ok_or_else(|| Error::InvalidArgument("winding loop leaves the box".into()))?;
        if !(z.norm() > floor) {
            return Err(Error::InvalidArgument(
                "winding loop crosses a zero of the field".into(),
            ));
        }
        samples.push(arg(z));
    }
    let total: f64 = (0..n)
        .map(|k| wrap_phase(samples[(k + 1) % n] - samples[k]))
        .sum();
    Ok((total / TAU).round() as i64)
}

/// `|ψ(x, y_row)|²` along the grid row nearest `y_screen`.
pub fn screen_profile(field: &ComplexField, y_screen: f64) -> Result<Vec<f64>> {
    let g = field.grid();
    let j = g.nearest_row(y_screen).ok_or_else(|| {
        Error::InvalidArgument(format!("y_screen = {y_screen} lies outside the box"))
    })?;
    Ok((0..g.nx()).map(|i| field.at(i, j).norm_sqr()).collect())
}

pub const MIN_PROFILE_LEN: usize = 16;

/// Dominant spatial period: mean removed, largest non-zero DFT bin, refined by
/// a parabola through the peak and its neighbors.
pub fn fringe_period(profile: &[f64], dx: f64) -> Result<f64> {
    let n = profile.len();
    if n < MIN_PROFILE_LEN {
        return Err(Error::InvalidArgument(format!(
            "profile has {n} samples, need at least {MIN_PROFILE_LEN}"
        )));
    }
    if !(dx.is_finite() && dx > 0.0) || profile.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(
            "profile and dx must be finite, dx > 0".into(),
        ));
    }
    let mean = profile.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = profile
        .iter()
        .map(|p| Complex64::new(p - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf.iter().map(|z| z.norm()).collect();

    let (k, peak) =
        (1..=n / 2)
            .map(|k| (k, mag[k]))
            .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
    let scale = profile.iter().map(|p| p.abs()).fold(0.0, f64::max) * n as f64;
    if k == 0 || !(peak > 1e-12 * scale) {
        return Err(Error::NoFringes);
    }
    let mut kf = k as f64;
    if k > 1 && k < n / 2 {
        let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
        let den = a - 2.0 * b + c;
        if den != 0.0 {
            kf += 0.5 * (a - c) / den;
        }
    }
    Ok(n as f64 * dx / kf)
}

fn mirror_index(i: usize, n: usize) -> usize {
    (n - i) % n
}

/// Coincidence intensity `|ψL(x)ψR(-x) + ψR(x)ψL(-x)|²` of the symmetrized
/// pair state on the screen row, pairing each column with its mirror image
/// about `x = 0`.
pub fn coincidence_pattern(
    field_l: &ComplexField,
    field_r: &ComplexField,
    y_screen: f64,
) -> Result<Vec<f64>> {
    field_l.ensure_same_grid(field_r)?;
    let g = field_l.grid();
    let j = g.nearest_row(y_screen).ok_or_else(|| {
        Error::InvalidArgument(format!("y_screen = {y_screen} lies outside the box"))
    })?;
    let n = g.nx();
    Ok((0..n)
        .map(|i| {
            let m = mirror_index(i, n);
            (field_l.at(i, j) * field_r.at(m, j) + field_r.at(i, j) * field_l.at(m, j)).norm_sqr()
        })
        .collect())
}

/// Incoherent counterpart of `coincidence_pattern`:
/// `|ψL(x)ψR(-x)|² + |ψR(x)ψL(-x)|²`.
pub fn coincidence_envelope(
    field_l: &ComplexField,
    field_r: &ComplexField,
    y_screen: f64,
) -> Result<Vec<f64>> {
    field_l.ensure_same_grid(field_r)?;
    let g = field_l.grid();
    let j = g.nearest_row(y_screen).ok_or_else(|| {
        Error::InvalidArgument(format!("y_screen = {y_screen} lies outside the box"))
    })?;
    let n = g.nx();
    Ok((0..n)
        .map(|i| {
            let m = mirror_index(i, n);
            (field_l.at(i, j) * field_r.at(m, j)).norm_sqr()
                + (field_r.at(i, j) * field_l.at(m, j)).norm_sqr()
        })
        .collect())
}

/// Relative interference term `coherent / envelope - 1` where `mask` holds,
/// zero elsewhere. Removes the smooth envelope before `fringe_period`.
pub fn fringe_signal(coherent: &[f64], envelope: &[f64], mask: &[bool]) -> Vec<f64> {
    coherent
        .iter()
        .zip(envelope)
        .zip(mask)
        .map(|((c, e), &m)| if m && *e > 0.0 { c / e - 1.0 } else { 0.0 })
        .collect()
}

/// Indices where `profile > level * max`.
pub fn support_mask(profile: &[f64], level: f64) -> Vec<bool> {
    let max = profile.iter().copied().fold(0.0, f64::max);
    profile
        .iter()
        .map(|&p| max > 0.0 && p > level * max)
        .collect()
}

// First and last index above SUPPORT_LEVEL of the max.
fn support_span(profile: &[f64]) -> Result<(usize, usize)> {
    if profile.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidArgument(
            "profile must be finite and non-negative".into(),
        ));
    }
    let mask = support_mask(profile, SUPPORT_LEVEL);
    let first = mask.iter().position(|&m| m).ok_or(Error::ZeroNorm)?;
    let last = mask.iter().rposition(|&m| m).ok_or(Error::ZeroNorm)?;
    Ok((first, last))
}

/// Fringe contrast `(M - m)/(M + m)` over the central half of the profile's
/// support, where `M` is the largest interior local maximum and `m` the
/// smallest interior local minimum. A window without an interior minimum has
/// no fringes and gives 0.
pub fn fringe_visibility(profile: &[f64]) -> Result<f64> {
    let (first, last) = support_span(profile)?;
    let span = last - first;
    let (lo, hi) = (first + span / 4, last - span / 4);
    let mut max_peak: Option<f64> = None;
    let mut min_dip: Option<f64> = None;
    for i in lo.max(1)..=hi.min(profile.len().saturating_sub(2)) {
        let (a, p, b) = (profile[i - 1], profile[i], profile[i + 1]);
        if p > a && p >= b {
            max_peak = Some(max_peak.map_or(p, |m| m.max(p)));
        }
        if p < a && p <= b {
            min_dip = Some(min_dip.map_or(p, |m| m.min(p)));
        }
    }
    let Some(dip) = min_dip else {
        return Ok(0.0);
    };
    let peak = max_peak.unwrap_or_else(|| profile[lo..=hi].iter().copied().fold(0.0, f64::max));
    if peak + dip == 0.0 {
        return Ok(0.0);
    }
    Ok(((peak - dip) / (peak + dip)).clamp(0.0, 1.0))
}

/// Number of local maxima above `level * max`, plateaus counted once.
pub fn count_modes(profile: &[f64], level: f64) -> usize {
    let max = profile.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return 0;
    }
    let cut = level * max;
    let n = profile.len();
    let mut count = 0;
    let mut i = 0;
    while i < n {
        let mut k = i;
        while k + 1 < n && profile[k + 1] == profile[i] {
            k += 1;
        }
        let left_lower = i == 0 || profile[i - 1] < profile[i];
        let right_lower = k + 1 == n || profile[k + 1] < profile[i];
        if left_lower && right_lower && profile[i] > cut {
            count += 1;
        }
        i = k + 1;
    }
    count
}

/// Density-weighted mean position and total mass `∫|ψ|²`.
pub fn centroid(field: &ComplexField) -> Result<(f64, f64, f64)> {
    let g = field.grid();
    let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
    for j in 0..g.ny() {
        let y = g.y(j);
        for i in 0..g.nx() {
            let d = field.at(i, j).norm_sqr();
            m += d;
            mx += d * g.x(i);
            my += d * y;
        }
    }
    if !(m > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok((mx / m, my / m, m * g.cell_area()))
}

/// Cells within this many points of an edge count as boundary.
pub fn boundary_band(grid: &GridSpec) -> (usize, usize) {
    ((grid.nx() / 32).max(1), (grid.ny() / 32).max(1))
}

/// `∫(|ψ1|² + |ψ2|²)` over the outer band of the box.
pub fn boundary_mass(state: &TwoComponentState) -> f64 {
    let g = state.grid();
    let (bx, by) = boundary_band(g);
    let mut acc = 0.0;
    for j in 0..g.ny() {
        let edge_row = j < by || j >= g.ny() - by;
        for i in 0..g.nx() {
            if edge_row || i < bx || i >= g.nx() - bx {
                let s = g.index(i, j);
                acc += state.psi1.data()[s].norm_sqr() + state.psi2.data()[s].norm_sqr();
            }
        }
    }
    acc * g.cell_area()
}

/// ```text
/// E = ∫ |∇ψ1|² + |∇ψ2|² + V(|ψ1|² + |ψ2|²) + g1/2 |ψ1|⁴ + g2/2 |ψ2|⁴
///       + g12 |ψ1|²|ψ2|² - κ(ψ1*ψ2 + ψ2*ψ1)
/// ```
pub fn energy_with(
    spectral: &mut Spectral,
    state: &TwoComponentState,
    params: &PhysicalParams,
    kappa: f64,
) -> f64 {
    let g = *state.grid();
    let kinetic = spectral.gradient_energy(&state.psi1) + spectral.gradient_energy(&state.psi2);
    let mut local = 0.0;
    for j in 0..g.ny() {
        let y = g.y(j);
        for i in 0..g.nx() {
            let s = g.index(i, j);
            let (a, b) = (state.psi1.data()[s], state.psi2.data()[s]);
            let (d1, d2) = (a.norm_sqr(), b.norm_sqr());
            local += params.potential(g.x(i), y) * (d1 + d2)
                + 0.5 * params.g1 * d1 * d1
                + 0.5 * params.g2 * d2 * d2
                + params.g12 * d1 * d2
                - 2.0 * kappa * (a.conj() * b).re;
        }
    }
    kinetic + local * g.cell_area()
}

pub fn energy(state: &TwoComponentState, params: &PhysicalParams, kappa: f64) -> f64 {
    energy_with(&mut Spectral::new(*state.grid()), state, params, kappa)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub norm1: f64,
    pub norm2: f64,
    pub lz1: f64,
    pub lz2: f64,
    pub proj11: f64,
    pub proj12: f64,
    pub n_cores: usize,
    pub energy: f64,
    pub boundary_mass: f64,
}

/// Evaluates a `DiagnosticsRecord` for a state. Projections are taken onto
/// the two reference fields (normally the unit-norm t = 0 ansätze) and cores
/// are counted in `ψ1 + ψ2`.
pub struct DiagnosticsRecorder {
    params: PhysicalParams,
    reference1: ComplexField,
    reference2: ComplexField,
    density_floor: f64,
    spectral: Spectral,
    records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsRecorder {
    pub fn new(
        params: PhysicalParams,
        reference1: ComplexField,
        reference2: ComplexField,
    ) -> Result<Self> {
        reference1.ensure_same_grid(&reference2)?;
        let spectral = Spectral::new(*reference1.grid());
        Ok(Self {
            params,
            reference1,
            reference2,
            density_floor: CORE_DENSITY_FLOOR,
            spectral,
            records: Vec::new(),
        })
    }

    pub fn record(&mut self, state: &TwoComponentState, kappa: f64) -> Result<DiagnosticsRecord> {
        state.psi1.ensure_same_grid(&self.reference1)?;
        let norm1 = state.psi1.norm_sqr();
        let norm2 = state.psi2.norm_sqr();
        let lz = |sp: &mut Spectral, f: &ComplexField, n: f64| {
            if n > 0.0 {
                // edge leakage is already reported through boundary_mass
                lz_moment_of(f, &apply_lz_quiet(sp, f)) / n
            } else {
                0.0
            }
        };
        let lz1 = lz(&mut self.spectral, &state.psi1, norm1);
        let lz2 = lz(&mut self.spectral, &state.psi2, norm2);
        Ok(DiagnosticsRecord {
            t: state.t,
            norm1,
            norm2,
            lz1,
            lz2,
            proj11: projection(&self.reference1, &state.psi1)?,
            proj12: projection(&self.reference2, &state.psi1)?,
            n_cores: detect_vortex_cores(&state.superposition(), self.density_floor).len(),
            energy: energy_with(&mut self.spectral, state, &self.params, kappa),
            boundary_mass: boundary_mass(state),
        })
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<DiagnosticsRecord> {
        self.records
    }
}

impl EvolutionSink for DiagnosticsRecorder {
    fn observe(&mut self, _step: usize, state: &TwoComponentState, kappa: f64) -> Result<()> {
        let r = self.record(state, kappa)?;
        self.records.push(r);
        Ok(())
    }
}
