//! Uniform periodic 2D grid, complex fields sampled on it, and the spectral
//! machinery (2D DFT, spectral derivatives, free-particle propagator).
//!
//! Layout: `data[j * nx + i]` holds the sample at `(x_i, y_j)`, i.e. rows are
//! constant-y and x varies fastest. The box is centered on the origin, so
//! `x_i = -lx/2 + i*dx`.
//!
//! DFT convention: unnormalized forward transform, `1/(nx*ny)` on the inverse.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

/// Builds a centered grid; sizes must be powers of two and at least 8.
pub fn make_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<GridSpec> {
    GridSpec::new(nx, ny, lx, ly)
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < MIN_POINTS || !n.is_power_of_two() {
                return Err(Error::Grid(format!(
                    "{name} = {n} must be a power of two >= {MIN_POINTS}"
                )));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Grid(format!("{name} = {l} must be positive")));
            }
        }
        Ok(Self { nx, ny, lx, ly })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// Number of samples, `nx * ny`.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of the first column.
    pub fn x0(&self) -> f64 {
        -0.5 * self.lx
    }

    /// Coordinate of the first row.
    pub fn y0(&self) -> f64 {
        -0.5 * self.ly
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0() + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0() + j as f64 * self.dy()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Angular wavenumbers along x in DFT order: `0, 1, .., n/2-1, -n/2, .., -1`
    /// times `2π/lx`.
    pub fn kx(&self) -> Vec<f64> {
        wavenumbers(self.nx, self.lx)
    }

    pub fn ky(&self) -> Vec<f64> {
        wavenumbers(self.ny, self.ly)
    }

    /// Row index closest to `y`, or `None` outside the box.
    pub fn nearest_row(&self, y: f64) -> Option<usize> {
        let half = 0.5 * self.ly;
        if !y.is_finite() || y < -half || y > half {
            return None;
        }
        let j = ((y - self.y0()) / self.dy()).round() as usize;
        Some(j.min(self.ny - 1))
    }

    /// Column index closest to `x`, or `None` outside the box.
    pub fn nearest_column(&self, x: f64) -> Option<usize> {
        let half = 0.5 * self.lx;
        if !x.is_finite() || x < -half || x > half {
            return None;
        }
        let i = ((x - self.x0()) / self.dx()).round() as usize;
        Some(i.min(self.nx - 1))
    }
}

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    let step = 2.0 * PI / l;
    (0..n)
        .map(|i| {
            let m = if i < n / 2 {
                i as i64
            } else {
                i as i64 - n as i64
            };
            m as f64 * step
        })
        .collect()
}

/// One component's wavefunction sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} samples, grid needs {}",
                data.len(),
                grid.len()
            )));
        }
        if data.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument(
                "field has non-finite samples".into(),
            ));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                data.push(f(grid.x(i), y));
            }
        }
        Self { grid, data }
    }

    pub(crate) fn from_raw(grid: GridSpec, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[self.grid.index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    /// `∫|ψ|² dx dy` by the rectangle rule (spectrally exact for periodic fields).
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn density(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scaled(&self, w: Complex64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|z| z * w).collect(),
        }
    }

    /// Largest magnitude on the outermost rows and columns relative to the
    /// global maximum. Zero for a zero field.
    pub fn boundary_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut edge = 0.0f64;
        for i in 0..nx {
            edge = edge
                .max(self.at(i, 0).norm())
                .max(self.at(i, ny - 1).norm());
        }
        for j in 0..ny {
            edge = edge
                .max(self.at(0, j).norm())
                .max(self.at(nx - 1, j).norm());
        }
        edge / max
    }

    pub(crate) fn ensure_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// FFT plans and scratch space for one grid. Not shared between threads;
/// build one per worker.
pub struct Spectral {
    grid: GridSpec,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
    kx: Vec<f64>,
    ky: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft_forward(grid.nx());
        let row_inv = planner.plan_fft_inverse(grid.nx());
        let col_fwd = planner.plan_fft_forward(grid.ny());
        let col_inv = planner.plan_fft_inverse(grid.ny());
        let scratch_len = [&row_fwd, &row_inv, &col_fwd, &col_inv]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            grid,
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            transposed: vec![Complex64::new(0.0, 0.0); grid.len()],
            kx: grid.kx(),
            ky: grid.ky(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Builds a multiplier table in the internal spectral layout
    /// (`table[i * ny + j]` multiplies mode `(kx[i], ky[j])`).
    pub fn table(&self, f: impl Fn(f64, f64) -> Complex64) -> Vec<Complex64> {
        let mut t = Vec::with_capacity(self.grid.len());
        for &kx in &self.kx {
            for &ky in &self.ky {
                t.push(f(kx, ky));
            }
        }
        t
    }

    /// Free-particle propagator `exp(-i |k|² tau)` for `i∂ψ/∂t = -∇²ψ`.
    pub fn kinetic_table(&self, tau: f64) -> Vec<Complex64> {
        self.table(|kx, ky| Complex64::from_polar(1.0, -(kx * kx + ky * ky) * tau))
    }

    // Leaves the spectrum in `self.transposed`.
    fn forward_into_transposed(&mut self, data: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        self.row_fwd.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.transposed, nx, ny);
        self.col_fwd
            .process_with_scratch(&mut self.transposed, &mut self.scratch);
    }

    fn inverse_from_transposed(&mut self, data: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        self.col_inv
            .process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, data, ny, nx);
        self.row_inv.process_with_scratch(data, &mut self.scratch);
        let scale = 1.0 / (nx * ny) as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    /// Multiplies the spectrum of `data` by `table` in place.
    pub fn apply_table(&mut self, data: &mut [Complex64], table: &[Complex64]) {
        assert_eq!(data.len(), self.grid.len());
        assert_eq!(table.len(), self.grid.len());
        self.forward_into_transposed(data);
        for (z, m) in self.transposed.iter_mut().zip(table) {
            *z *= m;
        }
        self.inverse_from_transposed(data);
    }

    /// Unnormalized forward 2D DFT, natural (row-major) layout.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        self.forward_into_transposed(data);
        transpose(&self.transposed, data, ny, nx);
    }

    /// Inverse 2D DFT with the `1/(nx*ny)` factor.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        transpose(data, &mut self.transposed, nx, ny);
        self.inverse_from_transposed(data);
    }

    /// Spectral `∂ψ/∂x` and `∂ψ/∂y`. The Nyquist mode of each odd derivative
    /// is dropped.
    pub fn gradient(&mut self, field: &ComplexField) -> (Vec<Complex64>, Vec<Complex64>) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut spec = field.data().to_vec();
        self.forward_into_transposed(&mut spec);
        let spectrum = self.transposed.clone();

        let mut dx = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let mut dy = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for (axis, out) in [(0usize, &mut dx), (1usize, &mut dy)] {
            for i in 0..nx {
                for j in 0..ny {
                    let k = if axis == 0 {
                        if i == nx / 2 {
                            0.0
                        } else {
                            self.kx[i]
                        }
                    } else if j == ny / 2 {
                        0.0
                    } else {
                        self.ky[j]
                    };
                    let s = i * ny + j;
                    self.transposed[s] = spectrum[s] * Complex64::new(0.0, k);
                }
            }
            self.inverse_from_transposed(out);
        }
        (dx, dy)
    }

    /// `∫|∇ψ|² dx dy` via Parseval.
    pub fn gradient_energy(&mut self, field: &ComplexField) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut buf = field.data().to_vec();
        self.forward_into_transposed(&mut buf);
        let mut acc = 0.0;
        for i in 0..nx {
            let kx2 = self.kx[i] * self.kx[i];
            for j in 0..ny {
                acc += (kx2 + self.ky[j] * self.ky[j]) * self.transposed[i * ny + j].norm_sqr();
            }
        }
        acc * self.grid.cell_area() / (nx * ny) as f64
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], cols: usize, rows: usize) {
    // src is rows x cols (row-major), dst becomes cols x rows.
    const BLOCK: usize = 16;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Free evolution `i∂ψ/∂t = -∇²ψ` over `dt`, exact in Fourier space.
pub fn kinetic_half_step(field: &ComplexField, dt: f64) -> ComplexField {
    let mut spectral = Spectral::new(*field.grid());
    let table = spectral.kinetic_table(dt);
    let mut data = field.data().to_vec();
    spectral.apply_table(&mut data, &table);
    ComplexField::from_raw(*field.grid(), data)
}

/// Warn threshold for `apply_lz`: spectral derivatives assume periodicity.
pub const LZ_BOUNDARY_WARN: f64 = 1e-8;

/// `L_z ψ = -i (x ∂ψ/∂y - y ∂ψ/∂x)` with spectral derivatives.
pub fn apply_lz(field: &ComplexField) -> ComplexField {
    let mut spectral = Spectral::new(*field.grid());
    apply_lz_with(&mut spectral, field)
}

pub fn apply_lz_with(spectral: &mut Spectral, field: &ComplexField) -> ComplexField {
    let ratio = field.boundary_ratio();
    if ratio > LZ_BOUNDARY_WARN {
        log::warn!(
            "apply_lz: edge magnitude {ratio:.3e} of max; periodic derivatives may be inaccurate"
        );
    }
    apply_lz_quiet(spectral, field)
}

/// `apply_lz_with` without the boundary check, for callers that already report it.
pub(crate) fn apply_lz_quiet(spectral: &mut Spectral, field: &ComplexField) -> ComplexField {
    let grid = *field.grid();
    let (gx, gy) = spectral.gradient(field);
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..grid.ny() {
        let y = grid.y(j);
        for i in 0..grid.nx() {
            let x = grid.x(i);
            let s = grid.index(i, j);
            let v = gy[s] * x - gx[s] * y;
            out.push(Complex64::new(v.im, -v.re));
        }
    }
    ComplexField::from_raw(grid, out)
}
