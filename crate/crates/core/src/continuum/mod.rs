//! Finite-volume solver for the two-species aggregation-diffusion system
//!
//! ```text
//! d_t f_A = D_A lap f_A + div( f_A grad(W_AA * f_A + W_AB * f_B) )
//! d_t f_B = D_B lap f_B + div( f_B grad(W_BB * f_B + W_BA * f_A) )
//! ```
//!
//! on the periodic square. Face velocities are differences of the
//! cell-centred potentials `psi_S = sum_T w_ST (K * f_T)`, where `K` holds
//! cell averages of the unit truncated kernel. Advective fluxes are upwinded,
//! diffusion is centred, and time stepping is forward Euler with a per-cell
//! positivity check.

mod kernel;

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::params::{Pair, PhysicalParams};
use crate::rng::{tag, CounterRng};

pub use kernel::KernelCache;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_length: f64,
    pub n_cells: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(half_length: f64, n_cells: usize) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::InvalidParams("half_length must be positive".into()));
        }
        if n_cells < 2 || n_cells % 2 != 0 {
            return Err(Error::InvalidParams(format!("n_cells = {n_cells} must be even and >= 2")));
        }
        Ok(Self {
            half_length,
            n_cells,
            dx: 2.0 * half_length / n_cells as f64,
        })
    }

    /// Grid for `params` with `n_cells` per axis; the kernel must span at
    /// least two cells.
    pub fn for_params(params: &PhysicalParams, n_cells: usize) -> Result<Self> {
        let g = Self::new(params.half_length, n_cells)?;
        if g.dx > 0.5 * params.radius * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "dx = {} exceeds R/2 = {}",
                g.dx,
                0.5 * params.radius
            )));
        }
        Ok(g)
    }

    /// Grid with the largest even cell count whose spacing is at most `dx`.
    pub fn with_spacing(params: &PhysicalParams, dx: f64) -> Result<Self> {
        let mut n = (2.0 * params.half_length / dx).round() as usize;
        if (2.0 * params.half_length / n as f64) > dx * (1.0 + 1e-9) {
            n += 1;
        }
        n += n % 2;
        Self::for_params(params, n)
    }

    pub fn len(&self) -> usize {
        self.n_cells * self.n_cells
    }

    pub fn is_empty(&self) -> bool {
        self.n_cells == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dx
    }

    /// Centre of cell `(i, j)`; `i` runs along x, the storage is row-major in `j`.
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            -self.half_length + (i as f64 + 0.5) * self.dx,
            -self.half_length + (j as f64 + 0.5) * self.dx,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: Grid,
    pub f_a: Vec<f64>,
    pub f_b: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    pub fn constant(grid: Grid) -> Self {
        let v = 1.0 / (4.0 * grid.half_length * grid.half_length);
        Self {
            grid,
            f_a: vec![v; grid.len()],
            f_b: vec![v; grid.len()],
            time: 0.0,
        }
    }

    pub fn masses(&self) -> (f64, f64) {
        let a = self.grid.cell_area();
        (self.f_a.iter().sum::<f64>() * a, self.f_b.iter().sum::<f64>() * a)
    }

    pub fn min_value(&self) -> f64 {
        self.f_a.iter().chain(&self.f_b).copied().fold(f64::INFINITY, f64::min)
    }

    /// Cyclic shift by `(si, sj)` cells.
    pub fn shifted(&self, si: usize, sj: usize) -> Self {
        let n = self.grid.n_cells;
        let sh = |v: &[f64]| {
            let mut o = vec![0.0; v.len()];
            for j in 0..n {
                for i in 0..n {
                    o[((j + sj) % n) * n + (i + si) % n] = v[j * n + i];
                }
            }
            o
        };
        Self {
            f_a: sh(&self.f_a),
            f_b: sh(&self.f_b),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// `(1 + amplitude * U)` per cell, normalised.
    PerturbedUniform,
    /// Indicator profiles: B on `x < 0`, A on `x >= 0`.
    HalfSplit,
    /// `f* (1 + amp_S cos(pi (k1 x + k2 y) / L))` for species S.
    Cosine { k1: i64, k2: i64, amp_a: f64, amp_b: f64 },
}

pub fn init_density(grid: Grid, kind: InitKind, amplitude: f64, seed: u64) -> Result<DensityField> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidParams("amplitude must be nonnegative".into()));
    }
    let n = grid.n_cells;
    let l = grid.half_length;
    let rng = CounterRng::new(seed);
    let raw = |species: u64| -> Vec<f64> {
        (0..grid.len())
            .map(|c| {
                let (i, j) = (c % n, c / n);
                let x = grid.center(i, j);
                match kind {
                    InitKind::PerturbedUniform => {
                        1.0 + amplitude * rng.uniform(&[tag::DENSITY_INIT, species, c as u64])
                    }
                    InitKind::HalfSplit => {
                        let left = x[0] < 0.0;
                        if left == (species == 1) { 1.0 } else { 0.0 }
                    }
                    InitKind::Cosine { k1, k2, amp_a, amp_b } => {
                        let amp = if species == 0 { amp_a } else { amp_b };
                        1.0 + amp * (PI * (k1 as f64 * x[0] + k2 as f64 * x[1]) / l).cos()
                    }
                }
            })
            .collect()
    };
    let norm = |v: Vec<f64>| -> Result<Vec<f64>> {
        let s: f64 = v.iter().sum::<f64>() * grid.cell_area();
        if v.iter().any(|&x| x < 0.0) || !(s > 0.0) {
            return Err(Error::InvalidParams("initial density must be nonnegative with positive mass".into()));
        }
        Ok(v.into_iter().map(|x| x / s).collect())
    };
    Ok(DensityField {
        grid,
        f_a: norm(raw(0))?,
        f_b: norm(raw(1))?,
        time: 0.0,
    })
}

/// Pair weights `w_ST` of the continuum potentials.
fn weights(params: &PhysicalParams) -> [f64; 4] {
    Pair::ALL.map(|p| params.effective_potential(p).weight())
}

/// Convolutions `K * f_A`, `K * f_B`.
fn convolutions(field: &DensityField, kernels: &KernelCache, exec: Exec) -> (Vec<f64>, Vec<f64>) {
    let mut ca = vec![0.0; field.grid.len()];
    let mut cb = vec![0.0; field.grid.len()];
    kernels.convolve(exec, &field.f_a, &mut ca);
    kernels.convolve(exec, &field.f_b, &mut cb);
    (ca, cb)
}

/// Interaction potentials `(psi_A, psi_B)` at cell centres.
pub fn potentials(field: &DensityField, kernels: &KernelCache, params: &PhysicalParams, exec: Exec) -> (Vec<f64>, Vec<f64>) {
    let (ca, cb) = convolutions(field, kernels, exec);
    let [waa, wab, wba, wbb] = weights(params);
    let pa = ca.iter().zip(&cb).map(|(a, b)| waa * a + wab * b).collect();
    let pb = cb.iter().zip(&ca).map(|(b, a)| wbb * b + wba * a).collect();
    (pa, pb)
}

/// Cell-centred velocities `-grad psi_S` by centred differences.
pub fn velocity_field(
    field: &DensityField,
    kernels: &KernelCache,
    params: &PhysicalParams,
    exec: Exec,
) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let (pa, pb) = potentials(field, kernels, params, exec);
    let g = field.grid;
    let n = g.n_cells;
    let grad = |p: &[f64]| -> Vec<[f64; 2]> {
        (0..g.len())
            .map(|c| {
                let (i, j) = (c % n, c / n);
                let e = p[j * n + (i + 1) % n];
                let w = p[j * n + (i + n - 1) % n];
                let nn = p[((j + 1) % n) * n + i];
                let s = p[((j + n - 1) % n) * n + i];
                [-(e - w) / (2.0 * g.dx), -(nn - s) / (2.0 * g.dx)]
            })
            .collect()
    };
    (grad(&pa), grad(&pb))
}

/// Face fluxes of one species: `fx[c]` through the east face of cell `c`,
/// `fy[c]` through its north face. Returns the largest per-cell outflow rate.
fn fluxes(f: &[f64], psi: &[f64], d: f64, grid: &Grid, exec: Exec, fx: &mut [f64], fy: &mut [f64]) -> f64 {
    let n = grid.n_cells;
    let dx = grid.dx;
    let face = |c: usize, nb: usize| {
        let u = -(psi[nb] - psi[c]) / dx;
        let adv = u.max(0.0) * f[c] + u.min(0.0) * f[nb];
        (adv - d * (f[nb] - f[c]) / dx, u)
    };
    par::for_each_row(exec, fx, n, |j, row| {
        for (i, o) in row.iter_mut().enumerate() {
            *o = face(j * n + i, j * n + (i + 1) % n).0;
        }
    });
    par::for_each_row(exec, fy, n, |j, row| {
        for (i, o) in row.iter_mut().enumerate() {
            *o = face(j * n + i, ((j + 1) % n) * n + i).0;
        }
    });
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let c = j * n + i;
            let out = face(c, j * n + (i + 1) % n).1.max(0.0)
                - face(j * n + (i + n - 1) % n, c).1.min(0.0)
                + face(c, ((j + 1) % n) * n + i).1.max(0.0)
                - face(((j + n - 1) % n) * n + i, c).1.min(0.0);
            worst = worst.max(out / dx);
        }
    }
    worst + 4.0 * d / (dx * dx)
}

fn apply(f: &mut [f64], fx: &[f64], fy: &[f64], grid: &Grid, dt: f64, exec: Exec) {
    let n = grid.n_cells;
    let r = dt / grid.dx;
    par::for_each_row(exec, f, n, |j, row| {
        for (i, v) in row.iter_mut().enumerate() {
            let c = j * n + i;
            let div = fx[c] - fx[j * n + (i + n - 1) % n] + fy[c] - fy[((j + n - 1) % n) * n + i];
            *v -= r * div;
        }
    });
}

/// One explicit step; refuses (leaving `field` untouched) when `dt` would
/// break positivity.
pub fn step_fv(
    field: &mut DensityField,
    kernels: &KernelCache,
    params: &PhysicalParams,
    dt: f64,
    exec: Exec,
) -> Result<()> {
    let grid = field.grid;
    let (pa, pb) = potentials(field, kernels, params, exec);
    let len = grid.len();
    let (mut ax, mut ay, mut bx, mut by) = (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let ra = fluxes(&field.f_a, &pa, params.diffusion_a, &grid, exec, &mut ax, &mut ay);
    let rb = fluxes(&field.f_b, &pb, params.diffusion_b, &grid, exec, &mut bx, &mut by);
    let rate = ra.max(rb);
    if dt * rate > 1.0 {
        return Err(Error::Cfl {
            time: field.time,
            dt,
            suggested: 0.9 / rate,
        });
    }
    apply(&mut field.f_a, &ax, &ay, &grid, dt, exec);
    apply(&mut field.f_b, &bx, &by, &grid, dt, exec);
    field.time += dt;
    Ok(())
}

/// Stepper bundling grid, kernel and parameters.
#[derive(Debug, Clone)]
pub struct MacroSolver {
    pub params: PhysicalParams,
    pub kernels: KernelCache,
    pub dt: f64,
    pub exec: Exec,
}

impl MacroSolver {
    pub fn new(params: PhysicalParams, grid: Grid, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt = {dt} must be positive")));
        }
        if (grid.half_length - params.half_length).abs() > 1e-12 * params.half_length {
            return Err(Error::InvalidParams("grid and parameters disagree on L".into()));
        }
        let kernels = KernelCache::new(grid, params.radius)?;
        Ok(Self {
            params,
            kernels,
            dt,
            exec: Exec::default(),
        })
    }

    pub fn grid(&self) -> Grid {
        *self.kernels.grid()
    }

    pub fn step(&self, field: &mut DensityField) -> Result<()> {
        step_fv(field, &self.kernels, &self.params, self.dt, self.exec)
    }

    /// Step to `t_end`, calling `on_snapshot(step, field)` at step 0, every
    /// `stride` steps and at the end.
    pub fn run_until<F: FnMut(u64, &DensityField)>(
        &self,
        field: &mut DensityField,
        t_end: f64,
        stride: u64,
        mut on_snapshot: F,
    ) -> Result<()> {
        if stride == 0 {
            return Err(Error::InvalidParams("snapshot stride must be positive".into()));
        }
        let steps = ((t_end - field.time) / self.dt).round().max(0.0) as u64;
        on_snapshot(0, field);
        for k in 1..=steps {
            self.step(field)?;
            if k % stride == 0 || k == steps {
                on_snapshot(k, field);
            }
        }
        Ok(())
    }

    pub fn free_energy(&self, field: &DensityField) -> f64 {
        free_energy(field, &self.kernels, &self.params, self.exec)
    }
}

pub fn run_macro(
    grid: Grid,
    params: &PhysicalParams,
    init: InitKind,
    amplitude: f64,
    seed: u64,
    dt: f64,
    t_end: f64,
    stride: u64,
) -> Result<Vec<DensityField>> {
    let solver = MacroSolver::new(params.clone(), grid, dt)?;
    let mut field = init_density(grid, init, amplitude, seed)?;
    let mut out = Vec::new();
    solver.run_until(&mut field, t_end, stride, |_, f| out.push(f.clone()))?;
    Ok(out)
}

/// Discrete Fourier coefficients `(1/4L^2) sum f e^{-i pi k.x / L} dx^2`
/// for both species.
pub fn mode_amplitude(field: &DensityField, k1: i64, k2: i64) -> Result<[Complex64; 2]> {
    let g = field.grid;
    let half = (g.n_cells / 2) as i64;
    if k1.abs() > half || k2.abs() > half {
        return Err(Error::Domain(format!("mode ({k1}, {k2}) exceeds n/2 = {half}")));
    }
    let n = g.n_cells;
    let w = g.cell_area() / (4.0 * g.half_length * g.half_length);
    let mut acc = [Complex64::new(0.0, 0.0); 2];
    for j in 0..n {
        for i in 0..n {
            let x = g.center(i, j);
            let ph = -PI * (k1 as f64 * x[0] + k2 as f64 * x[1]) / g.half_length;
            let e = Complex64::new(ph.cos(), ph.sin());
            acc[0] += e * field.f_a[j * n + i];
            acc[1] += e * field.f_b[j * n + i];
        }
    }
    Ok([acc[0] * w, acc[1] * w])
}

const ENTROPY_FLOOR: f64 = 1e-300;

/// Interaction energy plus `D_S sum f_S ln f_S dx^2`; cross terms use the
/// mean of the AB and BA weights.
pub fn free_energy(field: &DensityField, kernels: &KernelCache, params: &PhysicalParams, exec: Exec) -> f64 {
    let (ca, cb) = convolutions(field, kernels, exec);
    let [waa, wab, wba, wbb] = weights(params);
    let mut inter = 0.0;
    let mut ent_a = 0.0;
    let mut ent_b = 0.0;
    for c in 0..field.grid.len() {
        let (a, b) = (field.f_a[c], field.f_b[c]);
        inter += 0.5 * waa * a * ca[c] + 0.5 * wbb * b * cb[c] + 0.5 * (wab * a * cb[c] + wba * b * ca[c]);
        let (fa, fb) = (a.max(ENTROPY_FLOOR), b.max(ENTROPY_FLOOR));
        ent_a += fa * fa.ln();
        ent_b += fb * fb.ln();
    }
    (inter + params.diffusion_a * ent_a + params.diffusion_b * ent_b) * field.grid.cell_area()
}
