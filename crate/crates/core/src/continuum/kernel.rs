//! Cell-averaged interaction kernel and periodic convolution.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::par::{self, Exec};

use super::Grid;

/// Sub-cell samples per axis for the cell averages.
const SUB: usize = 64;

/// Cell averages of the unit kernel `1/2 (|x| - R)^2` (zero outside `R`)
/// on the grid offsets that touch the disk.
#[derive(Debug, Clone)]
pub struct KernelCache {
    grid: Grid,
    radius: f64,
    /// Nonzero entries `(di, dj, weight * dx^2)`, in a fixed order.
    taps: Vec<(isize, isize, f64)>,
    spectral: Option<Arc<Vec<Complex64>>>,
}

impl KernelCache {
    pub fn new(grid: Grid, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < grid.half_length) {
            return Err(Error::InvalidParams(format!(
                "kernel radius {radius} must lie in (0, L = {})",
                grid.half_length
            )));
        }
        let dx = grid.dx;
        let m = (radius / dx).ceil() as isize + 1;
        let mut taps = Vec::new();
        for dj in -m..=m {
            for di in -m..=m {
                let mut acc = 0.0;
                for sj in 0..SUB {
                    let y = (dj as f64 + (sj as f64 + 0.5) / SUB as f64 - 0.5) * dx;
                    for si in 0..SUB {
                        let x = (di as f64 + (si as f64 + 0.5) / SUB as f64 - 0.5) * dx;
                        let r = x.hypot(y);
                        if r < radius {
                            acc += 0.5 * (r - radius) * (r - radius);
                        }
                    }
                }
                if acc > 0.0 {
                    taps.push((di, dj, acc / (SUB * SUB) as f64 * dx * dx));
                }
            }
        }
        Ok(Self {
            grid,
            radius,
            taps,
            spectral: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Discrete integral of the unit kernel, `~ pi R^4 / 12`.
    pub fn unit_mass(&self) -> f64 {
        self.taps.iter().map(|t| t.2).sum()
    }

    /// `out_i = sum_o K(o) g_{i-o} dx^2`, summed in a fixed tap order.
    pub fn convolve(&self, exec: Exec, g: &[f64], out: &mut [f64]) {
        let n = self.grid.n_cells as isize;
        let taps = &self.taps;
        par::for_each_row(exec, out, n as usize, |j, row| {
            let j = j as isize;
            for (i, o) in row.iter_mut().enumerate() {
                let i = i as isize;
                let mut acc = 0.0;
                for &(di, dj, w) in taps {
                    let si = (i - di).rem_euclid(n);
                    let sj = (j - dj).rem_euclid(n);
                    acc += w * g[(sj * n + si) as usize];
                }
                *o = acc;
            }
        });
    }

    /// Attach FFT multipliers for [`convolve_spectral`](Self::convolve_spectral).
    pub fn with_spectral(mut self) -> Self {
        let n = self.grid.n_cells;
        let mut k = vec![Complex64::new(0.0, 0.0); n * n];
        let ni = n as isize;
        for &(di, dj, w) in &self.taps {
            let idx = (dj.rem_euclid(ni) * ni + di.rem_euclid(ni)) as usize;
            k[idx].re += w;
        }
        fft2(&mut k, n, false);
        self.spectral = Some(Arc::new(k));
        self
    }

    /// Same convolution through the discrete Fourier transform.
    pub fn convolve_spectral(&self, g: &[f64], out: &mut [f64]) -> Result<()> {
        let k = self
            .spectral
            .as_ref()
            .ok_or_else(|| Error::Config("spectral multipliers not prepared".into()))?;
        let n = self.grid.n_cells;
        let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut buf, n, false);
        for (b, kk) in buf.iter_mut().zip(k.iter()) {
            *b *= kk;
        }
        fft2(&mut buf, n, true);
        let scale = 1.0 / (n * n) as f64;
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re * scale;
        }
        Ok(())
    }
}

fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = data[j * n + i];
        }
        fft.process(&mut col);
        for j in 0..n {
            data[j * n + i] = col[j];
        }
    }
}
