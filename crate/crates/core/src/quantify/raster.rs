//! Turning particles and density fields into colour masks.

use serde::{Deserialize, Serialize};

use crate::continuum::DensityField;
use crate::error::{Error, Result};
use crate::micro::ParticleState;
use crate::rng::{tag, CounterRng};

use super::ColorMask;

/// Pixel grid and disk size used to draw particles (or density cells).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterSettings {
    pub pixel_size: f64,
    pub disk_radius: f64,
}

impl Default for RasterSettings {
    fn default() -> Self {
        Self {
            pixel_size: 0.05,
            disk_radius: 0.25,
        }
    }
}

impl RasterSettings {
    fn validate(&self) -> Result<()> {
        if !(self.pixel_size > 0.0 && self.disk_radius > 0.0) {
            return Err(Error::InvalidParams("pixel_size and disk_radius must be positive".into()));
        }
        Ok(())
    }

    fn pixels(&self, half_length: f64) -> usize {
        ((2.0 * half_length / self.pixel_size).round() as usize).max(1)
    }
}

/// Paint a periodic disk into `layer`.
fn paint(layer: &mut [bool], w: usize, half_length: f64, c: [f64; 2], r: f64) {
    let ps = 2.0 * half_length / w as f64;
    let wi = w as i64;
    let cx = (c[0] + half_length) / ps - 0.5;
    let cy = (c[1] + half_length) / ps - 0.5;
    let rp = r / ps;
    let (x0, x1) = ((cx - rp).floor() as i64, (cx + rp).ceil() as i64);
    let (y0, y1) = ((cy - rp).floor() as i64, (cy + rp).ceil() as i64);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= rp * rp {
                let idx = y.rem_euclid(wi) * wi + x.rem_euclid(wi);
                layer[idx as usize] = true;
            }
        }
    }
}

/// B particles as green disks, A particles as red disks.
pub fn rasterize_particles(state: &ParticleState, half_length: f64, settings: &RasterSettings) -> Result<ColorMask> {
    settings.validate()?;
    let w = settings.pixels(half_length);
    let mut m = ColorMask::empty(w, w, true);
    for &p in &state.pos_b {
        paint(&mut m.green, w, half_length, p, settings.disk_radius);
    }
    for &p in &state.pos_a {
        paint(&mut m.red, w, half_length, p, settings.disk_radius);
    }
    Ok(m)
}

/// Dominance thresholds relative to the maximum density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityThresholds {
    /// `tres1 = factor * max density`.
    pub factor: f64,
    /// `tres2 = tres1 - band`.
    pub band: f64,
    /// Seed of the random colour in the ambiguous band.
    pub seed: u64,
}

impl Default for DensityThresholds {
    fn default() -> Self {
        Self {
            factor: 5e-4,
            band: 5e-6,
            seed: 0,
        }
    }
}

/// Per-cell mask: green where B dominates by more than `tres1`, red where A
/// does, a seeded random colour when the gap exceeds `tres2` only, and
/// neither below that.
pub fn mask_from_density(field: &DensityField, th: &DensityThresholds) -> ColorMask {
    let n = field.grid.n_cells;
    let max = field.f_a.iter().chain(&field.f_b).copied().fold(0.0, f64::max);
    let tres1 = th.factor * max;
    let tres2 = tres1 - th.band;
    let rng = CounterRng::new(th.seed);
    let mut m = ColorMask::empty(n, n, true);
    for c in 0..n * n {
        let diff = field.f_b[c] - field.f_a[c];
        if diff > tres1 {
            m.green[c] = true;
        } else if -diff > tres1 {
            m.red[c] = true;
        } else if diff.abs() > tres2 {
            if rng.uniform(&[tag::MASK_BAND, c as u64]) < 0.5 {
                m.green[c] = true;
            } else {
                m.red[c] = true;
            }
        }
    }
    m
}

/// Draw each coloured cell of `cells` as a disk centred at the cell centre
/// plus a seeded uniform jitter in `[-jitter, jitter]^2`.
pub fn render_density_disks(
    field: &DensityField,
    cells: &ColorMask,
    settings: &RasterSettings,
    jitter: f64,
    seed: u64,
) -> Result<ColorMask> {
    settings.validate()?;
    let g = field.grid;
    let l = g.half_length;
    let w = settings.pixels(l);
    let n = g.n_cells;
    let rng = CounterRng::new(seed);
    let mut m = ColorMask::empty(w, w, true);
    for c in 0..n * n {
        if !(cells.green[c] || cells.red[c]) {
            continue;
        }
        let base = g.center(c % n, c / n);
        let j = |axis: u64| jitter * (2.0 * rng.uniform(&[tag::DISK_JITTER, c as u64, axis]) - 1.0);
        let p = [base[0] + j(0), base[1] + j(1)];
        if cells.green[c] {
            paint(&mut m.green, w, l, p, settings.disk_radius);
        }
        if cells.red[c] {
            paint(&mut m.red, w, l, p, settings.disk_radius);
        }
    }
    Ok(m)
}
