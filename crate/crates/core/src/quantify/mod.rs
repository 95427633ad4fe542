//! Image quantifiers for segregation patterns: cluster count, elongation,
//! overlap `Q` and volume fractions.
//!
//! B is drawn green and A red. `Q = sum_i [g_i r_i + 1 - max(g_i, r_i)] / N_P`
//! counts colourless pixels as fully mixed; [`overlap_q_colored`] restricts
//! the same statistic to pixels carrying at least one colour.

mod morph;
mod raster;

use serde::{Deserialize, Serialize};

use crate::continuum::DensityField;
use crate::error::Result;
use crate::micro::ParticleState;
use crate::par::{self, Exec};

pub use morph::{clean, components, elongation, Cleanup, Component};
pub use raster::{mask_from_density, rasterize_particles, render_density_disks, DensityThresholds, RasterSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Green,
    Red,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorMask {
    pub width: usize,
    pub height: usize,
    pub green: Vec<bool>,
    pub red: Vec<bool>,
    pub periodic: bool,
}

impl ColorMask {
    pub fn empty(width: usize, height: usize, periodic: bool) -> Self {
        Self {
            width,
            height,
            green: vec![false; width * height],
            red: vec![false; width * height],
            periodic,
        }
    }

    pub fn layer(&self, color: Color) -> &[bool] {
        match color {
            Color::Green => &self.green,
            Color::Red => &self.red,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cyclic shift by `(sx, sy)` pixels.
    pub fn shifted(&self, sx: usize, sy: usize) -> Self {
        let (w, h) = (self.width, self.height);
        let sh = |v: &[bool]| {
            let mut o = vec![false; v.len()];
            for y in 0..h {
                for x in 0..w {
                    o[((y + sy) % h) * w + (x + sx) % w] = v[y * w + x];
                }
            }
            o
        };
        Self {
            green: sh(&self.green),
            red: sh(&self.red),
            ..self.clone()
        }
    }

    /// Rotation by 90 degrees (square masks only).
    pub fn rotated(&self) -> Self {
        let w = self.width;
        assert_eq!(w, self.height, "rotation needs a square mask");
        let rot = |v: &[bool]| {
            let mut o = vec![false; v.len()];
            for y in 0..w {
                for x in 0..w {
                    o[x * w + (w - 1 - y)] = v[y * w + x];
                }
            }
            o
        };
        Self {
            green: rot(&self.green),
            red: rot(&self.red),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterReport {
    pub cluster_count: usize,
    pub elongations: Vec<f64>,
    pub areas: Vec<usize>,
}

impl ClusterReport {
    pub fn mean_elongation(&self) -> f64 {
        if self.elongations.is_empty() {
            return 0.0;
        }
        self.elongations.iter().sum::<f64>() / self.elongations.len() as f64
    }
}

/// Clusters of one colour after cleanup, in first-pixel scan order.
pub fn label_clusters(mask: &ColorMask, color: Color, opts: &Cleanup) -> ClusterReport {
    let (w, h) = (mask.width, mask.height);
    let layer = clean(mask.layer(color), w, h, opts);
    let mut rep = ClusterReport::default();
    for c in components(&layer, w, h, true) {
        if c.pixels.len() < opts.min_area {
            continue;
        }
        rep.elongations.push(elongation(&c.pixels));
        rep.areas.push(c.pixels.len());
    }
    rep.cluster_count = rep.areas.len();
    rep
}

fn counts(mask: &ColorMask) -> (usize, usize, usize) {
    let mut both = 0;
    let mut none = 0;
    for (&g, &r) in mask.green.iter().zip(&mask.red) {
        match (g, r) {
            (true, true) => both += 1,
            (false, false) => none += 1,
            _ => {}
        }
    }
    (both, none, mask.len())
}

pub fn overlap_q(mask: &ColorMask) -> f64 {
    let (both, none, n) = counts(mask);
    (both + none) as f64 / n as f64
}

/// `Q` over coloured pixels only; 1 when nothing is coloured.
pub fn overlap_q_colored(mask: &ColorMask) -> f64 {
    let (both, none, n) = counts(mask);
    if n == none {
        return 1.0;
    }
    both as f64 / (n - none) as f64
}

pub fn volume_fraction(mask: &ColorMask, color: Color) -> f64 {
    mask.layer(color).iter().filter(|&&v| v).count() as f64 / mask.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantSettings {
    pub raster: RasterSettings,
    pub cleanup: Cleanup,
    pub thresholds: DensityThresholds,
    /// Jitter of the disk centres when drawing density cells.
    pub density_jitter: f64,
}

impl Default for QuantSettings {
    fn default() -> Self {
        Self {
            raster: RasterSettings::default(),
            cleanup: Cleanup::default(),
            thresholds: DensityThresholds::default(),
            density_jitter: 0.2,
        }
    }
}

/// One row of the quantifier table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantReport {
    pub time: f64,
    pub n_green_clusters: usize,
    pub mean_elongation: f64,
    pub q: f64,
    pub q_colored: f64,
    pub vf_green: f64,
    pub vf_red: f64,
}

impl QuantReport {
    pub const CSV_HEADER: &'static str = "time,n_green_clusters,mean_elongation,q,q_colored,vf_green,vf_red";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.time, self.n_green_clusters, self.mean_elongation, self.q, self.q_colored, self.vf_green, self.vf_red
        )
    }
}

pub fn quantify_particles(state: &ParticleState, half_length: f64, s: &QuantSettings) -> Result<QuantReport> {
    let mask = rasterize_particles(state, half_length, &s.raster)?;
    let cl = label_clusters(&mask, Color::Green, &s.cleanup);
    Ok(QuantReport {
        time: state.time,
        n_green_clusters: cl.cluster_count,
        mean_elongation: cl.mean_elongation(),
        q: overlap_q(&mask),
        q_colored: overlap_q_colored(&mask),
        vf_green: volume_fraction(&mask, Color::Green),
        vf_red: volume_fraction(&mask, Color::Red),
    })
}

/// Volume fractions from the per-cell mask; clusters and `Q` from the disk
/// rendering of that mask.
pub fn quantify_density(field: &DensityField, s: &QuantSettings) -> Result<QuantReport> {
    let cells = mask_from_density(field, &s.thresholds);
    let img = render_density_disks(field, &cells, &s.raster, s.density_jitter, s.thresholds.seed)?;
    let cl = label_clusters(&img, Color::Green, &s.cleanup);
    Ok(QuantReport {
        time: field.time,
        n_green_clusters: cl.cluster_count,
        mean_elongation: cl.mean_elongation(),
        q: overlap_q(&img),
        q_colored: overlap_q_colored(&img),
        vf_green: volume_fraction(&cells, Color::Green),
        vf_red: volume_fraction(&cells, Color::Red),
    })
}

/// Quantify many particle snapshots, in order.
pub fn quantify_particle_batch(
    states: &[ParticleState],
    half_length: f64,
    s: &QuantSettings,
    exec: Exec,
) -> Result<Vec<QuantReport>> {
    par::map_jobs(exec, states.iter().collect(), |st| quantify_particles(st, half_length, s))
        .into_iter()
        .collect()
}
