//! Morphological cleanup and periodic 8-connected labelling.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

const NEIGH8: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
const NEIGH4: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cleanup {
    pub remove_isolated: bool,
    pub closing: bool,
    pub fill_holes: bool,
    /// Largest background component (as a fraction of the image) that may be
    /// filled as a hole.
    pub max_hole_fraction: f64,
    /// Components smaller than this are dropped.
    pub min_area: usize,
}

impl Default for Cleanup {
    fn default() -> Self {
        Self {
            remove_isolated: true,
            closing: true,
            fill_holes: true,
            max_hole_fraction: 0.005,
            min_area: 4,
        }
    }
}

impl Cleanup {
    pub fn none() -> Self {
        Self {
            remove_isolated: false,
            closing: false,
            fill_holes: false,
            max_hole_fraction: 0.0,
            min_area: 1,
        }
    }
}

#[inline]
fn at(w: usize, h: usize, x: i64, y: i64) -> usize {
    (y.rem_euclid(h as i64) as usize) * w + x.rem_euclid(w as i64) as usize
}

fn remove_isolated(layer: &[bool], w: usize, h: usize) -> Vec<bool> {
    (0..w * h)
        .map(|c| {
            let (x, y) = ((c % w) as i64, (c / w) as i64);
            layer[c] && NEIGH8.iter().any(|&(dx, dy)| layer[at(w, h, x + dx, y + dy)])
        })
        .collect()
}

fn dilate(layer: &[bool], w: usize, h: usize) -> Vec<bool> {
    (0..w * h)
        .map(|c| {
            let (x, y) = ((c % w) as i64, (c / w) as i64);
            layer[c] || NEIGH8.iter().any(|&(dx, dy)| layer[at(w, h, x + dx, y + dy)])
        })
        .collect()
}

fn erode(layer: &[bool], w: usize, h: usize) -> Vec<bool> {
    (0..w * h)
        .map(|c| {
            let (x, y) = ((c % w) as i64, (c / w) as i64);
            layer[c] && NEIGH8.iter().all(|&(dx, dy)| layer[at(w, h, x + dx, y + dy)])
        })
        .collect()
}

/// A connected component with coordinates unwrapped around its first pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub pixels: Vec<(i64, i64)>,
    /// The component reaches itself across the seam (wraps the torus).
    pub wraps: bool,
}

/// Connected components of `layer` on the torus.
pub fn components(layer: &[bool], w: usize, h: usize, eight: bool) -> Vec<Component> {
    let neigh: &[(i64, i64)] = if eight { &NEIGH8 } else { &NEIGH4 };
    let mut seen: Vec<Option<(i64, i64)>> = vec![None; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !layer[start] || seen[start].is_some() {
            continue;
        }
        let p0 = ((start % w) as i64, (start / w) as i64);
        seen[start] = Some(p0);
        queue.push_back(p0);
        let mut pixels = Vec::new();
        let mut wraps = false;
        while let Some((x, y)) = queue.pop_front() {
            pixels.push((x, y));
            for &(dx, dy) in neigh {
                let q = (x + dx, y + dy);
                let c = at(w, h, q.0, q.1);
                if !layer[c] {
                    continue;
                }
                match seen[c] {
                    None => {
                        seen[c] = Some(q);
                        queue.push_back(q);
                    }
                    Some(prev) => wraps |= prev != q,
                }
            }
        }
        out.push(Component { pixels, wraps });
    }
    out
}

fn fill_holes(layer: &[bool], w: usize, h: usize, max_fraction: f64) -> Vec<bool> {
    let bg: Vec<bool> = layer.iter().map(|&v| !v).collect();
    let comps = components(&bg, w, h, false);
    let largest = comps.iter().map(|c| c.pixels.len()).max().unwrap_or(0);
    let limit = max_fraction * (w * h) as f64;
    let mut out = layer.to_vec();
    let mut largest_kept = false;
    for c in &comps {
        if c.pixels.len() == largest && !largest_kept {
            largest_kept = true;
            continue;
        }
        if !c.wraps && (c.pixels.len() as f64) <= limit {
            for &(x, y) in &c.pixels {
                out[at(w, h, x, y)] = true;
            }
        }
    }
    out
}

/// Apply the enabled cleanup steps in order: isolated pixels, closing, holes.
pub fn clean(layer: &[bool], w: usize, h: usize, opts: &Cleanup) -> Vec<bool> {
    let mut cur = layer.to_vec();
    if opts.remove_isolated {
        cur = remove_isolated(&cur, w, h);
    }
    if opts.closing {
        cur = erode(&dilate(&cur, w, h), w, h);
    }
    if opts.fill_holes {
        cur = fill_holes(&cur, w, h, opts.max_hole_fraction);
    }
    cur
}

/// Eccentricity of the ellipse with the same raw second moments as the
/// pixel set; 0 for a single pixel, 1 for a straight line.
pub fn elongation(pixels: &[(i64, i64)]) -> f64 {
    let n = pixels.len() as i128;
    if n <= 1 {
        return 0.0;
    }
    let (ox, oy) = pixels[0];
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for &(x, y) in pixels {
        let (x, y) = ((x - ox) as i128, (y - oy) as i128);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    // n^2 times the covariance entries, exact
    let a = (n * sxx - sx * sx) as f64;
    let c = (n * syy - sy * sy) as f64;
    let b = (n * sxy - sx * sy) as f64;
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (hi, lo) = (mean + r, (mean - r).max(0.0));
    if hi <= 0.0 {
        return 0.0;
    }
    (1.0 - lo / hi).max(0.0).sqrt()
}
