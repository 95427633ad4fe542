//! Uniform cell lists on the periodic box.

/// Minimum-image displacement `a - b` on a box of side `2 l`.
#[inline]
pub fn min_image(a: [f64; 2], b: [f64; 2], l: f64) -> [f64; 2] {
    let w = 2.0 * l;
    let f = |mut d: f64| {
        if d >= l {
            d -= w;
        } else if d < -l {
            d += w;
        }
        d
    };
    [f(a[0] - b[0]), f(a[1] - b[1])]
}

/// Wrap a coordinate into `[-l, l)`.
#[inline]
pub fn wrap(x: f64, l: f64) -> f64 {
    let w = 2.0 * l;
    let mut y = x - w * ((x + l) / w).floor();
    if y >= l {
        y -= w;
    }
    if y < -l {
        y = -l;
    }
    y
}

/// Particles binned into `n x n` cells of side at least `r`.
#[derive(Debug, Clone)]
pub struct CellList {
    n: usize,
    half_length: f64,
    cell: f64,
    starts: Vec<usize>,
    items: Vec<u32>,
}

impl CellList {
    /// `None` when fewer than three cells fit per axis; callers then use the
    /// all-pairs loop.
    pub fn build(pos: &[[f64; 2]], half_length: f64, r: f64) -> Option<Self> {
        let fit = (2.0 * half_length / r).floor().min(4096.0) as usize;
        if fit < 3 {
            return None;
        }
        // more cells than about 4 per particle only costs memory
        let n = fit.min(3.max(2 * (pos.len() as f64).sqrt().ceil() as usize));
        if n < 3 {
            return None;
        }
        let cell = 2.0 * half_length / n as f64;
        let mut list = Self {
            n,
            half_length,
            cell,
            starts: vec![0; n * n + 1],
            items: vec![0; pos.len()],
        };
        let ids: Vec<usize> = pos.iter().map(|&p| list.cell_id(p)).collect();
        for &c in &ids {
            list.starts[c + 1] += 1;
        }
        for c in 0..n * n {
            list.starts[c + 1] += list.starts[c];
        }
        let mut fill = list.starts.clone();
        for (i, &c) in ids.iter().enumerate() {
            list.items[fill[c]] = i as u32;
            fill[c] += 1;
        }
        Some(list)
    }

    #[inline]
    fn coord(&self, x: f64) -> usize {
        let c = ((x + self.half_length) / self.cell).floor() as isize;
        c.clamp(0, self.n as isize - 1) as usize
    }

    #[inline]
    fn cell_id(&self, p: [f64; 2]) -> usize {
        self.coord(p[1]) * self.n + self.coord(p[0])
    }

    /// Indices of all particles in the 3x3 block of cells around `p`, sorted.
    pub fn candidates(&self, p: [f64; 2], out: &mut Vec<u32>) {
        out.clear();
        let (cx, cy) = (self.coord(p[0]), self.coord(p[1]));
        let n = self.n;
        for dy in [n - 1, 0, 1] {
            let y = (cy + dy) % n;
            for dx in [n - 1, 0, 1] {
                let c = y * n + (cx + dx) % n;
                out.extend_from_slice(&self.items[self.starts[c]..self.starts[c + 1]]);
            }
        }
        out.sort_unstable();
    }
}

/// Neighbour search over one species, either via cells or all pairs.
#[derive(Debug, Clone)]
pub struct Neighbors<'a> {
    pos: &'a [[f64; 2]],
    cells: Option<CellList>,
}

impl<'a> Neighbors<'a> {
    pub fn new(pos: &'a [[f64; 2]], half_length: f64, r: f64, use_cells: bool) -> Self {
        let cells = if use_cells {
            CellList::build(pos, half_length, r)
        } else {
            None
        };
        Self { pos, cells }
    }

    /// Candidate indices for a query at `p`, in increasing order; a superset
    /// of the particles within one cell side.
    pub fn candidates(&self, p: [f64; 2], out: &mut Vec<u32>) {
        match &self.cells {
            Some(c) => c.candidates(p, out),
            None => {
                out.clear();
                out.extend(0..self.pos.len() as u32);
            }
        }
    }

    pub fn positions(&self) -> &'a [[f64; 2]] {
        self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_and_min_image() {
        assert_eq!(wrap(7.5, 7.5), -7.5);
        assert_eq!(wrap(-7.5, 7.5), -7.5);
        assert!((wrap(16.0, 7.5) - 1.0).abs() < 1e-12);
        assert!((wrap(-8.0, 7.5) - 7.0).abs() < 1e-12);
        let d = min_image([7.0, 0.0], [-7.0, 0.0], 7.5);
        assert!((d[0] + 1.0).abs() < 1e-12);
        // tiny negative values must not round up to l
        assert!(wrap(-1e-18, 7.5) < 7.5);
    }

    #[test]
    fn small_box_falls_back() {
        let pos = vec![[0.0, 0.0]; 4];
        assert!(CellList::build(&pos, 1.4, 1.0).is_none());
        assert!(CellList::build(&pos, 1.5, 1.0).is_some());
    }

    proptest! {
        #[test]
        fn candidates_cover_neighbourhood(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..80),
            q in (-5.0f64..5.0, -5.0f64..5.0),
        ) {
            let pos: Vec<[f64; 2]> = pts.iter().map(|p| [p.0, p.1]).collect();
            let cl = CellList::build(&pos, 5.0, 1.0).unwrap();
            let mut out = Vec::new();
            cl.candidates([q.0, q.1], &mut out);
            prop_assert!(out.windows(2).all(|w| w[0] < w[1]));
            for (i, p) in pos.iter().enumerate() {
                let d = min_image(*p, [q.0, q.1], 5.0);
                if d[0].hypot(d[1]) <= 1.0 {
                    prop_assert!(out.binary_search(&(i as u32)).is_ok());
                }
            }
        }
    }
}
