//! Drift terms of the averaged and the full particle models.

use crate::par::{self, Exec};
use crate::params::{HookeanPotential, Pair, PhysicalParams};

use super::cells::{min_image, Neighbors};
use super::{LinkGraph, ParticleState};

pub type Vec2 = [f64; 2];

/// Sum of `scale * pot.force(x_i - y_j)` over `y_j` within range, in
/// increasing `j`. `skip` excludes the self term of same-species sums.
fn pair_sum(
    x: Vec2,
    skip: Option<usize>,
    nb: &Neighbors<'_>,
    pot: &HookeanPotential,
    l: f64,
    buf: &mut Vec<u32>,
) -> Vec2 {
    let r = pot.rest_radius;
    let ys = nb.positions();
    nb.candidates(x, buf);
    let mut acc = [0.0, 0.0];
    for &j in buf.iter() {
        let j = j as usize;
        if Some(j) == skip {
            continue;
        }
        let d = min_image(x, ys[j], l);
        if d[0].hypot(d[1]) > r {
            continue;
        }
        let f = pot.force(d);
        acc[0] += f[0];
        acc[1] += f[1];
    }
    acc
}

/// Drift of the averaged model. `use_cells = false` forces the all-pairs
/// reference path, which gives bit-identical results.
pub fn forces_averaged_with(
    state: &ParticleState,
    params: &PhysicalParams,
    exec: Exec,
    use_cells: bool,
) -> (Vec<Vec2>, Vec<Vec2>) {
    let l = params.half_length;
    let r = params.radius;
    let na = state.pos_a.len();
    let nb = state.pos_b.len();
    let nbr_a = Neighbors::new(&state.pos_a, l, r, use_cells);
    let nbr_b = Neighbors::new(&state.pos_b, l, r, use_cells);
    let pot = |p| params.averaged_potential(p);
    let (paa, pab, pba, pbb) = (pot(Pair::AA), pot(Pair::AB), pot(Pair::BA), pot(Pair::BB));
    let mu = params.mobility;
    let inv_na = if na > 0 { 1.0 / na as f64 } else { 0.0 };
    let inv_nb = if nb > 0 { 1.0 / nb as f64 } else { 0.0 };

    let mut fa = vec![[0.0; 2]; na];
    par::fill_indexed(exec, &mut fa, |i| {
        let mut buf = Vec::new();
        let x = state.pos_a[i];
        let s = pair_sum(x, Some(i), &nbr_a, &paa, l, &mut buf);
        let c = pair_sum(x, None, &nbr_b, &pab, l, &mut buf);
        [
            mu * (inv_na * s[0] + inv_nb * c[0]),
            mu * (inv_na * s[1] + inv_nb * c[1]),
        ]
    });
    let mut fb = vec![[0.0; 2]; nb];
    par::fill_indexed(exec, &mut fb, |i| {
        let mut buf = Vec::new();
        let x = state.pos_b[i];
        // (N_A / N_B) (1 / N_A) = 1 / N_B
        let c = pair_sum(x, None, &nbr_a, &pba, l, &mut buf);
        let s = pair_sum(x, Some(i), &nbr_b, &pbb, l, &mut buf);
        [
            mu * inv_nb * (c[0] + s[0]),
            mu * inv_nb * (c[1] + s[1]),
        ]
    });
    (fa, fb)
}

pub fn forces_averaged(state: &ParticleState, params: &PhysicalParams, exec: Exec) -> (Vec<Vec2>, Vec<Vec2>) {
    forces_averaged_with(state, params, exec, true)
}

/// Drift of the full model: one untruncated spring per link.
pub fn forces_full(state: &ParticleState, graph: &LinkGraph, params: &PhysicalParams) -> (Vec<Vec2>, Vec<Vec2>) {
    let l = params.half_length;
    let mu = params.mobility;
    let mut fa = vec![[0.0; 2]; state.pos_a.len()];
    let mut fb = vec![[0.0; 2]; state.pos_b.len()];
    let add = |acc: &mut Vec2, f: Vec2, sign: f64| {
        acc[0] += sign * mu * f[0];
        acc[1] += sign * mu * f[1];
    };
    let (saa, sbb) = (params.spring(Pair::AA), params.spring(Pair::BB));
    let (sab, sba) = (params.spring(Pair::AB), params.spring(Pair::BA));
    for &(i, j) in &graph.aa {
        let f = saa.spring_force(min_image(state.pos_a[i], state.pos_a[j], l));
        add(&mut fa[i], f, 1.0);
        add(&mut fa[j], f, -1.0);
    }
    for &(i, j) in &graph.bb {
        let f = sbb.spring_force(min_image(state.pos_b[i], state.pos_b[j], l));
        add(&mut fb[i], f, 1.0);
        add(&mut fb[j], f, -1.0);
    }
    for &(a, b) in &graph.ab {
        let d = min_image(state.pos_a[a], state.pos_b[b], l);
        add(&mut fa[a], sab.spring_force(d), 1.0);
        add(&mut fb[b], sba.spring_force([-d[0], -d[1]]), 1.0);
    }
    (fa, fb)
}
