//! Tau-leap update of the link network.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::params::{Pair, PhysicalParams};
use crate::rng::{tag, CounterRng};

use super::cells::{min_image, Neighbors};
use super::{LinkGraph, ParticleState};

/// Per-step creation and destruction probabilities of one link slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    /// Creation rate `nu_c eps^-2 / N`.
    pub create: f64,
    /// Destruction rate `nu_d eps^-2`.
    pub destroy: f64,
}

impl LinkRates {
    pub fn new(params: &PhysicalParams, pair: Pair) -> Self {
        let eps2 = params.epsilon * params.epsilon;
        let n = match pair {
            Pair::AA => params.n_a,
            _ => params.n_b,
        }
        .max(1) as f64;
        let nu_d = params.nu_d(pair);
        Self {
            create: params.nu_ratio(pair) * nu_d / (eps2 * n),
            destroy: nu_d / eps2,
        }
    }

    pub fn probabilities(&self, dt: f64) -> (f64, f64) {
        (-(-self.create * dt).exp_m1(), -(-self.destroy * dt).exp_m1())
    }

    /// Stationary occupancy of an in-range slot under the discrete chain.
    pub fn stationary(&self, dt: f64) -> f64 {
        let (c, d) = self.probabilities(dt);
        c / (c + d)
    }
}

pub const MAX_RATE_DT: f64 = 0.1;

/// Refuse time steps that are too coarse for per-step thinning.
pub fn check_tau_leap(params: &PhysicalParams, dt: f64) -> Result<()> {
    let worst = [Pair::AA, Pair::BB, Pair::AB]
        .iter()
        .map(|&p| {
            let r = LinkRates::new(params, p);
            r.create.max(r.destroy) * dt
        })
        .fold(0.0, f64::max);
    if worst > MAX_RATE_DT {
        return Err(Error::TauLeap { max_rate_dt: worst });
    }
    Ok(())
}

const KIND_AA: u64 = 0;
const KIND_BB: u64 = 1;
const KIND_AB: u64 = 2;
const CREATE: u64 = 0;
const DESTROY: u64 = 1;

#[allow(clippy::too_many_arguments)]
fn update_kind(
    exec: Exec,
    rng: &CounterRng,
    step: u64,
    kind: u64,
    xs: &[[f64; 2]],
    nbr: &Neighbors<'_>,
    same_species: bool,
    present: &BTreeSet<(usize, usize)>,
    rates: LinkRates,
    params: &PhysicalParams,
    dt: f64,
) -> BTreeSet<(usize, usize)> {
    let (pc, pd) = rates.probabilities(dt);
    let l = params.half_length;
    let r = params.radius;
    let ys = nbr.positions();
    let draw = |op: u64, i: usize, j: usize| rng.uniform(&[tag::LINK, step, kind, op, i as u64, j as u64]);
    let created: Vec<Vec<(usize, usize)>> = par::map_jobs(exec, (0..xs.len()).collect(), |i| {
        let mut buf = Vec::new();
        nbr.candidates(xs[i], &mut buf);
        let mut out = Vec::new();
        for &j in &buf {
            let j = j as usize;
            if same_species && j <= i {
                continue;
            }
            let d = min_image(xs[i], ys[j], l);
            if d[0].hypot(d[1]) > r || present.contains(&(i, j)) {
                continue;
            }
            if draw(CREATE, i, j) < pc {
                out.push((i, j));
            }
        }
        out
    });
    let mut next: BTreeSet<(usize, usize)> = present
        .iter()
        .copied()
        .filter(|&(i, j)| draw(DESTROY, i, j) >= pd)
        .collect();
    next.extend(created.into_iter().flatten());
    next
}

/// One tau-leap step of every link slot, using positions at the step start.
pub fn link_events(
    state: &ParticleState,
    graph: &LinkGraph,
    params: &PhysicalParams,
    dt: f64,
    rng: &CounterRng,
    step: u64,
    exec: Exec,
) -> LinkGraph {
    let l = params.half_length;
    let r = params.radius;
    let nbr_a = Neighbors::new(&state.pos_a, l, r, true);
    let nbr_b = Neighbors::new(&state.pos_b, l, r, true);
    LinkGraph {
        aa: update_kind(
            exec, rng, step, KIND_AA, &state.pos_a, &nbr_a, true, &graph.aa,
            LinkRates::new(params, Pair::AA), params, dt,
        ),
        bb: update_kind(
            exec, rng, step, KIND_BB, &state.pos_b, &nbr_b, true, &graph.bb,
            LinkRates::new(params, Pair::BB), params, dt,
        ),
        ab: update_kind(
            exec, rng, step, KIND_AB, &state.pos_a, &nbr_b, false, &graph.ab,
            LinkRates::new(params, Pair::AB), params, dt,
        ),
    }
}
