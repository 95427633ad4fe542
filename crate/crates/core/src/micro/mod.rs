//! Particle simulations on the periodic box `[-L, L)^2`.
//!
//! `Averaged` integrates the link-averaged drift with truncated effective
//! potentials and `1/N` prefactors. `Full` carries an explicit link network
//! updated by per-step thinning of the Poisson clocks, with one untruncated
//! spring per link.
//!
//! All randomness is drawn from a counter-based generator keyed by step and
//! particle (or pair slot), so runs are reproducible under any execution
//! policy.

mod cells;
mod forces;
mod links;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Exec;
use crate::params::PhysicalParams;
use crate::rng::{tag, CounterRng};

pub use cells::{min_image, wrap, CellList};
pub use forces::{forces_averaged, forces_averaged_with, forces_full, Vec2};
pub use links::{check_tau_leap, link_events, LinkRates, MAX_RATE_DT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub pos_a: Vec<Vec2>,
    pub pos_b: Vec<Vec2>,
    pub time: f64,
}

/// Link sets: `aa` and `bb` hold pairs `i < j`, `ab` holds `(a, b)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkGraph {
    pub aa: BTreeSet<(usize, usize)>,
    pub bb: BTreeSet<(usize, usize)>,
    pub ab: BTreeSet<(usize, usize)>,
}

impl LinkGraph {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.aa.len(), self.bb.len(), self.ab.len())
    }

    pub fn is_empty(&self) -> bool {
        self.aa.is_empty() && self.bb.is_empty() && self.ab.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MicroMode {
    Full,
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Uniform,
    /// B on the left half, A on the right half.
    HalfSplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroConfig {
    pub mode: MicroMode,
    pub dt: f64,
    pub seed: u64,
    pub params: PhysicalParams,
    pub snapshot_every: u64,
    pub exec: Exec,
}

impl MicroConfig {
    pub fn new(mode: MicroMode, params: PhysicalParams, seed: u64) -> Self {
        Self {
            mode,
            dt: 1e-3,
            seed,
            params,
            snapshot_every: 1000,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt = {} must be positive", self.dt)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidParams("snapshot_every must be positive".into()));
        }
        if self.mode == MicroMode::Full {
            check_tau_leap(&self.params, self.dt)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: u64,
    pub state: ParticleState,
    pub graph: Option<LinkGraph>,
}

pub fn init_particles(params: &PhysicalParams, seed: u64, placement: Placement) -> ParticleState {
    let rng = CounterRng::new(seed);
    let l = params.half_length;
    let draw = |species: u64, i: usize, x_lo: f64, x_hi: f64| {
        let k = [tag::INIT, species, i as u64];
        let ux = rng.uniform(&[k[0], k[1], k[2], 0]);
        let uy = rng.uniform(&[k[0], k[1], k[2], 1]);
        let x = (x_lo + (x_hi - x_lo) * ux).min(x_hi - (x_hi - x_lo) * f64::EPSILON);
        [x, wrap(-l + 2.0 * l * uy, l)]
    };
    let (a_range, b_range) = match placement {
        Placement::Uniform => ((-l, l), (-l, l)),
        Placement::HalfSplit => ((0.0, l), (-l, 0.0)),
    };
    ParticleState {
        pos_a: (0..params.n_a).map(|i| draw(0, i, a_range.0, a_range.1)).collect(),
        pos_b: (0..params.n_b).map(|i| draw(1, i, b_range.0, b_range.1)).collect(),
        time: 0.0,
    }
}

/// Stepper holding the current state, link network and step counter.
#[derive(Debug, Clone)]
pub struct MicroSim {
    config: MicroConfig,
    rng: CounterRng,
    state: ParticleState,
    graph: LinkGraph,
    step: u64,
}

impl MicroSim {
    pub fn new(config: MicroConfig, state: ParticleState) -> Result<Self> {
        config.validate()?;
        if state.pos_a.len() != config.params.n_a || state.pos_b.len() != config.params.n_b {
            return Err(Error::InvalidParams("particle counts do not match n_a, n_b".into()));
        }
        Ok(Self {
            rng: CounterRng::new(config.seed),
            config,
            state,
            graph: LinkGraph::default(),
            step: 0,
        })
    }

    pub fn with_placement(config: MicroConfig, placement: Placement) -> Result<Self> {
        let state = init_particles(&config.params, config.seed, placement);
        Self::new(config, state)
    }

    pub fn state(&self) -> &ParticleState {
        &self.state
    }

    pub fn graph(&self) -> &LinkGraph {
        &self.graph
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &MicroConfig {
        &self.config
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            step: self.step,
            state: self.state.clone(),
            graph: (self.config.mode == MicroMode::Full).then(|| self.graph.clone()),
        }
    }

    /// Advance by one Euler-Maruyama step.
    pub fn step(&mut self) {
        let c = &self.config;
        let p = &c.params;
        let (fa, fb) = match c.mode {
            MicroMode::Averaged => forces_averaged(&self.state, p, c.exec),
            MicroMode::Full => {
                self.graph = link_events(&self.state, &self.graph, p, c.dt, &self.rng, self.step, c.exec);
                forces_full(&self.state, &self.graph, p)
            }
        };
        let l = p.half_length;
        let step = self.step;
        let rng = self.rng;
        let dt = c.dt;
        let mv = |pos: &mut [Vec2], f: &[Vec2], species: u64, d: f64| {
            let amp = (2.0 * d * dt).sqrt();
            for (i, (x, f)) in pos.iter_mut().zip(f).enumerate() {
                let (n0, n1) = if amp > 0.0 {
                    rng.normal_pair(&[tag::MOTION, step, species, i as u64])
                } else {
                    (0.0, 0.0)
                };
                x[0] = wrap(x[0] + f[0] * dt + amp * n0, l);
                x[1] = wrap(x[1] + f[1] * dt + amp * n1, l);
            }
        };
        mv(&mut self.state.pos_a, &fa, 0, p.diffusion_a);
        mv(&mut self.state.pos_b, &fb, 1, p.diffusion_b);
        self.step += 1;
        self.state.time = self.step as f64 * dt;
    }

    /// Step until `t_end`, calling `on_snapshot` at step 0, every
    /// `snapshot_every` steps, and at the final step.
    pub fn run_until<F: FnMut(&Snapshot)>(&mut self, t_end: f64, mut on_snapshot: F) -> Result<()> {
        if !(t_end > 0.0) {
            return Err(Error::InvalidParams(format!("t_end = {t_end} must be positive")));
        }
        let n = (t_end / self.config.dt).round() as u64;
        let every = self.config.snapshot_every;
        if self.step % every == 0 {
            on_snapshot(&self.snapshot());
        }
        let last = self.step + n;
        while self.step < last {
            self.step();
            if self.step % every == 0 || self.step == last {
                on_snapshot(&self.snapshot());
            }
        }
        Ok(())
    }
}

/// Full trajectory from a fresh initial placement.
pub fn run(config: &MicroConfig, placement: Placement, t_end: f64) -> Result<Vec<Snapshot>> {
    let mut sim = MicroSim::with_placement(config.clone(), placement)?;
    let mut out = Vec::new();
    sim.run_until(t_end, |s| out.push(s.clone()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::scenario_preset;
    use proptest::prelude::*;

    fn params(n_a: usize, n_b: usize) -> PhysicalParams {
        PhysicalParams {
            n_a,
            n_b,
            ..PhysicalParams::default()
        }
    }

    #[test]
    fn two_particle_relaxation() {
        let mut p = params(2, 0);
        p.diffusion_a = 0.0;
        p.diffusion_b = 0.0;
        let state = ParticleState {
            pos_a: vec![[-0.25, 0.0], [0.25, 0.0]],
            pos_b: vec![],
            time: 0.0,
        };
        let mut cfg = MicroConfig::new(MicroMode::Averaged, p, 1);
        cfg.dt = 1e-5;
        let mut sim = MicroSim::new(cfg, state).unwrap();
        sim.run_until(1.0, |_| {}).unwrap();
        let s = sim.state();
        let d = s.pos_a[1][0] - s.pos_a[0][0];
        let exact = 1.0 - 0.5 * (-2.0f64).exp();
        assert!((d - exact).abs() < 1e-4, "d = {d}, exact = {exact}");
        assert!(s.pos_a[0][1] == 0.0 && s.pos_a[1][1] == 0.0);
        assert!((s.pos_a[0][0] + s.pos_a[1][0]).abs() < 1e-14);
    }

    #[test]
    fn isolated_particle_has_no_drift() {
        let state = ParticleState {
            pos_a: vec![[0.0, 0.0]],
            pos_b: vec![[3.0, 3.0]],
            time: 0.0,
        };
        let (fa, fb) = forces_averaged(&state, &params(1, 1), Exec::Sequential);
        assert_eq!(fa, vec![[0.0, 0.0]]);
        assert_eq!(fb, vec![[0.0, 0.0]]);
    }

    #[test]
    fn cell_list_equals_brute_force() {
        let p = scenario_preset("IIB").unwrap().params;
        let p = PhysicalParams { n_a: 200, n_b: 200, ..p };
        let st = init_particles(&p, 42, Placement::Uniform);
        let a = forces_averaged_with(&st, &p, Exec::Sequential, true);
        let b = forces_averaged_with(&st, &p, Exec::Sequential, false);
        let c = forces_averaged_with(&st, &p, Exec::Parallel, true);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(a.0.iter().any(|f| f[0] != 0.0));
    }

    #[test]
    fn averaged_force_matches_direct_formula() {
        // independent all-pairs evaluation of the drift for a small system
        let p = PhysicalParams {
            n_a: 7,
            n_b: 5,
            half_length: 1.6,
            inter_scale: 3.0,
            base_stiffness_ab: 1.5,
            nu_ratio_aa: 2.0,
            ..PhysicalParams::default()
        };
        let st = init_particles(&p, 9, Placement::Uniform);
        let (fa, fb) = forces_averaged(&st, &p, Exec::Sequential);
        let l = p.half_length;
        let grad = |k: f64, x: [f64; 2]| {
            let d = x[0].hypot(x[1]);
            if d > 1.0 || d == 0.0 {
                [0.0, 0.0]
            } else {
                [k * (d - 1.0) * x[0] / d, k * (d - 1.0) * x[1] / d]
            }
        };
        for i in 0..7 {
            let mut e = [0.0, 0.0];
            for j in 0..7 {
                if j != i {
                    let g = grad(2.0 * 2.0, min_image(st.pos_a[i], st.pos_a[j], l));
                    e[0] -= g[0] / 7.0;
                    e[1] -= g[1] / 7.0;
                }
            }
            for j in 0..5 {
                let g = grad(4.5, min_image(st.pos_a[i], st.pos_b[j], l));
                e[0] -= g[0] / 5.0;
                e[1] -= g[1] / 5.0;
            }
            assert!((fa[i][0] - e[0]).abs() < 1e-12 && (fa[i][1] - e[1]).abs() < 1e-12);
        }
        for i in 0..5 {
            let mut e = [0.0, 0.0];
            for j in 0..7 {
                let g = grad(6.0, min_image(st.pos_b[i], st.pos_a[j], l));
                e[0] -= g[0] / 5.0;
                e[1] -= g[1] / 5.0;
            }
            for j in 0..5 {
                if j != i {
                    let g = grad(2.0, min_image(st.pos_b[i], st.pos_b[j], l));
                    e[0] -= g[0] / 5.0;
                    e[1] -= g[1] / 5.0;
                }
            }
            assert!((fb[i][0] - e[0]).abs() < 1e-12 && (fb[i][1] - e[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn intraspecies_forces_sum_to_zero() {
        let p = PhysicalParams {
            n_b: 0,
            ..params(300, 0)
        };
        let st = init_particles(&p, 3, Placement::Uniform);
        let (fa, _) = forces_averaged(&st, &p, Exec::Sequential);
        let s = fa.iter().fold([0.0, 0.0], |a, f| [a[0] + f[0], a[1] + f[1]]);
        assert!(s[0].abs() < 1e-10 && s[1].abs() < 1e-10);
    }

    #[test]
    fn placements() {
        let p = params(300, 300);
        let s = init_particles(&p, 5, Placement::HalfSplit);
        assert!(s.pos_b.iter().all(|x| x[0] < 0.0));
        assert!(s.pos_a.iter().all(|x| x[0] >= 0.0 && x[0] < p.half_length));
        assert_eq!(s, init_particles(&p, 5, Placement::HalfSplit));
        assert_ne!(s, init_particles(&p, 6, Placement::HalfSplit));

        let p = params(10_000, 10_000);
        let s = init_particles(&p, 11, Placement::Uniform);
        for pos in [&s.pos_a, &s.pos_b] {
            let mut q = [0usize; 4];
            for x in pos.iter() {
                assert!(x.iter().all(|&c| (-7.5..7.5).contains(&c)));
                q[(x[0] >= 0.0) as usize * 2 + (x[1] >= 0.0) as usize] += 1;
            }
            for c in q {
                assert!((c as f64 / 10_000.0 - 0.25).abs() < 0.02);
            }
        }
    }

    #[test]
    fn frozen_without_noise_or_neighbours() {
        let mut p = params(2, 1);
        p.diffusion_a = 0.0;
        p.diffusion_b = 0.0;
        let st = ParticleState {
            pos_a: vec![[-5.0, -5.0], [0.0, 0.0]],
            pos_b: vec![[5.0, 5.0]],
            time: 0.0,
        };
        let mut sim = MicroSim::new(MicroConfig::new(MicroMode::Averaged, p, 1), st.clone()).unwrap();
        sim.run_until(0.1, |_| {}).unwrap();
        assert_eq!(sim.state().pos_a, st.pos_a);
        assert_eq!(sim.state().pos_b, st.pos_b);
    }

    #[test]
    fn brownian_increment_variance() {
        let n = 100_000;
        let mut p = params(n, 0);
        p.diffusion_a = 0.05;
        p.half_length = 800.0;
        p.radius = 1e-3;
        let side = (n as f64).sqrt().ceil() as usize;
        let start: Vec<Vec2> = (0..n)
            .map(|i| [-790.0 + 5.0 * (i % side) as f64, -790.0 + 5.0 * (i / side) as f64])
            .collect();
        let st = ParticleState {
            pos_a: start.clone(),
            pos_b: vec![],
            time: 0.0,
        };
        let mut cfg = MicroConfig::new(MicroMode::Averaged, p, 17);
        cfg.dt = 0.01;
        let mut sim = MicroSim::new(cfg, st).unwrap();
        sim.step();
        let expected = 2.0 * 0.05 * 0.01;
        for axis in 0..2 {
            let var = sim
                .state()
                .pos_a
                .iter()
                .zip(&start)
                .map(|(x, y)| (x[axis] - y[axis]).powi(2))
                .sum::<f64>()
                / n as f64;
            assert!((var / expected - 1.0).abs() < 0.05, "var = {var}");
        }
    }

    #[test]
    fn deterministic_trajectories() {
        let mut p = scenario_preset("IB").unwrap().params;
        p.n_a = 60;
        p.n_b = 60;
        p.half_length = 3.0;
        let mut cfg = MicroConfig::new(MicroMode::Full, p, 123);
        cfg.snapshot_every = 50;
        let a = run(&cfg, Placement::Uniform, 0.2).unwrap();
        cfg.exec = Exec::Sequential;
        let b = run(&cfg, Placement::Uniform, 0.2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|s| s.state.pos_a.len() == 60 && s.state.pos_b.len() == 60));
        assert!(!a.last().unwrap().graph.as_ref().unwrap().is_empty());
    }

    #[test]
    fn tau_leap_guard() {
        let p = PhysicalParams {
            epsilon: 0.05,
            ..PhysicalParams::default()
        };
        let cfg = MicroConfig::new(MicroMode::Full, p, 1);
        assert!(matches!(cfg.validate(), Err(Error::TauLeap { .. })));
        let cfg = MicroConfig { mode: MicroMode::Averaged, ..cfg };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn full_forces() {
        let p = params(2, 1);
        let st = ParticleState {
            pos_a: vec![[0.0, 0.0], [0.6, 0.0]],
            pos_b: vec![[0.0, 0.5]],
            time: 0.0,
        };
        let empty = LinkGraph::default();
        let (fa, fb) = forces_full(&st, &empty, &p);
        assert!(fa.iter().chain(&fb).all(|f| *f == [0.0, 0.0]));

        let mut g = LinkGraph::default();
        g.aa.insert((0, 1));
        let (fa, _) = forces_full(&st, &g, &p);
        // kappa (R - d) = 2 * 0.4, pushing apart along x
        assert!((fa[0][0] + 0.8).abs() < 1e-12 && fa[0][1] == 0.0);
        assert!((fa[1][0] - 0.8).abs() < 1e-12);

        let mut g = LinkGraph::default();
        g.ab.insert((0, 0));
        let f1 = forces_full(&st, &g, &p.with_inter_scale(1.0));
        let f3 = forces_full(&st, &g, &p.with_inter_scale(3.0));
        assert!((f3.0[0][1] - 3.0 * f1.0[0][1]).abs() < 1e-12);
        assert!((f3.1[0][1] - 3.0 * f1.1[0][1]).abs() < 1e-12);
        // stretched links pull back
        let far = ParticleState {
            pos_a: vec![[0.0, 0.0], [1.5, 0.0]],
            ..st
        };
        let mut g = LinkGraph::default();
        g.aa.insert((0, 1));
        let (fa, _) = forces_full(&far, &g, &p);
        assert!(fa[0][0] > 0.0);
    }

    #[test]
    fn new_links_are_in_range() {
        let mut p = scenario_preset("IB").unwrap().params;
        p.n_a = 150;
        p.n_b = 150;
        p.half_length = 4.0;
        let st = init_particles(&p, 8, Placement::Uniform);
        let rng = CounterRng::new(8);
        let mut g = LinkGraph::default();
        for k in 0..200 {
            g = link_events(&st, &g, &p, 0.005, &rng, k, Exec::Sequential);
        }
        assert!(g.counts().0 > 0 && g.counts().2 > 0);
        let l = p.half_length;
        for &(i, j) in &g.aa {
            assert!(i < j);
            let d = min_image(st.pos_a[i], st.pos_a[j], l);
            assert!(d[0].hypot(d[1]) <= p.radius);
        }
        for &(a, b) in &g.ab {
            let d = min_image(st.pos_a[a], st.pos_b[b], l);
            assert!(d[0].hypot(d[1]) <= p.radius);
        }
        // huge destruction probability clears the network
        let mut fast = p.clone();
        fast.nu_d_aa = 1e6;
        fast.nu_d_bb = 1e6;
        fast.nu_d_ab = 1e6;
        fast.nu_ratio_aa = 0.0;
        fast.nu_ratio_bb = 0.0;
        fast.nu_ratio_ab = 0.0;
        let g2 = link_events(&st, &g, &fast, 0.005, &rng, 999, Exec::Sequential);
        assert!(g2.is_empty());
    }

    #[test]
    fn single_slot_stationary_occupancy() {
        let p = PhysicalParams {
            n_a: 2,
            n_b: 0,
            nu_ratio_aa: 1.5,
            ..PhysicalParams::default()
        };
        let dt = 1e-3;
        let st = ParticleState {
            pos_a: vec![[0.0, 0.0], [0.5, 0.0]],
            pos_b: vec![],
            time: 0.0,
        };
        let rng = CounterRng::new(77);
        let mut g = LinkGraph::default();
        let steps = 100_000u64;
        let mut on = 0u64;
        for k in 0..steps {
            g = link_events(&st, &g, &p, dt, &rng, k, Exec::Sequential);
            on += g.aa.len() as u64;
        }
        let rates = LinkRates::new(&p, crate::params::Pair::AA);
        let (pc, pd) = rates.probabilities(dt);
        let pi = rates.stationary(dt);
        // continuous-time stationary law (nu_c/N) / (nu_c/N + nu_d) agrees to O(dt)
        assert!((pi - rates.create / (rates.create + rates.destroy)).abs() < 1e-2 * pi);
        let rho = 1.0 - pc - pd;
        let sigma = (pi * (1.0 - pi) / steps as f64 * (1.0 + rho) / (1.0 - rho)).sqrt();
        let frac = on as f64 / steps as f64;
        assert!((frac - pi).abs() < 3.0 * sigma, "frac = {frac}, pi = {pi}, sigma = {sigma}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn forces_translation_invariant(seed in 0u64..1000, sx in -1.0f64..1.0, sy in -1.0f64..1.0) {
            let p = PhysicalParams { n_a: 80, n_b: 80, half_length: 4.0, ..PhysicalParams::default() };
            let st = init_particles(&p, seed, Placement::Uniform);
            let l = p.half_length;
            let shift = [sx * l / 3.0, sy * l / 7.0];
            let mv = |v: &Vec<Vec2>| v.iter().map(|x| [wrap(x[0] + shift[0], l), wrap(x[1] + shift[1], l)]).collect();
            let moved = ParticleState { pos_a: mv(&st.pos_a), pos_b: mv(&st.pos_b), time: 0.0 };
            let (a0, b0) = forces_averaged(&st, &p, Exec::Sequential);
            let (a1, b1) = forces_averaged(&moved, &p, Exec::Sequential);
            for (u, v) in a0.iter().chain(&b0).zip(a1.iter().chain(&b1)) {
                prop_assert!((u[0] - v[0]).abs() < 1e-12 && (u[1] - v[1]).abs() < 1e-12);
            }
        }
    }
}
