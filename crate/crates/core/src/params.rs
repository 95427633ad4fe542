//! Physical parameters, Hookean link potentials and scenario presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Species label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    A,
    B,
}

/// Ordered interaction pair: `AB` is the action of B particles on A
/// particles, `BA` the action of A particles on B particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pair {
    AA,
    AB,
    BA,
    BB,
}

impl Pair {
    pub const ALL: [Pair; 4] = [Pair::AA, Pair::AB, Pair::BA, Pair::BB];

    /// Species that feels the force.
    pub fn target(self) -> Species {
        match self {
            Pair::AA | Pair::AB => Species::A,
            Pair::BA | Pair::BB => Species::B,
        }
    }

    /// Species that exerts the force.
    pub fn source(self) -> Species {
        match self {
            Pair::AA | Pair::BA => Species::A,
            Pair::AB | Pair::BB => Species::B,
        }
    }

    pub fn is_inter(self) -> bool {
        matches!(self, Pair::AB | Pair::BA)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub diffusion_a: f64,
    pub diffusion_b: f64,
    pub mobility: f64,
    pub radius: f64,
    pub stiffness_aa: f64,
    pub stiffness_bb: f64,
    pub base_stiffness_ab: f64,
    pub base_stiffness_ba: f64,
    /// Common scale `s` of the interspecies stiffnesses.
    pub inter_scale: f64,
    /// Creation/destruction rate ratios `nu_c / nu_d`.
    pub nu_ratio_aa: f64,
    pub nu_ratio_bb: f64,
    pub nu_ratio_ab: f64,
    /// Absolute destruction rates (full particle model only).
    pub nu_d_aa: f64,
    pub nu_d_bb: f64,
    pub nu_d_ab: f64,
    /// Limit ratio `N_A / N_B` entering the continuum BA potential.
    pub pop_ratio: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// The domain is `[-L, L)^2`.
    pub half_length: f64,
    /// Remodelling speed scale (full particle model only).
    pub epsilon: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            diffusion_a: 1e-4,
            diffusion_b: 1e-4,
            mobility: 1.0,
            radius: 1.0,
            stiffness_aa: 2.0,
            stiffness_bb: 2.0,
            base_stiffness_ab: 2.0,
            base_stiffness_ba: 2.0,
            inter_scale: 1.0,
            nu_ratio_aa: 1.0,
            nu_ratio_bb: 1.0,
            nu_ratio_ab: 1.0,
            nu_d_aa: 1.0,
            nu_d_bb: 1.0,
            nu_d_ab: 1.0,
            pop_ratio: 1.0,
            n_a: 250,
            n_b: 250,
            half_length: 7.5,
            epsilon: 0.3,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        let finite = [
            self.diffusion_a,
            self.diffusion_b,
            self.mobility,
            self.radius,
            self.stiffness_aa,
            self.stiffness_bb,
            self.base_stiffness_ab,
            self.base_stiffness_ba,
            self.inter_scale,
            self.half_length,
            self.epsilon,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.diffusion_a < 0.0 || self.diffusion_b < 0.0 {
            return bad("diffusion coefficients must be nonnegative");
        }
        if self.radius <= 0.0 {
            return bad("radius must be positive");
        }
        if self.mobility <= 0.0 {
            return bad("mobility must be positive");
        }
        if self.half_length < self.radius {
            return bad("half_length must be at least the interaction radius");
        }
        let rates = [
            self.nu_ratio_aa,
            self.nu_ratio_bb,
            self.nu_ratio_ab,
            self.nu_d_aa,
            self.nu_d_bb,
            self.nu_d_ab,
        ];
        if rates.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("rate ratios and destruction rates must be strictly positive");
        }
        if !(self.pop_ratio > 0.0) {
            return bad("pop_ratio must be positive");
        }
        if self.n_a + self.n_b == 0 {
            return bad("at least one particle is required");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }

    pub fn with_inter_scale(&self, s: f64) -> Self {
        Self {
            inter_scale: s,
            ..self.clone()
        }
    }

    /// Stiffness `kappa^ST`, with `kappa^AB = s * base_ab`.
    pub fn stiffness(&self, pair: Pair) -> f64 {
        match pair {
            Pair::AA => self.stiffness_aa,
            Pair::BB => self.stiffness_bb,
            Pair::AB => self.inter_scale * self.base_stiffness_ab,
            Pair::BA => self.inter_scale * self.base_stiffness_ba,
        }
    }

    pub fn nu_ratio(&self, pair: Pair) -> f64 {
        match pair {
            Pair::AA => self.nu_ratio_aa,
            Pair::BB => self.nu_ratio_bb,
            Pair::AB | Pair::BA => self.nu_ratio_ab,
        }
    }

    pub fn nu_d(&self, pair: Pair) -> f64 {
        match pair {
            Pair::AA => self.nu_d_aa,
            Pair::BB => self.nu_d_bb,
            Pair::AB | Pair::BA => self.nu_d_ab,
        }
    }

    pub fn diffusion(&self, s: Species) -> f64 {
        match s {
            Species::A => self.diffusion_a,
            Species::B => self.diffusion_b,
        }
    }

    pub fn count(&self, s: Species) -> usize {
        match s {
            Species::A => self.n_a,
            Species::B => self.n_b,
        }
    }

    pub fn domain_area(&self) -> f64 {
        4.0 * self.half_length * self.half_length
    }

    /// Continuum effective potential: rate ratio folded in, plus the
    /// population factor `r_AB` on the BA potential.
    pub fn effective_potential(&self, pair: Pair) -> HookeanPotential {
        HookeanPotential {
            stiffness: self.stiffness(pair),
            rest_radius: self.radius,
            nu_ratio: self.nu_ratio(pair),
            pop_factor: if pair == Pair::BA { self.pop_ratio } else { 1.0 },
        }
    }

    /// Potential driving the averaged particle model (rate ratio included,
    /// population normalisation applied separately by the force routine).
    pub fn averaged_potential(&self, pair: Pair) -> HookeanPotential {
        HookeanPotential {
            pop_factor: 1.0,
            ..self.effective_potential(pair)
        }
    }

    /// Bare link spring `kappa/2 (|x| - R)^2`.
    pub fn spring(&self, pair: Pair) -> HookeanPotential {
        HookeanPotential {
            stiffness: self.stiffness(pair),
            rest_radius: self.radius,
            nu_ratio: 1.0,
            pop_factor: 1.0,
        }
    }
}

/// Truncated Hookean potential `w/2 (|x| - R)^2` on `|x| <= R`, zero outside,
/// with `w = pop_factor * nu_ratio * stiffness`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HookeanPotential {
    pub stiffness: f64,
    pub rest_radius: f64,
    pub nu_ratio: f64,
    pub pop_factor: f64,
}

impl HookeanPotential {
    pub fn new(stiffness: f64, rest_radius: f64) -> Self {
        Self {
            stiffness,
            rest_radius,
            nu_ratio: 1.0,
            pop_factor: 1.0,
        }
    }

    /// Combined prefactor `pop_factor * nu_ratio * stiffness`.
    #[inline]
    pub fn weight(&self) -> f64 {
        self.pop_factor * self.nu_ratio * self.stiffness
    }

    #[inline]
    pub fn value(&self, x: [f64; 2]) -> f64 {
        let d = x[0].hypot(x[1]);
        if d >= self.rest_radius {
            return 0.0;
        }
        let g = d - self.rest_radius;
        0.5 * self.weight() * g * g
    }

    /// `-grad` of [`value`](Self::value). Zero outside the support and at the
    /// origin, where the radial direction is undefined.
    #[inline]
    pub fn force(&self, x: [f64; 2]) -> [f64; 2] {
        let d = x[0].hypot(x[1]);
        if d >= self.rest_radius || d == 0.0 {
            return [0.0, 0.0];
        }
        let m = self.weight() * (self.rest_radius - d) / d;
        [m * x[0], m * x[1]]
    }

    /// `-grad` of the untruncated spring `w/2 (|x| - R)^2`; stretched links
    /// (`|x| > R`) pull back.
    #[inline]
    pub fn spring_force(&self, x: [f64; 2]) -> [f64; 2] {
        let d = x[0].hypot(x[1]);
        if d == 0.0 {
            return [0.0, 0.0];
        }
        let m = self.weight() * (self.rest_radius - d) / d;
        [m * x[0], m * x[1]]
    }

    /// Integral of [`value`](Self::value) over the plane: `w pi R^4 / 12`.
    pub fn mass(&self) -> f64 {
        self.weight() * PI * self.rest_radius.powi(4) / 12.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub params: PhysicalParams,
    pub regime: Regime,
    /// Reported critical scale for this parameter family, when known.
    pub expected_s_star: Option<f64>,
}

pub const PRESET_NAMES: [&str; 8] = ["IA", "IB", "IIA", "IIB", "IIIA", "IIIB", "IVA", "IVB"];

/// One of the eight benchmark scenarios: four stiffness cases, each in a
/// stable (`s = 0.5`) and an unstable (`s = 4`) variant.
pub fn scenario_preset(name: &str) -> Result<Scenario> {
    let upper = name.trim().to_ascii_uppercase();
    let (case, regime) = match upper.strip_suffix('A') {
        Some(c) => (c.to_string(), Regime::Stable),
        None => match upper.strip_suffix('B') {
            Some(c) => (c.to_string(), Regime::Unstable),
            None => return Err(unknown(name)),
        },
    };
    // (kappa_aa, kappa_bb, base_ab, base_ba, reported s*)
    let (kaa, kbb, kab, kba, s_star) = match case.as_str() {
        "I" => (2.0, 2.0, 2.0, 2.0, 1.01),
        "II" => (2.0, 2.0, 1.0, 2.0, 1.43),
        "III" => (2.0, 1.0, 2.0, 2.0, 0.72),
        "IV" => (2.0, 1.0, 1.0, 2.0, 1.02),
        _ => return Err(unknown(name)),
    };
    let s = match regime {
        Regime::Stable => 0.5,
        Regime::Unstable => 4.0,
    };
    let params = PhysicalParams {
        stiffness_aa: kaa,
        stiffness_bb: kbb,
        base_stiffness_ab: kab,
        base_stiffness_ba: kba,
        inter_scale: s,
        ..PhysicalParams::default()
    };
    Ok(Scenario {
        name: upper,
        params,
        regime,
        expected_s_star: Some(s_star),
    })
}

fn unknown(name: &str) -> Error {
    Error::UnknownPreset {
        name: name.to_string(),
        valid: PRESET_NAMES.join(", "),
    }
}
