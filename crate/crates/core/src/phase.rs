//! Segregation theory for the local energy functional
//!
//! ```text
//! E[fA, fB] = ∫ ½ γAA fA² + γAB fA fB + ½ γBB fB²,   ∫ fA = ∫ fB = ½
//! ```
//!
//! where the γ are the integrals of the effective potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Pair, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSet {
    pub gamma_aa: f64,
    pub gamma_bb: f64,
    pub gamma_ab: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseRegime {
    SingularConcentration,
    Homogeneous,
    PhaseSeparated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseVerdict {
    pub regime: PhaseRegime,
    /// Optimal area occupied by A; only for phase separation.
    pub l_a_opt: Option<f64>,
    /// Minimum energy; `None` when it is unbounded below.
    pub energy_opt: Option<f64>,
    pub energy_homogeneous: f64,
    /// `γAB = √(γAA γBB)` exactly: homogeneous and separated optima coincide.
    pub degenerate: bool,
}

/// γ set from simulation parameters, plus a flag when `γAB != γBA` and the
/// geometric mean was substituted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedGammas {
    pub gammas: GammaSet,
    pub approximate: bool,
}

impl GammaSet {
    pub fn new(gamma_aa: f64, gamma_bb: f64, gamma_ab: f64) -> Self {
        Self {
            gamma_aa,
            gamma_bb,
            gamma_ab,
        }
    }

    fn check(&self) -> Result<()> {
        if [self.gamma_aa, self.gamma_bb, self.gamma_ab].iter().all(|g| g.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("non-finite gamma in {self:?}")))
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(c * self.gamma_aa, c * self.gamma_bb, c * self.gamma_ab)
    }

    /// Energy of the mixed state `fA = fB = 1 / (2|Ω|)`.
    pub fn homogeneous_energy(&self, domain_area: f64) -> f64 {
        (self.gamma_aa + 2.0 * self.gamma_ab + self.gamma_bb) / (8.0 * domain_area)
    }
}

/// γ from the potential masses of `params`.
pub fn gammas_from_params(params: &PhysicalParams) -> DerivedGammas {
    let g = |pair| params.effective_potential(pair).mass();
    let (ab, ba) = (g(Pair::AB), g(Pair::BA));
    let approximate = ab != ba;
    let gamma_ab = if approximate {
        (ab + ba).signum() * (ab * ba).abs().sqrt()
    } else {
        ab
    };
    DerivedGammas {
        gammas: GammaSet::new(g(Pair::AA), g(Pair::BB), gamma_ab),
        approximate,
    }
}

pub fn classify(gammas: &GammaSet, domain_area: f64) -> Result<PhaseVerdict> {
    gammas.check()?;
    if !(domain_area > 0.0) {
        return Err(Error::InvalidParams("domain_area must be positive".into()));
    }
    let e_hom = gammas.homogeneous_energy(domain_area);
    let singular = PhaseVerdict {
        regime: PhaseRegime::SingularConcentration,
        l_a_opt: None,
        energy_opt: None,
        energy_homogeneous: e_hom,
        degenerate: false,
    };
    if gammas.gamma_aa <= 0.0 || gammas.gamma_bb <= 0.0 {
        return Ok(singular);
    }
    let root = (gammas.gamma_aa * gammas.gamma_bb).sqrt();
    if gammas.gamma_ab <= -root {
        return Ok(singular);
    }
    if gammas.gamma_ab <= root {
        return Ok(PhaseVerdict {
            regime: PhaseRegime::Homogeneous,
            l_a_opt: None,
            energy_opt: Some(e_hom),
            energy_homogeneous: e_hom,
            degenerate: gammas.gamma_ab == root,
        });
    }
    let (sa, sb) = (gammas.gamma_aa.sqrt(), gammas.gamma_bb.sqrt());
    Ok(PhaseVerdict {
        regime: PhaseRegime::PhaseSeparated,
        l_a_opt: Some(domain_area * sa / (sa + sb)),
        energy_opt: Some((sa + sb).powi(2) / (8.0 * domain_area)),
        energy_homogeneous: e_hom,
        degenerate: false,
    })
}

/// Energy of the perfectly separated state with A filling area `l_a`.
pub fn two_phase_energy(gammas: &GammaSet, l_a: f64, domain_area: f64) -> Result<f64> {
    if !(l_a > 0.0 && l_a < domain_area) {
        return Err(Error::Domain(format!("l_A = {l_a} outside (0, {domain_area})")));
    }
    Ok((gammas.gamma_aa / l_a + gammas.gamma_bb / (domain_area - l_a)) / 8.0)
}

/// Area fraction of B in the optimal separated state.
pub fn predicted_volume_fraction_b(gammas: &GammaSet) -> Result<f64> {
    let v = classify(gammas, 1.0)?;
    if v.regime != PhaseRegime::PhaseSeparated {
        return Err(Error::WrongRegime(format!(
            "volume fraction needs phase separation, got {:?}",
            v.regime
        )));
    }
    let (sa, sb) = (gammas.gamma_aa.sqrt(), gammas.gamma_bb.sqrt());
    Ok(sb / (sa + sb))
}

/// Discretised functional for cell-sampled densities.
pub fn local_energy(gammas: &GammaSet, fa: &[f64], fb: &[f64], cell_area: f64) -> f64 {
    fa.iter()
        .zip(fb)
        .map(|(&a, &b)| {
            0.5 * gammas.gamma_aa * a * a + gammas.gamma_ab * a * b + 0.5 * gammas.gamma_bb * b * b
        })
        .sum::<f64>()
        * cell_area
}

/// CSV `gamma_ab,ratio,regime,l_a_frac,energy` with `γBB = 1`, `γAA = ratio`.
pub fn regime_map_csv(gamma_ab: &[f64], ratios: &[f64], domain_area: f64) -> Result<String> {
    let mut out = String::from("gamma_ab,ratio,regime,l_a_frac,energy\n");
    for &r in ratios {
        for &g in gamma_ab {
            let v = classify(&GammaSet::new(r, 1.0, g), domain_area)?;
            let regime = match v.regime {
                PhaseRegime::SingularConcentration => "singular_concentration",
                PhaseRegime::Homogeneous => "homogeneous",
                PhaseRegime::PhaseSeparated => "phase_separated",
            };
            let frac = v.l_a_opt.map_or(String::new(), |l| (l / domain_area).to_string());
            let e = v.energy_opt.map_or(String::from("-inf"), |e| e.to_string());
            out.push_str(&format!("{g},{r},{regime},{frac},{e}\n"));
        }
    }
    Ok(out)
}
