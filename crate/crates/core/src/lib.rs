//! Two-species cell segregation toolkit.
//!
//! The crate covers every level of the link-spring cell model:
//!
//! * [`params`]: physical constants, Hookean effective potentials and the
//!   scenario presets.
//! * [`micro`]: the stochastic particle model with an explicit link network
//!   (`full`) and its fast-remodelling average (`averaged`).
//! * [`continuum`]: the nonlocal two-species aggregation-diffusion system on a
//!   periodic grid, solved with a positivity-preserving finite-volume scheme.
//! * [`stability`] and [`specfun`]: the linear dispersion relation around the
//!   homogeneous state, the critical interspecies scale `s*` and the most
//!   unstable wavenumber.
//! * [`phase`]: the local phase-separation energy and optimal splits.
//! * [`quantify`]: colour masks, cluster labelling, elongation, overlap `Q`
//!   and volume fractions.
//! * [`io`]: run configuration, dumps, manifests and the experiment harness.
//!
//! With the default `parallel` feature, inner loops (force accumulation,
//! convolutions, sweeps) run on rayon; without it the same code runs
//! sequentially and produces bit-identical results.

pub mod continuum;
pub mod error;
pub mod io;
pub mod micro;
pub mod par;
pub mod params;
pub mod phase;
pub mod quantify;
pub mod rng;
pub mod specfun;
pub mod stability;

pub use error::{Error, Result};
pub use params::{HookeanPotential, Pair, PhysicalParams, Regime, Scenario};
