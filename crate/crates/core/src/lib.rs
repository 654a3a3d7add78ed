//! Simulation and numerics for non-intersecting Bernoulli random walks,
//! uniform lozenge tilings, and the extended Pearcey kernel.
//!
//! The crate is organized around the pipeline
//!
//! * [`lattice`] — domains, tilings, height functions, path ensembles and the
//!   bijections among them;
//! * [`glauber`] — single-site Markov chain samplers for uniform paths and
//!   tilings, with monotone couplings;
//! * [`nbrw`] — the non-intersecting Bernoulli walk as a Markov chain: exact
//!   transition weights, exact one-step sampling, quantile initial data and
//!   Pearcey rescaling maps;
//! * [`slope`] — the continuum layer: piecewise-constant densities, Stieltjes
//!   transforms, the complex slope and its Burgers-flow evolution;
//! * [`cusp`] — the cusp-location system and the scaling parameters derived
//!   from it;
//! * [`kernels`] — numerical evaluation of the walk's determinantal kernel,
//!   the extended Pearcey kernel, and Fredholm gap probabilities.

pub mod cusp;
pub mod glauber;
pub mod kernels;
pub mod lattice;
pub mod nbrw;
pub mod numeric;
pub mod slope;

pub use num_complex::Complex64;
