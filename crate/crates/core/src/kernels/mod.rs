//! Numerical evaluation of the walk's determinantal kernel and the extended
//! Pearcey kernel, correlation determinants, a brute-force enumeration
//! oracle, rescaled-kernel comparison, and Fredholm gap probabilities.

mod bernoulli;
mod compare;
mod fredholm;
mod oracle;
mod pearcey;

pub use bernoulli::{kernel_bernoulli, kernel_bernoulli_gauged, kernels_debug_w_log, BernoulliKernelOpts, WIntegralMode};
pub use compare::{
    binomial_gaussian_check, d_prime_winding, full_quantile_config, key_function_d,
    key_function_d_deriv, prefactor_check, rescaled_kernel_pair, DKind, DParams, RescaledPair,
};
pub use fredholm::{fredholm_gap, GapSpec, Kernel2T, PearceyOperator};
pub use oracle::brute_force_correlations;
pub use pearcey::{kernel_pearcey, kernel_pearcey_batch, kernel_pearcey_probe, kernel_pearcey_with, PearceyQuad};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("quadrature did not converge (last refinement change {0})")]
    QuadratureNonConvergence(f64),
    #[error("state space too large for brute-force enumeration ({0} branches)")]
    TooLarge(f64),
    #[error("time arguments must be positive (got {0})")]
    BadTime(i64),
    #[error("binomial term out of support")]
    OutOfSupport,
    #[error("evaluation point is a pole of the key function")]
    OnPole,
    #[error("Nystrom order doubling still changes the determinant by {0}")]
    NotConverged(f64),
    #[error("steepest-descent path tracing failed: {0}")]
    PathTracing(String),
    #[error(transparent)]
    Nbrw(#[from] crate::nbrw::NbrwError),
}

/// A kernel evaluation together with an error estimate and quadrature
/// diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct KernelValue {
    pub value: f64,
    pub abs_error_estimate: f64,
    /// number of poles in the w-sum (0 when the kernel reduces to the
    /// binomial term)
    pub pole_count: usize,
    /// quadrature nodes used
    pub nodes: usize,
    /// peak log-magnitude over the quadrature terms
    pub peak_log: f64,
}

/// A lattice space-time point with positive time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceTimePoint {
    pub t: i64,
    pub x: i64,
}

impl SpaceTimePoint {
    pub fn new(t: i64, x: i64) -> Result<Self, KernelError> {
        if t < 1 {
            return Err(KernelError::BadTime(t));
        }
        Ok(SpaceTimePoint { t, x })
    }
}
