//! Random streams, special functions and scalar samplers.
//!
//! Everything downstream of the sampler is driven by [`RandomStream`], a
//! counter-based generator: replaying a `(seed, stream_id)` pair replays the
//! stream bit for bit, and distinct `stream_id`s derived from one master seed
//! give independent streams for parallel trials.
//!
//! The special functions cover exactly what the truncated inverse-Gamma
//! machinery needs: `ln Γ`, the regularized incomplete gamma functions in
//! linear *and* log space, and their inverses. The log-space variants matter:
//! the mixture weights of the block sampler evaluate `Q(a, b·e^{k²})`, which
//! underflows to zero long before the arithmetic becomes meaningless.

mod rng;
mod special;

pub use rng::{derive_stream_id, RandomStream};
pub use special::{
    erf, inv_ln_reg_gamma_q, inv_normal_cdf, inv_reg_gamma_p, ln_gamma, ln_normal_cdf, ln_reg_gamma_q,
    log_sum_exp, normal_cdf, reg_gamma_p, reg_gamma_q,
};
