//! Proximal and gradient oracles.

mod scalar;
mod spectral;
mod terms;

pub use scalar::{brute_force_prox_1d, mcp_penalty, oracle_bounds, prox_scalar_mcp, soft_threshold};
pub use spectral::{prox_spectral_mcp, singular_values, spectral_map, SpectralMcp};
pub use terms::{
    prox_masked_quadratic, prox_nonneg_distance, DenseQuadratic, DiagonalQuadratic, L1Norm,
    MaskedQuadratic, NonnegDistance, NonnegIndicator, SeparableMcp, ZeroProx, ZeroSmooth,
};
