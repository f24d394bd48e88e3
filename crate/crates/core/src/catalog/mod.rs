//! Convex Lipschitz test functions on Gauss space, with their constants.

mod function;
mod rate;
mod registry;

pub use function::{
    make_ellipsoidal, make_galpha, make_linear, make_lp_norm, make_odd_monomial, make_positive_part, make_tilted,
    make_tilted_with, CustomKind, Family, FamilyKind, FunctionSpec, MatrixParams, TiltParams,
};
pub use rate::RateFunction;
pub use registry::{default_catalog, list_catalog, parse_key, DEFAULT_KEYS};
