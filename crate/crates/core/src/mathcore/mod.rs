//! Entropy, Hamming and Boolean-function analysis primitives.

mod bits;
mod boolean;
mod entropy;

pub use bits::{hamming, Bits};
pub use boolean::{
    count_influential, fourier_expand, influence, low_degree_influence, noise_operator, BooleanFn,
    FourierExpansion, MAX_VARS,
};
pub use entropy::{binary_entropy, entropy_bits};
pub(crate) use entropy::inverse_entropy_lower;
