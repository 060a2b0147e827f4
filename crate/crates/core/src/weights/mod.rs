//! Muckenhoupt weights, Bloom setups and weighted BMO.

mod bloom;
mod bmo;
mod characteristic;
mod exponents;

pub use bloom::{holder_chain, theorem_constant_from, BloomCharacteristics, BloomSetup, HolderChain};
pub use bmo::{conjugate_weight, john_nirenberg_check, weighted_bmo_norm, JohnNirenberg};
pub use characteristic::{
    ap_characteristic, dual_weight, multilinear_ap_characteristic, multilinear_reverse_holder_exponent,
    reverse_holder_exponent, reverse_holder_ratio, weight_product,
};
pub use exponents::{conjugate_exponent, ExponentVector, WeightVector};
