//! Sparse collections, stopping times, and pointwise sparse domination of
//! commutators.

mod adapted;
mod augment;
mod collection;
mod domination;
mod stopping;

pub use adapted::{adapted_sparse_apply, adapted_sparse_sum, gamma_term};
pub use augment::{augment_for_symbol, witnesses_from_carleson, Augmentation, AugmentationSummary};
pub use collection::{verify_sparsity, CollectionRepr, SparseCollection, SparsityReport, SparsityViolation};
pub use domination::{
    commutator_modulus, domination_slack, grand_maximal_truncation, kernel_bound, kernel_values,
    sparse_dominate_commutator, DominationCertificate, NodeTrace,
};
pub use stopping::cz_stopping_cubes;
