//! Small models of branching: discrete qudit records, continuous
//! pure decoherence with redundancy, and Hermite mode decompositions.

pub mod decoherence;
pub mod discrete;
pub mod hermite;

pub use decoherence::{
    branch_entropy, fragment_overlap, fragment_overlap_explicit, lindblad_decohere,
    lindblad_evolve, qbm_moments, redundancy_function, DensityGrid, PureDecoherenceModel,
    QbmMoments,
};
pub use discrete::{
    momentum_records_demo, momentum_records_demo_with, single_site_redundancy, verify_records,
    BranchState, RecordProjectorSet,
};
pub use hermite::{
    hermite_function, hermite_function_3d, hermite_functions, hermite_gram,
    hermite_mode_decomposition, hermite_reconstruct, HermiteGrid,
};
