//! Geometry of quantum and post-quantum correlations on the CHSH facet of the
//! no-signaling polytope: face classification, principle and NPA boundaries,
//! Hardy points, and constrained Born-rule searches.

pub mod behavior;
pub mod classify;
pub mod error;
pub mod hardy;
pub mod linalg;
pub mod npa;
pub mod principles;
pub mod quantum;
pub mod sdp;
pub mod simplex;

pub use behavior::{
    canonical_pr, chsh_ch_form, chsh_value, correlators, from_free, index_of, local_box, pr_box,
    tuple_of, white_noise, Behavior, Correlators, FreeVector,
};
pub use classify::{
    classify_all, classify_face, ClassificationTable, DimCount, Evidence, StandardSearch, Verdict,
    VoidClassification, Witness, WitnessSearch, WitnessSource,
};
pub use error::{Error, Result};
pub use hardy::{enumerate_arguments, hardy_max_point, hardy_success, l_h_point, HardyArgument};
pub use npa::{contains, max_mu, Level, MomentStructure, NpaOptions};
pub use principles::{boundary_mu, ml_value, uffink_value, Principle, PrincipleVerdict};
pub use quantum::{
    behavior_from_qubit, i3322_value, max_chsh_qubits, max_i3322_qutrits, BlochAxis, QubitConfig,
    QutritConfig, SearchSettings,
};
pub use sdp::{solve_feasibility, SdpProblem, SdpResult, SdpStatus};
pub use simplex::{center_segment, nl_vertices, void_edges, Face, Segment};
