//! Contradiction-tolerant belief graphs: signed confidence propagation,
//! balanced reasoning zones and a governed zone atlas.

pub mod atlas;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod io;
pub mod matrix;
pub mod projection;
pub mod propagation;
pub mod rng;
pub mod spectral;
pub mod zones;

pub use atlas::{atlas_refresh, atlas_update, Atlas, GovernanceParams, ScoringMode};
pub use error::{Error, Result};
pub use graph::{BeliefGraph, BeliefNode, NodeId, Sign, TypedEdge};
pub use matrix::{build_signed_matrices, SignedMatrices, SparseRows};
pub use projection::SignedProjection;
pub use propagation::{propagate, ConfidenceState, PriorMode, PropagationParams};
pub use zones::{extract_zones, Zone};
