//! Landmark-motion geometry on the SRVF sphere, expression-transition
//! synthesis, landmark-driven mesh deformation, and evaluation metrics.
//!
//! A facial expression is a trajectory of `k` 3D landmarks. Its square-root
//! velocity encoding is a single point on a unit Hilbert sphere, where
//! transitions between expressions are geodesics. Decoded landmark motion
//! then drives a dense mesh through a linear displacement model fitted to
//! the landmark displacements.

pub mod config;
pub mod deform;
pub mod error;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod sphere;
pub mod srvf;
pub mod trajectory;
pub mod transition;

pub use config::PipelineConfig;
pub use deform::{
    apply_deformation, build_displacement_dataset, compute_vertex_weights, deform_sequence,
    deform_to_landmarks,
    extract_landmarks, fit_coefficients, train_pca, DeformationModel, DisplacementField, Mesh,
    MeshTopology, ModeSelection, SparseDisplacement, VertexWeights,
};
pub use error::{Error, Result};
pub use losses::{
    adversarial_loss, encode_condition, gp_interpolate, motion_total_loss,
    reconstruction_loss_tangent, ConditionCode, LossWeights,
};
pub use metrics::{
    cumulative_error_curve, displacement_l1, per_frame_specificity, per_vertex_error,
    s2d_total_loss, sliding_window_error, specificity, specificity_nearest, vertex_distances,
    weighted_l1, CumulativeCurve,
    ErrorSummary, MetricReport,
};
pub use sphere::{
    exp_map, geodesic_distance, geodesic_interpolate, karcher_mean, log_map, SphereConfig,
    TangentVector,
};
pub use srvf::{srvf_decode, srvf_decode_restored, srvf_encode, Srvf};
pub use trajectory::{center_normalize, LandmarkFrame, LandmarkSequence};
pub use transition::{
    compose_transitions, expression_prototype, motions_for_recipe, select_by_prototype, split_at_peak,
    synth_peak_transition, transfer_motion, ExpressionLabel, ExpressionPrototype, LabelSet,
    LabeledMotion, LabeledSequence,
};
