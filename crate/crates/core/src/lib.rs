//! Edge identification for undirected Gaussian graphical models.
//!
//! Each pair of variables is tested for conditional independence given the
//! rest through its sample partial correlation. The raw p-values are then
//! passed through one of five procedures ([`ProcedureKind`]) and thresholded
//! into an inferred graph. The [`experiment`] module measures how those
//! procedures behave over many simulated datasets drawn from a known model.
//!
//! ```
//! use ggm_core::{generate_model, sample_mvn, raw_pvalues, DfRule, EdgeSpec, GeneratorSpec, ProcedureKind};
//!
//! let model = generate_model(&GeneratorSpec {
//!     p: 7,
//!     edge_spec: EdgeSpec::Count(9),
//!     rho_min: 0.2,
//!     rho_max: 0.55,
//!     seed: 1,
//!     random_sign: false,
//! })?;
//! let data = sample_mvn(&model.covariance, 200, 42)?;
//! let raw = raw_pvalues(&data, DfRule::NMinusP)?;
//! let inferred = ggm_core::decide(&ProcedureKind::HolmSidak.apply(&raw), 0.05);
//! let counts = ggm_core::confusion(&model.edges, &inferred);
//! assert_eq!(counts.total(), 21);
//! # Ok::<(), ggm_core::Error>(())
//! ```

pub mod adjust;
pub mod edges;
mod error;
pub mod experiment;
pub mod format;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod stats;

pub use adjust::{
    adjust_bonferroni, adjust_holm_bonferroni, adjust_holm_sidak, adjust_identity, adjust_sidak, decide, reject_below,
    AdjustedPValues, ProcedureKind,
};
pub use edges::{pair_count, pair_index, pairs, Edge, EdgePValues, EdgeSet};
pub use error::{Error, Result};
pub use experiment::{
    run_experiment, ExperimentConfig, ExperimentReport, ModelSource, RiskMode, SummaryRow, TrialPlan, TrialResult,
};
pub use metrics::{auc, confusion, fdr, fwer, risk, roc_curve, ConfusionCounts, RiskValue, RocCurve};
pub use model::{
    covariance_from_concentration, draw_concentration, generate_model, repair_positive_definite, sample_mvn, EdgeSpec,
    GeneratorSpec, ModelFile, TrueModel,
};
pub use stats::{
    concentration_from_covariance, edge_pvalues, edges_from_concentration, partial_correlations, raw_pvalues,
    sample_covariance, sample_mean, student_t_two_sided, ConcentrationMatrix, CovarianceMatrix, DfRule,
    ObservationMatrix, PartialCorrelationMatrix,
};
