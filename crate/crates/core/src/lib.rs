//! Variational quantum classifiers with re-mapped rotation weights.
//!
//! A statevector simulator, angle and amplitude embeddings, the layered
//! RZ-RY-RZ/CNOT ansatz, parameter-shift gradients through a weight
//! re-mapping function, a parameter-matched MLP baseline, UCI loaders,
//! convergence metrics, one-way ANOVA and the experiment runner.

pub mod circuit;
pub mod data;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod plot;
pub mod remap;
pub mod report;
pub mod runner;
pub mod seeding;
pub mod statevector;
pub mod training;

pub use data::{load_named, schema, Dataset, DatasetSchema, SplitData, SCHEMAS};
pub use embedding::{EmbeddingKind, EmbeddingSpec};
pub use error::{Error, Result};
pub use metrics::{anova_oneway, point_of_convergence, AnovaResult, PocAnchor, PocResult};
pub use mlp::MlpModel;
pub use model::VqcModel;
pub use remap::RemapFunction;
pub use runner::{run, sweep, Approach, RunConfig, SweepConfig};
pub use statevector::{Gate, RotationAxis, StateVector};
pub use training::{train, ModelKind, RunKey, TrainRecord, TrainingConfig};
