//! Margin boosting for adversarially robust ensembles.
//!
//! The exact side works on finite instances: datasets, perturbation grids,
//! finite hypothesis classes, the max-min margin game with its LP value, the
//! exponential-weights/best-response booster, and weak-learning
//! certificates. The neural side trains small score networks with the
//! margin cross-entropy loss, attacks them with FGSM/PGD, and boosts them
//! into uniform logit-averaging ensembles.

pub mod cli;
pub mod datasets;
pub mod domain;
pub mod error;
pub mod game;
pub mod losses;
pub mod margin;
pub mod nn;
pub mod robust;
pub mod weaklearn;

pub use domain::{
    argmax_classify, build_augmented_space, ensemble_score, AugEntry, AugmentedSpace, Dataset, EnsembleWeights,
    HypothesisClass, IntervalHypothesis, PerturbationKind, PerturbationModel, PredictionTable, Stump,
};
pub use error::{Error, Result};
pub use game::{mrboost_run, MrBoostConfig, MrBoostRun, PayoffMatrix};
pub use losses::LossKind;
pub use margin::{margin_report, min_robust_margin, robust_accuracy, MarginReport};
pub use nn::{mrboost_nn_run, MlpParams, NnBoostConfig, ScoreEnsemble, SgdConfig};
pub use weaklearn::{wl_mrboost_value, wl_robboost_value, WlCertificate};
