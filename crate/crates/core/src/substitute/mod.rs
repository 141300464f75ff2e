//! Model-substitution attack: a small feed-forward substitute classifier
//! with an explicit latent split, PGD against it, transfer evaluation, and
//! the robustness/reliability trade-off experiment on its latent space.

mod checkpoint;
mod features;
mod latent;
mod mlp;
mod pgd;
mod robust;
mod tradeoff;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use features::FeatureSpec;
pub use latent::{latent_perturbation_search, LatentSearchConfig, LatentSearchResult, LATENT_TOLERANCE};
pub use mlp::{cross_entropy, softmax, Gradients, Layer, Mlp, Trace};
pub use pgd::{pgd_attack, pgd_attack_batch, transfer_eval, uniform_noise_attack, PgdConfig};
pub use robust::{robustness_alpha, AlphaEstimate, ConsistencyCell, LatentHead, LatentSample};
pub use tradeoff::{
    bisect_sigma, spearman, synthetic_tradeoff_data, synthetic_tradeoff_data_with, tradeoff_experiment, LabeledSet, TradeoffConfig,
    tradeoff_features, TradeoffRow, TradeoffSummary, TradeoffTable,
};
pub use train::{
    accuracy, fit_layers, split_indices, train_classifier, train_on_features, SubstituteClassifier, TrainConfig,
    TrainLog, CLEAN, MIN_PER_CLASS, WATERMARKED,
};
