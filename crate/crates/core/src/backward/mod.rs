//! Training backward pass: loss, back-to-front per-tile colour and opacity
//! gradients, the chain rule to world-space parameters, and deterministic
//! cross-tile accumulation.

mod accum;
mod chain;
mod loss;
mod tile;
mod train;

pub use accum::{accumulate_cross_tile, AccumStats, GradAccumulator};
pub use chain::{chain_to_3d, GaussianGrad};
pub use loss::{loss_and_pixel_grads, Loss};
pub use tile::{backward_tile, BackwardConfig, PixelGrad, SplatGrad, TilePartial, DEFAULT_OFFLOAD_BATCH};
pub use train::{
    scene_gradients, scene_loss, train_step, GradientReport, StageTimings, TrainConfig, TrainCounters, TrainState,
    TrainStats, View,
};
