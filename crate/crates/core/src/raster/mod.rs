//! Forward alpha blending: the Gaussian-centric sweep, depth-partitioned
//! (z-tiled) compositing with an ordered merge, and the pixel-centric tail.

mod blend;
mod render;

pub use blend::{
    alpha_of, blend_gaussian_centric, blend_pixel_centric, blend_tile_global, blend_ztile, merge_ztiles,
    merge_ztiles_into, partition_equal, EvalCounters, PixelState, TileView, ZTilePartial,
};
pub use render::{
    render, render_binned, Hybrid, RenderConfig, RenderOutput, RenderStats, DEFAULT_HYBRID_FRACTION,
    DEFAULT_OCCLUSION_THRESHOLD, DEFAULT_TERMINATION,
};
