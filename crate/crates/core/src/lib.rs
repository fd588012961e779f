//! Tile-based 3D Gaussian splatting: projection and tile binning, forward
//! alpha blending with depth-partitioned (z-tiled) compositing and a hybrid
//! Gaussian/pixel-centric dataflow, an analytic backward pass with a
//! multiplier-only reciprocal, Adam with density control, and the workload
//! models used to size tiles and pixel-buffer banks.
//!
//! Runnable entry points live in `examples/`:
//!
//! | example             | shows                                              |
//! |---------------------|----------------------------------------------------|
//! | `render_scene`      | rendering a scene to PPM with frame counters       |
//! | `z_tiling`          | chunked compositing against the global sweep       |
//! | `hybrid_dataflow`   | alpha evaluations saved by the pixel-centric tail  |
//! | `train_toy`         | fitting ten Gaussians with approximate and exact reciprocals |
//! | `gradient_check`    | analytic gradients against central differences     |
//! | `reciprocal_approx` | error profile of the approximate `1 / (1 - alpha)` |
//! | `tile_sweep`        | invocations per tile size                          |
//! | `occlusion_curve`   | occluded pixels against blending progress          |
//! | `bank_conflicts`    | skewed against plain bank mapping                  |
//! | `ply_roundtrip`     | scene and camera file formats                      |
//!
//! ```
//! use gsraster::raster::{render, RenderConfig};
//!
//! let sc = gsraster::scenes::random_scene(50, 32, 32, 0);
//! let out = render(&sc.gaussians, &sc.camera, &RenderConfig::default()).unwrap();
//! assert_eq!(out.image.data.len(), 32 * 32);
//! ```

pub mod approx;
pub mod backward;
pub mod binning;
pub mod cli;
pub mod error;
pub mod exec;
pub mod gradcheck;
pub mod io;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod raster;
pub mod real;
pub mod scenes;
pub mod selftest;

pub use error::{Error, Result};
pub use real::Real;
