//! Depth-partitioned compositing: each tile list is split into K chunks that
//! blend independently and are merged front to back.

use gsraster::raster::{render, RenderConfig};
use gsraster::scenes;

fn main() -> anyhow::Result<()> {
    let sc = scenes::random_scene(400, 128, 128, 3);
    let base = RenderConfig {
        tile: (16, 16),
        termination: 0.0,
        ..Default::default()
    };
    let global = render(&sc.gaussians, &sc.camera, &base)?;
    println!("{:>3} {:>14} {:>12}", "K", "max |diff|", "evaluations");
    for k in [1, 2, 4, 8] {
        let z = render(
            &sc.gaussians,
            &sc.camera,
            &RenderConfig {
                z_tiles: k,
                ..base.clone()
            },
        )?;
        println!(
            "{k:>3} {:>14.3e} {:>12}",
            global.image.max_abs_diff(&z.image),
            z.stats.evals.performed
        );
    }

    // With early termination the merge stops at chunk boundaries, so the
    // difference is bounded by the threshold instead of rounding.
    let eps = RenderConfig::default().termination;
    let cut = RenderConfig {
        termination: eps,
        ..base
    };
    let g = render(&sc.gaussians, &sc.camera, &cut)?;
    let z = render(&sc.gaussians, &sc.camera, &RenderConfig { z_tiles: 4, ..cut })?;
    println!(
        "termination {eps:e}: K=4 differs by {:.3e}",
        g.image.max_abs_diff(&z.image)
    );
    Ok(())
}
