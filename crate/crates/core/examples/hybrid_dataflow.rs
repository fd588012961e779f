//! Hands the tail of every tile list to the pixel-centric path, which skips
//! work for pixels that are already opaque.

use gsraster::exec::hybrid_savings;
use gsraster::raster::{render, Hybrid, RenderConfig};
use gsraster::scenes;

fn main() -> anyhow::Result<()> {
    let sc = scenes::opaque_foreground_scene(400, 128, 5).cast::<f32>();
    let base = RenderConfig {
        tile: (16, 16),
        ..Default::default()
    };
    let pure = render(&sc.gaussians, &sc.camera, &base)?;
    println!("gaussian-centric: {} alpha evaluations", pure.stats.evals.performed);
    for hybrid in [
        Hybrid::FixedFraction(0.1),
        Hybrid::FixedFraction(0.25),
        Hybrid::FixedFraction(0.5),
        Hybrid::OcclusionThreshold(0.9),
    ] {
        // The occlusion test runs at depth-chunk boundaries.
        let z_tiles = if matches!(hybrid, Hybrid::OcclusionThreshold(_)) {
            8
        } else {
            1
        };
        let h = render(
            &sc.gaussians,
            &sc.camera,
            &RenderConfig {
                hybrid,
                z_tiles,
                ..base.clone()
            },
        )?;
        let s = hybrid_savings(&pure.stats, &h.stats)?;
        println!(
            "{hybrid:?}: {} evaluations, saved {} ({:.1}%), max |diff| {:.1e}",
            s.hybrid_evals,
            s.saved,
            s.percent,
            pure.image.max_abs_diff(&h.image)
        );
    }
    Ok(())
}
