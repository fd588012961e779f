//! Gaussian invocations against tile size on a large-splat scene and a
//! small-splat scene.

use gsraster::binning::preprocess;
use gsraster::exec::tile_sweep;
use gsraster::scenes;

fn main() -> anyhow::Result<()> {
    let sizes = [8, 16, 32, 64, 128];
    for (name, sc) in [
        ("outdoor", scenes::outdoor_scene(1000, 512, 0)),
        ("small splats", scenes::small_splat_scene(1000, 512, 0)),
    ] {
        let p = preprocess(&sc.gaussians, &sc.camera)?;
        println!("{name}:");
        for r in tile_sweep(&p.splats, &sizes, (512, 512)) {
            println!(
                "  {:>4}px {:>9} invocations {:>6.1}% fewer than 8px",
                r.tile, r.invocations, r.reduction
            );
        }
    }
    Ok(())
}
