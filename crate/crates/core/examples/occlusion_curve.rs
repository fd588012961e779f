//! Fraction of pixels already opaque after each tenth of the depth lists.

use gsraster::binning::{bin_and_sort, preprocess};
use gsraster::exec::occlusion_curve;
use gsraster::scenes;

fn main() -> anyhow::Result<()> {
    let sc = scenes::indoor_scene(300, 128, 0);
    let p = preprocess(&sc.gaussians, &sc.camera)?;
    let b = bin_and_sort(&p.splats, (16, 16), (128, 128));
    for (x, y) in occlusion_curve(&p.splats, &b, 10, 1e-4) {
        println!(
            "{:>4.0}% blended  {:>6.2}% occluded  {}",
            x * 100.0,
            y * 100.0,
            "#".repeat((y * 50.0) as usize)
        );
    }
    Ok(())
}
