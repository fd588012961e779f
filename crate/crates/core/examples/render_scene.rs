//! Renders a synthetic scene and writes `render_scene.ppm` plus its counters.
//!
//!     cargo run --release --example render_scene [out.ppm]

use gsraster::raster::{render, RenderConfig};
use gsraster::scenes;

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "render_scene.ppm".into());
    let sc = scenes::random_scene(800, 256, 192, 1).cast::<f32>();
    let cfg = RenderConfig {
        tile: (16, 16),
        background: [0.05, 0.05, 0.1],
        ..Default::default()
    };
    let r = render(&sc.gaussians, &sc.camera, &cfg)?;
    gsraster::io::save_image(&r.image, &out)?;
    print!("{}", r.stats.to_kv());
    println!("wrote {out}");
    Ok(())
}
