//! Analytic gradients against central differences, one row per parameter.

use gsraster::backward::{Loss, TrainConfig, View};
use gsraster::gradcheck::{check_gradients, exact_config, GradCheckOptions};
use gsraster::raster::{render, RenderConfig};
use gsraster::scenes;

fn main() -> anyhow::Result<()> {
    let sc = scenes::gradcheck_scene(2, 12, 1, 4);
    let target = render(
        &scenes::gradcheck_scene(2, 12, 1, 5).gaussians,
        &sc.camera,
        &RenderConfig::default(),
    )?
    .image;
    let cfg = exact_config(&TrainConfig {
        loss: Loss::L2,
        background: [0.2, 0.3, 0.4],
        ..Default::default()
    });
    let rep = check_gradients(
        &sc.gaussians,
        &[View {
            camera: sc.camera.clone(),
            target,
        }],
        &cfg,
        &GradCheckOptions::default(),
    )?;
    print!("{}", rep.table());
    println!("loss {:.6e}, {} failures", rep.loss, rep.failures().count());
    Ok(())
}
