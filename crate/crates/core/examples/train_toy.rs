//! Fits ten Gaussians to an 8x8 render of another ten.

use gsraster::approx::RecipMode;
use gsraster::backward::{scene_loss, train_step, TrainConfig, TrainState, View};
use gsraster::raster::{render, RenderConfig};
use gsraster::scenes;

fn main() -> anyhow::Result<()> {
    let (gt, init) = scenes::toy_training_pair(10, 8, 0);
    let target = render(&gt.gaussians, &gt.camera, &RenderConfig::default())?.image;
    let views = [View {
        camera: gt.camera.clone(),
        target,
    }];
    for recip in [RecipMode::Approx, RecipMode::Exact] {
        let cfg = TrainConfig {
            recip,
            ..Default::default()
        };
        let mut scene = init.gaussians.clone();
        let mut state = TrainState::new(&scene, cfg.adam);
        let start = scene_loss(&scene, &views, &cfg)?;
        for i in 0..200 {
            let st = train_step(&mut scene, &views, &cfg, &mut state)?;
            if i % 50 == 0 {
                println!("{recip:?} step {:>3}: loss {:.5}", st.step, st.loss);
            }
        }
        let end = scene_loss(&scene, &views, &cfg)?;
        println!(
            "{recip:?}: {start:.5} -> {end:.5} ({:.1}% lower)\n",
            100.0 * (1.0 - end / start)
        );
    }
    Ok(())
}
