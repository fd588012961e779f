use gsraster::approx::RecipMode;
use gsraster::backward::{backward_tile, scene_gradients, BackwardConfig, Loss, PixelGrad, TrainConfig, View};
use gsraster::binning::{bin_and_sort, preprocess};
use gsraster::gradcheck::{check_gradients, exact_config, GradCheckOptions};
use gsraster::model::ImageRGB;
use gsraster::raster::{alpha_of, render, RenderConfig, TileView};
use gsraster::scenes::{gradcheck_scene, SceneParams};

fn target_for(seed: u64, size: usize) -> ImageRGB<f64> {
    let s = gradcheck_scene(6, size, 0, seed ^ 0xabcdef);
    render(&s.gaussians, &s.camera, &RenderConfig::default()).unwrap().image
}

fn assert_passes(rep: &gsraster::gradcheck::GradCheckReport, what: &str) {
    if !rep.passed() {
        let rows: Vec<_> = rep.failures().collect();
        panic!("{what}: {} failing rows, first {:?}", rows.len(), rows[0]);
    }
}

#[test]
fn two_splat_scene_matches_finite_differences() {
    let mut s = gradcheck_scene(2, 8, 0, 11);
    // Put both splats over the same pixels so the back one is partly hidden.
    s.gaussians[1].mean = [
        s.gaussians[0].mean[0] * 2.0,
        s.gaussians[0].mean[1] * 2.0,
        s.gaussians[0].mean[2] * 2.0,
    ];
    let views = vec![View {
        camera: s.camera.clone(),
        target: ImageRGB::new(8, 8, [0.2, 0.4, 0.6]),
    }];
    let cfg = exact_config(&TrainConfig {
        loss: Loss::L2,
        ..Default::default()
    });
    let rep = check_gradients(&s.gaussians, &views, &cfg, &GradCheckOptions::default()).unwrap();
    assert_passes(&rep, "two splats");
}

#[test]
fn every_parameter_group_with_background() {
    for seed in 0..6 {
        let s = gradcheck_scene(6, 12, (seed % 4) as usize, 100 + seed);
        let views = vec![View {
            camera: s.camera.clone(),
            target: target_for(seed, 12),
        }];
        let cfg = exact_config(&TrainConfig {
            loss: Loss::L2,
            background: [0.3, 0.6, 0.9],
            ..Default::default()
        });
        let rep = check_gradients(&s.gaussians, &views, &cfg, &GradCheckOptions::default()).unwrap();
        assert_passes(&rep, &format!("seed {seed}"));
    }
}

#[test]
fn l1_away_from_the_kink() {
    // Rendered colours stay below 0.95, so every residual against white is negative.
    let s = gradcheck_scene(6, 12, 1, 7);
    let views = vec![View {
        camera: s.camera.clone(),
        target: ImageRGB::new(12, 12, [1.0; 3]),
    }];
    let cfg = exact_config(&TrainConfig {
        loss: Loss::L1,
        ..Default::default()
    });
    let rep = check_gradients(&s.gaussians, &views, &cfg, &GradCheckOptions::default()).unwrap();
    assert_passes(&rep, "l1");
}

#[test]
fn several_views_average() {
    let s = gradcheck_scene(5, 10, 2, 21);
    let mut cam2 = s.camera.clone();
    cam2.world_to_cam[0][3] = 0.15;
    let views = vec![
        View {
            camera: s.camera.clone(),
            target: target_for(1, 10),
        },
        View {
            camera: cam2,
            target: target_for(2, 10),
        },
    ];
    let cfg = exact_config(&TrainConfig {
        loss: Loss::L2,
        ..Default::default()
    });
    let rep = check_gradients(&s.gaussians, &views, &cfg, &GradCheckOptions::default()).unwrap();
    assert_passes(&rep, "two views");
}

#[test]
fn approximate_reciprocal_on_faint_scene() {
    let p = SceneParams {
        opacity: (0.05, 0.2),
        sigma_px: (0.8, 3.0),
        sh_degree: 0,
        margin: 0.0,
        ..SceneParams::new(6, 12, 12)
    };
    let s = gsraster::scenes::generate(&p, 3);
    let views = vec![View {
        camera: s.camera.clone(),
        target: target_for(3, 12),
    }];
    let cfg = TrainConfig {
        recip: RecipMode::Approx,
        ..exact_config(&TrainConfig {
            loss: Loss::L2,
            ..Default::default()
        })
    };
    let rep = check_gradients(&s.gaussians, &views, &cfg, &GradCheckOptions::default()).unwrap();
    assert_passes(&rep, "approx");
}

fn reconstruct_front(recip: RecipMode, opacity: (f64, f64)) -> f64 {
    let p = SceneParams {
        opacity,
        ..SceneParams::new(40, 32, 32)
    };
    let s = gsraster::scenes::generate(&p, 9);
    let proj = preprocess(&s.gaussians, &s.camera).unwrap();
    let binning = bin_and_sort(&proj.splats, (16, 16), (32, 32));
    let fwd = gsraster::raster::render_binned(
        &proj.splats,
        &binning,
        &RenderConfig {
            tile: (16, 16),
            ..Default::default()
        },
    );
    let mut worst = 0.0f64;
    for t in 0..binning.grid.tile_count() {
        let rect = binning.grid.rect(t);
        let list = &binning.lists[t];
        let pixels: Vec<_> = (0..rect.pixel_count())
            .map(|i| {
                let (x, y) = rect.pixel(i);
                let st = fwd.states[y * 32 + x];
                PixelGrad {
                    dl_dc: [1.0; 3],
                    t_final: st.transmittance,
                    suffix: [0.0; 3],
                    blend_end: st.blend_end(list.len()),
                }
            })
            .collect();
        let view = TileView::new(rect, &proj.splats, &binning.aabbs);
        let cfg = BackwardConfig {
            recip,
            ..Default::default()
        };
        let out = backward_tile(t, &view, list, &pixels, &cfg).unwrap();
        for (i, &tf) in out.front_transmittance.iter().enumerate() {
            // Terminated pixels lose information below the threshold.
            if fwd.states[{
                let (x, y) = rect.pixel(i);
                y * 32 + x
            }]
            .terminated
            {
                continue;
            }
            worst = worst.max((tf - 1.0).abs());
        }
    }
    worst
}

#[test]
fn transmittance_reconstruction_exact() {
    assert!(reconstruct_front(RecipMode::Exact, (0.1, 0.95)) < 1e-6);
}

#[test]
fn transmittance_reconstruction_approx_faint() {
    let e = reconstruct_front(RecipMode::Approx, (0.02, 0.2));
    assert!(e < 1e-3, "{e}");
}

#[test]
fn gradient_pixels_match_forward_contributions() {
    let s = gradcheck_scene(12, 16, 0, 5);
    let target = ImageRGB::new(16, 16, [0.0; 3]);
    let cfg = TrainConfig {
        loss: Loss::L2,
        tile: (8, 8),
        ..Default::default()
    };
    let rep = scene_gradients(
        &s.gaussians,
        &[View {
            camera: s.camera.clone(),
            target,
        }],
        &cfg,
    )
    .unwrap();

    // Oracle: replay the forward sweep per pixel and count contributions.
    let proj = preprocess(&s.gaussians, &s.camera).unwrap();
    let binning = bin_and_sort(&proj.splats, (8, 8), (16, 16));
    let mut hits = vec![0u32; s.gaussians.len()];
    for t in 0..binning.grid.tile_count() {
        let rect = binning.grid.rect(t);
        for i in 0..rect.pixel_count() {
            let (x, y) = rect.pixel(i);
            let mut tr = 1.0;
            for e in &binning.lists[t] {
                let Some(b) = binning.aabbs[e.index] else { continue };
                if !b.contains(x, y) {
                    continue;
                }
                let a = alpha_of(&proj.splats[e.index], x, y);
                if a == 0.0 {
                    continue;
                }
                hits[proj.gaussian_ids[e.index]] += 1;
                tr *= 1.0 - a;
                if tr < 1e-4 {
                    break;
                }
            }
        }
    }
    let got: Vec<u32> = (0..s.gaussians.len()).map(|i| rep.grads.hits(i)).collect();
    assert_eq!(got, hits);
}

#[test]
fn accumulators_are_identical_across_pool_sizes() {
    let s = gradcheck_scene(16, 16, 1, 77);
    let views = vec![View {
        camera: s.camera.clone(),
        target: target_for(4, 16),
    }];
    let cfg = TrainConfig {
        tile: (4, 4),
        ..Default::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| scene_gradients(&s.gaussians, &views, &cfg).unwrap())
    };
    let a = run(1);
    for n in [2, 8] {
        let b = run(n);
        assert_eq!(a.grads, b.grads);
        assert_eq!(a.counters, b.counters);
        assert_eq!(a.loss.to_bits(), b.loss.to_bits());
    }
}
