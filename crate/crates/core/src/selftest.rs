//! Fast invariant suite behind the `selftest` command.

use crate::approx::{recip_one_minus, RecipMode};
use crate::backward::{Loss, TrainConfig, View};
use crate::exec::{bank_conflicts, tile_sweep};
use crate::gradcheck::{check_gradients, exact_config, GradCheckOptions};
use crate::io::{decode_scene, encode_ppm, encode_scene};
use crate::model::{Gaussian3D, ImageRGB};
use crate::raster::{render, Hybrid, RenderConfig};
use crate::scenes::{gradcheck_scene, opaque_foreground_scene, random_scene, small_splat_scene};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> crate::Result<(bool, String)>) -> Check {
    match f() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn max_rel(a: &ImageRGB<f64>, b: &ImageRGB<f64>) -> f64 {
    a.data
        .iter()
        .flatten()
        .zip(b.data.iter().flatten())
        .map(|(x, y)| {
            let s = x.abs().max(y.abs());
            if s > 0.0 {
                (x - y).abs() / s
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

pub fn run(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();

    out.push(check("z-tiling matches the global sweep", || {
        let mut worst = 0.0f64;
        for s in 0..4 {
            let sc = random_scene(150, 64, 64, seed.wrapping_add(s));
            let base = RenderConfig {
                tile: (16, 16),
                termination: 0.0,
                ..Default::default()
            };
            let global = render(&sc.gaussians, &sc.camera, &base)?.image;
            for k in [2, 3, 4, 8] {
                let z = render(
                    &sc.gaussians,
                    &sc.camera,
                    &RenderConfig {
                        z_tiles: k,
                        ..base.clone()
                    },
                )?
                .image;
                worst = worst.max(max_rel(&global, &z));
            }
        }
        Ok((worst <= 1e-12, format!("max relative difference {worst:.2e}")))
    }));

    out.push(check("hybrid dataflow matches Gaussian-centric", || {
        let mut worst = 0.0f64;
        let mut saved = 0i64;
        for s in 0..3 {
            let sc = opaque_foreground_scene(120, 64, seed.wrapping_add(s));
            let base = RenderConfig {
                tile: (16, 16),
                ..Default::default()
            };
            let pure = render(&sc.gaussians, &sc.camera, &base)?;
            for f in [0.1, 0.25, 0.5] {
                let h = render(
                    &sc.gaussians,
                    &sc.camera,
                    &RenderConfig {
                        hybrid: Hybrid::FixedFraction(f),
                        ..base.clone()
                    },
                )?;
                worst = worst.max(pure.image.max_abs_diff(&h.image));
                saved += crate::exec::hybrid_savings(&pure.stats, &h.stats)?.saved;
            }
        }
        Ok((
            worst <= 1e-6 && saved > 0,
            format!("max difference {worst:.2e}, evaluations saved {saved}"),
        ))
    }));

    out.push(check("reciprocal error and monotonicity", || {
        let (mut worst, mut prev, mut mono) = (0.0f64, 0.0f64, true);
        for i in 0..=9900 {
            let a = i as f64 / 10_000.0;
            let r = recip_one_minus(a, RecipMode::Approx)?;
            worst = worst.max((r * (1.0 - a) - 1.0).abs());
            mono &= r >= prev;
            prev = r;
        }
        Ok((
            worst <= 0.032 && mono,
            format!("max relative error {:.3}%, monotone {mono}", worst * 100.0),
        ))
    }));

    out.push(check("analytic gradients match finite differences", || {
        let mut fails = 0;
        let mut rows = 0;
        for s in 0..2 {
            let sc = gradcheck_scene(6, 12, 1 + s as usize, seed.wrapping_add(s));
            let tgt = ImageRGB::new(12, 12, [0.4, 0.5, 0.6]);
            let views = [View {
                camera: sc.camera.clone(),
                target: tgt,
            }];
            let cfg = exact_config(&TrainConfig {
                loss: Loss::L2,
                background: [0.2, 0.1, 0.3],
                ..Default::default()
            });
            let rep = check_gradients(&sc.gaussians, &views, &cfg, &GradCheckOptions::default())?;
            fails += rep.failures().count();
            rows += rep.rows.len();
        }
        Ok((fails == 0, format!("{fails} of {rows} parameters outside tolerance")))
    }));

    out.push(check("tile sweep is monotone", || {
        let mut ok = true;
        for s in 0..3 {
            for sc in [
                random_scene(200, 128, 128, seed + s),
                small_splat_scene(200, 128, seed + s),
            ] {
                let p = crate::binning::preprocess(&sc.gaussians, &sc.camera)?;
                let rows = tile_sweep(&p.splats, &[8, 16, 32, 64, 128], (128, 128));
                ok &= rows.windows(2).all(|w| w[1].invocations <= w[0].invocations);
            }
        }
        Ok((ok, String::new()))
    }));

    out.push(check("banked layout examples", || {
        let col: Vec<_> = (0..16).map(|y| (5, y)).collect();
        let r = bank_conflicts(&col, 16);
        Ok((
            r.skewed == 0 && r.unskewed == 15,
            format!("skewed {} unskewed {}", r.skewed, r.unskewed),
        ))
    }));

    out.push(check("PLY round trip and PPM bytes", || {
        let sc: Vec<Gaussian3D<f32>> = random_scene(50, 32, 32, seed)
            .gaussians
            .iter()
            .map(|g| g.cast())
            .collect();
        let back = decode_scene(&encode_scene(&sc)?)?;
        let same = back.len() == sc.len()
            && back.iter().zip(&sc).all(|(a, b)| {
                a.params()
                    .iter()
                    .zip(b.params())
                    .all(|(x, y)| x.to_bits() == y.to_bits())
            });
        let ppm = encode_ppm(&ImageRGB::new(1, 1, [1.0f64, 0.0, 0.0]));
        Ok((same && ppm == b"P6\n1 1\n255\n\xff\x00\x00", String::new()))
    }));

    out.push(check("renders are identical across pool sizes", || {
        let sc = random_scene(300, 96, 96, seed);
        let cfg = RenderConfig {
            tile: (16, 16),
            z_tiles: 3,
            ..Default::default()
        };
        let go = |n| -> crate::Result<_> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::Error::Config(e.to_string()))?;
            pool.install(|| render(&sc.gaussians, &sc.camera, &cfg))
        };
        let (a, b) = (go(1)?, go(4)?);
        Ok((a.image == b.image && a.stats == b.stats, String::new()))
    }));
    out
}
