use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::approx::RecipMode;
use crate::binning::{bin_and_sort_with, preprocess, Footprint, ALPHA_MIN};
use crate::error::{Error, Result};
use crate::model::{Camera, Gaussian3D, ImageRGB};
use crate::optim::{adam_step, density_control, AdamConfig, AdamState, DensifyOptions, DensifyReport, DensifyStats};
use crate::raster::{render_binned, EvalCounters, Hybrid, RenderConfig, TileView};
use crate::real::Real;

use super::accum::{accumulate_cross_tile, AccumStats, GradAccumulator};
use super::chain::chain_to_3d;
use super::loss::{loss_and_pixel_grads, Loss};
use super::tile::{backward_tile, BackwardConfig, PixelGrad, TilePartial, DEFAULT_OFFLOAD_BATCH};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Tile `(width, height)`; affects counters only.
    pub tile: (usize, usize),
    pub loss: Loss,
    pub background: [f64; 3],
    pub offload_batch: usize,
    pub recip: RecipMode,
    pub termination: f64,
    pub footprint: Footprint,
    pub alpha_min: f64,
    pub adam: AdamConfig,
    /// Run density control every this many steps; 0 disables it.
    pub densify_every: u64,
    pub densify: DensifyOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            tile: (32, 64),
            loss: Loss::L1,
            background: [0.0; 3],
            offload_batch: DEFAULT_OFFLOAD_BATCH,
            recip: RecipMode::Approx,
            termination: crate::raster::DEFAULT_TERMINATION,
            footprint: Footprint::Sigma3,
            alpha_min: ALPHA_MIN,
            adam: AdamConfig::default(),
            densify_every: 0,
            densify: DensifyOptions::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tile.0 == 0 || self.tile.1 == 0 {
            return Err(Error::Config("tile dimensions must be positive".into()));
        }
        if self.offload_batch == 0 {
            return Err(Error::Config("offload batch must be at least 1".into()));
        }
        self.render_config().validate()
    }

    fn render_config(&self) -> RenderConfig {
        RenderConfig {
            tile: self.tile,
            z_tiles: 1,
            termination: self.termination,
            hybrid: Hybrid::Off,
            background: self.background,
            footprint: self.footprint,
            alpha_min: self.alpha_min,
        }
    }

    fn backward_config(&self) -> BackwardConfig {
        BackwardConfig {
            recip: self.recip,
            background: self.background,
            offload_batch: self.offload_batch,
        }
    }
}

/// A camera paired with the image it should reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct View<T> {
    pub camera: Camera<T>,
    pub target: ImageRGB<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainCounters {
    pub views: u64,
    pub visible: u64,
    pub invocations: u64,
    pub forward: EvalCounters,
    pub backward: AccumStats,
    /// Splats chained back to world space.
    pub chained: u64,
}

/// Wall-clock time per stage. Not deterministic; kept apart from counters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub preprocess: Duration,
    pub forward: Duration,
    pub loss: Duration,
    pub backward: Duration,
    pub accumulate: Duration,
    pub chain: Duration,
    pub optimizer: Duration,
}

impl StageTimings {
    pub fn add(&mut self, o: &StageTimings) {
        self.preprocess += o.preprocess;
        self.forward += o.forward;
        self.loss += o.loss;
        self.backward += o.backward;
        self.accumulate += o.accumulate;
        self.chain += o.chain;
        self.optimizer += o.optimizer;
    }

    pub fn to_kv(&self) -> String {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        format!(
            "time_preprocess_ms = {:.3}\ntime_forward_ms = {:.3}\ntime_loss_ms = {:.3}\ntime_backward_ms = {:.3}\n\
             time_accumulate_ms = {:.3}\ntime_chain_ms = {:.3}\ntime_optimizer_ms = {:.3}\n",
            ms(self.preprocess),
            ms(self.forward),
            ms(self.loss),
            ms(self.backward),
            ms(self.accumulate),
            ms(self.chain),
            ms(self.optimizer)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport<T> {
    /// Mean loss over the views.
    pub loss: T,
    pub grads: GradAccumulator<T>,
    pub densify: DensifyStats,
    pub counters: TrainCounters,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    pub step: u64,
    pub loss: f64,
    pub gaussians: usize,
    pub counters: TrainCounters,
    pub densify: Option<DensifyReport>,
    pub timings: StageTimings,
}

impl TrainStats {
    /// Deterministic key-value summary (timings excluded).
    pub fn to_kv(&self) -> String {
        let c = &self.counters;
        let mut s = format!(
            "step = {}\nloss = {:.9e}\ngaussians = {}\nviews = {}\nvisible = {}\ninvocations = {}\n\
             alpha_candidates = {}\nalpha_performed = {}\nalpha_skipped = {}\ncontributions = {}\n\
             backward_tiles = {}\ndrain_events = {}\ngrad_accum_ops = {}\ncross_tile_folds = {}\n\
             transmittance_clamps = {}\nchained_splats = {}\n",
            self.step,
            self.loss,
            self.gaussians,
            c.views,
            c.visible,
            c.invocations,
            c.forward.candidates,
            c.forward.performed,
            c.forward.skipped,
            c.forward.contributions,
            c.backward.tiles,
            c.backward.drains,
            c.backward.accum_ops,
            c.backward.fold_ops,
            c.backward.clamped,
            c.chained
        );
        if let Some(d) = &self.densify {
            s.push_str(&d.to_kv());
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<T> {
    pub adam: AdamState<T>,
    pub densify: DensifyStats,
    pub step: u64,
}

impl<T: Real> TrainState<T> {
    pub fn new(scene: &[Gaussian3D<T>], adam: AdamConfig) -> Self {
        Self {
            adam: AdamState::new(scene, adam),
            densify: DensifyStats::new(scene.len()),
            step: 0,
        }
    }
}

fn check_view<T: Real>(v: &View<T>) -> Result<()> {
    if v.camera.width != v.target.width || v.camera.height != v.target.height {
        return Err(Error::DimensionMismatch(format!(
            "camera {}x{} vs target {}x{}",
            v.camera.width, v.camera.height, v.target.width, v.target.height
        )));
    }
    Ok(())
}

/// Mean loss over `views` from the forward pass alone.
pub fn scene_loss<T: Real>(scene: &[Gaussian3D<T>], views: &[View<T>], cfg: &TrainConfig) -> Result<T> {
    let rcfg = cfg.render_config();
    let mut total = T::zero();
    for v in views {
        check_view(v)?;
        let out = crate::raster::render(scene, &v.camera, &rcfg)?;
        total = total + loss_and_pixel_grads(&out.image, &v.target, cfg.loss)?.0;
    }
    Ok(total / T::lit(views.len().max(1) as f64))
}

/// Loss and gradients of every raw parameter, averaged over `views`.
pub fn scene_gradients<T: Real>(
    scene: &[Gaussian3D<T>],
    views: &[View<T>],
    cfg: &TrainConfig,
) -> Result<GradientReport<T>> {
    cfg.validate()?;
    let rcfg = cfg.render_config();
    let bcfg = cfg.backward_config();
    let inv_views = T::one() / T::lit(views.len().max(1) as f64);
    let mut acc = GradAccumulator::new(scene.iter().map(|g| g.sh.len()));
    let mut densify = DensifyStats::new(scene.len());
    let mut counters = TrainCounters::default();
    let mut timings = StageTimings::default();
    let mut loss_sum = T::zero();

    for v in views {
        check_view(v)?;
        let cam = &v.camera;
        let image = (cam.width, cam.height);

        let t0 = Instant::now();
        let proj = preprocess(scene, cam)?;
        let binning = bin_and_sort_with(&proj.splats, rcfg.tile, image, rcfg.footprint);
        let t1 = Instant::now();
        let fwd = render_binned(&proj.splats, &binning, &rcfg);
        let t2 = Instant::now();
        let (loss, mut dl_dc) = loss_and_pixel_grads(&fwd.image, &v.target, cfg.loss)?;
        for g in dl_dc.iter_mut() {
            *g = g.map(|e| e * inv_views);
        }
        loss_sum = loss_sum + loss;
        let t3 = Instant::now();

        let grid = binning.grid;
        let partials: Vec<TilePartial<T>> = (0..grid.tile_count())
            .into_par_iter()
            .map(|t| {
                let rect = grid.rect(t);
                let list = &binning.lists[t];
                let pixels: Vec<PixelGrad<T>> = (0..rect.pixel_count())
                    .map(|i| {
                        let (x, y) = rect.pixel(i);
                        let p = y * grid.width + x;
                        let st = &fwd.states[p];
                        PixelGrad {
                            dl_dc: dl_dc[p],
                            t_final: st.transmittance,
                            suffix: [T::zero(); 3],
                            blend_end: st.blend_end(list.len()),
                        }
                    })
                    .collect();
                let view = TileView::new(rect, &proj.splats, &binning.aabbs).with_alpha_min(T::lit(cfg.alpha_min));
                backward_tile(t, &view, list, &pixels, &bcfg)
            })
            .collect::<Result<_>>()?;
        let t4 = Instant::now();
        let (screen, astats) = accumulate_cross_tile(&partials, proj.splats.len());
        let t5 = Instant::now();
        let chained: Vec<_> = screen
            .par_iter()
            .zip(&proj.gaussian_ids)
            .map(|(sg, &id)| chain_to_3d(sg, &scene[id], cam))
            .collect::<Result<_>>()?;
        for (k, (&id, g)) in proj.gaussian_ids.iter().zip(&chained).enumerate() {
            acc.params[id].add(g);
            acc.screen[id].add(&screen[k]);
            if screen[k].hits > 0 {
                let s = &proj.splats[k];
                let radius = 3.0 * s.max_eigenvalue().as_f64().sqrt();
                densify.observe(id, screen[k].mean2.map(|e| e.as_f64()), radius);
            }
        }
        let t6 = Instant::now();

        counters.views += 1;
        counters.visible += proj.splats.len() as u64;
        counters.invocations += binning.invocations() as u64;
        counters.forward.add(&fwd.stats.evals);
        counters.backward.add(&astats);
        counters.chained += proj.splats.len() as u64;
        timings.add(&StageTimings {
            preprocess: t1 - t0,
            forward: t2 - t1,
            loss: t3 - t2,
            backward: t4 - t3,
            accumulate: t5 - t4,
            chain: t6 - t5,
            optimizer: Duration::ZERO,
        });
    }
    Ok(GradientReport {
        loss: loss_sum * inv_views,
        grads: acc,
        densify,
        counters,
        timings,
    })
}

/// Forward, loss, backward, accumulation and one Adam update; runs density
/// control when the step count reaches a multiple of `densify_every`.
pub fn train_step<T: Real>(
    scene: &mut Vec<Gaussian3D<T>>,
    views: &[View<T>],
    cfg: &TrainConfig,
    state: &mut TrainState<T>,
) -> Result<TrainStats> {
    let mut rep = scene_gradients(scene, views, cfg)?;
    let t0 = Instant::now();
    adam_step(scene, &rep.grads.params, &mut state.adam)?;
    state.step += 1;
    if state.densify.len() != scene.len() {
        state.densify = DensifyStats::new(scene.len());
    }
    for i in 0..scene.len() {
        state.densify.grad_sum[i] += rep.densify.grad_sum[i];
        state.densify.count[i] += rep.densify.count[i];
        state.densify.max_radius[i] = state.densify.max_radius[i].max(rep.densify.max_radius[i]);
    }
    let mut densify = None;
    if cfg.densify_every > 0 && state.step % cfg.densify_every == 0 {
        let opts = DensifyOptions {
            seed: cfg.densify.seed.wrapping_add(state.step),
            ..cfg.densify
        };
        let (next, report) = density_control(scene, &state.densify, &opts);
        *scene = next;
        state.adam.remap(scene, &report.origins);
        state.densify = DensifyStats::new(scene.len());
        densify = Some(report);
    }
    rep.timings.optimizer = t0.elapsed();
    Ok(TrainStats {
        step: state.step,
        loss: rep.loss.as_f64(),
        gaussians: scene.len(),
        counters: rep.counters,
        densify,
        timings: rep.timings,
    })
}
