use std::fmt::Write as _;

use rayon::prelude::*;

use crate::binning::{bin_and_sort_with, preprocess, Footprint, Splat2D, TileBinning, TileEntry, ALPHA_MIN};
use crate::error::Result;
use crate::model::{Camera, Gaussian3D, ImageRGB};
use crate::real::Real;

use super::blend::{
    blend_gaussian_centric, blend_pixel_centric, blend_ztile, merge_ztiles_into, partition_equal, EvalCounters,
    PixelState, TileView,
};

pub const DEFAULT_TERMINATION: f64 = 1e-4;
pub const DEFAULT_HYBRID_FRACTION: f64 = 0.25;
pub const DEFAULT_OCCLUSION_THRESHOLD: f64 = 0.9;

/// When to hand the tail of a tile's list to the pixel-centric path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Hybrid {
    #[default]
    Off,
    /// The trailing fraction `f` of every tile list.
    FixedFraction(f64),
    /// Everything after the first depth chunk at which the fraction of
    /// terminated tile pixels reaches `theta`.
    OcclusionThreshold(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub tile: (usize, usize),
    /// Number of depth chunks (z-tiles) per tile list.
    pub z_tiles: usize,
    pub termination: f64,
    pub hybrid: Hybrid,
    pub background: [f64; 3],
    pub footprint: Footprint,
    /// Alphas below this are treated as zero.
    pub alpha_min: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            tile: (64, 64),
            z_tiles: 1,
            termination: DEFAULT_TERMINATION,
            hybrid: Hybrid::Off,
            background: [0.0; 3],
            footprint: Footprint::Sigma3,
            alpha_min: ALPHA_MIN,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        if self.tile.0 == 0 || self.tile.1 == 0 {
            return Err(Error::Config("tile size must be positive".into()));
        }
        if self.z_tiles == 0 {
            return Err(Error::Config("z_tiles must be at least 1".into()));
        }
        match self.hybrid {
            Hybrid::FixedFraction(f) | Hybrid::OcclusionThreshold(f) if !(f > 0.0 && f < 1.0) => {
                Err(Error::Config(format!("hybrid parameter {f} must lie in (0, 1)")))
            }
            _ if !(self.termination >= 0.0 && self.termination < 1.0) => {
                Err(Error::Config("termination must lie in [0, 1)".into()))
            }
            _ if !(self.alpha_min >= 0.0 && self.alpha_min < 0.99) => {
                Err(Error::Config("alpha_min must lie in [0, 0.99)".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Counters from one frame. Everything here is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RenderStats {
    pub width: usize,
    pub height: usize,
    pub tile: (usize, usize),
    pub grid: (usize, usize),
    pub z_tiles: usize,
    pub visible: usize,
    pub culled_near: usize,
    pub culled_degenerate: usize,
    pub multi_tile_splats: usize,
    pub list_lengths: Vec<usize>,
    /// Sum of list lengths: one per (Gaussian, tile) pairing.
    pub invocations: usize,
    pub evals: EvalCounters,
    /// List entries handed to the pixel-centric path.
    pub pixel_centric_entries: usize,
    /// Candidate evaluations inside the pixel-centric portion.
    pub pixel_centric_candidates: u64,
}

impl RenderStats {
    /// Stable `key = value` text, one entry per line.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "height = {}", self.height);
        let _ = writeln!(s, "tile = {}x{}", self.tile.0, self.tile.1);
        let _ = writeln!(s, "grid = {}x{}", self.grid.0, self.grid.1);
        let _ = writeln!(s, "z_tiles = {}", self.z_tiles);
        let _ = writeln!(s, "visible = {}", self.visible);
        let _ = writeln!(s, "culled_near = {}", self.culled_near);
        let _ = writeln!(s, "culled_degenerate = {}", self.culled_degenerate);
        let _ = writeln!(s, "multi_tile_splats = {}", self.multi_tile_splats);
        let _ = writeln!(s, "invocations = {}", self.invocations);
        let _ = writeln!(s, "evals_candidates = {}", self.evals.candidates);
        let _ = writeln!(s, "evals_performed = {}", self.evals.performed);
        let _ = writeln!(s, "evals_skipped = {}", self.evals.skipped);
        let _ = writeln!(s, "contributions = {}", self.evals.contributions);
        let _ = writeln!(s, "pixel_centric_entries = {}", self.pixel_centric_entries);
        let _ = writeln!(s, "pixel_centric_candidates = {}", self.pixel_centric_candidates);
        let lens: Vec<String> = self.list_lengths.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(s, "list_lengths = {}", lens.join(","));
        s
    }
}

#[derive(Debug, Clone)]
pub struct RenderOutput<T> {
    pub image: ImageRGB<T>,
    /// Per-pixel state before background, row-major over the image.
    pub states: Vec<PixelState<T>>,
    pub stats: RenderStats,
}

pub fn render<T: Real>(scene: &[Gaussian3D<T>], cam: &Camera<T>, cfg: &RenderConfig) -> Result<RenderOutput<T>> {
    cfg.validate()?;
    let projected = preprocess(scene, cam)?;
    let image = (cam.width, cam.height);
    let binning = bin_and_sort_with(&projected.splats, cfg.tile, image, cfg.footprint);
    let mut out = render_binned(&projected.splats, &binning, cfg);
    out.stats.culled_near = projected.culled_near;
    out.stats.culled_degenerate = projected.culled_degenerate;
    Ok(out)
}

struct TileResult<T> {
    states: Vec<PixelState<T>>,
    evals: EvalCounters,
    tail_entries: usize,
    tail_candidates: u64,
}

/// Renders already-binned splats.
pub fn render_binned<T: Real>(splats: &[Splat2D<T>], binning: &TileBinning<T>, cfg: &RenderConfig) -> RenderOutput<T> {
    let grid = binning.grid;
    let results: Vec<TileResult<T>> = (0..grid.tile_count())
        .into_par_iter()
        .map(|t| {
            let view = TileView::new(grid.rect(t), splats, &binning.aabbs).with_alpha_min(T::lit(cfg.alpha_min));
            render_tile(&view, &binning.lists[t], cfg)
        })
        .collect();

    let bg = cfg.background.map(T::lit);
    let mut states = vec![PixelState::default(); grid.width * grid.height];
    let mut image = ImageRGB::new(grid.width, grid.height, [T::zero(); 3]);
    let mut stats = RenderStats {
        width: grid.width,
        height: grid.height,
        tile: (grid.tile_w, grid.tile_h),
        grid: (grid.nx, grid.ny),
        z_tiles: cfg.z_tiles,
        visible: splats.len(),
        multi_tile_splats: binning.multi_tile.iter().filter(|&&m| m).count(),
        list_lengths: binning.list_lengths(),
        invocations: binning.invocations(),
        ..Default::default()
    };
    for (t, r) in results.into_iter().enumerate() {
        let rect = grid.rect(t);
        for (i, st) in r.states.into_iter().enumerate() {
            let (x, y) = rect.pixel(i);
            image.set(x, y, st.resolve(&bg));
            states[y * grid.width + x] = st;
        }
        stats.evals.add(&r.evals);
        stats.pixel_centric_entries += r.tail_entries;
        stats.pixel_centric_candidates += r.tail_candidates;
    }
    RenderOutput { image, states, stats }
}

fn gaussian_centric_segment<T: Real>(
    view: &TileView<'_, T>,
    list: &[TileEntry<T>],
    range: std::ops::Range<usize>,
    z_tiles: usize,
    states: &mut [PixelState<T>],
    eps: T,
) -> EvalCounters {
    if z_tiles <= 1 {
        return blend_gaussian_centric(view, &list[range.clone()], range.start, states, eps);
    }
    let mut n = EvalCounters::default();
    let partials: Vec<_> = partition_equal(range.len(), z_tiles)
        .into_iter()
        .map(|r| {
            let (start, end) = (range.start + r.start, range.start + r.end);
            let (p, c) = blend_ztile(view, &list[start..end], start);
            n.add(&c);
            p
        })
        .collect();
    merge_ztiles_into(states, &partials, eps);
    n
}

fn render_tile<T: Real>(view: &TileView<'_, T>, list: &[TileEntry<T>], cfg: &RenderConfig) -> TileResult<T> {
    let eps = T::lit(cfg.termination);
    let n = list.len();
    let mut states = vec![PixelState::default(); view.rect.pixel_count()];
    let mut evals = EvalCounters::default();
    let mut tail_start = n;

    match cfg.hybrid {
        Hybrid::Off => {
            evals.add(&gaussian_centric_segment(
                view,
                list,
                0..n,
                cfg.z_tiles,
                &mut states,
                eps,
            ));
        }
        Hybrid::FixedFraction(f) => {
            let tail = ((f * n as f64).round() as usize).min(n);
            tail_start = n - tail;
            evals.add(&gaussian_centric_segment(
                view,
                list,
                0..tail_start,
                cfg.z_tiles,
                &mut states,
                eps,
            ));
        }
        Hybrid::OcclusionThreshold(theta) => {
            for r in partition_equal(n, cfg.z_tiles) {
                evals.add(&gaussian_centric_segment(view, list, r.clone(), 1, &mut states, eps));
                let occluded = states.iter().filter(|s| s.terminated).count();
                if r.end < n && occluded as f64 >= theta * states.len() as f64 {
                    tail_start = r.end;
                    break;
                }
            }
        }
    }

    let mut tail_candidates = 0;
    if tail_start < n {
        let c = blend_pixel_centric(view, &list[tail_start..], tail_start, &mut states, eps);
        tail_candidates = c.candidates;
        evals.add(&c);
    }
    TileResult {
        states,
        evals,
        tail_entries: n - tail_start,
        tail_candidates,
    }
}
