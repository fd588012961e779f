//! Workload instrumentation: tile-size sweeps, occlusion curves, the banked
//! pixel-buffer model and pixel-centric offload savings.

use rayon::prelude::*;

use crate::binning::{bin_and_sort_with, Footprint, Splat2D, TileBinning};
use crate::error::{Error, Result};
use crate::raster::{blend_gaussian_centric, partition_equal, PixelState, RenderStats, TileView};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub tile: usize,
    pub invocations: usize,
    /// Reduction relative to the first row, in percent.
    pub reduction: f64,
}

/// Gaussian invocations (splat, tile pairs) for each square tile size.
pub fn tile_sweep<T: Real>(splats: &[Splat2D<T>], sizes: &[usize], image: (usize, usize)) -> Vec<SweepRow> {
    tile_sweep_with(splats, sizes, image, Footprint::Sigma3)
}

pub fn tile_sweep_with<T: Real>(
    splats: &[Splat2D<T>],
    sizes: &[usize],
    image: (usize, usize),
    footprint: Footprint,
) -> Vec<SweepRow> {
    let counts: Vec<usize> = sizes
        .iter()
        .map(|&s| bin_and_sort_with(splats, (s, s), image, footprint).invocations())
        .collect();
    let base = counts.first().copied().unwrap_or(0);
    sizes
        .iter()
        .zip(counts)
        .map(|(&tile, invocations)| SweepRow {
            tile,
            invocations,
            reduction: if base == 0 {
                0.0
            } else {
                100.0 * (1.0 - invocations as f64 / base as f64)
            },
        })
        .collect()
}

/// `(fraction of each tile list blended, fraction of image pixels with
/// transmittance below eps)` after each of `chunks` equal depth chunks.
pub fn occlusion_curve<T: Real>(
    splats: &[Splat2D<T>],
    binning: &TileBinning<T>,
    chunks: usize,
    eps: f64,
) -> Vec<(f64, f64)> {
    let k = chunks.max(1);
    let grid = binning.grid;
    let per_tile: Vec<Vec<usize>> = (0..grid.tile_count())
        .into_par_iter()
        .map(|t| {
            let view = TileView::new(grid.rect(t), splats, &binning.aabbs);
            let list = &binning.lists[t];
            let mut states = vec![PixelState::default(); view.rect.pixel_count()];
            partition_equal(list.len(), k)
                .into_iter()
                .map(|r| {
                    blend_gaussian_centric(&view, &list[r.clone()], r.start, &mut states, T::lit(eps));
                    states.iter().filter(|s| s.terminated).count()
                })
                .collect()
        })
        .collect();
    let total = (grid.width * grid.height).max(1) as f64;
    (0..k)
        .map(|c| {
            let occluded: usize = per_tile.iter().map(|v| v[c]).sum();
            ((c + 1) as f64 / k as f64, occluded as f64 / total)
        })
        .collect()
}

pub const BANKS: usize = 16;
pub const LANES: usize = 16;

/// Pixel-buffer banking: `bank(x, y) = (x + y) mod 16` when skewed, else
/// `x mod 16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BankModel {
    pub banks: usize,
    pub skewed: bool,
}

impl BankModel {
    pub fn skewed() -> Self {
        Self {
            banks: BANKS,
            skewed: true,
        }
    }

    pub fn unskewed() -> Self {
        Self {
            banks: BANKS,
            skewed: false,
        }
    }

    pub fn bank(&self, x: usize, y: usize) -> usize {
        if self.skewed {
            (x + y) % self.banks
        } else {
            x % self.banks
        }
    }

    /// Extra serialised accesses for one step of lane writes.
    pub fn conflicts(&self, group: &[(usize, usize)]) -> u64 {
        let mut count = vec![0u64; self.banks];
        for &(x, y) in group {
            count[self.bank(x, y)] += 1;
        }
        count.iter().map(|&c| c.saturating_sub(1)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BankReport {
    pub groups: usize,
    pub skewed: u64,
    pub unskewed: u64,
    /// `(skewed, unskewed)` per group.
    pub per_group: Vec<(u64, u64)>,
}

/// Conflicts of a pixel-update trace split into steps of `lanes` writes,
/// under both layouts.
pub fn bank_conflicts(trace: &[(usize, usize)], lanes: usize) -> BankReport {
    let (s, u) = (BankModel::skewed(), BankModel::unskewed());
    let per_group: Vec<(u64, u64)> = trace
        .chunks(lanes.max(1))
        .map(|g| (s.conflicts(g), u.conflicts(g)))
        .collect();
    BankReport {
        groups: per_group.len(),
        skewed: per_group.iter().map(|g| g.0).sum(),
        unskewed: per_group.iter().map(|g| g.1).sum(),
        per_group,
    }
}

/// Pixel writes issued by the Gaussian-centric sweep: for each splat in tile
/// and depth order, its contributing pixels in row-major order, padded so a
/// lane step never spans two splats.
pub fn pixel_update_trace<T: Real>(
    splats: &[Splat2D<T>],
    binning: &TileBinning<T>,
    lanes: usize,
) -> Vec<Vec<(usize, usize)>> {
    let grid = binning.grid;
    let mut steps = Vec::new();
    for t in 0..grid.tile_count() {
        let view = TileView::new(grid.rect(t), splats, &binning.aabbs);
        for e in &binning.lists[t] {
            let Some(b) = binning.aabbs[e.index].and_then(|b| b.intersect(&view.rect)) else {
                continue;
            };
            let s = &splats[e.index];
            let px: Vec<(usize, usize)> = (b.y_min..b.y_max)
                .flat_map(|y| (b.x_min..b.x_max).map(move |x| (x, y)))
                .filter(|&(x, y)| view.alpha(s, x, y) > T::zero())
                .collect();
            steps.extend(px.chunks(lanes.max(1)).map(|c| c.to_vec()));
        }
    }
    steps
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridSavings {
    pub pure_evals: u64,
    pub hybrid_evals: u64,
    pub saved: i64,
    pub percent: f64,
}

/// Alpha evaluations saved by the hybrid run relative to the pure
/// Gaussian-centric run of the same frame.
pub fn hybrid_savings(pure: &RenderStats, hybrid: &RenderStats) -> Result<HybridSavings> {
    if pure.width != hybrid.width
        || pure.height != hybrid.height
        || pure.visible != hybrid.visible
        || pure.list_lengths != hybrid.list_lengths
    {
        return Err(Error::DimensionMismatch(
            "hybrid and pure runs rendered different frames".into(),
        ));
    }
    let (p, h) = (pure.evals.performed, hybrid.evals.performed);
    let saved = p as i64 - h as i64;
    Ok(HybridSavings {
        pure_evals: p,
        hybrid_evals: h,
        saved,
        percent: if p == 0 { 0.0 } else { 100.0 * saved as f64 / p as f64 },
    })
}
