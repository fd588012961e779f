//! Screen-space projection, conservative bounding boxes, and per-tile
//! depth-sorted work lists.

use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::{mat_vec3, mul3, norm3, sub3, transpose3};
use crate::model::{covariance3, eval_sh, Camera, Gaussian3D};
use crate::real::Real;

/// Low-pass dilation added to the projected covariance diagonal (px^2).
pub const DILATION: f64 = 0.3;
/// Determinant below which the dilated 2D covariance is treated as singular.
pub const MIN_DET: f64 = 1e-12;
/// Contributions below this alpha are skipped.
pub const ALPHA_MIN: f64 = 1.0 / 255.0;

/// Screen-space footprint of one Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat2D<T> {
    pub mean: [T; 2],
    /// Dilated 2D covariance `(a, b, c)` of `[[a, b], [b, c]]`.
    pub cov: [T; 3],
    /// Inverse of `cov`.
    pub conic: [T; 3],
    pub depth: T,
    pub rgb: [T; 3],
    pub opacity: T,
}

impl<T: Real> Splat2D<T> {
    /// Splat from an explicit 2D covariance; `None` if it is not invertible.
    pub fn from_cov(mean: [T; 2], cov: [T; 3], depth: T, rgb: [T; 3], opacity: T) -> Option<Self> {
        let conic = crate::linalg::sym2_inverse(cov[0], cov[1], cov[2], T::lit(MIN_DET))?;
        Some(Self {
            mean,
            cov,
            conic,
            depth,
            rgb,
            opacity,
        })
    }

    pub fn max_eigenvalue(&self) -> T {
        crate::linalg::sym2_eigenvalues(self.cov[0], self.cov[1], self.cov[2]).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projected<T> {
    Splat(Splat2D<T>),
    BehindNear,
    Degenerate,
}

/// Perspective Jacobian rows at camera-space point `t`.
pub(crate) fn perspective_jacobian<T: Real>(cam: &Camera<T>, t: &[T; 3]) -> [[T; 3]; 2] {
    let iz = T::one() / t[2];
    let iz2 = iz * iz;
    [
        [cam.fx * iz, T::zero(), -cam.fx * t[0] * iz2],
        [T::zero(), cam.fy * iz, -cam.fy * t[1] * iz2],
    ]
}

pub fn project_gaussian<T: Real>(g: &Gaussian3D<T>, cam: &Camera<T>) -> Result<Projected<T>> {
    let act = g.activate()?;
    let degree = g.sh_degree()?;
    let t = cam.to_camera(&g.mean);
    if t[2] <= cam.near {
        return Ok(Projected::BehindNear);
    }
    let iz = T::one() / t[2];
    let mean = [cam.fx * t[0] * iz + cam.cx, cam.fy * t[1] * iz + cam.cy];

    let sigma = covariance3(&act.scale, &act.rotation).to_matrix();
    let w = cam.rotation();
    let view_cov = mul3(&mul3(&w, &sigma), &transpose3(&w));
    let j = perspective_jacobian(cam, &t);
    let mut cov2 = [[T::zero(); 2]; 2];
    for r in 0..2 {
        let jv = mat_vec3(&view_cov, &j[r]);
        for c in 0..2 {
            cov2[r][c] = j[c][0] * jv[0] + j[c][1] * jv[1] + j[c][2] * jv[2];
        }
    }
    let d = T::lit(DILATION);
    let cov = [cov2[0][0] + d, cov2[0][1], cov2[1][1] + d];

    let v = sub3(&g.mean, &cam.center());
    let n = norm3(&v);
    let dir = v.map(|e| e / n);
    let rgb = eval_sh(&g.sh, &dir, degree)?;

    Ok(match Splat2D::from_cov(mean, cov, t[2], rgb, act.opacity) {
        Some(s) => Projected::Splat(s),
        None => Projected::Degenerate,
    })
}

/// Visible splats of a scene together with the Gaussian each came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedScene<T> {
    pub splats: Vec<Splat2D<T>>,
    pub gaussian_ids: Vec<usize>,
    pub culled_near: usize,
    pub culled_degenerate: usize,
}

pub fn preprocess<T: Real>(scene: &[Gaussian3D<T>], cam: &Camera<T>) -> Result<ProjectedScene<T>> {
    let projected: Vec<Projected<T>> = scene
        .par_iter()
        .map(|g| project_gaussian(g, cam))
        .collect::<Result<_>>()?;
    let mut out = ProjectedScene {
        splats: Vec::with_capacity(scene.len()),
        gaussian_ids: Vec::with_capacity(scene.len()),
        culled_near: 0,
        culled_degenerate: 0,
    };
    for (i, p) in projected.into_iter().enumerate() {
        match p {
            Projected::Splat(s) => {
                out.splats.push(s);
                out.gaussian_ids.push(i);
            }
            Projected::BehindNear => out.culled_near += 1,
            Projected::Degenerate => out.culled_degenerate += 1,
        }
    }
    Ok(out)
}

/// Half-open integer pixel box `[x_min, x_max) x [y_min, y_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Aabb {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl Aabb {
    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max
    }

    pub fn width(&self) -> usize {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min
    }

    pub fn intersect(&self, r: &TileRect) -> Option<Aabb> {
        let b = Aabb {
            x_min: self.x_min.max(r.x0),
            y_min: self.y_min.max(r.y0),
            x_max: self.x_max.min(r.x1),
            y_max: self.y_max.min(r.y1),
        };
        (b.x_min < b.x_max && b.y_min < b.y_max).then_some(b)
    }
}

/// How far from its mean a splat is considered to reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Footprint {
    /// `ceil(3 sqrt(lambda_max))` pixels.
    #[default]
    Sigma3,
    /// Radius at which `opacity * exp(-q / 2)` falls to the 1/255 cutoff.
    Visible,
    /// Whole image; every splat touches every tile.
    Unbounded,
}

pub fn compute_aabb<T: Real>(s: &Splat2D<T>, image: (usize, usize)) -> Option<Aabb> {
    compute_aabb_with(s, image, Footprint::Sigma3)
}

pub fn compute_aabb_with<T: Real>(s: &Splat2D<T>, image: (usize, usize), footprint: Footprint) -> Option<Aabb> {
    let (w, h) = image;
    let lambda = s.max_eigenvalue().as_f64().max(0.0);
    let r = match footprint {
        Footprint::Sigma3 => (3.0 * lambda.sqrt()).ceil(),
        Footprint::Visible => {
            let k = 2.0 * (s.opacity.as_f64() / ALPHA_MIN).ln();
            if k <= 0.0 {
                return None;
            }
            (k * lambda).sqrt().ceil()
        }
        Footprint::Unbounded => {
            return (w > 0 && h > 0).then_some(Aabb {
                x_min: 0,
                y_min: 0,
                x_max: w,
                y_max: h,
            })
        }
    };
    let (mx, my) = (s.mean[0].as_f64(), s.mean[1].as_f64());
    if !mx.is_finite() || !my.is_finite() {
        return None;
    }
    let clip = |v: f64, hi: usize| v.clamp(0.0, hi as f64) as usize;
    let b = Aabb {
        x_min: clip((mx - r).floor(), w),
        y_min: clip((my - r).floor(), h),
        x_max: clip((mx + r).floor() + 1.0, w),
        y_max: clip((my + r).floor() + 1.0, h),
    };
    (b.x_min < b.x_max && b.y_min < b.y_max).then_some(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TileRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl TileRect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn pixel_count(&self) -> usize {
        self.width() * self.height()
    }

    /// Tile-local row-major index of image pixel `(x, y)`.
    #[inline]
    pub fn local(&self, x: usize, y: usize) -> usize {
        (y - self.y0) * self.width() + (x - self.x0)
    }

    /// Image coordinates of tile-local pixel `i`.
    #[inline]
    pub fn pixel(&self, i: usize) -> (usize, usize) {
        (self.x0 + i % self.width(), self.y0 + i / self.width())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TileGrid {
    pub tile_w: usize,
    pub tile_h: usize,
    pub nx: usize,
    pub ny: usize,
    pub width: usize,
    pub height: usize,
}

impl TileGrid {
    pub fn new(tile: (usize, usize), image: (usize, usize)) -> Self {
        let (tile_w, tile_h) = (tile.0.max(1), tile.1.max(1));
        Self {
            tile_w,
            tile_h,
            nx: image.0.div_ceil(tile_w),
            ny: image.1.div_ceil(tile_h),
            width: image.0,
            height: image.1,
        }
    }

    pub fn tile_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn rect(&self, tile: usize) -> TileRect {
        let (tx, ty) = (tile % self.nx, tile / self.nx);
        TileRect {
            x0: tx * self.tile_w,
            y0: ty * self.tile_h,
            x1: ((tx + 1) * self.tile_w).min(self.width),
            y1: ((ty + 1) * self.tile_h).min(self.height),
        }
    }

    /// Tile indices overlapped by `b`.
    pub fn tiles_of(&self, b: &Aabb) -> impl Iterator<Item = usize> + '_ {
        let (tx0, tx1) = (b.x_min / self.tile_w, (b.x_max - 1) / self.tile_w);
        let (ty0, ty1) = (b.y_min / self.tile_h, (b.y_max - 1) / self.tile_h);
        (ty0..=ty1).flat_map(move |ty| (tx0..=tx1).map(move |tx| ty * self.nx + tx))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileEntry<T> {
    /// Index into the splat list that was binned.
    pub index: usize,
    pub depth: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileBinning<T> {
    pub grid: TileGrid,
    /// Per tile, entries sorted by depth then index.
    pub lists: Vec<Vec<TileEntry<T>>>,
    pub aabbs: Vec<Option<Aabb>>,
    /// Set for splats whose box spans more than one tile.
    pub multi_tile: Vec<bool>,
}

impl<T: Real> TileBinning<T> {
    /// Total (Gaussian, tile) pairings.
    pub fn invocations(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    pub fn list_lengths(&self) -> Vec<usize> {
        self.lists.iter().map(Vec::len).collect()
    }
}

pub fn bin_and_sort<T: Real>(splats: &[Splat2D<T>], tile: (usize, usize), image: (usize, usize)) -> TileBinning<T> {
    bin_and_sort_with(splats, tile, image, Footprint::Sigma3)
}

pub fn bin_and_sort_with<T: Real>(
    splats: &[Splat2D<T>],
    tile: (usize, usize),
    image: (usize, usize),
    footprint: Footprint,
) -> TileBinning<T> {
    let grid = TileGrid::new(tile, image);
    let aabbs: Vec<Option<Aabb>> = splats.iter().map(|s| compute_aabb_with(s, image, footprint)).collect();
    let mut lists: Vec<Vec<TileEntry<T>>> = vec![Vec::new(); grid.tile_count()];
    let mut multi_tile = vec![false; splats.len()];
    for (i, (s, b)) in splats.iter().zip(&aabbs).enumerate() {
        let Some(b) = b else { continue };
        let mut touched = 0;
        for t in grid.tiles_of(b) {
            lists[t].push(TileEntry {
                index: i,
                depth: s.depth,
            });
            touched += 1;
        }
        multi_tile[i] = touched > 1;
    }
    lists.par_iter_mut().for_each(|l| {
        l.sort_unstable_by(|a, b| {
            a.depth
                .partial_cmp(&b.depth)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.index.cmp(&b.index))
        })
    });
    TileBinning {
        grid,
        lists,
        aabbs,
        multi_tile,
    }
}
