use crate::approx::{recip_one_minus, RecipMode};
use crate::binning::{Aabb, Splat2D, TileEntry};
use crate::error::Result;
use crate::model::OPACITY_MAX;
use crate::raster::TileView;
use crate::real::Real;

pub const DEFAULT_OFFLOAD_BATCH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackwardConfig {
    pub recip: RecipMode,
    pub background: [f64; 3],
    /// Splats per drain of the per-tile gradient buffer.
    pub offload_batch: usize,
}

impl Default for BackwardConfig {
    fn default() -> Self {
        Self {
            recip: RecipMode::Approx,
            background: [0.0; 3],
            offload_batch: DEFAULT_OFFLOAD_BATCH,
        }
    }
}

/// Per-pixel input to the backward sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelGrad<T> {
    pub dl_dc: [T; 3],
    pub t_final: T,
    /// Colour blended behind the current splat; starts at zero.
    pub suffix: [T; 3],
    /// Exclusive bound of list positions blended in the forward pass.
    pub blend_end: usize,
}

/// Screen-space gradient of one splat.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SplatGrad<T> {
    pub rgb: [T; 3],
    pub alpha: T,
    pub mean2: [T; 2],
    pub conic: [T; 3],
    pub opacity: T,
    /// Pixels that contributed.
    pub hits: u32,
}

impl<T: Real> SplatGrad<T> {
    pub fn add(&mut self, o: &SplatGrad<T>) {
        for c in 0..3 {
            self.rgb[c] = self.rgb[c] + o.rgb[c];
            self.conic[c] = self.conic[c] + o.conic[c];
        }
        self.alpha = self.alpha + o.alpha;
        self.mean2[0] = self.mean2[0] + o.mean2[0];
        self.mean2[1] = self.mean2[1] + o.mean2[1];
        self.opacity = self.opacity + o.opacity;
        self.hits += o.hits;
    }
}

/// Gradient partials produced by one tile, in the tile's depth order.
#[derive(Debug, Clone, PartialEq)]
pub struct TilePartial<T> {
    pub tile: usize,
    /// `(splat index, gradient)` for every splat in the tile list.
    pub entries: Vec<(usize, SplatGrad<T>)>,
    pub drains: u64,
    /// Per-pixel gradient accumulations.
    pub accum_ops: u64,
    /// Reconstructed transmittances that left `[0, 1]` and were clamped.
    pub clamped: u64,
    /// Transmittance recovered in front of the first splat, per pixel.
    pub front_transmittance: Vec<T>,
}

/// Back-to-front gradient sweep over one tile. `pixels` is indexed like the
/// tile's local pixel order.
pub fn backward_tile<T: Real>(
    tile: usize,
    view: &TileView<'_, T>,
    list: &[TileEntry<T>],
    pixels: &[PixelGrad<T>],
    cfg: &BackwardConfig,
) -> Result<TilePartial<T>> {
    let bg = cfg.background.map(T::lit);
    let mut px = pixels.to_vec();
    let mut t: Vec<T> = px.iter().map(|p| p.t_final).collect();
    let bg_dot: Vec<T> = px
        .iter()
        .map(|p| p.dl_dc[0] * bg[0] + p.dl_dc[1] * bg[1] + p.dl_dc[2] * bg[2])
        .collect();

    let mut out = TilePartial {
        tile,
        entries: Vec::with_capacity(list.len()),
        drains: 0,
        accum_ops: 0,
        clamped: 0,
        front_transmittance: Vec::new(),
    };
    let batch = cfg.offload_batch.max(1);
    for (pos, e) in list.iter().enumerate().rev() {
        let s = &view.splats[e.index];
        let mut g = SplatGrad::default();
        if let Some(b) = view.aabbs[e.index].and_then(|b| b.intersect(&view.rect)) {
            splat_backward(
                view,
                s,
                pos,
                &b,
                &mut px,
                &mut t,
                &bg_dot,
                cfg.recip,
                &mut g,
                &mut out.clamped,
            )?;
        }
        out.accum_ops += g.hits as u64;
        out.entries.push((e.index, g));
        if (list.len() - pos) % batch == 0 {
            out.drains += 1;
        }
    }
    if list.len() % batch != 0 {
        out.drains += 1;
    }
    out.entries.reverse();
    out.front_transmittance = t;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn splat_backward<T: Real>(
    view: &TileView<'_, T>,
    s: &Splat2D<T>,
    pos: usize,
    b: &Aabb,
    px: &mut [PixelGrad<T>],
    t: &mut [T],
    bg_dot: &[T],
    recip: RecipMode,
    g: &mut SplatGrad<T>,
    clamped: &mut u64,
) -> Result<()> {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let [a, bb, c] = s.conic;
    for y in b.y_min..b.y_max {
        for x in b.x_min..b.x_max {
            let i = view.rect.local(x, y);
            let p = &mut px[i];
            if pos >= p.blend_end {
                continue;
            }
            let alpha = view.alpha(s, x, y);
            if alpha <= T::zero() {
                continue;
            }
            let r = recip_one_minus(alpha, recip)?;
            let mut ti = t[i] * r;
            if !ti.is_finite() || ti > T::one() + T::lit(1e-6) {
                *clamped += 1;
            }
            if !ti.is_finite() {
                ti = T::one();
            }
            ti = ti.min(T::one()).max(T::zero());
            t[i] = ti;

            let w = ti * alpha;
            let mut d_alpha = -(p.t_final * r) * bg_dot[i];
            for ch in 0..3 {
                g.rgb[ch] = g.rgb[ch] + w * p.dl_dc[ch];
                d_alpha = d_alpha + ti * (s.rgb[ch] - p.suffix[ch]) * p.dl_dc[ch];
                p.suffix[ch] = alpha * s.rgb[ch] + (T::one() - alpha) * p.suffix[ch];
            }
            g.alpha = g.alpha + d_alpha;
            g.hits += 1;

            let dx = T::lit(x as f64 + 0.5) - s.mean[0];
            let dy = T::lit(y as f64 + 0.5) - s.mean[1];
            let gauss = alpha / s.opacity;
            if s.opacity * gauss < T::lit(OPACITY_MAX) {
                g.opacity = g.opacity + gauss * d_alpha;
                let d_q = -half * alpha * d_alpha;
                g.mean2[0] = g.mean2[0] - d_q * two * (a * dx + bb * dy);
                g.mean2[1] = g.mean2[1] - d_q * two * (bb * dx + c * dy);
                g.conic[0] = g.conic[0] + d_q * dx * dx;
                g.conic[1] = g.conic[1] + d_q * two * dx * dy;
                g.conic[2] = g.conic[2] + d_q * dy * dy;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::{compute_aabb, TileRect};

    fn unit_splat(alpha: f64, rgb: [f64; 3], depth: f64) -> Splat2D<f64> {
        // Centred on pixel (0, 0) so q = 0 and alpha equals the opacity.
        Splat2D::from_cov([0.5, 0.5], [1.0, 0.0, 1.0], depth, rgb, alpha).unwrap()
    }

    fn one_pixel_view<'a>(splats: &'a [Splat2D<f64>], aabbs: &'a [Option<Aabb>]) -> TileView<'a, f64> {
        TileView::new(
            TileRect {
                x0: 0,
                y0: 0,
                x1: 1,
                y1: 1,
            },
            splats,
            aabbs,
        )
    }

    #[test]
    fn single_splat_single_pixel() {
        let splats = [unit_splat(0.8, [0.7, 0.2, 0.1], 1.0)];
        let aabbs = [compute_aabb(&splats[0], (1, 1))];
        let view = one_pixel_view(&splats, &aabbs);
        let list = [TileEntry { index: 0, depth: 1.0 }];
        let px = [PixelGrad {
            dl_dc: [1.0, 0.0, 0.0],
            t_final: 0.2,
            suffix: [0.0; 3],
            blend_end: 1,
        }];
        let cfg = BackwardConfig {
            recip: RecipMode::Exact,
            ..Default::default()
        };
        let out = backward_tile(0, &view, &list, &px, &cfg).unwrap();
        let g = out.entries[0].1;
        assert!((g.rgb[0] - 0.8).abs() < 1e-12);
        assert_eq!(&g.rgb[1..], &[0.0, 0.0]);
        assert!((g.alpha - 0.7).abs() < 1e-12);
        assert!((out.front_transmittance[0] - 1.0).abs() < 1e-12);
        assert_eq!(out.drains, 1);
        assert_eq!(out.accum_ops, 1);
    }

    #[test]
    fn background_term_enters_alpha_gradient() {
        let splats = [unit_splat(0.8, [0.7, 0.2, 0.1], 1.0)];
        let aabbs = [compute_aabb(&splats[0], (1, 1))];
        let view = one_pixel_view(&splats, &aabbs);
        let list = [TileEntry { index: 0, depth: 1.0 }];
        let px = [PixelGrad {
            dl_dc: [1.0, 0.0, 0.0],
            t_final: 0.2,
            suffix: [0.0; 3],
            blend_end: 1,
        }];
        let cfg = BackwardConfig {
            recip: RecipMode::Exact,
            background: [1.0, 0.0, 0.0],
            ..Default::default()
        };
        let g = backward_tile(0, &view, &list, &px, &cfg).unwrap().entries[0].1;
        // C = a*c + (1-a)*bg, so dC/da = c - bg.
        assert!((g.alpha - (0.7 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn positions_after_termination_get_nothing() {
        let splats = [unit_splat(0.9, [1.0; 3], 1.0), unit_splat(0.5, [1.0; 3], 2.0)];
        let aabbs: Vec<_> = splats.iter().map(|s| compute_aabb(s, (1, 1))).collect();
        let view = one_pixel_view(&splats, &aabbs);
        let list = [TileEntry { index: 0, depth: 1.0 }, TileEntry { index: 1, depth: 2.0 }];
        let px = [PixelGrad {
            dl_dc: [1.0; 3],
            t_final: 0.1,
            suffix: [0.0; 3],
            blend_end: 1,
        }];
        let out = backward_tile(0, &view, &list, &px, &BackwardConfig::default()).unwrap();
        assert_eq!(out.entries[1].1, SplatGrad::default());
        assert_eq!(out.entries[0].1.hits, 1);
    }

    #[test]
    fn drains_follow_batch_size() {
        let splats: Vec<_> = (0..40).map(|i| unit_splat(0.01, [0.5; 3], i as f64 + 1.0)).collect();
        let aabbs: Vec<_> = splats.iter().map(|s| compute_aabb(s, (1, 1))).collect();
        let view = one_pixel_view(&splats, &aabbs);
        let list: Vec<_> = (0..40)
            .map(|i| TileEntry {
                index: i,
                depth: i as f64 + 1.0,
            })
            .collect();
        let px = [PixelGrad {
            dl_dc: [1.0; 3],
            t_final: 0.99f64.powi(40),
            suffix: [0.0; 3],
            blend_end: 40,
        }];
        let out = backward_tile(0, &view, &list, &px, &BackwardConfig::default()).unwrap();
        assert_eq!(out.drains, 3);
        assert_eq!(out.accum_ops, 40);
    }
}
