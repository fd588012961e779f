use std::ops::Range;

use crate::binning::{Aabb, Splat2D, TileEntry, TileRect, ALPHA_MIN};
use crate::model::OPACITY_MAX;
use crate::real::Real;

/// Alpha of `splat` at the centre of pixel `(x, y)`, clamped to 0.99 and
/// zeroed below 1/255.
#[inline]
pub fn alpha_of<T: Real>(splat: &Splat2D<T>, x: usize, y: usize) -> T {
    alpha_of_with(splat, x, y, T::lit(ALPHA_MIN))
}

/// [`alpha_of`] with an explicit lower cutoff.
#[inline]
pub fn alpha_of_with<T: Real>(splat: &Splat2D<T>, x: usize, y: usize, alpha_min: T) -> T {
    let dx = T::lit(x as f64 + 0.5) - splat.mean[0];
    let dy = T::lit(y as f64 + 0.5) - splat.mean[1];
    let [a, b, c] = splat.conic;
    let q = (a * dx * dx + T::lit(2.0) * b * dx * dy + c * dy * dy).max(T::zero());
    let alpha = (splat.opacity * (T::lit(-0.5) * q).exp()).min(T::lit(OPACITY_MAX));
    if alpha < alpha_min {
        T::zero()
    } else {
        alpha
    }
}

/// Running per-pixel compositing state, before background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelState<T> {
    pub rgb: [T; 3],
    pub transmittance: T,
    pub terminated: bool,
    pub n_contrib: u32,
    /// Depth-list position after which blending stopped, if it did.
    pub terminated_at: Option<usize>,
}

impl<T: Real> Default for PixelState<T> {
    fn default() -> Self {
        Self {
            rgb: [T::zero(); 3],
            transmittance: T::one(),
            terminated: false,
            n_contrib: 0,
            terminated_at: None,
        }
    }
}

impl<T: Real> PixelState<T> {
    #[inline]
    fn blend(&mut self, alpha: T, rgb: &[T; 3], eps: T, pos: usize) {
        let w = self.transmittance * alpha;
        for c in 0..3 {
            self.rgb[c] = self.rgb[c] + w * rgb[c];
        }
        self.transmittance = self.transmittance * (T::one() - alpha);
        self.n_contrib += 1;
        if self.transmittance < eps {
            self.terminated = true;
            self.terminated_at = Some(pos);
        }
    }

    /// Final colour with the background composited behind.
    pub fn resolve(&self, background: &[T; 3]) -> [T; 3] {
        [0, 1, 2].map(|c| self.rgb[c] + self.transmittance * background[c])
    }

    /// Exclusive bound of list positions that were blended into this pixel.
    pub fn blend_end(&self, list_len: usize) -> usize {
        self.terminated_at.map_or(list_len, |p| p + 1)
    }
}

/// Alpha-evaluation bookkeeping. `performed + skipped == candidates`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounters {
    /// (splat, pixel) pairs inside the splat's box and the tile.
    pub candidates: u64,
    pub performed: u64,
    /// Candidates never evaluated because the pixel had already terminated.
    pub skipped: u64,
    /// Evaluations that were blended (alpha at or above the cutoff).
    pub contributions: u64,
}

impl EvalCounters {
    pub fn add(&mut self, o: &EvalCounters) {
        self.candidates += o.candidates;
        self.performed += o.performed;
        self.skipped += o.skipped;
        self.contributions += o.contributions;
    }
}

/// One tile's pixels plus read-only access to the splats and their boxes.
#[derive(Debug, Clone, Copy)]
pub struct TileView<'a, T> {
    pub rect: TileRect,
    pub splats: &'a [Splat2D<T>],
    pub aabbs: &'a [Option<Aabb>],
    pub alpha_min: T,
}

impl<'a, T: Real> TileView<'a, T> {
    pub fn new(rect: TileRect, splats: &'a [Splat2D<T>], aabbs: &'a [Option<Aabb>]) -> Self {
        Self {
            rect,
            splats,
            aabbs,
            alpha_min: T::lit(ALPHA_MIN),
        }
    }

    pub fn with_alpha_min(self, alpha_min: T) -> Self {
        Self { alpha_min, ..self }
    }

    #[inline]
    pub fn alpha(&self, s: &Splat2D<T>, x: usize, y: usize) -> T {
        alpha_of_with(s, x, y, self.alpha_min)
    }

    #[inline]
    fn footprint(&self, index: usize) -> Option<Aabb> {
        self.aabbs[index].and_then(|b| b.intersect(&self.rect))
    }
}

/// Gaussian-centric front-to-back sweep over `list` into `states`. Each splat
/// visits every pixel of its box; terminated pixels are still dispatched
/// (counted as performed) but left unchanged. `offset` is the list position
/// of `list[0]`.
pub fn blend_gaussian_centric<T: Real>(
    view: &TileView<'_, T>,
    list: &[TileEntry<T>],
    offset: usize,
    states: &mut [PixelState<T>],
    eps: T,
) -> EvalCounters {
    let mut n = EvalCounters::default();
    for (k, e) in list.iter().enumerate() {
        let Some(b) = view.footprint(e.index) else { continue };
        let s = &view.splats[e.index];
        for y in b.y_min..b.y_max {
            for x in b.x_min..b.x_max {
                n.candidates += 1;
                n.performed += 1;
                let st = &mut states[view.rect.local(x, y)];
                if st.terminated {
                    continue;
                }
                let alpha = view.alpha(s, x, y);
                if alpha > T::zero() {
                    n.contributions += 1;
                    st.blend(alpha, &s.rgb, eps, offset + k);
                }
            }
        }
    }
    n
}

/// Full-list Gaussian-centric blend of one tile with early termination at `eps`.
pub fn blend_tile_global<T: Real>(
    view: &TileView<'_, T>,
    list: &[TileEntry<T>],
    eps: T,
) -> (Vec<PixelState<T>>, EvalCounters) {
    let mut states = vec![PixelState::default(); view.rect.pixel_count()];
    let n = blend_gaussian_centric(view, list, 0, &mut states, eps);
    (states, n)
}

/// Local compositing result of one depth chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ZTilePartial<T> {
    pub color: Vec<[T; 3]>,
    /// Residual transmittance through the chunk.
    pub transmittance: Vec<T>,
    pub n_contrib: Vec<u32>,
    /// List position one past the chunk's last entry.
    pub end: usize,
}

/// Composites one contiguous depth chunk starting from unit transmittance,
/// with no early termination.
pub fn blend_ztile<T: Real>(
    view: &TileView<'_, T>,
    chunk: &[TileEntry<T>],
    start: usize,
) -> (ZTilePartial<T>, EvalCounters) {
    let np = view.rect.pixel_count();
    let mut states = vec![PixelState::default(); np];
    let n = blend_gaussian_centric(view, chunk, start, &mut states, T::zero());
    let partial = ZTilePartial {
        color: states.iter().map(|s| s.rgb).collect(),
        transmittance: states.iter().map(|s| s.transmittance).collect(),
        n_contrib: states.iter().map(|s| s.n_contrib).collect(),
        end: start + chunk.len(),
    };
    (partial, n)
}

/// Ordered merge `C += T_in * C_loc; T_in *= T_out` over chunks, skipping
/// the remaining chunks of a pixel once `T_in < eps`.
pub fn merge_ztiles_into<T: Real>(states: &mut [PixelState<T>], partials: &[ZTilePartial<T>], eps: T) {
    for p in partials {
        for (i, st) in states.iter_mut().enumerate() {
            if st.terminated {
                continue;
            }
            let t_in = st.transmittance;
            for c in 0..3 {
                st.rgb[c] = st.rgb[c] + t_in * p.color[i][c];
            }
            st.transmittance = t_in * p.transmittance[i];
            st.n_contrib += p.n_contrib[i];
            if st.transmittance < eps {
                st.terminated = true;
                st.terminated_at = Some(p.end.saturating_sub(1));
            }
        }
    }
}

pub fn merge_ztiles<T: Real>(partials: &[ZTilePartial<T>], n_pixels: usize, eps: T) -> Vec<PixelState<T>> {
    let mut states = vec![PixelState::default(); n_pixels];
    merge_ztiles_into(&mut states, partials, eps);
    states
}

/// Pixel-centric continuation: each pixel walks the remaining splats in
/// depth order until it terminates; candidates after termination are
/// skipped.
pub fn blend_pixel_centric<T: Real>(
    view: &TileView<'_, T>,
    remaining: &[TileEntry<T>],
    offset: usize,
    states: &mut [PixelState<T>],
    eps: T,
) -> EvalCounters {
    let mut n = EvalCounters::default();
    let boxes: Vec<Option<Aabb>> = remaining.iter().map(|e| view.footprint(e.index)).collect();
    for (i, st) in states.iter_mut().enumerate() {
        let (x, y) = view.rect.pixel(i);
        for (k, (e, b)) in remaining.iter().zip(&boxes).enumerate() {
            if !b.is_some_and(|b| b.contains(x, y)) {
                continue;
            }
            n.candidates += 1;
            if st.terminated {
                n.skipped += 1;
                continue;
            }
            n.performed += 1;
            let s = &view.splats[e.index];
            let alpha = view.alpha(s, x, y);
            if alpha > T::zero() {
                n.contributions += 1;
                st.blend(alpha, &s.rgb, eps, offset + k);
            }
        }
    }
    n
}

/// Splits `0..n` into `k` chunks of `n / k` entries; the last chunk takes
/// the remainder.
pub fn partition_equal(n: usize, k: usize) -> Vec<Range<usize>> {
    let k = k.max(1);
    let size = n / k;
    (0..k)
        .map(|i| {
            let start = i * size;
            let end = if i + 1 == k { n } else { start + size };
            start..end
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::Footprint;

    fn splat(mean: [f64; 2], opacity: f64, rgb: [f64; 3], depth: f64) -> Splat2D<f64> {
        Splat2D::from_cov(mean, [1.0, 0.0, 1.0], depth, rgb, opacity).unwrap()
    }

    // A splat that is "flat": huge covariance so alpha is its opacity everywhere.
    fn flat(opacity: f64, rgb: [f64; 3], depth: f64) -> Splat2D<f64> {
        Splat2D::from_cov([0.5, 0.5], [1e12, 0.0, 1e12], depth, rgb, opacity).unwrap()
    }

    fn one_pixel<'a>(splats: &'a [Splat2D<f64>], aabbs: &'a [Option<Aabb>]) -> TileView<'a, f64> {
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

    fn full(n: usize) -> Vec<Option<Aabb>> {
        vec![
            Some(Aabb {
                x_min: 0,
                y_min: 0,
                x_max: 1,
                y_max: 1
            });
            n
        ]
    }

    fn entries(n: usize) -> Vec<TileEntry<f64>> {
        (0..n)
            .map(|i| TileEntry {
                index: i,
                depth: i as f64,
            })
            .collect()
    }

    #[test]
    fn alpha_at_mean_is_opacity() {
        let s = splat([3.5, 3.5], 0.8, [1.0; 3], 1.0);
        assert_eq!(alpha_of(&s, 3, 3), 0.8);
    }

    #[test]
    fn alpha_at_root_two_offset() {
        // Activated opacity of 1 is clamped to 0.99 upstream.
        let s = splat([0.5 - 2f64.sqrt(), 0.5], 0.99, [1.0; 3], 1.0);
        let a = alpha_of(&s, 0, 0);
        assert!((a - 0.99 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((a - 0.3642).abs() < 1e-4);
    }

    #[test]
    fn alpha_below_cutoff_is_zero() {
        let s = flat(0.003, [1.0; 3], 1.0);
        assert_eq!(alpha_of(&s, 0, 0), 0.0);
    }

    #[test]
    fn single_splat_composite() {
        let s = [flat(0.8, [1.0, 0.0, 0.0], 1.0)];
        let a = full(1);
        let (st, _) = blend_tile_global(&one_pixel(&s, &a), &entries(1), 1e-4);
        let c = st[0].resolve(&[0.0; 3]);
        assert!((c[0] - 0.8).abs() < 1e-12 && c[1] == 0.0);
        assert!((st[0].transmittance - 0.2).abs() < 1e-12);
    }

    #[test]
    fn two_splat_composite() {
        let s = [flat(0.5, [1.0, 0.0, 0.0], 1.0), flat(0.5, [0.0, 1.0, 0.0], 2.0)];
        let a = full(2);
        let (st, _) = blend_tile_global(&one_pixel(&s, &a), &entries(2), 1e-4);
        // Hand-unrolled: C = 1 * 0.5 * r + 0.5 * 0.5 * g, T = 0.25.
        assert_eq!(st[0].resolve(&[0.0; 3]), [0.5, 0.25, 0.0]);
        assert_eq!(st[0].transmittance, 0.25);
    }

    #[test]
    fn empty_list_shows_background() {
        let (st, _) = blend_tile_global(&one_pixel(&[], &[]), &[], 1e-4);
        assert_eq!(st[0].resolve(&[1.0; 3]), [1.0; 3]);
        assert_eq!(st[0].transmittance, 1.0);
    }

    #[test]
    fn ztile_over_full_list_equals_global_without_termination() {
        let s = [flat(0.5, [1.0, 0.0, 0.0], 1.0), flat(0.3, [0.2, 1.0, 0.5], 2.0)];
        let a = full(2);
        let v = one_pixel(&s, &a);
        let (p, _) = blend_ztile(&v, &entries(2), 0);
        let (g, _) = blend_tile_global(&v, &entries(2), 0.0);
        assert_eq!(p.color[0], g[0].rgb);
        assert_eq!(p.transmittance[0], g[0].transmittance);
    }

    #[test]
    fn empty_chunk_is_identity() {
        let (p, n) = blend_ztile(&one_pixel(&[], &[]), &[], 0);
        assert_eq!(p.color[0], [0.0; 3]);
        assert_eq!(p.transmittance[0], 1.0);
        assert_eq!(n.candidates, 0);
    }

    #[test]
    fn single_splat_chunk() {
        let s = [flat(0.5, [0.0, 1.0, 0.0], 1.0)];
        let a = full(1);
        let (p, _) = blend_ztile(&one_pixel(&s, &a), &entries(1), 0);
        assert_eq!(p.color[0], [0.0, 0.5, 0.0]);
        assert_eq!(p.transmittance[0], 0.5);
    }

    #[test]
    fn two_chunk_merge_matches_global() {
        let s = [flat(0.5, [1.0, 0.0, 0.0], 1.0), flat(0.5, [0.0, 1.0, 0.0], 2.0)];
        let a = full(2);
        let v = one_pixel(&s, &a);
        let list = entries(2);
        let (p0, _) = blend_ztile(&v, &list[..1], 0);
        let (p1, _) = blend_ztile(&v, &list[1..], 1);
        let st = merge_ztiles(&[p0, p1], 1, 1e-4);
        assert_eq!(st[0].resolve(&[0.0; 3]), [0.5, 0.25, 0.0]);
    }

    #[test]
    fn opaque_first_chunk_absorbs_the_rest() {
        let p0 = ZTilePartial {
            color: vec![[0.3, 0.2, 0.1]],
            transmittance: vec![0.0],
            n_contrib: vec![1],
            end: 1,
        };
        let p1 = ZTilePartial {
            color: vec![[1.0, 1.0, 1.0]],
            transmittance: vec![0.5],
            n_contrib: vec![1],
            end: 2,
        };
        for eps in [0.0, 1e-4] {
            let st = merge_ztiles(&[p0.clone(), p1.clone()], 1, eps);
            assert_eq!(st[0].rgb, [0.3, 0.2, 0.1]);
            assert_eq!(st[0].transmittance, 0.0);
        }
    }

    #[test]
    fn saturated_carry_in_skips_everything() {
        let s = [flat(0.5, [1.0, 0.0, 0.0], 1.0)];
        let a = full(1);
        let mut st = vec![PixelState {
            rgb: [0.1, 0.2, 0.3],
            transmittance: 0.0,
            terminated: true,
            n_contrib: 4,
            terminated_at: Some(3),
        }];
        let before = st.clone();
        let n = blend_pixel_centric(&one_pixel(&s, &a), &entries(1), 0, &mut st, 1e-4);
        assert_eq!(st, before);
        assert_eq!(n.performed, 0);
        assert_eq!(n.skipped, 1);
    }

    #[test]
    fn fresh_carry_in_pixel_centric_equals_global() {
        let s = [flat(0.5, [1.0, 0.0, 0.0], 1.0), flat(0.7, [0.0, 1.0, 0.4], 2.0)];
        let a = full(2);
        let v = one_pixel(&s, &a);
        let mut st = vec![PixelState::default()];
        blend_pixel_centric(&v, &entries(2), 0, &mut st, 1e-4);
        let (g, _) = blend_tile_global(&v, &entries(2), 1e-4);
        assert_eq!(st, g);
    }

    #[test]
    fn termination_freezes_colour() {
        let s: Vec<_> = (0..6).map(|i| flat(0.99, [1.0, 0.5, 0.0], i as f64)).collect();
        let a = full(6);
        let (st, n) = blend_tile_global(&one_pixel(&s, &a), &entries(6), 1e-4);
        // 0.01^2 = 1e-4 is not below eps, 0.01^3 is.
        assert_eq!(st[0].terminated_at, Some(2));
        assert_eq!(st[0].n_contrib, 3);
        assert_eq!(n.performed, 6);
        assert_eq!(n.contributions, 3);
    }

    #[test]
    fn counts_respect_boxes() {
        let s = [splat([2.0, 2.0], 0.9, [1.0; 3], 1.0)];
        let a = [crate::binning::compute_aabb_with(&s[0], (16, 16), Footprint::Sigma3)];
        let v = TileView::new(
            TileRect {
                x0: 0,
                y0: 0,
                x1: 16,
                y1: 16,
            },
            &s,
            &a,
        );
        let (_, n) = blend_tile_global(&v, &entries(1), 1e-4);
        let b = a[0].unwrap();
        assert_eq!(n.candidates as usize, b.width() * b.height());
    }

    #[test]
    fn equal_partition_puts_remainder_last() {
        assert_eq!(partition_equal(10, 3), vec![0..3, 3..6, 6..10]);
        assert_eq!(partition_equal(2, 4), vec![0..0, 0..0, 0..0, 0..2]);
        assert_eq!(partition_equal(5, 1), vec![0..5]);
    }
}
