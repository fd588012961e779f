use crate::real::Real;

use super::chain::GaussianGrad;
use super::tile::{SplatGrad, TilePartial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AccumStats {
    pub tiles: u64,
    pub drains: u64,
    pub accum_ops: u64,
    /// Cross-tile additions into the per-splat sums.
    pub fold_ops: u64,
    pub clamped: u64,
}

impl AccumStats {
    pub fn add(&mut self, o: &AccumStats) {
        self.tiles += o.tiles;
        self.drains += o.drains;
        self.accum_ops += o.accum_ops;
        self.fold_ops += o.fold_ops;
        self.clamped += o.clamped;
    }
}

/// Folds tile partials into per-splat sums in ascending tile index and, within
/// a tile, depth-list order, independent of the order the partials arrive in.
pub fn accumulate_cross_tile<T: Real>(partials: &[TilePartial<T>], n_splats: usize) -> (Vec<SplatGrad<T>>, AccumStats) {
    let mut order: Vec<&TilePartial<T>> = partials.iter().collect();
    order.sort_by_key(|p| p.tile);
    let mut sums = vec![SplatGrad::default(); n_splats];
    let mut st = AccumStats::default();
    for p in order {
        st.tiles += 1;
        st.drains += p.drains;
        st.accum_ops += p.accum_ops;
        st.clamped += p.clamped;
        for (i, g) in &p.entries {
            sums[*i].add(g);
            st.fold_ops += 1;
        }
    }
    (sums, st)
}

/// Per-Gaussian gradient sums over a batch of views.
#[derive(Debug, Clone, PartialEq)]
pub struct GradAccumulator<T> {
    /// Screen-space sums per Gaussian (all views).
    pub screen: Vec<SplatGrad<T>>,
    pub params: Vec<GaussianGrad<T>>,
}

impl<T: Real> GradAccumulator<T> {
    pub fn new(sh_lens: impl IntoIterator<Item = usize>) -> Self {
        let params: Vec<_> = sh_lens.into_iter().map(GaussianGrad::zeros).collect();
        Self {
            screen: vec![SplatGrad::default(); params.len()],
            params,
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn hits(&self, i: usize) -> u32 {
        self.screen[i].hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn partial(tile: usize, entries: Vec<(usize, f64)>) -> TilePartial<f64> {
        TilePartial {
            tile,
            entries: entries
                .into_iter()
                .map(|(i, r)| {
                    (
                        i,
                        SplatGrad {
                            rgb: [r, 0.0, 0.0],
                            alpha: r * 0.5,
                            hits: 1,
                            ..Default::default()
                        },
                    )
                })
                .collect(),
            drains: 1,
            accum_ops: 1,
            clamped: 0,
            front_transmittance: vec![],
        }
    }

    #[test]
    fn single_tile_passes_through() {
        let p = partial(0, vec![(0, 0.25), (1, 0.5)]);
        let (s, st) = accumulate_cross_tile(std::slice::from_ref(&p), 2);
        assert_eq!(s[0], p.entries[0].1);
        assert_eq!(s[1], p.entries[1].1);
        assert_eq!(st.tiles, 1);
    }

    #[test]
    fn sums_across_tiles() {
        let (s, _) = accumulate_cross_tile(&[partial(0, vec![(0, 0.1)]), partial(1, vec![(0, 0.2)])], 1);
        assert_eq!(s[0].rgb[0], 0.1 + 0.2);
        assert_eq!(s[0].hits, 2);
    }

    #[test]
    fn arrival_order_does_not_matter() {
        let ps: Vec<_> = (0..7)
            .map(|t| {
                partial(
                    t,
                    (0..3).map(|i| (i, 0.1 * (t as f64 + 1.0) / (i as f64 + 3.0))).collect(),
                )
            })
            .collect();
        let mut rev = ps.clone();
        rev.reverse();
        rev.swap(1, 4);
        let a = accumulate_cross_tile(&ps, 3);
        let b = accumulate_cross_tile(&rev, 3);
        assert_eq!(a, b);
        for (x, y) in a.0.iter().zip(&b.0) {
            assert_eq!(x.rgb[0].to_bits(), y.rgb[0].to_bits());
        }
    }
}
