use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{mat_vec3, quat_to_mat};
use crate::model::Gaussian3D;
use crate::real::Real;

/// Screen-space gradient statistics gathered between density-control passes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensifyStats {
    pub grad_sum: Vec<f64>,
    pub count: Vec<u32>,
    pub max_radius: Vec<f64>,
}

impl DensifyStats {
    pub fn new(n: usize) -> Self {
        Self {
            grad_sum: vec![0.0; n],
            count: vec![0; n],
            max_radius: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count.is_empty()
    }

    /// Records one view in which Gaussian `i` was visible.
    pub fn observe(&mut self, i: usize, mean2_grad: [f64; 2], radius: f64) {
        self.grad_sum[i] += mean2_grad[0].hypot(mean2_grad[1]);
        self.count[i] += 1;
        self.max_radius[i] = self.max_radius[i].max(radius);
    }

    pub fn mean_grad(&self, i: usize) -> f64 {
        if self.count[i] == 0 {
            0.0
        } else {
            self.grad_sum[i] / self.count[i] as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensifyOptions {
    /// Mean screen-space position gradient above which a Gaussian densifies.
    pub grad_threshold: f64,
    /// Clone/split boundary as a fraction of the scene extent.
    pub scale_fraction: f64,
    pub prune_opacity: f64,
    pub split_divisor: f64,
    /// Scene extent; derived from the Gaussian means when `None`.
    pub extent: Option<f64>,
    pub seed: u64,
}

impl Default for DensifyOptions {
    fn default() -> Self {
        Self {
            grad_threshold: 2e-4,
            scale_fraction: 0.01,
            prune_opacity: 0.005,
            split_divisor: 1.6,
            extent: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DensifyReport {
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
    /// For each output Gaussian, the input Gaussian whose optimizer state it
    /// keeps; `None` for newly created ones.
    pub origins: Vec<Option<usize>>,
}

impl DensifyReport {
    pub fn to_kv(&self) -> String {
        format!(
            "densify_cloned = {}\ndensify_split = {}\ndensify_pruned = {}\n",
            self.cloned, self.split, self.pruned
        )
    }
}

/// Largest distance of a Gaussian mean from the centroid of all means.
pub fn scene_extent<T: Real>(scene: &[Gaussian3D<T>]) -> f64 {
    if scene.is_empty() {
        return 1.0;
    }
    let n = scene.len() as f64;
    let mut c = [0.0; 3];
    for g in scene {
        for i in 0..3 {
            c[i] += g.mean[i].as_f64() / n;
        }
    }
    let r = scene
        .iter()
        .map(|g| (0..3).map(|i| (g.mean[i].as_f64() - c[i]).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

/// Prunes near-transparent Gaussians, clones small high-gradient ones and
/// splits large high-gradient ones. Pruning wins over densification.
/// Survivors keep their order; clones and then split children are appended.
pub fn density_control<T: Real>(
    scene: &[Gaussian3D<T>],
    stats: &DensifyStats,
    opts: &DensifyOptions,
) -> (Vec<Gaussian3D<T>>, DensifyReport) {
    let extent = opts.extent.unwrap_or_else(|| scene_extent(scene));
    let scale_limit = opts.scale_fraction * extent;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = DensifyReport::default();
    let mut out = Vec::with_capacity(scene.len());
    let mut clones = Vec::new();
    let mut children = Vec::new();

    for (i, g) in scene.iter().enumerate() {
        let opacity = crate::model::sigmoid(g.opacity_logit).as_f64();
        if opacity < opts.prune_opacity {
            report.pruned += 1;
            continue;
        }
        let hot = i < stats.len() && stats.mean_grad(i) > opts.grad_threshold;
        let max_scale = g.log_scale.iter().map(|s| s.as_f64().exp()).fold(0.0, f64::max);
        if hot && max_scale > scale_limit {
            report.split += 1;
            children.extend(split(g, opts.split_divisor, &mut rng));
            continue;
        }
        out.push(g.clone());
        report.origins.push(Some(i));
        if hot {
            report.cloned += 1;
            clones.push(g.clone());
        }
    }
    report
        .origins
        .extend(std::iter::repeat_n(None, clones.len() + children.len()));
    out.extend(clones);
    out.extend(children);
    (out, report)
}

fn split<T: Real>(g: &Gaussian3D<T>, divisor: f64, rng: &mut ChaCha8Rng) -> [Gaussian3D<T>; 2] {
    let n = g.rotation.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
    let q = g.rotation.map(|v| v.as_f64() / n);
    let r = quat_to_mat(&q);
    let scale = g.log_scale.map(|s| s.as_f64().exp());
    let shrink = T::lit(divisor.ln());
    [0, 1].map(|_| {
        let z: [f64; 3] = [0, 1, 2].map(|i| {
            let n: f64 = StandardNormal.sample(rng);
            scale[i] * n
        });
        let off = mat_vec3(&r, &z);
        let mut c = g.clone();
        for i in 0..3 {
            c.mean[i] = c.mean[i] + T::lit(off[i]);
            c.log_scale[i] = c.log_scale[i] - shrink;
        }
        c
    })
}
