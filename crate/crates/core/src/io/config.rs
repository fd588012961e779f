//! Run configuration as TOML. Every key is optional; unknown keys are errors.
//!
//! ```toml
//! seed = 7
//! threads = 4
//!
//! [render]
//! tile = [64, 64]
//! z_tiles = 4
//! termination = 1e-4
//! hybrid = "fraction:0.25"   # "off" | "fraction:F" | "occlusion:THETA"
//! background = [0.0, 0.0, 0.0]
//! footprint = "sigma3"       # "sigma3" | "visible" | "unbounded"
//!
//! [train]
//! tile = [32, 64]
//! loss = "l1"                # "l1" | "l2"
//! reciprocal = "approx"      # "approx" | "exact"
//! iterations = 200
//! lr = 0.01
//! lr_position = 0.1          # multipliers of lr
//! densify_every = 0
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::approx::RecipMode;
use crate::backward::{Loss, TrainConfig};
use crate::binning::Footprint;
use crate::error::{Error, Result};
use crate::raster::{Hybrid, RenderConfig};

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub render: RenderSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSection {
    pub tile: Option<[usize; 2]>,
    pub z_tiles: Option<usize>,
    pub termination: Option<f64>,
    pub hybrid: Option<String>,
    pub background: Option<[f64; 3]>,
    pub footprint: Option<String>,
    pub alpha_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub tile: Option<[usize; 2]>,
    pub loss: Option<String>,
    pub background: Option<[f64; 3]>,
    pub offload_batch: Option<usize>,
    pub reciprocal: Option<String>,
    pub termination: Option<f64>,
    pub iterations: Option<usize>,
    pub lr: Option<f64>,
    pub lr_position: Option<f64>,
    pub lr_sh: Option<f64>,
    pub lr_opacity: Option<f64>,
    pub lr_scale: Option<f64>,
    pub lr_rotation: Option<f64>,
    pub densify_every: Option<u64>,
    pub grad_threshold: Option<f64>,
    pub prune_opacity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

pub fn parse_hybrid(s: &str) -> Result<Hybrid> {
    let bad = || Error::Config(format!("hybrid '{s}': expected off, fraction:F or occlusion:THETA"));
    let h = match s.split_once(':') {
        None if s == "off" => Hybrid::Off,
        Some(("fraction", v)) => Hybrid::FixedFraction(v.parse().map_err(|_| bad())?),
        Some(("occlusion", v)) => Hybrid::OcclusionThreshold(v.parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    };
    Ok(h)
}

pub fn parse_footprint(s: &str) -> Result<Footprint> {
    match s {
        "sigma3" => Ok(Footprint::Sigma3),
        "visible" => Ok(Footprint::Visible),
        "unbounded" => Ok(Footprint::Unbounded),
        _ => Err(Error::Config(format!(
            "footprint '{s}': expected sigma3, visible or unbounded"
        ))),
    }
}

pub fn parse_loss(s: &str) -> Result<Loss> {
    match s {
        "l1" => Ok(Loss::L1),
        "l2" => Ok(Loss::L2),
        _ => Err(Error::Config(format!("loss '{s}': expected l1 or l2"))),
    }
}

pub fn parse_recip(s: &str) -> Result<RecipMode> {
    match s {
        "approx" => Ok(RecipMode::Approx),
        "exact" => Ok(RecipMode::Exact),
        _ => Err(Error::Config(format!("reciprocal '{s}': expected approx or exact"))),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.render_config()?;
        cfg.train_config()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn render_config(&self) -> Result<RenderConfig> {
        let r = &self.render;
        let d = RenderConfig::default();
        let cfg = RenderConfig {
            tile: r.tile.map_or(d.tile, |t| (t[0], t[1])),
            z_tiles: r.z_tiles.unwrap_or(d.z_tiles),
            termination: r.termination.unwrap_or(d.termination),
            hybrid: r.hybrid.as_deref().map(parse_hybrid).transpose()?.unwrap_or(d.hybrid),
            background: r.background.unwrap_or(d.background),
            footprint: r
                .footprint
                .as_deref()
                .map(parse_footprint)
                .transpose()?
                .unwrap_or(d.footprint),
            alpha_min: r.alpha_min.unwrap_or(d.alpha_min),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let d = TrainConfig::default();
        let mut cfg = TrainConfig {
            tile: t.tile.map_or(d.tile, |v| (v[0], v[1])),
            loss: t.loss.as_deref().map(parse_loss).transpose()?.unwrap_or(d.loss),
            background: t.background.unwrap_or(d.background),
            offload_batch: t.offload_batch.unwrap_or(d.offload_batch),
            recip: t.reciprocal.as_deref().map(parse_recip).transpose()?.unwrap_or(d.recip),
            termination: t.termination.unwrap_or(d.termination),
            densify_every: t.densify_every.unwrap_or(d.densify_every),
            ..d
        };
        let a = &mut cfg.adam;
        a.lr = t.lr.unwrap_or(a.lr);
        let g = &mut a.groups;
        g.position = t.lr_position.unwrap_or(g.position);
        g.sh = t.lr_sh.unwrap_or(g.sh);
        g.opacity = t.lr_opacity.unwrap_or(g.opacity);
        g.scale = t.lr_scale.unwrap_or(g.scale);
        g.rotation = t.lr_rotation.unwrap_or(g.rotation);
        cfg.densify.grad_threshold = t.grad_threshold.unwrap_or(cfg.densify.grad_threshold);
        cfg.densify.prune_opacity = t.prune_opacity.unwrap_or(cfg.densify.prune_opacity);
        cfg.densify.seed = self.seed.unwrap_or(0);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c.render_config().unwrap(), RenderConfig::default());
        assert_eq!(c.train_config().unwrap(), TrainConfig::default());
    }

    #[test]
    fn parses_sections() {
        let c = RunConfig::from_toml(
            "seed = 3\n[render]\ntile = [16, 32]\nz_tiles = 4\nhybrid = \"occlusion:0.8\"\n[train]\nloss = \"l2\"\nreciprocal = \"exact\"\nlr = 0.05\n",
        )
        .unwrap();
        let r = c.render_config().unwrap();
        assert_eq!(
            (r.tile, r.z_tiles, r.hybrid),
            ((16, 32), 4, Hybrid::OcclusionThreshold(0.8))
        );
        let t = c.train_config().unwrap();
        assert_eq!((t.loss, t.recip, t.adam.lr), (Loss::L2, RecipMode::Exact, 0.05));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("sed = 3").is_err());
        assert!(RunConfig::from_toml("[render]\ntiles = [1, 1]").is_err());
        assert!(RunConfig::from_toml("[render]\nhybrid = \"half\"").is_err());
        assert!(RunConfig::from_toml("[train]\noffload_batch = 0").is_err());
    }

    #[test]
    fn hybrid_strings() {
        assert_eq!(parse_hybrid("off").unwrap(), Hybrid::Off);
        assert_eq!(parse_hybrid("fraction:0.25").unwrap(), Hybrid::FixedFraction(0.25));
        assert!(parse_hybrid("fraction:x").is_err());
    }
}
