//! Central finite-difference check of the analytic training gradients.

use crate::approx::RecipMode;
use crate::backward::{scene_gradients, scene_loss, TrainConfig, View};
use crate::binning::Footprint;
use crate::error::Result;
use crate::model::Gaussian3D;

pub const DEFAULT_STEP: f64 = 1e-4;
pub const DEFAULT_REL_TOL: f64 = 1e-3;
pub const DEFAULT_ABS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradRow {
    pub gaussian: usize,
    pub param: &'static str,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradCheckReport {
    pub loss: f64,
    pub rows: Vec<GradRow>,
}

impl GradCheckReport {
    pub fn failures(&self) -> impl Iterator<Item = &GradRow> {
        self.rows.iter().filter(|r| !r.ok)
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.ok)
    }

    /// Largest relative error among rows whose gradient magnitude exceeds
    /// `floor`.
    pub fn max_rel_err(&self, floor: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.analytic.abs().max(r.numeric.abs()) > floor)
            .map(|r| r.rel_err)
            .fold(0.0, f64::max)
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>5} {:<14} {:>14} {:>14} {:>10}\n",
            "gauss", "parameter", "analytic", "numeric", "rel_err"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:>5} {:<14} {:>14.6e} {:>14.6e} {:>10.2e}{}\n",
                r.gaussian,
                r.param,
                r.analytic,
                r.numeric,
                r.rel_err,
                if r.ok { "" } else { "  FAIL" }
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
        }
    }
}

/// Training configuration for gradient checks: exact reciprocals and none of
/// the hard cutoffs (early termination, the 1/255 alpha floor, the integer
/// box radius) that make the loss piecewise.
pub fn exact_config(base: &TrainConfig) -> TrainConfig {
    TrainConfig {
        alpha_min: 0.0,
        termination: 0.0,
        recip: RecipMode::Exact,
        footprint: Footprint::Unbounded,
        ..*base
    }
}

/// Compares every raw-parameter gradient against a central difference of the
/// forward loss.
pub fn check_gradients(
    scene: &[Gaussian3D<f64>],
    views: &[View<f64>],
    cfg: &TrainConfig,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let rep = scene_gradients(scene, views, cfg)?;
    let mut rows = Vec::new();
    let mut work = scene.to_vec();
    for (gi, g) in scene.iter().enumerate() {
        let analytic = rep.grads.params[gi].flat();
        for (p, &a) in analytic.iter().enumerate() {
            let x = g.param(p);
            *work[gi].param_mut(p) = x + opts.step;
            let up = scene_loss(&work, views, cfg)?;
            *work[gi].param_mut(p) = x - opts.step;
            let down = scene_loss(&work, views, cfg)?;
            *work[gi].param_mut(p) = x;
            let numeric = (up - down) / (2.0 * opts.step);
            let abs_err = (a - numeric).abs();
            let scale = a.abs().max(numeric.abs());
            let rel_err = if scale > 0.0 { abs_err / scale } else { 0.0 };
            rows.push(GradRow {
                gaussian: gi,
                param: Gaussian3D::<f64>::param_name(p),
                analytic: a,
                numeric,
                abs_err,
                rel_err,
                ok: rel_err <= opts.rel_tol || abs_err <= opts.abs_tol,
            });
        }
    }
    Ok(GradCheckReport { loss: rep.loss, rows })
}
