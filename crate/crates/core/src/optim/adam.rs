use crate::backward::GaussianGrad;
use crate::error::{Error, Result};
use crate::model::{Gaussian3D, ParamGroup};
use crate::real::Real;

/// Learning-rate multipliers per parameter group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupLr {
    pub position: f64,
    pub sh: f64,
    pub opacity: f64,
    pub scale: f64,
    pub rotation: f64,
}

impl Default for GroupLr {
    fn default() -> Self {
        Self {
            position: 0.1,
            sh: 1.0,
            opacity: 5.0,
            scale: 0.5,
            rotation: 0.1,
        }
    }
}

impl GroupLr {
    pub fn uniform() -> Self {
        Self {
            position: 1.0,
            sh: 1.0,
            opacity: 1.0,
            scale: 1.0,
            rotation: 1.0,
        }
    }

    pub fn get(&self, g: ParamGroup) -> f64 {
        match g {
            ParamGroup::Position => self.position,
            ParamGroup::Sh => self.sh,
            ParamGroup::Opacity => self.opacity,
            ParamGroup::Scale => self.scale,
            ParamGroup::Rotation => self.rotation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub groups: GroupLr,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            groups: GroupLr::default(),
        }
    }
}

/// Moments for every raw parameter, laid out like [`Gaussian3D::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(scene: &[Gaussian3D<T>], config: AdamConfig) -> Self {
        let zeros = |g: &Gaussian3D<T>| vec![T::zero(); g.param_count()];
        Self {
            config,
            m: scene.iter().map(zeros).collect(),
            v: scene.iter().map(zeros).collect(),
            t: 0,
        }
    }

    /// Rebuilds the moments after the Gaussian set changed. `origins[i]` names
    /// the old Gaussian whose moments the new Gaussian `i` inherits; `None`
    /// starts from zero.
    pub fn remap(&mut self, scene: &[Gaussian3D<T>], origins: &[Option<usize>]) {
        let pick = |src: &Vec<Vec<T>>, i: usize, o: Option<usize>| match o {
            Some(j) if src[j].len() == scene[i].param_count() => src[j].clone(),
            _ => vec![T::zero(); scene[i].param_count()],
        };
        let m = origins.iter().enumerate().map(|(i, &o)| pick(&self.m, i, o)).collect();
        let v = origins.iter().enumerate().map(|(i, &o)| pick(&self.v, i, o)).collect();
        self.m = m;
        self.v = v;
    }
}

/// One bias-corrected Adam update. Quaternions whose components moved are
/// re-normalised.
pub fn adam_step<T: Real>(
    scene: &mut [Gaussian3D<T>],
    grads: &[GaussianGrad<T>],
    state: &mut AdamState<T>,
) -> Result<()> {
    if scene.len() != grads.len() || scene.len() != state.m.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} gaussians, {} gradients, {} optimizer slots",
            scene.len(),
            grads.len(),
            state.m.len()
        )));
    }
    let flat: Vec<Vec<T>> = grads.iter().map(|g| g.flat()).collect();
    for (i, (g, f)) in scene.iter().zip(&flat).enumerate() {
        if f.len() != g.param_count() || state.m[i].len() != g.param_count() {
            return Err(Error::DimensionMismatch(format!("gaussian {i}: parameter count")));
        }
        if let Some(p) = f.iter().position(|v| v.is_nan()) {
            return Err(Error::NanGradient {
                gaussian: i,
                param: Gaussian3D::<T>::param_name(p),
            });
        }
    }

    let c = state.config;
    state.t += 1;
    let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
    let bc1 = T::one() - T::lit(c.beta1.powi(state.t as i32));
    let bc2 = T::lit(1.0 - c.beta2.powi(state.t as i32));
    let eps = T::lit(c.eps);
    for (i, g) in scene.iter_mut().enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        let mut rotated = false;
        for (p, &gp) in flat[i].iter().enumerate() {
            m[p] = b1 * m[p] + (T::one() - b1) * gp;
            v[p] = b2 * v[p] + (T::one() - b2) * gp * gp;
            let step = T::lit(c.lr * c.groups.get(Gaussian3D::<T>::param_group(p))) * (m[p] / bc1)
                / ((v[p] / bc2).sqrt() + eps);
            if step != T::zero() {
                *g.param_mut(p) = g.param(p) - step;
                rotated |= Gaussian3D::<T>::param_group(p) == ParamGroup::Rotation;
            }
        }
        if rotated {
            let q = &mut g.rotation;
            let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
            if !(n > T::zero()) {
                return Err(Error::DegenerateRotation);
            }
            for e in q.iter_mut() {
                *e = *e / n;
            }
        }
    }
    Ok(())
}
