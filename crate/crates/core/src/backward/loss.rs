use crate::error::{Error, Result};
use crate::model::ImageRGB;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    #[default]
    L1,
    L2,
}

/// Mean per-channel loss and its gradient with respect to each rendered pixel.
pub fn loss_and_pixel_grads<T: Real>(
    rendered: &ImageRGB<T>,
    target: &ImageRGB<T>,
    loss: Loss,
) -> Result<(T, Vec<[T; 3]>)> {
    if rendered.width != target.width || rendered.height != target.height {
        return Err(Error::DimensionMismatch(format!(
            "rendered {}x{} vs target {}x{}",
            rendered.width, rendered.height, target.width, target.height
        )));
    }
    let n = T::lit((3 * rendered.width * rendered.height) as f64);
    let mut total = T::zero();
    let grads = rendered
        .data
        .iter()
        .zip(&target.data)
        .map(|(r, t)| {
            [0, 1, 2].map(|c| {
                let d = r[c] - t[c];
                match loss {
                    Loss::L1 => {
                        total = total + d.abs();
                        let s = if d > T::zero() {
                            T::one()
                        } else if d < T::zero() {
                            -T::one()
                        } else {
                            T::zero()
                        };
                        s / n
                    }
                    Loss::L2 => {
                        total = total + d * d;
                        T::lit(2.0) * d / n
                    }
                }
            })
        })
        .collect();
    Ok((total / n, grads))
}
