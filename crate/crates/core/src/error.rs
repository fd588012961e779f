use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate rotation: quaternion has zero norm")]
    DegenerateRotation,

    #[error("reciprocal domain violation: alpha = {0} is outside [0, 0.99]")]
    ReciprocalDomain(f64),

    #[error("spherical harmonics: {got} coefficients do not match degree {degree} (expected {expected})")]
    ShCoefficients { degree: usize, expected: usize, got: usize },

    #[error("unsupported spherical harmonics degree {0} (expected 0..=3)")]
    ShDegree(usize),

    #[error("invalid camera: {0}")]
    Camera(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite gradient for gaussian {gaussian}, parameter {param}")]
    NanGradient { gaussian: usize, param: &'static str },

    #[error("ply: {message} (at byte offset {offset})")]
    Ply { offset: u64, message: String },

    #[error("image: {0}")]
    Image(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
