use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("wave solver diverged at substep {substep} (t = {time:.3} s): non-finite {quantity}")]
    SolverDivergence {
        substep: usize,
        time: f64,
        quantity: &'static str,
    },

    #[error("resonant offshore length: cos(kL) = {cos_kl:e} (L = {offshore_length} m, quarter wavelength = {quarter_wavelength} m)")]
    Resonance {
        cos_kl: f64,
        offshore_length: f64,
        quarter_wavelength: f64,
    },

    #[error("infeasible USBL geometry: squared direction cosines sum to {0} >= 1")]
    InfeasibleGeometry(f64),

    #[error("replay buffer holds {available} transitions but {requested} were requested")]
    InsufficientData { available: usize, requested: usize },

    #[error("training diverged at epoch {epoch}, step {step}, agent {agent}: {detail}")]
    TrainingDivergence {
        epoch: usize,
        step: usize,
        agent: usize,
        detail: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SolverDivergence { .. } | Error::TrainingDivergence { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
