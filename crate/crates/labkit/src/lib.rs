//! Desk-scale reproduction harness: seeded experiment grids, CSV tables and SVG charts.

pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod seeds;

use thiserror::Error;

pub use config::{load_config, Experiment, RunContext, Scale};
pub use seeds::derive_seed;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Net(#[from] finprec::net::NetError),
    #[error(transparent)]
    Grad(#[from] finprec::graddesc::GradError),
    #[error(transparent)]
    Region(#[from] finprec::regions::RegionError),
    #[error(transparent)]
    Fp(#[from] finprec::fparith::FpError),
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl LabError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
