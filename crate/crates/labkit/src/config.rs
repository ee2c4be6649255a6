use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::{LabError, Result};

/// Grid size preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

/// An experiment configuration with scale-dependent defaults.
pub trait Experiment: Serialize + DeserializeOwned {
    fn defaults(scale: Scale) -> Self;

    fn validate(&self) -> Result<()> {
        Ok(())
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn read_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => Ok(toml::from_str::<Value>(&text)?),
        _ => Ok(serde_json::from_str(&text)?),
    }
}

/// Defaults for `scale`, overlaid key by key with the JSON or TOML file at `path`.
pub fn load_config<T: Experiment>(path: Option<&Path>, scale: Scale) -> Result<T> {
    let mut value = serde_json::to_value(T::defaults(scale))?;
    if let Some(p) = path {
        merge(&mut value, read_value(p)?);
    }
    let cfg: T = serde_json::from_value(value).map_err(|e| LabError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Where and how a run executes.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
}

impl RunContext {
    pub fn new(seed: u64, out: impl Into<PathBuf>, workers: usize) -> Self {
        Self {
            seed,
            out: out.into(),
            workers: workers.max(1),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn ensure_out(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(|e| LabError::io(&self.out, e))
    }

    /// `f` over `items` on `workers` threads; results keep the order of `items`.
    pub fn par_map<T, R, F>(&self, items: Vec<T>, f: F) -> Result<Vec<R>>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        if self.workers == 1 {
            return Ok(items.into_iter().map(f).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(self.workers).build()?;
        Ok(pool.install(|| items.into_par_iter().map(f).collect()))
    }
}

pub(crate) fn nonempty<T>(v: &[T], name: &str) -> Result<()> {
    if v.is_empty() {
        Err(LabError::Grid(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

pub(crate) fn positive(v: usize, name: &str) -> Result<()> {
    if v == 0 {
        Err(LabError::Grid(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}
