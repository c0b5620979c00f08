//! Batch operations behind the command-line tool: synthetic data
//! generation, appearance training, inference and evaluation. Everything
//! here is a plain library function so tests and examples can drive the
//! same code paths as the CLI.

mod config;
mod evaluate;
mod road3d;
mod text2d;

pub use config::{SynthConstraints, TextConfigFile};
pub use evaluate::{evaluate, EvalTask, EvaluateOutput, EvaluateRequest};
pub use road3d::{
    infer3d, synth3d, train_appearance, Infer3dOutput, Infer3dRequest, RoadItem, Synth3dOutput,
    Synth3dRequest, TrainRequest,
};
pub use text2d::{
    infer2d, synth2d, ChainRun, Infer2dOutput, Infer2dRequest, Synth2dOutput, Synth2dRequest,
    SynthItem,
};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Result;

/// Derives the seed of chain `i` from the master seed. Chains within one
/// command always use this splitting rule.
pub fn chain_seed(master: u64, i: u64) -> u64 {
    master ^ i
}

/// Record of one command invocation: enough to reproduce the run bit-exactly
/// (command, resolved config, seed, inputs) plus checksums of everything
/// written. Saved atomically at the end of the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub out_dir: String,
    pub started: String,
    pub finished: String,
    /// File name -> SHA-256 of the written artifact.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn begin(
        command: &str,
        config: serde_json::Value,
        seed: u64,
        inputs: Vec<String>,
        out_dir: &Path,
    ) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            config,
            seed,
            inputs,
            out_dir: out_dir.display().to_string(),
            started: chrono::Utc::now().to_rfc3339(),
            finished: String::new(),
            artifacts: BTreeMap::new(),
        }
    }

    /// Checksums a written artifact into the manifest.
    pub fn record(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.artifacts.insert(name, hex);
        Ok(())
    }

    /// Stamps the end time and writes `manifest.json` (or the given name)
    /// atomically into the output directory.
    pub fn finish(mut self, dir: &Path, name: &str) -> Result<PathBuf> {
        self.finished = chrono::Utc::now().to_rfc3339();
        let path = dir.join(name);
        crate::io::write_json_atomic(&path, &serde_json::to_value(&self)?)?;
        Ok(path)
    }
}

/// Maps `f` over `items` on up to `available_parallelism` worker threads,
/// returning results in input order. Each job's result depends only on its
/// input, so scheduling never changes outputs.
pub(crate) fn parallel_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let n = items.len();
    if n == 0 {
        return Vec::new();
    }
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(n);
    let queue: std::sync::Mutex<std::collections::VecDeque<(usize, T)>> =
        std::sync::Mutex::new(items.into_iter().enumerate().collect());
    let results: std::sync::Mutex<Vec<Option<R>>> =
        std::sync::Mutex::new((0..n).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let job = queue.lock().unwrap().pop_front();
                match job {
                    Some((i, item)) => {
                        let r = f(item);
                        results.lock().unwrap()[i] = Some(r);
                    }
                    None => break,
                }
            });
        }
    });

    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}
