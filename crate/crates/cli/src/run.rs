//! Run driver: validate everything, then execute one experiment and record
//! a manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use wmbench::rng::derive_seed;
use wmbench::watermark::{SchemeKind, WatermarkScheme};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::corpus::{self, Corpus};
use crate::error::{CliError, Result};
use crate::experiments::{self, Scores};
use crate::manifest::{ManifestRow, RunManifest, RunStatus};
use crate::output::{write_atomic, Table};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Replaces the config's seed.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    /// Reject corpus images whose sides are not block multiples.
    pub strict_dims: bool,
}

/// Inputs loaded during validation.
pub(crate) struct Inputs {
    pub corpus: Option<Corpus>,
    pub scores: Option<Scores>,
}

/// Shared state for one run.
pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub out_dir: PathBuf,
    seeds: Mutex<BTreeMap<String, u64>>,
    outputs: Mutex<Vec<String>>,
    rows: Mutex<Vec<ManifestRow>>,
}

impl Ctx {
    fn new(cfg: ExperimentConfig) -> Self {
        let out_dir = cfg.output_dir.clone();
        Self {
            cfg,
            out_dir,
            seeds: Mutex::new(BTreeMap::new()),
            outputs: Mutex::new(Vec::new()),
            rows: Mutex::new(Vec::new()),
        }
    }

    /// Seed for `stage`, derived from the run seed and recorded in the manifest.
    pub fn seed(&self, stage: &str) -> u64 {
        let s = derive_seed(self.cfg.seed, stage);
        self.seeds.lock().unwrap().insert(stage.to_string(), s);
        s
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Write `bytes` atomically under the output directory.
    pub fn emit(&self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.path(name), bytes)?;
        self.outputs.lock().unwrap().push(name.to_string());
        Ok(())
    }

    pub fn emit_table(&self, name: &str, table: &Table) -> Result<()> {
        self.emit(name, &table.to_csv()?)
    }

    /// SVG output, written only when the config asks for it.
    pub fn emit_svg(&self, name: &str, svg: impl FnOnce() -> String) -> Result<()> {
        if self.cfg.svg {
            self.emit(name, svg().as_bytes())?;
        }
        Ok(())
    }

    pub fn record(&self, id: impl Into<String>, values: &[(&str, String)]) {
        self.rows.lock().unwrap().push(ManifestRow {
            id: id.into(),
            values: values.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        });
    }
}

/// Map a core error into a stage failure.
pub trait StageExt<T> {
    fn stage(self, name: &str) -> Result<T>;
}

impl<T> StageExt<T> for wmbench::Result<T> {
    fn stage(self, name: &str) -> Result<T> {
        self.map_err(|source| CliError::Stage {
            stage: name.to_string(),
            source,
        })
    }
}

/// Map `f` over `items` on the current pool; results keep input order.
pub fn par_map<T: Sync, R: Send>(
    items: &[T],
    f: impl Fn(usize, &T) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()
}

/// Block multiple required by a scheme's transform layout.
fn dim_multiple(kind: SchemeKind) -> usize {
    match kind {
        SchemeKind::Lsb => 1,
        SchemeKind::SsDct => 8,
        SchemeKind::DwtDct | SchemeKind::DwtDctSvd => 16,
    }
}

/// Validate the config and load its inputs. Nothing is written.
pub(crate) fn prepare(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Inputs> {
    cfg.validate().map_err(CliError::Invalid)?;
    if opts.jobs == Some(0) {
        return Err(CliError::invalid("--jobs", "must be >= 1"));
    }
    let corpus = if cfg.kind.uses_corpus() {
        let n = cfg.corpus_size();
        let c = match &cfg.input_dir {
            Some(dir) => corpus::load_dir(dir, Some(n))?,
            None => {
                let seed = derive_seed(cfg.seed, "corpus");
                corpus::synth_corpus(n, seed, cfg.corpus.size, cfg.corpus.channels)?
            }
        };
        if cfg.kind == ExperimentKind::AttackAdv {
            let need = cfg.adversarial.train_n + cfg.adversarial.test_n;
            if c.len() < need {
                return Err(CliError::invalid(
                    "input_dir",
                    format!("{} images, attack-adv needs train_n + test_n = {need}", c.len()),
                ));
            }
        }
        let schemes: Vec<SchemeKind> = if cfg.kind == ExperimentKind::Certify {
            cfg.certify.schemes.clone()
        } else {
            vec![cfg.scheme.kind]
        };
        if opts.strict_dims {
            let m = schemes.iter().copied().map(dim_multiple).max().unwrap_or(1);
            corpus::check_dims(&c, m)?;
        }
        let probes: Vec<WatermarkScheme> = schemes.into_iter().map(WatermarkScheme::default_for).collect();
        corpus::check_capacity(&c, &probes, &cfg.scheme.key(0)?)?;
        Some(c)
    } else {
        None
    };
    let scores = match (&cfg.kind, &cfg.roc.scores) {
        (ExperimentKind::EvalRoc, Some(p)) => Some(experiments::roc::read_scores(p)?),
        _ => None,
    };
    Ok(Inputs { corpus, scores })
}

/// Validate, execute and record `cfg`. On a runtime failure the manifest is
/// still written, with the failing stage, before the error is returned.
pub fn run(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let inputs = prepare(&cfg, opts)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;

    let mut manifest = RunManifest::new(&cfg);
    let ctx = Ctx::new(cfg);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::invalid("--jobs", e.to_string()))?;
    let result = pool.install(|| experiments::execute(&ctx, inputs));

    manifest.stage_seeds = ctx.seeds.into_inner().unwrap();
    manifest.outputs = ctx.outputs.into_inner().unwrap();
    manifest.rows = ctx.rows.into_inner().unwrap();
    if let Err(e) = &result {
        manifest.status = RunStatus::Failed;
        manifest.failed_stage = Some(match e {
            CliError::Stage { stage, .. } | CliError::Assertion { stage, .. } => stage.clone(),
            _ => ctx.cfg.kind.name().to_string(),
        });
        manifest.error = Some(e.to_string());
    }
    write_atomic(&ctx.out_dir.join("manifest.json"), manifest.to_json().as_bytes())?;
    result.map(|_| manifest)
}

/// Load a config file and run it.
pub fn run_file(path: &Path, kind: Option<ExperimentKind>, opts: &RunOptions) -> Result<RunManifest> {
    let cfg = ExperimentConfig::load(path)?;
    if let Some(k) = kind {
        if k != cfg.kind {
            return Err(CliError::invalid(
                "kind",
                format!("config describes `{}` but `{k}` was requested", cfg.kind),
            ));
        }
    }
    run(cfg, opts)
}
