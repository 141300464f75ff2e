//! Experiment configuration: one JSON document per run. See
//! `docs/config-schema.md` for the field reference.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wmbench::attack::{Denoiser, ScheduleParams};
use wmbench::substitute::{PgdConfig, TradeoffConfig, TrainConfig};
use wmbench::watermark::{read_key_file, SchemeKind, WatermarkKey, WatermarkScheme};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Embed,
    Detect,
    AttackPurify,
    AttackAdv,
    AttackSpoof,
    Mitigate,
    EvalRoc,
    TheoryBound,
    Tradeoff,
    Certify,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Embed,
        ExperimentKind::Detect,
        ExperimentKind::AttackPurify,
        ExperimentKind::AttackAdv,
        ExperimentKind::AttackSpoof,
        ExperimentKind::Mitigate,
        ExperimentKind::EvalRoc,
        ExperimentKind::TheoryBound,
        ExperimentKind::Tradeoff,
        ExperimentKind::Certify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Embed => "embed",
            ExperimentKind::Detect => "detect",
            ExperimentKind::AttackPurify => "attack-purify",
            ExperimentKind::AttackAdv => "attack-adv",
            ExperimentKind::AttackSpoof => "attack-spoof",
            ExperimentKind::Mitigate => "mitigate",
            ExperimentKind::EvalRoc => "eval-roc",
            ExperimentKind::TheoryBound => "theory-bound",
            ExperimentKind::Tradeoff => "tradeoff",
            ExperimentKind::Certify => "certify",
        }
    }

    /// Whether the experiment reads an image corpus.
    pub fn uses_corpus(self) -> bool {
        !matches!(
            self,
            ExperimentKind::EvalRoc | ExperimentKind::TheoryBound | ExperimentKind::Tradeoff
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Directory of PNG/PGM/PPM images; the synthetic corpus is used when absent.
    #[serde(default)]
    pub input_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Write SVG renderings next to the CSVs.
    #[serde(default)]
    pub svg: bool,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub detect: DetectParams,
    #[serde(default)]
    pub purify: PurifyParams,
    #[serde(default)]
    pub adversarial: AdversarialParams,
    #[serde(default)]
    pub spoof: SpoofParams,
    #[serde(default)]
    pub mitigate: MitigateParams,
    #[serde(default)]
    pub roc: RocParams,
    #[serde(default)]
    pub theory: TheoryParams,
    #[serde(default)]
    pub tradeoff: TradeoffConfig,
    #[serde(default)]
    pub certify: CertifyParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusConfig {
    /// Image count; `None` picks the experiment's own default.
    pub n: Option<usize>,
    pub size: usize,
    pub channels: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n: None,
            size: wmbench::synth::DEFAULT_SIZE,
            channels: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Defaults to the scheme's calibrated strength.
    pub strength: Option<f64>,
    /// 64 binary digits.
    pub key: Option<String>,
    /// File with one key per line; the first key is used.
    pub key_file: Option<PathBuf>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            kind: SchemeKind::SsDct,
            strength: None,
            key: None,
            key_file: None,
        }
    }
}

impl SchemeConfig {
    pub fn scheme(&self) -> Result<WatermarkScheme> {
        let strength = self.strength.unwrap_or(self.kind.default_strength());
        Ok(WatermarkScheme::new(self.kind, strength)?)
    }

    /// The configured key, or one derived from `seed` when none is given.
    pub fn key(&self, seed: u64) -> Result<WatermarkKey> {
        if let Some(text) = &self.key {
            return Ok(WatermarkKey::parse(text)?);
        }
        if let Some(path) = &self.key_file {
            let keys = read_key_file(path)?;
            return keys
                .into_iter()
                .next()
                .ok_or_else(|| CliError::invalid("scheme.key_file", "contains no keys"));
        }
        Ok(WatermarkKey::from_seed(seed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectParams {
    /// Confidence at or above which an image is reported as watermarked.
    pub threshold: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self { threshold: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PurifyParams {
    pub ts: Vec<f64>,
    pub denoisers: Vec<Denoiser>,
    pub schedule: ScheduleParams,
}

impl Default for PurifyParams {
    fn default() -> Self {
        Self {
            ts: vec![0.05, 0.1, 0.2, 0.3],
            denoisers: vec![Denoiser::wavelet_default(), Denoiser::tv_default()],
            schedule: ScheduleParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackDirection {
    /// Push watermarked images toward the clean class.
    Removal,
    /// Push clean images toward the watermarked class.
    Spoof,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdversarialParams {
    /// Corpus images per class used to train the substitute.
    pub train_n: usize,
    /// Held-out corpus images attacked and scored.
    pub test_n: usize,
    /// ℓ∞ budgets in units of 1/255.
    pub epsilons_255: Vec<f64>,
    pub direction: AttackDirection,
    /// Luma thumbnail side; `None` keeps the full image resolution.
    pub downsample: Option<usize>,
    pub dct_k: usize,
    pub train: TrainConfig,
    /// `epsilon` is overridden per budget.
    pub pgd: PgdConfig,
}

impl Default for AdversarialParams {
    fn default() -> Self {
        Self {
            train_n: 120,
            test_n: 20,
            epsilons_255: vec![0.0, 2.0, 4.0, 8.0],
            direction: AttackDirection::Removal,
            downsample: None,
            dct_k: 64,
            train: TrainConfig::default(),
            pgd: PgdConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpoofParams {
    pub mixup_alpha: f64,
    pub noise_std: (f64, f64),
}

impl Default for SpoofParams {
    fn default() -> Self {
        let d = wmbench::attack::SpoofConfig::default();
        Self {
            mixup_alpha: d.mixup_alpha,
            noise_std: d.noise_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MitigateParams {
    pub jpeg_qualities: Vec<u32>,
    pub blur_kernels: Vec<usize>,
}

impl Default for MitigateParams {
    fn default() -> Self {
        Self {
            jpeg_qualities: vec![90, 75, 50, 25, 10],
            blur_kernels: vec![3, 5, 7, 9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RocParams {
    /// CSV with columns `id,label,score` (label 1 = positive).
    pub scores: Option<PathBuf>,
    /// FPR levels reported in the summary.
    pub fpr_levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryParams {
    pub schedule: ScheduleParams,
    /// Unit-scale pixel Wasserstein distances for the purification bound.
    pub ws: Vec<f64>,
    pub ts: Vec<f64>,
    /// Latent distances for the robustness bound.
    pub latent_ws: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl Default for TheoryParams {
    fn default() -> Self {
        Self {
            schedule: ScheduleParams::default(),
            ws: (1..=40).map(|i| i as f64 * 0.25).collect(),
            ts: vec![0.1, 0.2, 0.3],
            latent_ws: (1..=40).map(|i| i as f64 * 0.5).collect(),
            sigmas: vec![1.0, 2.0, 5.0, 10.0, 20.0],
            alphas: vec![0.0, 0.01, 0.05],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyParams {
    pub schemes: Vec<SchemeKind>,
    pub ts: Vec<f64>,
    pub denoisers: Vec<Denoiser>,
    pub schedule: ScheduleParams,
    /// Allowed shortfall of the measured error below the bound.
    pub slack: f64,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self {
            schemes: vec![SchemeKind::SsDct, SchemeKind::DwtDct, SchemeKind::DwtDctSvd],
            ts: vec![0.1, 0.2, 0.3],
            denoisers: vec![Denoiser::wavelet_default(), Denoiser::tv_default()],
            schedule: ScheduleParams::default(),
            slack: 0.05,
        }
    }
}

impl ExperimentConfig {
    /// Minimal config for `kind` writing to `output_dir`.
    pub fn new(kind: ExperimentKind, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            kind,
            input_dir: None,
            output_dir: output_dir.into(),
            seed: 0,
            svg: false,
            corpus: CorpusConfig::default(),
            scheme: SchemeConfig::default(),
            detect: DetectParams::default(),
            purify: PurifyParams::default(),
            adversarial: AdversarialParams::default(),
            spoof: SpoofParams::default(),
            mitigate: MitigateParams::default(),
            roc: RocParams::default(),
            theory: TheoryParams::default(),
            tradeoff: TradeoffConfig::default(),
            certify: CertifyParams::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::invalid("config", e.to_string()))
    }

    /// Read a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid("config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(p) = self.input_dir.as_mut() {
            fix(p);
        }
        if let Some(p) = self.scheme.key_file.as_mut() {
            fix(p);
        }
        if let Some(p) = self.roc.scores.as_mut() {
            fix(p);
        }
    }

    /// Canonical JSON used for hashing and the manifest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Image count for this experiment: explicit `corpus.n`, else a
    /// per-experiment default.
    pub fn corpus_size(&self) -> usize {
        self.corpus.n.unwrap_or(match self.kind {
            ExperimentKind::AttackAdv => self.adversarial.train_n + self.adversarial.test_n,
            _ => 100,
        })
    }

    /// Check every parameter block, collecting all problems. Paths must exist;
    /// nothing is created.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let mut check = |field: &str, r: std::result::Result<(), String>| {
            if let Err(e) = r {
                errs.push(format!("{field}: {e}"));
            }
        };
        let ok = |cond: bool, msg: &str| if cond { Ok(()) } else { Err(msg.to_string()) };

        if let Some(dir) = &self.input_dir {
            check("input_dir", ok(dir.is_dir(), &format!("{} is not a directory", dir.display())));
        }
        if self.output_dir.as_os_str().is_empty() {
            check("output_dir", Err("must not be empty".into()));
        } else if self.output_dir.exists() && !self.output_dir.is_dir() {
            check("output_dir", Err(format!("{} exists and is not a directory", self.output_dir.display())));
        }
        if self.kind.uses_corpus() && self.input_dir.is_none() {
            check("corpus.size", ok(self.corpus.size >= 16, "must be >= 16"));
            check(
                "corpus.channels",
                ok(matches!(self.corpus.channels, 1 | 3), "must be 1 or 3"),
            );
        }
        if let Some(n) = self.corpus.n {
            check("corpus.n", ok(n >= 1, "must be >= 1"));
        }
        check("scheme", self.scheme.scheme().map(|_| ()).map_err(|e| e.to_string()));
        if self.scheme.key.is_some() && self.scheme.key_file.is_some() {
            check("scheme", Err("give either key or key_file, not both".into()));
        }
        if let Some(p) = &self.scheme.key_file {
            check("scheme.key_file", ok(p.is_file(), &format!("{} not found", p.display())));
        }
        check("scheme.key", self.scheme.key(0).map(|_| ()).map_err(|e| e.to_string()));
        check(
            "detect.threshold",
            ok((0.0..=1.0).contains(&self.detect.threshold), "must lie in [0, 1]"),
        );

        // Every block is checked whatever the kind, so a config that is valid
        // for one subcommand stays valid when its kind is switched.
        {
            check("purify.ts", check_ts(&self.purify.ts));
            check("purify.denoisers", check_denoisers(&self.purify.denoisers));
            check("purify.schedule", self.purify.schedule.build().map(|_| ()).map_err(|e| e.to_string()));
        }
        {
            let c = &self.certify;
            check("certify.ts", check_ts(&c.ts));
            check("certify.denoisers", check_denoisers(&c.denoisers));
            check("certify.schedule", c.schedule.build().map(|_| ()).map_err(|e| e.to_string()));
            check("certify.schemes", ok(!c.schemes.is_empty(), "must not be empty"));
            check("certify.slack", ok(c.slack >= 0.0 && c.slack.is_finite(), "must be >= 0"));
        }
        {
            let a = &self.adversarial;
            check(
                "adversarial.train_n",
                ok(a.train_n >= wmbench::substitute::MIN_PER_CLASS, "need >= 100 training images per class"),
            );
            check("adversarial.test_n", ok(a.test_n >= 2, "must be >= 2"));
            check(
                "adversarial.epsilons_255",
                ok(
                    !a.epsilons_255.is_empty()
                        && a.epsilons_255.iter().all(|e| (0.0..=255.0).contains(e)),
                    "need values in [0, 255]",
                ),
            );
            check("adversarial.dct_k", ok(a.dct_k <= 64, "must be <= 64"));
            if let Some(d) = a.downsample {
                check("adversarial.downsample", ok(d >= 1, "must be >= 1"));
            }
            let mut pgd = a.pgd;
            pgd.epsilon = 8.0 / 255.0;
            check("adversarial.pgd", pgd.validate().map_err(|e| e.to_string()));
            if self.kind == ExperimentKind::AttackAdv {
                check(
                    "corpus.n",
                    ok(self.corpus_size() >= a.train_n + a.test_n, "smaller than train_n + test_n"),
                );
            }
        }
        {
            let cfg = wmbench::attack::SpoofConfig {
                mixup_alpha: self.spoof.mixup_alpha,
                noise_std: self.spoof.noise_std,
                seed: 0,
            };
            check("spoof", cfg.validate().map_err(|e| e.to_string()));
        }
        {
            let m = &self.mitigate;
            check(
                "mitigate.jpeg_qualities",
                ok(m.jpeg_qualities.iter().all(|q| (1..=100).contains(q)), "need qualities in 1..=100"),
            );
            check(
                "mitigate.blur_kernels",
                ok(m.blur_kernels.iter().all(|k| *k >= 3 && k % 2 == 1), "need odd kernels >= 3"),
            );
            check(
                "mitigate",
                ok(!m.jpeg_qualities.is_empty() || !m.blur_kernels.is_empty(), "nothing to run"),
            );
        }
        match &self.roc.scores {
            None if self.kind == ExperimentKind::EvalRoc => check("roc.scores", Err("required for eval-roc".into())),
            None => {}
            Some(p) => check("roc.scores", ok(p.is_file(), &format!("{} not found", p.display()))),
        }
        {
            let t = &self.theory;
            check("theory.schedule", t.schedule.build().map(|_| ()).map_err(|e| e.to_string()));
            check("theory.ts", check_ts(&t.ts));
            check("theory.ws", check_nonneg(&t.ws));
            check("theory.latent_ws", check_nonneg(&t.latent_ws));
            check(
                "theory.sigmas",
                ok(!t.sigmas.is_empty() && t.sigmas.iter().all(|s| *s > 0.0 && s.is_finite()), "need values > 0"),
            );
            check(
                "theory.alphas",
                ok(!t.alphas.is_empty() && t.alphas.iter().all(|a| (0.0..1.0).contains(a)), "need values in [0, 1)"),
            );
        }
        {
            check("tradeoff", self.tradeoff.validate().map_err(|e| e.to_string()));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

fn check_ts(ts: &[f64]) -> std::result::Result<(), String> {
    if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        Err("need values in (0, 1)".into())
    } else {
        Ok(())
    }
}

fn check_nonneg(xs: &[f64]) -> std::result::Result<(), String> {
    if xs.is_empty() || xs.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        Err("need finite values >= 0".into())
    } else {
        Ok(())
    }
}

fn check_denoisers(ds: &[Denoiser]) -> std::result::Result<(), String> {
    if ds.is_empty() {
        return Err("must not be empty".into());
    }
    ds.iter().try_for_each(|d| d.validate().map_err(|e| e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_gets_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"kind": "attack-purify", "output_dir": "out"}"#).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::AttackPurify);
        assert_eq!(cfg.purify.ts, vec![0.05, 0.1, 0.2, 0.3]);
        assert_eq!(cfg.corpus_size(), 100);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"kind": "embed", "output_dir": "o", "bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "nope", "output_dir": "o"}"#).is_err());
    }

    #[test]
    fn validation_collects_every_error() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::AttackAdv, "out");
        cfg.adversarial.train_n = 5;
        cfg.adversarial.epsilons_255 = vec![-1.0];
        cfg.scheme.key = Some("101".into());
        let errs = cfg.validate().unwrap_err();
        assert!(errs.len() >= 3, "{errs:?}");
    }

    #[test]
    fn eval_roc_requires_scores() {
        let cfg = ExperimentConfig::new(ExperimentKind::EvalRoc, "out");
        let errs = cfg.validate().unwrap_err();
        assert!(errs[0].starts_with("roc.scores"));
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ExperimentConfig::new(ExperimentKind::Certify, "out");
        let back = ExperimentConfig::from_json(&cfg.canonical_json()).unwrap();
        assert_eq!(cfg, back);
    }
}
