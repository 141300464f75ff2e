use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use wmbench_cli::{run, CliError, ExperimentConfig, ExperimentKind, RunOptions, RunStatus};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wmbench"))
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

/// Small config per subcommand; each one finishes in a few seconds.
fn small_config(kind: ExperimentKind) -> Value {
    let mut v = json!({ "kind": kind.name(), "output_dir": "out", "seed": 5 });
    let extra = match kind {
        ExperimentKind::Embed | ExperimentKind::Detect | ExperimentKind::AttackSpoof => {
            json!({ "corpus": { "n": 3, "size": 64 } })
        }
        ExperimentKind::Mitigate => json!({
            "corpus": { "n": 3, "size": 64 },
            "mitigate": { "jpeg_qualities": [50], "blur_kernels": [5] }
        }),
        ExperimentKind::AttackPurify => json!({
            "corpus": { "n": 3, "size": 64 },
            "purify": { "ts": [0.1], "denoisers": [{ "kind": "wavelet_shrink", "lambda": 3.0 }],
                        "schedule": { "n_steps": 1000, "beta_start": 0.0008, "beta_end": 0.012 } }
        }),
        ExperimentKind::Certify => json!({
            "corpus": { "n": 3, "size": 128 },
            "certify": { "schemes": ["ssdct"], "ts": [0.1],
                         "denoisers": [{ "kind": "wavelet_shrink", "lambda": 3.0 }] }
        }),
        ExperimentKind::AttackAdv => json!({
            "corpus": { "size": 64 },
            "adversarial": {
                "train_n": 100, "test_n": 2, "epsilons_255": [0, 8], "downsample": 16, "dct_k": 8,
                "train": { "epochs": 2, "hidden": [8] },
                "pgd": { "steps": 5, "warmup_count": 1 }
            }
        }),
        ExperimentKind::EvalRoc => json!({ "roc": { "scores": "scores.csv" } }),
        ExperimentKind::TheoryBound => json!({ "theory": { "ws": [0.5, 1.0, 2.0], "latent_ws": [1.0, 4.0] } }),
        ExperimentKind::Tradeoff => json!({
            "tradeoff": { "train_sigmas": [0.0, 5.0], "trials": 1, "draws": 2, "samples_per_class": 40,
                          "feature_epochs": 3, "head_epochs": 3 }
        }),
    };
    for (k, val) in extra.as_object().unwrap() {
        v[k] = val.clone();
    }
    v
}

fn scores_csv(dir: &Path) {
    fs::write(
        dir.join("scores.csv"),
        "id,label,score\na,1,0.9\nb,1,0.6\nc,0,0.7\nd,0,0.1\ne,0,0.2\n",
    )
    .unwrap();
}

#[test]
fn every_subcommand_reruns_byte_identically() {
    for kind in ExperimentKind::ALL {
        let tmp = tempfile::tempdir().unwrap();
        scores_csv(tmp.path());
        let mut v = small_config(kind);
        let a = write_config(tmp.path(), "a.json", &v);
        v["output_dir"] = json!("out2");
        let b = write_config(tmp.path(), "b.json", &v);
        for cfg in [&a, &b] {
            let out = bin().arg(kind.name()).arg("--config").arg(cfg).output().unwrap();
            assert!(out.status.success(), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
        }
        let first = csv_files(&tmp.path().join("out"));
        assert!(!first.is_empty(), "{kind} wrote no CSVs");
        for f in first {
            let g = tmp.path().join("out2").join(f.file_name().unwrap());
            assert_eq!(fs::read(&f).unwrap(), fs::read(&g).unwrap(), "{kind}: {} differs", f.display());
        }
    }
}

#[test]
fn csv_outputs_use_lf_and_a_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config(ExperimentKind::AttackPurify));
    assert!(bin().args(["attack-purify", "--config"]).arg(&cfg).status().unwrap().success());
    for f in csv_files(&tmp.path().join("out")) {
        let text = fs::read_to_string(&f).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
        let header = text.lines().next().unwrap();
        assert!(header.split(',').all(|h| h.chars().any(|c| c.is_ascii_alphabetic())), "{header}");
    }
}

#[test]
fn worker_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = small_config(ExperimentKind::AttackSpoof);
    v["corpus"]["n"] = json!(6);
    let cfg = write_config(tmp.path(), "s.json", &v);
    let mut outs = Vec::new();
    for jobs in ["1", "3"] {
        let status = bin().args(["attack-spoof", "--jobs", jobs, "--config"]).arg(&cfg).status().unwrap();
        assert!(status.success());
        outs.push(fs::read(tmp.path().join("out/spoof.csv")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let text = String::from_utf8(outs.remove(0)).unwrap();
    let ids: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn seed_flag_overrides_config_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "e.json", &small_config(ExperimentKind::Embed));
    let read_key = || fs::read_to_string(tmp.path().join("out/key.txt")).unwrap();
    assert!(bin().args(["embed", "--config"]).arg(&cfg).status().unwrap().success());
    let k5 = read_key();
    assert!(bin().args(["embed", "--seed", "6", "--config"]).arg(&cfg).status().unwrap().success());
    assert_ne!(k5, read_key());
    let m: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], json!(6));
}

#[test]
fn validation_errors_exit_2_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let v = json!({
        "kind": "attack-purify",
        "output_dir": "out",
        "input_dir": "missing",
        "purify": { "ts": [0.0, 1.5], "denoisers": [],
                    "schedule": { "n_steps": 1000, "beta_start": 0.0008, "beta_end": 0.012 } },
        "mitigate": { "blur_kernels": [4] }
    });
    let cfg = write_config(tmp.path(), "bad.json", &v);
    let out = bin().args(["attack-purify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["input_dir", "purify.ts", "purify.denoisers", "mitigate.blur_kernels"] {
        assert!(err.contains(field), "missing {field} in:\n{err}");
    }
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_fields_and_kind_mismatch_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "u.json", &json!({ "kind": "embed", "output_dir": "o", "colour": 1 }));
    assert_eq!(bin().args(["embed", "--config"]).arg(&cfg).status().unwrap().code(), Some(2));
    let cfg = write_config(tmp.path(), "k.json", &json!({ "kind": "embed", "output_dir": "o" }));
    assert_eq!(bin().args(["detect", "--config"]).arg(&cfg).status().unwrap().code(), Some(2));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn undersized_images_fail_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = small_config(ExperimentKind::Embed);
    v["corpus"]["size"] = json!(32);
    v["scheme"] = json!({ "kind": "dwtdctsvd" });
    let cfg = write_config(tmp.path(), "s.json", &v);
    let out = bin().args(["embed", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too small"));
}

#[test]
fn strict_dims_rejects_odd_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = small_config(ExperimentKind::Embed);
    v["corpus"]["size"] = json!(100);
    let cfg = write_config(tmp.path(), "s.json", &v);
    let status = bin().args(["embed", "--strict-dims", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(bin().args(["embed", "--config"]).arg(&cfg).status().unwrap().success());
}

#[test]
fn failed_certification_exits_1_and_records_the_stage() {
    // Two images per class at 64x64 leave the bound near 0.55 at t = 0.3,
    // which this seed's sample beats by chance.
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Certify, tmp.path().join("out"));
    cfg.seed = 0;
    cfg.corpus.n = Some(2);
    cfg.corpus.size = 64;
    cfg.certify.schemes = vec![wmbench::watermark::SchemeKind::SsDct];
    cfg.certify.ts = vec![0.3];
    cfg.certify.slack = 0.0;
    let err = run(cfg, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, CliError::Assertion { .. }), "{err}");
    assert_eq!(err.exit_code(), 1);
    let m: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], json!("failed"));
    assert_eq!(m["failed_stage"], json!("certify"));
    assert!(tmp.path().join("out/certify.csv").exists());
}

#[test]
fn manifest_records_hash_seeds_and_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::AttackSpoof, tmp.path().join("out"));
    cfg.corpus.n = Some(3);
    cfg.corpus.size = 64;
    let m = run(cfg.clone(), &RunOptions::default()).unwrap();
    assert_eq!(m.status, RunStatus::Ok);
    assert_eq!(m.config_hash.len(), 64);
    assert!(m.stage_seeds.contains_key("spoof"));
    assert!(m.stage_seeds.contains_key("key"));
    let ids: Vec<&str> = m.rows.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["synth_0000", "synth_0001", "synth_0002"]);
    let again = run(cfg, &RunOptions::default()).unwrap();
    assert_eq!(m.config_hash, again.config_hash);
}

#[test]
fn synth_subcommand_writes_stable_pngs() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let status = bin()
            .args(["synth", "--n", "2", "--seed", "9", "--out"])
            .arg(tmp.path().join(out))
            .status()
            .unwrap();
        assert!(status.success());
    }
    for f in ["synth_0000.png", "synth_0001.png"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
    let status = bin().args(["synth", "--n", "0", "--out"]).arg(tmp.path().join("c")).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn user_directory_corpus_is_read_in_name_order() {
    let tmp = tempfile::tempdir().unwrap();
    let imgs = tmp.path().join("imgs");
    wmbench_cli::synth_dataset(wmbench_cli::SynthKind::Gray, 3, 1, &imgs).unwrap();
    let v = json!({ "kind": "embed", "output_dir": "out", "input_dir": "imgs" });
    let cfg = write_config(tmp.path(), "d.json", &v);
    assert!(bin().args(["embed", "--config"]).arg(&cfg).status().unwrap().success());
    let text = fs::read_to_string(tmp.path().join("out/embed.csv")).unwrap();
    let ids: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["synth_0000", "synth_0001", "synth_0002"]);
}
