//! Black-box tests of the benchforge binary: exit codes, output files,
//! and determinism, all offline via file:// endpoints.

mod common;

use common::{bin, collect_and_build, run_ok, setup_site};

#[test]
fn collect_build_report_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup_site(dir.path());

    let out = run_ok(bin().args(["--config", config.to_str().unwrap(), "collect"]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("preprint: 10 documents (10 new)"), "stdout: {stdout}");
    assert!(stdout.contains("news: 10 documents (10 new)"), "stdout: {stdout}");
    assert!(stdout.contains("coderepo: 2 documents (2 new)"), "stdout: {stdout}");

    // Re-collect hits the raw cache: same documents, zero new.
    let out = run_ok(bin().args(["--config", config.to_str().unwrap(), "collect"]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("(0 new)"));

    let out = run_ok(bin().args(["--config", config.to_str().unwrap(), "build"]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("built "), "stdout: {stdout}");
    for file in ["dataset_full.jsonl", "dataset_sampled.jsonl", "stats.json", "manifest.json"] {
        assert!(dir.path().join("out").join(file).exists(), "missing {file}");
    }

    let dataset = dir.path().join("out/dataset_full.jsonl");
    let out = run_ok(bin().args([
        "--config",
        config.to_str().unwrap(),
        "report",
        "--dataset",
        dataset.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("terminology"), "stdout: {stdout}");
    assert!(stdout.contains("total"), "stdout: {stdout}");
}

#[test]
fn build_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup_site(dir.path());
    collect_and_build(dir.path(), &config);

    let read = |name: &str| std::fs::read(dir.path().join("out").join(name)).unwrap();
    let first: Vec<Vec<u8>> =
        ["dataset_full.jsonl", "dataset_sampled.jsonl", "manifest.json"].map(read).into();
    run_ok(bin().args(["--config", config.to_str().unwrap(), "build"]));
    let second: Vec<Vec<u8>> =
        ["dataset_full.jsonl", "dataset_sampled.jsonl", "manifest.json"].map(read).into();
    assert_eq!(first, second);
}

#[test]
fn probe_commands_run_offline() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup_site(dir.path());
    collect_and_build(dir.path(), &config);
    let dataset = dir.path().join("out/dataset_full.jsonl");

    // Baseline for the perplexity probe: same instances, fresh passages.
    let baseline = dir.path().join("baseline.jsonl");
    let mut lines = Vec::new();
    for line in std::fs::read_to_string(&dataset).unwrap().lines() {
        let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
        let words: Vec<String> = (0..80)
            .map(|i| format!("zq{}x{}", i * 7 % 13, i))
            .collect();
        v["passage_text"] = serde_json::Value::String(words.join(" "));
        lines.push(serde_json::to_string(&v).unwrap());
    }
    std::fs::write(&baseline, format!("{}\n", lines.join("\n"))).unwrap();

    let out = run_ok(bin().args([
        "--config",
        config.to_str().unwrap(),
        "probe",
        "ppl",
        "--dataset",
        dataset.to_str().unwrap(),
        "--baseline",
        baseline.to_str().unwrap(),
        "--control-length",
        "64",
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("verdict: ALower"), "stdout: {stdout}");
    assert!(dir.path().join("out/ppl.csv").exists());
    assert!(dir.path().join("out/ppl.json").exists());

    let out = run_ok(bin().args([
        "--config",
        config.to_str().unwrap(),
        "probe",
        "reconstruct",
        "--dataset",
        dataset.to_str().unwrap(),
        "--model",
        "parrot",
        "--limit",
        "8",
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mean match ratio"), "stdout: {stdout}");
    assert!(dir.path().join("out/reconstruct.json").exists());

    // Dataset against itself: every example is dirty under any-hit.
    let out = run_ok(bin().args([
        "--config",
        config.to_str().unwrap(),
        "probe",
        "ngram",
        "--dataset",
        dataset.to_str().unwrap(),
        "--train",
        dataset.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let n_lines = std::fs::read_to_string(&dataset).unwrap().lines().count();
    assert!(
        stdout.contains(&format!("{n_lines} of {n_lines} examples dirty")),
        "stdout: {stdout}"
    );

    // Against an unrelated corpus: everything clean.
    let fresh = dir.path().join("fresh.txt");
    std::fs::write(&fresh, "completely unrelated words that never appear in any passage\n")
        .unwrap();
    let out = run_ok(bin().args([
        "--config",
        config.to_str().unwrap(),
        "probe",
        "ngram",
        "--dataset",
        dataset.to_str().unwrap(),
        "--train",
        fresh.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains(&format!("0 of {n_lines} examples dirty")), "stdout: {stdout}");
}

#[test]
fn eval_produces_scores_and_winrates() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup_site(dir.path());
    collect_and_build(dir.path(), &config);
    let dataset = dir.path().join("out/dataset_full.jsonl");

    let out = run_ok(bin().args([
        "--config",
        config.to_str().unwrap(),
        "eval",
        "--dataset",
        dataset.to_str().unwrap(),
        "--models",
        "stub,decline",
        "--judge",
        "stub",
        "--limit",
        "40",
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("stub:"), "stdout: {stdout}");
    assert!(stdout.contains("decline:"), "stdout: {stdout}");
    assert!(stdout.contains("decline vs stub:"), "stdout: {stdout}");

    let scores = std::fs::read_to_string(dir.path().join("out/scores.csv")).unwrap();
    assert!(scores.starts_with("model,query_type,mean_score,n"));
    let winrate = std::fs::read_to_string(dir.path().join("out/winrate.csv")).unwrap();
    assert!(winrate.starts_with("model_a,model_b,wins_a,wins_b,ties"));
    assert!(dir.path().join("out/eval.json").exists());
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup_site(dir.path());

    // 2: build before collect (no raw cache).
    let out = bin()
        .args(["--config", config.to_str().unwrap(), "build"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // 2: report on a missing dataset.
    let out = bin()
        .args(["--config", config.to_str().unwrap(), "report", "--dataset", "/no/such.jsonl"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // 1: collect finds nothing when no endpoint is configured.
    let empty_cfg = dir.path().join("empty.toml");
    std::fs::write(&empty_cfg, "window = \"2023-07-01..2023-07-08\"\n").unwrap();
    let out = bin().args(["--config", empty_cfg.to_str().unwrap(), "collect"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // 3: perplexity probe against an unreachable model endpoint.
    collect_and_build(dir.path(), &config);
    let dataset = dir.path().join("out/dataset_full.jsonl");
    let bad_cfg = dir.path().join("bad_model.toml");
    std::fs::write(
        &bad_cfg,
        format!(
            "window = \"2023-07-01..2023-07-08\"\nout_dir = \"{}/out\"\n\n\
             [models.deadend]\nbase_url = \"http://127.0.0.1:9/api\"\n",
            dir.path().display()
        ),
    )
    .unwrap();
    let out = bin()
        .env("FORGE_HTTP_TIMEOUT_SECS", "2")
        .args([
            "--config",
            bad_cfg.to_str().unwrap(),
            "probe",
            "ppl",
            "--dataset",
            dataset.to_str().unwrap(),
            "--baseline",
            dataset.to_str().unwrap(),
            "--model",
            "deadend",
            "--control-length",
            "64",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
