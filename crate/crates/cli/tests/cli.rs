use std::path::Path;
use std::process::{Command, Output};

fn lsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsr")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = lsr(args);
    assert!(out.status.success(), "lsr {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn fixture(dir: &Path) {
    ok(&["fixture", "--out-dir", &p(dir, "fx"), "--seed", "7", "--size", "small"]);
}

#[test]
fn pipeline_from_fixture_to_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fixture(d);
    ok(&["train", "--config", &p(d, "fx/config.toml"), "--steps", "80", "--out", &p(d, "enc.bin"), "--log", &p(d, "log.csv")]);
    ok(&["encode", "--encoder", &p(d, "enc.bin"), "--corpus", &p(d, "fx/corpus.jsonl"), "--out", &p(d, "docs.jsonl")]);
    ok(&["idf", "--corpus", &p(d, "docs.jsonl"), "--out", &p(d, "idf.json")]);
    let stats = ok(&["index", "--corpus", &p(d, "docs.jsonl"), "--out", &p(d, "index.bin"), "--stats"]);
    let stats: serde_json::Value = serde_json::from_str(&stats).unwrap();
    assert_eq!(stats["corpus_size"], 20);

    ok(&["search", "--index", &p(d, "index.bin"), "--queries", &p(d, "fx/queries.jsonl"), "--idf", &p(d, "idf.json"), "--out", &p(d, "run.trec")]);
    let run = std::fs::read_to_string(d.join("run.trec")).unwrap();
    assert!(run.lines().all(|l| l.split_whitespace().count() == 6));
    let sidecar = std::fs::read_to_string(d.join("run.trec.config.toml")).unwrap();
    assert!(sidecar.contains("mode = \"idf_weighted\""));

    let eval = ok(&["eval", "--run", &p(d, "run.trec"), "--qrels", &p(d, "fx/qrels.trec")]);
    let metrics: serde_json::Value = serde_json::from_str(eval.lines().next().unwrap()).unwrap();
    for m in ["mrr@10", "ndcg@10", "recall@10"] {
        let v = metrics[m].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{m} = {v}");
    }
    assert!(metrics["mrr@10"].as_f64().unwrap() > 0.5);

    let s = ok(&["stats", "--index", &p(d, "index.bin"), "--queries", &p(d, "fx/queries.jsonl")]);
    let s: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert!(s["theoretical_flops"].as_f64().unwrap() > 0.0);
}

#[test]
fn mining_filtering_and_replayed_teachers() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fixture(d);
    ok(&["idf", "--corpus", &p(d, "fx/corpus.jsonl"), "--out", &p(d, "idf.json")]);
    ok(&["index", "--corpus", &p(d, "fx/corpus.jsonl"), "--out", &p(d, "index.bin")]);
    let mined = ok(&["mine", "--index", &p(d, "index.bin"), "--pairs", &p(d, "fx/pairs.jsonl"), "--idf", &p(d, "idf.json"), "--m", "12"]);
    std::fs::write(d.join("mined.jsonl"), &mined).unwrap();
    assert_eq!(mined.lines().count(), 8);
    ok(&["filter", "--mined", &p(d, "mined.jsonl"), "--k", "10", "--out", &p(d, "kept.jsonl")]);
    let kept = std::fs::read_to_string(d.join("kept.jsonl")).unwrap();
    assert!(kept.lines().count() <= 8);
    ok(&[
        "train", "--config", &p(d, "fx/config.toml"), "--steps", "20", "--mined", &p(d, "kept.jsonl"),
        "--teachers", &p(d, "fx/teachers.jsonl"), "--out", &p(d, "enc.bin"),
    ]);

    // replayed pools smaller than the negatives per query are refused
    let out = lsr(&[
        "train", "--config", &p(d, "fx/config.toml"), "--steps", "5", "--mined", &p(d, "kept.jsonl"), "--negatives", "30",
        "--teachers", &p(d, "fx/teachers.jsonl"), "--out", &p(d, "x.bin"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("negatives_per_query"));
}

#[test]
fn training_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fixture(d);
    for name in ["a.bin", "b.bin"] {
        ok(&["train", "--config", &p(d, "fx/config.toml"), "--steps", "40", "--out", &p(d, name)]);
    }
    assert_eq!(std::fs::read(d.join("a.bin")).unwrap(), std::fs::read(d.join("b.bin")).unwrap());
    ok(&["train", "--config", &p(d, "fx/config.toml"), "--steps", "40", "--seed", "8", "--out", &p(d, "c.bin")]);
    assert_ne!(std::fs::read(d.join("a.bin")).unwrap(), std::fs::read(d.join("c.bin")).unwrap());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(lsr(&["search", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(lsr(&[]).status.code(), Some(1));
    assert_eq!(lsr(&["stats", "--index", &p(d, "missing.bin")]).status.code(), Some(1));
    assert_eq!(lsr(&["stats"]).status.code(), Some(1));

    std::fs::write(d.join("bad.bin"), b"definitely not an index").unwrap();
    let out = lsr(&["stats", "--index", &p(d, "bad.bin")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not an index file"));

    fixture(d);
    ok(&["index", "--corpus", &p(d, "fx/corpus.jsonl"), "--out", &p(d, "index.bin")]);
    let mut bytes = std::fs::read(d.join("index.bin")).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(d.join("flipped.bin"), &bytes).unwrap();
    let out = lsr(&["stats", "--index", &p(d, "flipped.bin")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));

    std::fs::write(d.join("broken.jsonl"), "{\"id\":\"d\",\"vector\":{\"a\":1}}\n{oops\n").unwrap();
    let out = lsr(&["index", "--corpus", &p(d, "broken.jsonl"), "--out", &p(d, "x.bin")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    // IDF-weighted search without a table, and a window below k
    let q = p(d, "fx/queries.jsonl");
    assert_eq!(lsr(&["search", "--index", &p(d, "index.bin"), "--queries", &q]).status.code(), Some(1));
    let out = lsr(&["search", "--index", &p(d, "index.bin"), "--queries", &q, "--mode", "plain", "--two-phase", "--window", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn duplicate_doc_ids_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("dup.jsonl"), "{\"id\":\"d\",\"vector\":{\"a\":1}}\n{\"id\":\"d\",\"vector\":{\"b\":1}}\n").unwrap();
    let out = lsr(&["index", "--corpus", &p(d, "dup.jsonl"), "--out", &p(d, "x.bin")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate doc_id"));
}

#[test]
fn bad_weights_are_skipped_with_a_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("c.jsonl"), "{\"id\":\"good\",\"vector\":{\"a\":1}}\n{\"id\":\"bad\",\"vector\":{\"a\":-1}}\n").unwrap();
    let out = lsr(&["index", "--corpus", &p(d, "c.jsonl"), "--out", &p(d, "x.bin"), "--stats"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipped document bad"));
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["corpus_size"], 1);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fixture(d);
    ok(&["index", "--corpus", &p(d, "fx/corpus.jsonl"), "--out", &p(d, "index.bin")]);
    let cfg = format!("[paths]\nindex = {:?}\nqueries = {:?}\n[search]\nk = 3\nmode = \"plain\"\n", p(d, "index.bin"), p(d, "fx/queries.jsonl"));
    std::fs::write(d.join("c.toml"), cfg).unwrap();
    let run = ok(&["search", "--config", &p(d, "c.toml")]);
    assert_eq!(run.lines().filter(|l| l.starts_with("q0 ")).count(), 3);
    let run = ok(&["search", "--config", &p(d, "c.toml"), "--k", "5"]);
    assert_eq!(run.lines().filter(|l| l.starts_with("q0 ")).count(), 5);

    std::fs::write(d.join("bad.toml"), "[search]\nkk = 1\n").unwrap();
    assert_eq!(lsr(&["search", "--config", &p(d, "bad.toml")]).status.code(), Some(1));
}

#[test]
fn every_subcommand_documents_itself() {
    let subs = ["idf", "index", "search", "encode", "train", "mine", "filter", "eval", "bench", "stats", "fixture", "demo"];
    let top = ok(&["--help"]);
    for s in subs {
        assert!(top.contains(s), "top-level help lacks {s}");
        let help = ok(&[s, "--help"]);
        assert!(help.contains("Usage: lsr"), "{s}");
        assert!(help.contains("--config"), "{s} help lacks --config");
    }
    assert!(ok(&["index", "--help"]).contains("CRC-32"));
    assert!(ok(&["search", "--help"]).contains("Q0"));
    assert!(ok(&["train", "--help"]).contains("loss_total"));
}

#[test]
fn bench_reports_json_then_table() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fixture(d);
    ok(&["index", "--corpus", &p(d, "fx/corpus.jsonl"), "--out", &p(d, "index.bin")]);
    ok(&["idf", "--corpus", &p(d, "fx/corpus.jsonl"), "--out", &p(d, "idf.json")]);
    let out = ok(&[
        "bench", "--index", &p(d, "index.bin"), "--queries", &p(d, "fx/queries.jsonl"), "--idf", &p(d, "idf.json"),
        "--concurrency", "1,2", "--repetitions", "4", "--compare-two-phase", "--window", "10",
    ]);
    let rows: Vec<serde_json::Value> = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r["p99_ms"].as_f64().unwrap() >= r["p50_ms"].as_f64().unwrap());
        assert_eq!(r["queries"], 32);
    }
    assert_eq!(out.lines().count(), 1 + 1 + rows.len());
}

#[test]
fn demo_runs_every_variant() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&["demo", "--steps", "10", "--out", &p(tmp.path(), "demo.json")]);
    assert!(out.contains("simply_add") && out.contains("idf_source"));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&std::fs::read(tmp.path().join("demo.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 8);
}
