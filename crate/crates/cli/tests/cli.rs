use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn semir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semir")).args(args).output().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn report(path: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn transform_then_invert_scores_100() {
    let dir = tempfile::tempdir().unwrap();
    let (rir, inv, eval, dict) = (
        path(dir.path(), "rir.tsv"),
        path(dir.path(), "inv.tsv"),
        path(dir.path(), "eval.json"),
        path(dir.path(), "dict.json"),
    );
    let cfq = fixture("cfq.jsonl");
    let run = |args: &[&str]| assert!(semir(args).status.success(), "{args:?}");
    run(&[
        "transform",
        "--formalism",
        "sparql",
        "--dict",
        &dict,
        "--ir",
        "rir",
        "--in",
        &cfq,
        "--out",
        &rir,
    ]);
    assert!(Path::new(&dict).exists());
    run(&[
        "invert",
        "--formalism",
        "sparql",
        "--dict",
        &dict,
        "--in",
        &rir,
        "--out",
        &inv,
    ]);
    run(&[
        "evaluate",
        "--formalism",
        "sparql",
        "--mode",
        "rir",
        "--gold",
        &cfq,
        "--in",
        &inv,
        "--out",
        &eval,
    ]);
    let r = report(&eval);
    assert_eq!(r["exact_match"], 100.0);
    assert_eq!(r["mode"], "rir");
    assert_eq!(r["formalism"], "sparql");
}

#[test]
fn invert_without_dictionary_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let rir = path(dir.path(), "rir.tsv");
    fs::write(&rir, "a\tSELECT count(*) WHERE { ( M0 nationality M1 ) }\n").unwrap();
    let out = semir(&["invert", "--formalism", "sparql", "--in", &rir]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--dict"));
}

#[test]
fn strict_flags_quarantined_records() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "bad.jsonl");
    let q = path(dir.path(), "q.jsonl");
    fs::write(
        &data,
        "{\"id\":\"ok\",\"x\":\"jump twice\",\"y\":\"JUMP JUMP\"}\n{\"id\":\"bad\",\"x\":\"jump twice\",\"y\":\"JUMP\"}\n",
    )
    .unwrap();
    let lax = semir(&[
        "transform",
        "--formalism",
        "scan",
        "--ir",
        "rir",
        "--in",
        &data,
        "--quarantine",
        &q,
    ]);
    assert!(lax.status.success());
    assert_eq!(String::from_utf8_lossy(&lax.stdout), "ok\t( JUMP ) ( JUMP )\n");
    let quarantined = fs::read_to_string(&q).unwrap();
    assert_eq!(quarantined.lines().count(), 1);
    assert!(quarantined.contains("\"bad\""));

    let strict = semir(&[
        "transform",
        "--formalism",
        "scan",
        "--ir",
        "rir",
        "--strict",
        "--in",
        &data,
    ]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn two_stage_postprocess_with_carried_ids() {
    let dir = tempfile::tempdir().unwrap();
    let sql = fixture("sql.jsonl");
    let p = |n: &str| path(dir.path(), n);
    let run = |args: &[&str]| assert!(semir(args).status.success(), "{args:?}");
    run(&[
        "prepare",
        "--formalism",
        "sql",
        "--mode",
        "lir-d",
        "--in",
        &sql,
        "--out",
        &p("s1.tsv"),
    ]);
    run(&[
        "prepare",
        "--formalism",
        "sql",
        "--mode",
        "lir-d",
        "--stage",
        "2",
        "--in",
        &sql,
        "--out",
        &p("s2.tsv"),
    ]);

    // model stand-in: gold stage-1 targets, with the first one corrupted
    let mut preds: Vec<String> = fs::read_to_string(p("s1.tsv"))
        .unwrap()
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            format!("{}\t{}", f[0], f[2])
        })
        .collect();
    preds[0] = format!("{}\tSELECT (", preds[0].split('\t').next().unwrap());
    fs::write(p("pred1.tsv"), preds.join("\n") + "\n").unwrap();
    run(&[
        "postprocess",
        "--formalism",
        "sql",
        "--mode",
        "lir-d",
        "--data",
        &sql,
        "--in",
        &p("pred1.tsv"),
        "--out",
        &p("req.tsv"),
        "--quarantine",
        &p("q1.jsonl"),
    ]);
    let n = preds.len();
    assert_eq!(fs::read_to_string(p("req.tsv")).unwrap().lines().count(), n - 1);

    // stage-2 stand-in: gold targets for the requested ids
    let requested: Vec<String> = fs::read_to_string(p("req.tsv"))
        .unwrap()
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    let stage2: String = fs::read_to_string(p("s2.tsv"))
        .unwrap()
        .lines()
        .filter_map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            requested
                .contains(&f[0].to_string())
                .then(|| format!("{}\t{}\n", f[0], f[2]))
        })
        .collect();
    fs::write(p("pred2.tsv"), stage2).unwrap();
    run(&[
        "postprocess",
        "--formalism",
        "sql",
        "--mode",
        "lir-d",
        "--stage",
        "2",
        "--carry",
        &p("q1.jsonl"),
        "--in",
        &p("pred2.tsv"),
        "--out",
        &p("final.tsv"),
    ]);
    run(&[
        "evaluate",
        "--formalism",
        "sql",
        "--gold",
        &sql,
        "--in",
        &p("final.tsv"),
        "--out",
        &p("eval.json"),
    ]);
    let r = report(&p("eval.json"));
    assert_eq!(r["n_total"], n);
    assert_eq!(r["n_correct"], n - 1);
}

#[test]
fn stats_reports_tokenizer_label() {
    let dir = tempfile::tempdir().unwrap();
    let vocab = path(dir.path(), "vocab.txt");
    fs::write(&vocab, "JUMP\nWALK\nLTURN\nRTURN\nRUN\nLOOK\n").unwrap();
    let scan = fixture("scan.txt");
    let ws = semir(&["stats", "--formalism", "scan", "--in", &scan]);
    let wp = semir(&[
        "stats",
        "--formalism",
        "scan",
        "--tokenizer",
        &format!("vocab:{vocab}"),
        "--in",
        &scan,
    ]);
    let ws: serde_json::Value = serde_json::from_slice(&ws.stdout).unwrap();
    let wp: serde_json::Value = serde_json::from_slice(&wp.stdout).unwrap();
    assert_eq!(ws["tokenizer"], "whitespace");
    assert_ne!(wp["tokenizer"], "whitespace");
    // every action is a whole piece
    assert_eq!(ws["avg_length"], wp["avg_length"]);
    let bad = semir(&["stats", "--formalism", "scan", "--tokenizer", "bpe", "--in", &scan]);
    assert_eq!(bad.status.code(), Some(2));
}
