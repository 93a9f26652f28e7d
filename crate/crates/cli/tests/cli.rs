use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_convsearch");

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/synthetic")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small collection with a four-turn conversation and a topic shift.
fn tiny(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let corpus = dir.join("corpus.tsv");
    std::fs::write(
        &corpus,
        "p1\tTiger sharks hunt at night near reefs.\n\
         p2\tThe diet of tiger sharks includes turtles and birds.\n\
         p3\tLung cancer symptoms include coughing.\n\
         p4\tThe diet of honey bees is nectar.\n\
         p5\tHoney bees live in large colonies.\n",
    )
    .unwrap();
    let conv = dir.join("conv.json");
    std::fs::write(
        &conv,
        r#"[{"number": 5, "turn": [
            {"number": 1, "raw_utterance": "Tell me about tiger sharks."},
            {"number": 2, "raw_utterance": "What is their diet?"},
            {"number": 3, "raw_utterance": "What about honey bees?"},
            {"number": 4, "raw_utterance": "Where do they live?"}]}]"#,
    )
    .unwrap();
    let qrels = dir.join("qrels.txt");
    std::fs::write(&qrels, "5_1 0 p1 2\n5_2 0 p2 2\n5_2 0 p4 0\n5_3 0 p5 1\n5_4 0 p5 2\n").unwrap();
    let index = dir.join("index");
    ok(&["index", "--corpus", s(&corpus), "--out", s(&index)]);
    (index, conv, qrels)
}

#[test]
fn pipeline_matches_chained_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let index = d.join("index");
    ok(&["index", "--corpus", s(&data().join("corpus.tsv")), "--out", s(&index)]);
    let conv = data().join("conversations.json");

    for (method, prf) in [("topic_shift", true), ("context", false)] {
        let out = d.join(format!("pipe_{method}"));
        let mut args = vec![
            "pipeline",
            "--index",
            s(&index),
            "--conversations",
            s(&conv),
            "--stage1-method",
            method,
            "--rerank-method",
            method,
            "--out-dir",
            s(&out),
            "--k",
            "300",
        ];
        if prf {
            args.push("--prf");
        }
        ok(&args);

        let rewrites = d.join(format!("{method}.tsv"));
        let stage1 = d.join(format!("{method}.stage1.run"));
        let reranked = d.join(format!("{method}.rerank.run"));
        ok(&[
            "rewrite",
            "--method",
            method,
            "--conversations",
            s(&conv),
            "--out",
            s(&rewrites),
        ]);
        let mut args = vec![
            "search",
            "--index",
            s(&index),
            "--queries",
            s(&rewrites),
            "--k",
            "300",
            "--out",
            s(&stage1),
        ];
        if prf {
            args.push("--prf");
        }
        ok(&args);
        ok(&[
            "rerank",
            "--index",
            s(&index),
            "--run",
            s(&stage1),
            "--queries",
            s(&rewrites),
            "--out",
            s(&reranked),
        ]);

        for (mine, theirs) in [
            (&rewrites, out.join("rewrites.stage1.tsv")),
            (&stage1, out.join("stage1.run")),
            (&reranked, out.join("rerank.run")),
        ] {
            let a = std::fs::read(mine).unwrap();
            assert!(!a.is_empty());
            assert!(
                a == std::fs::read(&theirs).unwrap(),
                "{} differs from {}",
                mine.display(),
                theirs.display()
            );
        }
    }
}

#[test]
fn rewrite_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let (_, conv, _) = tiny(dir.path());
    let out = ok(&["rewrite", "--method", "topic_shift", "--conversations", s(&conv)]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines,
        [
            "5_1\tTell me about tiger sharks.",
            "5_2\tWhat is tiger sharks diet?",
            "5_3\tWhat about honey bees?",
            "5_4\tWhere do honey bees live?",
        ]
    );
}

#[test]
fn search_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (index, conv, qrels) = tiny(d);
    let q = d.join("q.tsv");
    ok(&[
        "rewrite",
        "--method",
        "topic_shift",
        "--conversations",
        s(&conv),
        "--out",
        s(&q),
    ]);
    let out = ok(&[
        "search",
        "--index",
        s(&index),
        "--queries",
        s(&q),
        "--mu",
        "2500",
        "--prf",
        "--fb-docs",
        "20",
        "--fb-terms",
        "20",
        "--gamma",
        "0.5",
        "--k",
        "1000",
    ]);
    let run_text = String::from_utf8(out.stdout).unwrap();
    let first: Vec<&str> = run_text.lines().next().unwrap().split(' ').collect();
    assert_eq!(first[0], "5_1");
    assert_eq!(first[1], "Q0");
    assert_eq!(first[3], "1");
    assert_eq!(first[5], "rm3");
    assert_eq!(first[4].split('.').nth(1).unwrap().len(), 6);

    let run_file = d.join("r.run");
    std::fs::write(&run_file, &run_text).unwrap();
    let tsv = d.join("eval.tsv");
    let out = ok(&[
        "eval",
        "--qrels",
        s(&qrels),
        "--run",
        s(&run_file),
        "--metrics",
        "p@1,ndcg@3",
        "--tsv",
        s(&tsv),
    ]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(
        table.contains("p@1") && table.contains("ndcg@3") && !table.contains("map"),
        "{table}"
    );
    let tsv = std::fs::read_to_string(&tsv).unwrap();
    assert!(tsv.lines().any(|l| l.starts_with("p@1\tall\t")), "{tsv}");
    assert!(tsv.lines().all(|l| l.split('\t').count() == 3));
}

#[test]
fn missing_index_fails_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (_, conv, _) = tiny(d);
    let out_dir = d.join("out");
    let out = run(&[
        "pipeline",
        "--index",
        s(&d.join("nope")),
        "--conversations",
        s(&conv),
        "--out-dir",
        s(&out_dir),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("invalid configuration") && err.contains("nope"), "{err}");
    assert!(!out_dir.exists());
}

#[test]
fn usage_error_prints_help() {
    let out = run(&["eval", "--run", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--qrels"), "{err}");
}

#[test]
fn data_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let qrels = d.join("bad.qrels");
    std::fs::write(&qrels, "1_1 0 p1 1\n1_1 0 p2\n").unwrap();
    let run_file = d.join("r.run");
    std::fs::write(&run_file, "1_1 Q0 p1 1 1.0 x\n").unwrap();
    let out = run(&["eval", "--qrels", s(&qrels), "--run", s(&run_file)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("{}:2", qrels.display())), "{err}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (index, conv, qrels) = tiny(d);
    let cfg = d.join("exp.toml");
    std::fs::write(
        &cfg,
        format!(
            "index = {:?}\nconversations = {:?}\nqrels = {:?}\nout_dir = {:?}\nstage1_method = \"context\"\nrerank_method = \"topic_shift\"\nmu = 100.0\ndepth = 3\n",
            index,
            conv,
            qrels,
            d.join("from_file")
        ),
    )
    .unwrap();
    let out = ok(&["pipeline", "--config", s(&cfg), "--out-dir", s(&d.join("from_flag"))]);
    assert!(!d.join("from_file").exists());
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("stage one") && report.contains("re-ranked"), "{report}");
    let stage1 = std::fs::read_to_string(d.join("from_flag/rewrites.stage1.tsv")).unwrap();
    let rerank = std::fs::read_to_string(d.join("from_flag/rewrites.rerank.tsv")).unwrap();
    assert_ne!(stage1, rerank);
    // depth 3 bounds every re-ranked list
    let reranked = std::fs::read_to_string(d.join("from_flag/rerank.run")).unwrap();
    for turn in ["5_1", "5_2", "5_3", "5_4"] {
        assert!(reranked.lines().filter(|l| l.starts_with(&format!("{turn} "))).count() <= 3);
    }
}

#[test]
fn plain_lexical_rerank_keeps_order() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (index, conv, _) = tiny(d);
    let out = d.join("out");
    ok(&[
        "pipeline",
        "--index",
        s(&index),
        "--conversations",
        s(&conv),
        "--out-dir",
        s(&out),
        "--depth",
        "2",
    ]);
    let ids = |f: &str| -> Vec<(String, String)> {
        std::fs::read_to_string(out.join(f))
            .unwrap()
            .lines()
            .map(|l| {
                let f: Vec<&str> = l.split(' ').collect();
                (f[0].to_string(), f[2].to_string())
            })
            .collect()
    };
    let stage1 = ids("stage1.run");
    let reranked = ids("rerank.run");
    let mut expected = Vec::new();
    for turn in ["5_1", "5_2", "5_3", "5_4"] {
        expected.extend(stage1.iter().filter(|(t, _)| t == turn).take(2).cloned());
    }
    assert_eq!(reranked, expected);
}
