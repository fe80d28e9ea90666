use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_linkdistill"));
    c.env("RUST_LOG", "warn");
    c
}

fn ok(mut c: Command) -> String {
    let out: Output = c.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> String {
    let mut c = bin();
    c.current_dir(dir).args(args);
    ok(c)
}

fn prepare(dir: &Path) {
    run_in(dir, &["synth", "--preset", "small", "--seed", "3", "--out", "data"]);
    run_in(
        dir,
        &["split", "--graph", "data/edges.txt", "--features", "data/features.bin", "--seed", "3", "--out", "split"],
    );
}

#[test]
fn stagewise_commands_produce_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    prepare(d);
    for f in ["train.txt", "valid_pos.txt", "valid_neg.txt", "test_pos.txt", "test_neg.txt", "meta.txt"] {
        assert!(d.join("split").join(f).exists(), "{f}");
    }
    for h in ["cn", "ra"] {
        run_in(d, &["guidance", "--split", "split", "--heuristic", h, "--seed", "1", "--out", &format!("g/{h}.txt")]);
        let log = run_in(
            d,
            &[
                "distill", "--graph", "data/edges.txt", "--features", "data/features.bin", "--guidance",
                &format!("g/{h}.txt"), "--split", "split", "--alpha", "1", "--beta", "1", "--delta", "0.1",
                "--temp", "1", "--lr", "0.01", "--epochs", "3", "--hidden", "16", "--seed", "1", "--out",
                &format!("s/{h}.ckpt"),
            ],
        );
        let lines: Vec<&str> = log.lines().collect();
        assert_eq!(lines[0], "epoch\tbce\tranking\tdistribution\ttotal\tvalid_hits");
        assert_eq!(lines.len(), 4);
        assert!(lines[1..].iter().all(|l| l.split('\t').count() == 6));
    }
    let header = std::fs::read_to_string(d.join("g/cn.txt")).unwrap();
    assert!(header.starts_with("#heuristic=CN tau=na"));

    run_in(
        d,
        &[
            "ensemble", "--students", "s/cn.ckpt,s/ra.ckpt", "--features", "data/features.bin", "--split", "split",
            "--lambda", "0.1", "--epochs", "2", "--hidden", "8", "--out", "gate.ckpt",
        ],
    );
    let out = run_in(
        d,
        &[
            "eval", "--model", "gate.ckpt", "--features", "data/features.bin", "--split", "split", "--k", "20,50",
            "--report", "r/gate.txt", "--scores", "r/gate.tsv",
        ],
    );
    assert!(out.contains("hits@20=") && out.contains("hits@50=") && out.contains("mrr="));
    let report = std::fs::read_to_string(d.join("r/gate.txt")).unwrap();
    assert_eq!(report.lines().count(), 3);
    let tsv = std::fs::read_to_string(d.join("r/gate.tsv")).unwrap();
    assert_eq!(tsv.lines().next().unwrap(), "u\tv\tlabel\tscore");

    let cn = run_in(d, &["eval", "--heuristic", "cn", "--split", "split", "--k", "20"]);
    assert!(cn.starts_with("hits@20="));
}

#[test]
fn gate_rejects_swapped_student_files() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    prepare(d);
    run_in(d, &["guidance", "--split", "split", "--heuristic", "aa", "--out", "g.txt"]);
    for (name, seed) in [("a", "1"), ("b", "2")] {
        run_in(
            d,
            &[
                "distill", "--features", "data/features.bin", "--guidance", "g.txt", "--split", "split", "--epochs",
                "1", "--hidden", "8", "--seed", seed, "--out", &format!("{name}.ckpt"),
            ],
        );
    }
    run_in(
        d,
        &[
            "ensemble", "--students", "a.ckpt,b.ckpt", "--features", "data/features.bin", "--split", "split",
            "--epochs", "1", "--hidden", "8", "--out", "gate.ckpt",
        ],
    );
    std::fs::copy(d.join("a.ckpt"), d.join("tmp.ckpt")).unwrap();
    std::fs::copy(d.join("b.ckpt"), d.join("a.ckpt")).unwrap();
    std::fs::copy(d.join("tmp.ckpt"), d.join("b.ckpt")).unwrap();
    let out = bin()
        .current_dir(d)
        .args(["eval", "--model", "gate.ckpt", "--features", "data/features.bin", "--split", "split"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("digest"));
}

#[test]
fn run_subcommand_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("run.cfg"),
        "# tiny end-to-end run\n\
         data.synthetic=small:4\n\
         seed=9\n\
         heuristics=cn,csp4\n\
         distill.alpha=1\n\
         distill.beta=0,1\n\
         distill.delta=0.1\n\
         distill.epochs=2\n\
         distill.hidden=16\n\
         ensemble.lambda=0.1\n\
         ensemble.epochs=2\n\
         ensemble.hidden=8\n",
    )
    .unwrap();
    let mut a = bin();
    a.current_dir(d).args(["run", "--config", "run.cfg", "--out", "a"]).env("LINKDISTILL_JOBS", "1");
    let sa = ok(a);
    let mut b = bin();
    b.current_dir(d).args(["--jobs", "2", "run", "--config", "run.cfg", "--out", "b"]);
    ok(b);
    let ra = std::fs::read_to_string(d.join("a/report.txt")).unwrap();
    assert_eq!(ra, std::fs::read_to_string(d.join("b/report.txt")).unwrap());
    assert!(ra.contains("ensemble.test.hits@20="));
    assert!(ra.contains("student.csp4.test.hits@20="));
    assert!(sa.contains("time.total="));
    let timing = std::fs::read_to_string(d.join("a/timing.txt")).unwrap();
    for key in ["guidance=", "distill=", "distill_parallel_max=", "distill_serial_sum=", "ensemble=", "total="] {
        assert!(timing.lines().any(|l| l.starts_with(key)), "{key}");
    }
}

#[test]
fn invalid_inputs_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("bad.cfg"), "heuristics=cn,cn\n").unwrap();
    let out = bin().current_dir(d).args(["run", "--config", "bad.cfg"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("twice"));

    let out = bin().current_dir(d).args(["guidance", "--split", "nope", "--heuristic", "csp3", "--out", "x"]).output().unwrap();
    assert!(!out.status.success());

    let out = bin().current_dir(d).args(["--jobs", "0", "synth", "--out", "x"]).output().unwrap();
    assert!(!out.status.success());
}
