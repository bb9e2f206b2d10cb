use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qjsp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qjsp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn gen_3x3(dir: &Path) {
    let out = qjsp(
        dir,
        &["gen", "--jobs", "3", "--machines", "3", "--pmin", "1", "--pmax", "2", "--seed", "7", "-o", "inst.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_compile_solve_exhaustive() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_3x3(d);
    let out = qjsp(d, &["compile", "--instance", "inst.json", "--timespan", "8", "--shave", "-o", "t8.qubo"]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(d.join("t8.qubo")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# instance {")));
    assert!(text.lines().any(|l| l.starts_with("# provenance {")));

    let out = qjsp(d, &["solve", "--qubo", "t8.qubo", "--backend", "exhaustive", "-o", "r.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&d.join("r.json"));
    assert_eq!(r["result"]["classification"], "V_below_window");
    assert!(r["result"]["makespan"].as_u64().unwrap() <= 8);
    assert_eq!(r["result"]["gantt"].as_array().unwrap().len(), 9);
    assert_eq!(r["provenance"]["input_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn empty_window_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_3x3(d);
    assert_eq!(code(&qjsp(d, &["compile", "--instance", "inst.json", "--timespan", "2", "-o", "m.qubo"])), 0);
    let text = fs::read_to_string(d.join("m.qubo")).unwrap();
    assert!(text.starts_with("p qubo 0\n"));
    let out = qjsp(d, &["solve", "--qubo", "m.qubo", "--backend", "sa"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |suffix: &str| {
        gen_3x3(d);
        fs::rename(d.join("inst.json"), d.join(format!("inst{suffix}.json"))).unwrap();
        let inst = format!("inst{suffix}.json");
        let q = format!("q{suffix}.qubo");
        let r = format!("r{suffix}.json");
        let o = format!("o{suffix}.json");
        qjsp(d, &["compile", "--instance", &inst, "--timespan", "9", "--shave", "-o", &q]);
        let s = qjsp(
            d,
            &["solve", "--qubo", &q, "--backend", "sa", "--reads", "64", "--sweeps", "200", "--seed", "3", "-o", &r],
        );
        assert_eq!(code(&s), 0);
        let s = qjsp(
            d,
            &["solve", "--mode", "optimize", "--instance", &inst, "--backend", "ms", "-o", &o],
        );
        assert_eq!(code(&s), 0);
        [inst, q, r, o].map(|f| fs::read(d.join(f)).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn optimize_agrees_across_backends() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_3x3(d);
    let ms = qjsp(d, &["solve", "--mode", "optimize", "--instance", "inst.json", "--backend", "ms", "-o", "ms.json"]);
    assert_eq!(code(&ms), 0);
    let ex = qjsp(
        d,
        &["solve", "--mode", "optimize", "--instance", "inst.json", "--shave", "--K", "1", "-o", "ex.json"],
    );
    assert_eq!(code(&ex), 0, "{}", String::from_utf8_lossy(&ex.stderr));
    let (ms, ex) = (json(&d.join("ms.json")), json(&d.join("ex.json")));
    assert_eq!(ms["result"]["optimum"], ex["result"]["optimum"]);
    assert_eq!(ex["result"]["status"], "certified");
}

#[test]
fn precharacterize_writes_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = qjsp(
        d,
        &[
            "precharacterize", "--jobs", "2", "--machines", "2", "--pmin", "0", "--pmax", "2", "--count", "30",
            "--histogram", "h.csv", "-o", "model.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(d.join("h.csv")).unwrap();
    let total: usize = csv.lines().skip(2).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 30);
    let m = json(&d.join("model.json"));
    assert_eq!(m["result"]["model"]["source"], "empirical");

    gen_3x3(d);
    let out = qjsp(d, &["solve", "--mode", "optimize", "--instance", "inst.json", "--backend", "ms", "--model", "model.json"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn shave_and_embed_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_3x3(d);
    let out = qjsp(d, &["shave", "--instance", "inst.json", "--timespan", "8", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["report"]["vars_after"].as_u64() <= v["report"]["vars_before"].as_u64());

    qjsp(d, &["compile", "--instance", "inst.json", "--timespan", "7", "--shave", "-o", "q.qubo"]);
    let out = qjsp(d, &["embed", "--qubo", "q.qubo", "--hardware", "4,4", "--seed", "1", "-o", "e.json"]);
    assert_eq!(code(&out), 0);
    let e = json(&d.join("e.json"));
    assert_eq!(e["embedding"]["found"], true);
}

#[test]
fn bad_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.json"), "{\"machines\": 1, \"jobs\": []}").unwrap();
    assert_eq!(code(&qjsp(d, &["compile", "--instance", "bad.json", "--timespan", "3"])), 3);
    assert_eq!(code(&qjsp(d, &["compile", "--instance", "missing.json", "--timespan", "3"])), 3);
    gen_3x3(d);
    assert_eq!(
        code(&qjsp(d, &["compile", "--instance", "inst.json", "--timespan", "3", "--penalties", "1,0,1"])),
        3
    );
}
