use std::path::Path;
use std::process::{Command, Output};

use qroute_core::circuit::{parse_circuit, validate_routed};
use qroute_core::{Architecture, CircuitFormat, RoutedCircuit};

fn qroute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qroute")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qroute(args);
    assert!(out.status.success(), "qroute {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_families() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.txt");
    ok(&["gen", "--family", "single_full", "--qubits", "16", "--seed", "1", "--out", s(&full)]);
    let c = parse_circuit(&std::fs::read_to_string(&full).unwrap(), CircuitFormat::Gatelist).unwrap();
    assert_eq!((c.len(), c.depth()), (8, 1));

    let multi = dir.path().join("multi.txt");
    ok(&[
        "gen",
        "--family",
        "multi",
        "--qubits",
        "20",
        "--layers",
        "4",
        "--density",
        "0.5",
        "--out",
        s(&multi),
    ]);
    let c = parse_circuit(&std::fs::read_to_string(&multi).unwrap(), CircuitFormat::Gatelist).unwrap();
    assert_eq!(c.len(), 20);

    let rand_a = dir.path().join("a.txt");
    let rand_b = dir.path().join("b.txt");
    for p in [&rand_a, &rand_b] {
        ok(&["gen", "--family", "random", "--qubits", "6", "--gates", "30", "--seed", "9", "--out", s(p)]);
    }
    assert_eq!(std::fs::read(&rand_a).unwrap(), std::fs::read(&rand_b).unwrap());

    assert!(!qroute(&["gen", "--family", "random", "--qubits", "6", "--out", s(&rand_a)]).status.success());
}

#[test]
fn train_then_route() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.cfg");
    std::fs::write(&cfg, "train_gates=6\ntrain_circuits=8\nbatch_size=8\n").unwrap();
    let model = dir.path().join("m.txt");
    ok(&[
        "train",
        "--arch",
        "grid:2x2",
        "--config",
        s(&cfg),
        "--out",
        s(&model),
        "--episodes",
        "20",
        "--seed",
        "4",
    ]);
    let log = std::fs::read_to_string(dir.path().join("m.txt.log.csv")).unwrap();
    assert!(log.starts_with("episode,steps,return,loss,epsilon\n"));
    assert_eq!(log.lines().count(), 21);

    let circuit = dir.path().join("c.txt");
    std::fs::write(&circuit, "qubits 4\n0 3\n1 2\n0 1\n2 3\n").unwrap();
    let placement = dir.path().join("p.txt");
    std::fs::write(&placement, "0 3 1 2\n").unwrap();
    let arch = Architecture::grid(2, 2).unwrap();
    let logical =
        parse_circuit(&std::fs::read_to_string(&circuit).unwrap(), CircuitFormat::Gatelist).unwrap();
    for (router, placement) in
        [(s(&model), s(&placement)), ("greedy", "random:3"), ("random_policy", "random:3")]
    {
        let out = dir.path().join("routed.txt");
        let stdout = ok(&[
            "route",
            "--arch",
            "grid:2x2",
            "--model",
            router,
            "--circuit",
            s(&circuit),
            "--placement",
            placement,
            "--out",
            s(&out),
        ]);
        assert!(stdout.contains("cdr"), "{stdout}");
        let routed = RoutedCircuit::parse_dump(&std::fs::read_to_string(&out).unwrap()).unwrap();
        validate_routed(&logical, &routed, &arch).unwrap();
    }

    let out = dir.path().join("dec.txt");
    ok(&[
        "route",
        "--arch",
        "grid:2x2",
        "--model",
        "greedy",
        "--circuit",
        s(&circuit),
        "--placement",
        s(&placement),
        "--out",
        s(&out),
        "--decompose",
    ]);
    let routed = RoutedCircuit::parse_dump(&std::fs::read_to_string(&out).unwrap()).unwrap();
    validate_routed(&logical, &routed, &arch).unwrap();

    // Model trained for 2x2 cannot route on a 3x3 grid.
    assert!(!qroute(&[
        "route",
        "--arch",
        "grid:3x3",
        "--model",
        s(&model),
        "--circuit",
        s(&circuit),
        "--out",
        s(&out),
    ])
    .status
    .success());
}

#[test]
fn bench_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.cfg");
    std::fs::write(
        &cfg,
        "arch=grid:3x3\nseed=12\ngates=20\nbatches=2\ncircuits_per_batch=10\nrouters=greedy,random_policy\n",
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let summary = ok(&["bench", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["bench", "--config", s(&cfg), "--out", s(&b)]);
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    assert!(text.starts_with(
        "router,family,arch,circuit_id,batch,orig_depth,routed_depth,cdo,cdr,swaps,status,seconds\n"
    ));
    assert_eq!(text.lines().count(), 1 + 2 * 20);
    assert!(summary.contains("greedy"));

    std::fs::write(&cfg, "no_such_key=1\n").unwrap();
    assert!(!qroute(&["bench", "--config", s(&cfg), "--out", s(&a)]).status.success());
}

#[test]
fn sweep_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.cfg");
    std::fs::write(
        &grid,
        "arch=grid:2x2\ntrain_gates=4\ntrain_circuits=4\nepisodes=4\nbatch_size=4\ngates=4\n\
         validation_circuits=4\ngamma=0.9|0.5\n",
    )
    .unwrap();
    let out = dir.path().join("sweep");
    let stdout = ok(&["sweep", "--grid", s(&grid), "--out", s(&out)]);
    let manifest = std::fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert_eq!(stdout, manifest);
    assert_eq!(manifest.lines().count(), 3);
    assert!(out.join("model_0.txt").exists() && out.join("model_1.txt").exists());
}
