mod common;

use std::fs;
use std::path::Path;

use mbgdt::cli::csvio::{parse_weights, read_dataset, SWEEP_HEADER};
use mbgdt::cli::run;

fn mbgdt(args: &[&str]) -> i32 {
    run(std::iter::once("mbgdt").chain(args.iter().copied()))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn generate_writes_n_train_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen");
    assert_eq!(mbgdt(&["generate", "--out", path(&out), "--set", "n_train=37"]), 0);
    let train = fs::read_to_string(out.join("train.csv")).unwrap();
    assert!(train.starts_with("# "));
    assert!(train.contains("# master_seed = 0\n"));
    let rows = data_lines(&train);
    assert_eq!(rows[0], "x,y,is_contaminated");
    assert_eq!(rows.len(), 1 + 37);
    assert_eq!(read_dataset(&out.join("test.csv")).unwrap().data.len(), 500);
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &str| {
        vec![
            "generate".to_string(),
            "--out".into(),
            o.to_string(),
            "--seed".into(),
            "17".into(),
            "--set".into(),
            "contamination.family=edge-corner".into(),
            "--set".into(),
            "contamination.epsilon=0.3".into(),
        ]
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        let v = args(path(o));
        assert_eq!(mbgdt(&v.iter().map(String::as_str).collect::<Vec<_>>()), 0);
    }
    for f in ["train.csv", "test.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let train = read_dataset(&a.join("train.csv")).unwrap();
    assert_eq!(train.contaminated_indices().len(), 60);
}

#[test]
fn unknown_key_exits_with_config_error() {
    assert_eq!(mbgdt(&["generate", "--set", "model.speed=3"]), 2);
    assert_eq!(mbgdt(&["fit", "--set", "nonsense"]), 2);
    assert_eq!(mbgdt(&["frobnicate"]), 2);
}

#[test]
fn config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    fs::write(&conf, "n_train = 12\n# a comment\nn_test = 3\n").unwrap();
    let out = dir.path().join("o");
    assert_eq!(mbgdt(&["generate", "--config", path(&conf), "--out", path(&out)]), 0);
    assert_eq!(read_dataset(&out.join("train.csv")).unwrap().data.len(), 12);
    assert_eq!(read_dataset(&out.join("test.csv")).unwrap().data.len(), 3);

    fs::write(&conf, "n_trian = 12\n").unwrap();
    assert_eq!(mbgdt(&["generate", "--config", path(&conf), "--out", path(&out)]), 2);
    assert_eq!(mbgdt(&["generate", "--config", path(&dir.path().join("missing.conf"))]), 4);
}

#[test]
fn fit_matches_least_squares_and_traces_every_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("line.csv");
    let mut text = String::from("x,y\n");
    for i in 0..100 {
        let x = -3.0 + 6.0 * i as f64 / 99.0;
        text.push_str(&format!("{x},{}\n", 0.5 - 1.5 * x));
    }
    fs::write(&train, text).unwrap();
    let out = dir.path().join("fit");
    let code = mbgdt(&[
        "fit",
        "--train",
        path(&train),
        "--out",
        path(&out),
        "--set",
        "model.degree=1",
        "--set",
        "model.max_iter=3000",
        "--set",
        "model.loss=squared",
        "--set",
        "model.convergence_tol=1e-9",
    ]);
    assert_eq!(code, 0);
    let (w, scale) = parse_weights(&fs::read_to_string(out.join("weights.txt")).unwrap(), "weights").unwrap();
    // weights act on scaled x; fold the scaling back before comparing
    let slope = w.coeffs[1] / scale.half_width;
    let intercept = w.coeffs[0] - slope * scale.center;
    let data = read_dataset(&train).unwrap().data;
    let oracle = common::least_squares(&data, 1);
    assert!((intercept - oracle[0]).abs() < 0.05, "{intercept} vs {}", oracle[0]);
    assert!((slope - oracle[1]).abs() < 0.05, "{slope} vs {}", oracle[1]);

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let rows = data_lines(&trace);
    assert_eq!(rows[0], "iteration,mean_batch_loss");
    let last: usize = rows.last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(rows.len() - 1, last + 1);
    assert!(rows.len() - 1 <= 3000);
}

#[test]
fn explicit_zero_trim_equals_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let common = ["--set", "model.max_iter=200"];
    let mut args_a = vec!["fit", "--out", path(&a)];
    args_a.extend(common);
    let mut args_b = vec!["fit", "--out", path(&b), "--set", "model.trim_fraction=0"];
    args_b.extend(common);
    assert_eq!(mbgdt(&args_a), 0);
    assert_eq!(mbgdt(&args_b), 0);
    for f in ["weights.txt", "trace.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn divergence_exits_with_numeric_error() {
    let code = mbgdt(&[
        "fit",
        "--set",
        "model.learning_rate=500",
        "--set",
        "model.loss=squared",
        "--set",
        "model.scale_x=false",
        "--set",
        "curve.x_max=5",
    ]);
    assert_eq!(code, 3);
}

#[test]
fn unreadable_training_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(mbgdt(&["fit", "--train", path(&missing)]), 4);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x,y\n1,notanumber\n").unwrap();
    assert_eq!(mbgdt(&["fit", "--train", path(&bad)]), 4);
}

#[test]
fn sweep_writes_one_row_per_grid_value() {
    let dir = tempfile::tempdir().unwrap();
    let run_once = |name: &str| {
        let out = dir.path().join(name);
        let code = mbgdt(&[
            "sweep",
            "--param",
            "distance-y",
            "--grid",
            "0.1,0.3,0.5,0.7,0.9",
            "--trials",
            "2",
            "--set",
            "contamination.family=edge-corner",
            "--set",
            "contamination.epsilon=0.2",
            "--set",
            "model.max_iter=150",
            "--out",
            path(&out),
        ]);
        assert_eq!(code, 0);
        fs::read_to_string(out).unwrap()
    };
    let first = run_once("a.csv");
    let rows = data_lines(&first);
    assert_eq!(rows[0], SWEEP_HEADER.join(","));
    assert_eq!(rows.len(), 6);
    assert!(first.contains("# sweep.param = distance-y\n"));
    assert_eq!(first, run_once("b.csv"));
}

#[test]
fn sweep_rejects_bad_parameters() {
    assert_eq!(mbgdt(&["sweep", "--param", "distance-z"]), 2);
    assert_eq!(mbgdt(&["sweep", "--param", "epsilon", "--grid", "0.3,0.1"]), 2);
}
