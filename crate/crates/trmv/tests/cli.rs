use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use trmv::dataset::load_dataset;
use trmv::io::load_tensor;
use trmv::model::load_model;
use trmv::ExperimentConfig;

fn trmv(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trmv"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("run trmv")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = trmv(args, cwd);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn gen_writes_the_default_tensor_shapes() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--proc", "b", "--defaults", "--seed", "7", "-o", "b7"], dir.path());
    let d = load_dataset(&dir.path().join("b7")).unwrap();
    assert_eq!(d.inputs[0].shape(), &[200, 60]);
    assert_eq!(d.inputs[1].shape(), &[200, 50, 50]);
    assert_eq!(d.response.shape(), &[200, 60, 40]);
    assert_eq!(d.coefficients[1].shape(), &[50, 50, 60, 40]);

    ok(&["gen", "--overlay", "--samples", "200", "--seed", "3", "-o", "ov"], dir.path());
    let ov = load_dataset(&dir.path().join("ov")).unwrap();
    assert_eq!((ov.train.len(), ov.test.len()), (100, 100));
    assert_eq!(ov.inputs[0].shape(), &[200, 6]);
}

#[test]
fn pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let gen = [
        "gen", "--proc", "a", "--rho-c", "0", "--samples", "40", "--input-grid", "20",
        "--output-grid", "16", "--missing", "0.5", "--seed", "1", "-o",
    ];
    ok(&[&gen[..], &["a"]].concat(), p);
    ok(&[&gen[..], &["a2"]].concat(), p);
    for f in ["manifest.json", "x1.tnsr", "x2.tnsr", "y.tnsr", "train.mask", "b1.tnsr"] {
        assert_eq!(fs::read(p.join("a").join(f)).unwrap(), fs::read(p.join("a2").join(f)).unwrap(), "{f}");
    }

    fs::write(p.join("solver.toml"), "max_iter = 6\nlambda = 0.5\n").unwrap();
    for (i, method) in ["trmv", "tcmtot"].iter().enumerate() {
        for run in 0..2 {
            let model = format!("m{i}{run}.trmv");
            let diag = format!("m{i}{run}.csv");
            ok(
                &[
                    "fit", "--data", "a", "--method", method, "--lambda", "3", "--config", "solver.toml",
                    "--out-model", &model, "--out-diag", &diag,
                ],
                p,
            );
        }
        let m = |run: usize, ext: &str| fs::read(p.join(format!("m{i}{run}.{ext}"))).unwrap();
        assert_eq!(m(0, "trmv"), m(1, "trmv"));
        assert_eq!(m(0, "csv"), m(1, "csv"));
    }
    let diag = fs::read_to_string(p.join("m00.csv")).unwrap();
    assert!(diag.contains("# lambda = 0.5\n"), "config file must win over flags");
    assert!(diag.contains("# max_iter = 6\n"));
    assert!(diag.contains("# rank_ratio = 0.95\n"));
    let rows = trmv::diagnostics::read_fit_rows(&diag).unwrap();
    assert!(!rows.is_empty() && rows.len() <= 6);
    let (model, manifest) = load_model(&p.join("m00.trmv")).unwrap();
    assert_eq!((manifest.method.as_str(), manifest.input_count, model.lambda), ("trmv", 2, 0.5));

    ok(&["predict", "--model", "m00.trmv", "--data", "a", "-o", "yhat.tnsr"], p);
    let yhat = load_tensor(&p.join("yhat.tnsr")).unwrap();
    assert_eq!(yhat.shape(), &[20, 16]);
    let out = ok(&["eval", "--pred", "yhat.tnsr", "--data", "a"], p);
    let spe: f64 = out.lines().next().unwrap().strip_prefix("spe ").unwrap().parse().unwrap();
    assert!(spe > 0.0 && spe.is_finite());

    ok(&["predict", "--model", "m00.trmv", "--data", "a", "--split", "train", "-o", "fit.tnsr"], p);
    assert_eq!(ok(&["eval", "--pred", "fit.tnsr", "--truth", "fit.tnsr"], p), "spe 0\ntspe 0\n");
}

#[test]
fn bench_writes_one_summary_row_per_cell_and_method() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("tiny.toml"),
        r#"
seeds = [4]
[generator]
generator = "procedure-b"
input_dims = [[8], [5, 5]]
input_ranks = [2, 2]
output_dims = [6, 5]
output_rank = 2
[generator.sampling]
samples = 24
train_samples = 16
[solver]
max_iter = 3
admm_max_iter = 50
"#,
    )
    .unwrap();
    for out in ["r1", "r2"] {
        ok(&["bench", "--noise-grid", "--config", "tiny.toml", "--out-dir", out], p);
    }
    let summary = fs::read_to_string(p.join("r1/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 24 * 2);
    assert!(summary.lines().skip(1).all(|l| l.split(',').nth(5) == Some("0")), "{summary}");
    let report = fs::read_to_string(p.join("r1/report.csv")).unwrap();
    assert_eq!(report, fs::read_to_string(p.join("r2/report.csv")).unwrap());
    assert_eq!(summary, fs::read_to_string(p.join("r2/summary.csv")).unwrap());
    assert_eq!(fs::read_to_string(p.join("r1/timings.csv")).unwrap().lines().count(), 49);
    // Paired design: both methods of a replicate share one dataset checksum.
    let rows: Vec<Vec<String>> = report.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][0], "trmv");
        assert_eq!(pair[1][0], "tc-mtot");
        assert_eq!(pair[0][12], pair[1][12]);
        assert_eq!(pair[0][12].len(), 64);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let code = |args: &[&str]| trmv(args, p).status.code();
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["gen", "-o", "x"]), Some(2));
    assert_eq!(code(&["fit", "--data", "missing", "--out-model", "m"]), Some(3));
    fs::write(p.join("junk.tnsr"), b"TNSR\x07\x00").unwrap();
    assert_eq!(code(&["eval", "--pred", "junk.tnsr", "--truth", "junk.tnsr"]), Some(3));
    ok(&["gen", "--proc", "b", "--samples", "4", "--seed", "1", "-o", "d"], p);
    assert_eq!(code(&["fit", "--data", "d", "--method", "svd", "--out-model", "m"]), Some(2));
    assert_eq!(code(&["fit", "--data", "d", "--lambda", "-1", "--out-model", "m"]), Some(2));
    assert_eq!(code(&["gen", "--proc", "a", "--missing", "1.5", "-o", "e"]), Some(2));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        if name == "solver.toml" {
            let cfg = trmv::config::overlay_file(&trmv_core::TrmvConfig::default(), &path).unwrap();
            cfg.validate().unwrap();
        } else {
            let cfg = trmv::config::overlay_file(&ExperimentConfig::default(), &path).unwrap();
            cfg.validate().unwrap();
            cfg.generator.generate(0).unwrap();
        }
        seen += 1;
    }
    assert_eq!(seen, 5);
}
