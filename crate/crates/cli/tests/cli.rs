use std::path::Path;
use std::process::{Command, Output};

use depthpair::dataset::{raster, Dataset, FrameTuple, TupleState};
use depthpair::geometry::{CameraTag, ColorFrame, DepthFrame, Intrinsics, Mask};

fn depthpair(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depthpair"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&depthpair(&["frobnicate"], dir.path())), 64);
    assert_eq!(code(&depthpair(&["mask", "--no-such-flag"], dir.path())), 64);
    assert_eq!(code(&depthpair(&["evaluate", "--mse-domain", "sideways"], dir.path())), 64);
    assert_eq!(code(&depthpair(&["--help"], dir.path())), 0);
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = depthpair(&["mask", "--masking.min_pts", "0"], dir.path());
    assert_eq!(code(&o), 1);
    let o = depthpair(&["mask", "--masking.bogus", "1"], dir.path());
    assert_eq!(code(&o), 1);
    let o = depthpair(&["calibrate"], dir.path());
    assert_eq!(code(&o), 1, "no correspondences configured");
}

#[test]
fn integrity_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = depthpair(&["--dataset", "missing", "export"], dir.path());
    assert_eq!(code(&o), 2);
    std::fs::write(dir.path().join("bad.csv"), "id,xh,yh,zh,xl,yl,zl\na,1,2,oops,1,2,3\n").unwrap();
    let o = depthpair(&["calibrate", "--correspondences", "bad.csv"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn calibrate_pure_translation() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("id,xh,yh,zh,xl,yl,zl\n");
    for (i, p) in [[0.0, 0.0, 1.0], [0.3, 0.0, 1.2], [0.0, 0.4, 0.9], [0.2, -0.1, 1.5], [-0.3, 0.2, 1.1]]
        .iter()
        .enumerate()
    {
        csv += &format!("p{i},{},{},{},{},{},{}\n", p[0], p[1], p[2], p[0] + 0.1, p[1], p[2]);
    }
    std::fs::write(dir.path().join("corr.csv"), csv).unwrap();
    let o = depthpair(
        &["--dataset", "ds", "calibrate", "--correspondences", "corr.csv", "--output", "calib.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("calib.json")).unwrap()).unwrap();
    for (r, row) in v["rotation"].as_array().unwrap().iter().enumerate() {
        for (c, x) in row.as_array().unwrap().iter().enumerate() {
            let want = if r == c { 1.0 } else { 0.0 };
            assert!((x.as_f64().unwrap() - want).abs() < 1e-12);
        }
    }
    let t: Vec<f64> = v["translation_m"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((t[0] - 0.1).abs() < 1e-12 && t[1].abs() < 1e-12 && t[2].abs() < 1e-12);
    assert!(v["rms_residual_m"].as_f64().unwrap() < 1e-12);
    assert!(dir.path().join("ds/runs/calibrate.json").exists());
}

/// Three small masked tuples plus predictions identical to their targets.
fn masked_dataset(root: &Path) {
    let intr = |tag| Intrinsics::new(20.0, 20.0, 8.0, 6.0, 0.001, 16, 12, tag).unwrap();
    let mut ds = Dataset::create(root, &intr(CameraTag::Lq), &intr(CameraTag::Hq)).unwrap();
    let preds = root.join("predictions");
    std::fs::create_dir_all(&preds).unwrap();
    for i in 0..3u32 {
        let depth = |off: f32| DepthFrame::from_fn(16, 12, 0.001, |u, v| 700.0 + (u * v) as f32 + off).unwrap();
        let color = ColorFrame::filled(16, 12, [90, 90, 90]);
        let target = depth(0.0);
        let mut t = FrameTuple::raw(format!("s{i}"), color.clone(), depth(3.0 + i as f32), color, target.clone()).unwrap();
        let mut mask = Mask::empty(16, 12);
        for u in 4..12 {
            mask.set(u, 6, true);
        }
        t.mask = Some(mask);
        t.state = TupleState {
            aligned: true,
            masked: true,
            augmented: false,
        };
        ds.write_tuple(&t).unwrap();
        raster::write_dfd(&preds.join(format!("s{i}.dfd")), &target).unwrap();
    }
    ds.save_manifest().unwrap();
}

#[test]
fn evaluate_perfect_predictions() {
    let dir = tempfile::tempdir().unwrap();
    masked_dataset(&dir.path().join("ds"));
    let o = depthpair(&["--dataset", "ds", "--json", "evaluate"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ds/reports/evaluate.json")).unwrap()).unwrap();
    let tuples = report["tuples"].as_array().unwrap();
    assert_eq!(tuples.len(), 3);
    for t in tuples {
        assert_eq!(t["prediction"]["l1"], 0.0);
        assert_eq!(t["prediction"]["mse"], 0.0);
        assert_eq!(t["it_ot"], 0.0);
    }
    assert_eq!(report["aggregate"]["input"]["l1"]["median"], 4.0);
    assert!(dir.path().join("ds/reports/evaluate.csv").exists());

    // Every stdout line is a JSON object.
    let stdout = String::from_utf8(o.stdout).unwrap();
    let events: Vec<serde_json::Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events.first().unwrap()["event"], "start");
    assert_eq!(events.last().unwrap()["event"], "done");
}

#[test]
fn missing_predictions_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    masked_dataset(&dir.path().join("ds"));
    std::fs::remove_file(dir.path().join("ds/predictions/s1.dfd")).unwrap();
    let o = depthpair(&["--dataset", "ds", "evaluate"], dir.path());
    assert_eq!(code(&o), 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ds/reports/evaluate.json")).unwrap()).unwrap();
    assert_eq!(report["missing_predictions"], serde_json::json!(["s1"]));
    assert_eq!(report["aggregate"]["prediction"]["l1"]["n"], 2);
}

#[test]
fn denoise_writes_predictions_and_dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("ds");
    masked_dataset(&root);
    std::fs::remove_dir_all(root.join("predictions")).unwrap();
    let o = depthpair(&["--dataset", "ds", "--dry-run", "denoise", "--method", "rgf"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(!root.join("predictions").exists());
    assert!(!root.join("runs").exists());
    let o = depthpair(&["--dataset", "ds", "denoise", "--method", "bilateral"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for i in 0..3 {
        let p = raster::read_dfd(&root.join(format!("predictions/s{i}.dfd"))).unwrap();
        assert_eq!(p.dims(), (16, 12));
    }
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("runs/denoise.json")).unwrap()).unwrap();
    assert_eq!(rec["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    masked_dataset(&dir.path().join("ds"));
    std::fs::write(
        dir.path().join("run.toml"),
        "[paths]\ndataset = \"ds\"\n[metrics]\nmse_domain = \"full\"\n",
    )
    .unwrap();
    let o = depthpair(&["--config", "run.toml", "evaluate"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("ds/reports/evaluate.json")).unwrap();
    assert!(report.contains("\"mse_domain\": \"full\""));
    let o = depthpair(&["--config", "run.toml", "evaluate", "--mse-domain", "mask"], dir.path());
    assert_eq!(code(&o), 0);
    let report = std::fs::read_to_string(dir.path().join("ds/reports/evaluate.json")).unwrap();
    assert!(report.contains("\"mse_domain\": \"mask\""));
}
