use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn pasta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pasta")).args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_markup_export_plot_round() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = fixtures().join("corpus/manifest.csv");
    let model = d.join("model.json");
    ok(&pasta(&[
        "train", "--manifest", s(&manifest), "--k", "4", "--s", "3", "--metric", "dtw", "--n-f0", "32", "--seed", "7",
        "--norm", "phrase", "--out", s(&model),
    ]));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(m["barycenters"].as_array().unwrap().len(), 4);
    assert!(d.join("model.patterns.jsonl").exists());

    let markup = d.join("markup.jsonl");
    ok(&pasta(&["markup", "--manifest", s(&manifest), "--model", s(&model), "--out", s(&markup)]));
    assert_eq!(fs::read(&markup).unwrap(), fs::read(fixtures().join("golden_markup.jsonl")).unwrap());

    let data = d.join("data.jsonl");
    ok(&pasta(&["export-dataset", "--markup", s(&markup), "--manifest", s(&manifest), "--out", s(&data)]));
    let first: serde_json::Value =
        serde_json::from_str(fs::read_to_string(&data).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first["text"], "мама мыла раму");
    assert_eq!(first["labels"].as_array().unwrap().len(), 3);

    let svg = d.join("model.svg");
    ok(&pasta(&[
        "plot", "model", "--model", s(&model), "--patterns", s(&d.join("model.patterns.jsonl")), "--out", s(&svg),
    ]));
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("class=\"panel\"").count(), 4);
    let svg2 = d.join("model2.svg");
    ok(&pasta(&[
        "plot", "model", "--model", s(&model), "--patterns", s(&d.join("model.patterns.jsonl")), "--out", s(&svg2),
    ]));
    assert_eq!(fs::read(&svg).unwrap(), fs::read(&svg2).unwrap());

    let msvg = d.join("markup.svg");
    ok(&pasta(&["plot", "markup", "--markup", s(&markup), "--model", s(&model), "--utterance", "u04", "--out", s(&msvg)]));
    assert_eq!(fs::read_to_string(&msvg).unwrap().matches("class=\"word\"").count(), 5);

    let plan = d.join("plan.json");
    fs::write(
        &plan,
        r#"{"words":[{"text":"мама","stress":1},{"text":"мыла","stress":1},{"text":"раму","stress":1}],"type":"statement"}"#,
    )
    .unwrap();
    let labels = d.join("labels.json");
    ok(&pasta(&["synth", "--text-plan", s(&plan), "--model", s(&model), "--out", s(&labels)]));
    let l: serde_json::Value = serde_json::from_str(&fs::read_to_string(&labels).unwrap()).unwrap();
    assert_eq!(l["words"].as_array().unwrap().len(), 3);
    assert_eq!(l["marks"][0]["sym"], "M");
}

#[test]
fn momel_and_spline_plot() {
    let dir = tempfile::tempdir().unwrap();
    let f0 = fixtures().join("corpus/f0/u01.csv");
    let spline = dir.path().join("s.json");
    ok(&pasta(&["momel", "--f0", s(&f0), "--out", s(&spline)]));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&spline).unwrap()).unwrap();
    let n = v["anchors"].as_array().unwrap().len();
    assert!(n >= 2);
    let svg = dir.path().join("s.svg");
    ok(&pasta(&["plot", "spline", "--spline", s(&spline), "--out", s(&svg)]));
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("class=\"anchor\"").count(), n);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(&dir.path().join("m.json")).to_string();
    let manifest = fixtures().join("corpus/manifest.csv");
    // usage errors
    assert_eq!(pasta(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(pasta(&[]).status.code(), Some(1));
    assert_eq!(
        pasta(&["train", "--manifest", s(&manifest), "--k", "0", "--out", &out]).status.code(),
        Some(1)
    );
    assert_eq!(
        pasta(&["train", "--manifest", s(&manifest), "--n-f0", "2", "--out", &out]).status.code(),
        Some(1)
    );
    assert_eq!(pasta(&["--help"]).status.code(), Some(0));
    // data errors
    assert_eq!(
        pasta(&["train", "--manifest", "/nonexistent/m.csv", "--out", &out]).status.code(),
        Some(2)
    );
    assert_eq!(
        pasta(&["train", "--manifest", s(&manifest), "--k", "500", "--out", &out]).status.code(),
        Some(2)
    );
}
