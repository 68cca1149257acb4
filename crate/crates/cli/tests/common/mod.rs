#![allow(dead_code)]

use std::path::Path;

use spoofsim::Io;

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the CLI in-process with captured streams.
pub fn run(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = spoofsim::run(
        std::iter::once("spoofsim").chain(args.iter().copied()),
        &mut Io {
            out: &mut out,
            err: &mut err,
            color: false,
        },
    );
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn run_ok(args: &[&str]) -> Output {
    let o = run(args);
    assert_eq!(o.code, 0, "{args:?} failed: {}", o.stderr);
    o
}

pub fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The `key: value` field printed by a command.
pub fn field<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
}

/// Every regular file under `dir`, relative path and contents, sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Runs each command of a workflow rooted at `dir`, where `{d}` stands for
/// the directory.
pub fn run_workflow(dir: &Path, steps: &[Vec<String>]) {
    for step in steps {
        let args: Vec<String> = step.iter().map(|a| a.replace("{d}", path(dir))).collect();
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        run_ok(&refs);
    }
}

/// A workflow touching every command with fixed seeds.
pub fn full_workflow() -> Vec<Vec<String>> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        s(&["profiles"]),
        s(&[
            "synth",
            "--preset",
            "backdrop",
            "--az-step",
            "1",
            "--range",
            "20",
            "--out",
            "{d}/wall.bin",
        ]),
        s(&[
            "synth",
            "--preset",
            "roof64",
            "--az-step",
            "0.5",
            "--out",
            "{d}/bg.pcd",
        ]),
        s(&[
            "attack",
            "--config",
            "{d}/hfr.toml",
            "--in",
            "{d}/wall.bin",
            "--out",
            "{d}/hfr.bin",
            "--seed",
            "11",
        ]),
        s(&[
            "attack",
            "--config",
            "{d}/inject.toml",
            "--in",
            "{d}/wall.bin",
            "--out",
            "{d}/inject.pcd",
            "--seed",
            "11",
        ]),
        s(&[
            "scenario",
            "--background",
            "{d}/bg.pcd",
            "--d-min",
            "4",
            "--d-max",
            "12",
            "--step",
            "4",
            "--out",
            "{d}/scenes",
        ]),
        s(&[
            "count",
            "--benign",
            "{d}/wall.bin",
            "--attacked",
            "{d}/hfr.bin",
            "--bin-deg",
            "5",
            "--out",
            "{d}/count.csv",
        ]),
        s(&[
            "sweep",
            "--axis",
            "rand_model",
            "--values",
            "none,Pixell",
            "--trials",
            "4",
            "--seed",
            "5",
            "--background",
            "{d}/bg.pcd",
            "--distances",
            "8,12",
            "--out",
            "{d}/sweep.csv",
        ]),
        s(&[
            "sweep",
            "--axis",
            "frequency",
            "--values",
            "1e6,2e6",
            "--trials",
            "3",
            "--seed",
            "5",
            "--background",
            "{d}/bg.pcd",
            "--out",
            "{d}/freq.csv",
        ]),
        s(&[
            "sweep",
            "--axis",
            "downsample_n",
            "--values",
            "20",
            "--trials",
            "2",
            "--seed",
            "5",
            "--background",
            "{d}/bg.pcd",
            "--external-dir",
            "{d}/ext",
        ]),
        s(&[
            "eval",
            "--clouds",
            "{d}/scenes",
            "--detections",
            "{d}/dets",
            "--gt",
            "{d}/scenes",
            "--mode",
            "injection",
            "--out",
            "{d}/eval.csv",
            "--report",
            "{d}/eval.json",
        ]),
    ]
}

/// Files the full workflow needs before it starts.
pub fn seed_workflow_inputs(dir: &Path) {
    std::fs::write(
        dir.join("hfr.toml"),
        "profile = \"VLP-16\"\n[removal]\nkind = \"hfr\"\nprobability = 1.0\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("inject.toml"),
        "profile = \"Helios\"\n[injection]\n",
    )
    .unwrap();
    let dets = dir.join("dets");
    std::fs::create_dir_all(&dets).unwrap();
    for k in 0..3 {
        let det = r#"[{"center":[10.0,0.0,-0.9],"dims":[4.5,1.9,1.6],"yaw":0.0,"score":0.8,"label":"car"}]"#;
        std::fs::write(dets.join(format!("scene_{k:03}.json")), det).unwrap();
    }
}
