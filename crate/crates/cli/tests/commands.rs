use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use afse_core::dataset::SelectionManifest;
use afse_core::metrics::EvalReport;
use afse_core::prompts::PromptExport;
use afse_core::Mask;
use afse_testkit::synth;

fn afse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afse"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Fixture {
    dir: tempfile::TempDir,
    img: PathBuf,
    masks: PathBuf,
}

impl Fixture {
    fn new(n: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let (img, masks) = (dir.path().join("img"), dir.path().join("masks"));
        synth::write_drifting_dataset(&img, &masks, n);
        Self { dir, img, masks }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, cmd: &str, out: &Path, extra: &[&str]) -> Output {
        let mut args = vec![
            cmd,
            "--input",
            self.img.to_str().unwrap(),
            "--masks",
            self.masks.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        afse(&args)
    }
}

fn load<T: serde::de::DeserializeOwned>(path: PathBuf) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn score_writes_one_row_per_frame_and_reruns_identically() {
    let fx = Fixture::new(3);
    let (a, b) = (fx.out("a"), fx.out("b"));
    let o = fx.run("score", &a, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("weights    0.2,0.2,0.2,0.2,0.2"));
    let csv = std::fs::read_to_string(a.join("scores.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "id,B,C,E,H,S,F,cluster,distance,rank");
    let m: SelectionManifest = load(a.join("manifest.json"));
    assert!(m
        .frames
        .iter()
        .all(|r| r.cluster.is_none() && r.rank.is_none()));

    assert_eq!(code(&fx.run("score", &b, &[])), 0);
    assert_eq!(std::fs::read(b.join("scores.csv")).unwrap(), csv.as_bytes());
}

#[test]
fn configuration_errors_exit_two() {
    let fx = Fixture::new(3);
    let o = fx.run("score", &fx.out("x"), &["--reference", "frame_999"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("frame_999"));

    let o = fx.run("select", &fx.out("x"), &["--k", "9"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--k 9"));

    let o = fx.run(
        "select",
        &fx.out("x"),
        &["--weights", "1,x,0,0,0", "--bins-h", "1", "--k", "0"],
    );
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(
        msg.contains("--weights") && msg.contains("bins") && msg.contains("--k"),
        "{msg}"
    );

    assert_eq!(code(&afse(&["score", "--bogus"])), 2);
    assert_eq!(
        code(&afse(&["select", "--input", "x", "--strategy", "best"])),
        2
    );
    assert!(!fx.out("x").exists(), "no output before validation passes");
}

#[test]
fn help_lists_every_flag() {
    let o = afse(&["prompts", "--help"]);
    let help = String::from_utf8_lossy(&o.stdout);
    for flag in [
        "--input",
        "--masks",
        "--reference",
        "--k",
        "--seed",
        "--strategy",
        "--weights",
        "--canny-low",
        "--canny-high",
        "--bins-h",
        "--bins-s",
        "--normalize-features",
        "--split",
        "--jobs",
        "--out",
        "--prompt-strategy",
    ] {
        assert!(help.contains(flag), "missing {flag}");
    }
}

#[test]
fn select_strategies() {
    let fx = Fixture::new(10);
    let out = fx.out("u");
    assert_eq!(
        code(&fx.run("select", &out, &["--strategy", "uniform", "--k", "5"])),
        0
    );
    let m: SelectionManifest = load(out.join("selection.json"));
    let reps: Vec<&str> = m.representatives().iter().map(|r| r.id.as_str()).collect();
    assert_eq!(
        reps,
        [
            "frame_000",
            "frame_002",
            "frame_005",
            "frame_007",
            "frame_009"
        ]
    );

    assert_eq!(code(&fx.run("select", &out, &["--k", "10"])), 0);
    let m: SelectionManifest = load(out.join("selection.json"));
    assert!(m.frames.iter().all(|r| r.is_representative));

    let mut seen = Vec::new();
    for _ in 0..2 {
        assert_eq!(
            code(&fx.run("select", &out, &["--strategy", "random", "--seed", "5"])),
            0
        );
        seen.push(std::fs::read(out.join("selection.json")).unwrap());
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn split_restricts_frames() {
    let fx = Fixture::new(10);
    let out = fx.out("s");
    assert_eq!(code(&fx.run("score", &out, &["--split", "train"])), 0);
    let m: SelectionManifest = load(out.join("manifest.json"));
    assert_eq!(m.frames.len(), 7);
    assert_eq!(code(&fx.run("score", &out, &["--split", "val"])), 0);
    let v: SelectionManifest = load(out.join("manifest.json"));
    assert_eq!(v.frames.len(), 3);
    assert!(v
        .frames
        .iter()
        .all(|r| m.frames.iter().all(|t| t.id != r.id)));
}

#[test]
fn prompts_cover_representatives_and_report_failures() {
    let fx = Fixture::new(10);
    let out = fx.out("p");
    let o = fx.run("prompts", &out, &["--prompt-strategy", "bbox"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let e: PromptExport = load(out.join("prompts.json"));
    assert_eq!(e.prompts.len(), 5);
    assert!(e
        .prompts
        .iter()
        .all(|p| p.bbox.is_some() && p.points.is_empty()));

    // reuse that selection, with one mask shrunk to two pixels
    let sel = out.join("selection.json");
    let m: SelectionManifest = load(sel.clone());
    let first = m.representatives()[0].id.clone();
    let mut tiny = Mask::empty(48, 48).unwrap();
    tiny.set(10, 10, true);
    tiny.set(11, 10, true);
    tiny.save_png(fx.masks.join(format!("{first}.png")))
        .unwrap();
    let out2 = fx.out("p2");
    let o = fx.run(
        "prompts",
        &out2,
        &[
            "--prompt-strategy",
            "four-pos",
            "--from-selection",
            sel.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let e: PromptExport = load(out2.join("prompts.json"));
    assert_eq!(e.prompts.len(), 4);
    assert_eq!(e.skipped.len(), 1);
    assert_eq!(e.skipped[0].frame_id, first);
    assert!(stderr(&o).contains(&format!("skipped {first}")));
    assert!(!out2.join("selection.json").exists());

    // every representative without a usable mask: nonzero exit
    for f in std::fs::read_dir(&fx.masks).unwrap() {
        tiny.save_png(f.unwrap().path()).unwrap();
    }
    let o = fx.run("prompts", &fx.out("p3"), &["--prompt-strategy", "four-pos"]);
    assert_eq!(code(&o), 1);

    let o = afse(&[
        "prompts",
        "--input",
        fx.img.to_str().unwrap(),
        "--out",
        fx.out("p4").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "masks are required");
}

#[test]
fn eval_reports_means() {
    let dir = tempfile::tempdir().unwrap();
    let (pred, gt, out) = (
        dir.path().join("pred"),
        dir.path().join("gt"),
        dir.path().join("out"),
    );
    std::fs::create_dir_all(&pred).unwrap();
    std::fs::create_dir_all(&gt).unwrap();
    let a = Mask::from_fn(8, 8, |x, _| x < 4).unwrap();
    let b = Mask::from_fn(8, 8, |x, _| x < 2).unwrap();
    a.save_png(gt.join("f1.png")).unwrap();
    a.save_png(pred.join("f1.png")).unwrap();
    a.save_png(gt.join("f2.png")).unwrap();
    b.save_png(pred.join("f2.png")).unwrap();
    let run = |p: &Path| {
        afse(&[
            "eval",
            "--pred",
            p.to_str().unwrap(),
            "--gt",
            gt.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
    };

    let o = run(&pred);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: EvalReport = load(out.join("eval.json"));
    // f1 perfect; f2: |a∩b| = 16, |a| = 32, |b| = 16
    assert_eq!(r.mean_dice, (1.0 + 32.0 / 48.0) / 2.0);
    assert_eq!(r.mean_iou, (1.0 + 0.5) / 2.0);
    let csv = std::fs::read_to_string(out.join("eval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let o = run(&gt);
    assert_eq!(code(&o), 0);
    let r: EvalReport = load(out.join("eval.json"));
    assert_eq!((r.mean_dice, r.mean_iou), (1.0, 1.0));

    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&run(&empty)), 1);
}
