//! Batch commands. Configuration is checked in full before any pixel work,
//! and every problem found is reported together.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use afse_core::dataset::{
    ingest, load_manifest, save_manifest, DatasetManifest, FrameEntry, SelectionManifest,
};
use afse_core::metrics::{evaluate_run, PairingRule};
use afse_core::pipeline::{
    prompt_export, representative_ids, score_frames, score_manifest, selection_manifest, with_jobs,
    ScoreConfig,
};
use afse_core::prompts::PromptStrategy;
use afse_core::{FeatureParams, Strategy, WeightConfig};
use anyhow::Context;

use crate::args::{
    EvalCmd, InputArgs, PromptsCmd, ScoreCmd, ScoringArgs, SelectCmd, SelectionArgs,
};

/// Why a command stopped: bad configuration (exit 2) or a failure while
/// running (exit 1).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "invalid configuration:\n{msg}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<afse_core::Error> for Failure {
    fn from(e: afse_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

pub type Outcome = Result<(), Failure>;

fn usage(problems: Vec<String>) -> Result<(), Failure> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Usage(
            problems
                .iter()
                .map(|p| format!("  - {p}"))
                .collect::<Vec<_>>()
                .join("\n"),
        ))
    }
}

/// Score configuration from flags; problems are appended rather than raised.
pub fn scoring_config(args: &ScoringArgs, problems: &mut Vec<String>) -> ScoreConfig {
    let params = FeatureParams {
        canny_low: args.canny_low,
        canny_high: args.canny_high,
        hist_bins_h: args.bins_h,
        hist_bins_s: args.bins_s,
        ..FeatureParams::default()
    };
    problems.extend(params.problems());
    let weights = match args.weights.parse::<WeightConfig>() {
        Ok(w) => w,
        Err(e) => {
            problems.push(format!("--weights: {e}"));
            WeightConfig::default()
        }
    };
    if args.jobs == Some(0) {
        problems.push("--jobs must be at least 1".into());
    }
    ScoreConfig {
        params,
        weights,
        normalize_features: args.normalize_features,
    }
}

struct Prepared {
    dataset: DatasetManifest,
    frames: Vec<FrameEntry>,
    reference: usize,
    cfg: ScoreConfig,
    jobs: Option<usize>,
}

fn prepare(
    input: &InputArgs,
    scoring: &ScoringArgs,
    k: Option<i64>,
    needs_masks: bool,
) -> Result<Prepared, Failure> {
    let mut problems = Vec::new();
    let cfg = scoring_config(scoring, &mut problems);
    if !input.input.is_dir() {
        problems.push(format!(
            "--input {} is not a directory",
            input.input.display()
        ));
    }
    match &input.masks {
        Some(m) if !m.is_dir() => {
            problems.push(format!("--masks {} is not a directory", m.display()))
        }
        None if needs_masks => problems.push("--masks is required to derive prompts".into()),
        _ => {}
    }
    if let Some(k) = k {
        if k < 1 {
            problems.push(format!("--k must be at least 1 (got {k})"));
        }
    }
    usage(problems)?;

    let ingested = ingest(&input.input, input.masks.as_deref(), None).map_err(|e| match e {
        afse_core::Error::Dataset(msg) => Failure::Usage(format!("  - {msg}")),
        other => other.into(),
    })?;
    for w in &ingested.warnings {
        tracing::warn!("{w}");
    }
    let dataset = ingested.manifest;
    let frames = dataset.select(input.split.into());

    let mut problems = Vec::new();
    if frames.is_empty() {
        problems.push(format!("split `{:?}` selects no frames", input.split).to_lowercase());
    }
    let reference = match &input.reference {
        None => 0,
        Some(id) => match frames.iter().position(|f| &f.id == id) {
            Some(i) => i,
            None if dataset.index_of(id).is_some() => {
                problems.push(format!(
                    "reference frame `{id}` is not in the selected split"
                ));
                0
            }
            None => {
                problems.push(format!(
                    "reference frame `{id}` not found in {}",
                    input.input.display()
                ));
                0
            }
        },
    };
    if let Some(k) = k {
        if k as usize > frames.len() && !frames.is_empty() {
            problems.push(format!(
                "--k {k} exceeds the {} selected frames",
                frames.len()
            ));
        }
    }
    usage(problems)?;

    Ok(Prepared {
        dataset,
        frames,
        reference,
        cfg,
        jobs: scoring.jobs,
    })
}

fn header(command: &str, input: &InputArgs, p: &Prepared, selection: Option<&SelectionArgs>) {
    let w = p.cfg.weights.as_array().map(|v| v.to_string()).join(",");
    let fp = &p.cfg.params;
    eprintln!("afse {command} {}", env!("CARGO_PKG_VERSION"));
    eprintln!(
        "  input      {} ({} frames, split {:?})",
        input.input.display(),
        p.frames.len(),
        input.split
    );
    if let Some(m) = &input.masks {
        eprintln!("  masks      {}", m.display());
    }
    eprintln!("  reference  {}", p.frames[p.reference].id);
    eprintln!(
        "  weights    {w} (normalize features: {})",
        p.cfg.normalize_features
    );
    eprintln!(
        "  features   canny {}/{} sigma {} | hs bins {}x{} | hu epsilon {:e}",
        fp.canny_low,
        fp.canny_high,
        fp.gaussian_sigma,
        fp.hist_bins_h,
        fp.hist_bins_s,
        fp.hu_epsilon
    );
    eprintln!(
        "  split      ratio {} seed {}",
        p.dataset.split_ratio, p.dataset.split_seed
    );
    if let Some(s) = selection {
        eprintln!(
            "  selection  {} k {} seed {}",
            Strategy::from(s.strategy),
            s.k,
            s.seed
        );
    }
    match p.jobs {
        Some(j) => eprintln!("  jobs       {j}"),
        None => eprintln!("  jobs       all cores"),
    }
}

fn write_text(out: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let path = out.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: serde::Serialize>(out: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let path = out.join(name);
    save_manifest(value, &path)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn create_out(out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn features(p: &Prepared) -> Result<Vec<afse_core::FeatureVector>, Failure> {
    Ok(with_jobs(p.jobs, || {
        score_frames(&p.frames, p.reference, &p.cfg.params, None)
    })??)
}

fn select_manifest(p: &Prepared, s: &SelectionArgs) -> Result<SelectionManifest, Failure> {
    let fv = features(p)?;
    Ok(selection_manifest(
        &p.frames,
        p.reference,
        &fv,
        &p.cfg,
        s.strategy.into(),
        s.k as usize,
        s.seed,
    )?)
}

pub fn score(cmd: &ScoreCmd) -> Outcome {
    let p = prepare(&cmd.input, &cmd.scoring, None, false)?;
    header("score", &cmd.input, &p, None);
    let fv = features(&p)?;
    let manifest = score_manifest(&p.frames, p.reference, &fv, &p.cfg);
    create_out(&cmd.input.out)?;
    write_text(&cmd.input.out, "scores.csv", &manifest.to_csv())?;
    write_json(&cmd.input.out, "manifest.json", &manifest)?;
    write_json(&cmd.input.out, "dataset.json", &p.dataset)?;
    Ok(())
}

pub fn select(cmd: &SelectCmd) -> Outcome {
    let p = prepare(&cmd.input, &cmd.scoring, Some(cmd.selection.k), false)?;
    header("select", &cmd.input, &p, Some(&cmd.selection));
    let manifest = select_manifest(&p, &cmd.selection)?;
    create_out(&cmd.input.out)?;
    write_text(&cmd.input.out, "scores.csv", &manifest.to_csv())?;
    write_json(&cmd.input.out, "selection.json", &manifest)?;
    write_json(&cmd.input.out, "dataset.json", &p.dataset)?;
    eprintln!(
        "representatives: {}",
        representative_ids(&manifest).join(", ")
    );
    Ok(())
}

pub fn prompts(cmd: &PromptsCmd) -> Outcome {
    let p = prepare(&cmd.input, &cmd.scoring, Some(cmd.selection.k), true)?;
    let strategy = PromptStrategy::from(cmd.prompt_strategy);
    header("prompts", &cmd.input, &p, Some(&cmd.selection));
    eprintln!("  prompts    {strategy}");
    create_out(&cmd.input.out)?;

    let targets = match &cmd.from_selection {
        Some(path) => {
            let sel: SelectionManifest =
                load_manifest(path).map_err(|e| Failure::Usage(format!("  - {e}")))?;
            let ids = representative_ids(&sel);
            let unknown: Vec<String> = ids
                .iter()
                .filter(|id| !p.frames.iter().any(|f| &f.id == *id))
                .map(|id| format!("selection frame `{id}` is not in the selected input"))
                .collect();
            usage(unknown)?;
            ids
        }
        None => {
            let sel = select_manifest(&p, &cmd.selection)?;
            write_json(&cmd.input.out, "selection.json", &sel)?;
            representative_ids(&sel)
        }
    };

    let export = prompt_export(
        &p.frames,
        &targets,
        strategy,
        cmd.selection.seed,
        &HashMap::new(),
    );
    write_json(&cmd.input.out, "prompts.json", &export)?;
    for s in &export.skipped {
        eprintln!("skipped {}: {}", s.frame_id, s.reason);
    }
    if export.prompts.is_empty() && !targets.is_empty() {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "no representative frame yielded a {strategy} prompt"
        )));
    }
    Ok(())
}

pub fn eval(cmd: &EvalCmd) -> Outcome {
    let mut problems = Vec::new();
    for (flag, dir) in [("--pred", &cmd.pred), ("--gt", &cmd.gt)] {
        if !dir.is_dir() {
            problems.push(format!("{flag} {} is not a directory", dir.display()));
        }
    }
    usage(problems)?;
    let rule = PairingRule {
        pred_suffix: cmd.pred_suffix.clone(),
    };
    let report = evaluate_run(&cmd.pred, &cmd.gt, &rule)?;
    create_out(&cmd.out)?;
    write_text(&cmd.out, "eval.csv", &report.to_csv())?;
    write_json(&cmd.out, "eval.json", &report)?;
    for s in &report.skipped {
        eprintln!("unpaired: {s}");
    }
    eprintln!(
        "{} frames: mean dice {:.6}, mean iou {:.6}",
        report.frame_count, report.mean_dice, report.mean_iou
    );
    Ok(())
}
