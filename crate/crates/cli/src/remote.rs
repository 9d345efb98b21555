use std::net::{IpAddr, SocketAddr};

use afse_client::Client;
use afse_core::api::{AnnotationRequest, ExportQuery, RawPoint, SelectRequest};
use afse_core::prompts::Label;
use afse_core::WeightConfig;
use afse_service::ServiceConfig;
use anyhow::{bail, Context};

use crate::args::{RemoteAction, RemoteCmd, ServeCmd};
use crate::run::{scoring_config, Failure, Outcome};

fn runtime() -> anyhow::Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?)
}

pub fn serve(cmd: &ServeCmd) -> Outcome {
    let mut problems = Vec::new();
    let score = scoring_config(&cmd.scoring, &mut problems);
    if !cmd.dataset.is_dir() {
        problems.push(format!(
            "--dataset {} is not a directory",
            cmd.dataset.display()
        ));
    }
    if let Some(m) = cmd.masks.as_ref().filter(|m| !m.is_dir()) {
        problems.push(format!("--masks {} is not a directory", m.display()));
    }
    let host: Option<IpAddr> = cmd.host.parse().ok();
    if host.is_none() {
        problems.push(format!("--host `{}` is not an IP address", cmd.host));
    }
    if !problems.is_empty() {
        return Err(Failure::Usage(
            problems
                .iter()
                .map(|p| format!("  - {p}"))
                .collect::<Vec<_>>()
                .join("\n"),
        ));
    }
    let config = ServiceConfig {
        dataset: cmd.dataset.clone(),
        masks: cmd.masks.clone(),
        score,
        jobs: cmd.scoring.jobs,
    };
    let addr = SocketAddr::new(host.expect("checked above"), cmd.port);
    runtime()?
        .block_on(afse_service::serve(addr, config, cmd.ui.clone()))
        .with_context(|| format!("serving on {addr}"))?;
    Ok(())
}

fn parse_point(s: &str) -> anyhow::Result<RawPoint> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y, label] = parts.as_slice() else {
        bail!("point `{s}` is not x,y,label");
    };
    let label = match *label {
        "positive" | "pos" | "1" => Label::Positive,
        "negative" | "neg" | "0" => Label::Negative,
        other => bail!("unknown point label `{other}`"),
    };
    Ok(RawPoint {
        x: x.parse().with_context(|| format!("point `{s}`"))?,
        y: y.parse().with_context(|| format!("point `{s}`"))?,
        label,
    })
}

fn parse_bbox(s: &str) -> anyhow::Result<[i64; 4]> {
    let v: Vec<i64> = s
        .split(',')
        .map(|p| p.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bbox `{s}`"))?;
    v.try_into()
        .map_err(|_| anyhow::anyhow!("bbox `{s}` needs four values"))
}

pub fn remote(cmd: &RemoteCmd) -> Outcome {
    // Parse local arguments before touching the network.
    let annotation = match &cmd.action {
        RemoteAction::Annotate {
            frame_id,
            points,
            bbox,
        } => {
            let parsed = points
                .iter()
                .map(|p| parse_point(p))
                .collect::<anyhow::Result<Vec<_>>>()
                .and_then(|pts| Ok((pts, bbox.as_deref().map(parse_bbox).transpose()?)));
            match parsed {
                Ok((points, bbox)) => Some(AnnotationRequest {
                    frame_id: frame_id.clone(),
                    points,
                    bbox,
                }),
                Err(e) => return Err(Failure::Usage(format!("  - {e:#}"))),
            }
        }
        _ => None,
    };
    let weights = match &cmd.action {
        RemoteAction::Select {
            weights: Some(w), ..
        } => Some(
            w.parse::<WeightConfig>()
                .map_err(|e| Failure::Usage(format!("  - --weights: {e}")))?,
        ),
        _ => None,
    };

    let client = Client::new(&cmd.url);
    let value = runtime()?.block_on(async {
        let v = match &cmd.action {
            RemoteAction::Status => serde_json::to_value(client.status().await?)?,
            RemoteAction::Frames => serde_json::to_value(client.frames().await?)?,
            RemoteAction::Reference { frame_id } => {
                serde_json::to_value(client.set_reference(frame_id).await?)?
            }
            RemoteAction::Scores => serde_json::to_value(client.scores().await?)?,
            RemoteAction::Select { selection, .. } => {
                let req = SelectRequest {
                    k: selection.k,
                    seed: selection.seed,
                    strategy: selection.strategy.into(),
                    weights,
                    normalize_features: None,
                };
                serde_json::to_value(client.select(&req).await?)?
            }
            RemoteAction::Annotate { .. } => {
                let req = annotation.as_ref().expect("parsed above");
                serde_json::to_value(client.annotate(req).await?)?
            }
            RemoteAction::Export {
                prompt_strategy,
                seed,
            } => {
                let q = ExportQuery {
                    strategy: (*prompt_strategy).into(),
                    seed: *seed,
                };
                serde_json::to_value(client.export(&q).await?)?
            }
        };
        anyhow::Ok(v)
    })?;

    let text = serde_json::to_string_pretty(&value).context("encoding response")? + "\n";
    match &cmd.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}
