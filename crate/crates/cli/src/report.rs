//! Report emission: records.csv, summary.json, plot_data.csv, run_meta.json.
//!
//! Output is deterministic: records are sorted canonically, floats use a
//! fixed nine-significant-digit format, and JSON field order is fixed, so
//! identical inputs produce byte-identical files. Wall-clock timing lives in
//! run_meta.json only.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use clifer_core::stats::{mean_ci95, KwResult};
use clifer_core::ClassLabel;

use crate::config::ExperimentConfig;
use crate::experiment::{order_string, CellAudit, ExperimentOutput, RunRecord};
use crate::variant::Variant;
use crate::HarnessError;

/// Nine significant digits, locale-free.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.8e}")
}

const RECORD_HEADER: [&str; 10] = [
    "variant",
    "subject_id",
    "order",
    "seed",
    "episode",
    "class_learned",
    "episodic_f1",
    "semantic_f1",
    "episodic_size",
    "semantic_size",
];

pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out = String::new();
    out.push_str(&RECORD_HEADER.join(","));
    out.push('\n');
    for r in records {
        let row = [
            r.variant.as_str().to_string(),
            r.subject_id.clone(),
            order_string(&r.order),
            r.seed.to_string(),
            r.episode.to_string(),
            r.class_learned.to_string(),
            r.episodic_f1.map(fmt_f64).unwrap_or_default(),
            r.semantic_f1.map(fmt_f64).unwrap_or_default(),
            r.episodic_size.to_string(),
            r.semantic_size.to_string(),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a records.csv produced by [`records_csv`].
pub fn parse_records_csv(path: impl AsRef<Path>) -> Result<Vec<RunRecord>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(|e| HarnessError::Data(clifer_core::Error::Schema(e.to_string())))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| HarnessError::Data(clifer_core::Error::Schema(e.to_string())))?;
        let expected: Vec<&str> = RECORD_HEADER.to_vec();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(HarnessError::Data(clifer_core::Error::Schema(format!(
                "unexpected records.csv header: {headers:?}"
            ))));
        }
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            HarnessError::Data(clifer_core::Error::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                msg: e.to_string(),
            })
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field_err = |msg: String| {
            HarnessError::Data(clifer_core::Error::Parse { line, msg })
        };
        let order = row[2]
            .split('-')
            .map(ClassLabel::from_str)
            .collect::<Result<Vec<_>, _>>()
            .map_err(HarnessError::Data)?;
        let opt_f64 = |s: &str, what: &str| -> Result<Option<f64>, HarnessError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| field_err(format!("invalid {what} `{s}`")))
            }
        };
        records.push(RunRecord {
            variant: row[0]
                .parse::<Variant>()
                .map_err(|_| field_err(format!("unknown variant `{}`", &row[0])))?,
            subject_id: row[1].to_string(),
            order,
            seed: row[3]
                .parse()
                .map_err(|_| field_err(format!("invalid seed `{}`", &row[3])))?,
            episode: row[4]
                .parse()
                .map_err(|_| field_err(format!("invalid episode `{}`", &row[4])))?,
            class_learned: row[5].parse().map_err(HarnessError::Data)?,
            episodic_f1: opt_f64(&row[6], "episodic_f1")?,
            semantic_f1: opt_f64(&row[7], "semantic_f1")?,
            episodic_size: row[8]
                .parse()
                .map_err(|_| field_err(format!("invalid episodic_size `{}`", &row[8])))?,
            semantic_size: row[9]
                .parse()
                .map_err(|_| field_err(format!("invalid semantic_size `{}`", &row[9])))?,
            wall_ms: 0.0,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, Serialize)]
struct HeadSummary {
    n: usize,
    mean: Option<String>,
    ci95_half: Option<String>,
}

fn summarize_head(values: &[f64]) -> HeadSummary {
    match values.len() {
        0 => HeadSummary {
            n: 0,
            mean: None,
            ci95_half: None,
        },
        1 => HeadSummary {
            n: 1,
            mean: Some(fmt_f64(values[0])),
            ci95_half: None,
        },
        _ => {
            let (mean, half) = mean_ci95(values).expect("two or more values");
            HeadSummary {
                n: values.len(),
                mean: Some(fmt_f64(mean)),
                ci95_half: Some(fmt_f64(half)),
            }
        }
    }
}

/// Per-(variant, episode) mean and CI for each memory head.
pub fn summary_json(records: &[RunRecord]) -> String {
    let mut grouped: BTreeMap<(String, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let entry = grouped
            .entry((r.variant.as_str().to_string(), r.episode))
            .or_default();
        if let Some(f1) = r.episodic_f1 {
            entry.0.push(f1);
        }
        if let Some(f1) = r.semantic_f1 {
            entry.1.push(f1);
        }
    }
    let rows: Vec<serde_json::Value> = grouped
        .into_iter()
        .map(|((variant, episode), (epi, sem))| {
            json!({
                "variant": variant,
                "episode": episode,
                "episodic": summarize_head(&epi),
                "semantic": summarize_head(&sem),
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("summary serializes");
    s.push('\n');
    s
}

/// Long-format table for external plotting: one row per
/// (episode, variant, head) with mean and CI bounds.
pub fn plot_data_csv(records: &[RunRecord]) -> String {
    let mut grouped: BTreeMap<(usize, String, &'static str), Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(f1) = r.episodic_f1 {
            grouped
                .entry((r.episode, r.variant.as_str().to_string(), "episodic"))
                .or_default()
                .push(f1);
        }
        if let Some(f1) = r.semantic_f1 {
            grouped
                .entry((r.episode, r.variant.as_str().to_string(), "semantic"))
                .or_default()
                .push(f1);
        }
    }
    let mut out = String::from("episode,variant,head,mean,ci_low,ci_high\n");
    for ((episode, variant, head), values) in grouped {
        let (mean, half) = if values.len() >= 2 {
            mean_ci95(&values).expect("two or more values")
        } else {
            (values[0], 0.0)
        };
        out.push_str(&format!(
            "{episode},{variant},{head},{},{},{}\n",
            fmt_f64(mean),
            fmt_f64((mean - half).max(0.0)),
            fmt_f64((mean + half).min(1.0)),
        ));
    }
    out
}

/// Full provenance for a run: configuration, statistics, audit counters and
/// the protocol interpretations baked into the harness.
pub fn run_meta_json(
    config: &ExperimentConfig,
    output: &ExperimentOutput,
    kw: Option<&KwResult>,
) -> String {
    let audit_totals = output
        .cells
        .iter()
        .fold(CellAudit::default(), |mut acc, c| {
            acc.train_sequences += c.audit.train_sequences;
            acc.train_frames += c.audit.train_frames;
            acc.replayed_trajectories += c.audit.replayed_trajectories;
            acc.imagined_samples += c.audit.imagined_samples;
            acc
        });
    let order_means: Vec<serde_json::Value> = output
        .order_means
        .iter()
        .map(|(order, mean)| json!({ "order": order_string(order), "mean_semantic_f1": fmt_f64(*mean) }))
        .collect();
    let doc = json!({
        "config": config,
        "records": output.records.len(),
        "cells": output.cells.len(),
        "warnings": output.warnings,
        "wall_ms_total": output.wall_ms,
        "audit": {
            "train_sequences": audit_totals.train_sequences,
            "train_frames": audit_totals.train_frames,
            "replayed_trajectories": audit_totals.replayed_trajectories,
            "imagined_samples": audit_totals.imagined_samples,
        },
        "kruskal_wallis": kw,
        "order_means": order_means,
        "notes": {
            "exp1_metric": "per-episode F1 is computed over the classes learned so far",
            "exp2_metric": "per-episode F1 is computed over all six classes",
            "baseline_reporting": "the baseline's single score is stored in the semantic_f1 column",
            "baseline_training": "the baseline trains sequentially on each episode's class only",
            "ci_method": "normal approximation, mean +- 1.96 * sd / sqrt(n)",
            "kw_grouping": "values grouped per class order as configured in kw_grouping",
        },
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("meta serializes");
    s.push('\n');
    s
}

/// Writes the four report files; returns their paths.
pub fn write_reports(
    out_dir: impl AsRef<Path>,
    config: &ExperimentConfig,
    output: &ExperimentOutput,
) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| HarnessError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let files = [
        ("records.csv", records_csv(&output.records)),
        ("summary.json", summary_json(&output.records)),
        ("plot_data.csv", plot_data_csv(&output.records)),
        (
            "run_meta.json",
            run_meta_json(config, output, output.kw.as_ref()),
        ),
    ];
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| HarnessError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}
