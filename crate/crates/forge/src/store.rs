//! File formats: dataset JSONL, stats and manifest JSON, report CSVs.

use std::io::Write;
use std::path::Path;

use benchforge_core::assemble::{StatsTable, TestInstance};
use benchforge_core::judge::{Aggregate, WinRateMatrix};
use benchforge_core::probe::PerplexityReport;
use benchforge_core::types::{QueryType, SourceKind};
use serde::{Deserialize, Serialize};

use crate::collector::CollectionWindow;
use crate::pipeline::DropCounts;

/// One instance per line, UTF-8, newline-terminated. Instances are
/// written in the order given; callers sort for determinism.
pub fn write_jsonl(path: &Path, instances: &[TestInstance]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for inst in instances {
        serde_json::to_writer(&mut out, inst)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> anyhow::Result<Vec<TestInstance>> {
    let body = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let inst: TestInstance = serde_json::from_str(line)
            .map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), i + 1))?;
        out.push(inst);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub window: CollectionWindow,
    pub seed: u64,
    pub pipeline_version: String,
    pub dataset_version: String,
    pub documents_in: usize,
    pub passages_kept: usize,
    pub instances_full: usize,
    pub instances_sampled: usize,
    pub drops: DropCounts,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    std::fs::write(path, body)?;
    Ok(())
}

/// Human-readable stats table: five type rows by three source columns
/// plus totals.
pub fn render_stats(stats: &StatsTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<12}", "type"));
    for src in SourceKind::ALL {
        out.push_str(&format!("{:>10}", src.as_str()));
    }
    out.push_str(&format!("{:>10}\n", "total"));
    for qt in QueryType::ALL {
        out.push_str(&format!("{:<12}", qt.as_str()));
        for src in SourceKind::ALL {
            out.push_str(&format!("{:>10}", stats.counts[&qt][&src]));
        }
        out.push_str(&format!("{:>10}\n", stats.type_totals[&qt]));
    }
    out.push_str(&format!("{:<12}", "total"));
    for src in SourceKind::ALL {
        out.push_str(&format!("{:>10}", stats.source_totals[&src]));
    }
    out.push_str(&format!("{:>10}\n", stats.total));
    out
}

/// `dataset,model,mean_ppl,n,control_length` rows.
pub fn write_ppl_csv(path: &Path, reports: &[&PerplexityReport]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dataset", "model", "mean_ppl", "n", "control_length"])?;
    for r in reports {
        w.write_record([
            r.dataset_name.as_str(),
            r.model_id.as_str(),
            &format!("{:.6}", r.mean_ppl),
            &r.examples_scored.to_string(),
            &r.control_length.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `model,query_type,mean_score,n` rows from single-answer grading.
pub fn write_scores_csv(path: &Path, agg: &Aggregate) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "query_type", "mean_score", "n"])?;
    for (model, by_type) in &agg.per_model_type {
        for (qt, score) in by_type {
            w.write_record([
                model.as_str(),
                qt.as_str(),
                &format!("{:.4}", score.mean_score),
                &score.n.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `model_a,model_b,wins_a,wins_b,ties` rows, one per unordered pair.
pub fn write_winrate_csv(path: &Path, matrix: &WinRateMatrix) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model_a", "model_b", "wins_a", "wins_b", "ties"])?;
    for i in 0..matrix.models.len() {
        for j in (i + 1)..matrix.models.len() {
            w.write_record([
                matrix.models[i].as_str(),
                matrix.models[j].as_str(),
                &matrix.wins[i][j].to_string(),
                &matrix.wins[j][i].to_string(),
                &matrix.ties[i][j].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
