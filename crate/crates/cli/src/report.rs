//! CSV results and JSON-lines verification output.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Bumped whenever a column is added, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// One aggregate over all trials of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub experiment: String,
    pub task: String,
    pub variant: String,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub m_public: usize,
    pub radius: f64,
    pub lipschitz: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub sigma: f64,
    pub eta: f64,
    /// Smoothing radius; empty when the loss is not smoothed.
    pub lambda: Option<f64>,
    pub mean_excess: f64,
    pub std_error: f64,
    pub bound: f64,
    /// `mean_excess ≤ bound + 3·std_error`.
    pub within_bound: bool,
    /// The guarantee as the calibration formula states it.
    pub eps_stated: f64,
    /// The best `ε` the RDP accountant certifies at `delta`.
    pub eps_certified: f64,
    /// `t:stated:certified` entries separated by `;`, empty when the
    /// guarantee is uniform.
    pub per_index: String,
    pub notes: String,
}

impl ResultRow {
    fn sort_key(&self) -> (String, String, usize, usize, usize, usize, u64) {
        (
            self.experiment.clone(),
            self.task.clone(),
            self.n,
            self.d,
            self.k,
            self.m_public,
            self.seed,
        )
    }
}

/// Sorts rows so output does not depend on completion order.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.sort_key()
            .partial_cmp(&b.sort_key())
            .expect("keys are totally ordered")
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.delta.total_cmp(&b.delta))
    });
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut writer = csv::Writer::from_writer(out);
    for row in &sorted {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_rows(std::io::BufWriter::new(file), rows)
}

/// One JSON object per line.
pub fn write_json_lines<W: Write, T: Serialize>(mut out: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// `t:stated:certified;…`.
pub fn format_per_index(entries: &[(usize, f64, f64)]) -> String {
    entries
        .iter()
        .map(|(t, s, c)| format!("{t}:{s}:{c}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(experiment: &str, d: usize) -> ResultRow {
        ResultRow {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            task: "huber".into(),
            variant: "stop".into(),
            n: 16,
            d,
            k: 1,
            m_public: 0,
            radius: 1.0,
            lipschitz: 1.0,
            epsilon: 1.0,
            delta: 0.01,
            trials: 30,
            seed: 0,
            sigma: 1.0,
            eta: 0.1,
            lambda: None,
            mean_excess: 0.5,
            std_error: 0.01,
            bound: 1.0,
            within_bound: true,
            eps_stated: 1.0,
            eps_certified: 1.2,
            per_index: format_per_index(&[(1, 0.25, 0.3), (16, 1.0, 1.2)]),
            notes: String::new(),
        }
    }

    #[test]
    fn rows_are_sorted_with_a_header() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row("per-person", 8), row("baseline", 16), row("baseline", 8)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("schema_version,experiment,task"));
        assert!(lines[1].starts_with("1,baseline,huber,stop,16,8,"));
        assert!(lines[2].starts_with("1,baseline,huber,stop,16,16,"));
        assert!(lines[3].contains("1:0.25:0.3;16:1:1.2"));
    }

    #[test]
    fn json_lines_have_one_object_each() {
        let mut buf = Vec::new();
        write_json_lines(&mut buf, &[row("a", 1), row("b", 2)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("mean_excess").is_some());
        }
    }
}
