use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::experiment::{ExperimentSpec, RunArtifacts};
use crate::{Result, RunError};

pub const RESULTS_FILE: &str = "results.csv";
pub const RESULTS_HEADER: &str =
    "method,shape,error_kind,error,wall_time_s,min_loss_epoch,condition,den_bounded,status";

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub shape: String,
    pub error_kind: String,
    pub error: Option<f64>,
    pub wall_time_s: f64,
    pub min_loss_epoch: Option<usize>,
    pub condition: Option<f64>,
    pub den_bounded: bool,
    pub status: String,
}

impl ResultRow {
    pub fn new(method: String, shape: String, error_kind: &str) -> Self {
        Self {
            method,
            shape,
            error_kind: error_kind.into(),
            error: None,
            wall_time_s: 0.0,
            min_loss_epoch: None,
            condition: None,
            den_bounded: false,
            status: "ok".into(),
        }
    }

    /// A row standing in for a run that raised an error.
    pub fn failed(spec: &ExperimentSpec, err: &RunError) -> Self {
        let mut row = Self::new(spec.method_id(), spec.shape(), "uniform");
        row.status = format!("failed: {}", err.kind());
        row
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Output {
        path: path.to_path_buf(),
        source,
    }
}

/// Output directory handle; all writes for a directory go through one value.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Appends to `results.csv`, writing the header when the file is new or empty.
    pub fn append_row(&self, row: &ResultRow) -> Result<()> {
        let path = self.path(RESULTS_FILE);
        let fresh = fs::metadata(&path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        w.serialize(row)?;
        w.flush().map_err(io_err(&path))?;
        Ok(())
    }

    fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn write_spec(&self, id: &str, spec: &ExperimentSpec) -> Result<PathBuf> {
        self.write_text(&format!("{id}.spec.json"), &serde_json::to_string_pretty(spec)?)
    }

    pub fn write_artifacts(&self, id: &str, art: &RunArtifacts) -> Result<Vec<PathBuf>> {
        let mut written = vec![self.write_text(&format!("{id}.approx.json"), &art.approximant_json)?];
        if let Some(trace) = &art.trace {
            let path = self.path(&format!("{id}.trace.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["iteration", "z_lo", "z_hi", "feasible"])?;
            for step in trace {
                w.serialize((step.iteration, step.z_lo, step.z_hi, step.feasible))?;
            }
            w.flush().map_err(io_err(&path))?;
            written.push(path);
        }
        if let Some((index, losses)) = &art.history {
            let path = self.path(&format!("{id}.history.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record([*index, if *index == "epoch" { "loss" } else { "error" }])?;
            for (i, l) in losses.iter().enumerate() {
                w.serialize((i + 1, l))?;
            }
            w.flush().map_err(io_err(&path))?;
            written.push(path);
        }
        written.push(self.write_plot(id, &art.plot)?);
        Ok(written)
    }

    fn write_plot(&self, id: &str, plot: &[(Vec<f64>, f64, f64)]) -> Result<PathBuf> {
        let path = self.path(&format!("{id}.plot.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let bivariate = plot.first().is_some_and(|(p, _, _)| p.len() == 2);
        if bivariate {
            w.write_record(["x", "t", "f", "approx", "abs_error"])?;
        } else {
            w.write_record(["x", "f", "approx"])?;
        }
        for (p, f, a) in plot {
            let mut rec: Vec<String> = p.iter().map(f64::to_string).collect();
            rec.push(f.to_string());
            rec.push(a.to_string());
            if bivariate {
                rec.push((f - a).abs().to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn write_summary(&self, markdown: &str) -> Result<PathBuf> {
        self.write_text("compare.md", markdown)
    }
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Markdown table sorted by error; failed rows sink to the bottom and the
/// smallest error of each error kind is marked.
pub fn render_markdown(rows: &[ResultRow]) -> String {
    let mut order: Vec<&ResultRow> = rows.iter().collect();
    order.sort_by(|a, b| match (a.error, b.error) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let mut best_seen: Vec<&str> = Vec::new();
    let mut out = String::from(
        "| rank | method | shape | error kind | error | wall time (s) | min-loss epoch | status | best |\n\
         |---:|---|---|---|---:|---:|---:|---|:---:|\n",
    );
    for (i, r) in order.iter().enumerate() {
        let best = r.error.is_some() && !best_seen.contains(&r.error_kind.as_str());
        if best {
            best_seen.push(&r.error_kind);
        }
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {:.3} | {} | {} | {} |",
            i + 1,
            r.method,
            r.shape,
            r.error_kind,
            r.error.map(|e| format!("{e:.6e}")).unwrap_or_else(|| "n/a".into()),
            r.wall_time_s,
            fmt_opt(r.min_loss_epoch),
            r.status,
            if best { "*" } else { "" }
        );
    }
    out
}
