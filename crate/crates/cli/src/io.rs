//! File formats: dataset CSV, model files, trajectory and curve exports,
//! loss logs and plain-text reports.
//!
//! Every format starts with a `# format: <name> <version>` tag line.
//! Floating-point values are written with Rust's shortest-round-trip
//! formatting, so a save/load cycle reproduces the exact bits. All writes
//! go through [`write_atomic`]: content lands in a temp file first and is
//! renamed into place, so outputs are never half-written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, anyhow, bail};
use sawtooth_core::data::LabeledDataset;
use sawtooth_core::evaluation::StepCurve;
use sawtooth_core::predictor::{DenoiserConfig, DenoiserModel};
use sawtooth_core::sampler::Trajectory;
use sawtooth_core::series::TimeSeries;

pub const DATASET_TAG: &str = "# format: dataset-csv v1";
pub const MODEL_TAG: &str = "# format: denoiser-model v1";
pub const TRAJECTORY_TAG: &str = "# format: trajectory v1";
pub const CURVE_TAG: &str = "# format: step-curve v1";
pub const LOSS_TAG: &str = "# format: loss-log v1";

/// Writes via a temp file in the same directory plus rename, so a crash
/// can never leave a torn file behind.
pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent()
        && !parent.as_os_str().is_empty()
    {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp.{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} -> {}", tmp.display(), path.display()))?;
    Ok(())
}

/// FNV-1a 64 over the little-endian bytes of a state; used for the optional
/// per-step trajectory checksums.
pub fn state_checksum(series: &TimeSeries) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |byte: u8| {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x100_0000_01b3);
    };
    for &v in series.values() {
        for byte in v.to_le_bytes() {
            eat(byte);
        }
    }
    hash
}

// ---------------------------------------------------------------------------
// dataset CSV

/// Serializes a dataset: one row per (sample, channel), the label repeated
/// on each channel row, time points as columns.
pub fn dataset_to_csv(dataset: &LabeledDataset) -> anyhow::Result<String> {
    let (channels, length) = dataset.shape().ok_or_else(|| anyhow!("empty dataset"))?;
    for name in dataset.class_names() {
        if name.contains(',') || name.contains('\n') {
            bail!("class name '{name}' cannot contain commas or newlines");
        }
    }
    let mut out = String::new();
    out.push_str(DATASET_TAG);
    out.push('\n');
    out.push_str("sample,channel,label");
    for t in 0..length {
        let _ = write!(out, ",t{t}");
    }
    out.push('\n');
    for (idx, (series, &label)) in dataset.samples().iter().zip(dataset.labels()).enumerate() {
        let name = &dataset.class_names()[label];
        for c in 0..channels {
            let _ = write!(out, "{idx},{c},{name}");
            for &v in series.channel(c) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn save_dataset(path: &Path, dataset: &LabeledDataset) -> anyhow::Result<()> {
    write_atomic(path, &dataset_to_csv(dataset)?)
}

/// Parses a dataset CSV, reporting offending line numbers on malformed
/// input. Class ids are assigned in order of first appearance.
pub fn dataset_from_csv(text: &str) -> anyhow::Result<LabeledDataset> {
    let mut lines = text.lines().enumerate();
    let (_, tag) = lines.next().ok_or_else(|| anyhow!("empty file"))?;
    if tag.trim_end() != DATASET_TAG {
        bail!("line 1: expected '{DATASET_TAG}', got '{tag}'");
    }
    let (_, header) = lines
        .next()
        .ok_or_else(|| anyhow!("line 2: missing header row"))?;
    let header_cols: Vec<&str> = header.split(',').collect();
    if header_cols.len() < 4
        || header_cols[0] != "sample"
        || header_cols[1] != "channel"
        || header_cols[2] != "label"
    {
        bail!("line 2: header must start with 'sample,channel,label,t0,...'");
    }
    let length = header_cols.len() - 3;

    struct Row {
        line: usize,
        sample: usize,
        channel: usize,
        label: String,
        values: Vec<f64>,
    }
    let mut rows: Vec<Row> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != header_cols.len() {
            bail!(
                "line {line_no}: expected {} columns, got {} (ragged row)",
                header_cols.len(),
                cols.len()
            );
        }
        let sample: usize = cols[0]
            .parse()
            .map_err(|e| anyhow!("line {line_no}: bad sample index '{}': {e}", cols[0]))?;
        let channel: usize = cols[1]
            .parse()
            .map_err(|e| anyhow!("line {line_no}: bad channel index '{}': {e}", cols[1]))?;
        let mut values = Vec::with_capacity(length);
        for (k, cell) in cols[3..].iter().enumerate() {
            let v: f64 = cell.parse().map_err(|e| {
                anyhow!("line {line_no}: non-numeric cell '{cell}' in column t{k}: {e}")
            })?;
            values.push(v);
        }
        rows.push(Row {
            line: line_no,
            sample,
            channel,
            label: cols[2].to_string(),
            values,
        });
    }
    if rows.is_empty() {
        bail!("no data rows: a dataset file must contain at least one sample");
    }

    // rows must arrive sample-major with channels 0..C in order
    let channels = rows.iter().map(|r| r.channel).max().unwrap() + 1;
    if !rows.len().is_multiple_of(channels) {
        bail!(
            "line {}: {} rows do not split into {channels}-channel samples",
            rows.last().unwrap().line,
            rows.len()
        );
    }
    let n_samples = rows.len() / channels;
    let mut class_names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(n_samples);
    let mut samples = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let chunk = &rows[s * channels..(s + 1) * channels];
        let mut values = Vec::with_capacity(channels * length);
        for (c, row) in chunk.iter().enumerate() {
            if row.sample != s || row.channel != c {
                bail!(
                    "line {}: expected row for sample {s} channel {c}, got sample {} channel {}",
                    row.line,
                    row.sample,
                    row.channel
                );
            }
            if row.label != chunk[0].label {
                bail!(
                    "line {}: label '{}' disagrees with '{}' of the same sample",
                    row.line,
                    row.label,
                    chunk[0].label
                );
            }
            values.extend_from_slice(&row.values);
        }
        let label_id = match class_names.iter().position(|n| *n == chunk[0].label) {
            Some(id) => id,
            None => {
                class_names.push(chunk[0].label.clone());
                class_names.len() - 1
            }
        };
        labels.push(label_id);
        samples.push(
            TimeSeries::new(channels, length, values)
                .map_err(|e| anyhow!("sample {s} (line {}): {e}", chunk[0].line))?,
        );
    }
    Ok(LabeledDataset::new(samples, labels, class_names)?)
}

pub fn load_dataset(path: &Path) -> anyhow::Result<LabeledDataset> {
    let text = fs::read_to_string(path)
        .map_err(|e| anyhow!("cannot read dataset {}: {e}", path.display()))?;
    dataset_from_csv(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// model file

pub fn model_to_text(model: &DenoiserModel) -> String {
    let cfg = model.config();
    let params = model.flatten_params();
    let mut out = String::new();
    out.push_str(MODEL_TAG);
    out.push('\n');
    let _ = writeln!(out, "channels = {}", cfg.channels);
    let _ = writeln!(out, "length = {}", cfg.length);
    let _ = writeln!(out, "hidden1 = {}", cfg.hidden1);
    let _ = writeln!(out, "hidden2 = {}", cfg.hidden2);
    let _ = writeln!(out, "t_max = {}", cfg.t_max);
    let _ = writeln!(out, "params = {}", params.len());
    for p in params {
        let _ = writeln!(out, "{p}");
    }
    out
}

pub fn save_model(path: &Path, model: &DenoiserModel) -> anyhow::Result<()> {
    write_atomic(path, &model_to_text(model))
}

pub fn model_from_text(text: &str) -> anyhow::Result<DenoiserModel> {
    let mut lines = text.lines();
    let tag = lines.next().ok_or_else(|| anyhow!("empty model file"))?;
    if tag.trim_end() != MODEL_TAG {
        bail!("expected '{MODEL_TAG}', got '{tag}'");
    }
    let mut header = std::collections::BTreeMap::new();
    for key in [
        "channels", "length", "hidden1", "hidden2", "t_max", "params",
    ] {
        let line = lines
            .next()
            .ok_or_else(|| anyhow!("model header truncated before '{key}'"))?;
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("bad header line '{line}'"))?;
        if k.trim() != key {
            bail!("expected header key '{key}', got '{}'", k.trim());
        }
        let value: usize = v
            .trim()
            .parse()
            .map_err(|e| anyhow!("bad value for '{key}': {e}"))?;
        header.insert(key, value);
    }
    let config = DenoiserConfig {
        channels: header["channels"],
        length: header["length"],
        hidden1: header["hidden1"],
        hidden2: header["hidden2"],
        t_max: header["t_max"],
    };
    let declared = header["params"];
    if declared != config.param_count() {
        bail!(
            "header declares {declared} params but the architecture needs {}",
            config.param_count()
        );
    }
    let mut params = Vec::with_capacity(declared);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        params.push(
            line.trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("bad parameter '{line}': {e}"))?,
        );
    }
    if params.len() != declared {
        bail!("expected {declared} parameters, found {}", params.len());
    }
    Ok(DenoiserModel::from_flat_params(config, &params)?)
}

pub fn load_model(path: &Path) -> anyhow::Result<DenoiserModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| anyhow!("cannot read model {}: {e}", path.display()))?;
    model_from_text(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// trajectory and curve exports

/// Columnar trajectory export: one row per transition of each sample.
/// Checksums of the post-transition states are included when requested and
/// available (recording must have been on).
pub fn trajectories_to_text(trajectories: &[Trajectory], checksums: bool) -> String {
    let mut out = String::new();
    out.push_str(TRAJECTORY_TAG);
    out.push('\n');
    if checksums {
        out.push_str("sample,iteration,tau_from,tau_to,checksum\n");
    } else {
        out.push_str("sample,iteration,tau_from,tau_to\n");
    }
    for (idx, trajectory) in trajectories.iter().enumerate() {
        for (step, label) in trajectory.labels().iter().enumerate() {
            let _ = write!(
                out,
                "{idx},{},{},{}",
                label.iteration, label.tau_from, label.tau_to
            );
            if checksums {
                // states()[0] is the initial state
                let state = &trajectory.states()[step + 1];
                let _ = write!(out, ",{:016x}", state_checksum(state));
            }
            out.push('\n');
        }
    }
    out
}

pub fn save_trajectories(
    path: &Path,
    trajectories: &[Trajectory],
    checksums: bool,
) -> anyhow::Result<()> {
    write_atomic(path, &trajectories_to_text(trajectories, checksums))
}

pub fn curve_to_csv(curve: &StepCurve) -> String {
    let mut out = String::new();
    out.push_str(CURVE_TAG);
    out.push('\n');
    out.push_str("step,iteration,score,match_id\n");
    for p in curve.points() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.step,
            p.iteration,
            p.score.value(),
            p.match_id
        );
    }
    out
}

pub fn save_curve(path: &Path, curve: &StepCurve) -> anyhow::Result<()> {
    write_atomic(path, &curve_to_csv(curve))
}

pub fn loss_log_to_csv(log: &[f64]) -> String {
    let mut out = String::new();
    out.push_str(LOSS_TAG);
    out.push('\n');
    out.push_str("step,loss\n");
    for (i, l) in log.iter().enumerate() {
        let _ = writeln!(out, "{i},{l}");
    }
    out
}

// ---------------------------------------------------------------------------
// reports

/// Plain-text `key = value` report. The timestamp lives only in the header
/// comment, so report bodies stay byte-comparable across reruns.
pub struct Report {
    body: String,
}

impl Report {
    pub fn new(kind: &str) -> Self {
        let unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut body = String::new();
        let _ = writeln!(body, "# format: {kind} v1");
        let _ = writeln!(body, "# generated_unix: {unix}");
        Self { body }
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.body, "{key} = {value}");
        self
    }

    /// Float field in shortest-round-trip form (`30.0`, not `30`).
    pub fn float_field(&mut self, key: &str, value: f64) -> &mut Self {
        let _ = writeln!(self.body, "{key} = {value:?}");
        self
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        write_atomic(path, &self.body)
    }

    pub fn text(&self) -> &str {
        &self.body
    }
}

/// Reads a `key = value` report body back into pairs, skipping comments.
pub fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .filter_map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}
