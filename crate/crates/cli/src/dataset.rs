//! CSV datasets and the built-in synthetic generators.
//!
//! A dataset has a header row, one `label` column of nonnegative integers,
//! and any number of real feature columns in raw input units.

use std::path::Path;

use anyhow::{anyhow, bail};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use smoothcert::LabeledExample64;

use crate::failure::{Classify, Failure};

pub fn read_csv(path: &Path) -> Result<Vec<LabeledExample64>, Failure> {
    let ctx = || format!("cannot read dataset {}", path.display());
    let mut reader = csv::Reader::from_path(path).input_ctx(ctx)?;
    let headers = reader.headers().input_ctx(ctx)?.clone();
    let label_col = headers
        .iter()
        .position(|h| h.trim() == "label")
        .ok_or_else(|| anyhow!("no `label` column"))
        .input_ctx(ctx)?;
    if headers.len() < 2 {
        return Err(anyhow!("no feature columns")).input_ctx(ctx);
    }
    let mut data = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.input_ctx(ctx)?;
        let parsed = parse_row(&record, label_col).input_ctx(|| format!("{}, line {line}", path.display()))?;
        data.push(parsed);
    }
    if data.is_empty() {
        return Err(anyhow!("dataset has no rows")).input_ctx(ctx);
    }
    Ok(data)
}

fn parse_row(record: &csv::StringRecord, label_col: usize) -> anyhow::Result<LabeledExample64> {
    let mut features = Vec::with_capacity(record.len().saturating_sub(1));
    let mut label = None;
    for (i, field) in record.iter().enumerate() {
        let field = field.trim();
        if i == label_col {
            label = Some(field.parse::<usize>().map_err(|_| anyhow!("label `{field}` is not a nonnegative integer"))?);
        } else {
            let v: f64 = field.parse().map_err(|_| anyhow!("feature `{field}` is not a number"))?;
            if !v.is_finite() {
                bail!("feature `{field}` is not finite");
            }
            features.push(v);
        }
    }
    let label = label.ok_or_else(|| anyhow!("missing label"))?;
    Ok(LabeledExample64::new(features, label)?)
}

pub fn write_csv(path: &Path, data: &[LabeledExample64]) -> Result<(), Failure> {
    let ctx = || format!("cannot write dataset {}", path.display());
    let dim = data.first().map_or(0, |e| e.features.len());
    let mut writer = csv::Writer::from_path(path).runtime_ctx(ctx)?;
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    writer.write_record(&header).runtime_ctx(ctx)?;
    for ex in data {
        let mut row: Vec<String> = ex.features.iter().map(|v| v.to_string()).collect();
        row.push(ex.label.to_string());
        writer.write_record(&row).runtime_ctx(ctx)?;
    }
    writer.flush().runtime_ctx(ctx)
}

fn normal(std: f64) -> anyhow::Result<Normal<f64>> {
    if !(std >= 0.0 && std.is_finite()) {
        bail!("std must be finite and nonnegative");
    }
    Ok(Normal::new(0.0, std)?)
}

/// Alternating labels 0, 1; class `l` is `N((2l - 1) mean e_1, std^2 I)`.
pub fn two_gaussians(count: usize, dim: usize, mean: f64, std: f64, seed: u64) -> anyhow::Result<Vec<LabeledExample64>> {
    if dim == 0 {
        bail!("dimension must be at least 1");
    }
    let noise = normal(std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let label = i % 2;
            let mut x: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
            x[0] += if label == 1 { mean } else { -mean };
            Ok(LabeledExample64::new(x, label)?)
        })
        .collect()
}

/// Clusters at `(+-spread, +-spread)` visited in turn; label 1 when the
/// centre's coordinates have equal signs.
pub fn xor_grid(count: usize, spread: f64, std: f64, seed: u64) -> anyhow::Result<Vec<LabeledExample64>> {
    const CENTRES: [(f64, f64, usize); 4] = [(1.0, 1.0, 1), (-1.0, 1.0, 0), (-1.0, -1.0, 1), (1.0, -1.0, 0)];
    let noise = normal(std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let (cx, cy, label) = CENTRES[i % 4];
            let x = vec![cx * spread + noise.sample(&mut rng), cy * spread + noise.sample(&mut rng)];
            Ok(LabeledExample64::new(x, label)?)
        })
        .collect()
}
