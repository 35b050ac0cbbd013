//! Aggregation of per-example certification records: certified-accuracy
//! curves, the Bernstein high-probability lower bound, and curves
//! recomputed as if `certify` had drawn a different number of samples.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bounds::Radius;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::smoothing::{
    certification_from_counts, project_counts, Certification, ClassCounts, Label, SmoothingParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Certified,
    Abstain,
}

/// One persisted `certify` result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificationRecord {
    pub example_index: u64,
    pub true_label: Label,
    pub outcome: Outcome,
    pub predicted_label: Option<Label>,
    pub radius: Option<Radius<f64>>,
    pub pa_lower: Option<f64>,
    /// Estimation-stage counts, when the run stored them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<ClassCounts>,
    pub sigma: f64,
    pub n0: u64,
    pub n: u64,
    pub alpha: f64,
    pub seed: u64,
    pub wall_time_ms: Option<f64>,
}

impl CertificationRecord {
    pub fn new(
        example_index: u64,
        true_label: Label,
        certification: &Certification<f64>,
        params: &SmoothingParams<f64>,
        seed: u64,
    ) -> Self {
        let outcome = match certification {
            Certification::Certified { .. } => Outcome::Certified,
            Certification::Abstain => Outcome::Abstain,
        };
        Self {
            example_index,
            true_label,
            outcome,
            predicted_label: certification.label(),
            radius: certification.radius(),
            pa_lower: certification.pa_lower(),
            counts: None,
            sigma: params.sigma(),
            n0: params.n0(),
            n: params.n(),
            alpha: params.alpha(),
            seed,
            wall_time_ms: None,
        }
    }

    /// Certified with the true label. Always false for abstentions.
    pub fn correct(&self) -> bool {
        self.outcome == Outcome::Certified && self.predicted_label == Some(self.true_label)
    }

    /// Certified correctly with radius at least `r`.
    pub fn certified_at(&self, r: f64) -> bool {
        self.correct() && self.radius.is_some_and(|rad| rad.at_least(r))
    }

    /// Checks the schema invariants of a parsed record.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(format!("record {}: {msg}", self.example_index)));
        match self.outcome {
            Outcome::Certified => {
                if self.predicted_label.is_none() || self.radius.is_none() || self.pa_lower.is_none() {
                    return bad("certified records need predicted_label, radius and pa_lower");
                }
                if self.pa_lower.is_some_and(|p| !(p > 0.5 && p <= 1.0)) {
                    return bad("pa_lower of a certified record must lie in (1/2, 1]");
                }
            }
            Outcome::Abstain => {
                if self.predicted_label.is_some() || self.radius.is_some() || self.pa_lower.is_some() {
                    return bad("abstentions carry no label, radius or pa_lower");
                }
            }
        }
        if SmoothingParams::new(self.sigma, self.n0, self.n, self.alpha).is_err() {
            return bad("invalid smoothing parameters");
        }
        Ok(())
    }

    /// The record `certify` would have produced from the stored counts
    /// rescaled to `n_new` samples. Abstentions are re-examined using the
    /// top stored class as the guess.
    pub fn projected(&self, n_new: u64) -> Result<Self> {
        let counts = self
            .counts
            .as_ref()
            .ok_or(Error::MissingField { index: self.example_index, field: "counts" })?;
        let projected = project_counts(counts, n_new)?;
        let guess = match self.predicted_label.or_else(|| counts.top().map(|(l, _)| l)) {
            Some(g) => g,
            None => return Err(Error::MissingField { index: self.example_index, field: "counts" }),
        };
        let params = SmoothingParams::new(self.sigma, self.n0, n_new, self.alpha)?;
        let cert = certification_from_counts(guess, &projected, params.sigma(), params.alpha());
        let mut out = Self::new(self.example_index, self.true_label, &cert, &params, self.seed);
        out.counts = Some(projected);
        Ok(out)
    }
}

/// Fraction of records certified correctly at radius `>= r`.
pub fn certified_accuracy(records: &[CertificationRecord], r: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Domain("no records".into()));
    }
    Ok(records.iter().filter(|rec| rec.certified_at(r)).count() as f64 / records.len() as f64)
}

/// `max(0, (Y/m - alpha - sqrt(2 alpha (1 - alpha) ln(1/rho) / m)
/// - ln(1/rho) / (3m)) / (1 - alpha))`: with probability at least `1 - rho`
/// a lower bound on the certified accuracy when each of the `m`
/// certificates independently fails with probability at most `alpha`.
pub fn bernstein_lower_bound<S: Scalar>(y: u64, m: u64, alpha: S, rho: S) -> Result<S> {
    if m == 0 || y > m {
        return Err(Error::InvalidParams(format!("need 0 <= Y <= m and m >= 1, got Y={y}, m={m}")));
    }
    if !(alpha > S::zero() && alpha < S::of(0.5)) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    if !(rho > S::zero() && rho < S::one()) {
        return Err(Error::InvalidParams(format!("rho must lie in (0, 1), got {rho}")));
    }
    let mm = S::of_count(m);
    let log_inv = -rho.ln();
    let two = S::of(2.0);
    let value = (S::of_count(y) / mm
        - alpha
        - (two * alpha * (S::one() - alpha) * log_inv / mm).sqrt()
        - log_inv / (S::of(3.0) * mm))
        / (S::one() - alpha);
    Ok(value.max(S::zero()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub radius: f64,
    pub accuracy: f64,
    pub lower_bound: f64,
}

/// Approximate certified accuracy and its Bernstein lower bound (at
/// confidence `1 - rho`, using the largest `alpha` among the records) at
/// each radius.
pub fn accuracy_curve(records: &[CertificationRecord], radii: &[f64], rho: f64) -> Result<Vec<CurveRow>> {
    if records.is_empty() {
        return Err(Error::Domain("no records".into()));
    }
    if radii.windows(2).any(|w| !(w[0] <= w[1])) || radii.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidParams("radii must be finite, nonnegative and ascending".into()));
    }
    let alpha = records.iter().map(|r| r.alpha).fold(0.0, f64::max);
    let m = records.len() as u64;
    radii
        .iter()
        .map(|&r| {
            let y = records.iter().filter(|rec| rec.certified_at(r)).count() as u64;
            Ok(CurveRow {
                radius: r,
                accuracy: y as f64 / m as f64,
                lower_bound: bernstein_lower_bound(y, m, alpha, rho)?,
            })
        })
        .collect()
}

/// The accuracy curve recomputed from stored counts rescaled to `n_new`.
pub fn projected_curve(records: &[CertificationRecord], n_new: u64, radii: &[f64], rho: f64) -> Result<Vec<CurveRow>> {
    let projected = records.iter().map(|r| r.projected(n_new)).collect::<Result<Vec<_>>>()?;
    accuracy_curve(&projected, radii, rho)
}

/// Counts of certified-correct, abstained and wrong-label records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: u64,
    pub certified_correct: u64,
    pub abstained: u64,
    pub wrong: u64,
}

pub fn summarize(records: &[CertificationRecord]) -> Summary {
    let mut s = Summary { total: records.len() as u64, certified_correct: 0, abstained: 0, wrong: 0 };
    for r in records {
        match (r.outcome, r.correct()) {
            (Outcome::Abstain, _) => s.abstained += 1,
            (Outcome::Certified, true) => s.certified_correct += 1,
            (Outcome::Certified, false) => s.wrong += 1,
        }
    }
    s
}

/// Curves of several runs on a common radius grid, plus the best accuracy
/// over runs when there is more than one.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    runs: Vec<String>,
    radii: Vec<f64>,
    accuracy: Vec<Vec<f64>>,
    lower_bound: Vec<Vec<f64>>,
}

impl CurveTable {
    pub fn new(runs: Vec<(String, Vec<CurveRow>)>) -> Result<Self> {
        let first = runs.first().ok_or_else(|| Error::InvalidParams("no runs".into()))?;
        let radii: Vec<f64> = first.1.iter().map(|r| r.radius).collect();
        for (name, rows) in &runs {
            if rows.iter().map(|r| r.radius).ne(radii.iter().copied()) {
                return Err(Error::InvalidParams(format!("run `{name}` uses a different radius grid")));
            }
        }
        Ok(Self {
            radii,
            accuracy: runs.iter().map(|(_, rows)| rows.iter().map(|r| r.accuracy).collect()).collect(),
            lower_bound: runs.iter().map(|(_, rows)| rows.iter().map(|r| r.lower_bound).collect()).collect(),
            runs: runs.into_iter().map(|(n, _)| n).collect(),
        })
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec!["radius".to_string()];
        if let [_] = self.runs.as_slice() {
            cols.extend(["accuracy".to_string(), "bernstein".to_string()]);
            return cols;
        }
        for run in &self.runs {
            cols.push(run.clone());
            cols.push(format!("{run}_bernstein"));
        }
        cols.push("max".to_string());
        cols
    }

    /// One row of values per radius, in column order.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.radii.len())
            .map(|i| {
                let mut row = vec![self.radii[i]];
                for (acc, lb) in self.accuracy.iter().zip(&self.lower_bound) {
                    row.push(acc[i]);
                    row.push(lb[i]);
                }
                if self.runs.len() > 1 {
                    row.push(self.accuracy.iter().map(|a| a[i]).fold(0.0, f64::max));
                }
                row
            })
            .collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.columns().join("\t");
        out.push('\n');
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "{}", cells.join("\t")).expect("writing to a string");
        }
        out
    }
}
