//! Plain-text model files.
//!
//! ```text
//! smoothcert-model 1 <kind> <input_dim> <labels> [<width>]
//! <parameter>
//! ...
//! ```
//!
//! Parameters are written one per line with 17 significant digits, in the
//! row-major layout documented on each model type. Kinds and their
//! parameters:
//!
//! * `linear d 2`: `w_1 .. w_d b`
//! * `logistic d L`: `W (L x d)`, `b (L)`
//! * `mlp d L h`: `W1 (h x d)`, `b1 (h)`, `W2 (L x h)`, `b2 (L)`
//! * `constant 0 L`: the label
//! * `interval 1 2`: `t outer inner`
//! * `bernoulli 0 L`: `p label_a label_b`

use std::fmt::Write as _;

use super::models::{AnyModel, LogisticModel, MlpModel};
use crate::error::{Error, Result};
use crate::oracles::{BernoulliClassifier, ConstantClassifier, IntervalClassifier, LinearModel};
use crate::scalar::Scalar;
use crate::smoothing::{Differentiable, Label};

const MAGIC: &str = "smoothcert-model";
const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

fn label_param(v: f64) -> Result<Label> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as Label)
    } else {
        Err(bad(format!("expected a label, got {v}")))
    }
}

impl<S: Scalar> AnyModel<S> {
    pub fn to_text(&self) -> String {
        let (dims, params): (Vec<usize>, Vec<f64>) = match self {
            AnyModel::Linear(m) => (
                vec![m.dim(), 2],
                m.weights().iter().chain([&m.bias()]).map(|v| v.as_f64()).collect(),
            ),
            AnyModel::Logistic(m) => {
                (vec![m.dim(), m.num_labels()], m.params().iter().map(|v| v.as_f64()).collect())
            }
            AnyModel::Mlp(m) => (
                vec![m.dim(), m.num_labels(), m.width()],
                m.params().iter().map(|v| v.as_f64()).collect(),
            ),
            AnyModel::Constant(c) => (vec![0, c.label + 1], vec![c.label as f64]),
            AnyModel::Interval(c) => (
                vec![1, 2],
                vec![c.half_width().as_f64(), c.outer() as f64, c.inner() as f64],
            ),
            AnyModel::Bernoulli(b) => {
                let (p, a, c) = b.parts();
                (vec![0, a.max(c) + 1], vec![p, a as f64, c as f64])
            }
        };
        let mut out = format!("{MAGIC} {VERSION} {}", self.kind());
        for d in dims {
            write!(out, " {d}").expect("writing to a string");
        }
        out.push('\n');
        for p in params {
            writeln!(out, "{p:.16e}").expect("writing to a string");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty model file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 3 || fields[0] != MAGIC {
            return Err(bad(format!("missing `{MAGIC}` header")));
        }
        let version: u32 = fields[1].parse().map_err(|_| bad("unreadable format version"))?;
        if version != VERSION {
            return Err(bad(format!("unsupported format version {version}")));
        }
        let kind = fields[2];
        let dims = fields[3..]
            .iter()
            .map(|f| f.parse::<usize>().map_err(|_| bad(format!("bad dimension `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        let params = lines
            .flat_map(str::split_whitespace)
            .map(|t| {
                let v: f64 = t.parse().map_err(|_| bad(format!("bad parameter `{t}`")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(bad(format!("non-finite parameter `{t}`")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let dims_exact = |n: usize| {
            if dims.len() == n {
                Ok(())
            } else {
                Err(bad(format!("`{kind}` header takes {n} dimensions, got {}", dims.len())))
            }
        };
        let count = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(bad(format!("`{kind}` model needs {n} parameters, got {}", params.len())))
            }
        };
        let scalars = |v: &[f64]| v.iter().map(|&p| S::of(p)).collect::<Vec<S>>();
        let wrap = |e: Error| bad(e.to_string());
        match kind {
            "linear" => {
                dims_exact(2)?;
                if dims[1] != 2 {
                    return Err(bad("linear models have 2 labels"));
                }
                count(dims[0] + 1)?;
                let (w, b) = params.split_at(dims[0]);
                Ok(AnyModel::Linear(LinearModel::new(scalars(w), S::of(b[0])).map_err(wrap)?))
            }
            "logistic" => {
                dims_exact(2)?;
                count(dims[1] * dims[0] + dims[1])?;
                Ok(AnyModel::Logistic(LogisticModel::from_params(dims[0], dims[1], scalars(&params)).map_err(wrap)?))
            }
            "mlp" => {
                dims_exact(3)?;
                count(MlpModel::<S>::param_count(dims[0], dims[2], dims[1]))?;
                Ok(AnyModel::Mlp(MlpModel::from_params(dims[0], dims[2], dims[1], scalars(&params)).map_err(wrap)?))
            }
            "constant" => {
                dims_exact(2)?;
                count(1)?;
                Ok(AnyModel::Constant(ConstantClassifier { label: label_param(params[0])? }))
            }
            "interval" => {
                dims_exact(2)?;
                count(3)?;
                let c = IntervalClassifier::new(S::of(params[0]), label_param(params[1])?, label_param(params[2])?);
                Ok(AnyModel::Interval(c.map_err(wrap)?))
            }
            "bernoulli" => {
                dims_exact(2)?;
                count(3)?;
                let b = BernoulliClassifier::new(params[0], label_param(params[1])?, label_param(params[2])?);
                Ok(AnyModel::Bernoulli(b.map_err(wrap)?))
            }
            other => Err(bad(format!("unknown model kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(m: AnyModel<f64>) {
        let text = m.to_text();
        assert_eq!(AnyModel::from_text(&text).unwrap(), m, "{text}");
    }

    #[test]
    fn every_kind_round_trips_exactly() {
        round_trip(AnyModel::Linear(LinearModel::new(vec![0.1, -1.0 / 3.0], std::f64::consts::PI).unwrap()));
        let p: Vec<f64> = (0..9).map(|i| (i as f64).sqrt() / 7.0 - 0.2).collect();
        round_trip(AnyModel::Logistic(LogisticModel::from_params(2, 3, p).unwrap()));
        let p: Vec<f64> = (0..MlpModel::<f64>::param_count(2, 3, 2)).map(|i| 1e-300 * i as f64 + 1.0 / (i + 3) as f64).collect();
        round_trip(AnyModel::Mlp(MlpModel::from_params(2, 3, 2, p).unwrap()));
        round_trip(AnyModel::Constant(ConstantClassifier { label: 4 }));
        round_trip(AnyModel::Interval(IntervalClassifier::new(0.39687, 1, 0).unwrap()));
        round_trip(AnyModel::Bernoulli(BernoulliClassifier::new(0.52, 0, 1).unwrap()));
    }

    #[test]
    fn header_layout() {
        let m: AnyModel<f64> = AnyModel::Linear(LinearModel::new(vec![1.0, 0.0], -0.5).unwrap());
        let text = m.to_text();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("smoothcert-model 1 linear 2 2"));
        assert_eq!(lines.next(), Some("1.0000000000000000e0"));
    }

    #[test]
    fn f32_models_load() {
        let m: AnyModel<f32> = AnyModel::from_text("smoothcert-model 1 linear 1 2\n0.5\n0.25\n").unwrap();
        assert_eq!(m.kind(), "linear");
    }

    #[test]
    fn malformed_files_are_rejected() {
        for text in [
            "",
            "not-a-model 1 linear 1 2\n1\n0\n",
            "smoothcert-model 2 linear 1 2\n1\n0\n",
            "smoothcert-model 1 linear 1 2\n1\n",
            "smoothcert-model 1 linear 1 2\n1\nx\n",
            "smoothcert-model 1 linear 1 2\n0\n0\n",
            "smoothcert-model 1 linear 1 2\nNaN\n0\n",
            "smoothcert-model 1 tree 1 2\n",
            "smoothcert-model 1 constant 0 2\n1.5\n",
            "smoothcert-model 1 mlp 2 2\n",
        ] {
            assert!(matches!(AnyModel::<f64>::from_text(text), Err(Error::ModelFormat(_))), "{text:?}");
        }
    }
}
