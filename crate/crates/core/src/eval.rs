// SPDX-License-Identifier: Apache-2.0

//! Bit-exact software prediction with the hardware's integer semantics,
//! dataset scoring, and the evaluator/interpreter/simulator cross-check.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::ensemble::{GbdtEnsemble, TaskKind};
use crate::leaves::QuantizedEnsemble;
use crate::netlist::{interpret_netlist, Netlist, NetlistError, NetlistOutput, Simulator};
use crate::par::Exec;
use crate::quantizer::FeatureQuantizer;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("expected {expected} features, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("feature {feature} = {value} exceeds the {w_feature}-bit input range")]
    InputRange { feature: usize, value: u32, w_feature: u32 },
    #[error("row {row}: label {value} is not a class in 0..{num_labels}")]
    Label { row: usize, value: f64, num_labels: usize },
    #[error("row {row}: expected {expected} features, got {found}")]
    RowArity { row: usize, expected: usize, found: usize },
    #[error("{rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("quantizer has {quantizer} features but the model has {model}")]
    FeatureMismatch { quantizer: usize, model: usize },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuantizedPrediction {
    pub class: usize,
    /// `[QF]` for binary, `[QF_0 .. QF_N-1]` for multiclass.
    pub scores: Vec<i64>,
}

/// `QF_n = qb_n + sum of class-n quantized tree outputs`; binary class is
/// `QF >= 0`, multiclass is argmax (ties to the smallest index).
pub fn predict_quantized(q: &QuantizedEnsemble, qx: &[u32]) -> Result<QuantizedPrediction, EvalError> {
    if qx.len() != q.num_features {
        return Err(EvalError::Arity {
            expected: q.num_features,
            found: qx.len(),
        });
    }
    let top = q.max_feature_value();
    if let Some(feature) = qx.iter().position(|&v| v > top) {
        return Err(EvalError::InputRange {
            feature,
            value: qx[feature],
            w_feature: q.w_feature,
        });
    }
    let mut scores = q.biases.clone();
    for (i, tree) in q.trees.iter().enumerate() {
        scores[q.class_of_tree(i)] += i64::from(tree.evaluate(qx));
    }
    Ok(QuantizedPrediction {
        class: q.task.decide(&scores),
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub predictions: Vec<usize>,
    pub scores: Vec<Vec<i64>>,
    pub total: usize,
    /// Present only when labels were supplied.
    pub correct: Option<usize>,
    pub accuracy: Option<f64>,
    /// `confusion[label][predicted]`.
    pub confusion: Option<Vec<Vec<usize>>>,
}

impl PredictionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary with the confusion matrix.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples   {}", self.total);
        match (self.correct, self.accuracy) {
            (Some(c), Some(a)) => {
                let _ = writeln!(s, "correct   {c}");
                let _ = writeln!(s, "accuracy  {:.4} ({:.2}%)", a, 100.0 * a);
            }
            _ => {
                let _ = writeln!(s, "accuracy  n/a (no labels)");
            }
        }
        if let Some(conf) = &self.confusion {
            let _ = write!(s, "label\\pred");
            for p in 0..conf.len() {
                let _ = write!(s, " {p:>8}");
            }
            let _ = writeln!(s);
            for (l, row) in conf.iter().enumerate() {
                let _ = write!(s, "{l:>10}");
                for c in row {
                    let _ = write!(s, " {c:>8}");
                }
                let _ = writeln!(s);
            }
        }
        s
    }
}

/// Per-chunk counts; `merge` is associative and commutative.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Tally {
    correct: usize,
    confusion: Vec<Vec<usize>>,
}

impl Tally {
    fn empty(labels: usize) -> Self {
        Tally {
            correct: 0,
            confusion: vec![vec![0; labels]; labels],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.correct += other.correct;
        for (a, b) in self.confusion.iter_mut().zip(other.confusion) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }
}

/// Checks labels are integral class indices.
pub fn parse_labels(labels: &[f64], task: TaskKind) -> Result<Vec<usize>, EvalError> {
    let n = task.num_labels();
    labels
        .iter()
        .enumerate()
        .map(|(row, &value)| {
            if value.fract() == 0.0 && value >= 0.0 && (value as usize) < n {
                Ok(value as usize)
            } else {
                Err(EvalError::Label {
                    row,
                    value,
                    num_labels: n,
                })
            }
        })
        .collect()
}

fn summarize(
    task: TaskKind,
    predictions: Vec<usize>,
    scores: Vec<Vec<i64>>,
    labels: Option<&[usize]>,
    exec: Exec,
) -> PredictionReport {
    let total = predictions.len();
    let tally = labels.map(|labels| {
        let k = task.num_labels();
        let pairs: Vec<(usize, usize)> = labels.iter().copied().zip(predictions.iter().copied()).collect();
        exec.map_reduce(
            &pairs,
            || Tally::empty(k),
            |&(l, p)| {
                let mut t = Tally::empty(k);
                t.confusion[l][p] = 1;
                t.correct = usize::from(l == p);
                t
            },
            Tally::merge,
        )
    });
    PredictionReport {
        predictions,
        scores,
        total,
        correct: tally.as_ref().map(|t| t.correct),
        accuracy: tally.as_ref().map(|t| {
            if total == 0 {
                0.0
            } else {
                t.correct as f64 / total as f64
            }
        }),
        confusion: tally.map(|t| t.confusion),
    }
}

fn check_shape(
    quantizer: &FeatureQuantizer,
    num_features: usize,
    rows: usize,
    labels: Option<&[f64]>,
) -> Result<(), EvalError> {
    if quantizer.num_features() != num_features {
        return Err(EvalError::FeatureMismatch {
            quantizer: quantizer.num_features(),
            model: num_features,
        });
    }
    if let Some(l) = labels {
        if l.len() != rows {
            return Err(EvalError::LabelCount { rows, labels: l.len() });
        }
    }
    Ok(())
}

/// Quantizes each raw row and predicts it with the integer model.
pub fn evaluate_dataset<R: AsRef<[f64]> + Sync>(
    q: &QuantizedEnsemble,
    quantizer: &FeatureQuantizer,
    rows: &[R],
    labels: Option<&[f64]>,
    exec: Exec,
) -> Result<PredictionReport, EvalError> {
    check_shape(quantizer, q.num_features, rows.len(), labels)?;
    let labels = labels.map(|l| parse_labels(l, q.task)).transpose()?;
    for (row, r) in rows.iter().enumerate() {
        if r.as_ref().len() != q.num_features {
            return Err(EvalError::RowArity {
                row,
                expected: q.num_features,
                found: r.as_ref().len(),
            });
        }
    }
    let preds = exec
        .map(rows, |r| predict_quantized(q, &quantizer.transform(r.as_ref())))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let (predictions, scores) = preds.into_iter().map(|p| (p.class, p.scores)).unzip();
    Ok(summarize(q.task, predictions, scores, labels.as_deref(), exec))
}

/// Float model accuracy on the same quantized inputs (the model was
/// trained on quantized features). Scores are not reported.
pub fn evaluate_float<R: AsRef<[f64]> + Sync>(
    ensemble: &GbdtEnsemble,
    quantizer: &FeatureQuantizer,
    rows: &[R],
    labels: Option<&[f64]>,
    exec: Exec,
) -> Result<PredictionReport, EvalError> {
    check_shape(quantizer, ensemble.num_features, rows.len(), labels)?;
    let labels = labels.map(|l| parse_labels(l, ensemble.task)).transpose()?;
    let predictions = exec.map(rows, |r| {
        let qx: Vec<f64> = quantizer.transform(r.as_ref()).into_iter().map(f64::from).collect();
        ensemble.predict_class(&qx)
    });
    Ok(summarize(
        ensemble.task,
        predictions,
        Vec::new(),
        labels.as_deref(),
        exec,
    ))
}

/// Does a netlist output encode the same decision and scores as the
/// integer evaluator?
pub fn outputs_agree(pred: &QuantizedPrediction, out: &NetlistOutput) -> bool {
    match out {
        NetlistOutput::Binary(y) => usize::from(*y) == pred.class,
        NetlistOutput::Scores(s) => {
            s.len() == pred.scores.len()
                && s.iter()
                    .zip(&pred.scores)
                    .all(|(&a, &b)| i128::from(a) == i128::from(b))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossCheck {
    pub total: usize,
    pub evaluator_vs_interpreter: usize,
    pub evaluator_vs_simulator: usize,
    /// Index of the first input where any two views disagree.
    pub first_mismatch: Option<usize>,
}

impl CrossCheck {
    pub fn all_agree(&self) -> bool {
        self.first_mismatch.is_none()
    }

    pub fn agreement(&self) -> f64 {
        if self.total == 0 {
            return 1.0;
        }
        self.evaluator_vs_interpreter.min(self.evaluator_vs_simulator) as f64 / self.total as f64
    }
}

/// Inputs per independent simulator instance in [`cross_check`].
const STREAM_CHUNK: usize = 256;

/// Runs the integer evaluator, the combinational interpreter and the
/// pipelined simulator over `inputs` and counts agreements. Each chunk of
/// the stream gets its own simulator, fed back to back at one input per cycle.
pub fn cross_check(
    q: &QuantizedEnsemble,
    n: &Netlist,
    inputs: &[Vec<u32>],
    exec: Exec,
) -> Result<CrossCheck, EvalError> {
    let chunks: Vec<&[Vec<u32>]> = inputs.chunks(STREAM_CHUNK).collect();
    let per_chunk = exec.map(&chunks, |chunk| -> Result<Vec<(bool, bool)>, EvalError> {
        let streamed = Simulator::new(n).run(chunk)?;
        chunk
            .iter()
            .zip(streamed)
            .map(|(qx, sim)| {
                let pred = predict_quantized(q, qx)?;
                let comb = interpret_netlist(n, qx)?;
                Ok((outputs_agree(&pred, &comb), outputs_agree(&pred, &sim) && sim == comb))
            })
            .collect()
    });
    let mut report = CrossCheck {
        total: inputs.len(),
        evaluator_vs_interpreter: 0,
        evaluator_vs_simulator: 0,
        first_mismatch: None,
    };
    let mut index = 0;
    for chunk in per_chunk {
        for (a, b) in chunk? {
            report.evaluator_vs_interpreter += usize::from(a);
            report.evaluator_vs_simulator += usize::from(b);
            if !(a && b) && report.first_mismatch.is_none() {
                report.first_mismatch = Some(index);
            }
            index += 1;
        }
    }
    Ok(report)
}
