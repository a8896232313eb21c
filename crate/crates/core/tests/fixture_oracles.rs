// SPDX-License-Identifier: Apache-2.0

//! Loader and evaluator checked against values recorded by the reference
//! library when the fixtures were generated (see fixtures/make_fixtures.py).

mod common;

use serde_json::Value;
use treegate::dataset::{load_csv, LabelColumn};
use treegate::ensemble::{load_model_file, load_xgboost_model, ClassMapping};
use treegate::eval::{evaluate_dataset, evaluate_float};
use treegate::{quantize, DecisionTree, Exec, FeatureQuantizer, GbdtEnsemble, TaskKind, TreeNode};

fn json(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(common::fixture(name)).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn multiclass_margins_match_the_reference() {
    let text = std::fs::read_to_string(common::fixture("xgb_multiclass.json")).unwrap();
    let import = load_xgboost_model(&text).unwrap();
    assert_eq!(import.report.class_mapping, ClassMapping::RoundRobinVerified);
    let ens = import.ensemble;
    assert_eq!(ens.num_outputs(), 3);
    let recorded = json("xgb_multiclass_margins.json");
    let inputs = recorded["inputs"].as_array().unwrap();
    let margins = recorded["margins"].as_array().unwrap();
    assert!(inputs.len() >= 50);
    for (x, m) in inputs.iter().zip(margins) {
        let got = ens.predict_margin(&floats(x));
        for (a, b) in got.iter().zip(floats(m)) {
            assert!((a - b).abs() <= 1e-5, "{a} vs {b} at {x}");
        }
    }
}

#[test]
fn binary_margins_match_the_reference() {
    let ens = load_model_file(common::fixture("synth_binary_model.json")).unwrap();
    let recorded = json("synth_binary_expected.json");
    let rows = recorded["quantized_features"].as_array().unwrap();
    for (x, m) in rows.iter().zip(recorded["margins"].as_array().unwrap()) {
        let got = ens.predict_margin(&floats(x))[0];
        let want = m.as_f64().unwrap();
        assert!((got - want).abs() <= 1e-5, "{got} vs {want} at {x}");
    }
}

#[test]
fn quantizer_reproduces_recorded_features() {
    let quantizer = FeatureQuantizer::load(common::fixture("synth_binary_quantizer.json")).unwrap();
    let data = load_csv(common::fixture("synth_binary_test.csv"), LabelColumn::Last, false).unwrap();
    let recorded = json("synth_binary_expected.json");
    let expected: Vec<Vec<u32>> = recorded["quantized_features"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            r.as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_u64().unwrap() as u32)
                .collect()
        })
        .collect();
    assert_eq!(quantizer.transform_batch(&data.rows, Exec::Parallel), expected);
}

#[test]
fn float_accuracy_matches_the_recorded_value() {
    let ens = load_model_file(common::fixture("synth_binary_model.json")).unwrap();
    let quantizer = FeatureQuantizer::load(common::fixture("synth_binary_quantizer.json")).unwrap();
    let data = load_csv(common::fixture("synth_binary_test.csv"), LabelColumn::Last, false).unwrap();
    let report = evaluate_float(&ens, &quantizer, &data.rows, data.labels.as_deref(), Exec::Parallel).unwrap();
    let recorded = json("synth_binary_expected.json")["float_accuracy"].as_f64().unwrap();
    assert!((report.accuracy.unwrap() - recorded).abs() < 1e-12);
}

#[test]
fn memorizing_model_is_perfect_on_its_training_rows() {
    // One split on feature 0 separates the two clusters exactly.
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            let side = (i % 2) as f64;
            vec![side * 10.0 + (i % 5) as f64 * 0.1, (i * 7 % 11) as f64]
        })
        .collect();
    let labels: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
    let quantizer = FeatureQuantizer::fit(&rows, 4).unwrap();
    let ens = GbdtEnsemble::new(
        TaskKind::BinaryLogistic,
        0.0,
        vec![DecisionTree {
            nodes: vec![
                TreeNode::Split {
                    feature: 0,
                    threshold: 7.5,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { value: -1.0 },
                TreeNode::Leaf { value: 1.0 },
            ],
        }],
        2,
    )
    .unwrap();
    let q = quantize(&ens, 4, 2).unwrap();
    let report = evaluate_dataset(&q, &quantizer, &rows, Some(&labels), Exec::Sequential).unwrap();
    assert_eq!(report.accuracy, Some(1.0));
    assert_eq!(report.confusion, Some(vec![vec![20, 0], vec![0, 20]]));
}

#[test]
fn missing_labels_leave_accuracy_absent() {
    let (q, _) = common::binary_fixture();
    let quantizer = FeatureQuantizer::load(common::fixture("synth_binary_quantizer.json")).unwrap();
    let data = load_csv(common::fixture("synth_binary_test.csv"), LabelColumn::Last, false).unwrap();
    let report = evaluate_dataset(&q, &quantizer, &data.rows, None, Exec::Parallel).unwrap();
    assert_eq!(report.total, 500);
    assert!(report.accuracy.is_none() && report.confusion.is_none());
}
