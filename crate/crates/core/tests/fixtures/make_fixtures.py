"""Regenerates the XGBoost-derived fixtures in this directory.

Requires numpy and xgboost. The quantization below must match
FeatureQuantizer::transform (min-max normalize, clamp, scale by 2^w - 1,
round half away from zero).
"""
import json

import numpy as np
import xgboost as xgb


def quantize(x, mins, maxs, w):
    top = (1 << w) - 1
    span = maxs - mins
    norm = np.where(span > 0, (x - mins) / np.where(span > 0, span, 1.0), 0.0)
    norm = np.clip(norm, 0.0, 1.0)
    return np.floor(norm * top + 0.5).astype(np.int64)


def multiclass_fixture(rng):
    x = rng.integers(0, 16, (400, 4)).astype(np.float32)
    y = ((x[:, 0] + x[:, 1] > 15).astype(int) + (x[:, 2] > 9)).astype(int)
    booster = xgb.train(
        dict(objective="multi:softprob", num_class=3, max_depth=3, eta=0.5, seed=1),
        xgb.DMatrix(x, label=y),
        num_boost_round=2,
    )
    with open("xgb_multiclass.json", "w") as f:
        f.write(booster.save_raw("json").decode())
    probe = rng.uniform(0, 15, (100, 4)).astype(np.float32)
    margins = booster.predict(xgb.DMatrix(probe), output_margin=True)
    with open("xgb_multiclass_margins.json", "w") as f:
        json.dump(
            dict(inputs=probe.astype(float).tolist(), margins=margins.astype(float).tolist()),
            f,
        )


def synth_rows(rng, n):
    x = rng.normal(0.0, 1.0, (n, 8))
    x[:, 1] = x[:, 1] * 5.0 + 20.0
    x[:, 3] = rng.uniform(-3.0, 7.0, n)
    x[:, 6] = rng.exponential(2.0, n)
    score = (
        1.2 * x[:, 0]
        - 0.3 * (x[:, 1] - 20.0)
        + np.sin(x[:, 3])
        + 0.8 * x[:, 2] * x[:, 4]
        - 0.5 * x[:, 6]
        + 0.5
    )
    y = (score + rng.normal(0.0, 0.5, n) > 0).astype(int)
    return x, y


def binary_fixture(rng):
    w_feature = 4
    x_train, y_train = synth_rows(rng, 1500)
    x_test, y_test = synth_rows(rng, 500)
    mins = x_train.min(axis=0)
    maxs = x_train.max(axis=0)
    q_train = quantize(x_train, mins, maxs, w_feature).astype(np.float32)
    q_test = quantize(x_test, mins, maxs, w_feature).astype(np.float32)
    booster = xgb.train(
        dict(objective="binary:logistic", max_depth=4, eta=0.3, seed=1),
        xgb.DMatrix(q_train, label=y_train),
        num_boost_round=20,
    )
    with open("synth_binary_model.json", "w") as f:
        f.write(booster.save_raw("json").decode())
    with open("synth_binary_quantizer.json", "w") as f:
        json.dump(dict(w_feature=w_feature, mins=mins.tolist(), maxs=maxs.tolist()), f)
    with open("synth_binary_test.csv", "w") as f:
        for row, label in zip(x_test, y_test):
            f.write(",".join(repr(float(v)) for v in row) + f",{label}\n")
    margins = booster.predict(xgb.DMatrix(q_test), output_margin=True)
    float_pred = (margins >= 0).astype(int)
    with open("synth_binary_expected.json", "w") as f:
        json.dump(
            dict(
                float_accuracy=float((float_pred == y_test).mean()),
                quantized_features=q_test.astype(int).tolist(),
                margins=margins.astype(float).tolist(),
            ),
            f,
        )


def main():
    rng = np.random.default_rng(20240917)
    multiclass_fixture(rng)
    binary_fixture(rng)


if __name__ == "__main__":
    main()
