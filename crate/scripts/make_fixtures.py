#!/usr/bin/env python3
"""Regenerate the bundled model fixtures under crates/core/fixtures/.

Trains small classifiers with scikit-learn, writes them in the WeightsFile
JSON format, and records forward-pass triples computed by numpy on the exact
serialized weights. The Rust test suite only reads the output files; this
script is not needed to build or test the workspace.

    python3 scripts/make_fixtures.py
"""

import json
import pathlib

import numpy as np
from sklearn.datasets import load_digits, make_blobs
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import train_test_split
from sklearn.neural_network import MLPClassifier

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "fixtures"
SEED = 7
TOLERANCE = 1e-6


def layer(w, b, activation):
    w = np.asarray(w, dtype=np.float64)
    return {
        "rows": int(w.shape[0]),
        "cols": int(w.shape[1]),
        "weights": [float(v) for v in w.reshape(-1)],
        "bias": [float(v) for v in np.asarray(b, dtype=np.float64)],
        "activation": activation,
    }


def weights_file(input_dim, layers):
    return {"format_version": 1, "input_dim": int(input_dim), "layers": layers}


def forward(wf, x):
    h = np.asarray(x, dtype=np.float64)
    for l in wf["layers"]:
        w = np.asarray(l["weights"], dtype=np.float64).reshape(l["rows"], l["cols"])
        h = w @ h + np.asarray(l["bias"], dtype=np.float64)
        if l["activation"] == "relu":
            h = np.maximum(h, 0.0)
        elif l["activation"] == "softmax":
            e = np.exp(h - h.max())
            h = e / e.sum()
    return h


def from_mlp(clf, input_dim):
    layers = []
    n = len(clf.coefs_)
    for i, (w, b) in enumerate(zip(clf.coefs_, clf.intercepts_)):
        act = "softmax" if i == n - 1 else "relu"
        layers.append(layer(w.T, b, act))
    return weights_file(input_dim, layers)


def from_logreg(clf, input_dim):
    # Raw class scores; argmax is unchanged and the model stays affine.
    return weights_file(input_dim, [layer(clf.coef_, clf.intercept_, "identity")])


def write_json(name, obj):
    (OUT / name).write_text(json.dumps(obj, indent=1) + "\n")


def write_dataset(name, x, y):
    with open(OUT / name, "w") as f:
        f.write("label," + ",".join(f"x{i}" for i in range(x.shape[1])) + "\n")
        for row, label in zip(x, y):
            f.write(str(int(label)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def write_triples(name, wf, inputs):
    # Reload from the serialized text so triples match the file bit-for-bit.
    wf = json.loads(json.dumps(wf))
    triples = [
        {"input": [float(v) for v in x], "expected": [float(v) for v in forward(wf, x)]}
        for x in inputs
    ]
    write_json(name, {"tolerance": TOLERANCE, "triples": triples})


def accuracy(wf, x, y):
    pred = [int(np.argmax(forward(wf, row))) for row in x]
    return float(np.mean(np.asarray(pred) == y))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    meta = {}

    # 8x8 digits, pixels scaled into [0, 1].
    digits = load_digits()
    x = digits.data / 16.0
    xtr, xte, ytr, yte = train_test_split(
        x, digits.target, test_size=0.3, random_state=SEED, stratify=digits.target
    )
    mlp = MLPClassifier(hidden_layer_sizes=(32,), alpha=1e-3, max_iter=2000, random_state=SEED)
    mlp.fit(xtr, ytr)
    wf = from_mlp(mlp, x.shape[1])
    write_json("digits_mlp.json", wf)
    write_triples("digits_mlp_fixtures.json", wf, xte[:24])
    meta["digits_mlp"] = {"test_accuracy": accuracy(wf, xte, yte)}

    lr = LogisticRegression(max_iter=5000, C=1.0)
    lr.fit(xtr, ytr)
    wf = from_logreg(lr, x.shape[1])
    write_json("digits_linear.json", wf)
    write_triples("digits_linear_fixtures.json", wf, xte[:24])
    meta["digits_linear"] = {"test_accuracy": accuracy(wf, xte, yte)}
    write_dataset("digits_test.csv", xte, yte)

    # Gaussian blobs, 16 features, 10 classes.
    xb, yb = make_blobs(
        n_samples=1500, n_features=16, centers=10, cluster_std=2.5, random_state=SEED
    )
    xb = xb / 10.0
    xtr, xte, ytr, yte = train_test_split(xb, yb, test_size=0.3, random_state=SEED, stratify=yb)
    mlp = MLPClassifier(hidden_layer_sizes=(24,), alpha=1e-3, max_iter=2000, random_state=SEED)
    mlp.fit(xtr, ytr)
    wf = from_mlp(mlp, xb.shape[1])
    write_json("blobs_mlp.json", wf)
    write_triples("blobs_mlp_fixtures.json", wf, xte[:24])
    meta["blobs_mlp"] = {"test_accuracy": accuracy(wf, xte, yte)}
    write_dataset("blobs_test.csv", xte, yte)

    write_json("metadata.json", meta)
    print(json.dumps(meta, indent=1))


if __name__ == "__main__":
    main()
