"""
Files, splits and the command line
==================================

Tensors travel as COO text (1-based indices, one entry per line) and models
as a directory bundle.  The same steps are available from the shell as
``sptucker factorize | predict | evaluate | inspect | split``.
"""

import pathlib
import tempfile

import numpy as np

from sptucker import SolverConfig, predict, run
from sptucker.cli import main
from sptucker.io import (
    denormalize,
    normalize_values,
    read_coo,
    read_model,
    split_train_test,
    write_coo,
    write_model,
)
from sptucker.synthetic import random_tensor

work = pathlib.Path(tempfile.mkdtemp())

# Raw values on an arbitrary scale are mapped into [0, 1] first.
raw = random_tensor((30, 30, 30), 3000, seed=2)
raw = raw.with_values(raw.values * 40 + 10)
scaled = normalize_values(raw)
train, test = split_train_test(scaled.tensor, 0.1, seed=0)
write_coo(train, work / "train.coo")
write_coo(test, work / "test.coo")
print((work / "train.coo").read_text().splitlines()[:2])

model, stats = run(read_coo(work / "train.coo", raw.dims),
                   SolverConfig(ranks=(3, 3, 3), max_iters=10, threads=1))
write_model(model, {"lambda": 0.01, "variant": "default",
                    "iterations_run": stats.iterations,
                    "final_error": stats.errors[-1], "seed": 0}, work / "model")
back, meta = read_model(work / "model")
print("bundle round trip exact:",
      all(np.array_equal(a, b) for a, b in zip(model.factors, back.factors)))

# Predictions are made on the [0, 1] scale and mapped back.
guess = denormalize(predict(back, test.indices[:3]), scaled.min, scaled.max)
truth = denormalize(test.values[:3], scaled.min, scaled.max)
print("held-out raw values:", np.round(truth, 2), "predicted:", np.round(guess, 2))

# The CLI does the same from files.
main(["evaluate", "--model", str(work / "model"), "--data", str(work / "test.coo"), "--as-test"])
main(["inspect", "--model", str(work / "model"), "--top", "3"])
