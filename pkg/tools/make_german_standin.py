"""Regenerate the bundled stand-in credit-scoring dataset.

The UCI ``german.data-numeric`` file cannot be redistributed here, so the
package ships a synthetic dataset with the same schema (1000 rows, 24
integer features, label in {1, 2} with roughly a 70/30 split) drawn from
a logistic model on the standardized features. Running the german_credit
experiment against the real UCI file just means passing its path via
``--data``.

Usage: python tools/make_german_standin.py [output_path]
"""

import sys

import numpy as np

N_ROWS = 1000
SEED = 24_1000


def main(out_path):
    rng = np.random.default_rng(SEED)
    cols = []
    # small categorical codes (status-like attributes)
    for k in range(8):
        cols.append(rng.integers(1, 5, size=N_ROWS))
    # binary indicator attributes
    for k in range(8):
        cols.append(rng.integers(0, 2, size=N_ROWS))
    # wider numeric attributes: duration, amount, rate, residence, age, counts
    cols.append(rng.integers(4, 73, size=N_ROWS))          # duration in months
    cols.append(rng.integers(250, 18425, size=N_ROWS))     # credit amount
    cols.append(rng.integers(1, 5, size=N_ROWS))           # installment rate
    cols.append(rng.integers(1, 5, size=N_ROWS))           # present residence
    cols.append(rng.integers(19, 76, size=N_ROWS))         # age
    cols.append(rng.integers(1, 5, size=N_ROWS))           # existing credits
    cols.append(rng.integers(1, 3, size=N_ROWS))           # dependents
    cols.append(rng.integers(1, 5, size=N_ROWS))           # job code
    features = np.column_stack(cols).astype(float)
    assert features.shape == (N_ROWS, 24)

    standardized = (features - features.mean(axis=0)) / features.std(axis=0)
    beta = rng.normal(0.0, 0.45, size=24)
    logits = -1.0 + standardized @ beta
    bad = rng.uniform(size=N_ROWS) < 1.0 / (1.0 + np.exp(-logits))
    labels = np.where(bad, 2, 1)

    with open(out_path, "w", encoding="utf-8") as fh:
        for row, label in zip(features.astype(int), labels):
            fh.write(" ".join(f"{v:>5d}" for v in row) + f" {label:>4d}\n")
    print(f"wrote {N_ROWS} rows to {out_path} ({int((labels == 2).sum())} bad credits)")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/mces/datasets/german_standin.data-numeric")
