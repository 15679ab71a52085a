#!/usr/bin/env python3
"""Regenerates the bundled benchmark datasets in data/.

Both datasets come from scikit-learn's bundled copies of real datasets:

* cancer[123].dt  - the Wisconsin Diagnostic Breast Cancer data
                    (569 examples, 30 real attributes, 2 classes).
* diabetes[123].dt - the diabetes disease-progression data
                    (442 examples, 10 real attributes); the continuous
                    one-year progression target is binarized at its median,
                    giving a balanced 2-class problem.

Features are min-max scaled to [0, 1] over the whole file. Each numbered
variant is a fixed seeded permutation of the rows (seeds 1, 2, 3), written
in the PROBEN1-style .dt layout: key=value header lines, then one example
per line with the inputs followed by a 1-of-m class encoding. Splits are
taken in file order: 50% training, 25% validation, 25% test (ceil rule).
"""

import numpy as np
from sklearn.datasets import load_breast_cancer, load_diabetes


def split_sizes(n):
    train = -(-n // 2)
    rest = n - train
    validation = -(-rest // 2)
    return train, validation, rest - validation


def write_dt(path, features, labels, num_classes):
    n, attrs = features.shape
    train, validation, test = split_sizes(n)
    lines = [
        "bool_in=0",
        f"real_in={attrs}",
        f"bool_out={num_classes}",
        "real_out=0",
        f"training_examples={train}",
        f"validation_examples={validation}",
        f"test_examples={test}",
    ]
    for row, label in zip(features, labels):
        inputs = " ".join(f"{v:.6f}" for v in row)
        outputs = " ".join("1" if k == label else "0" for k in range(num_classes))
        lines.append(f"{inputs} {outputs}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"{path}: {n} examples, {attrs} attributes, {num_classes} classes "
          f"({train}+{validation}+{test})")


def min_max(features):
    lo = features.min(axis=0)
    hi = features.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (features - lo) / span


def variants(name, features, labels, num_classes):
    for seed in (1, 2, 3):
        order = np.random.RandomState(seed).permutation(len(labels))
        write_dt(f"data/{name}{seed}.dt", features[order], labels[order], num_classes)


def main():
    cancer = load_breast_cancer()
    variants("cancer", min_max(cancer.data), cancer.target, 2)

    diabetes = load_diabetes(scaled=False)
    labels = (diabetes.target > np.median(diabetes.target)).astype(int)
    variants("diabetes", min_max(diabetes.data), labels, 2)


if __name__ == "__main__":
    main()
