"""Regenerate the bundled regression table (data/synthetic_wine.csv).

The table stands in for a real tabular regression source that cannot be
redistributed here: 4000 rows, 11 correlated features on mixed scales,
semicolon-delimited with a header row, last column the target. The
generator plants a model that keeps the standardized-plus-intercept
least-squares solution strictly positive, so the positive-orthant
mirror map can run on it; that property is asserted before writing.

Usage: python scripts/make_dataset.py [output-path]
"""

import csv
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from mirrorflow.objective import (  # noqa: E402
    closed_form_optimum,
    partition_dataset,
    synthetic_regression_table,
)

ROWS = 4000
FEATURES = 11
SEED = 20240811


def main() -> int:
    out = pathlib.Path(
        sys.argv[1]
        if len(sys.argv) > 1
        else pathlib.Path(__file__).resolve().parents[1] / "data" / "synthetic_wine.csv"
    )
    table = synthetic_regression_table(ROWS, FEATURES, seed=SEED)

    cost_set = partition_dataset(
        table, n_agents=10, rows_per_agent=400, standardize=True, intercept=True
    )
    optimum = closed_form_optimum(cost_set)
    if optimum.min() <= 0:
        raise SystemExit(
            f"planted solution is not strictly positive (min {optimum.min():.4g}); "
            "change the seed"
        )

    out.parent.mkdir(parents=True, exist_ok=True)
    header = [f"feature_{i + 1}" for i in range(FEATURES)] + ["target"]
    with open(out, "w", newline="") as handle:
        writer = csv.writer(handle, delimiter=";")
        writer.writerow(header)
        for row in table:
            writer.writerow(["%.12g" % v for v in row])
    print(f"wrote {out} ({ROWS} rows, {FEATURES} features); solution min {optimum.min():.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
