"""Convergence diagnostics and CSV export.

Headline curve convention: suboptimality is the global objective
evaluated at agent 1's iterate minus the optimal value. Other agents are
reachable through the ``agent`` argument. Rate fits run ordinary least
squares on log suboptimality over a tail window, with a floor guarding
the log of numerically converged samples.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, consensus_error
from .exceptions import (
    DataFormatError,
    DimensionMismatchError,
    InsufficientDataError,
    InvalidParameterError,
)
from .objective import CostSet

# suboptimality at or below this is treated as numerically converged
_DEFAULT_FLOOR = 1e-13
_MIN_FIT_SAMPLES = 10
_CSV_HEADER = ["run_name", "step", "suboptimality", "consensus_error", "distance_to_opt"]


@dataclass(frozen=True)
class ConvergenceCurve:
    """Per-sample diagnostics aligned on a shared step grid."""

    steps: np.ndarray
    suboptimality: np.ndarray
    consensus_error: np.ndarray
    distance_to_opt: np.ndarray

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=int)
        arrays = {
            "suboptimality": np.asarray(self.suboptimality, dtype=float),
            "consensus_error": np.asarray(self.consensus_error, dtype=float),
            "distance_to_opt": np.asarray(self.distance_to_opt, dtype=float),
        }
        for name, arr in arrays.items():
            if arr.shape != steps.shape:
                raise DimensionMismatchError(
                    f"{name} has shape {arr.shape}, steps has {steps.shape}"
                )
        object.__setattr__(self, "steps", steps)
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through log suboptimality over the tail.

    ``slope`` is the per-step decay rate. When every tail sample sits at
    or below the floor the run already converged to numerical zero;
    that is reported as success with ``saturated`` set and placeholder
    fit values (zero slope, unit r squared).
    """

    slope: float
    intercept: float
    r_squared: float
    window: float
    n_samples: int
    saturated: bool = False


def curve_from_trajectory(
    trajectory: Trajectory,
    cost_set: CostSet,
    x_star,
    agent: int = 0,
) -> ConvergenceCurve:
    """Extract diagnostics from a run.

    Prefers the per-step scalar track recorded during simulation (full
    resolution) when it exists and was computed against the same optimum
    and the default agent; otherwise recomputes from the snapshots.
    """
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape != (cost_set.dim,):
        raise DimensionMismatchError(
            f"optimum must have shape ({cost_set.dim},), got {x_star.shape}"
        )
    track = trajectory.scalar_track
    if (
        track is not None
        and agent == 0
        and np.array_equal(track["optimum"], x_star)
    ):
        return ConvergenceCurve(
            steps=track["step"].copy(),
            suboptimality=track["suboptimality"].copy(),
            consensus_error=track["consensus_error"].copy(),
            distance_to_opt=track["distance_to_opt"].copy(),
        )

    if not 0 <= agent < trajectory.n_agents:
        raise InvalidParameterError(
            f"agent index {agent} out of range for {trajectory.n_agents} agents"
        )
    optimal_value = cost_set.global_value(x_star)
    samples = len(trajectory)
    suboptimality = np.empty(samples)
    consensus = np.empty(samples)
    distance = np.empty(samples)
    for k in range(samples):
        primal = trajectory.primal[k]
        suboptimality[k] = cost_set.global_value(primal[agent]) - optimal_value
        consensus[k] = consensus_error(primal)
        distance[k] = float(
            np.linalg.norm(primal - x_star[None, :], axis=1).max()
        )
    return ConvergenceCurve(
        steps=trajectory.steps.copy(),
        suboptimality=suboptimality,
        consensus_error=consensus,
        distance_to_opt=distance,
    )


def fit_exponential_rate(
    curve: ConvergenceCurve,
    tail_fraction: float = 0.5,
    floor: float = _DEFAULT_FLOOR,
) -> RateFit:
    """Fit a decay line to log suboptimality over the curve's tail.

    Samples at or below the floor are excluded. All-excluded tails mean
    convergence to numerical zero and come back saturated; fewer than
    ten usable samples is an error because a slope from that is noise.
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise InvalidParameterError(
            f"tail fraction must be in (0, 1], got {tail_fraction}"
        )
    if len(curve) == 0:
        raise InsufficientDataError("empty curve")
    start = len(curve) - max(1, int(np.ceil(len(curve) * tail_fraction)))
    steps = curve.steps[start:].astype(float)
    values = curve.suboptimality[start:]
    keep = values > floor
    kept = int(keep.sum())
    if kept == 0:
        return RateFit(
            slope=0.0,
            intercept=np.log(floor),
            r_squared=1.0,
            window=tail_fraction,
            n_samples=0,
            saturated=True,
        )
    if kept < _MIN_FIT_SAMPLES:
        raise InsufficientDataError(
            f"only {kept} tail samples above the floor, need {_MIN_FIT_SAMPLES}"
        )
    x = steps[keep]
    y = np.log(values[keep])
    design = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ np.array([slope, intercept])
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot <= 1e-300 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        window=tail_fraction,
        n_samples=kept,
        saturated=False,
    )


def export_csv(curves, path, metadata: dict | None = None) -> None:
    """Write named curves as long-format CSV.

    ``curves`` maps run names to curves (dict or (name, curve) pairs);
    rows are grouped by run in the given order. Optional metadata is
    embedded as leading ``# key=value`` comment lines so every output
    can carry its config hash. Floats use 17 significant digits and
    round-trip exactly.
    """
    items = list(curves.items()) if isinstance(curves, dict) else list(curves)
    lines = []
    if metadata:
        for key in sorted(metadata):
            lines.append(f"# {key}={metadata[key]}")
    lines.append(",".join(_CSV_HEADER))
    for name, curve in items:
        if "," in name or "\n" in name:
            raise InvalidParameterError(f"run name {name!r} must not contain , or newline")
        for i in range(len(curve)):
            lines.append(
                "%s,%d,%.17g,%.17g,%.17g"
                % (
                    name,
                    int(curve.steps[i]),
                    curve.suboptimality[i],
                    curve.consensus_error[i],
                    curve.distance_to_opt[i],
                )
            )
    with open(path, "w", newline="") as handle:
        handle.write("\n".join(lines) + "\n")


def import_csv(path) -> tuple[dict, dict]:
    """Read a file written by export_csv: (curves by name, metadata)."""
    metadata = {}
    rows = []
    with open(path, "r", newline="") as handle:
        header = None
        for lineno, line in enumerate(csv.reader(handle), start=1):
            if not line:
                continue
            if line[0].startswith("# "):
                key, _, value = line[0][2:].partition("=")
                metadata[key] = value
                continue
            if header is None:
                header = line
                if header != _CSV_HEADER:
                    raise DataFormatError(f"{path}:{lineno}: unexpected header {header}")
                continue
            if len(line) != len(_CSV_HEADER):
                raise DataFormatError(f"{path}:{lineno}: expected {len(_CSV_HEADER)} cells")
            rows.append(line)
    if header is None:
        raise DataFormatError(f"{path}: missing header row")

    curves: dict[str, ConvergenceCurve] = {}
    order = []
    grouped: dict[str, list] = {}
    for row in rows:
        name = row[0]
        if name not in grouped:
            grouped[name] = []
            order.append(name)
        try:
            grouped[name].append(
                (int(row[1]), float(row[2]), float(row[3]), float(row[4]))
            )
        except ValueError as exc:
            raise DataFormatError(f"{path}: non-numeric cell in row {row}") from exc
    for name in order:
        block = grouped[name]
        curves[name] = ConvergenceCurve(
            steps=np.array([r[0] for r in block], dtype=int),
            suboptimality=np.array([r[1] for r in block]),
            consensus_error=np.array([r[2] for r in block]),
            distance_to_opt=np.array([r[3] for r in block]),
        )
    return curves, metadata
