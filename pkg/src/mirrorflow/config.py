"""Experiment configuration: strict TOML schema, hashing, construction.

Every run is driven by one config file. Validation is strict (unknown
keys are errors, all types checked) and happens before any computation.
A sha256 hash of the fully resolved configuration is embedded in every
output file so results can be traced back to the exact settings that
produced them.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .exceptions import ConfigError
from .graph import Graph, build_graph, complete_graph, cycle_graph, random_connected_graph
from .mirror import DistanceGenerator, euclidean_dgf, negative_entropy_dgf
from .objective import CostSet, load_table, partition_dataset, synthetic_quadratic_costset

_GRAPH_KINDS = ("cycle", "complete", "random", "edges")
_DGF_NAMES = ("euclidean", "entropy")
_BASELINE_KINDS = ("diminishing", "constant")
_X0_NAMES = ("zeros", "ones")

_REQUIRED = object()


@dataclass(frozen=True)
class SyntheticProblem:
    n_agents: int
    dim: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "synthetic": {
                "n_agents": self.n_agents,
                "dim": self.dim,
                "seed": self.seed,
            }
        }


@dataclass(frozen=True)
class DatasetProblem:
    path: str
    n_agents: int
    rows_per_agent: int
    standardize: bool
    intercept: bool

    def to_dict(self) -> dict:
        return {
            "dataset": {
                "path": self.path,
                "n_agents": self.n_agents,
                "rows_per_agent": self.rows_per_agent,
                "standardize": self.standardize,
                "intercept": self.intercept,
            }
        }


@dataclass(frozen=True)
class GraphSpec:
    kind: str
    edge_probability: float
    seed: int
    edges: tuple

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "random":
            out["edge_probability"] = self.edge_probability
            out["seed"] = self.seed
        if self.kind == "edges":
            out["edges"] = [list(e) for e in self.edges]
        return out


@dataclass(frozen=True)
class DgfSpec:
    name: str
    box_lower: float
    box_upper: float

    def to_dict(self) -> dict:
        out = {"name": self.name}
        if self.name == "entropy":
            out["box_lower"] = self.box_lower
            out["box_upper"] = self.box_upper
        return out


@dataclass(frozen=True)
class DynamicsSpec:
    dt: float | None
    steps: int
    stride: int
    x0: object

    def to_dict(self) -> dict:
        out = {"steps": self.steps, "stride": self.stride, "x0": self.x0}
        if self.dt is not None:
            out["dt"] = self.dt
        return out


@dataclass(frozen=True)
class BaselineSpec:
    kind: str
    eta0: float | None

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.eta0 is not None:
            out["eta0"] = self.eta0
        return out


@dataclass(frozen=True)
class StabilitySpec:
    enabled: bool
    tolerance: float | None

    def to_dict(self) -> dict:
        out = {"enabled": self.enabled}
        if self.tolerance is not None:
            out["tolerance"] = self.tolerance
        return out


@dataclass(frozen=True)
class OutputSpec:
    directory: str
    curve_stride: int

    def to_dict(self) -> dict:
        # the directory is a location, not experiment semantics: two runs
        # of one experiment into different directories must hash equal
        return {"curve_stride": self.curve_stride}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: SyntheticProblem | DatasetProblem
    graph: GraphSpec
    dgf: DgfSpec
    dynamics: DynamicsSpec
    baselines: tuple
    stability: StabilitySpec
    output: OutputSpec
    base_dir: str = "."

    @property
    def n_agents(self) -> int:
        return self.problem.n_agents

    def to_dict(self) -> dict:
        return {
            "problem": self.problem.to_dict(),
            "graph": self.graph.to_dict(),
            "dgf": self.dgf.to_dict(),
            "dynamics": self.dynamics.to_dict(),
            "baselines": [b.to_dict() for b in self.baselines],
            "stability": self.stability.to_dict(),
            "output": self.output.to_dict(),
        }


def config_hash(config: ExperimentConfig) -> str:
    """sha256 over the canonical JSON form of the resolved config."""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(path) -> ExperimentConfig:
    """Parse and strictly validate a TOML config file.

    Relative dataset paths are interpreted relative to the config file's
    directory, so a config and its data can move together.
    """
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    return config_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def config_from_dict(raw: dict, base_dir: str = ".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    _check_unknown(raw, {"problem", "graph", "dgf", "dynamics", "baselines", "stability", "output"}, "top level")

    problem = _parse_problem(_require_table(raw, "problem", "top level"))
    graph = _parse_graph(raw.get("graph"), problem.n_agents)
    dgf = _parse_dgf(raw.get("dgf"))
    dynamics = _parse_dynamics(_require_table(raw, "dynamics", "top level"), dgf)
    baselines = _parse_baselines(raw.get("baselines"))
    stability = _parse_stability(raw.get("stability"))
    output = _parse_output(raw.get("output"))
    return ExperimentConfig(
        problem=problem,
        graph=graph,
        dgf=dgf,
        dynamics=dynamics,
        baselines=baselines,
        stability=stability,
        output=output,
        base_dir=base_dir,
    )


def construct_cost_set(config: ExperimentConfig) -> CostSet:
    problem = config.problem
    if isinstance(problem, SyntheticProblem):
        return synthetic_quadratic_costset(problem.n_agents, problem.dim, problem.seed)
    path = problem.path
    if not os.path.isabs(path):
        path = os.path.join(config.base_dir, path)
    if not os.path.exists(path):
        raise ConfigError(f"dataset file not found: {path}")
    table = load_table(path)
    return partition_dataset(
        table,
        n_agents=problem.n_agents,
        rows_per_agent=problem.rows_per_agent,
        standardize=problem.standardize,
        intercept=problem.intercept,
    )


def construct_graph(config: ExperimentConfig) -> Graph:
    spec = config.graph
    n = config.n_agents
    if spec.kind == "cycle":
        return cycle_graph(n)
    if spec.kind == "complete":
        return complete_graph(n)
    if spec.kind == "random":
        return random_connected_graph(
            n, edge_probability=spec.edge_probability, seed=spec.seed
        )
    return build_graph(n, list(spec.edges))


def construct_dgf(config: ExperimentConfig, dim: int) -> DistanceGenerator:
    spec = config.dgf
    if spec.name == "euclidean":
        return euclidean_dgf(dim)
    return negative_entropy_dgf(dim, box_lower=spec.box_lower, box_upper=spec.box_upper)


def construct_x0(config: ExperimentConfig, dim: int) -> np.ndarray:
    """Materialize the initial primal block from its config spec."""
    x0 = config.dynamics.x0
    n = config.n_agents
    if x0 == "zeros":
        return np.zeros((n, dim))
    if x0 == "ones":
        return np.ones((n, dim))
    arr = np.asarray(x0, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ConfigError(
                f"dynamics.x0: vector has length {arr.shape[0]}, problem dim is {dim}"
            )
        return np.tile(arr, (n, 1))
    if arr.shape != (n, dim):
        raise ConfigError(
            f"dynamics.x0: expected shape ({n}, {dim}), got {arr.shape}"
        )
    return arr


def default_config_toml() -> str:
    """Fully explicit default configuration, as TOML text.

    Every knob appears with its default so nothing about a run is
    implicit; the dump parses and validates as-is.
    """
    return """\
# Every setting shown with its default. The problem section must be
# exactly one of [problem.synthetic] or [problem.dataset].

[problem.synthetic]
n_agents = 5
dim = 3
seed = 0

# Dataset mode (replace the synthetic table above):
# [problem.dataset]
# path = "data.csv"          # last column is the target
# n_agents = 10
# rows_per_agent = 400
# standardize = true         # zero mean, unit variance on the used rows
# intercept = true           # append a constant-1 feature

[graph]
kind = "cycle"               # cycle | complete | random | edges
# edge_probability = 0.3     # random only
# seed = 0                   # random only
# edges = [[1, 2], [2, 3]]   # edges only, 1-based endpoints

[dgf]
name = "euclidean"           # euclidean | entropy
# box_lower = 1e-6           # entropy only: admissible box
# box_upper = 1e3

[dynamics]
# dt = 0.01                  # omitted: 1 / (2 * stiffest curvature mode)
steps = 100000
stride = 100                 # snapshot every this many steps
x0 = "zeros"                 # zeros | ones | [per-dim values]

[[baselines]]
kind = "diminishing"         # eta_k = eta0 / sqrt(k + 1)
# eta0 = 0.01                # omitted: the resolved dt

[[baselines]]
kind = "constant"            # eta_k = eta0
# eta0 = 0.01                # omitted: the resolved dt

[stability]
enabled = true
# tolerance = 1e-12          # omitted: scaled to the matrix norm

[output]
directory = "out"
curve_stride = 1             # downsample exported curves
"""


def _parse_problem(table: dict):
    _check_unknown(table, {"synthetic", "dataset"}, "problem")
    if ("synthetic" in table) == ("dataset" in table):
        raise ConfigError(
            "problem: exactly one of [problem.synthetic] or [problem.dataset] required"
        )
    if "synthetic" in table:
        section = _require_dict(table["synthetic"], "problem.synthetic")
        _check_unknown(section, {"n_agents", "dim", "seed"}, "problem.synthetic")
        n = _get_int(section, "n_agents", "problem.synthetic", minimum=1)
        dim = _get_int(section, "dim", "problem.synthetic", minimum=1)
        seed = _get_int(section, "seed", "problem.synthetic", default=0, minimum=0)
        return SyntheticProblem(n_agents=n, dim=dim, seed=seed)
    section = _require_dict(table["dataset"], "problem.dataset")
    _check_unknown(
        section,
        {"path", "n_agents", "rows_per_agent", "standardize", "intercept"},
        "problem.dataset",
    )
    path = _get_str(section, "path", "problem.dataset")
    n = _get_int(section, "n_agents", "problem.dataset", minimum=1)
    rows = _get_int(section, "rows_per_agent", "problem.dataset", minimum=1)
    standardize = _get_bool(section, "standardize", "problem.dataset", default=True)
    intercept = _get_bool(section, "intercept", "problem.dataset", default=True)
    return DatasetProblem(
        path=path,
        n_agents=n,
        rows_per_agent=rows,
        standardize=standardize,
        intercept=intercept,
    )


def _parse_graph(table, n_agents: int) -> GraphSpec:
    if table is None:
        table = {"kind": "cycle"}
    table = _require_dict(table, "graph")
    _check_unknown(table, {"kind", "edge_probability", "seed", "edges"}, "graph")
    kind = _get_str(table, "kind", "graph", default="cycle")
    if kind not in _GRAPH_KINDS:
        raise ConfigError(f"graph.kind: must be one of {_GRAPH_KINDS}, got {kind!r}")
    for key in ("edge_probability", "seed"):
        if key in table and kind != "random":
            raise ConfigError(f"graph.{key}: only valid for kind = \"random\"")
    if "edges" in table and kind != "edges":
        raise ConfigError('graph.edges: only valid for kind = "edges"')
    edge_probability = _get_float(
        table, "edge_probability", "graph", default=0.3, minimum=0.0
    )
    if edge_probability > 1.0:
        raise ConfigError("graph.edge_probability: must be <= 1")
    seed = _get_int(table, "seed", "graph", default=0, minimum=0)
    edges: tuple = ()
    if kind == "edges":
        raw_edges = table.get("edges")
        if not isinstance(raw_edges, list):
            raise ConfigError('graph.edges: required and must be a list for kind = "edges"')
        parsed = []
        for i, pair in enumerate(raw_edges):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in pair)
            ):
                raise ConfigError(f"graph.edges[{i}]: expected a pair of integers")
            parsed.append((pair[0], pair[1]))
        edges = tuple(parsed)
        endpoints = [v for pair in edges for v in pair]
        if endpoints and max(endpoints) > n_agents:
            raise ConfigError(
                f"graph.edges: endpoint {max(endpoints)} exceeds n_agents = {n_agents}"
            )
    return GraphSpec(kind=kind, edge_probability=edge_probability, seed=seed, edges=edges)


def _parse_dgf(table) -> DgfSpec:
    if table is None:
        table = {"name": "euclidean"}
    table = _require_dict(table, "dgf")
    _check_unknown(table, {"name", "box_lower", "box_upper"}, "dgf")
    name = _get_str(table, "name", "dgf", default="euclidean")
    if name not in _DGF_NAMES:
        raise ConfigError(f"dgf.name: must be one of {_DGF_NAMES}, got {name!r}")
    for key in ("box_lower", "box_upper"):
        if key in table and name != "entropy":
            raise ConfigError(f"dgf.{key}: only valid for name = \"entropy\"")
    lower = _get_float(table, "box_lower", "dgf", default=1e-6)
    upper = _get_float(table, "box_upper", "dgf", default=1e3)
    if not 0 < lower < upper:
        raise ConfigError("dgf: need 0 < box_lower < box_upper")
    return DgfSpec(name=name, box_lower=lower, box_upper=upper)


def _parse_dynamics(table: dict, dgf: DgfSpec) -> DynamicsSpec:
    table = _require_dict(table, "dynamics")
    _check_unknown(table, {"dt", "steps", "stride", "x0"}, "dynamics")
    dt = None
    if "dt" in table:
        dt = _get_float(table, "dt", "dynamics")
        if dt <= 0:
            raise ConfigError(f"dynamics.dt: must be positive, got {dt}")
    steps = _get_int(table, "steps", "dynamics", minimum=1)
    stride = _get_int(table, "stride", "dynamics", default=1, minimum=1)
    x0 = table.get("x0", "ones" if dgf.name == "entropy" else "zeros")
    if isinstance(x0, str):
        if x0 not in _X0_NAMES:
            raise ConfigError(f"dynamics.x0: must be one of {_X0_NAMES} or a vector")
        if x0 == "zeros" and dgf.name == "entropy":
            raise ConfigError(
                'dynamics.x0: "zeros" lies outside the entropy mirror map domain'
            )
    elif isinstance(x0, list):
        flat = x0 if not (x0 and isinstance(x0[0], list)) else [v for row in x0 for v in row]
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in flat):
            raise ConfigError("dynamics.x0: vector entries must be numbers")
        if dgf.name == "entropy" and any(v <= 0 for v in flat):
            raise ConfigError(
                "dynamics.x0: entropy mirror map needs strictly positive entries"
            )
    else:
        raise ConfigError("dynamics.x0: must be a name or a vector")
    return DynamicsSpec(dt=dt, steps=steps, stride=stride, x0=x0)


def _parse_baselines(value) -> tuple:
    if value is None:
        return ()
    if not isinstance(value, list):
        raise ConfigError("baselines: must be an array of tables")
    parsed = []
    for i, table in enumerate(value):
        table = _require_dict(table, f"baselines[{i}]")
        _check_unknown(table, {"kind", "eta0"}, f"baselines[{i}]")
        kind = _get_str(table, "kind", f"baselines[{i}]")
        if kind not in _BASELINE_KINDS:
            raise ConfigError(
                f"baselines[{i}].kind: must be one of {_BASELINE_KINDS}, got {kind!r}"
            )
        eta0 = None
        if "eta0" in table:
            eta0 = _get_float(table, "eta0", f"baselines[{i}]")
            if eta0 <= 0:
                raise ConfigError(f"baselines[{i}].eta0: must be positive")
        parsed.append(BaselineSpec(kind=kind, eta0=eta0))
    return tuple(parsed)


def _parse_stability(table) -> StabilitySpec:
    if table is None:
        table = {}
    table = _require_dict(table, "stability")
    _check_unknown(table, {"enabled", "tolerance"}, "stability")
    enabled = _get_bool(table, "enabled", "stability", default=True)
    tolerance = None
    if "tolerance" in table:
        tolerance = _get_float(table, "tolerance", "stability")
        if tolerance < 0:
            raise ConfigError("stability.tolerance: must be nonnegative")
    return StabilitySpec(enabled=enabled, tolerance=tolerance)


def _parse_output(table) -> OutputSpec:
    if table is None:
        table = {}
    table = _require_dict(table, "output")
    _check_unknown(table, {"directory", "curve_stride"}, "output")
    directory = _get_str(table, "directory", "output", default="out")
    curve_stride = _get_int(table, "curve_stride", "output", default=1, minimum=1)
    return OutputSpec(directory=directory, curve_stride=curve_stride)


def _require_table(mapping: dict, key: str, context: str) -> dict:
    if key not in mapping:
        raise ConfigError(f"{context}: missing required section [{key}]")
    return _require_dict(mapping[key], key)


def _require_dict(value, context: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{context}: expected a table")
    return value


def _check_unknown(mapping: dict, allowed: set, context: str):
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {unknown}")


def _get_int(mapping, key, context, default=_REQUIRED, minimum=None) -> int:
    value = _get(mapping, key, context, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{context}.{key}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{context}.{key}: must be >= {minimum}, got {value}")
    return value


def _get_float(mapping, key, context, default=_REQUIRED, minimum=None) -> float:
    value = _get(mapping, key, context, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context}.{key}: expected a number, got {value!r}")
    value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{context}.{key}: must be >= {minimum}, got {value}")
    return value


def _get_bool(mapping, key, context, default=_REQUIRED) -> bool:
    value = _get(mapping, key, context, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{context}.{key}: expected true/false, got {value!r}")
    return value


def _get_str(mapping, key, context, default=_REQUIRED) -> str:
    value = _get(mapping, key, context, default)
    if not isinstance(value, str):
        raise ConfigError(f"{context}.{key}: expected a string, got {value!r}")
    return value


def _get(mapping, key, context, default):
    if key in mapping:
        return mapping[key]
    if default is _REQUIRED:
        raise ConfigError(f"{context}.{key}: required key is missing")
    return default
