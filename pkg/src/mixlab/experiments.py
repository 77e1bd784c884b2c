"""Experiment configs, runners and file output for the command line."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import __version__, bounds, geometry, oracles, verify
from .chain import ChainConfig, STATIONARY_PROXY, ensemble_to_csv, run_ensemble, \
    stationary_proxy_samples
from .divergences import DEFAULT_BINS, empirical_tv, empirical_tv_stderr
from .potentials import (FiniteSumPotential, IsotropicQuadratic, contraction_coefficient,
                         potential_from_dict, potential_to_dict)

KINDS = ("bound", "simulate", "lower", "verify")
# estimator budget on top of a theoretical TV bound
TV_ESTIMATOR_BUDGET = 0.05


class ConfigError(ValueError):
    """Invalid experiment config; ``errors`` lists ``{"field", "message"}`` records."""

    def __init__(self, errors: list):
        self.errors = errors
        super().__init__("; ".join(f"{e['field']}: {e['message']}" for e in errors))

    def report(self) -> dict:
        return {"status": "invalid-config", "errors": self.errors}


@dataclass(eq=False)
class ExperimentConfig:
    kind: str
    body: Optional[geometry.ConvexBody] = None
    potential: Optional[FiniteSumPotential] = None
    eta: Optional[float] = None
    batch_size: int = 1
    T: Optional[int] = None
    T_grid: Optional[list] = None
    alphas: list = field(default_factory=lambda: [1.0])
    eps: float = 0.25
    chains: int = 10_000
    master_seed: int = 0
    out: Optional[str] = None
    init: Any = "corner"
    d_proxy: Optional[float] = None
    trials: int = 100_000
    bins: int = DEFAULT_BINS
    save_states: bool = False
    criteria: list = field(default_factory=lambda: list(verify.CRITERIA))
    scale: float = 1.0

    # -- serialization --

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.body is not None:
            d["body"] = geometry.body_to_dict(self.body)
        if self.potential is not None:
            d["potential"] = potential_to_dict(self.potential)
        for name in ("eta", "batch_size", "T", "T_grid", "alphas", "eps", "chains",
                     "master_seed", "out", "d_proxy", "trials", "bins", "save_states",
                     "criteria", "scale"):
            d[name] = getattr(self, name)
        d["init"] = self.init if isinstance(self.init, str) else [float(v) for v in self.init]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_json() == other.to_json()

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([{"field": "<root>", "message": f"invalid JSON: {exc}"}])
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Parse and validate; every problem found is reported at once."""
        errors = []

        def err(name, msg):
            errors.append({"field": name, "message": msg})

        if not isinstance(data, dict):
            raise ConfigError([{"field": "<root>", "message": "config must be a JSON object"}])
        known = set(cls.__dataclass_fields__)
        for name in sorted(set(data) - known):
            err(name, "unknown field")
        kw = {"kind": data.get("kind")}
        if "body" in data:
            try:
                kw["body"] = geometry.body_from_dict(data["body"])
            except (KeyError, TypeError, ValueError) as exc:
                err("body", str(exc))
        if "potential" in data:
            try:
                kw["potential"] = potential_from_dict(data["potential"])
            except (KeyError, TypeError, ValueError) as exc:
                err("potential", str(exc))
        for name, conv in (("eta", float), ("batch_size", int), ("T", int), ("eps", float),
                           ("chains", int), ("master_seed", int), ("d_proxy", float),
                           ("trials", int), ("bins", int), ("scale", float),
                           ("save_states", bool), ("out", str)):
            if data.get(name) is not None:
                try:
                    kw[name] = conv(data[name])
                except (TypeError, ValueError):
                    err(name, f"expected {conv.__name__}")
        for name, conv in (("T_grid", int), ("alphas", float), ("criteria", int)):
            if data.get(name) is not None:
                try:
                    kw[name] = [conv(v) for v in data[name]]
                except (TypeError, ValueError):
                    err(name, f"expected a list of {conv.__name__}")
        if "init" in data:
            init = data["init"]
            kw["init"] = init if isinstance(init, str) else np.asarray(init, dtype=float).tolist()
        cfg = cls(**{k: v for k, v in kw.items() if v is not None})
        errors.extend(cfg.errors(skip={e["field"] for e in errors}))
        if errors:
            raise ConfigError(errors)
        return cfg

    def validate(self):
        errors = self.errors()
        if errors:
            raise ConfigError(errors)

    def errors(self, skip=frozenset()) -> list:
        """Field-level problems; fields in ``skip`` already failed to parse."""
        errors = []

        def err(name, msg):
            errors.append({"field": name, "message": msg})

        if self.kind not in KINDS:
            err("kind", f"must be one of {list(KINDS)}")
        if not 0 <= self.master_seed < 2 ** 64:
            err("master_seed", "must be an unsigned 64-bit integer")
        if self.kind in ("bound", "simulate", "lower"):
            if self.body is None:
                err("body", "required")
            if self.potential is None:
                err("potential", "required")
            if self.eta is None or not self.eta > 0:
                err("eta", "required and must be > 0")
        if self.body is not None and self.potential is not None \
                and self.body.dim != self.potential.dim:
            err("potential", f"dimension {self.potential.dim} differs from body {self.body.dim}")
        if self.potential is not None and self.eta is not None and self.eta > 0:
            try:
                contraction_coefficient(self.potential.m, self.potential.M, self.eta)
            except ValueError as exc:
                err("eta", str(exc))
            if not 1 <= self.batch_size <= self.potential.n:
                err("batch_size", f"must lie in [1, {self.potential.n}]")
        if not 0 < self.eps < 1:
            err("eps", "must lie in (0, 1)")
        if any(a < 1 for a in self.alphas) or not self.alphas:
            err("alphas", "need a nonempty list of orders >= 1")
        if self.T is not None and self.T < 0:
            err("T", "must be >= 0")
        if self.T_grid is not None and (not self.T_grid or min(self.T_grid) < 0):
            err("T_grid", "need a nonempty list of times >= 0")
        if self.kind == "simulate":
            if self.chains < 1:
                err("chains", "must be >= 1")
            if self.bins < 2:
                err("bins", "must be >= 2")
            if self.body is not None and self.body.dim != 1:
                err("body", "mixing curves need a one-dimensional body")
        if self.kind == "lower" and self.trials < 10_000:
            err("trials", "must be >= 10000")
        if self.body is not None and not self.body.bounded and self.kind in ("bound", "simulate") \
                and self.d_proxy is None:
            err("d_proxy", "an unbounded body needs a diameter proxy")
        if isinstance(self.init, str):
            if self.init not in ("corner", STATIONARY_PROXY):
                err("init", "must be 'corner', 'stationary-proxy' or a point")
            elif self.init == "corner" and self.body is not None and not self.body.bounded \
                    and self.kind == "simulate":
                err("init", "the whole space has no corner; give a point")
        elif self.body is not None:
            x0 = np.asarray(self.init, dtype=float)
            if x0.shape != (self.body.dim,):
                err("init", f"expected a point of dimension {self.body.dim}")
            elif not geometry.contains(self.body, x0):
                err("init", "must lie in the body")
        if not set(self.criteria) <= set(verify.CRITERIA):
            err("criteria", f"must be a subset of {sorted(verify.CRITERIA)}")
        if not self.scale > 0:
            err("scale", "must be > 0")
        return [e for e in errors if e["field"] not in skip]

    # -- derived --

    @property
    def m(self) -> float:
        return self.potential.m

    @property
    def M(self) -> float:
        return self.potential.M

    def diameter_patch(self) -> bounds.DiameterPatch:
        return bounds.unconstrained_diameter_adapter(self.body, self.eps, self.d_proxy)

    def chain_config(self, horizon: int) -> ChainConfig:
        if isinstance(self.init, str) and self.init == "corner":
            init = geometry.corner(self.body)
        elif isinstance(self.init, str):
            init = self.init
        else:
            init = np.asarray(self.init, dtype=float)
        return ChainConfig(self.body, self.potential, self.eta, self.batch_size, horizon,
                           init=init, master_seed=self.master_seed, d_proxy=self.d_proxy)


@dataclass
class ResultRow:
    experiment: str
    params: dict
    metric: str
    theoretical: Optional[float] = None
    empirical: Optional[float] = None
    stderr: Optional[float] = None
    tolerance: str = ""
    passed: Optional[bool] = None

    COLUMNS = ("experiment", "params", "metric", "theoretical", "empirical", "stderr",
               "tolerance", "passed")

    def sort_key(self):
        return (self.experiment, self.metric, float(self.params.get("T", -1)),
                json.dumps(self.params, sort_keys=True))

    def as_dict(self) -> dict:
        return {"experiment": self.experiment, "params": self.params, "metric": self.metric,
                "theoretical": _num(self.theoretical), "empirical": _num(self.empirical),
                "stderr": _num(self.stderr), "tolerance": self.tolerance, "passed": self.passed}

    def csv_row(self) -> list:
        d = self.as_dict()
        d["params"] = json.dumps(self.params, sort_keys=True)
        d["passed"] = "" if self.passed is None else ("pass" if self.passed else "fail")
        return ["" if d[k] is None else d[k] for k in self.COLUMNS]


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf"
    return x


@dataclass
class ExperimentOutput:
    rows: list
    tables: dict = field(default_factory=dict)  # file name -> (columns, rows)
    lines: list = field(default_factory=list)  # human-readable summary

    @property
    def all_passed(self) -> bool:
        return all(r.passed is not False for r in self.rows)


# --- bound --------------------------------------------------------------------

def _bound_experiment(cfg: ExperimentConfig) -> ExperimentOutput:
    patch = cfg.diameter_patch()
    reports = bounds.bound_reports(patch.D, cfg.eta, cfg.eps, cfg.alphas, cfg.m, cfg.M)
    if cfg.T is not None and cfg.T >= 1:
        c = contraction_coefficient(cfg.m, cfg.M, cfg.eta)
        for a in cfg.alphas:
            for mode in ("piecewise", "continuous"):
                value = bounds.pabi_divergence_bound(a, patch.D, 2 * cfg.eta, c, cfg.T, mode)
                reports.append(bounds.BoundReport(
                    value, f"pabi-{mode}", "renyi", a, patch.D, cfg.eta, cfg.m, cfg.M, None,
                    beta_alloc=bounds.allocation_beta(c, cfg.T) if mode == "continuous" else None))
    rows = []
    for r in reports:
        params = {"formula_id": r.formula_id, "alpha": r.alpha, "eps": r.eps, "D": r.D,
                  "eta": r.eta}
        if r.formula_id.startswith("pabi"):
            params["T"] = cfg.T
        rows.append(ResultRow("bound", params, r.metric, theoretical=r.value))
    if patch.proxied:
        rows.append(ResultRow("bound", {"D_proxy": patch.D, "eps": cfg.eps}, "tv-target",
                              theoretical=patch.tv_target(cfg.eps)))
    table = (bounds.BoundReport.CSV_COLUMNS, [[r.row()[k] for k in bounds.BoundReport.CSV_COLUMNS]
                                              for r in reports])
    lines = [f"{r.formula_id:24s} {r.metric:9s} alpha={r.alpha!s:5s} value={r.value}"
             for r in reports]
    return ExperimentOutput(rows, {"bounds.csv": table}, lines)


# --- simulate -----------------------------------------------------------------

def _tv_quarter_upper(cfg: ExperimentConfig, D: float) -> int:
    if cfg.m > 0:
        return bounds.mixing_time_upper_strongly_convex(D, cfg.eta, cfg.m, cfg.M, 0.25,
                                                        metric="tv")
    return bounds.mixing_time_upper_convex(D, cfg.eta, 0.25, "tv")


def default_T_grid(cfg: ExperimentConfig, points: int = 12) -> list:
    """Log-spaced grid from the lower-bound prediction to four times the upper bound."""
    D = cfg.diameter_patch().D
    if cfg.m > 0:
        c = contraction_coefficient(cfg.m, cfg.M, cfg.eta)
        lo = bounds.mixing_time_lower_strongly_convex(1.0, c, 2 * 0.25 ** 2) if 0 < c < 1 else 1
    else:
        lo = bounds.mixing_time_lower_convex(D, cfg.eta)
    lo = max(1, lo)
    hi = max(lo + 1, 4 * _tv_quarter_upper(cfg, D))
    return sorted({int(round(t)) for t in np.geomspace(lo, hi, points)})


def tv_upper_bound(cfg: ExperimentConfig, T: int) -> float:
    """Worst-case TV to stationarity after ``T`` steps from the calculators."""
    D = cfg.diameter_patch().D
    out = bounds.tv_upper_bound_at(T, D, cfg.eta)
    if cfg.m > 0 and T > 0:
        c = contraction_coefficient(cfg.m, cfg.M, cfg.eta)
        kl = bounds.pabi_divergence_bound(1.0, D, 2 * cfg.eta, c, T, "piecewise")
        out = min(out, math.sqrt(kl / 2.0))
    return cfg.diameter_patch().tv_target_factor * out if out < 1 else 1.0


def estimate_mixing_curve(cfg: ExperimentConfig, grid=None, workers: int = 1,
                          return_states: bool = False):
    """Empirical TV between the time-T ensemble and the stationary proxy.

    Returns a list of ``(T, tv, stderr)``, plus the recorded states when
    ``return_states`` is set.
    """
    grid = sorted(set(grid if grid is not None else (cfg.T_grid or default_T_grid(cfg))))
    chain_cfg = cfg.chain_config(max(grid))
    states = run_ensemble(chain_cfg, cfg.chains, grid, workers=workers)
    proxy = stationary_proxy_samples(chain_cfg, cfg.chains, workers=workers)
    curve = [(T, empirical_tv(states[T], proxy, cfg.bins),
              empirical_tv_stderr(states[T], proxy, cfg.bins)) for T in grid]
    return (curve, states) if return_states else curve


def _simulate_experiment(cfg: ExperimentConfig, workers: int) -> ExperimentOutput:
    curve, states = estimate_mixing_curve(cfg, workers=workers, return_states=True)
    rows, table, lines = [], [], []
    for T, tv, se in curve:
        up = tv_upper_bound(cfg, T)
        ok = tv <= up + TV_ESTIMATOR_BUDGET
        rows.append(ResultRow("simulate", {"T": T, "chains": cfg.chains}, "tv", up, tv, se,
                              f"<= bound + {TV_ESTIMATOR_BUDGET}", ok))
        table.append([T, tv, se, up])
        lines.append(f"T={T:6d}  TV={tv:.4f} +- {se:.4f}  bound={up:.4f}  "
                     + ("ok" if ok else "EXCEEDS"))
    for (T0, tv0, se0), (T1, tv1, se1) in zip(curve, curve[1:]):
        rise = tv1 - tv0
        band = 2 * math.hypot(se0, se1)
        rows.append(ResultRow("simulate", {"T": T1, "T_prev": T0}, "tv-monotone", None, rise,
                              band / 2, "increase <= 2 se", rise <= band))
    tables = {"mixing_curve.csv": (("T", "tv", "stderr", "tv_upper"), table)}
    if cfg.save_states:
        tables["states.csv"] = states
    return ExperimentOutput(rows, tables, lines)


# --- lower --------------------------------------------------------------------

SUPREMUM_GRID = ((10, 0.8), (10, 1.5), (10, 2.5), (100, 0.8), (100, 1.5), (100, 2.5))


def _lower_experiment(cfg: ExperimentConfig, workers: int) -> ExperimentOutput:
    rows, table, lines = [], [], []

    def add(construction, params, T, analytic, empirical, stderr, ok, tol):
        table.append([construction, json.dumps(params, sort_keys=True), T, analytic,
                      empirical, stderr])
        rows.append(ResultRow("lower", {"construction": construction, "T": T, **params},
                              construction, analytic, empirical, stderr, tol, ok))
        lines.append(f"{construction:26s} T={T:<5d} analytic={analytic:.6g} "
                     f"empirical={empirical:.6g} " + ("ok" if ok else "FAIL"))

    # projected random walk on an interval
    if isinstance(cfg.body, geometry.Interval):
        D = geometry.diameter(cfg.body)
        T_low = bounds.mixing_time_lower_convex(D, cfg.eta)
        # the 1/4 claim covers T <= D^2/(100 eta); rounding up can leave that range
        horizon = D * D / (100.0 * cfg.eta)
        quarter_at = T_low if T_low <= horizon * (1 + 1e-9) else None
        for T in sorted(set(cfg.T_grid or []) | {T_low}):
            est = oracles.random_walk_escape(D, cfg.eta, T, trials=cfg.trials,
                                             seed=cfg.master_seed, workers=workers)
            ok = est.respected and (T != quarter_at or est.estimate < 0.25)
            add("zero-potential-walk", {"D": D, "eta": cfg.eta, "start": -D / 4}, T,
                est.ceiling, est.estimate, est.stderr, ok,
                "<= ceiling + 3 se" + ("; < 1/4" if T == quarter_at else ""))
    # random-walk supremum inequality as stated (two-sided) and one-sided
    for T, r in SUPREMUM_GRID:
        a = r * math.sqrt(T)
        for two in (True, False):
            est = oracles.walk_supremum_probability(a, T, cfg.trials, seed=cfg.master_seed + T,
                                                    two_sided=two)
            add("walk-supremum-" + ("two-sided" if two else "one-sided"), {"a": a}, T,
                est.ceiling, est.estimate, est.stderr, est.respected, "<= ceiling + 3 se")
    # quadratic chain: exact Gaussian laws
    if cfg.m > 0 or cfg.M > 0:
        law = oracles.QuadraticChainLaw.from_regularity(cfg.m, cfg.M, cfg.eta)
        c = law.c
        horizon = cfg.T or 60
        if 0 < c < 1:
            for a in cfg.alphas:
                for T in range(1, horizon + 1):
                    exact = oracles.exact_renyi_gap(a, c, T)
                    low = oracles.sc_lower_bound_value(a, c, T)
                    add("quadratic-renyi-gap", {"alpha": a, "c": c, "lam": law.lam}, T, low,
                        exact, 0.0, exact >= low - 1e-12 * max(1.0, low), "exact >= bound")
        times = sorted({1, max(1, horizon // 4), horizon})
        qcfg = ChainConfig(geometry.WholeSpace(1), FiniteSumPotential([IsotropicQuadratic(law.lam)]),
                           cfg.eta, 1, horizon, init=np.zeros(1), master_seed=cfg.master_seed)
        n = max(cfg.chains, 10_000)
        states = run_ensemble(qcfg, n, times, workers=workers)
        for T in times:
            x = states[T][:, 0]
            v = float(np.var(x))
            se = math.sqrt(max(float(np.mean((x - x.mean()) ** 4)) - v * v, 0.0) / n)
            exact = oracles.exact_iterate_law(oracles.QuadraticChainLaw(law.lam, cfg.eta, T))
            add("quadratic-iterate-variance", {"lam": law.lam, "eta": cfg.eta, "chains": n}, T,
                exact.variance, v, se, abs(v - exact.variance) <= 3 * se, "within 3 se")
    columns = ("construction", "param_json", "T", "analytic", "empirical", "stderr")
    return ExperimentOutput(rows, {"lower.csv": (columns, table)}, lines)


# --- verify -------------------------------------------------------------------

def _verify_experiment(cfg: ExperimentConfig, workers: int) -> ExperimentOutput:
    results = verify.run_all(seed=cfg.master_seed, workers=workers, scale=cfg.scale,
                             criteria=tuple(cfg.criteria))
    rows, table, lines = [], [], []
    for r in results:
        rows.append(ResultRow("verify", {"key": r.key}, r.title, None, None, None, r.tolerance,
                              r.passed))
        table.append([r.key, r.title, "pass" if r.passed else "fail", r.measured, r.tolerance])
        lines.append(r.line())
        lines.extend("      " + d for d in r.details)
    columns = ("key", "title", "passed", "measured", "tolerance")
    return ExperimentOutput(rows, {"verify.csv": (columns, table)}, lines)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentOutput:
    """Run ``cfg`` and return its result rows and tables (nothing is written)."""
    cfg.validate()
    if cfg.kind == "bound":
        out = _bound_experiment(cfg)
    elif cfg.kind == "simulate":
        out = _simulate_experiment(cfg, workers)
    elif cfg.kind == "lower":
        out = _lower_experiment(cfg, workers)
    else:
        out = _verify_experiment(cfg, workers)
    out.rows.sort(key=ResultRow.sort_key)
    return out


# --- output -------------------------------------------------------------------

def git_blob_sha1(data: bytes) -> str:
    """Hash as ``git hash-object`` would."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _csv_bytes(columns, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue().encode()


def write_outputs(out_dir: str, cfg: ExperimentConfig, result: ExperimentOutput) -> dict:
    """Write every table, ``results.csv`` and the ``results.json`` sidecar.

    Nothing depending on the run environment (time, worker count) is written,
    so outputs are byte-identical across reruns of the same config.
    """
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    for name, table in result.tables.items():
        path = os.path.join(out_dir, name)
        if name == "states.csv":
            ensemble_to_csv(path, table)
            with open(path, "rb") as fh:
                files[name] = git_blob_sha1(fh.read())
            continue
        data = _csv_bytes(*table)
        with open(path, "wb") as fh:
            fh.write(data)
        files[name] = git_blob_sha1(data)
    data = _csv_bytes(ResultRow.COLUMNS, [r.csv_row() for r in result.rows])
    with open(os.path.join(out_dir, "results.csv"), "wb") as fh:
        fh.write(data)
    files["results.csv"] = git_blob_sha1(data)
    # the output location is not part of the experiment's identity
    config = {k: v for k, v in cfg.to_dict().items() if k != "out"}
    config_json = json.dumps(config, sort_keys=True).encode()
    sidecar = {
        "config": config,
        "package_version": __version__,
        "provenance_sha1": git_blob_sha1(config_json + b"\n" + __version__.encode()),
        "files": files,
        "all_passed": result.all_passed,
        "rows": [r.as_dict() for r in result.rows],
    }
    with open(os.path.join(out_dir, "results.json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar
