"""The projected stochastic Langevin chain, coupled runs and ensembles.

Randomness layout
-----------------
Chains are grouped in blocks of ``BLOCK`` lanes. Every block owns two
counter-based Philox generators keyed by ``(master_seed, stream, block)``,
one for Gaussian noise and one for batches. Each step draws noise for all
``BLOCK`` lanes whether or not they are used, so the tape of chain ``i`` is a
function of ``(master_seed, stream, i)`` only: it does not depend on how many
chains run or on how blocks are spread over workers.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import geometry
from .bounds import mixing_time_upper_convex, mixing_time_upper_strongly_convex
from .geometry import ConvexBody, DimensionMismatch, INFINITE, WholeSpace
from .potentials import FiniteSumPotential, contraction_coefficient

BLOCK = 4096
STATIONARY_PROXY = "stationary-proxy"

_NOISE, _BATCH = 0, 1
MAIN_STREAM, PROXY_STREAM = 0, 1


def _block_generators(master_seed: int, stream: int, block: int):
    def gen(tag):
        ss = np.random.SeedSequence(int(master_seed), spawn_key=(stream, block, tag))
        return np.random.Generator(np.random.Philox(ss))
    return gen(_NOISE), gen(_BATCH)


def _partial_fisher_yates(rng: np.random.Generator, n: int, b: int, rows: int) -> np.ndarray:
    """``rows`` independent uniform ``b``-subsets of ``range(n)``, one per row.

    Vectorized partial Fisher-Yates: position ``k`` is swapped with a uniform
    position in ``[k, n)``, for ``k < b``.
    """
    perm = np.tile(np.arange(n, dtype=np.int64), (rows, 1))
    r = np.arange(rows)
    for k in range(b):
        j = k + rng.integers(0, n - k, size=rows)
        tmp = perm[r, j]
        perm[r, j] = perm[:, k]
        perm[:, k] = tmp
    return perm[:, :b].copy()


def sample_batch(n: int, b: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random ``b``-subset of ``{0, ..., n-1}`` without replacement.

    Indices are 0-based. The full set is returned in order when ``b == n``.
    """
    if not 1 <= b:
        raise ValueError("batch size must be >= 1")
    if b > n:
        raise ValueError(f"batch size {b} exceeds the number of components {n}")
    if b == n:
        return np.arange(n, dtype=np.int64)
    return np.sort(_partial_fisher_yates(rng, n, b, 1)[0])


@dataclass(frozen=True, eq=False)
class ChainConfig:
    """Everything that determines a Langevin run.

    ``init`` is a point of the body or the string ``"stationary-proxy"``; the
    latter starts at the body's center and discards a burn-in of four times
    the TV-1/4 upper bound. On the whole space a proxy diameter ``d_proxy``
    must then be supplied.
    """

    body: ConvexBody
    potential: FiniteSumPotential
    eta: float
    batch_size: int
    horizon: int
    init: Union[np.ndarray, str] = STATIONARY_PROXY
    master_seed: int = 0
    d_proxy: Optional[float] = None

    def __post_init__(self):
        F, K = self.potential, self.body
        if F.dim != K.dim:
            raise DimensionMismatch(f"potential has dimension {F.dim}, body has {K.dim}")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if not 1 <= self.batch_size <= F.n:
            raise ValueError(f"batch size must lie in [1, {F.n}], got {self.batch_size}")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        contraction_coefficient(F.m, F.M, self.eta)  # raises StepsizeTooLarge
        if isinstance(self.init, str):
            if self.init != STATIONARY_PROXY:
                raise ValueError(f"unknown init marker {self.init!r}")
            if not K.bounded and self.d_proxy is None:
                raise ValueError("stationary-proxy init on the whole space needs d_proxy")
        else:
            x0 = np.atleast_1d(np.asarray(self.init, dtype=float))
            if x0.shape != (K.dim,):
                raise DimensionMismatch(f"init has shape {x0.shape}, body has dimension {K.dim}")
            if not geometry.contains(K, x0):
                raise ValueError("init must lie in the body")
            x0.setflags(write=False)
            object.__setattr__(self, "init", x0)

    @property
    def dim(self) -> int:
        return self.body.dim

    @property
    def proxied(self) -> bool:
        return isinstance(self.init, str)

    @property
    def contraction(self) -> float:
        return contraction_coefficient(self.potential.m, self.potential.M, self.eta)

    def burn_in(self) -> int:
        """Steps discarded before time 0 (nonzero only for the stationary proxy)."""
        if not self.proxied:
            return 0
        D = self.d_proxy if self.d_proxy is not None else geometry.diameter(self.body)
        F = self.potential
        if F.m > 0:
            upper = mixing_time_upper_strongly_convex(D, self.eta, F.m, F.M, 0.25, metric="tv")
        else:
            upper = mixing_time_upper_convex(D, self.eta, 0.25, metric="tv")
        return 4 * upper

    def start_point(self) -> np.ndarray:
        if self.proxied:
            return geometry.center(self.body)
        return np.array(self.init, dtype=float)

    def with_init(self, init) -> "ChainConfig":
        return replace(self, init=init)


@dataclass
class NoiseAndBatchTape:
    """Per-step noise ``Z`` (shape ``(T, d)``, variance ``2 eta``) and batches ``B`` (``(T, b)``)."""

    Z: np.ndarray
    B: np.ndarray

    def __len__(self):
        return self.Z.shape[0]


@dataclass
class Trajectory:
    """States ``X_0..X_T`` with shape ``(T+1, d)``; optional auxiliary ``Y``."""

    states: np.ndarray
    aux: Optional[np.ndarray] = None
    chain_id: int = 0

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1

    def rows(self):
        for t, x in enumerate(self.states):
            yield [self.chain_id, t, *map(float, x)]

    def to_csv(self, path, append: bool = False):
        d = self.states.shape[1]
        with open(path, "a" if append else "w", newline="") as fh:
            w = csv.writer(fh)
            if not append:
                w.writerow(["chain_id", "t", *[f"x_{k}" for k in range(d)]])
            w.writerows(self.rows())


def _draw_step(rng_z, rng_b, cfg: ChainConfig, scale: float):
    Z = rng_z.standard_normal((BLOCK, cfg.dim)) * scale
    n, b = cfg.potential.n, cfg.batch_size
    if b == n:
        B = None
    else:
        B = _partial_fisher_yates(rng_b, n, b, BLOCK)
    return Z, B


def _full_batch(cfg: ChainConfig, rows: int) -> np.ndarray:
    return np.broadcast_to(np.arange(cfg.potential.n, dtype=np.int64), (rows, cfg.potential.n))


def make_tape(cfg: ChainConfig, chain_index: int = 0, steps: Optional[int] = None,
              stream: int = MAIN_STREAM) -> NoiseAndBatchTape:
    """The tape chain ``chain_index`` sees, burn-in steps included.

    Extracted lane-wise from the chain's block, so it agrees bitwise with what
    the ensemble runner uses.
    """
    if steps is None:
        steps = cfg.burn_in() + cfg.horizon
    block, lane = divmod(int(chain_index), BLOCK)
    rng_z, rng_b = _block_generators(cfg.master_seed, stream, block)
    scale = math.sqrt(2.0 * cfg.eta)
    Z = np.empty((steps, cfg.dim))
    B = np.empty((steps, cfg.batch_size), dtype=np.int64)
    for t in range(steps):
        z, bt = _draw_step(rng_z, rng_b, cfg, scale)
        Z[t] = z[lane]
        B[t] = np.arange(cfg.potential.n) if bt is None else bt[lane]
    return NoiseAndBatchTape(Z, B)


def _advance(cfg: ChainConfig, x: np.ndarray, Z: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-wise Langevin update; the single-chain and ensemble paths both use this."""
    g = cfg.potential.batch_gradients(x, B)
    return geometry.project(cfg.body, x - cfg.eta * g + Z)


def step(cfg: ChainConfig, x, Z, B):
    """One update ``project(K, x - eta * minibatch_gradient(F, B, x) + Z)``."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, cfg.dim)
    Z = np.atleast_1d(np.asarray(Z, dtype=float)).reshape(1, cfg.dim)
    B = np.atleast_1d(np.asarray(B, dtype=np.int64))
    if B.min() < 0 or B.max() >= cfg.potential.n:
        raise IndexError(f"batch indices must lie in [0, {cfg.potential.n - 1}]")
    out = _advance(cfg, x, Z, B.reshape(1, -1))[0]
    return float(out[0]) if scalar else out


def _resolve_tape(cfg, chain_index, tape, stream):
    burn = cfg.burn_in()
    if tape is None:
        tape = make_tape(cfg, chain_index, stream=stream)
    if len(tape) < burn + cfg.horizon:
        raise ValueError(f"tape has {len(tape)} steps, need {burn + cfg.horizon}")
    return tape, burn


def run_chain(cfg: ChainConfig, chain_index: int = 0, tape: Optional[NoiseAndBatchTape] = None,
              stream: int = MAIN_STREAM) -> Trajectory:
    """Run one chain for ``cfg.horizon`` steps after any burn-in."""
    tape, burn = _resolve_tape(cfg, chain_index, tape, stream)
    x = cfg.start_point().reshape(1, -1)
    for t in range(burn):
        x = _advance(cfg, x, tape.Z[t:t + 1], tape.B[t:t + 1])
    states = np.empty((cfg.horizon + 1, cfg.dim))
    states[0] = x[0]
    for t in range(cfg.horizon):
        s = burn + t
        x = _advance(cfg, x, tape.Z[s:s + 1], tape.B[s:s + 1])
        states[t + 1] = x[0]
    return Trajectory(states, chain_id=chain_index)


def run_coupled_pair(cfg: ChainConfig, init_a, init_b, chain_index: int = 0,
                     tape: Optional[NoiseAndBatchTape] = None):
    """Two chains from different starts driven by one shared tape."""
    ca, cb = cfg.with_init(init_a), cfg.with_init(init_b)
    if tape is None:
        tape = make_tape(ca, chain_index)
    return run_chain(ca, chain_index, tape), run_chain(cb, chain_index, tape)


def run_auxiliary_cni(cfg: ChainConfig, init=None, chain_index: int = 0,
                      tape: Optional[NoiseAndBatchTape] = None) -> Trajectory:
    """Run the unprojected auxiliary iteration ``Y_{t+1} = phi(Y_t) + Z_t``.

    ``phi(y) = P(y) - eta * mean_grad(P(y))`` with ``P`` the projection, and
    ``X_t = P(Y_t)`` recovers the chain.
    """
    if init is not None:
        cfg = cfg.with_init(init)
    if cfg.proxied:
        raise ValueError("the auxiliary iteration needs an explicit init")
    tape, _ = _resolve_tape(cfg, chain_index, tape, MAIN_STREAM)
    K, F = cfg.body, cfg.potential
    y = cfg.start_point().reshape(1, -1)
    Y = np.empty((cfg.horizon + 1, cfg.dim))
    X = np.empty_like(Y)
    Y[0] = y[0]
    X[0] = geometry.project(K, y)[0]
    for t in range(cfg.horizon):
        px = geometry.project(K, y)
        y = px - cfg.eta * F.batch_gradients(px, tape.B[t:t + 1]) + tape.Z[t:t + 1]
        Y[t + 1] = y[0]
        X[t + 1] = geometry.project(K, y)[0]
    return Trajectory(X, aux=Y, chain_id=chain_index)


# --- ensembles ----------------------------------------------------------------

def _simulate_block(cfg: ChainConfig, stream: int, block: int, lanes: int,
                    record: Sequence[int]) -> dict:
    rng_z, rng_b = _block_generators(cfg.master_seed, stream, block)
    scale = math.sqrt(2.0 * cfg.eta)
    burn = cfg.burn_in()
    x = np.tile(cfg.start_point(), (lanes, 1))
    full = _full_batch(cfg, lanes) if cfg.batch_size == cfg.potential.n else None
    wanted = set(record)
    last = max(record)
    out = {}
    for s in range(burn + last + 1):
        t = s - burn
        if t in wanted:
            out[t] = x.copy()
        if t == last:
            break
        Z, B = _draw_step(rng_z, rng_b, cfg, scale)
        x = _advance(cfg, x, Z[:lanes], full if B is None else B[:lanes])
    return out


def _block_task(args):
    return _simulate_block(*args)


def run_ensemble(cfg: ChainConfig, n_chains: int, record_times: Optional[Iterable[int]] = None,
                 stream: int = MAIN_STREAM, workers: int = 1) -> dict:
    """States of chains ``0..n_chains-1`` at each recorded time.

    Returns a dict mapping time to an array of shape ``(n_chains, d)``. Output
    is bitwise identical for any ``workers`` and agrees with :func:`run_chain`
    chain by chain.
    """
    if n_chains < 1:
        raise ValueError("need at least one chain")
    record = sorted({int(t) for t in (record_times if record_times is not None else [cfg.horizon])})
    if record[0] < 0:
        raise ValueError("record times must be >= 0")
    n_blocks = -(-n_chains // BLOCK)
    tasks = [(cfg, stream, k, min(BLOCK, n_chains - k * BLOCK), record) for k in range(n_blocks)]
    if workers <= 1 or n_blocks == 1:
        parts = [_block_task(a) for a in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_task, tasks))
    return {t: np.concatenate([p[t] for p in parts]) for t in record}


def stationary_proxy_samples(cfg: ChainConfig, n_chains: int, workers: int = 1) -> np.ndarray:
    """Samples approximating the chain's stationary law, on an independent stream."""
    proxy = cfg.with_init(STATIONARY_PROXY)
    return run_ensemble(proxy, n_chains, [0], stream=PROXY_STREAM, workers=workers)[0]


def ensemble_to_csv(path, states_by_time: dict):
    """Write ``chain_id,t,x_0..`` rows sorted by chain then time."""
    times = sorted(states_by_time)
    first = states_by_time[times[0]]
    n, d = first.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["chain_id", "t", *[f"x_{k}" for k in range(d)]])
        for i in range(n):
            for t in times:
                w.writerow([i, t, *map(repr, map(float, states_by_time[t][i]))])
