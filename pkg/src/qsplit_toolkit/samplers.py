"""Sampler backends: exhaustive enumeration and simulated annealing.

Both return a :class:`SamplerOutcome` so callers (QSplit, the SVM trainer,
the CLI) never care which backend produced the samples. The annealer stands
in for a quantum annealer; its wall time is what gets booked as "sampler
time" in solve reports.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numba import njit

from .errors import CapacityError, ParameterError
from .qubo import SEED_MASK, QuboMatrix, Sample, SampleSet, energy

__all__ = [
    "EXHAUSTIVE_CAP",
    "SamplerParams",
    "SamplerOutcome",
    "exhaustive_solve",
    "simulated_anneal",
    "sampler_dispatch",
    "derive_seed",
    "SAMPLER_KINDS",
]

EXHAUSTIVE_CAP = 24
SAMPLER_KINDS = ("exhaustive", "sa")


def derive_seed(seed: int, *path) -> int:
    """Deterministic 64-bit sub-seed for ``path`` below master ``seed``.

    Path elements may be ints or strings. An empty path returns ``seed``.
    """
    seed = int(seed) & SEED_MASK
    if not path:
        return seed
    ss = np.random.SeedSequence(seed, spawn_key=_path_key(path))
    return int(ss.generate_state(1, np.uint64)[0])


def _path_key(path) -> tuple[int, ...]:
    # Strings become their bytes plus a terminator no byte can collide with.
    key = []
    for part in path:
        if isinstance(part, str):
            key.extend(part.encode())
            key.append(0x10000)
        else:
            key.append(int(part))
    return tuple(key)


@dataclass(frozen=True)
class SamplerParams:
    """Annealing parameters. ``None`` betas are derived from the problem scale."""

    num_reads: int = 100
    num_sweeps: int = 1000
    beta_hot: Optional[float] = None
    beta_cold: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1:
            raise ParameterError("num_reads must be >= 1")
        if self.num_sweeps < 1:
            raise ParameterError("num_sweeps must be >= 1")
        for name in ("beta_hot", "beta_cold"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ParameterError(f"{name} must be positive")
        if (self.beta_hot is not None and self.beta_cold is not None
                and not self.beta_hot < self.beta_cold):
            raise ParameterError("beta_hot must be smaller than beta_cold")

    def with_seed(self, seed: int) -> "SamplerParams":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class SamplerOutcome:
    samples: SampleSet
    sampler_time: float
    calls: int = 1


def _enumerate_chunks(n: int, chunk_bits: int = 18):
    total = 1 << n
    step = min(total, 1 << chunk_bits)
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, total, step):
        idx = np.arange(start, min(total, start + step), dtype=np.int64)
        yield idx, ((idx[:, None] >> shifts) & 1).astype(np.float64)


def exhaustive_solve(q: QuboMatrix, cap: int = EXHAUSTIVE_CAP,
                     rel_tol: float = 1e-9) -> SamplerOutcome:
    """Every global minimizer of ``q`` (all ties), one occurrence each.

    Enumeration is vectorized; assignments within ``rel_tol`` of the
    minimum are re-scored with :func:`energy` and the exact minima kept.
    """
    if q.n > cap:
        raise CapacityError(f"exhaustive solve limited to n <= {cap}, got n={q.n}")
    start = time.perf_counter()
    if q.n == 0:
        samples = SampleSet((Sample((), q.offset, 1),))
        return SamplerOutcome(samples, time.perf_counter() - start)
    dense = q.to_dense()
    scale = max(1.0, float(np.abs(dense).sum()))
    best = np.inf
    keep: list[np.ndarray] = []
    for idx, bits in _enumerate_chunks(q.n):
        e = np.einsum("ij,ij->i", bits @ dense, bits)
        lo = float(e.min())
        tol = rel_tol * scale
        if lo < best - tol:
            best = lo
            keep = []
        if lo <= best + tol:
            best = min(best, lo)
            keep.append(idx[e <= best + tol])
    candidates = np.concatenate(keep) if keep else np.empty(0, dtype=np.int64)
    scored = []
    for value in candidates.tolist():
        a = tuple((value >> s) & 1 for s in range(q.n))
        scored.append((energy(q, a), a))
    emin = min(e for e, _ in scored)
    # Vectorized energies are only a filter; ties are decided on exact values.
    winners = [Sample(a, e, 1) for e, a in scored if e <= emin + rel_tol * scale]
    samples = SampleSet.merge(winners)
    return SamplerOutcome(samples, time.perf_counter() - start)


@njit(cache=True)
def _anneal_reads(coupling, diag, betas, read_seeds):
    """Metropolis single-bit-flip annealing, one run per read seed.

    ``coupling`` is the symmetric off-diagonal part (zero diagonal). The
    local field ``field[i] = sum_j coupling[i, j] * x[j]`` is updated on each
    accepted flip, so a flip costs O(n) only when accepted. Returns final
    states and their incrementally tracked energies (offset excluded).
    """
    n = diag.shape[0]
    reads = read_seeds.shape[0]
    states = np.zeros((reads, n), dtype=np.int8)
    tracked = np.zeros(reads)
    for r in range(reads):
        np.random.seed(read_seeds[r])
        x = np.zeros(n, dtype=np.int8)
        for i in range(n):
            if np.random.random() < 0.5:
                x[i] = 1
        field = np.zeros(n)
        for i in range(n):
            if x[i]:
                for j in range(n):
                    field[j] += coupling[i, j]
        e = 0.0
        for i in range(n):
            if x[i]:
                e += diag[i] + 0.5 * field[i]
        for s in range(betas.shape[0]):
            beta = betas[s]
            # Above this delta the acceptance probability is below 2**-53.
            cutoff = 40.0 / beta
            for i in range(n):
                delta = diag[i] + field[i]
                if x[i]:
                    delta = -delta
                if delta > cutoff:
                    continue
                if delta <= 0.0 or np.random.random() < np.exp(-beta * delta):
                    step = 1.0 - 2.0 * x[i]
                    x[i] = 1 - x[i]
                    e += delta
                    for j in range(n):
                        field[j] += step * coupling[i, j]
        states[r, :] = x
        tracked[r] = e
    return states, tracked


def _read_seeds(seed: int, num_reads: int) -> np.ndarray:
    # SeedSequence output is prefix-stable: raising num_reads only adds reads.
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=_path_key(("read",)))
    return ss.generate_state(num_reads, np.uint32)


def beta_schedule(q: QuboMatrix, params: SamplerParams) -> np.ndarray:
    scale = q.max_abs_coefficient() or 1.0
    hot = params.beta_hot if params.beta_hot is not None else 1.0 / scale
    cold = params.beta_cold if params.beta_cold is not None else 50.0 / scale
    if not hot < cold:
        raise ParameterError("beta_hot must be smaller than beta_cold")
    return np.geomspace(hot, cold, params.num_sweeps)


def anneal_arrays(q: QuboMatrix, params: SamplerParams):
    """Raw annealer output: (states, incrementally tracked energies incl. offset)."""
    dense = q.to_dense()
    diag = np.ascontiguousarray(np.diag(dense))
    coupling = dense + dense.T
    np.fill_diagonal(coupling, 0.0)
    betas = beta_schedule(q, params)
    states, tracked = _anneal_reads(coupling, diag, betas, _read_seeds(params.seed, params.num_reads))
    return states, tracked + q.offset


def simulated_anneal(q: QuboMatrix, params: SamplerParams | None = None) -> SamplerOutcome:
    params = params or SamplerParams()
    if q.n < 1:
        raise ParameterError("simulated annealing needs at least one variable")
    start = time.perf_counter()
    states, _ = anneal_arrays(q, params)
    samples = SampleSet.from_assignments(q, states)
    return SamplerOutcome(samples, time.perf_counter() - start)


def sampler_dispatch(kind: str, q: QuboMatrix, params: SamplerParams | None = None) -> SamplerOutcome:
    """Run backend ``kind`` and book its wall time as sampler time."""
    if kind not in SAMPLER_KINDS:
        raise ParameterError(f"unknown sampler kind {kind!r}; expected one of {SAMPLER_KINDS}")
    start = time.perf_counter()
    if kind == "exhaustive":
        outcome = exhaustive_solve(q)
    else:
        outcome = simulated_anneal(q, params)
    return SamplerOutcome(outcome.samples, time.perf_counter() - start, 1)
