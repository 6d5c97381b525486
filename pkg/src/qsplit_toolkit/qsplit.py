"""Recursive quadrant decomposition of a QUBO.

The matrix over variables ``[0, n)`` is cut at ``m = ceil(n / 2)``:

    +------+------+
    |  UL  |  UR  |      UL, BR: QUBOs over [0, m) and [m, n)
    +------+------+      UR:     couplings between the two halves
    |  BL  |  BR  |      BL:     always empty (upper-triangular input)
    +------+------+

UL and BR are solved recursively and their best assignments concatenated
(``S1``). UR is solved on its own, padded to all ``n`` variables. Each
pair drawn from S1 and the UR solutions is reconciled: variables where
they agree stay fixed, the disagreeing ones form a conditioned sub-QUBO
that goes back to the sampler. Only the ``k`` best distinct assignments
survive each merge.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import DimensionError, ParameterError
from .qubo import QuboMatrix, SampleSet, extract_submatrix, fix_variables
from .samplers import SAMPLER_KINDS, SamplerParams, derive_seed, sampler_dispatch

__all__ = [
    "QSplitConfig",
    "BlockSplit",
    "SolveReport",
    "split",
    "solve_coupling",
    "combine_disjoint",
    "merge_resolve",
    "qsplit_solve",
    "account",
    "recursion_leaves",
    "structural_calls",
]

# (sub-QUBO, key) -> samples; ``key`` makes the sub-seed unique per call site.
SubSampler = Callable[[QuboMatrix, tuple], SampleSet]

# "fold": condition on the agreed bits; "extract": conflict rows/columns only.
CONFLICT_MODES = ("fold", "extract")


@dataclass(frozen=True)
class QSplitConfig:
    cut_dim: int = 32
    k: int = 5
    sampler: str = "sa"
    params: SamplerParams = field(default_factory=SamplerParams)
    seed: int = 0
    conflict_mode: str = "fold"

    def __post_init__(self):
        if self.conflict_mode not in CONFLICT_MODES:
            raise ParameterError(f"conflict_mode must be one of {CONFLICT_MODES}")
        if self.cut_dim < 2:
            raise ParameterError(f"cut_dim must be >= 2, got {self.cut_dim}")
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if self.sampler not in SAMPLER_KINDS:
            raise ParameterError(f"unknown sampler kind {self.sampler!r}")


@dataclass(frozen=True)
class BlockSplit:
    m: int
    ul: QuboMatrix
    br: QuboMatrix
    ur: Mapping[tuple[int, int], float]
    bl: Mapping[tuple[int, int], float] = field(default_factory=dict)


@dataclass
class SolveReport:
    best: SampleSet
    cpu_time: float = 0.0
    sampler_time: float = 0.0
    sampler_calls: int = 0
    max_padded_size: int = 0
    conflict_calls: int = 0
    oversized_conflicts: int = 0
    wall_time: float = 0.0

    @property
    def best_energy(self) -> float:
        return self.best.best_energy

    @property
    def total_time(self) -> float:
        return self.cpu_time + self.sampler_time


def split(q: QuboMatrix) -> BlockSplit:
    if q.n < 2:
        raise ParameterError(f"cannot split a problem with n={q.n}")
    m = math.ceil(q.n / 2)
    ul, br, ur = {}, {}, {}
    for (i, j), v in q.entries.items():
        if j < m:
            ul[(i, j)] = v
        elif i >= m:
            br[(i - m, j - m)] = v
        else:
            ur[(i, j)] = v
    return BlockSplit(m, QuboMatrix(m, ul), QuboMatrix(q.n - m, br), ur)


def solve_coupling(ur: Mapping[tuple[int, int], float], n: int,
                   sampler: Callable[[QuboMatrix], SampleSet]) -> SampleSet:
    """Solve the coupling block alone, embedded in an all-zero n x n matrix."""
    return sampler(QuboMatrix(n, ur))


def combine_disjoint(a: SampleSet, b: SampleSet, q: QuboMatrix, k: int) -> SampleSet:
    """Concatenate the top-k of ``a`` (first half) with the top-k of ``b``."""
    top_a, top_b = a.samples[:k], b.samples[:k]
    if not top_a or not top_b:
        raise DimensionError("cannot combine an empty sample set")
    if len(top_a[0].assignment) + len(top_b[0].assignment) != q.n:
        raise DimensionError(
            f"partition sizes {len(top_a[0].assignment)} + {len(top_b[0].assignment)} != n={q.n}")
    joined = [sa.assignment + sb.assignment for sa in top_a for sb in top_b]
    return SampleSet.from_assignments(q, joined).truncate(k)


def merge_resolve(s1: SampleSet, u: SampleSet, q: QuboMatrix, sampler: SubSampler,
                  k: int, on_conflict: Callable[[int], None] | None = None,
                  mode: str = "fold") -> SampleSet:
    """Reconcile S1 with the coupling solutions.

    For each pair the conflicting variables are re-solved with all agreeing
    variables fixed (couplings folded in). The pair members themselves stay
    in the pool, so the result is never worse than the best input.
    """
    pool: list[tuple[int, ...]] = []
    pool.extend(s.assignment for s in s1.samples[:k])
    pool.extend(s.assignment for s in u.samples[:k])
    for ia, sa in enumerate(s1.samples[:k]):
        for ib, sb in enumerate(u.samples[:k]):
            x, y = sa.assignment, sb.assignment
            if len(x) != q.n or len(y) != q.n:
                raise DimensionError("merge expects full-length assignments")
            conflict = [i for i in range(q.n) if x[i] != y[i]]
            if not conflict:
                continue
            if on_conflict is not None:
                on_conflict(len(conflict))
            agreed = {i: x[i] for i in range(q.n) if x[i] == y[i]}
            if mode == "fold":
                sub, remap = fix_variables(q, agreed)
            else:
                sub, remap = extract_submatrix(q, conflict), conflict
            sub_samples = sampler(sub, (ia, ib))
            for s in sub_samples.samples[:k]:
                full = list(x)
                for new, old in enumerate(remap):
                    full[old] = s.assignment[new]
                pool.append(tuple(full))
    return SampleSet.from_assignments(q, pool).truncate(k)


def account(wall_time: float, sampler_time: float) -> float:
    """CPU share of a solve: everything outside sampler calls."""
    return max(0.0, wall_time - sampler_time)


def recursion_leaves(n: int, cut_dim: int) -> int:
    if n <= cut_dim:
        return 1
    m = math.ceil(n / 2)
    return recursion_leaves(m, cut_dim) + recursion_leaves(n - m, cut_dim)


def structural_calls(n: int, cut_dim: int) -> int:
    """Sampler calls made by leaves plus one coupling solve per internal node."""
    return 2 * recursion_leaves(n, cut_dim) - 1


class _Run:
    def __init__(self, cfg: QSplitConfig):
        self.cfg = cfg
        self.sampler_time = 0.0
        self.calls = 0
        self.conflict_calls = 0
        self.oversized = 0
        self.max_padded = 0

    def sample(self, q: QuboMatrix, path: tuple) -> SampleSet:
        params = self.cfg.params.with_seed(derive_seed(self.cfg.seed, *path))
        outcome = sampler_dispatch(self.cfg.sampler, q, params)
        self.sampler_time += outcome.sampler_time
        self.calls += outcome.calls
        self.max_padded = max(self.max_padded, q.n)
        return outcome.samples

    def note_conflict(self, size: int):
        self.conflict_calls += 1
        if size > self.cfg.cut_dim:
            self.oversized += 1

    def solve(self, q: QuboMatrix, path: tuple) -> SampleSet:
        k = self.cfg.k
        if q.n <= self.cfg.cut_dim:
            return self.sample(q, path).truncate(k)
        blocks = split(q)
        left = self.solve(blocks.ul, path + (0,))
        right = self.solve(blocks.br, path + (1,))
        s1 = combine_disjoint(left, right, q, k)
        raw = solve_coupling(blocks.ur, q.n, lambda p: self.sample(p, path + (2,)))
        # Rank by coupling energy, then rescore the survivors on the full problem.
        u = SampleSet.from_assignments(q, raw.assignments()[:k])
        return merge_resolve(s1, u, q, lambda sub, key: self.sample(sub, path + (3,) + key),
                             k, on_conflict=self.note_conflict, mode=self.cfg.conflict_mode)


def qsplit_solve(q: QuboMatrix, cfg: QSplitConfig | None = None) -> SolveReport:
    cfg = cfg or QSplitConfig()
    if q.n < 1:
        raise ParameterError("qsplit needs at least one variable")
    start = time.perf_counter()
    run = _Run(cfg)
    best = run.solve(q, ())
    wall = time.perf_counter() - start
    if run.oversized:
        warnings.warn(f"{run.oversized} conflict sub-problems exceeded cut_dim={cfg.cut_dim}",
                      RuntimeWarning, stacklevel=2)
    return SolveReport(
        best=best,
        cpu_time=account(wall, run.sampler_time),
        sampler_time=run.sampler_time,
        sampler_calls=run.calls,
        max_padded_size=run.max_padded,
        conflict_calls=run.conflict_calls,
        oversized_conflicts=run.oversized,
        wall_time=wall,
    )
