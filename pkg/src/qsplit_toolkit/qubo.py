"""QUBO representation and the transformations into and out of it.

A QUBO here is an upper-triangular quadratic form over binary variables

    E(x) = sum_{i <= j} Q[i, j] * x_i * x_j + offset

where diagonal entries act linearly because x_i**2 == x_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import chain
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, ParameterError, QuboParseError

__all__ = [
    "QuboMatrix",
    "Sample",
    "SampleSet",
    "LinearConstraint",
    "VariableMap",
    "energy",
    "from_symmetric",
    "compose_penalty",
    "encode_integers",
    "decode_integers",
    "to_minimization",
    "fix_variables",
    "extract_submatrix",
    "random_clique_qubo",
    "random_baseline_energy",
    "normalized_gap",
    "parse_qubo_file",
    "serialize_qubo_file",
]

SEED_MASK = (1 << 64) - 1


class QuboMatrix:
    """Sparse upper-triangular QUBO with a constant offset.

    Entries are stored sorted by ``(i, j)``; exact zeros are dropped.
    Instances are treated as immutable.
    """

    def __init__(self, n: int, entries: Mapping[tuple[int, int], float] | None = None,
                 offset: float = 0.0):
        n = int(n)
        if n < 0:
            raise DimensionError(f"variable count must be non-negative, got {n}")
        offset = float(offset)
        if not math.isfinite(offset):
            raise ParameterError("offset must be finite")
        clean = {}
        for (i, j), value in (entries or {}).items():
            i, j = int(i), int(j)
            if not 0 <= i <= j < n:
                raise DimensionError(f"entry ({i}, {j}) invalid for n={n}; need i <= j < n")
            value = float(value)
            if not math.isfinite(value):
                raise ParameterError(f"non-finite coefficient at ({i}, {j})")
            if value != 0.0:
                clean[(i, j)] = value
        self._n = n
        self._entries = MappingProxyType(dict(sorted(clean.items())))
        self._offset = offset

    @property
    def n(self) -> int:
        return self._n

    @property
    def entries(self) -> Mapping[tuple[int, int], float]:
        return self._entries

    @property
    def offset(self) -> float:
        return self._offset

    def __len__(self):
        return len(self._entries)

    def __eq__(self, other):
        if not isinstance(other, QuboMatrix):
            return NotImplemented
        return (self._n == other._n and self._offset == other._offset
                and dict(self._entries) == dict(other._entries))

    def __hash__(self):
        return hash((self._n, self._offset, tuple(self._entries.items())))

    def __repr__(self):
        return f"QuboMatrix(n={self._n}, entries={len(self._entries)}, offset={self._offset!r})"

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Row indices, column indices and values, in ascending (i, j) order."""
        m = len(self._entries)
        rows = np.fromiter((i for i, _ in self._entries), dtype=np.int64, count=m)
        cols = np.fromiter((j for _, j in self._entries), dtype=np.int64, count=m)
        vals = np.fromiter(self._entries.values(), dtype=np.float64, count=m)
        return rows, cols, vals

    def to_dense(self) -> np.ndarray:
        """Upper-triangular dense copy (n x n)."""
        dense = np.zeros((self._n, self._n))
        rows, cols, vals = self.arrays
        dense[rows, cols] = vals
        return dense

    def max_abs_coefficient(self) -> float:
        _, _, vals = self.arrays
        return float(np.max(np.abs(vals))) if len(vals) else 0.0

    def with_offset(self, offset: float) -> "QuboMatrix":
        return QuboMatrix(self._n, self._entries, offset)


def energy(q: QuboMatrix, x: Sequence[int]) -> float:
    """Evaluate the QUBO at assignment ``x``.

    The terms are summed with :func:`math.fsum`, so the result is the
    correctly rounded value and does not depend on summation order.
    """
    bits = np.asarray(x, dtype=np.int8)
    if bits.ndim != 1 or len(bits) != q.n:
        raise DimensionError(f"assignment length {len(bits)} does not match n={q.n}")
    rows, cols, vals = q.arrays
    active = (bits[rows] & bits[cols]).astype(bool)
    return math.fsum(chain(vals[active].tolist(), (q.offset,)))


@dataclass(frozen=True)
class Sample:
    assignment: tuple[int, ...]
    energy: float
    occurrences: int = 1


@dataclass(frozen=True)
class SampleSet:
    """Energy-sorted, deduplicated samples.

    Build with :meth:`from_assignments` or :meth:`merge`; the plain
    constructor trusts its input.
    """

    samples: tuple[Sample, ...] = ()

    @classmethod
    def merge(cls, samples: Iterable[Sample]) -> "SampleSet":
        counts: dict[tuple[int, ...], int] = {}
        energies: dict[tuple[int, ...], float] = {}
        for s in samples:
            key = tuple(int(b) for b in s.assignment)
            counts[key] = counts.get(key, 0) + s.occurrences
            energies.setdefault(key, s.energy)
        ordered = sorted(counts, key=lambda a: (energies[a], a))
        return cls(tuple(Sample(a, energies[a], counts[a]) for a in ordered))

    @classmethod
    def from_assignments(cls, q: QuboMatrix, assignments: Iterable[Sequence[int]]) -> "SampleSet":
        """Deduplicate assignments and score each distinct one under ``q``."""
        counts: dict[tuple[int, ...], int] = {}
        for a in assignments:
            key = tuple(int(b) for b in a)
            counts[key] = counts.get(key, 0) + 1
        return cls.merge(Sample(a, energy(q, a), c) for a, c in counts.items())

    def truncate(self, k: int) -> "SampleSet":
        return SampleSet(self.samples[:k])

    @property
    def first(self) -> Sample:
        return self.samples[0]

    @property
    def best_energy(self) -> float:
        return self.samples[0].energy

    def assignments(self) -> list[tuple[int, ...]]:
        return [s.assignment for s in self.samples]

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


@dataclass(frozen=True)
class LinearConstraint:
    """Equality constraint ``sum_i coefficients[i] * x_i == rhs``."""

    coefficients: Mapping[int, float]
    rhs: float = 0.0

    def residual(self, x: Sequence[int]) -> float:
        return sum(c * x[i] for i, c in self.coefficients.items()) - self.rhs


@dataclass(frozen=True)
class VariableMap:
    """Binary encoding of bounded non-negative integers.

    ``groups[v]`` lists ``(binary_index, weight)`` pairs for integer ``v``.
    """

    groups: tuple[tuple[tuple[int, int], ...], ...]
    bits: int = field(default=1)

    @property
    def num_binary(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def max_value(self) -> int:
        return (1 << self.bits) - 1


def from_symmetric(n: int, entries: Mapping[tuple[int, int], float]) -> QuboMatrix:
    """Fold a square coefficient layout into upper-triangular form.

    ``Q'[i, j] = M[i, j] + M[j, i]`` for ``i < j``; diagonals are copied.
    """
    folded: dict[tuple[int, int], float] = {}
    for (i, j), value in entries.items():
        if not (0 <= i < n and 0 <= j < n):
            raise DimensionError(f"index ({i}, {j}) out of range for n={n}")
        key = (i, j) if i <= j else (j, i)
        folded[key] = folded.get(key, 0.0) + float(value)
    return QuboMatrix(n, folded)


def compose_penalty(objective: QuboMatrix, constraints: Iterable[LinearConstraint],
                    lam: float) -> QuboMatrix:
    """Add ``lam * (a.x - rhs)**2`` for every equality constraint.

    The square expands to ``a_i**2`` on the diagonal (since ``x_i**2 == x_i``),
    ``-2 * rhs * a_i`` on the diagonal, ``2 * a_i * a_j`` on ``(i, j)`` and
    ``rhs**2`` into the offset.
    """
    if not lam > 0:
        raise ParameterError(f"penalty weight must be positive, got {lam}")
    n = objective.n
    acc = dict(objective.entries)
    offset = objective.offset
    for con in constraints:
        terms = sorted((int(i), float(a)) for i, a in con.coefficients.items() if a != 0)
        for i, _ in terms:
            if not 0 <= i < n:
                raise DimensionError(f"constraint index {i} out of range for n={n}")
        b = float(con.rhs)
        for p, (i, ai) in enumerate(terms):
            acc[(i, i)] = acc.get((i, i), 0.0) + lam * (ai * ai - 2.0 * b * ai)
            for j, aj in terms[p + 1:]:
                key = (i, j) if i < j else (j, i)
                acc[key] = acc.get(key, 0.0) + lam * 2.0 * ai * aj
        offset += lam * b * b
    return QuboMatrix(n, acc, offset)


def encode_integers(num_vars: int, bits: int) -> VariableMap:
    if num_vars < 1 or bits < 1:
        raise ParameterError("num_vars and bits must both be >= 1")
    groups = tuple(
        tuple((v * bits + k, 1 << k) for k in range(bits))
        for v in range(num_vars)
    )
    return VariableMap(groups, bits)


def decode_integers(vmap: VariableMap, x: Sequence[int]) -> list[int]:
    if len(x) != vmap.num_binary:
        raise DimensionError(f"assignment length {len(x)} does not match {vmap.num_binary} bits")
    return [sum(w * int(x[idx]) for idx, w in group) for group in vmap.groups]


def to_minimization(objective: QuboMatrix, sense: str = "min") -> QuboMatrix:
    if sense == "min":
        return objective
    if sense != "max":
        raise ParameterError(f"sense must be 'min' or 'max', got {sense!r}")
    return QuboMatrix(objective.n, {k: -v for k, v in objective.entries.items()},
                      -objective.offset)


def fix_variables(q: QuboMatrix, fixed: Mapping[int, int]) -> tuple[QuboMatrix, list[int]]:
    """Condition ``q`` on the given bit values.

    Returns the QUBO over the free variables and ``remap`` with
    ``remap[new_index] = old_index``. Couplings to a variable fixed at 1
    fold into the free variable's diagonal; terms among fixed variables
    fold into the offset, so conditional energies are preserved exactly.
    """
    for i, b in fixed.items():
        if not 0 <= i < q.n:
            raise DimensionError(f"fixed index {i} out of range for n={q.n}")
        if b not in (0, 1):
            raise ParameterError(f"fixed value for {i} must be 0 or 1, got {b}")
    remap = [i for i in range(q.n) if i not in fixed]
    new_index = {old: new for new, old in enumerate(remap)}
    acc: dict[tuple[int, int], float] = {}
    offset_terms = [q.offset]
    for (i, j), v in q.entries.items():
        fi, fj = i in fixed, j in fixed
        if not fi and not fj:
            key = (new_index[i], new_index[j])
            acc[key] = acc.get(key, 0.0) + v
        elif fi and fj:
            if fixed[i] and fixed[j]:
                offset_terms.append(v)
        else:
            free, other = (j, i) if fi else (i, j)
            if fixed[other]:
                key = (new_index[free], new_index[free])
                acc[key] = acc.get(key, 0.0) + v
    return QuboMatrix(len(remap), acc, math.fsum(offset_terms)), remap


def extract_submatrix(q: QuboMatrix, keep: Iterable[int]) -> QuboMatrix:
    """Rows and columns of ``keep`` only, densely reindexed; offset dropped."""
    keep = sorted(set(keep))
    for i in keep:
        if not 0 <= i < q.n:
            raise DimensionError(f"index {i} out of range for n={q.n}")
    pos = {old: new for new, old in enumerate(keep)}
    sub = {(pos[i], pos[j]): v for (i, j), v in q.entries.items() if i in pos and j in pos}
    return QuboMatrix(len(keep), sub)


def random_clique_qubo(n: int, seed: int) -> QuboMatrix:
    """Fully dense instance, coefficients i.i.d. uniform on [-1, 1]."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(int(seed) & SEED_MASK)
    rows, cols = np.triu_indices(n)
    vals = rng.uniform(-1.0, 1.0, size=len(rows))
    return QuboMatrix(n, {(int(i), int(j)): float(v) for i, j, v in zip(rows, cols, vals)})


def random_baseline_energy(q: QuboMatrix, num_samples: int = 1000, seed: int = 0) -> float:
    """Mean energy of uniformly random assignments."""
    rng = np.random.default_rng(int(seed) & SEED_MASK)
    xs = rng.integers(0, 2, size=(num_samples, q.n), dtype=np.int8)
    return math.fsum(energy(q, x) for x in xs) / num_samples


def normalized_gap(e: float, e_best: float, e_baseline: float) -> float:
    """Map an energy to [0, 1]: 0 at the best-known energy, 1 at the baseline."""
    if e_baseline < e_best:
        raise ParameterError(f"baseline {e_baseline} is below best {e_best}")
    if e_baseline == e_best:
        return 0.0
    return min(1.0, max(0.0, (e - e_best) / (e_baseline - e_best)))


def _parse_number(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise QuboParseError(f"not a number: {token!r}", lineno) from None
    if not math.isfinite(value):
        raise QuboParseError(f"non-finite number: {token!r}", lineno)
    return value


def _parse_index(token: str, lineno: int) -> int:
    if not token.isdigit():
        raise QuboParseError(f"not a non-negative integer index: {token!r}", lineno)
    return int(token)


def parse_qubo_file(text: str) -> QuboMatrix:
    """Parse the ``p <n>`` / ``<i> <j> <coeff>`` / ``o <offset>`` text format."""
    n = None
    entries: dict[tuple[int, int], float] = {}
    offset = 0.0
    seen_offset = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "p":
                raise QuboParseError("expected header 'p <n>'", lineno)
            n = _parse_index(parts[1], lineno)
            continue
        if parts[0] == "p":
            raise QuboParseError("duplicate header", lineno)
        if parts[0] == "o":
            if len(parts) != 2:
                raise QuboParseError("expected 'o <offset>'", lineno)
            if seen_offset:
                raise QuboParseError("duplicate offset line", lineno)
            offset = _parse_number(parts[1], lineno)
            seen_offset = True
            continue
        if len(parts) != 3:
            raise QuboParseError("expected '<i> <j> <coeff>'", lineno)
        i, j = _parse_index(parts[0], lineno), _parse_index(parts[1], lineno)
        if i > j:
            raise QuboParseError(f"entry ({i}, {j}) is below the diagonal", lineno)
        if j >= n:
            raise QuboParseError(f"index {j} out of range for n={n}", lineno)
        if (i, j) in entries:
            raise QuboParseError(f"duplicate entry ({i}, {j})", lineno)
        entries[(i, j)] = _parse_number(parts[2], lineno)
    if n is None:
        raise QuboParseError("missing header 'p <n>'")
    return QuboMatrix(n, entries, offset)


def serialize_qubo_file(q: QuboMatrix) -> str:
    lines = [f"p {q.n}"]
    if q.offset != 0.0:
        lines.append(f"o {q.offset!r}")
    lines.extend(f"{i} {j} {v!r}" for (i, j), v in q.entries.items())
    return "\n".join(lines) + "\n"
