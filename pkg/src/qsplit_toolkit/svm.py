"""Soft-margin SVM training through a QUBO.

The dual variables are restricted to integers ``0 <= alpha_i <= 2**B - 1``,
each encoded with ``B`` bits, and the balance constraint
``sum_i alpha_i y_i = 0`` is folded in as a squared penalty. The resulting
minimization target is

    F(alpha) = sum_{i,j} c_ij alpha_i alpha_j - sum_i alpha_i,
    c_ij     = y_i y_j (K_ij / 2 + lam)

Several low-energy assignments become an ensemble that predicts by
majority vote.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, DimensionError, ParameterError
from .qsplit import QSplitConfig, qsplit_solve
from .qubo import SEED_MASK, QuboMatrix, SampleSet, VariableMap, decode_integers, encode_integers
from .samplers import SamplerParams, sampler_dispatch

__all__ = [
    "Dataset",
    "KernelSpec",
    "SvmQuboEncoding",
    "SvmModel",
    "EnsembleModel",
    "kernel_eval",
    "kernel_matrix",
    "build_svm_qubo",
    "dual_objective",
    "default_penalty",
    "compute_bias",
    "train",
    "predict",
    "f1_score",
    "synthetic_axis_dataset",
    "load_dataset_csv",
    "dump_dataset_csv",
    "load_prediction_csv",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if points.ndim != 2 or points.shape[1] < 1:
            raise DimensionError("points must be an (n, d) array with d >= 1")
        if labels.shape != (points.shape[0],):
            raise DimensionError("one label per point required")
        if not np.all(np.isin(labels, (-1, 1))):
            raise DataError("labels must be -1 or +1")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ParameterError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and not self.gamma > 0:
            raise ParameterError("rbf gamma must be positive")


def kernel_eval(spec: KernelSpec, x: Sequence[float], z: Sequence[float]) -> float:
    x, z = np.asarray(x, dtype=float), np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise DimensionError(f"kernel inputs differ in shape: {x.shape} vs {z.shape}")
    if spec.kind == "linear":
        return float(np.dot(x, z))
    diff = x - z
    return math.exp(-spec.gamma * float(np.dot(diff, diff)))


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gram matrix ``K[i, j] = k(a_i, b_j)``."""
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"feature dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    if spec.kind == "linear":
        return a @ b.T
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * (a @ b.T)
    return np.exp(-spec.gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class SvmQuboEncoding:
    bits: int
    lam: float
    vmap: VariableMap
    kernel: KernelSpec
    data: Dataset


def default_penalty(data: Dataset, kernel: KernelSpec) -> float:
    return 5.0 * float(np.max(np.abs(kernel_matrix(kernel, data.points, data.points))))


def _check_classes(data: Dataset):
    if len(data) < 2 or len(set(data.labels.tolist())) < 2:
        raise DataError("training data needs at least one example of each class")


def build_svm_qubo(data: Dataset, kernel: KernelSpec | None = None, bits: int = 3,
                   lam: float | None = None) -> tuple[QuboMatrix, SvmQuboEncoding]:
    kernel = kernel or KernelSpec()
    _check_classes(data)
    if bits < 1:
        raise ParameterError("bits must be >= 1")
    lam = default_penalty(data, kernel) if lam is None else float(lam)
    if not lam > 0:
        raise ParameterError("penalty weight must be positive")
    n = len(data)
    y = data.labels.astype(float)
    c = np.outer(y, y) * (0.5 * kernel_matrix(kernel, data.points, data.points) + lam)
    vmap = encode_integers(n, bits)
    weights = [1 << k for k in range(bits)]
    entries = {}
    for i in range(n):
        for k in range(bits):
            u = i * bits + k
            entries[(u, u)] = c[i, i] * weights[k] * weights[k] - weights[k]
            for l in range(k + 1, bits):
                entries[(u, i * bits + l)] = 2.0 * c[i, i] * weights[k] * weights[l]
            for j in range(i + 1, n):
                for l in range(bits):
                    entries[(u, j * bits + l)] = 2.0 * c[i, j] * weights[k] * weights[l]
    return QuboMatrix(n * bits, entries), SvmQuboEncoding(bits, lam, vmap, kernel, data)


def dual_objective(alphas: Sequence[int], data: Dataset, kernel: KernelSpec, lam: float) -> float:
    """Penalized dual ``F(alpha)``, evaluated directly (no encoding)."""
    a = np.asarray(alphas, dtype=float)
    ay = a * data.labels
    gram = kernel_matrix(kernel, data.points, data.points)
    return float(0.5 * ay @ gram @ ay + lam * ay.sum() ** 2 - a.sum())


def compute_bias(alphas: Sequence[int], data: Dataset, kernel: KernelSpec, bits: int) -> float:
    """Mean margin residual over free support vectors.

    Falls back to all support vectors when none is strictly inside the box,
    and to 0 when every alpha is zero.
    """
    a = np.asarray(alphas, dtype=float)
    ceiling = (1 << bits) - 1
    support = np.flatnonzero((a > 0) & (a < ceiling))
    if len(support) == 0:
        support = np.flatnonzero(a > 0)
    if len(support) == 0:
        return 0.0
    gram = kernel_matrix(kernel, data.points[support], data.points)
    residual = data.labels[support] - gram @ (a * data.labels)
    return float(residual.mean())


@dataclass(frozen=True)
class SvmModel:
    alphas: tuple[int, ...]
    bias: float
    kernel: KernelSpec
    data: Dataset
    bits: int

    def decision(self, x: np.ndarray) -> np.ndarray:
        """Decision values for one point (shape (d,)) or many (shape (m, d))."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if pts.shape[1] != self.data.dim:
            raise DimensionError(f"expected {self.data.dim} features, got {pts.shape[1]}")
        coef = np.asarray(self.alphas, dtype=float) * self.data.labels
        return kernel_matrix(self.kernel, pts, self.data.points) @ coef + self.bias

    def predict(self, x) -> np.ndarray:
        return np.where(self.decision(x) >= 0, 1, -1)


@dataclass(frozen=True)
class EnsembleModel:
    members: tuple[SvmModel, ...]
    energies: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.members:
            raise ParameterError("an ensemble needs at least one member")


def predict(model: EnsembleModel | SvmModel, x) -> np.ndarray | int:
    """Majority vote; ties go to the side with larger total |decision|, then +1.

    Returns an int for a single point and an array for a batch.
    """
    if isinstance(model, SvmModel):
        model = EnsembleModel((model,))
    single = np.asarray(x).ndim == 1
    values = np.stack([m.decision(x) for m in model.members])
    votes = np.where(values >= 0, 1, -1)
    tally = votes.sum(0)
    pos_weight = np.where(votes > 0, np.abs(values), 0.0).sum(0)
    neg_weight = np.where(votes < 0, np.abs(values), 0.0).sum(0)
    out = np.where(tally > 0, 1, np.where(tally < 0, -1, np.where(neg_weight > pos_weight, -1, 1)))
    return int(out[0]) if single else out


def f1_score(predicted: Sequence[int], truth: Sequence[int]) -> float:
    """F1 of the positive class; 0 when precision + recall has no support."""
    p, t = np.asarray(predicted), np.asarray(truth)
    if p.shape != t.shape:
        raise DimensionError("prediction and truth lengths differ")
    tp = int(np.sum((p == 1) & (t == 1)))
    fp = int(np.sum((p == 1) & (t != 1)))
    fn = int(np.sum((p != 1) & (t == 1)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def _solve(q: QuboMatrix, method: str, params: SamplerParams | None,
           qsplit: QSplitConfig | None) -> SampleSet:
    if method == "qsplit":
        return qsplit_solve(q, qsplit or QSplitConfig()).best
    return sampler_dispatch(method, q, params).samples


def train(data: Dataset, kernel: KernelSpec | None = None, bits: int = 3,
          lam: float | None = None, method: str = "sa", params: SamplerParams | None = None,
          qsplit: QSplitConfig | None = None, ensemble: int = 3) -> EnsembleModel:
    """Build the QUBO, solve it, and turn the best ``ensemble`` samples into models."""
    if ensemble < 1:
        raise ParameterError("ensemble size must be >= 1")
    kernel = kernel or KernelSpec()
    q, enc = build_svm_qubo(data, kernel, bits, lam)
    samples = _solve(q, method, params, qsplit)
    members, energies = [], []
    for s in samples.samples[:ensemble]:
        alphas = tuple(decode_integers(enc.vmap, s.assignment))
        members.append(SvmModel(alphas, compute_bias(alphas, data, kernel, bits), kernel, data, bits))
        energies.append(s.energy)
    return EnsembleModel(tuple(members), tuple(energies))


def synthetic_axis_dataset(n: int, margin: float = 0.3, noise_flip: float = 0.0,
                           seed: int = 0) -> Dataset:
    """Balanced points on the x-axis: positives in [margin, 1], negatives in [-1, -margin]."""
    if n < 2 or n % 2:
        raise ParameterError(f"n must be a positive even number, got {n}")
    if not 0 < margin < 1:
        raise ParameterError("margin must lie in (0, 1)")
    if not 0 <= noise_flip < 0.5:
        raise ParameterError("noise_flip must lie in [0, 0.5)")
    rng = np.random.default_rng(int(seed) & SEED_MASK)
    half = n // 2
    xs = np.concatenate([rng.uniform(margin, 1.0, half), rng.uniform(-1.0, -margin, half)])
    labels = np.concatenate([np.ones(half, dtype=np.int64), -np.ones(half, dtype=np.int64)])
    flips = int(math.floor(noise_flip * n))
    if flips:
        idx = rng.choice(n, size=flips, replace=False)
        labels[idx] = -labels[idx]
    return Dataset(np.column_stack([xs, np.zeros(n)]), labels)


def _parse_label(token: str) -> int:
    token = token.strip()
    if token in ("1", "+1"):
        return 1
    if token == "-1":
        return -1
    raise DataError(f"invalid label {token!r}")


def load_dataset_csv(text: str) -> Dataset:
    """``label,f1,...,fd`` rows; an optional non-numeric header and ``#`` comments are skipped."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise DataError("dataset is empty")
    width = len(rows[0])
    if width < 2 or any(len(r) != width for r in rows):
        raise DimensionError("every row needs a label and the same number of features")
    try:
        labels = [_parse_label(r[0]) for r in rows]
        points = [[float(v) for v in r[1:]] for r in rows]
    except ValueError as exc:
        raise DataError(str(exc)) from None
    return Dataset(np.array(points), np.array(labels))


def load_prediction_csv(text: str, dim: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Rows of ``dim`` features, optionally preceded by a label column.

    Returns the points and the labels (``None`` when the rows carry none).
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    labelled = None
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            labelled = rows[0][0].strip().lower() == "label"
            rows = rows[1:]
    if not rows:
        raise DataError("no rows to predict")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DimensionError("rows have differing lengths")
    if labelled and width != dim + 1:
        raise DimensionError(f"model expects {dim} features, rows have {width - 1}")
    if width == dim + 1:
        data = load_dataset_csv(text)
        return data.points, data.labels
    if width == dim:
        try:
            return np.array([[float(v) for v in r] for r in rows]), None
        except ValueError as exc:
            raise DataError(str(exc)) from None
    raise DimensionError(f"model expects {dim} features, rows have {width} columns")


def dump_dataset_csv(data: Dataset) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["label"] + [f"f{i + 1}" for i in range(data.dim)])
    for label, row in zip(data.labels.tolist(), data.points.tolist()):
        writer.writerow([f"{label:+d}"] + [repr(v) for v in row])
    return out.getvalue()


def save_model(model: EnsembleModel) -> str:
    first = model.members[0]
    doc = {
        "bits": first.bits,
        "kernel": first.kernel.kind,
        "gamma": first.kernel.gamma,
        "members": [{"alphas": list(m.alphas), "bias": m.bias} for m in model.members],
        "points": first.data.points.tolist(),
        "labels": first.data.labels.tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_model(text: str) -> EnsembleModel:
    doc = json.loads(text)
    try:
        kernel = KernelSpec(doc["kernel"], float(doc["gamma"]))
        data = Dataset(np.array(doc["points"], dtype=float), np.array(doc["labels"]))
        bits = int(doc["bits"])
        members = tuple(
            SvmModel(tuple(int(a) for a in m["alphas"]), float(m["bias"]), kernel, data, bits)
            for m in doc["members"]
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed model file: {exc}") from None
    for m in members:
        if len(m.alphas) != len(data):
            raise DimensionError("alpha count does not match training points")
    return EnsembleModel(members)
