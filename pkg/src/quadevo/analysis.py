"""Two-group comparison of evolved populations.

Vectors are collapsed onto the Fisher discriminant, and the projections
are compared with a two-sided Mann-Whitney U test and Cliff's delta.
Several comparisons are adjusted together with Holm's step-down method.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .genome import DomainError

LDA_EPS = 1e-9
EXACT_MAX_N = 8  # exact null distribution when both groups are at most this size


@dataclass(frozen=True)
class GroupSample:
    label: str
    vectors: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def lda_project(a: GroupSample, b: GroupSample) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fisher discriminant direction and both groups projected onto it.

    Returns ``(w, proj_a, proj_b)`` with ``w`` unit length. The within-class
    scatter gets ``LDA_EPS * I`` added when it is singular. The sign of ``w``
    is fixed so that its largest-magnitude component is positive.
    """
    if a.n < 2 or b.n < 2:
        raise DomainError("each group needs at least 2 samples")
    if a.dim != b.dim:
        raise DomainError(f"dimension mismatch: {a.dim} vs {b.dim}")
    mu_a, mu_b = a.vectors.mean(axis=0), b.vectors.mean(axis=0)
    da, db = a.vectors - mu_a, b.vectors - mu_b
    Sw = da.T @ da + db.T @ db
    if np.linalg.matrix_rank(Sw) < a.dim:
        Sw = Sw + LDA_EPS * np.eye(a.dim)
    w = np.linalg.solve(Sw, mu_a - mu_b)
    norm = np.linalg.norm(w)
    if norm == 0.0 or not np.isfinite(norm):
        # no between-class separation: every direction is equally good
        w = np.zeros(a.dim)
        w[0] = 1.0
    else:
        w = w / norm
    if w[np.argmax(np.abs(w))] < 0:
        w = -w
    return w, a.vectors @ w, b.vectors @ w


def midranks(values) -> np.ndarray:
    """1-based ranks with tied values sharing their average rank."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    xs = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _subset_sum_counts(doubled: Sequence[int], k: int) -> dict[int, int]:
    """Number of size-``k`` subsets of ``doubled`` with each possible sum."""
    dp: list[dict[int, int]] = [dict() for _ in range(k + 1)]
    dp[0][0] = 1
    for v in doubled:
        for size in range(k - 1, -1, -1):
            for s, c in dp[size].items():
                dp[size + 1][s + v] = dp[size + 1].get(s + v, 0) + c
    return dp[k]


@dataclass(frozen=True)
class MannWhitneyResult:
    U: float
    p: float
    method: str  # "exact" or "normal"

    def __iter__(self):
        return iter((self.U, self.p))


def mann_whitney_u(x, y) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test.

    ``U`` is the smaller of the two group statistics. The p-value is exact
    (full permutation distribution of the midrank sum) when both samples
    have at most ``EXACT_MAX_N`` values, otherwise it uses the
    tie-corrected normal approximation with continuity correction.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    nx, ny = len(x), len(y)
    if nx == 0 or ny == 0:
        raise DomainError("both samples must be non-empty")
    n = nx + ny
    r = midranks(np.concatenate([x, y]))
    rx = r[:nx].sum()
    ux = rx - nx * (nx + 1) / 2.0
    u = min(ux, nx * ny - ux)

    if max(nx, ny) <= EXACT_MAX_N:
        # twice the rank sum is an integer, so the distribution is exact
        doubled = [int(round(2 * v)) for v in r]
        centre2 = nx * (n + 1)  # twice the null mean of the rank sum
        obs = abs(int(round(2 * rx)) - centre2)
        counts = _subset_sum_counts(doubled, nx)
        extreme = sum(c for s, c in counts.items() if abs(s - centre2) >= obs)
        return MannWhitneyResult(float(u), min(1.0, extreme / comb(n, nx)), "exact")

    _, tie_sizes = np.unique(np.concatenate([x, y]), return_counts=True)
    tie_term = float(np.sum(tie_sizes**3 - tie_sizes)) / (n * (n - 1))
    var = nx * ny / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return MannWhitneyResult(float(u), 1.0, "normal")
    z = (abs(ux - nx * ny / 2.0) - 0.5) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0))
    return MannWhitneyResult(float(u), min(1.0, p), "normal")


def cliffs_delta(x, y) -> float:
    """(#{x > y} - #{x < y}) / (nx * ny) over all cross pairs."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if len(x) == 0 or len(y) == 0:
        raise DomainError("both samples must be non-empty")
    return float(np.sign(x[:, None] - y[None, :]).sum()) / (len(x) * len(y))


def holm_correction(pvalues) -> np.ndarray:
    """Holm step-down adjusted p-values, in the input order."""
    p = np.asarray(pvalues, dtype=float).ravel()
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise DomainError("p-values must lie in [0, 1]")
    m = len(p)
    order = np.argsort(p, kind="mergesort")
    adj = np.minimum(1.0, (m - np.arange(m)) * p[order])
    adj = np.maximum.accumulate(adj)
    out = np.empty(m)
    out[order] = adj
    return out


@dataclass(frozen=True)
class Comparison:
    name: str
    U: float
    p_raw: float
    p_holm: float
    cliffs_delta: float
    lda_direction: list[float]
    method: str
    n_a: int
    n_b: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "U": self.U,
            "p_raw": self.p_raw,
            "p_holm": self.p_holm,
            "cliffs_delta": self.cliffs_delta,
            "lda_direction": self.lda_direction,
            "method": self.method,
            "n_a": self.n_a,
            "n_b": self.n_b,
        }


def compare(named_pairs: dict[str, tuple[GroupSample, GroupSample]]) -> list[Comparison]:
    """LDA, Mann-Whitney and Cliff's delta per pair; Holm across all pairs."""
    raw = []
    for name, (a, b) in named_pairs.items():
        w, pa, pb = lda_project(a, b)
        mw = mann_whitney_u(pa, pb)
        raw.append((name, mw, cliffs_delta(pa, pb), w, a.n, b.n))
    adjusted = holm_correction([mw.p for _, mw, *_ in raw]) if raw else []
    return [
        Comparison(name, mw.U, mw.p, float(ph), d, [float(v) for v in w], mw.method, na, nb)
        for (name, mw, d, w, na, nb), ph in zip(raw, adjusted)
    ]
