"""Discovery bounds over ranked martingale values.

Given the descending values S^1 >= ... >= S^K and a symmetric merging
function F, every bound here is a minimum of F over a family of index sets,
evaluated through one shared suffix-scan kernel: a matrix cell (r, j) scans
the base {j+1..r} and the base extended by each whole tail {k..K}.

  * discovery_matrix: the lower-triangular D[r, j] of those cell minima;
    row r read at level alpha as {j : D[r, j] < alpha} yields a confidence
    region for the number of justified discoveries among the top r.
  * diagonal_row: evidence that every one of the top-r discoveries is
    justified; the running minimum of row r through column r-1 (equivalently
    the regularized matrix diagonal), which equals the true minimum of F
    over every index set meeting the top-r set.
  * subdiagonal_row: the same allowing one exception; the running minimum
    through column r-2.

``brute_force_bound`` evaluates the unrestricted minima over all 2^K index
sets and certifies the scans at desk scale.

Matrix and series containers store log10 floats (the serialization scale);
all scan arithmetic happens in natural logs and is converted once on storage.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError
from .logvalue import LN10, LogValue, log_add
from .martingales import RankedValues
from .merging import (
    MergeSpec,
    as_log_array,
    log_comb,
    mixture_from_logs,
    suffix_esp_levels,
)

BRUTE_FORCE_MAX = 16

CONSTRAINT_INTERSECTS_TOP_R = "intersects-top-r"
CONSTRAINT_GE2_IN_TOP_R = "ge2-in-top-r"
CONSTRAINT_EXACTLY_J_MISSING = "exactly-j-missing-from-top-r"


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class DiagonalSeries:
    """Per-step values of one tracked row of the diagonal or subdiagonal."""

    row: int
    kind: str  # "diagonal" | "subdiagonal"
    log10_values: np.ndarray

    def __len__(self) -> int:
        return int(self.log10_values.size)

    def __getitem__(self, i: int) -> LogValue:
        return LogValue.from_log10(float(self.log10_values[i]))

    def final(self) -> LogValue:
        if not len(self):
            raise DomainError("empty series has no final value")
        return self[-1]


@dataclass(frozen=True)
class DiscoveryMatrix:
    """Lower-triangular bounds D[r, j], rows r = 1..K, columns j = 0..r.

    ``rows[r-1]`` holds the log10 entries of row r.  After ``regularize``
    each row is non-increasing in j, so row slices read as upper intervals.
    """

    rows: tuple[np.ndarray, ...]
    regularized: bool = False

    def __post_init__(self) -> None:
        for i, row in enumerate(self.rows):
            if row.size != i + 2:
                raise DomainError(f"row {i + 1} must have {i + 2} entries, got {row.size}")

    @property
    def k(self) -> int:
        return len(self.rows)

    def _check(self, r: int, j: int | None = None) -> None:
        if not 1 <= r <= self.k:
            raise DomainError(f"row {r} outside 1..{self.k}")
        if j is not None and not 0 <= j <= r:
            raise DomainError(f"column {j} outside 0..{r}")

    def log10_entry(self, r: int, j: int) -> float:
        self._check(r, j)
        return float(self.rows[r - 1][j])

    def entry(self, r: int, j: int) -> LogValue:
        return LogValue.from_log10(self.log10_entry(r, j))

    def row_log10(self, r: int) -> np.ndarray:
        self._check(r)
        return self.rows[r - 1].copy()


@dataclass(frozen=True)
class ConfidenceRegion:
    """{ j : D[r, j] < alpha } on a regularized row, plus its smallest member.

    On a non-increasing row the members form the upper interval
    {lower_bound, ..., r}; lower_bound is None when no column qualifies.
    """

    r: int
    alpha: float
    members: frozenset[int]
    lower_bound: int | None


# ---------------------------------------------------------------------------
# the shared suffix scan


@dataclass(frozen=True)
class _SpecParts:
    """Precomputed weight machinery for one merge spec."""

    weights: tuple[float, ...]
    log_weights: tuple[float, ...]
    tail: np.ndarray  # tail[m] = sum of weights at degrees >= m; tail[len] = 0
    log_tail: np.ndarray
    active: tuple[int, ...]  # degrees with positive weight
    top: int  # highest degree with positive weight


@lru_cache(maxsize=64)
def _parts(spec: MergeSpec) -> _SpecParts:
    weights = spec.weight_vector()
    logw = tuple(math.log(w) if w > 0.0 else -math.inf for w in weights)
    tail = np.zeros(len(weights) + 1)
    tail[:-1] = np.cumsum(np.asarray(weights)[::-1])[::-1]
    with np.errstate(divide="ignore"):
        log_tail = np.log(tail)
    tail.setflags(write=False)
    log_tail.setflags(write=False)
    return _SpecParts(
        weights=weights,
        log_weights=logw,
        tail=tail,
        log_tail=log_tail,
        active=tuple(d for d, w in enumerate(weights) if w > 0.0),
        top=spec.max_degree,
    )


@lru_cache(maxsize=256)
def _log_comb_row(deg: int, m_hi: int) -> np.ndarray:
    """log C(m, deg) for m = 0..m_hi; -inf below the diagonal (never read)."""
    out = np.full(m_hi + 1, -np.inf)
    for m in range(deg, m_hi + 1):
        out[m] = log_comb(m, deg)
    out.setflags(write=False)
    return out


def _merge_scalar(levels: np.ndarray, m: int, logsum: float, parts: _SpecParts) -> float:
    """Mixture value on one index set given its log esp levels and arity m."""
    acc = -math.inf
    tail_w = 0.0
    for deg, w in enumerate(parts.weights):
        if w <= 0.0:
            continue
        if deg < m:
            acc = log_add(acc, parts.log_weights[deg] + float(levels[deg]) - log_comb(m, deg))
        else:
            tail_w += w
    if tail_w > 0.0:
        acc = log_add(acc, math.log(tail_w) + logsum)
    return acc


def suffix_logsums(logs: np.ndarray) -> np.ndarray:
    """Log of the product over each suffix logs[i:]; +inf columns for +inf
    entries (which must lead, descending order)."""
    k = len(logs)
    out = np.zeros(k + 1)
    n_inf = int(np.count_nonzero(np.isposinf(logs)))
    tail = logs[n_inf:]
    if tail.size:
        out[n_inf:k] = np.cumsum(tail[::-1])[::-1]
    out[:n_inf] = np.inf
    return out


def _scan_min(
    sorted_logs: np.ndarray,
    suffix_levels: np.ndarray,
    suffix_sums: np.ndarray,
    base_levels: np.ndarray,
    base_arity: int,
    base_sum: float,
    r: int,
    parts: _SpecParts,
) -> float:
    """min of F(base) and F(base + {k..K}) over k = r+1..K, in natural log.

    ``base_levels`` are the log esp levels of the base set (degree 0..top),
    ``base_sum`` the log of its full product.  An empty base contributes the
    conventional F() = 1.
    """
    k = len(sorted_logs)
    if parts.top >= 1 and base_arity >= 1 and not (base_sum < math.inf):
        return math.inf  # base holds a +inf value: every candidate merges to +inf
    if base_arity == 0:
        best = 0.0
    else:
        best = _merge_scalar(base_levels, base_arity, base_sum, parts)
    n_cand = k - r
    if n_cand <= 0:
        return best

    values = _extension_values(
        sorted_logs, suffix_levels, suffix_sums, base_levels, base_arity, base_sum, r, parts
    )
    return min(best, float(values.min()))


def _extension_values(
    sorted_logs: np.ndarray,
    suffix_levels: np.ndarray,
    suffix_sums: np.ndarray,
    base_levels: np.ndarray,
    base_arity: int,
    base_sum: float,
    r: int,
    parts: _SpecParts,
) -> np.ndarray:
    """F(base + {k..K}) for k = r+1..K as an array (requires r < K).

    Candidate i extends the base by {r+1+i .. K}; its arity m_hi - i falls
    from m_hi = base_arity + (K - r) down to base_arity + 1, so every
    arity-dependent region below is a contiguous slice.
    """
    k = len(sorted_logs)
    n_cand = k - r
    m_hi = base_arity + n_cand
    values = np.full(n_cand, -np.inf)
    for deg in parts.active:
        cut = min(n_cand, m_hi - deg)  # candidates with arity > deg
        if cut <= 0:
            continue
        cols = slice(r, r + cut)
        acc: np.ndarray | None = None
        for a in range(0, min(deg, base_arity) + 1):
            term = float(base_levels[a]) + suffix_levels[deg - a, cols]
            acc = term if acc is None else np.logaddexp(acc, term)
        lc = _log_comb_row(deg, m_hi)
        term = (parts.log_weights[deg] + acc) - lc[m_hi:m_hi - cut:-1]
        np.logaddexp(values[:cut], term, out=values[:cut])
    start = max(0, m_hi - parts.top)  # candidates with arity <= top collapse
    if start < n_cand:
        log_tail = parts.log_tail[m_hi - start:base_arity:-1]
        term = log_tail + (base_sum + suffix_sums[r + start:k])
        np.logaddexp(values[start:], term, out=values[start:])
    return values


_EMPTY_BASE = np.array([0.0])
_EMPTY_BASE.setflags(write=False)


def suffix_merge_values(
    sorted_logs: np.ndarray,
    suffix_levels: np.ndarray,
    suffix_sums: np.ndarray,
    parts: _SpecParts,
) -> np.ndarray:
    """F({j..K}) for j = 1..K (natural log), one vectorized pass."""
    return _extension_values(
        sorted_logs, suffix_levels, suffix_sums, _EMPTY_BASE, 0, 0.0, 0, parts
    )


def _cell(
    sorted_logs: np.ndarray,
    suffix_levels: np.ndarray,
    suffix_sums: np.ndarray,
    prefix_levels: np.ndarray,
    prefix_sums: np.ndarray,
    r: int,
    j: int,
    parts: _SpecParts,
) -> float:
    """One matrix cell: base {j+1..r} plus tail extensions."""
    return _scan_min(
        sorted_logs,
        suffix_levels,
        suffix_sums,
        prefix_levels[:, j],
        r - j,
        float(prefix_sums[j]),
        r,
        parts,
    )


def _row_inputs(sorted_logs: np.ndarray, r: int, parts: _SpecParts):
    """Suffix machinery shared by the single-row entry points."""
    prefix = sorted_logs[:r]
    return (
        suffix_esp_levels(sorted_logs, parts.top),
        suffix_logsums(sorted_logs),
        suffix_esp_levels(prefix, min(parts.top, r)),
        suffix_logsums(prefix),
    )


def small_base_cell(
    sorted_logs: np.ndarray,
    suffix_levels: np.ndarray,
    suffix_sums: np.ndarray,
    r: int,
    j: int,
    parts: _SpecParts,
) -> float:
    """A matrix cell whose base {j+1..r} has one or two elements.

    Builds the base levels directly instead of accumulating over the whole
    prefix; bit-identical to the general path (the accumulate's first two
    outputs are exactly these expressions) and cheap enough for per-step
    tracking.
    """
    arity = r - j
    s_last = float(sorted_logs[r - 1])
    if arity == 1:
        levels = np.array([0.0, s_last, -np.inf])
        base_sum = s_last
    elif arity == 2:
        s_prev = float(sorted_logs[r - 2])
        base_sum = s_prev + s_last
        levels = np.array([0.0, float(np.logaddexp(s_last, s_prev)), base_sum])
    else:
        raise DomainError(f"small-base scan needs arity 1 or 2, got {arity}")
    return _scan_min(
        sorted_logs, suffix_levels, suffix_sums, levels, arity, base_sum, r, parts
    )


def _check_rank(ranked: RankedValues, r: int) -> None:
    if not 1 <= r <= ranked.k:
        raise DomainError(f"row {r} outside 1..{ranked.k}")


def _row_min(ranked: RankedValues, r: int, j_hi: int, spec: MergeSpec) -> float:
    """min over columns 0..j_hi of the raw matrix cells of row r.

    This running-minimum reading makes the bound the true minimum of F over
    every qualifying index set, not just the narrower family the plain scan
    reaches: by an exchange argument any qualifying set is dominated by
    either a single-anchor candidate or a whole-tail suffix {j..K}, and both
    families are covered by the row's cells.  It also makes the value agree
    bit for bit with the regularized matrix cell (r, j_hi).
    """
    parts = _parts(spec)
    suffix_levels, suffix_sums, prefix_levels, prefix_sums = _row_inputs(
        ranked.sorted_logs, r, parts
    )
    return min(
        _cell(ranked.sorted_logs, suffix_levels, suffix_sums,
              prefix_levels, prefix_sums, r, j, parts)
        for j in range(j_hi + 1)
    )


def diagonal_row(ranked: RankedValues, r: int, spec: MergeSpec) -> LogValue:
    """Evidence that every one of the top-r discoveries is justified.

    The minimum of F over all index sets meeting the top-r set, equal to the
    regularized matrix entry at (r, r-1).
    """
    _check_rank(ranked, r)
    return LogValue(_row_min(ranked, r, r - 1, spec))


def subdiagonal_row(ranked: RankedValues, r: int, spec: MergeSpec) -> LogValue:
    """The same bound allowing one exception among the top-r discoveries.

    The minimum of F over all index sets holding at least two of the top r
    (at least one when r = 1), equal to the regularized matrix entry at
    (r, r-2); degree-2 merges fall back to the mean on singleton sets.
    """
    _check_rank(ranked, r)
    return LogValue(_row_min(ranked, r, max(r - 2, 0), spec))


def discovery_matrix(ranked: RankedValues, spec: MergeSpec) -> DiscoveryMatrix:
    """The full lower-triangular matrix of suffix-scan minima (unregularized).

    Cost is O(K^3) vectorized scans for fixed small-degree specs; K = 500
    stays comfortable on a laptop.
    """
    logs = ranked.sorted_logs
    parts = _parts(spec)
    suffix_levels = suffix_esp_levels(logs, parts.top)
    suffix_sums = suffix_logsums(logs)
    rows = []
    for r in range(1, ranked.k + 1):
        prefix = logs[:r]
        prefix_levels = suffix_esp_levels(prefix, min(parts.top, r))
        prefix_sums = suffix_logsums(prefix)
        row = np.empty(r + 1)
        for j in range(r + 1):
            row[j] = _cell(
                logs, suffix_levels, suffix_sums, prefix_levels, prefix_sums, r, j, parts
            )
        row /= LN10
        row.setflags(write=False)
        rows.append(row)
    return DiscoveryMatrix(rows=tuple(rows), regularized=False)


def regularize(m: DiscoveryMatrix) -> DiscoveryMatrix:
    """Replace each row by its running minimum in j (idempotent)."""
    rows = []
    for row in m.rows:
        reg = np.minimum.accumulate(row)
        reg.setflags(write=False)
        rows.append(reg)
    return DiscoveryMatrix(rows=tuple(rows), regularized=True)


def confidence_region(m: DiscoveryMatrix, r: int, alpha: float) -> ConfidenceRegion:
    """Columns of row r lying strictly below alpha, on a regularized matrix."""
    if not m.regularized:
        raise DomainError("confidence_region requires a regularized matrix")
    if math.isnan(alpha) or alpha <= 0.0:
        raise DomainError(f"significance level must be positive, got {alpha!r}")
    m._check(r)
    alpha_log10 = math.log10(alpha) if alpha != math.inf else math.inf
    row = m.rows[r - 1]
    members = frozenset(int(j) for j in np.flatnonzero(row < alpha_log10))
    lower = min(members) if members else None
    return ConfidenceRegion(r=r, alpha=alpha, members=members, lower_bound=lower)


# ---------------------------------------------------------------------------
# brute-force oracle


@lru_cache(maxsize=32)
def _subset_table(logs: tuple[float, ...], spec: MergeSpec) -> np.ndarray:
    """F over every subset of the (descending) values, indexed by bitmask.

    Bit i set means rank i+1 belongs to the subset.  The empty set gets the
    conventional value 1.  Each subset is evaluated through the public
    mixture semantics, keeping this path independent of the suffix scans it
    certifies.
    """
    k = len(logs)
    arr = np.asarray(logs)
    out = np.empty(1 << k)
    out[0] = 0.0
    for mask in range(1, 1 << k):
        idx = [i for i in range(k) if mask >> i & 1]
        out[mask] = mixture_from_logs(spec, arr[idx])
    out.setflags(write=False)
    return out


def brute_force_bound(
    values: Sequence[LogValue],
    constraint: str,
    r: int,
    spec: MergeSpec,
    j: int | None = None,
) -> LogValue:
    """Exact minimum of F over every qualifying index set (K <= 16).

    Constraints, over rank positions of the descending values:
      * ``intersects-top-r``: the set meets {1..r};
      * ``ge2-in-top-r``: the set holds at least two of {1..r};
      * ``exactly-j-missing-from-top-r``: exactly j of {1..r} are absent
        (requires ``j``; the empty set qualifies at j = r and counts as 1).

    Returns +inf when no set qualifies (the empty infimum).
    """
    logs = as_log_array(values)
    k = len(logs)
    if k > BRUTE_FORCE_MAX:
        raise DomainError(f"brute force capped at {BRUTE_FORCE_MAX} values, got {k}")
    if not 1 <= r <= k:
        raise DomainError(f"row {r} outside 1..{k}")
    order = np.argsort(-logs, kind="stable")
    table = _subset_table(tuple(float(x) for x in logs[order]), spec)
    masks = np.arange(1 << k, dtype=np.uint32)
    top = np.uint32((1 << r) - 1)
    in_top = np.bitwise_count(masks & top)
    if constraint == CONSTRAINT_INTERSECTS_TOP_R:
        qualify = in_top >= 1
    elif constraint == CONSTRAINT_GE2_IN_TOP_R:
        qualify = in_top >= 2
    elif constraint == CONSTRAINT_EXACTLY_J_MISSING:
        if j is None or not 0 <= j <= r:
            raise DomainError(f"need a column j in 0..{r}, got {j!r}")
        qualify = in_top == r - j
    else:
        raise DomainError(f"unknown constraint {constraint!r}")
    if not qualify.any():
        return LogValue(math.inf)
    return LogValue(float(table[qualify].min()))


# ---------------------------------------------------------------------------
# color buckets


class ColorBucket(enum.Enum):
    GREEN = "green"
    YELLOW = "yellow"
    ORANGE = "orange"
    RED = "red"
    DARKRED = "darkred"
    BLACK = "black"


# Half-open buckets; each boundary belongs to the bucket above it.
_BUCKET_EDGES = (
    (math.log(1e20), ColorBucket.BLACK),
    (math.log(1e14), ColorBucket.DARKRED),
    (math.log(1e8), ColorBucket.RED),
    (math.log(100.0), ColorBucket.ORANGE),
    (math.log(10.0), ColorBucket.YELLOW),
)


def colorize(v: LogValue) -> ColorBucket:
    """Evidence bucket of a merged value: [0,10) green, [10,100) yellow,
    [100,1e8) orange, [1e8,1e14) red, [1e14,1e20) dark red, [1e20,inf] black."""
    for edge, bucket in _BUCKET_EDGES:
        if v.log_e >= edge:
            return bucket
    return ColorBucket.GREEN
