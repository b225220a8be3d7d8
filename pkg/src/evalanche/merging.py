"""Merging functions for uncorrelated test-martingale values.

The symmetric merging functions are the normalized elementary symmetric
polynomials (NESPs)

    U_n(s_1, ..., s_K) = elementary_symmetric_n(s) / binomial(K, n)

and their convex mixtures (with U_0 understood to be the constant 1).  The
production path, ``nesp_log``, runs the forward DP recurrence

    e_j <- e_j + s_i * e_{j-1}

entirely in the log domain; every term is nonnegative, so there is no
cancellation and values from 1e-300 to 1e+300 and beyond are handled without
loss of structure.  ``nesp_powersum`` and ``nesp_bell`` are linear-scale
power-sum paths kept as independent cross-check oracles; they are accurate
only on well-conditioned inputs (one dominating input cancels catastrophically
in p_1^2 - p_2 and friends).

Arity rule: a merge of degree n applied to m < n arguments evaluates
U_min(n, m), extending the degree-2-on-one-argument fallback to every arity
so the merge family is total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, NumericalError
from .logvalue import INFINITE, LogValue, ZERO, log_add

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class MergeSpec:
    """A symmetric merging function: one NESP or a convex mixture of NESPs.

    ``kind`` is "nesp" (with ``n`` >= 1) or "mixture" (with ``weights[i]``
    the coefficient of U_i, summing to 1).
    """

    kind: str
    n: int | None = None
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == "nesp":
            if self.n is None or self.n < 1:
                raise DomainError(f"nesp degree must be >= 1, got {self.n!r}")
            if self.weights is not None:
                raise DomainError("nesp spec takes no weights")
        elif self.kind == "mixture":
            if self.n is not None:
                raise DomainError("mixture spec takes no single degree")
            w = self.weights
            if not w:
                raise DomainError("mixture needs at least one weight")
            if any(math.isnan(x) or x < 0.0 for x in w):
                raise DomainError(f"mixture weights must be nonnegative, got {w}")
            if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
                raise DomainError(f"mixture weights must sum to 1, got {math.fsum(w)!r}")
        else:
            raise DomainError(f"unknown merge kind {self.kind!r}")

    @classmethod
    def nesp(cls, n: int) -> "MergeSpec":
        return cls(kind="nesp", n=n)

    @classmethod
    def mixture(cls, weights: Iterable[float]) -> "MergeSpec":
        return cls(kind="mixture", weights=tuple(float(w) for w in weights))

    @property
    def max_degree(self) -> int:
        """Highest NESP degree with positive weight."""
        if self.kind == "nesp":
            return self.n  # type: ignore[return-value]
        top = 0
        for i, w in enumerate(self.weights):  # type: ignore[union-attr]
            if w > 0.0:
                top = i
        return top

    @property
    def has_positive_degree(self) -> bool:
        """True when some weight sits at degree >= 1 (infinity propagates)."""
        return self.max_degree >= 1

    def weight_vector(self) -> tuple[float, ...]:
        """Weights indexed by degree 0..max_degree."""
        if self.kind == "nesp":
            return (0.0,) * self.n + (1.0,)  # type: ignore[operator]
        return self.weights  # type: ignore[return-value]

    def describe(self) -> str:
        if self.kind == "nesp":
            return f"u{self.n}"
        return "mix:" + ",".join(repr(w) for w in self.weights)  # type: ignore[union-attr]


U1 = MergeSpec.nesp(1)
U2 = MergeSpec.nesp(2)
U1_U2_HALF = MergeSpec.mixture((0.0, 0.5, 0.5))


def as_log_array(values: Sequence[LogValue]) -> np.ndarray:
    """Validate a sequence of LogValue and return the raw log array."""
    logs = np.array([v.log_e for v in values], dtype=np.float64)
    if logs.size == 0:
        raise DomainError("merge requires at least one value")
    return logs


@lru_cache(maxsize=None)
def log_comb(m: int, n: int) -> float:
    """log of the exact integer binomial coefficient."""
    return math.log(math.comb(m, n))


def esp_log_levels(logs: np.ndarray, n_max: int) -> np.ndarray:
    """Logs of elementary symmetric polynomials e_0..e_n_max of the inputs.

    Inputs with log +inf are handled by the canonical extension: every level
    >= 1 is +inf.  All other terms are nonnegative, so the DP never cancels.
    """
    levels = np.full(n_max + 1, -np.inf)
    levels[0] = 0.0
    if n_max == 0:
        return levels
    if np.isposinf(logs).any():
        levels[1:] = np.inf
        return levels
    for s in logs:
        levels[1:] = np.logaddexp(levels[1:], s + levels[:-1])
    return levels


def suffix_esp_levels(logs: np.ndarray, n_max: int) -> np.ndarray:
    """Per-suffix elementary symmetric levels, one reverse pass per degree.

    Returns an array of shape (n_max + 1, len(logs) + 1) whose column i holds
    the log-levels of the suffix logs[i:]; the final column is the empty
    suffix (e_0 = 1, higher levels 0).  Degree b uses the identity
    e_b(suffix_i) = sum_{j >= i} s_j * e_{b-1}(suffix_{j+1}), a suffix
    log-sum-exp of nonnegative terms.

    Any +inf inputs must sit at the front of ``logs`` (descending order);
    their columns are forced to +inf for degrees >= 1.
    """
    k = len(logs)
    out = np.full((n_max + 1, k + 1), -np.inf)
    out[0, :] = 0.0
    n_inf = int(np.count_nonzero(np.isposinf(logs)))
    if n_inf and not np.isposinf(logs[:n_inf]).all():
        raise DomainError("suffix levels require descending order")
    finite = logs[n_inf:]
    for b in range(1, n_max + 1):
        terms = finite + out[b - 1, n_inf + 1:]
        if terms.size:
            out[b, n_inf:k] = np.logaddexp.accumulate(terms[::-1])[::-1]
        if n_inf:
            out[b, :n_inf] = np.inf
    return out


def nesp_log(values: Sequence[LogValue], n: int) -> LogValue:
    """U_n of the inputs via the log-domain DP (the production path)."""
    logs = as_log_array(values)
    if n < 1:
        raise DomainError(f"nesp degree must be >= 1, got {n}")
    return LogValue(nesp_from_logs(logs, n))


def nesp_from_logs(logs: np.ndarray, n: int) -> float:
    m = len(logs)
    n_eff = min(n, m)
    levels = esp_log_levels(logs, n_eff)
    if levels[n_eff] == np.inf:
        return np.inf
    return float(levels[n_eff] - log_comb(m, n_eff))


def mixture_merge(spec: MergeSpec, values: Sequence[LogValue]) -> LogValue:
    """Evaluate a MergeSpec: sum_n lambda_n U_n, accumulated by log-sum-exp."""
    if spec.kind == "nesp":
        return nesp_log(values, spec.n)  # type: ignore[arg-type]
    logs = as_log_array(values)
    return LogValue(mixture_from_logs(spec, logs))


def mixture_from_logs(spec: MergeSpec, logs: np.ndarray) -> float:
    m = len(logs)
    if (logs == np.inf).any():
        return np.inf if spec.has_positive_degree else 0.0
    weights = spec.weight_vector()
    top = min(len(weights) - 1, m)
    levels = esp_log_levels(logs, top)
    acc = -np.inf
    for deg, w in enumerate(weights):
        if w <= 0.0:
            continue
        d = min(deg, m)
        acc = log_add(acc, math.log(w) + float(levels[d]) - log_comb(m, d))
    return acc


def _linear_values(values: Sequence[LogValue]) -> np.ndarray:
    logs = as_log_array(values)
    if (logs == np.inf).any():
        return np.full(len(logs), np.inf)
    with np.errstate(over="ignore"):
        lin = np.exp(logs)
    if np.isinf(lin).any():
        raise NumericalError("input overflows the linear double range")
    return lin


def _power_sum(lin: np.ndarray, i: int) -> float:
    with np.errstate(over="ignore"):
        total = float(np.sum(lin ** i))
    if math.isinf(total):
        raise NumericalError(f"power sum p_{i} overflows the double range")
    return total


def _finish_linear(raw: float, scale: float, m: int, n_eff: int) -> LogValue:
    """Shared tail of the linear-scale oracle paths: normalize and guard."""
    if not math.isfinite(raw) or not math.isfinite(scale):
        raise NumericalError("intermediate overflow in linear-scale merge")
    denom = 1.0
    for i in range(n_eff):
        denom *= m - i
    result = raw / denom
    if result < 0.0:
        if result < -1e-9 * max(1.0, scale / denom):
            raise NumericalError(
                f"catastrophic cancellation: merge of nonnegative inputs came out {result!r}"
            )
        return ZERO
    return LogValue.of(result)


def nesp_powersum(values: Sequence[LogValue], n: int) -> LogValue:
    """U_n for n in 1..4 via the explicit power-sum formulas (oracle path)."""
    if not 1 <= n <= 4:
        raise DomainError(f"power-sum path supports n in 1..4 (got {n}); use nesp_bell")
    lin = _linear_values(values)
    if np.isinf(lin).any():
        return INFINITE
    m = len(lin)
    n_eff = min(n, m)
    try:
        p = [float(_power_sum(lin, i)) for i in range(1, n_eff + 1)]
        if n_eff == 1:
            terms = [p[0]]
        elif n_eff == 2:
            terms = [p[0] ** 2, -p[1]]
        elif n_eff == 3:
            terms = [p[0] ** 3, -3.0 * p[1] * p[0], 2.0 * p[2]]
        else:
            terms = [
                p[0] ** 4,
                -6.0 * p[1] * p[0] ** 2,
                8.0 * p[2] * p[0],
                3.0 * p[1] ** 2,
                -6.0 * p[3],
            ]
    except OverflowError as exc:
        raise NumericalError("intermediate overflow in power-sum merge") from exc
    raw = math.fsum(terms)
    scale = max(abs(t) for t in terms)
    return _finish_linear(raw, scale, m, n_eff)


def nesp_bell(values: Sequence[LogValue], n: int) -> LogValue:
    """U_n via the complete Bell polynomial of the signed power sums.

    B_0 = 1, B_r = sum_i C(r-1, i) B_{r-1-i} x_{i+1} with
    x_i = (-1)^(i-1) (i-1)! p_i, and U_n = B_n / (m falling n).  Signed terms
    appear, so this path is an oracle for well-conditioned inputs only.
    """
    if n < 1:
        raise DomainError(f"nesp degree must be >= 1, got {n}")
    lin = _linear_values(values)
    if np.isinf(lin).any():
        return INFINITE
    m = len(lin)
    n_eff = min(n, m)
    x = [
        (-1.0) ** (i - 1) * math.factorial(i - 1) * _power_sum(lin, i)
        for i in range(1, n_eff + 1)
    ]
    bell = [1.0]
    scale = 1.0
    for r in range(1, n_eff + 1):
        try:
            terms = [math.comb(r - 1, i) * bell[r - 1 - i] * x[i] for i in range(r)]
        except OverflowError as exc:
            raise NumericalError("intermediate overflow in Bell recursion") from exc
        val = math.fsum(terms)
        if not math.isfinite(val):
            raise NumericalError("intermediate overflow in Bell recursion")
        scale = max(scale, max((abs(t) for t in terms), default=0.0))
        bell.append(val)
    return _finish_linear(bell[n_eff], scale, m, n_eff)


def nesp_enumerate(values: Sequence[LogValue], n: int) -> LogValue:
    """Reference path: U_n by explicit enumeration of all n-subsets.

    Exponential in the input size; exists to certify nesp_log, never for
    production work.
    """
    import itertools

    logs = as_log_array(values)
    if n < 1:
        raise DomainError(f"nesp degree must be >= 1, got {n}")
    m = len(logs)
    n_eff = min(n, m)
    if (logs == np.inf).any():
        return INFINITE
    acc = -math.inf
    for combo in itertools.combinations(range(m), n_eff):
        acc = log_add(acc, float(sum(logs[i] for i in combo)))
    return LogValue(acc - log_comb(m, n_eff))


def ie_example_f(e1: LogValue, e2: LogValue) -> LogValue:
    """The symmetric two-argument merge (e1/(1+e1) + e2/(1+e2))(1 + e1*e2)/2.

    Valid for merging independent e-values but not sequential ones; computed
    in the log domain so huge arguments do not overflow.
    """
    if e1.is_infinite or e2.is_infinite:
        return INFINITE
    a, b = e1.log_e, e2.log_e
    # e/(1+e) in logs: a - log(1 + e^a)
    frac1 = a - log_add(0.0, a)
    frac2 = b - log_add(0.0, b)
    lhs = log_add(frac1, frac2)
    rhs = log_add(0.0, a + b)
    return LogValue(math.log(0.5) + lhs + rhs)
