"""Multi-indices, weight sequences and the index sets built from them.

A weight specification assigns ``sigma_s >= 1`` to every finitely supported
multi-index ``s``. The lognormal and affine weights factorize over coordinates,
``sigma_s = scale * prod_j w_j(s_j)`` with ``w_j(0) = 1``, which is what makes
ordered enumeration and certified l_q sums cheap.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .errors import MissingExplicitEntry, NonConvergent, SetTooLarge

DEFAULT_CAP = 10**7
_MAX_TERMS = 1 << 24
_MAX_CRUDE = 1 << 18
_MAX_DIMS = 4096


class MultiIndex(tuple):
    """Finitely supported multi-index.

    Stored densely as ``(s_1, ..., s_n)`` with trailing zeros removed, so the
    canonical empty index is ``()``. Coordinates are 1-based in the sparse
    form, ``[(j, s_j), ...]``.
    """

    __slots__ = ()

    def __new__(cls, entries: Iterable[int] = ()):
        vals = [int(e) for e in entries]
        if any(v < 0 for v in vals):
            raise ValueError("multi-index entries must be non-negative")
        while vals and vals[-1] == 0:
            vals.pop()
        return super().__new__(cls, vals)

    @classmethod
    def from_sparse(cls, pairs: Iterable[Sequence[int]]) -> "MultiIndex":
        pairs = [(int(j), int(v)) for j, v in pairs]
        if any(j < 1 for j, _ in pairs):
            raise ValueError("coordinates are numbered from 1")
        size = max((j for j, v in pairs if v), default=0)
        dense = [0] * size
        for j, v in pairs:
            if v:
                dense[j - 1] = v
        return cls(dense)

    @classmethod
    def unit(cls, j: int, k: int = 1) -> "MultiIndex":
        return cls([0] * (j - 1) + [k])

    def sparse(self) -> list[tuple[int, int]]:
        return [(j + 1, v) for j, v in enumerate(self) if v]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(j + 1 for j, v in enumerate(self) if v)

    @property
    def order(self) -> int:
        return sum(self)

    @property
    def max_dim(self) -> int:
        return len(self)

    def increment(self, j: int) -> "MultiIndex":
        vals = list(self) + [0] * max(0, j - len(self))
        vals[j - 1] += 1
        return MultiIndex(vals)

    def __repr__(self) -> str:
        return f"MultiIndex({self.sparse()})"


def order_key(s: MultiIndex, sig: float) -> tuple:
    """Total order on multi-indices: sigma, then |s|_1, then reverse-lexicographic."""
    return (sig, sum(s), len(s), tuple(reversed(s)))


# -- rho rules ---------------------------------------------------------------


@dataclass(frozen=True)
class GeometricRho:
    """``rho_j = base * ratio**j``, optionally only for ``j <= dims``."""

    base: float = 1.0
    ratio: float = 2.0
    dims: int | None = None

    def __post_init__(self):
        if self.base <= 0 or self.ratio < 1:
            raise ValueError("geometric rho needs base > 0 and ratio >= 1")

    first_monotone = 1

    def __call__(self, j: int) -> float:
        if self.dims is not None and j > self.dims:
            return math.inf
        try:
            return self.base * self.ratio**j
        except OverflowError:
            return math.inf

    def tail_sum(self, J: int, p: float) -> float:
        """Upper bound on ``sum_{j > J} rho_j**(-p)``."""
        if self.dims is not None and J >= self.dims:
            return 0.0
        if self.ratio == 1:
            return math.inf if self.dims is None else (self.dims - J) * self.base**-p
        r = self.ratio**-p
        return self.base**-p * r ** (J + 1) / (1 - r)


@dataclass(frozen=True)
class AlgebraicRho:
    """``rho_j = scale * j**power``, optionally only for ``j <= dims``."""

    scale: float = 1.0
    power: float = 2.0
    dims: int | None = None

    def __post_init__(self):
        if self.scale <= 0 or self.power < 0:
            raise ValueError("algebraic rho needs scale > 0 and power >= 0")

    first_monotone = 1

    def __call__(self, j: int) -> float:
        if self.dims is not None and j > self.dims:
            return math.inf
        return self.scale * float(j) ** self.power

    def tail_sum(self, J: int, p: float) -> float:
        if self.dims is not None and J >= self.dims:
            return 0.0
        e = self.power * p
        if self.dims is not None:
            return self.scale**-p * sum(float(j) ** -e for j in range(J + 1, self.dims + 1))
        if e <= 1:
            return math.inf
        first = float(J + 1) ** -e
        return self.scale**-p * (first + float(J + 1) ** (1 - e) / (e - 1))


@dataclass(frozen=True)
class TableRho:
    """Explicit ``rho_1..rho_n``; every later coordinate is inactive (rho = inf)."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v <= 0 for v in vals):
            raise ValueError("rho values must be positive")
        object.__setattr__(self, "values", vals)

    @property
    def first_monotone(self) -> int:
        return len(self.values) + 1

    @property
    def dims(self) -> int:
        return len(self.values)

    def __call__(self, j: int) -> float:
        return self.values[j - 1] if 1 <= j <= len(self.values) else math.inf

    def tail_sum(self, J: int, p: float) -> float:
        return sum(v**-p for v in self.values[J:])


RhoRule = GeometricRho | AlgebraicRho | TableRho


def legendre_c(k: int) -> float:
    """Default affine degree rule ``c_k = sqrt(2k + 1)``."""
    return math.sqrt(2 * k + 1)


def unit_c(k: int) -> float:
    return 1.0


# -- weight specifications ---------------------------------------------------


def _log_binom(x, t: int):
    """log binom(x, t) for a small integer t; integer x < t gives -inf."""
    x = np.asarray(x, dtype=float)
    valid = x >= t
    safe = np.where(valid, x, float(t))
    out = np.full(x.shape, -math.lgamma(t + 1))
    for i in range(t):
        out = out + np.log(safe - i)
    return np.where(valid | (t == 0), out, -np.inf)


def _binom(k: int, t: int) -> float:
    if k <= 60:
        return float(math.comb(k, t))
    return math.exp(math.lgamma(k + 1) - math.lgamma(t + 1) - math.lgamma(k - t + 1))


@lru_cache(maxsize=1 << 16)
def _lognormal_w(eta: int, rho: float, k: int) -> float:
    if k == 0:
        return 1.0
    if math.isinf(rho):
        return math.inf
    total = 0.0
    for t in range(min(k, eta) + 1):
        try:
            total += _binom(k, t) * rho ** (2 * t)
        except OverflowError:
            return math.inf
    return math.sqrt(total) if math.isfinite(total) else math.inf


@dataclass(frozen=True)
class _ProductWeights:
    """Common machinery for weights of the form ``scale * prod_j w_j(s_j)``."""

    def univariate(self, j: int, k: int) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def sigma(self, s: Sequence[int]) -> float:
        out = self.scale
        for j, k in enumerate(s, start=1):
            if k:
                out *= self.univariate(j, k)
        return out

    def check_monotone(self) -> None:
        pass

    def with_scale(self, scale: float):
        return type(self)(**{**self.__dict__, "scale": float(scale)})


@dataclass(frozen=True)
class LognormalWeights(_ProductWeights):
    """``sigma_s**2 = sum over s' <= s, |s'|_inf <= eta of prod_j binom(s_j, s'_j) rho_j**(2 s'_j)``."""

    eta: int
    rho: RhoRule
    q: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if int(self.eta) < 1:
            raise ValueError("eta must be a positive integer")
        object.__setattr__(self, "eta", int(self.eta))
        _check_q(self.q)

    def univariate(self, j: int, k: int) -> float:
        return _lognormal_w(self.eta, self.rho(j), int(k))


@dataclass(frozen=True)
class AffineWeights(_ProductWeights):
    """``sigma_s = prod_j c_{s_j} rho_j**s_j`` with a pluggable degree rule ``c``."""

    rho: RhoRule
    c: Callable[[int], float] = legendre_c
    q: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.c(0) != 1:
            raise ValueError("degree rule must satisfy c(0) = 1")
        _check_q(self.q)

    def univariate(self, j: int, k: int) -> float:
        if k == 0:
            return 1.0
        r = self.rho(j)
        if math.isinf(r):
            return math.inf
        try:
            return self.c(int(k)) * r ** int(k)
        except OverflowError:
            return math.inf

    def check_monotone(self) -> None:
        for j in range(1, self.rho.first_monotone + 1):
            r = self.rho(j)
            if r < 1:
                raise ValueError(f"affine weights are not monotone (rho_{j} = {r} < 1)")


@dataclass(frozen=True)
class ExplicitWeights:
    """Finite table of weights; indices outside the table are not admissible."""

    table: tuple[tuple[MultiIndex, float], ...]
    q: float = 1.0

    def __init__(self, table: Mapping | Iterable, q: float = 1.0):
        items = table.items() if isinstance(table, Mapping) else table
        entries = tuple((MultiIndex(s), float(v)) for s, v in items)
        object.__setattr__(self, "table", entries)
        object.__setattr__(self, "q", float(q))
        object.__setattr__(self, "_lookup", dict(entries))
        _check_q(self.q)

    def sigma(self, s: Sequence[int]) -> float:
        try:
            return self._lookup[MultiIndex(s)]
        except KeyError:
            raise MissingExplicitEntry(f"no weight for {MultiIndex(s)!r}") from None

    def check_monotone(self) -> None:
        pass

    def __hash__(self):
        return hash(self.table)


WeightSpec = LognormalWeights | AffineWeights | ExplicitWeights


def _check_q(q: float) -> None:
    if not (0 < q):
        raise ValueError("q must be positive")


def sigma(spec: WeightSpec, s: Sequence[int]) -> float:
    """Weight ``sigma_s`` of a multi-index under ``spec``."""
    return spec.sigma(MultiIndex(s))


# -- index sets ---------------------------------------------------------------


@dataclass(frozen=True)
class IndexSet:
    """Ordered multi-indices together with their weights."""

    indices: tuple[MultiIndex, ...] = ()
    sigmas: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(MultiIndex(s) for s in self.indices))
        object.__setattr__(self, "sigmas", tuple(float(v) for v in self.sigmas))
        if len(self.indices) != len(self.sigmas):
            raise ValueError("indices and sigmas differ in length")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self.indices)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return IndexSet(self.indices[i], self.sigmas[i])
        return self.indices[i]

    def __contains__(self, s) -> bool:
        return MultiIndex(s) in self.positions

    @property
    def positions(self) -> dict[MultiIndex, int]:
        cache = self.__dict__.get("_positions")
        if cache is None:
            cache = {s: i for i, s in enumerate(self.indices)}
            object.__setattr__(self, "_positions", cache)
        return cache

    @property
    def max_dim(self) -> int:
        return max((len(s) for s in self.indices), default=0)

    def sigma_array(self) -> np.ndarray:
        return np.asarray(self.sigmas, dtype=float)

    def is_downward_closed(self) -> bool:
        members = self.positions
        for s in self.indices:
            for j in s.support:
                lower = list(s)
                lower[j - 1] -= 1
                if MultiIndex(lower) not in members:
                    return False
        return True

    def union(self, other: "IndexSet") -> "IndexSet":
        seen = dict(zip(self.indices, self.sigmas))
        for s, v in zip(other.indices, other.sigmas):
            seen.setdefault(s, v)
        return IndexSet(tuple(seen), tuple(seen.values()))

    def to_json(self) -> list[dict]:
        return [{"s": [list(p) for p in s.sparse()], "sigma": v} for s, v in zip(self.indices, self.sigmas)]

    @classmethod
    def from_json(cls, data: Sequence[Mapping]) -> "IndexSet":
        return cls(tuple(MultiIndex.from_sparse(d["s"]) for d in data), tuple(d["sigma"] for d in data))


def iter_ordered(spec: WeightSpec, cap: int = DEFAULT_CAP) -> Iterator[tuple[MultiIndex, float]]:
    """Yield ``(s, sigma_s)`` in increasing order of :func:`order_key`.

    Product weights are searched best-first over the frontier of the index set
    accepted so far. Coordinates past ``rho.first_monotone`` are activated
    lazily: coordinate ``D + 1`` enters the frontier only when the unit index
    ``e_{D+1}`` is popped, which is sound because rho is non-decreasing there.
    """
    if isinstance(spec, ExplicitWeights):
        for count, (s, v) in enumerate(sorted(spec.table, key=lambda e: order_key(*e))):
            if count >= cap:
                raise SetTooLarge(f"more than {cap} indices requested")
            yield s, v
        return
    spec.check_monotone()
    heap: list = []
    seen: set = set()

    def push(s: MultiIndex) -> None:
        if s in seen:
            return
        seen.add(s)
        v = spec.sigma(s)
        if math.isfinite(v):
            heapq.heappush(heap, (order_key(s, v), s))

    active = spec.rho.first_monotone - 1
    accepted: list[MultiIndex] = []
    push(MultiIndex())
    push(MultiIndex.unit(active + 1))
    count = 0
    while heap:
        key, s = heapq.heappop(heap)
        if s.order == 1 and len(s) == active + 1:
            active += 1
            for a in accepted:
                push(a.increment(active))
            push(MultiIndex.unit(active + 1))
        accepted.append(s)
        for j in range(1, active + 1):
            push(s.increment(j))
        if count >= cap:
            raise SetTooLarge(f"more than {cap} indices requested")
        count += 1
        yield s, key[0]


def smallest_m(spec: WeightSpec, m: int, cap: int = DEFAULT_CAP) -> IndexSet:
    """The ``m`` multi-indices with smallest weight, sorted ascending."""
    if m < 1:
        raise ValueError("m must be positive")
    if m > cap:
        raise SetTooLarge(f"m = {m} exceeds the cap {cap}")
    idx, sig = [], []
    for s, v in iter_ordered(spec, cap):
        idx.append(s)
        sig.append(v)
        if len(idx) == m:
            break
    if len(idx) < m:
        raise ValueError(f"weight specification admits only {len(idx)} indices")
    return IndexSet(tuple(idx), tuple(sig))


def enumerate_threshold(spec: WeightSpec, xi: float, cap: int = DEFAULT_CAP) -> IndexSet:
    """All ``s`` with ``sigma_s**q <= xi``, sorted by the total order."""
    q = spec.q
    found: list[tuple[MultiIndex, float]] = []

    def add(s, v):
        if len(found) >= cap:
            raise SetTooLarge(f"threshold set exceeds {cap} indices")
        found.append((MultiIndex(s), v))

    if isinstance(spec, ExplicitWeights):
        for s, v in spec.table:
            if v**q <= xi:
                add(s, v)
    else:
        spec.check_monotone()
        first_monotone = spec.rho.first_monotone
        if spec.scale**q <= xi:
            add((), spec.scale)
            stack = [(1, (), spec.scale)]
            while stack:
                j_start, prefix, val = stack.pop()
                j = j_start
                while True:
                    if (val * spec.univariate(j, 1)) ** q > xi:
                        if j >= first_monotone:
                            break
                        j += 1
                        continue
                    k = 1
                    while True:
                        v = val * spec.univariate(j, k)
                        if v**q > xi:
                            break
                        s = prefix + (0,) * (j - 1 - len(prefix)) + (k,)
                        add(s, v)
                        stack.append((j + 1, s, v))
                        k += 1
                    j += 1
    found.sort(key=lambda e: order_key(*e))
    return IndexSet(tuple(s for s, _ in found), tuple(v for _, v in found))


def theoretical_width(spec: WeightSpec, n: int) -> float:
    """``d_n = 1 / sigma_(n+1)``, the reciprocal of the (n+1)-th smallest weight."""
    return 1.0 / smallest_m(spec, n + 1).sigmas[-1]


# -- certified l_q sums --------------------------------------------------------


def _affine_dim_sum(spec: AffineWeights, rho: float, q: float, tol: float) -> tuple[float, float, float]:
    if math.isinf(rho):
        return 1.0, 0.0, 0.0
    if rho <= 1:
        raise NonConvergent(f"affine sum diverges for rho = {rho} <= 1")
    partial, k = 0.0, 0
    r = rho**-q
    while True:
        w = spec.c(k) * rho**k if k < 4000 else math.inf
        partial += w**-q if math.isfinite(w) else 0.0
        k += 1
        try:
            bound = spec.c(k) ** -q * rho ** (-q * k) / (1 - r)
        except OverflowError:
            bound = 0.0
        if bound <= tol or k > _MAX_TERMS:
            if bound > tol:
                raise NonConvergent("affine univariate sum did not converge")
            return partial, 0.0, bound


def _lognormal_log_w2(eta: int, log_rho: float, x: np.ndarray) -> np.ndarray:
    terms = [_log_binom(x, t) + 2 * t * log_rho for t in range(eta + 1)]
    return logsumexp(np.stack(terms), axis=0)


def _lognormal_partial(eta: int, log_rho: float, q: float, K: int) -> float:
    total = 0.0
    for lo in range(0, K + 1, 1 << 20):
        ks = np.arange(lo, min(K, lo + (1 << 20) - 1) + 1, dtype=float)
        total += float(np.exp(-q / 2 * _lognormal_log_w2(eta, log_rho, ks)).sum())
    return total


def _lognormal_dim_sum(eta: int, rho: float, q: float, tol: float) -> tuple[float, float, float]:
    if math.isinf(rho):
        return 1.0, 0.0, 0.0
    p = eta * q / 2
    if p <= 1:
        raise NonConvergent(f"lognormal sum diverges (eta*q/2 = {p} <= 1)")
    log_rho = math.log(rho)

    # w(k)^-q <= eta^p k^-p rho^(-q eta) for k >= eta gives a closed-form tail
    def crude(K):
        return eta**p * math.exp(-q * eta * log_rho) * K ** (1 - p) / (p - 1)

    def f(x):
        return float(np.exp(-q / 2 * _lognormal_log_w2(eta, log_rho, np.array([x], dtype=float)))[0])

    K = max(eta, 16)
    while crude(K) > tol and K < _MAX_CRUDE:
        K *= 2
    if crude(K) <= tol:
        return _lognormal_partial(eta, log_rho, q, K), 0.0, crude(K)
    # integral bounds for the decreasing tail: int_{K+1} f <= tail <= int_K f
    K = max(eta, 16)
    while f(K) > tol:
        K *= 2
        if K > _MAX_TERMS:
            raise NonConvergent("lognormal univariate sum did not converge")
    # with u = 1/x the integrand is u^(p-2) times a function bounded at u = 0
    g = lambda u: f(1.0 / u) * u**-p if u > 0 else math.exp(-q * eta * log_rho) * math.factorial(eta) ** (q / 2)
    upper = integrate.quad(g, 0.0, 1.0 / K, weight="alg", wvar=(p - 2, 0.0), epsabs=0, epsrel=1e-12)[0]
    lower = upper - integrate.quad(f, K, K + 1, epsabs=0, epsrel=1e-12)[0]
    return _lognormal_partial(eta, log_rho, q, K), max(lower, 0.0), upper


def _dim_sum(spec, j: int, q: float, tol: float) -> tuple[float, float, float]:
    if isinstance(spec, AffineWeights):
        return _affine_dim_sum(spec, spec.rho(j), q, tol)
    return _lognormal_dim_sum(spec.eta, spec.rho(j), q, tol)


def _excess_constant(spec, q: float, rho_min: float) -> float:
    """C with ``sum_k w_j(k)^-q - 1 <= C rho_j^-q`` whenever ``rho_j >= rho_min > 1``."""
    r = rho_min**-q
    if isinstance(spec, AffineWeights):
        return spec.c(1) ** -q / (1 - r)
    eta = spec.eta
    p = eta * q / 2
    if p <= 1:
        raise NonConvergent(f"lognormal sum diverges (eta*q/2 = {p} <= 1)")
    K = 4096
    ks = np.arange(eta + 1, K + 1, dtype=float)
    z = float(np.exp(-q / 2 * _log_binom(ks, eta)).sum()) + eta**p * K ** (1 - p) / (p - 1)
    return sum(r ** (k - 1) for k in range(1, eta + 1)) + r ** (eta - 1) * z


def lq_sum_bounds(spec: WeightSpec, q: float | None = None, rel_tol: float = 1e-10,
                  max_dims: int = _MAX_DIMS) -> tuple[float, float]:
    """Certified interval for ``sum_s sigma_s**(-q)``.

    Uses the product identity ``sum_s sigma_s^-q = scale^-q prod_j sum_k w_j(k)^-q``;
    each univariate factor gets a tail bound and the infinite product over
    coordinates ``j > J`` is bounded by ``exp(C sum_{j>J} rho_j^-q)``.

    Raises:
        NonConvergent: if the sum is infinite.
    """
    q = spec.q if q is None else float(q)
    if isinstance(spec, ExplicitWeights):
        total = math.fsum(v**-q for _, v in spec.table)
        return total, total
    spec.check_monotone()
    J = max(spec.rho.first_monotone - 1, 1)
    while True:
        rho_next = spec.rho(J + 1)
        if math.isinf(rho_next) and spec.rho.tail_sum(J, q) == 0:
            factor = 1.0
            break
        if rho_next > 1:
            ts = spec.rho.tail_sum(J, q)
            if math.isinf(ts):
                raise NonConvergent("sum over coordinates of rho_j^-q diverges")
            factor = math.exp(_excess_constant(spec, q, rho_next) * ts)
            if factor - 1 <= rel_tol / 2 or J >= max_dims:
                break
        elif J >= max_dims:
            raise NonConvergent("rho does not exceed 1 within the dimension budget")
        J = min(2 * J, max_dims) if J < max_dims else J
    per_dim = rel_tol / (2 * (J + 1))
    lo = hi = 1.0
    for j in range(1, J + 1):
        partial, t_lo, t_hi = _dim_sum(spec, j, q, per_dim)
        lo *= partial + t_lo
        hi *= partial + t_hi
    s = spec.scale**-q
    return lo * s, hi * factor * s


def lq_norm_bounds(spec: WeightSpec, tol: float = 1e-10, q: float | None = None) -> tuple[float, float]:
    """Certified interval for ``||sigma^-1||_q`` with half-width at most ``tol``."""
    q = spec.q if q is None else float(q)
    rel = 1e-6
    for _ in range(8):
        lo, hi = lq_sum_bounds(spec, q, rel)
        n_lo, n_hi = lo ** (1 / q), hi ** (1 / q)
        if (n_hi - n_lo) / 2 <= tol:
            return n_lo, n_hi
        rel *= max(1e-4, 0.5 * tol / ((n_hi - n_lo) / 2))
    raise NonConvergent(f"could not certify the l_q norm to tolerance {tol}")


def lq_norm_inverse_sigma(spec: WeightSpec, tol: float = 1e-10) -> float:
    """``||sigma^-1||_{l_q}`` as the midpoint of a certified interval of half-width <= tol."""
    lo, hi = lq_norm_bounds(spec, tol)
    return 0.5 * (lo + hi)


def normalized(spec: WeightSpec, tol: float = 1e-6) -> WeightSpec:
    """Rescale a product spec so that ``||sigma^-1||_q <= 1`` (certified upper bound)."""
    _, hi = lq_norm_bounds(spec, tol)
    return spec.with_scale(spec.scale * hi)


# -- approximants and truncation ---------------------------------------------


@dataclass(frozen=True)
class Approximant:
    """Polynomial expansion with one coefficient vector in R^d per basis index."""

    basis: IndexSet
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if coeffs.shape[0] != len(self.basis):
            raise ValueError("coefficient rows must match the basis size")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def x_dim(self) -> int:
        return self.coefficients.shape[1]

    def to_json(self) -> dict:
        return {"basis": self.basis.to_json(), "x_dim": self.x_dim, "coefficients": self.coefficients.tolist()}

    @classmethod
    def from_json(cls, data: Mapping) -> "Approximant":
        basis = IndexSet.from_json(data["basis"])
        coeffs = np.asarray(data["coefficients"], dtype=float).reshape(len(basis), int(data["x_dim"]))
        return cls(basis, coeffs)


def truncate_expansion(coeffs: Mapping, index_set: IndexSet) -> Approximant:
    """Keep the coefficients whose index lies in ``index_set``; all others are dropped."""
    table = {MultiIndex(s): np.atleast_1d(np.asarray(v, dtype=float)) for s, v in coeffs.items()}
    d = next(iter(table.values())).size if table else 1
    out = np.zeros((len(index_set), d))
    for i, s in enumerate(index_set.indices):
        if s in table:
            out[i] = table[s]
    return Approximant(index_set, out)
