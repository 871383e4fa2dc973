"""Optimal-density sampling for weighted least squares.

The sampling measure is the mixture

    rho(y) = 1/2 * ( (1/m) sum_{s in basis} phi_s(y)^2
                     + sum_{s in tail} sigma_s^-2 phi_s(y)^2 / Z )

with respect to the product base measure mu, where the tail holds the indices
following the basis in the sigma ordering and Z is the retained tail mass.
Points are drawn by composition: pick a mixture component, pick an index, then
draw each coordinate from ``phi_k(y)^2 dmu_1``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.interpolate import PchipInterpolator

from .basis import MAX_DEGREE, PolynomialFamily, density, eval_all, eval_tensor_batch
from .errors import (
    DimensionMismatch,
    IllConditionedInput,
    NonConvergent,
    SubsamplingFailure,
    TabulationFailure,
    TargetTooSmall,
)
from .indexing import ExplicitWeights, IndexSet, WeightSpec, iter_ordered, lq_sum_bounds

IID_SCHEME_I = "IID_SchemeI"
IID_FOR_SUBSAMPLING = "IID_For_Subsampling"
SUBSAMPLED_SCHEME_II = "Subsampled_SchemeII"
PLAIN_MU = "Plain_mu"
SCHEMES = (IID_SCHEME_I, IID_FOR_SUBSAMPLING, SUBSAMPLED_SCHEME_II, PLAIN_MU)

BLOCK = 4096
GRID_POINTS = 4096
GAMMA_LOW = 1 / 66
GAMMA_HIGH = 70.0

_STREAM_NU = 0
_STREAM_MU = 1
_STREAM_CANDIDATES = 2


# -- the mixture density ---------------------------------------------------------


@dataclass(frozen=True)
class NuSpec:
    """The sampling density for a basis of the ``m`` smallest-weight indices.

    Attributes:
        tail_mass: sigma^-2 mass of ``tail_set``; normalizes the tail component.
        tail_total: Certified upper bound on the full tail mass.
        tail_mass_dropped: ``tail_total - tail_mass``, an upper bound on the mass
            of the tail indices that were not retained.
        truncated: True when the retained list hit ``max_tail`` before reaching
            the requested relative tolerance.
    """

    family: PolynomialFamily
    spec: WeightSpec
    m: int
    basis: IndexSet
    tail_set: IndexSet
    tail_mass: float
    tail_total: float
    tail_mass_dropped: float
    truncated: bool = False

    @property
    def max_dim(self) -> int:
        return max(self.basis.max_dim, self.tail_set.max_dim)

    def density(self, points) -> np.ndarray:
        return nu_density(self, points)


def build_nu(family: PolynomialFamily, spec: WeightSpec, m: int, tail_tol: float = 1e-6,
             max_tail: int | None = None) -> NuSpec:
    """Construct the sampling density for the ``m`` smallest-weight indices.

    Tail indices are appended in sigma order until their sigma^-2 mass reaches
    ``(1 - tail_tol)`` of the certified total, or ``max_tail`` indices are seen.
    Indices of degree above ``MAX_DEGREE`` cannot be sampled and are skipped.

    Raises:
        NonConvergent: if ``sum sigma_s^-2`` diverges.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if max_tail is None:
        max_tail = max(64, 4 * m)
    ordered = iter_ordered(spec)
    basis_idx, basis_sig = [], []
    for s, v in ordered:
        basis_idx.append(s)
        basis_sig.append(v)
        if len(basis_idx) == m:
            break
    if len(basis_idx) < m:
        raise ValueError(f"weight specification admits only {len(basis_idx)} indices")
    if isinstance(spec, ExplicitWeights):
        total_hi = lq_sum_bounds(spec, 2.0)[1]
    else:
        try:
            total_hi = lq_sum_bounds(spec, 2.0, 1e-10)[1]
        except NonConvergent:
            total_hi = lq_sum_bounds(spec, 2.0, 1e-6)[1]
    basis_mass = math.fsum(v**-2 for v in basis_sig)
    z_total = max(total_hi - basis_mass, 0.0)
    tail_idx, tail_sig, kept = [], [], 0.0
    truncated = False
    skipped = 0
    if z_total > 0:
        for s, v in ordered:
            if kept >= (1 - tail_tol) * z_total:
                break
            if len(tail_idx) + skipped >= max_tail:
                truncated = True
                break
            if max(s, default=0) > MAX_DEGREE:
                # beyond the inverse-CDF tables
                skipped += 1
                truncated = True
                continue
            tail_idx.append(s)
            tail_sig.append(v)
            kept += v**-2
    kept = math.fsum(v**-2 for v in tail_sig)
    return NuSpec(
        family=family,
        spec=spec,
        m=m,
        basis=IndexSet(tuple(basis_idx), tuple(basis_sig)),
        tail_set=IndexSet(tuple(tail_idx), tuple(tail_sig)),
        tail_mass=kept,
        tail_total=z_total,
        tail_mass_dropped=max(z_total - kept, 0.0),
        truncated=truncated,
    )


def nu_density(nu: NuSpec, points, chunk: int = 512) -> np.ndarray | float:
    """Evaluate the sampling density (relative to mu) at one point or an (N, J) array."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] < nu.max_dim:
        raise DimensionMismatch(f"points have {pts.shape[1]} coordinates, density needs {nu.max_dim}")
    out = np.empty(len(pts))
    tail_w = nu.tail_set.sigma_array() ** -2
    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        first = np.mean(eval_tensor_batch(nu.family, nu.basis.indices, block) ** 2, axis=1)
        if len(nu.tail_set):
            second = (eval_tensor_batch(nu.family, nu.tail_set.indices, block) ** 2) @ tail_w / nu.tail_mass
            out[start:start + chunk] = 0.5 * (first + second)
        else:
            out[start:start + chunk] = first
    return float(out[0]) if single else out


# -- univariate inverse-CDF sampling -------------------------------------------


def _grid(family: PolynomialFamily, k: int) -> np.ndarray:
    if family.kind == "hermite":
        half = max(9.0, math.sqrt(4 * k + 2) + 8.0)
        return np.linspace(-half, half, GRID_POINTS)
    return -np.cos(np.pi * np.linspace(0.0, 1.0, GRID_POINTS))


@lru_cache(maxsize=None)
def _inverse_cdf(family: PolynomialFamily, k: int) -> PchipInterpolator:
    if k > MAX_DEGREE:
        raise TabulationFailure(f"degree {k} exceeds the tabulation limit {MAX_DEGREE}")
    x = _grid(family, k)
    t, w = np.polynomial.legendre.leggauss(10)
    mid = 0.5 * (x[1:] + x[:-1])
    half = 0.5 * (x[1:] - x[:-1])
    nodes = mid[:, None] + half[:, None] * t[None, :]
    dens = eval_all(family, k, nodes)[..., k] ** 2 * density(family, nodes)
    incr = half * (dens @ w)
    if not np.all(np.isfinite(incr)) or np.any(incr < 0):
        raise TabulationFailure(f"CDF of degree {k} is not monotone on the grid")
    cdf = np.concatenate([[0.0], np.cumsum(incr)])
    cdf /= cdf[-1]
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    if keep.sum() < 16:
        raise TabulationFailure(f"CDF of degree {k} is degenerate on the grid")
    return PchipInterpolator(cdf[keep], x[keep])


def univariate_inverse_cdf(family: PolynomialFamily, k: int, u) -> np.ndarray:
    """Quantile function of ``phi_k(y)^2 dmu_1`` evaluated at ``u`` in [0, 1]."""
    interp = _inverse_cdf(family, int(k))
    return np.clip(interp(np.asarray(u, dtype=float)), interp(0.0), interp(1.0))


def univariate_sample(family: PolynomialFamily, k: int, rng: np.random.Generator, size=None):
    """Draw from ``phi_k(y)^2 dmu_1`` by inverse-CDF sampling."""
    vals = univariate_inverse_cdf(family, k, rng.random(size))
    return float(vals) if size is None else vals


def _coordinates(family: PolynomialFamily, degrees: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    out = np.empty(degrees.shape)
    for k in np.unique(degrees):
        mask = degrees == k
        out[mask] = univariate_inverse_cdf(family, int(k), uniforms[mask])
    return out


def _block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), stream, block]))


def _dense(index_set: IndexSet, J: int) -> np.ndarray:
    out = np.zeros((len(index_set), J), dtype=np.int64)
    for i, s in enumerate(index_set.indices):
        out[i, :len(s)] = s
    return out


# -- sample plans -----------------------------------------------------------------


@dataclass(frozen=True)
class SamplePlan:
    """Parameter points with importance weights.

    Attributes:
        points: Array of shape (N, J).
        weights: Positive weights, one per point.
        scheme: Provenance, one of ``SCHEMES``.
        seed: Seed the points were drawn with.
        m: Size of the basis the plan was built for (0 if unknown).
        weight_scale: Common factor in the weights relative to ``1 / rho``
            (``target / N_initial`` after subsampling, 1 otherwise).
        density: Sampling density at the points, when known.
    """

    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    scheme: str = IID_SCHEME_I
    seed: int = 0
    m: int = 0
    weight_scale: float = 1.0
    density: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(pts) != len(w):
            raise ValueError("points and weights differ in length")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def J(self) -> int:
        return self.points.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# scheme,seed,m,J\r\n")
        buf.write(f"# {self.scheme},{self.seed},{self.m},{self.J}\r\n")
        writer = csv.writer(buf)
        writer.writerow([f"y_{j + 1}" for j in range(self.J)] + ["omega"])
        for y, w in zip(self.points.tolist(), self.weights.tolist()):
            writer.writerow([repr(v) for v in y] + [repr(w)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SamplePlan":
        lines = text.splitlines()
        scheme, seed, m, J = lines[1][1:].strip().split(",")
        rows = list(csv.reader(lines[3:]))
        data = np.array(rows, dtype=float).reshape(len(rows), int(J) + 1)
        return cls(data[:, :-1], data[:, -1], scheme, int(seed), int(m))

    def to_json(self) -> dict:
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "m": self.m,
            "J": self.J,
            "weight_scale": self.weight_scale,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SamplePlan":
        pts = np.asarray(data["points"], dtype=float).reshape(len(data["weights"]), int(data["J"]))
        return cls(pts, data["weights"], data["scheme"], int(data["seed"]), int(data["m"]),
                   float(data.get("weight_scale", 1.0)))

    def dumps_json(self) -> str:
        return json.dumps(self.to_json())


def draw_samples(nu: NuSpec, count: int, seed: int, J: int | None = None,
                 scheme: str = IID_SCHEME_I) -> SamplePlan:
    """Draw ``count`` i.i.d. points from the sampling density.

    Sample ``i`` depends only on ``(seed, i)``: randomness is generated in
    fixed blocks of ``BLOCK`` samples keyed on the block number.
    """
    if scheme not in (IID_SCHEME_I, IID_FOR_SUBSAMPLING):
        raise ValueError(f"draw_samples produces i.i.d. plans, not {scheme!r}")
    J = nu.max_dim if J is None else int(J)
    if J < nu.max_dim:
        raise DimensionMismatch(f"J = {J} is below the largest active coordinate {nu.max_dim}")
    basis = _dense(nu.basis, J)
    tail = _dense(nu.tail_set, J)
    cum = np.cumsum(nu.tail_set.sigma_array() ** -2)
    points = np.empty((count, J))
    for b in range(-(-count // BLOCK)):
        rng = _block_rng(seed, _STREAM_NU, b)
        coin = rng.random(BLOCK) < 0.5
        pick_basis = rng.integers(0, nu.m, BLOCK)
        u_tail = rng.random(BLOCK)
        uniforms = rng.random((BLOCK, J))
        if len(cum):
            pick_tail = np.minimum(np.searchsorted(cum, u_tail * cum[-1], side="right"), len(cum) - 1)
            degrees = np.where(coin[:, None], basis[pick_basis], tail[pick_tail])
        else:
            degrees = basis[pick_basis]
        n = min(BLOCK, count - b * BLOCK)
        points[b * BLOCK:b * BLOCK + n] = _coordinates(nu.family, degrees[:n], uniforms[:n])
    rho = nu_density(nu, points)
    return SamplePlan(points, 1.0 / rho, scheme, seed, nu.m, 1.0, rho)


def draw_mu(family: PolynomialFamily, count: int, seed: int, J: int) -> SamplePlan:
    """Draw ``count`` points from the product base measure with unit weights."""
    points = np.empty((count, J))
    for b in range(-(-count // BLOCK)):
        rng = _block_rng(seed, _STREAM_MU, b)
        uniforms = rng.random((BLOCK, J))
        n = min(BLOCK, count - b * BLOCK)
        points[b * BLOCK:b * BLOCK + n] = univariate_inverse_cdf(family, 0, uniforms[:n])
    return SamplePlan(points, np.ones(count), PLAIN_MU, seed, 0, 1.0, np.ones(count))


# -- subsampling -------------------------------------------------------------------


def _bss_parameters(K: int, m: int) -> dict:
    d = max(K / m, 1.05)
    sd = math.sqrt(d)
    eps_l = 1 / sd
    eps_u = (sd - 1) / (d + sd)
    delta_l = 1.0
    delta_u = (sd + 1) / (sd - 1)
    return {
        "eps_l": eps_l,
        "eps_u": eps_u,
        "delta_l": delta_l,
        "delta_u": delta_u,
        "l0": -m / eps_l,
        "u0": m / eps_u,
        # common weight 1/t between the average upper and lower bounds
        "inv_t": math.sqrt((1 / delta_u + eps_u) * (1 / delta_l - eps_l)),
    }


def _two_barrier_select(V: np.ndarray, W: np.ndarray, K: int, *, candidates: int | None, refresh_every: int,
                        rng: np.random.Generator | None) -> list[int]:
    """Greedy selection of ``K`` rows of the whitened frame ``U = V W`` (``U^T U = I``).

    Every selected row enters ``A`` with the same weight ``t``. Two barriers
    ``l < lambda(A) < u`` advance by the fixed increments of the BSS schedule.
    Each step takes the row that most decreases the lower potential
    ``tr (A - l)^-1`` among the rows whose update keeps ``A`` below ``u``.

    The barrier matrices and per-row quadratic forms are recomputed from an
    eigen-decomposition every ``refresh_every`` steps (the barriers then move
    by the increments of the whole block) and updated by Sherman-Morrison in
    between. With ``candidates`` set, each block only scores that many rows,
    drawn at random from the unselected ones.
    """
    N, m = V.shape
    par = _bss_parameters(K, m)
    t = N / par["inv_t"]
    A = np.zeros((m, m))
    avail = np.ones(N, dtype=bool)
    chosen: list[int] = []
    picked: list[np.ndarray] = []
    B = refresh_every
    step = i_block = steps = 0
    while step < K:
        if i_block == steps:
            if picked:
                X = np.array(picked)
                A += t * (X.T @ X)
            steps, i_block = min(B, K - step), 0
            lam, Q = np.linalg.eigh(A)
            # barriers sit where the schedule puts them at the end of the block
            l = min(par["l0"] + (step + steps) * par["delta_l"], lam[0] - 1e-9 * (1 + abs(lam[0])))
            u = max(par["u0"] + (step + steps) * par["delta_u"], lam[-1] + 1e-9 * (1 + abs(lam[-1])))
            dl, du = 1 / (lam - l), 1 / (u - lam)
            cand = np.flatnonzero(avail)
            if candidates is not None and len(cand) > candidates:
                cand = np.sort(rng.choice(cand, candidates, replace=False))
            Uc = V[cand] @ W
            P2 = Uc @ Q
            P2 *= P2
            al, bl, au = P2 @ dl, P2 @ (dl * dl), P2 @ du
            del P2
            Ml0 = (Q * dl) @ Q.T
            Mu0 = (Q * du) @ Q.T
            # within a block Ml = Ml0 - Y^T diag(cy) Y and Mu = Mu0 + Z^T diag(cz) Z
            Y, Z = np.empty((steps, m)), np.empty((steps, m))
            cy, cz = np.empty(steps), np.empty(steps)
            free = np.ones(len(cand), dtype=bool)
            picked = []
        decrease = t * bl / (1 + t * al)
        decrease[(t * au >= 1) | ~free] = -np.inf
        best = int(np.argmax(decrease))
        if decrease[best] == -np.inf:
            if i_block == 0:
                raise SubsamplingFailure("every candidate crosses the upper barrier")
            steps = i_block  # end the block early and refresh
            continue
        x = Uc[best]
        picked.append(x)
        if i_block + 1 < steps:
            k = i_block
            Yk, Zk = Y[:k], Z[:k]
            y = Ml0 @ x - Yk.T @ (cy[:k] * (Yk @ x))
            z = Mu0 @ x + Zk.T @ (cz[:k] * (Zk @ x))
            my = Ml0 @ y - Yk.T @ (cy[:k] * (Yk @ y))
            cl = t / (1 + t * (x @ y))
            cu = t / (1 - t * (x @ z))
            R = Uc @ np.column_stack([y, my, z])
            r0, r2 = R[:, 0], R[:, 2]
            al -= cl * r0 * r0
            bl += cl * r0 * (cl * (y @ y) * r0 - 2 * R[:, 1])
            au += cu * r2 * r2
            Y[k], cy[k], Z[k], cz[k] = y, cl, z, cu
        free[best] = False
        avail[cand[best]] = False
        chosen.append(int(cand[best]))
        i_block += 1
        step += 1
    return chosen


def weighted_rows(family: PolynomialFamily, basis: IndexSet, plan: SamplePlan) -> np.ndarray:
    """Rows ``sqrt(omega_i) phi(y_i)`` of the weighted design."""
    return np.sqrt(plan.weights)[:, None] * eval_tensor_batch(family, basis.indices, plan.points)


def subsample(plan: SamplePlan, family: PolynomialFamily, basis: IndexSet, target: int | None = None, *,
              gamma_low: float = GAMMA_LOW, gamma_high: float = GAMMA_HIGH, pool_floor: float = 0.5,
              candidates: int | None = None, refresh_every: int | None = None) -> SamplePlan:
    """Reduce an i.i.d. pool to ``target`` points with a well-conditioned Gram matrix.

    The result carries weights ``(target / N) / rho(y_i)`` where ``N`` is the pool
    size, so that ``L^T W L / target`` is the Gram matrix normalized like the
    pool's.

    Args:
        candidates: Rows scored per refresh block (all unselected rows if None).
        refresh_every: Greedy steps between eigen-decompositions of the
            selected Gram matrix (default ``max(1, m // 16)``).

    Raises:
        TargetTooSmall: if ``target < len(basis)``.
        IllConditionedInput: if the pool's Gram matrix has smallest eigenvalue
            below ``pool_floor``.
        SubsamplingFailure: if the selected Gram matrix misses
            ``[gamma_low, gamma_high]``.
    """
    m = len(basis)
    N = len(plan)
    if plan.scheme != IID_FOR_SUBSAMPLING:
        raise ValueError("subsampling expects a pool drawn with scheme IID_For_Subsampling")
    if target is None:
        target = math.ceil(1.2 * m)
    if target < m:
        raise TargetTooSmall(f"target {target} is below the basis size {m}")
    rho = plan.density if plan.density is not None else 1.0 / (plan.weights / plan.weight_scale)
    V = weighted_rows(family, basis, plan) / math.sqrt(plan.weight_scale)
    G = V.T @ V / N
    lam, Q = np.linalg.eigh(G)
    if lam[0] < pool_floor:
        raise IllConditionedInput(f"pool Gram matrix has lambda_min = {lam[0]:.3g} < {pool_floor}", float(lam[0]))
    if N <= target:
        chosen = np.arange(N)
    else:
        W = (Q / np.sqrt(lam)) @ Q.T / math.sqrt(N)
        if refresh_every is None:
            refresh_every = max(1, m // 16)
        rng = _block_rng(plan.seed, _STREAM_CANDIDATES, 0) if candidates else None
        chosen = _two_barrier_select(V, W, target, candidates=candidates,
                                     refresh_every=max(1, int(refresh_every)), rng=rng)
        chosen = np.sort(chosen)
    K = len(chosen)
    scale = K / N
    sub = V[chosen]
    ev = np.linalg.eigvalsh(sub.T @ sub / K)
    if ev[0] < gamma_low or ev[-1] > gamma_high:
        raise SubsamplingFailure(
            f"selected Gram spectrum [{ev[0]:.3g}, {ev[-1]:.3g}] misses [{gamma_low:.3g}, {gamma_high:.3g}]")
    return SamplePlan(plan.points[chosen], scale / rho[chosen], SUBSAMPLED_SCHEME_II, plan.seed, m, scale,
                      rho[chosen])
