"""Recovery experiments over a grid of sample budgets and rate fitting."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .basis import PolynomialFamily, eval_tensor_batch
from .config import Config, ConfigError
from .errors import DegenerateInput, IllConditionedInput
from .indexing import (
    AffineWeights,
    AlgebraicRho,
    Approximant,
    GeometricRho,
    IndexSet,
    LognormalWeights,
    WeightSpec,
    legendre_c,
    normalized,
    smallest_m,
    unit_c,
)
from .least_squares import assemble_design, gram_diagnostics, solve_bochner
from .pde import CoefficientField, FemMesh, bochner_error_mc, hat_field, sine_field, solve_fem_batch
from .sampling import IID_FOR_SUBSAMPLING, IID_SCHEME_I, SamplePlan, build_nu, draw_samples, subsample

TARGETS = ("synthetic_scalar", "synthetic_bochner", "pde_lognormal", "pde_affine")
EXACT_TOL = 1e-8


def is_pde(cfg: Config) -> bool:
    return cfg["experiment.target"].startswith("pde")


def build_field(cfg: Config) -> CoefficientField:
    kind = cfg["experiment.target"].split("_", 1)[1] if is_pde(cfg) else cfg["field.kind"]
    make = {"sine": sine_field, "hats": hat_field}.get(cfg["field.psi"])
    if make is None:
        raise ConfigError(f"unknown field.psi {cfg['field.psi']!r}")
    return make(kind, cfg["field.J"], cfg["field.kappa"], cfg["field.theta"], cfg["field.abar"])


def build_family(cfg: Config) -> PolynomialFamily:
    if is_pde(cfg):
        return build_field(cfg).family
    name = cfg["basis.family"]
    if name == "hermite":
        return PolynomialFamily.hermite()
    if name == "jacobi":
        return PolynomialFamily.jacobi(cfg["basis.a"], cfg["basis.b"])
    raise ConfigError(f"unknown basis.family {name!r}")


def build_spec(cfg: Config) -> WeightSpec:
    dims = cfg["field.J"] if is_pde(cfg) else (cfg["weights.dims"] or None)
    if cfg["weights.rho"] == "geometric":
        rho = GeometricRho(cfg["weights.rho_base"], cfg["weights.rho_ratio"], dims)
    elif cfg["weights.rho"] == "algebraic":
        rho = AlgebraicRho(cfg["weights.rho_scale"], cfg["weights.rho_power"], dims)
    else:
        raise ConfigError(f"unknown weights.rho {cfg['weights.rho']!r}")
    q = cfg["weights.q"]
    if cfg["weights.kind"] == "lognormal":
        spec = LognormalWeights(cfg["weights.eta"], rho, q)
    elif cfg["weights.kind"] == "affine":
        c = {"legendre": legendre_c, "unit": unit_c}.get(cfg["weights.c"])
        if c is None:
            raise ConfigError(f"unknown weights.c {cfg['weights.c']!r}")
        spec = AffineWeights(rho, c, q)
    else:
        raise ConfigError(f"unknown weights.kind {cfg['weights.kind']!r}")
    return normalized(spec) if cfg["weights.normalize"] else spec


def validate(cfg: Config) -> None:
    if cfg["experiment.target"] not in TARGETS:
        raise ConfigError(f"experiment.target must be one of {TARGETS}")
    if cfg["experiment.scheme"] not in ("i", "ii"):
        raise ConfigError("experiment.scheme must be 'i' or 'ii'")
    grid = cfg["experiment.n_grid"]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 2:
        raise ConfigError("experiment.n_grid must be strictly increasing and start at 2 or more")
    if not 0 < cfg["weights.q"] < 2:
        raise ConfigError("weights.q must lie in (0, 2)")
    if cfg["experiment.d"] < 1:
        raise ConfigError("experiment.d must be positive")


def derived_seed(*keys: int) -> int:
    """Deterministic 63-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint64)[0] >> np.uint64(1))


def basis_size(n: int, scheme: str, cfg: Config) -> int:
    """``m`` for sample budget ``n``: ``floor(n / (log_factor log n))`` or ``n``."""
    if scheme == "ii":
        return n
    return max(1, math.floor(n / (cfg["sampling.log_factor"] * math.log(n))))


def synth_function(spec: WeightSpec, active_set: IndexSet, seed: int, d: int = 1) -> np.ndarray:
    """Random element of the unit ball of the weighted space on ``active_set``.

    Returns:
        Coefficients of shape (len(active_set), d) with
        ``sum_s sigma_s**2 |f_s|**2 = 1``.
    """
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((len(active_set), d))
    g /= math.sqrt(float(np.sum(g * g)))
    return g / active_set.sigma_array()[:, None]


def make_plan(family: PolynomialFamily, spec: WeightSpec, basis: IndexSet, n: int, scheme: str, seed: int,
              J: int, cfg: Config) -> SamplePlan:
    """Draw the sample plan of scheme (i) or (ii) for budget ``n``.

    Points get at least ``J`` coordinates, more if the density's tail needs them.
    """
    m = len(basis)
    nu = build_nu(family, spec, m, cfg["sampling.tail_tol"])
    J = max(J, nu.max_dim)
    if scheme == "i":
        plan = draw_samples(nu, math.ceil(cfg["sampling.c1"] * n), seed, J, IID_SCHEME_I)
        diag = gram_diagnostics(assemble_design(family, basis, plan))
        if diag["lambda_min"] < cfg["sampling.lambda_floor"]:
            raise IllConditionedInput(f"lambda_min = {diag['lambda_min']:.3g}", diag["lambda_min"])
        return plan
    pool = draw_samples(nu, math.ceil(cfg["sampling.pool_factor"] * n * math.log(n)), seed, J,
                        IID_FOR_SUBSAMPLING)
    return subsample(pool, family, basis, math.ceil(cfg["sampling.c2"] * n),
                     pool_floor=cfg["sampling.lambda_floor"],
                     candidates=cfg["sampling.candidates"] or None,
                     refresh_every=cfg["sampling.refresh"] or None)


@dataclass
class Row:
    n: int
    m: int
    samples_used: int
    lambda_min: float
    rmse: float
    stderr: float
    status: str


@dataclass
class RateReport:
    """Per-budget errors and the fitted log-log slope."""

    rows: list[Row]
    fitted_slope: float | None
    slope_ci: tuple[float, float] | None
    theory_slope: float
    settings: dict = field(default_factory=dict)

    COLUMNS = ("n", "m", "samples_used", "lambda_min", "rmse", "stderr", "status")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(self.COLUMNS)
        for r in self.rows:
            writer.writerow([r.n, r.m, r.samples_used, repr(r.lambda_min), repr(r.rmse), repr(r.stderr), r.status])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "rows": [dict(zip(self.COLUMNS, (r.n, r.m, r.samples_used, r.lambda_min, r.rmse, r.stderr, r.status)))
                     for r in self.rows],
            "fitted_slope": self.fitted_slope,
            "slope_ci": list(self.slope_ci) if self.slope_ci else None,
            "theory_slope": self.theory_slope,
            "settings": self.settings,
        }

    def dumps_json(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def fit_slope(points) -> dict:
    """Least-squares line through ``(log n, log rmse)`` with a 95% interval for the slope."""
    pts = [(float(n), float(e)) for n, e in points]
    if len(pts) < 3:
        raise DegenerateInput("at least three points are needed")
    if any(n <= 0 or e <= 0 or not math.isfinite(e) for n, e in pts):
        raise DegenerateInput("n and rmse must be positive and finite")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    if np.ptp(x) == 0:
        raise DegenerateInput("all n are equal")
    res = stats.linregress(x, y)
    half = stats.t.ppf(0.975, len(pts) - 2) * res.stderr
    return {"slope": float(res.slope), "intercept": float(res.intercept),
            "ci": (float(res.slope - half), float(res.slope + half))}


@dataclass
class Problem:
    """Everything shared by the per-budget runs of one configuration."""

    cfg: Config
    family: PolynomialFamily
    spec: WeightSpec
    scheme: str
    seed: int
    active: IndexSet | None = None
    target: np.ndarray | None = None
    fem: CoefficientField | None = None
    mesh: FemMesh | None = None


def prepare(cfg: Config, scheme: str | None = None, seed: int | None = None) -> Problem:
    validate(cfg)
    scheme = scheme or cfg["experiment.scheme"]
    seed = cfg["experiment.seed"] if seed is None else seed
    prob = Problem(cfg, build_family(cfg), build_spec(cfg), scheme, seed)
    if is_pde(cfg):
        prob.fem = build_field(cfg)
        prob.mesh = FemMesh(cfg["mesh.nh"])
    else:
        grid = cfg["experiment.n_grid"] + ([cfg["experiment.n"]] if cfg["experiment.n"] else [])
        m_max = max(basis_size(n, scheme, cfg) for n in grid)
        prob.active = smallest_m(prob.spec, cfg["experiment.active_factor"] * m_max)
        d = cfg["experiment.d"] if cfg["experiment.target"] == "synthetic_bochner" else 1
        prob.target = synth_function(prob.spec, prob.active, derived_seed(seed, 0x5EED), d)
    return prob


@dataclass
class Recovery:
    approx: Approximant
    plan: SamplePlan
    row: Row


def problem_basis(prob: Problem, n: int) -> tuple[IndexSet, int]:
    """Basis for budget ``n`` and the number of point coordinates the target needs."""
    m = basis_size(n, prob.scheme, prob.cfg)
    if prob.fem is not None:
        return smallest_m(prob.spec, m), prob.fem.J
    return prob.active[:m], max(prob.active.max_dim, 1)


def _attempt(prob: Problem, n: int, seed: int, status: str) -> Recovery:
    cfg = prob.cfg
    basis, J = problem_basis(prob, n)
    m = len(basis)
    plan = make_plan(prob.family, prob.spec, basis, n, prob.scheme, seed, J, cfg)
    design = assemble_design(prob.family, basis, plan)
    lam = gram_diagnostics(design)["lambda_min"]
    if prob.fem is not None:
        values = solve_fem_batch(prob.fem, plan.points, cfg["rhs.constant"], prob.mesh)
        approx = solve_bochner(design, values)
        err = bochner_error_mc(approx, prob.fem, cfg["rhs.constant"], prob.mesh, cfg["experiment.test_count"],
                               derived_seed(prob.seed, 0x7E57), J)
        rmse, stderr = err["rmse"], err["stderr"]
    else:
        values = eval_tensor_batch(prob.family, prob.active.indices, plan.points) @ prob.target
        approx = solve_bochner(design, values)
        diff = approx.coefficients - prob.target[:m]
        rmse = math.sqrt(float(np.sum(diff * diff) + np.sum(prob.target[m:] ** 2)))
        stderr = 0.0
        if rmse <= EXACT_TOL:
            status = "exact"
    return Recovery(approx, plan, Row(n, m, len(plan), lam, rmse, stderr, status))


def recover_once(prob: Problem, n: int) -> Recovery | Row:
    """Run one budget; redraw once on an ill-conditioned plan.

    Returns the recovery, or a failure row if the redraw is ill-conditioned too.
    """
    try:
        return _attempt(prob, n, derived_seed(prob.seed, n), "ok")
    except IllConditionedInput:
        pass
    try:
        return _attempt(prob, n, derived_seed(prob.seed, n, 1), "redrawn")
    except IllConditionedInput as exc:
        lam = exc.lambda_min if exc.lambda_min is not None else math.nan
        return Row(n, basis_size(n, prob.scheme, prob.cfg), 0, lam, math.nan, math.nan, "ill_conditioned")


def run_recovery_experiment(cfg: Config, *, scheme: str | None = None, seed: int | None = None,
                            threads: int = 1) -> RateReport:
    """Recover the configured target at every budget of ``experiment.n_grid`` and fit the rate."""
    prob = prepare(cfg, scheme, seed)

    def job(n):
        out = recover_once(prob, n)
        return out if isinstance(out, Row) else out.row

    grid = cfg["experiment.n_grid"]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(job, grid))
    else:
        rows = [job(n) for n in grid]
    usable = [(r.n, r.rmse) for r in rows if r.status in ("ok", "redrawn") and r.rmse > 0]
    slope, ci = None, None
    if len(usable) >= 3:
        fit = fit_slope(usable)
        slope, ci = fit["slope"], fit["ci"]
    settings = {
        "scheme": prob.scheme,
        "seed": prob.seed,
        "log_factor": cfg["sampling.log_factor"],
        "pool_factor": cfg["sampling.pool_factor"],
        "c1": cfg["sampling.c1"],
        "c2": cfg["sampling.c2"],
        "candidates": cfg["sampling.candidates"],
        "refresh": cfg["sampling.refresh"],
    }
    return RateReport(rows, slope, ci, -1.0 / cfg["weights.q"], settings)


def compare_schemes(report_i: RateReport, report_ii: RateReport, share: float = 0.7) -> float:
    """Fraction of common budgets where scheme (ii) is at least as accurate as scheme (i).

    A ``UserWarning`` is issued when the fraction is below ``share``; this is a
    soft check, never an error.
    """
    errs_i = {r.n: r.rmse for r in report_i.rows if r.status in ("ok", "redrawn", "exact")}
    pairs = [(errs_i[r.n], r.rmse) for r in report_ii.rows
             if r.n in errs_i and r.status in ("ok", "redrawn", "exact")]
    if not pairs:
        return math.nan
    frac = sum(b <= a for a, b in pairs) / len(pairs)
    if frac < share:
        warnings.warn(f"scheme (ii) beat scheme (i) at only {frac:.0%} of the budgets", stacklevel=2)
    return frac
