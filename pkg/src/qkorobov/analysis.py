"""Test corpus, error norms, convergence studies, and resource formulas.

The corpus members are boundary-vanishing products with closed-form order-2d
mixed derivatives and exact seminorms, so the coefficient decay bounds and
the dual-oracle coefficient checks can be evaluated without any fitted
constants.  Error norms follow fixed deterministic grids: the sup norm uses
a dyadic grid that supersamples every interpolant cell 16x (kinks of the
error sit on dyadic points only), finite p uses composite Gauss-Legendre
for d <= 2 and a seeded Monte Carlo estimate for d = 3.

Resource bounds implement the epsilon-complexity formulas with every big-O
constant set to 1; outputs are relative units good for ordering and
monotonicity statements only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .lcu import assemble_lcu, plan_from_terms
from .simulator import resource_report
from .sparsegrid import (
    GridIndex,
    SurplusMap,
    chebyshev_expansion,
    grid_count,
    integral_coefficient,
    surplus_coefficients,
)

MC_SAMPLES = 200_000


# ---------------------------------------------------------------------------
# corpus

@dataclass(frozen=True)
class KorobovTestFunction:
    """A test function with exact mixed-derivative seminorms.

    ``f`` and ``mixed_derivative`` accept (m, d) arrays; ``seminorm_inf`` and
    ``seminorm_2`` are the exact sup and L2 norms of the order-2d mixed
    derivative d^{2d} f / dx_1^2 ... dx_d^2.
    """

    name: str
    d: int
    f: Callable[[np.ndarray], np.ndarray]
    mixed_derivative: Callable[[np.ndarray], np.ndarray]
    seminorm_inf: float
    seminorm_2: float


@dataclass(frozen=True)
class _Factor:
    expr: str
    f: Callable
    dd: Callable
    sup: float
    l2: float


FACTORS = {
    "x(1-x)": _Factor(
        "x(1-x)",
        lambda t: t * (1.0 - t),
        lambda t: -2.0 * np.ones_like(t),
        sup=2.0,
        l2=2.0,
    ),
    "sin(pi x)": _Factor(
        "sin(pi x)",
        lambda t: np.sin(np.pi * t),
        lambda t: -np.pi ** 2 * np.sin(np.pi * t),
        sup=np.pi ** 2,
        l2=np.pi ** 2 / np.sqrt(2.0),
    ),
    "x^2(1-x)": _Factor(
        "x^2(1-x)",
        lambda t: t * t * (1.0 - t),
        lambda t: 2.0 - 6.0 * t,
        sup=4.0,
        l2=2.0,
    ),
}


def separable_function(name: str, factor_names: Sequence[str]) -> KorobovTestFunction:
    """Product of one corpus factor per coordinate."""
    factors = [FACTORS[fn] for fn in factor_names]
    d = len(factors)

    def f(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for j, fac in enumerate(factors):
            out = out * fac.f(x[..., j])
        return out

    def dd(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for j, fac in enumerate(factors):
            out = out * fac.dd(x[..., j])
        return out

    return KorobovTestFunction(
        name=name,
        d=d,
        f=f,
        mixed_derivative=dd,
        seminorm_inf=float(np.prod([fac.sup for fac in factors])),
        seminorm_2=float(np.prod([fac.l2 for fac in factors])),
    )


def _asym_cubic() -> KorobovTestFunction:
    # f = x(1-x) * x^2(1-x) = x^3(1-x)^2; f'' = 6x - 24x^2 + 20x^3,
    # maximal at x=1 (|f''(1)| = 2); ||f''||_2^2 = 12/35.
    return KorobovTestFunction(
        name="asym-cubic",
        d=1,
        f=lambda x: np.asarray(x)[..., 0] ** 3 * (1.0 - np.asarray(x)[..., 0]) ** 2,
        mixed_derivative=lambda x: (
            lambda t: 6.0 * t - 24.0 * t ** 2 + 20.0 * t ** 3
        )(np.asarray(x)[..., 0]),
        seminorm_inf=2.0,
        seminorm_2=math.sqrt(12.0 / 35.0),
    )


def corpus() -> list[KorobovTestFunction]:
    """The verification corpus; names repeat across dimensions."""
    funcs = [
        separable_function("prod-quad", ["x(1-x)"] * 1),
        separable_function("prod-quad", ["x(1-x)"] * 2),
        separable_function("prod-quad", ["x(1-x)"] * 3),
        separable_function("prod-sin", ["sin(pi x)"] * 1),
        separable_function("prod-sin", ["sin(pi x)"] * 2),
        _asym_cubic(),
    ]
    return funcs


def corpus_function(name: str, d: int) -> KorobovTestFunction:
    for fn in corpus():
        if fn.name == name and fn.d == d:
            return fn
    known = sorted({(fn.name, fn.d) for fn in corpus()})
    raise KeyError(f"no corpus function {name!r} with d={d}; have {known}")


# ---------------------------------------------------------------------------
# error norms

def _dyadic_grid(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, 2 ** (n + 4) + 1)


def _gl_composite(n: int) -> tuple[np.ndarray, np.ndarray]:
    # 8-point Gauss-Legendre on each of 2^(n+2) equal subintervals of [0,1]
    base, base_w = np.polynomial.legendre.leggauss(8)
    cells = 2 ** (n + 2)
    width = 1.0 / cells
    lo = np.arange(cells) * width
    pts = (lo[:, None] + width * (base[None, :] + 1.0) / 2.0).ravel()
    wts = np.tile(width / 2.0 * base_w, cells)
    return pts, wts


def _iter_blocks(axes: list[np.ndarray], d: int, budget: int = 1 << 21):
    """Yield (m, d) point blocks of the tensor grid without materialising it."""
    tail = int(np.prod([len(a) for a in axes[1:]])) if d > 1 else 1
    step = max(1, budget // max(1, tail))
    first = axes[0]
    for a in range(0, len(first), step):
        chunk = [first[a : a + step]] + axes[1:]
        mesh = np.meshgrid(*chunk, indexing="ij")
        yield np.stack([m.ravel() for m in mesh], axis=1)


def _grid_error(f: Callable, smap: SurplusMap, p: float, axes: list[np.ndarray],
                weights: list[np.ndarray] | None, budget: int = 1 << 21) -> float:
    """Error against a SurplusMap over a tensor grid, chunked on axis 0."""
    d = smap.d
    tail = int(np.prod([len(a) for a in axes[1:]])) if d > 1 else 1
    step = max(1, budget // max(1, tail))
    worst, total = 0.0, 0.0
    first = axes[0]
    for a in range(0, len(first), step):
        sub_axes = [first[a : a + step]] + axes[1:]
        mesh = np.meshgrid(*sub_axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        diff = np.abs(
            np.asarray(f(pts), dtype=float).reshape([len(ax) for ax in sub_axes])
            - smap.evaluate_grid(sub_axes)
        )
        if p == math.inf:
            worst = max(worst, float(diff.max()))
            continue
        block = diff ** p
        for j in range(d - 1, 0, -1):
            block = block @ weights[j]
        total += float(weights[0][a : a + step] @ block)
    return worst if p == math.inf else total ** (1.0 / p)


def lp_error(f: Callable, g, p, d: int, n: int, seed: int = 0) -> float:
    """||f - g||_p over [0,1]^d at the resolution tied to level ``n``.

    ``p`` is 2 <= p < inf or inf (the string "inf" and numpy inf work too).
    ``f`` takes (m, d) arrays; ``g`` may be the same or a SurplusMap, which
    enables the fast tensor-grid path.  d = 3 with finite p falls back to a
    seeded Monte Carlo estimate.
    """
    p = float("inf") if p in ("inf", np.inf, math.inf) else float(p)
    if p != math.inf and p < 2:
        raise ValueError("p must be in [2, inf]")
    is_map = isinstance(g, SurplusMap)
    if p == math.inf:
        axes = [_dyadic_grid(n)] * d
        if is_map:
            return _grid_error(f, g, p, axes, None)
        worst = 0.0
        for pts in _iter_blocks(axes, d):
            worst = max(worst, float(np.abs(f(pts) - g(pts)).max()))
        return worst
    if d >= 3:
        g_fn = g.evaluate_batch if is_map else g
        return lp_error_mc(f, g_fn, p, d, seed=seed)[0]
    pts_1d, wts_1d = _gl_composite(n)
    if is_map:
        return _grid_error(f, g, p, [pts_1d] * d, [wts_1d] * d)
    if d == 1:
        diff = np.abs(f(pts_1d[:, None]) - g(pts_1d[:, None])) ** p
        return float(np.sum(diff * wts_1d)) ** (1.0 / p)
    return _lp_error_2d(f, g, p, pts_1d, wts_1d)


def _lp_error_2d(f, g, p, pts_1d, wts_1d, budget: int = 1 << 21) -> float:
    total = 0.0
    m = len(pts_1d)
    step = max(1, budget // m)
    for a in range(0, m, step):
        xs = pts_1d[a : a + step]
        mesh = np.meshgrid(xs, pts_1d, indexing="ij")
        pts = np.stack([mm.ravel() for mm in mesh], axis=1)
        diff = np.abs(f(pts) - g(pts)) ** p
        diff = diff.reshape(len(xs), m)
        total += float(wts_1d[a : a + step] @ diff @ wts_1d)
    return total ** (1.0 / p)


def lp_error_mc(f: Callable, g: Callable, p: float, d: int,
                samples: int = MC_SAMPLES, seed: int = 0) -> tuple[float, float]:
    """Seeded Monte Carlo L^p error and its standard error (used for d = 3)."""
    rng = np.random.default_rng(seed)
    pts = rng.random((samples, d))
    vals = np.abs(f(pts) - g(pts)) ** p
    mean = float(vals.mean())
    se_mean = float(vals.std(ddof=1) / math.sqrt(samples))
    value = mean ** (1.0 / p)
    stderr = se_mean / p * mean ** (1.0 / p - 1.0) if mean > 0 else se_mean
    return value, stderr


# ---------------------------------------------------------------------------
# convergence studies

@dataclass
class ConvergenceRow:
    n: int
    N: int
    error_inf: float | None
    error_2: float | None
    error_p: float | None = None


@dataclass
class ConvergenceStudy:
    function: str
    d: int
    p: float
    rows: list[ConvergenceRow]
    slope: float | None
    raw_slope: float | None
    slope_stderr: float | None
    shape_constant: float | None

    def errors_for_p(self) -> list[float | None]:
        if self.p == math.inf:
            return [r.error_inf for r in self.rows]
        if self.p == 2.0:
            return [r.error_2 for r in self.rows]
        return [r.error_p for r in self.rows]


def _fit_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    a = np.vstack([x, np.ones_like(x)]).T
    coef, res, _, _ = np.linalg.lstsq(a, y, rcond=None)
    dof = len(x) - 2
    if dof > 0 and res.size:
        var = res[0] / dof / np.sum((x - x.mean()) ** 2)
        return float(coef[0]), float(math.sqrt(var))
    return float(coef[0]), 0.0


def convergence_study(func: KorobovTestFunction, p, n_range: Sequence[int],
                      norms: Sequence[str] = ("inf", "2"),
                      seed: int = 0) -> ConvergenceStudy:
    """Errors and fitted decay rate of the interpolant over ``n_range``.

    The gated ``slope`` comes from the log-corrected model
    err ~ c * N^s * log2(N)^{3(d-1)} (for d = 1 this is the plain
    least-squares slope); ``raw_slope`` is always the uncorrected fit.
    Rows with error below 1e-13 or N < 2 are excluded from the fits.
    """
    p = float("inf") if p in ("inf", np.inf, math.inf) else float(p)
    n_values = sorted(n_range)
    if not n_values:
        raise ValueError("n_range must be non-empty")
    rows = []
    for n in n_values:
        smap = surplus_coefficients(func.f, n, func.d)
        err_inf = err_2 = err_p = None
        if "inf" in norms or p == math.inf:
            err_inf = lp_error(func.f, smap, math.inf, func.d, n, seed=seed)
        if "2" in norms or p == 2.0:
            err_2 = lp_error(func.f, smap, 2.0, func.d, n, seed=seed)
        if p not in (math.inf, 2.0):
            err_p = lp_error(func.f, smap, p, func.d, n, seed=seed)
        rows.append(ConvergenceRow(n, grid_count(n, func.d), err_inf, err_2, err_p))

    study = ConvergenceStudy(func.name, func.d, p, rows, None, None, None, None)
    errs = study.errors_for_p()
    keep = [
        (r.N, e)
        for r, e in zip(rows, errs)
        if e is not None and e > 1e-13 and r.N >= 2
    ]
    if len(keep) >= 2:
        x = np.log2([k[0] for k in keep])
        y = np.log2([k[1] for k in keep])
        study.raw_slope, _ = _fit_slope(x, y)
        correction = 3.0 * (func.d - 1) * np.log2(x)
        study.slope, study.slope_stderr = _fit_slope(x, y - correction)
        study.shape_constant = float(
            np.max([e * k ** 2 / np.log2(k) ** (3 * (func.d - 1)) for k, e in keep])
        )
    return study


# ---------------------------------------------------------------------------
# coefficient bound audit

@dataclass
class CoefficientCheck:
    source: GridIndex
    value: float
    bound_inf: float
    bound_2: float

    @staticmethod
    def _ratio(value: float, bound: float) -> float:
        if bound == 0.0:
            # vacuous for the zero function, violation otherwise
            return 0.0 if value == 0.0 else math.inf
        return abs(value) / bound

    @property
    def ratio_inf(self) -> float:
        return self._ratio(self.value, self.bound_inf)

    @property
    def ratio_2(self) -> float:
        return self._ratio(self.value, self.bound_2)


@dataclass
class AuditReport:
    function: str
    d: int
    n: int
    checks: list[CoefficientCheck]
    max_ratio_inf: float
    max_ratio_2: float
    violations: list[tuple[GridIndex, str, float]]

    @property
    def passed(self) -> bool:
        return not self.violations


def local_seminorm_2(mixed_derivative: Callable, g: GridIndex,
                     nodes_per_cell: int = 24) -> float:
    """L2 norm of the mixed derivative over the support of one hat."""
    base, base_w = np.polynomial.legendre.leggauss(nodes_per_cell)
    pts_1d, wts_1d = [], []
    for (lo, hi), node in zip(g.support(), g.node()):
        cells = [(lo, node), (node, hi)]
        p = np.concatenate([(b - a) / 2 * base + (a + b) / 2 for a, b in cells])
        w = np.concatenate([(b - a) / 2 * base_w for a, b in cells])
        pts_1d.append(p)
        wts_1d.append(w)
    mesh = np.meshgrid(*pts_1d, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    wmesh = np.meshgrid(*wts_1d, indexing="ij")
    w = np.prod(np.stack([m.ravel() for m in wmesh], axis=0), axis=0)
    vals = np.asarray(mixed_derivative(pts), dtype=float).reshape(-1)
    return float(math.sqrt(np.sum(w * vals ** 2)))


def coefficient_bound_audit(func: KorobovTestFunction, n: int,
                            scale: float = 1.0) -> AuditReport:
    """Check both decay bounds for every surplus of ``func`` at level ``n``.

    ``scale`` multiplies the computed coefficients and exists as a test hook
    for forcing violations.  Bounds:
      |v| <= 2^(-d - 2||l||_1) * |f|_{2,inf}
      |v| <= 2^(-d) (2/3)^(d/2) 2^(-1.5||l||_1) * |f restricted to supp|_{2,2}
    """
    d = func.d
    smap = surplus_coefficients(func.f, n, d)
    checks = []
    violations = []
    for g, v in smap.items():
        v = v * scale
        l1 = sum(g.level)
        bound_inf = 2.0 ** (-d - 2 * l1) * func.seminorm_inf
        bound_2 = (
            2.0 ** -d * (2.0 / 3.0) ** (d / 2.0) * 2.0 ** (-1.5 * l1)
            * local_seminorm_2(func.mixed_derivative, g)
        )
        check = CoefficientCheck(g, v, bound_inf, bound_2)
        checks.append(check)
        if check.ratio_inf > 1.0 + 1e-12:
            violations.append((g, "inf", check.ratio_inf))
        if check.ratio_2 > 1.0 + 1e-12:
            violations.append((g, "2", check.ratio_2))
    return AuditReport(
        function=func.name,
        d=d,
        n=n,
        checks=checks,
        max_ratio_inf=max((c.ratio_inf for c in checks), default=0.0),
        max_ratio_2=max((c.ratio_2 for c in checks), default=0.0),
        violations=violations,
    )


def dual_oracle_gap(func: KorobovTestFunction, n: int) -> float:
    """Max |stencil surplus - integral-formula surplus| over the index set."""
    smap = surplus_coefficients(func.f, n, func.d)
    return max(
        abs(v - integral_coefficient(func.mixed_derivative, g))
        for g, v in smap.items()
    )


# ---------------------------------------------------------------------------
# Lambert W and resource formulas

def lambert_w(x: float) -> float:
    """Principal-branch W(x) for x >= 0 by Halley iteration from ln(1+x)."""
    x = float(x)
    if x < 0.0:
        raise ValueError("principal branch implemented for x >= 0 only")
    if x == 0.0:
        return 0.0
    w = math.log1p(x)
    for _ in range(50):
        e = math.exp(w)
        resid = w * e - x
        if resid == 0.0:
            break
        wp1 = w + 1.0
        step = resid / (e * wp1 - (w + 2.0) * resid / (2.0 * wp1))
        w -= step
        if abs(step) <= 1e-16 * (1.0 + abs(w)):
            break
    return w


@dataclass(frozen=True)
class ResourceEstimate:
    """Depth/width bounds in relative units (all big-O constants set to 1).

    ``predicted_*`` are the refined forms carrying Lambert's W;
    ``simplified_*`` follow from W(x) <= x and are never smaller.
    ``alpha``/``beta`` are populated only by the general-p form.
    """

    epsilon: float
    d: int
    p: float
    formula: str
    alpha: float | None
    beta: float | None
    lambert_w_value: float
    predicted_depth_bound: float
    predicted_width_bound: float
    simplified_depth_bound: float
    simplified_width_bound: float


def resource_estimate(epsilon: float, d: int, p, formula: str = "auto") -> ResourceEstimate:
    """Evaluate the epsilon-complexity bounds for one (epsilon, d, p).

    ``formula`` picks "p2-inf" (sharp for p in {2, inf}) or "general-p"
    (2 < p < inf); "auto" dispatches on p.  At d = 1 the general-p form
    degenerates to zero bounds (beta = 0 empties the level-count factor).
    """
    epsilon = float(epsilon)
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if d < 1:
        raise ValueError("d must be >= 1")
    p = float("inf") if p in ("inf", np.inf, math.inf) else float(p)
    if p < 2:
        raise ValueError("p must be in [2, inf]")
    if formula == "auto":
        formula = "p2-inf" if p in (2.0, math.inf) else "general-p"
    if formula not in ("p2-inf", "general-p"):
        raise ValueError(f"unknown formula {formula!r}")

    log_eps = math.log2(1.0 / epsilon)
    if formula == "p2-inf":
        if p not in (2.0, math.inf):
            raise ValueError("the p2-inf form covers p in {2, inf} only")
        arg = epsilon ** (-1.0 / d) / d * log_eps ** 1.5
        w = lambert_w(arg)
        depth = d * d * (2.0 * log_eps ** 1.5) ** d / (
            epsilon ** 0.5 * log_eps ** 1.5
        ) * w
        width = 2.0 * d + d * w
        s_depth = d * epsilon ** -(0.5 + 1.0 / d) * (2.0 * log_eps ** 1.5) ** d
        s_width = 2.0 * d + epsilon ** (-1.0 / d) * log_eps ** 1.5
        return ResourceEstimate(
            epsilon, d, p, formula, None, None, w, depth, width, s_depth, s_width
        )

    if not 2.0 <= p < math.inf:
        raise ValueError("the general-p form covers finite p >= 2 only")
    alpha = (3.0 * p - 1.0) / (2.0 * p - 1.0)
    beta = alpha * (d - 1)
    t = beta * math.log2(beta) if beta > 0 else 0.0
    if beta > 0 and t <= 0:
        raise ValueError("the general-p form needs beta > 1 (integer d >= 2)")
    eps_term = epsilon ** (-p / (2.0 * p - 1.0))
    eps_term_d = epsilon ** (-p / (d * (2.0 * p - 1.0)))
    arg = (6.0 * t) ** alpha * alpha ** alpha * eps_term_d * log_eps ** alpha / d
    w = lambert_w(arg)
    depth = (
        d * d * (12.0 * t) ** beta * alpha ** beta * eps_term * log_eps ** beta * w
    )
    width = 2.0 * d + d * w
    s_depth = (
        d
        * (12.0 * t) ** (alpha + beta)
        * alpha ** (alpha + beta)
        * epsilon ** (-(p / (2.0 * p - 1.0)) * (1.0 + 1.0 / d))
        * log_eps ** (alpha + beta)
        * eps_term_d
    )
    s_width = 2.0 * d + (6.0 * t) ** alpha * alpha ** alpha * eps_term_d * log_eps ** alpha
    return ResourceEstimate(
        epsilon, d, p, formula, alpha, beta, w, depth, width, s_depth, s_width
    )


# ---------------------------------------------------------------------------
# depth envelope of the assembled circuits

@dataclass
class EnvelopePoint:
    n: int
    terms: int
    degree_norm: int
    touch_depth: int
    envelope: float

    @property
    def ratio(self) -> float:
        return self.touch_depth / self.envelope


def generic_point(d: int) -> np.ndarray:
    # non-dyadic rationals, inside every level's support
    primes = [3, 7, 11, 13, 17, 19, 23, 29]
    return np.array([(j + 1) / primes[j % len(primes)] for j in range(d)])


def depth_envelope_study(func: KorobovTestFunction, n_values: Sequence[int],
                         x=None) -> tuple[list[EnvelopePoint], float]:
    """touch_depth against (2||n||_1 + dM) log2(max(M, 2)) across levels.

    Returns the per-level points and the fitted constant C (midpoint of the
    min/max ratio); the combination circuit itself (no test ancilla) is
    measured, matching the select-oracle depth statement.
    """
    x = generic_point(func.d) if x is None else np.asarray(x, dtype=float)
    points = []
    for n in n_values:
        smap = surplus_coefficients(func.f, n, func.d)
        kept = [t for t in chebyshev_expansion(smap, x) if t.weight != 0.0]
        plan = plan_from_terms(kept, func.d)
        if plan is None:
            raise ValueError(f"no supported terms at n={n}; pick a generic x")
        m = plan.term_count
        degree_norm = int(sum(sum(t.degrees) for t in kept))
        report = resource_report(assemble_lcu(plan))
        envelope = (2.0 * degree_norm + func.d * m) * math.log2(max(m, 2))
        points.append(EnvelopePoint(n, m, degree_norm, report.touch_depth, envelope))
    ratios = [pt.ratio for pt in points]
    fitted = (max(ratios) + min(ratios)) / 2.0
    return points, fitted
