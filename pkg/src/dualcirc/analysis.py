"""Ensemble statistics, scaling diagnostics, and collapse fitting.

Everything here is a pure function over plain records and arrays, shared
by all simulation backends: disorder-ensemble aggregation, finite-size
scaling-law comparison, critical-point collapse fits of the form
|S(x) - S(x_c)| = F((x - x_c) L^(1/nu)) (or S/S_ref = F(...)), and
purification-time extraction from entropy-vs-time series.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from dualcirc.circuits import SpecError

_GRID_NU = np.arange(0.1, 3.0 + 1e-9, 0.05)
_GRID_XC_POINTS = 41
_DESCENT_TOL = 1e-4
_DEGENERACY_BAND = 0.10


# ---------------------------------------------------------------------------
# Ensemble aggregation.


@dataclass(frozen=True)
class EnsemblePoint:
    mean: float
    sem: float
    count: int


@dataclass(frozen=True)
class EnsembleResult:
    """Mean and standard error per aggregation key, order-independent."""

    points: dict

    def mean(self, key) -> float:
        return self.points[key].mean

    def sem(self, key) -> float:
        return self.points[key].sem


def aggregate(records, keys=("param_value", "L", "t", "observable")) -> EnsembleResult:
    """Group records by ``keys`` and compute mean and standard error.

    Records are mappings with at least the key fields and a ``value``.
    The standard error uses the unbiased sample variance; groups of one
    record get sem 0.
    """
    records = list(records)
    if not records:
        raise SpecError("cannot aggregate an empty record set")
    groups: dict = {}
    for rec in records:
        key = tuple(rec[k] for k in keys)
        groups.setdefault(key, []).append(float(rec["value"]))
    points = {}
    for key, vals in groups.items():
        arr = np.asarray(vals)
        n = len(arr)
        sem = float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        points[key] = EnsemblePoint(float(arr.mean()), sem, n)
    return EnsembleResult(points)


# ---------------------------------------------------------------------------
# Scaling collapse.


@dataclass(frozen=True)
class CollapseFit:
    x_c: float
    nu: float
    residual: float
    x_c_err: float
    nu_err: float
    n_boot: int
    low_confidence: bool = False


def _as_curves(curves) -> list:
    """Normalize input to a list of (L, x array, y array), sorted in x."""
    if isinstance(curves, dict):
        items = [(L, xy[0], xy[1]) for L, xy in curves.items()]
    else:
        items = [(L, x, y) for L, x, y in curves]
    out = []
    for L, x, y in items:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
            raise SpecError("each curve needs matching 1D x and y with >= 2 points")
        order = np.argsort(x)
        out.append((float(L), x[order], y[order]))
    if len({L for L, _, _ in out}) < 3:
        raise SpecError("collapse needs at least 3 system sizes")
    return sorted(out, key=lambda c: c[0])


def _collapse_residual(curves, x_c: float, nu: float, mode: str) -> tuple:
    """Mean squared deviation of rescaled curves from one another.

    Each curve is rescaled to u = (x - x_c) L^(1/nu) with ordinate
    w = |y - y(x_c)| (difference mode) or w = y (ratio mode); every other
    curve is linearly interpolated onto each curve's u points over the
    overlapping range and squared differences are averaged.
    """
    rescaled = []
    for L, x, y in curves:
        u = (x - x_c) * L ** (1.0 / nu)
        if mode == "difference":
            w = np.abs(y - np.interp(x_c, x, y))
        else:
            w = y
        rescaled.append((u, w))
    total = 0.0
    count = 0
    for i, (u_i, w_i) in enumerate(rescaled):
        for j, (u_j, w_j) in enumerate(rescaled):
            if i == j:
                continue
            lo = max(u_i[0], u_j[0])
            hi = min(u_i[-1], u_j[-1])
            sel = (u_i >= lo) & (u_i <= hi)
            if not sel.any():
                continue
            diff = w_i[sel] - np.interp(u_i[sel], u_j, w_j)
            total += float(diff @ diff)
            count += int(sel.sum())
    if count == 0:
        return math.inf, 0
    return total / count, count


def _fit_once(curves, mode: str, window) -> tuple:
    xc_grid = np.linspace(window[0], window[1], _GRID_XC_POINTS)
    best = (math.inf, xc_grid[0], _GRID_NU[0])
    for xc in xc_grid:
        for nu in _GRID_NU:
            r, _ = _collapse_residual(curves, xc, nu, mode)
            if r < best[0]:
                best = (r, float(xc), float(nu))

    def objective(p):
        xc, nu = p
        if nu < 0.02 or not window[0] - 0.5 <= xc <= window[1] + 0.5:
            return math.inf
        return _collapse_residual(curves, xc, nu, mode)[0]

    res = scipy.optimize.minimize(
        objective,
        [best[1], best[2]],
        method="Nelder-Mead",
        options={"xatol": _DESCENT_TOL, "fatol": _DESCENT_TOL * best[0] + 1e-300},
    )
    if np.isfinite(res.fun) and res.fun <= best[0]:
        return float(res.fun), float(res.x[0]), float(res.x[1])
    return best


def collapse_fit(
    curves,
    mode: str = "difference",
    n_boot: int = 100,
    seed: int = 0,
    window=None,
) -> CollapseFit:
    """Fit (x_c, nu) by collapsing curves onto a common master curve.

    ``curves`` maps L -> (x, y) (or is an iterable of (L, x, y)); ``mode``
    selects the |y - y(x_c)| difference ansatz or the plain-ratio ansatz.
    A coarse grid scan (fixed grid for reproducibility) seeds a local
    descent; uncertainties come from bootstrap resampling of the points
    of each curve.
    """
    if mode not in ("difference", "ratio"):
        raise SpecError(f"unknown collapse mode {mode!r}")
    curve_list = _as_curves(curves)
    lo = max(x[0] for _, x, _ in curve_list)
    hi = min(x[-1] for _, x, _ in curve_list)
    if not lo < hi:
        raise SpecError("curves have no overlapping x-range")
    if window is None:
        window = (lo, hi)
    residual, x_c, nu = _fit_once(curve_list, mode, window)
    low_confidence = not math.isfinite(residual)

    rng = np.random.default_rng(seed)
    boot_xc, boot_nu = [], []
    for _ in range(n_boot):
        sample = []
        for L, x, y in curve_list:
            idx = np.unique(rng.integers(0, len(x), size=len(x)))
            if len(idx) < 2:
                idx = np.arange(len(x))
            sample.append((L, x[idx], y[idx]))

        def objective(p):
            xc, nv = p
            if nv < 0.02:
                return math.inf
            return _collapse_residual(sample, xc, nv, mode)[0]

        res = scipy.optimize.minimize(
            objective,
            [x_c, nu],
            method="Nelder-Mead",
            options={"xatol": _DESCENT_TOL, "fatol": 1e-12},
        )
        if np.isfinite(res.fun):
            boot_xc.append(float(res.x[0]))
            boot_nu.append(float(res.x[1]))
    x_c_err = float(np.std(boot_xc)) if len(boot_xc) > 1 else math.inf
    nu_err = float(np.std(boot_nu)) if len(boot_nu) > 1 else math.inf
    return CollapseFit(
        x_c=x_c,
        nu=nu,
        residual=residual,
        x_c_err=x_c_err,
        nu_err=nu_err,
        n_boot=len(boot_xc),
        low_confidence=low_confidence,
    )


# ---------------------------------------------------------------------------
# Entanglement scaling-law comparison.


@dataclass(frozen=True)
class ScalingReport:
    best: str
    residuals: dict
    coefficients: dict
    degenerate: tuple
    conclusive: bool

    def prefers(self, model_a: str, model_b: str) -> bool:
        """True when model_a fits strictly better than model_b."""
        return self.residuals[model_a] < self.residuals[model_b]


def _fit_linear(design: np.ndarray, s: np.ndarray) -> tuple:
    coef, *_ = np.linalg.lstsq(design, s, rcond=None)
    resid = s - design @ coef
    return coef, float(np.sqrt(np.mean(resid**2)))


def scaling_diagnostics(sizes, entropies) -> ScalingReport:
    """Compare S(L) against {const, log L, L^gamma, L, L log L, L^2}.

    Each model is least-squares fitted; the report carries per-model RMS
    residuals (normalized by the RMS of S), every model within 10% of the
    best, and a ``conclusive`` flag that is False when the data cannot
    separate the leading models — no unique law is asserted in that case.
    """
    L = np.asarray(sizes, dtype=float)
    s = np.asarray(entropies, dtype=float)
    if L.ndim != 1 or L.shape != s.shape or len(L) < 4:
        raise SpecError("need entropies for at least 4 sizes")
    ones = np.ones_like(L)
    scale = float(np.sqrt(np.mean(s**2))) or 1.0
    residuals, coefficients = {}, {}

    designs = {
        "const": np.stack([ones], axis=1),
        "log": np.stack([np.log(L), ones], axis=1),
        "linear": np.stack([L, ones], axis=1),
        "LlogL": np.stack([L * np.log(L), ones], axis=1),
        "quadratic": np.stack([L**2, ones], axis=1),
    }
    for name, design in designs.items():
        coef, rms = _fit_linear(design, s)
        residuals[name] = rms / scale
        coefficients[name] = tuple(float(c) for c in coef)

    # Pure power law S = a L^gamma, fitted in log-log space when S > 0.
    if np.all(s > 0):
        coef, _ = _fit_linear(np.stack([np.log(L), ones], axis=1), np.log(s))
        gamma, log_a = float(coef[0]), float(coef[1])
        pred = math.exp(log_a) * L**gamma
        residuals["power"] = float(np.sqrt(np.mean((s - pred) ** 2))) / scale
        coefficients["power"] = (math.exp(log_a), gamma)

    best = min(residuals, key=residuals.get)
    floor = residuals[best]
    degenerate = tuple(
        sorted(m for m, r in residuals.items() if r <= floor + _DEGENERACY_BAND * max(floor, 1e-12))
    )
    return ScalingReport(
        best=best,
        residuals=residuals,
        coefficients=coefficients,
        degenerate=degenerate,
        conclusive=len(degenerate) == 1,
    )


# ---------------------------------------------------------------------------
# Curve crossings.


def crossing_points(curves) -> list:
    """Pairwise crossing locations of y(x) curves keyed by system size.

    Curves are linearly interpolated on their overlapping x-range; for
    each size pair the first sign change of the difference is bisected
    to a crossing estimate.  Returns [(L_small, L_large, x_cross), ...]
    for the pairs that do cross.
    """
    if isinstance(curves, dict):
        raw = [(L, xy[0], xy[1]) for L, xy in curves.items()]
    else:
        raw = list(curves)
    items = []
    for L, x, y in raw:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        order = np.argsort(x)
        items.append((float(L), x[order], y[order]))
    if len(items) < 2:
        raise SpecError("need at least 2 curves to cross")
    items.sort(key=lambda c: c[0])
    out = []
    for (l1, x1, y1), (l2, x2, y2) in itertools.combinations(items, 2):
        lo, hi = max(x1[0], x2[0]), min(x1[-1], x2[-1])
        if not lo < hi:
            continue
        xs = np.linspace(lo, hi, 512)
        d = np.interp(xs, x1, y1) - np.interp(xs, x2, y2)
        idx = np.nonzero(np.diff(np.sign(d)) != 0)[0]
        if not len(idx):
            continue
        k = idx[0]
        slope = d[k + 1] - d[k]
        x0 = xs[k] if slope == 0 else xs[k] - d[k] * (xs[k + 1] - xs[k]) / slope
        out.append((l1, l2, float(x0)))
    return out


# ---------------------------------------------------------------------------
# Purification time.


def purification_time(series, threshold: float = 0.65):
    """First period index where the entropy series drops below threshold.

    Returns len(series) as a sentinel when the series never purifies.
    """
    arr = np.asarray(series, dtype=float)
    below = np.nonzero(arr < threshold)[0]
    return int(below[0]) if below.size else len(arr)
