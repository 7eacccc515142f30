"""Macrorealism witnesses over sequences of dichotomized detections.

Two witnesses are computed from the post-selected event probabilities
of one, two and three cascaded ports:

* the three-time Leggett-Garg combination
      K = C(1,2) + C(2,3) - C(1,3),
  where C(p,q) is the two-port correlator of x/y events; any
  macrorealistic account of the beam obeys K <= 1, so the engine
  reports the maximum of K over the three analyzer angles.

* a no-signaling-in-time overlap
      V = sum_b sqrt(P_b * P'_b)
  between event distributions with and without an earlier
  (non-selected) measurement; V = 1 exactly when the earlier port does
  not disturb the later statistics, so the engine reports the minimum
  of V over angles.

Both extremizations scan a uniform angle lattice on [0, pi) first and
then polish the best lattice points with Nelder-Mead simplex descent.
Grid scans run vectorized over whole angle axes; the simplex polish
uses the scalar recursion.  Ties between equally extremal angle tuples
resolve to the lexicographically smallest tuple, which keeps reports
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import minimize

from .cascade import FockInput, _grid_port, _ScalarPort
from .events import EventLabel, Scheme, event_log_probs
from .numerics import NEG_INF

__all__ = [
    "EmptyPostSelection",
    "NotEnoughPhotons",
    "AngleGrid",
    "WitnessReport",
    "PROBABILITY_FLOOR",
    "bhattacharyya",
    "correlation",
    "lgi_k",
    "kmax",
    "nsit_dists_two",
    "v12",
    "v123",
]

X = EventLabel.X
Y = EventLabel.Y

# Denominators below this are treated as an empty post-selection rather
# than risking 0/0; deterministic error over NaN propagation.
PROBABILITY_FLOOR = 1e-300
_FLOOR_LOG = math.log(PROBABILITY_FLOOR)

PI = math.pi


class EmptyPostSelection(Exception):
    """No outcome survives the post-selection; the witness is undefined."""


class NotEnoughPhotons(Exception):
    """The input cannot feed the requested number of detection events."""


@dataclass(frozen=True, slots=True)
class AngleGrid:
    """Uniform lattice theta_k = k pi / resolution on [0, pi)."""

    resolution: int = 60

    def __post_init__(self):
        if self.resolution < 8:
            raise ValueError(f"grid resolution must be at least 8, got {self.resolution}")

    def points(self) -> np.ndarray:
        return np.arange(self.resolution) * (PI / self.resolution)

    @property
    def spacing(self) -> float:
        return PI / self.resolution


@dataclass(frozen=True, slots=True)
class WitnessReport:
    value: float
    angles: tuple[float, ...]
    refined: bool
    evaluations: int


def _check_r(r: float) -> None:
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {r}")


def bhattacharyya(p: Mapping, q: Mapping) -> float:
    """Overlap sum_k sqrt(p_k q_k); missing keys count as zero."""
    keys = set(p) | set(q)
    return math.fsum(math.sqrt(p.get(k, 0.0) * q.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# Correlators and K.
# ---------------------------------------------------------------------------


def _corr_from_logs(lxx: float, lxy: float, lyx: float, lyy: float) -> float:
    top = max(lxx, lxy, lyx, lyy)
    if top == NEG_INF:
        raise EmptyPostSelection("all four event pairs have zero probability")
    exx = math.exp(lxx - top)
    exy = math.exp(lxy - top)
    eyx = math.exp(lyx - top)
    eyy = math.exp(lyy - top)
    den = exx + exy + eyx + eyy
    if top + math.log(den) < _FLOOR_LOG:
        raise EmptyPostSelection("post-selected pair probability below floor")
    return (exx + eyy - exy - eyx) / den


def _corr_pair(s: Scheme, inp: FockInput, pa: _ScalarPort, pb: _ScalarPort) -> float:
    lp = event_log_probs(s, inp, [pa, pb])
    return _corr_from_logs(lp[(X, X)], lp[(X, Y)], lp[(Y, X)], lp[(Y, Y)])


def correlation(theta_p: float, theta_q: float, s: Scheme, inp: FockInput, r: float) -> float:
    """Two-port x/y event correlator at analyzer angles (theta_p, theta_q)."""
    _check_r(r)
    return _corr_pair(s, inp, _ScalarPort(theta_p, r), _ScalarPort(theta_q, r))


def lgi_k(t1: float, t2: float, t3: float, s: Scheme, inp: FockInput, r: float) -> float:
    """K = C(t1,t2) + C(t2,t3) - C(t1,t3); ports are identical, so each
    correlator is its own two-port run at the given angle pair."""
    _check_r(r)
    p1 = _ScalarPort(t1, r)
    p2 = _ScalarPort(t2, r)
    p3 = _ScalarPort(t3, r)
    return _corr_pair(s, inp, p1, p2) + _corr_pair(s, inp, p2, p3) - _corr_pair(s, inp, p1, p3)


def _broadcast_all(arrs, shape):
    return [np.broadcast_to(np.asarray(a, dtype=float), shape) for a in arrs]


def _corr_table(s: Scheme, inp: FockInput, r: float, thetas: np.ndarray) -> np.ndarray:
    """C(theta_p, theta_q) on the full lattice; NaN marks empty cells."""
    g = thetas.size
    ports = [_grid_port(thetas, r, 0, 2), _grid_port(thetas, r, 1, 2)]
    lp = event_log_probs(s, inp, ports)
    lxx, lxy, lyx, lyy = _broadcast_all(
        [lp[(X, X)], lp[(X, Y)], lp[(Y, X)], lp[(Y, Y)]], (g, g)
    )
    top = np.maximum(np.maximum(lxx, lxy), np.maximum(lyx, lyy))
    with np.errstate(all="ignore"):
        exx = np.where(lxx == NEG_INF, 0.0, np.exp(lxx - top))
        exy = np.where(lxy == NEG_INF, 0.0, np.exp(lxy - top))
        eyx = np.where(lyx == NEG_INF, 0.0, np.exp(lyx - top))
        eyy = np.where(lyy == NEG_INF, 0.0, np.exp(lyy - top))
        den = exx + exy + eyx + eyy
        total_log = top + np.log(np.where(den > 0.0, den, 1.0))
        valid = (top > NEG_INF) & (den > 0.0) & (total_log >= _FLOOR_LOG)
        c = np.where(valid, (exx + eyy - exy - eyx) / np.where(den > 0.0, den, 1.0), np.nan)
    return c


def _normalize_angles(x) -> tuple[float, ...]:
    return tuple(float(v) % PI for v in x)


def _polish(objective, starts, spacing: float):
    """Nelder-Mead descent from each start; returns candidate list and
    total function evaluations.  Candidates are (value, angles)."""
    cands = []
    evals = 0
    dim = len(starts[0]) if starts else 0
    for x0 in starts:
        x0 = np.asarray(x0, dtype=float)
        simplex = [x0]
        for d in range(dim):
            v = x0.copy()
            v[d] += 0.5 * spacing
            simplex.append(v)
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options=dict(
                initial_simplex=np.asarray(simplex),
                xatol=1e-6,
                fatol=1e-9,
                maxfev=1500,
            ),
        )
        evals += int(res.nfev)
        if math.isfinite(res.fun):
            cands.append((float(res.fun), _normalize_angles(res.x)))
    return cands, evals


def _pick_best(cands):
    """Smallest objective value; ties go to the smallest angle tuple."""
    return min(cands, key=lambda c: (c[0], c[1]))


def _top_lattice_starts(values_flat: np.ndarray, shape, axes, count: int):
    """Indices of the `count` smallest finite entries, first occurrences
    first, mapped to angle tuples."""
    order = np.argsort(values_flat, kind="stable")
    starts = []
    for idx in order[:count]:
        if not math.isfinite(values_flat[idx]):
            break
        starts.append(tuple(axes[d][i] for d, i in enumerate(np.unravel_index(idx, shape))))
    return starts


def kmax(
    s: Scheme,
    inp: FockInput,
    r: float,
    grid: AngleGrid | None = None,
    refine: bool = True,
    polish_starts: int = 5,
) -> WitnessReport:
    """Maximum of K over the three analyzer angles.

    Builds the lattice correlator table once, scans every (i, j, k)
    triple by lookup, then polishes the best lattice points. Lattice
    cells with empty post-selection are skipped; the witness is
    undefined only when every cell is empty.
    """
    _check_r(r)
    grid = grid or AngleGrid()
    th = grid.points()
    c = _corr_table(s, inp, r, th)
    k_cube = c[:, :, None] + c[None, :, :] - c[:, None, :]
    evals = k_cube.size
    flat = np.where(np.isnan(k_cube), -np.inf, k_cube).reshape(-1)
    if not np.isfinite(flat).any():
        raise EmptyPostSelection(
            f"no angle triple yields accepted events for |{inp.n},{inp.m}> under the scheme"
        )
    starts = _top_lattice_starts(-flat, k_cube.shape, (th, th, th), polish_starts)
    best_idx = int(np.argmax(flat))
    i, j, k0 = np.unravel_index(best_idx, k_cube.shape)
    cands = [(-float(flat[best_idx]), _normalize_angles((th[i], th[j], th[k0])))]

    if refine:

        def objective(x):
            try:
                return -lgi_k(x[0], x[1], x[2], s, inp, r)
            except EmptyPostSelection:
                return math.inf

        polished, nfev = _polish(objective, starts, grid.spacing)
        cands.extend(polished)
        evals += nfev

    val, angles = _pick_best(cands)
    return WitnessReport(value=-val, angles=angles, refined=refine, evaluations=evals)


# ---------------------------------------------------------------------------
# No-signaling-in-time overlaps.
# ---------------------------------------------------------------------------


def nsit_dists_two(t1: float, t2: float, s: Scheme, inp: FockInput, r: float):
    """Event distributions at angle t2 without and with a non-selected
    port at t1: ({x: , y: }, {x: , y: })."""
    _check_r(r)
    p1 = _ScalarPort(t1, r)
    p2 = _ScalarPort(t2, r)
    lp1 = event_log_probs(s, inp, [p2])
    lx, ly = lp1[(X,)], lp1[(Y,)]
    norm1 = _logadd(lx, ly)
    if norm1 < _FLOOR_LOG:
        raise EmptyPostSelection("single-port event probability below floor")
    lp2 = event_log_probs(s, inp, [p1, p2])
    mx = _logadd(lp2[(X, X)], lp2[(Y, X)])
    my = _logadd(lp2[(X, Y)], lp2[(Y, Y)])
    norm2 = _logadd(mx, my)
    if norm2 < _FLOOR_LOG:
        raise EmptyPostSelection("two-port event probability below floor")
    no_port = {X: math.exp(lx - norm1), Y: math.exp(ly - norm1)}
    with_port = {X: math.exp(mx - norm2), Y: math.exp(my - norm2)}
    return no_port, with_port


def _logadd(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    top = a if a > b else b
    return top + math.log(math.exp(a - top) + math.exp(b - top))


def _v12_value(t1: float, t2: float, s: Scheme, inp: FockInput, r: float) -> float:
    no_port, with_port = nsit_dists_two(t1, t2, s, inp, r)
    return bhattacharyya(no_port, with_port)


def v12(
    s: Scheme,
    inp: FockInput,
    r: float,
    grid: AngleGrid | None = None,
    refine: bool = True,
) -> WitnessReport:
    """Minimum over (t1, t2) of the overlap between single-port event
    distributions with and without the earlier port."""
    _check_r(r)
    grid = grid or AngleGrid()
    th = grid.points()
    g = th.size

    lp1 = event_log_probs(s, inp, [_grid_port(th, r, 0, 1)])
    l1x, l1y = _broadcast_all([lp1[(X,)], lp1[(Y,)]], (g,))
    norm1 = np.logaddexp(l1x, l1y)

    lp2 = event_log_probs(s, inp, [_grid_port(th, r, 0, 2), _grid_port(th, r, 1, 2)])
    mx, my = _broadcast_all(
        [np.logaddexp(lp2[(X, X)], lp2[(Y, X)]), np.logaddexp(lp2[(X, Y)], lp2[(Y, Y)])],
        (g, g),
    )
    norm2 = np.logaddexp(mx, my)

    with np.errstate(all="ignore"):
        v = np.sqrt(np.exp(l1x - norm1)[None, :] * np.exp(mx - norm2)) + np.sqrt(
            np.exp(l1y - norm1)[None, :] * np.exp(my - norm2)
        )
        valid = (norm1 >= _FLOOR_LOG)[None, :] & (norm2 >= _FLOOR_LOG)
    flat = np.where(valid, v, np.inf).reshape(-1)
    evals = flat.size
    if not np.isfinite(flat).any():
        raise EmptyPostSelection(
            f"no angle pair yields accepted events for |{inp.n},{inp.m}> under the scheme"
        )
    starts = _top_lattice_starts(flat, (g, g), (th, th), 5)
    best_idx = int(np.argmin(flat))
    i, j = np.unravel_index(best_idx, (g, g))
    cands = [(float(flat[best_idx]), _normalize_angles((th[i], th[j])))]

    if refine:

        def objective(x):
            try:
                return _v12_value(x[0], x[1], s, inp, r)
            except EmptyPostSelection:
                return math.inf

        polished, nfev = _polish(objective, starts, grid.spacing)
        cands.extend(polished)
        evals += nfev

    val, angles = _pick_best(cands)
    return WitnessReport(value=val, angles=angles, refined=refine, evaluations=evals)


def _v123_value(t1: float, t2: float, t3: float, s: Scheme, inp: FockInput, r: float) -> float:
    p1 = _ScalarPort(t1, r)
    p2 = _ScalarPort(t2, r)
    p3 = _ScalarPort(t3, r)
    base = event_log_probs(s, inp, [p2, p3])
    norm_b = _logsum4(base[(X, X)], base[(X, Y)], base[(Y, X)], base[(Y, Y)])
    if norm_b < _FLOOR_LOG:
        raise EmptyPostSelection("two-port baseline probability below floor")
    full = event_log_probs(s, inp, [p1, p2, p3])
    marg = {
        (b, cl): _logadd(full[(X, b, cl)], full[(Y, b, cl)])
        for b in (X, Y)
        for cl in (X, Y)
    }
    norm_f = _logsum4(*marg.values())
    if norm_f < _FLOOR_LOG:
        raise EmptyPostSelection("three-port marginal probability below floor")
    total = 0.0
    for bc in ((X, X), (X, Y), (Y, X), (Y, Y)):
        total += math.sqrt(math.exp(base[bc] - norm_b) * math.exp(marg[bc] - norm_f))
    return total


def _logsum4(a, b, c, d) -> float:
    return _logadd(_logadd(a, b), _logadd(c, d))


def v123(
    s: Scheme,
    inp: FockInput,
    r: float,
    grid: AngleGrid | None = None,
    refine: bool = True,
) -> WitnessReport:
    """Minimum over (t1, t2, t3) of the overlap between two-port event
    distributions with and without the earliest port, whose outcome is
    marginalized out."""
    _check_r(r)
    need = 3 * s.min_detected
    if inp.total < need:
        raise NotEnoughPhotons(
            f"three detections need at least {need} photons, |{inp.n},{inp.m}> has {inp.total}"
        )
    grid = grid or AngleGrid()
    th = grid.points()
    g = th.size

    p2 = _grid_port(th, r, 0, 2)
    p3 = _grid_port(th, r, 1, 2)
    base = event_log_probs(s, inp, [p2, p3])
    pairs = ((X, X), (X, Y), (Y, X), (Y, Y))
    base_bc = dict(zip(pairs, _broadcast_all([base[p] for p in pairs], (g, g))))
    norm_b = np.logaddexp(
        np.logaddexp(base_bc[(X, X)], base_bc[(X, Y)]),
        np.logaddexp(base_bc[(Y, X)], base_bc[(Y, Y)]),
    )
    with np.errstate(all="ignore"):
        p_bc = {bc: np.exp(base_bc[bc] - norm_b) for bc in pairs}
    valid_b = norm_b >= _FLOOR_LOG

    cube = np.empty((g, g, g))
    for idx, t1 in enumerate(th):
        full = event_log_probs(s, inp, [_ScalarPort(float(t1), r), p2, p3])
        marg = {
            bc: np.logaddexp(
                np.broadcast_to(np.asarray(full[(X,) + bc], dtype=float), (g, g)),
                np.broadcast_to(np.asarray(full[(Y,) + bc], dtype=float), (g, g)),
            )
            for bc in pairs
        }
        norm_f = np.logaddexp(
            np.logaddexp(marg[(X, X)], marg[(X, Y)]),
            np.logaddexp(marg[(Y, X)], marg[(Y, Y)]),
        )
        with np.errstate(all="ignore"):
            v = sum(np.sqrt(p_bc[bc] * np.exp(marg[bc] - norm_f)) for bc in pairs)
            valid = valid_b & (norm_f >= _FLOOR_LOG)
        cube[idx] = np.where(valid, v, np.inf)

    flat = cube.reshape(-1)
    evals = flat.size
    if not np.isfinite(flat).any():
        raise EmptyPostSelection(
            f"no angle triple yields accepted events for |{inp.n},{inp.m}> under the scheme"
        )
    starts = _top_lattice_starts(flat, (g, g, g), (th, th, th), 5)
    best_idx = int(np.argmin(flat))
    i, j, k0 = np.unravel_index(best_idx, (g, g, g))
    cands = [(float(flat[best_idx]), _normalize_angles((th[i], th[j], th[k0])))]

    if refine:

        def objective(x):
            try:
                return _v123_value(x[0], x[1], x[2], s, inp, r)
            except EmptyPostSelection:
                return math.inf

        polished, nfev = _polish(objective, starts, grid.spacing)
        cands.extend(polished)
        evals += nfev

    val, angles = _pick_best(cands)
    return WitnessReport(value=val, angles=angles, refined=refine, evaluations=evals)
