"""Exact outcome amplitudes for cascaded photon-subtraction ports.

A detection port siphons part of a two-mode beam (x/y polarization) off
a beam splitter of amplitude reflectivity r, rotates the reflected pair
of modes by an analyzer angle theta, and counts photons on both
detectors.  Acting on a Fock input |N, M> (N x-polarized and M
y-polarized photons), a port that fires with counts w = (wx, wy) leaves
the transmitted beam in a superposition over how many of the
omega = wx + wy removed photons came out of the x mode:

    |post> = sum_n  A(n, w) |N - n, M + n - omega>

The closed-form coefficient A implemented in ``_amp_scalar`` collects
the beam-splitter binomials, the analyzer rotation and the projection
onto the counted state.  Cascades of two and three ports are
convolutions of the same coefficient, accumulated here as a running
"chain" keyed by the total number of detected x-mode photons.

Everything is computed in sign/log form (see :mod:`.numerics`); the
chain carries either plain floats or ndarrays, so the same recursion
serves both single configurations and whole analyzer-angle grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import (
    NEG_INF,
    SignedLog,
    _default_table,
    _signed_sum_arrays,
    _ssum,
)

__all__ = [
    "FockInput",
    "PortConfig",
    "Outcome",
    "PostState",
    "amplitude_first",
    "amplitude_second",
    "amplitude_third",
    "prob_one_port",
    "prob_two_port",
    "prob_three_port",
]

PI = math.pi


@dataclass(frozen=True, slots=True)
class FockInput:
    """Input beam |n, m>: n x-polarized and m y-polarized photons."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            raise ValueError(f"photon numbers must be nonnegative, got ({self.n}, {self.m})")
        # keep factorial arguments inside the shared table ceiling
        _default_table(self.n + self.m)

    @property
    def total(self) -> int:
        return self.n + self.m


@dataclass(frozen=True, slots=True)
class PortConfig:
    """One detection port: analyzer angle theta and shared reflectivity r.

    theta is reduced modulo pi on construction; the physics is
    pi-periodic in every analyzer angle (the reduction only changes a
    global sign of the post-selected state).
    """

    theta: float
    r: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"reflectivity must lie in [0, 1], got {self.r}")
        object.__setattr__(self, "theta", float(self.theta) % PI)

    @property
    def t(self) -> float:
        """Transmission amplitude, t = sqrt(1 - r^2)."""
        return math.sqrt(max(0.0, 1.0 - self.r * self.r))


@dataclass(frozen=True, slots=True)
class Outcome:
    """Detector counts (wx, wy) at one port."""

    wx: int
    wy: int

    def __post_init__(self):
        if self.wx < 0 or self.wy < 0:
            raise ValueError(f"detector counts must be nonnegative, got ({self.wx}, {self.wy})")

    @property
    def total(self) -> int:
        return self.wx + self.wy


def _as_outcome(w) -> Outcome:
    if isinstance(w, Outcome):
        return w
    return Outcome(int(w[0]), int(w[1]))


@dataclass(frozen=True)
class PostState:
    """Unnormalized transmitted state after a sequence of detections.

    ``coefficients`` lists (n, amplitude) pairs for the superposition
    sum_n amp_n |N - n, M + n - omega>, where (N, M) is the original
    input and omega the total number of photons detected so far.
    """

    coefficients: list[tuple[int, SignedLog]]
    input: FockInput
    omega: int

    def norm_squared(self) -> float:
        live = [a.logmag for _, a in self.coefficients if a.sign != 0]
        if not live:
            return 0.0
        top = max(live)
        acc = math.fsum(math.exp(2.0 * (lm - top)) for lm in live)
        return math.exp(2.0 * top) * acc


# ---------------------------------------------------------------------------
# Port parameter bundles.
#
# A "port" here is the precomputed sign/log decomposition of (r, t, cos theta,
# sin theta), plus a memo of amplitude evaluations keyed by the integer
# arguments.  _ScalarPort carries floats; _ArrayPort carries ndarrays shaped
# for broadcasting (one angle axis per port), which is what turns the chain
# recursion into whole-grid evaluations.
# ---------------------------------------------------------------------------


class _ScalarPort:
    __slots__ = ("log_r", "log_t", "sign_c", "log_c", "sign_s", "log_s", "cache")

    def __init__(self, theta: float, r: float):
        self.log_r = math.log(r) if r > 0.0 else NEG_INF
        rr = r * r
        self.log_t = 0.5 * math.log1p(-rr) if rr < 1.0 else NEG_INF
        th = float(theta) % PI
        c = math.cos(th)
        s = math.sin(th)
        self.sign_c = 0 if c == 0.0 else (1 if c > 0.0 else -1)
        self.log_c = math.log(abs(c)) if c != 0.0 else NEG_INF
        self.sign_s = 0 if s == 0.0 else (1 if s > 0.0 else -1)
        self.log_s = math.log(abs(s)) if s != 0.0 else NEG_INF
        self.cache: dict = {}


class _ArrayPort:
    __slots__ = ("log_r", "log_t", "sign_c", "log_c", "sign_s", "log_s", "cache", "shape")

    def __init__(self, thetas: np.ndarray, r):
        r_arr = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            self.log_r = np.log(r_arr)
            self.log_t = 0.5 * np.log1p(-r_arr * r_arr)
        th = np.asarray(thetas, dtype=float) % PI
        c = np.cos(th)
        s = np.sin(th)
        self.sign_c = np.sign(c).astype(np.int8)
        self.sign_s = np.sign(s).astype(np.int8)
        with np.errstate(divide="ignore"):
            self.log_c = np.where(c == 0.0, NEG_INF, np.log(np.abs(np.where(c == 0.0, 1.0, c))))
            self.log_s = np.where(s == 0.0, NEG_INF, np.log(np.abs(np.where(s == 0.0, 1.0, s))))
        self.shape = np.broadcast_shapes(th.shape, r_arr.shape)
        self.cache: dict = {}


def _scalar_port(port: PortConfig) -> _ScalarPort:
    return _ScalarPort(port.theta, port.r)


def _grid_port(thetas: np.ndarray, r, axis: int, ndim: int) -> _ArrayPort:
    """Array port whose angle axis sits at position `axis` of an
    ndim-dimensional broadcast result."""
    thetas = np.asarray(thetas, dtype=float)
    shape = [1] * ndim
    shape[axis] = thetas.size
    return _ArrayPort(thetas.reshape(shape), r)


# ---------------------------------------------------------------------------
# Single-port amplitude.
# ---------------------------------------------------------------------------


def _amp_scalar(port: _ScalarPort, n: int, wx: int, wy: int, big_n: int, big_m: int) -> tuple[int, float]:
    """Coefficient of |N-n, M+n-omega> after detecting (wx, wy) on |N, M>.

    Returns (sign, logmag); (0, -inf) for structurally zero terms (index
    out of range or an exactly extinguished parameter).
    """
    key = (n, wx, wy, big_n, big_m)
    hit = port.cache.get(key)
    if hit is not None:
        return hit
    omega = wx + wy
    if n < 0 or n > big_n or omega - n < 0 or omega - n > big_m:
        out = (0, NEG_INF)
        port.cache[key] = out
        return out
    lst = _default_table(big_n + big_m)._list

    pref = 0.0
    e_t = big_n + big_m - omega
    if e_t > 0:
        if port.log_t == NEG_INF:
            port.cache[key] = (0, NEG_INF)
            return (0, NEG_INF)
        pref += e_t * port.log_t
    if omega > 0:
        if port.log_r == NEG_INF:
            port.cache[key] = (0, NEG_INF)
            return (0, NEG_INF)
        pref += omega * port.log_r

    # ln C(N,n) + ln C(M,omega-n) + 0.5 ln[(N-n)!(M+n-omega)! wx! wy! / (N! M!)]
    const = (
        lst[big_n] - lst[n] - lst[big_n - n]
        + lst[big_m] - lst[omega - n] - lst[big_m - omega + n]
        + 0.5 * (lst[big_n - n] + lst[big_m + n - omega] + lst[wx] + lst[wy] - lst[big_n] - lst[big_m])
    )

    m2 = omega - n
    terms = []
    for i in range(max(0, n - wx), min(wy, n) + 1):
        pc = wy + n - 2 * i
        ps = wx - n + 2 * i
        lm = lst[n] - lst[i] - lst[n - i] + lst[m2] - lst[wy - i] - lst[m2 - wy + i]
        sg = -1 if i & 1 else 1
        if pc > 0:
            if port.log_c == NEG_INF:
                continue
            lm += pc * port.log_c
            if pc & 1:
                sg *= port.sign_c
        if ps > 0:
            if port.log_s == NEG_INF:
                continue
            lm += ps * port.log_s
            if ps & 1:
                sg *= port.sign_s
        terms.append((sg, lm))
    sg, lm = _ssum(terms)
    out = (0, NEG_INF) if sg == 0 else (sg, lm + const + pref)
    port.cache[key] = out
    return out


def _amp_array(port: _ArrayPort, n: int, wx: int, wy: int, big_n: int, big_m: int) -> tuple[np.ndarray, np.ndarray]:
    """Vector twin of :func:`_amp_scalar` over the port's parameter arrays."""
    key = (n, wx, wy, big_n, big_m)
    hit = port.cache.get(key)
    if hit is not None:
        return hit
    omega = wx + wy
    zero = (np.zeros(port.shape, dtype=np.int8), np.full(port.shape, NEG_INF))
    if n < 0 or n > big_n or omega - n < 0 or omega - n > big_m:
        port.cache[key] = zero
        return zero
    lst = _default_table(big_n + big_m)._list

    pref = 0.0
    e_t = big_n + big_m - omega
    if e_t > 0:
        pref = pref + e_t * port.log_t
    if omega > 0:
        pref = pref + omega * port.log_r

    const = (
        lst[big_n] - lst[n] - lst[big_n - n]
        + lst[big_m] - lst[omega - n] - lst[big_m - omega + n]
        + 0.5 * (lst[big_n - n] + lst[big_m + n - omega] + lst[wx] + lst[wy] - lst[big_n] - lst[big_m])
    )

    m2 = omega - n
    signs = []
    logmags = []
    for i in range(max(0, n - wx), min(wy, n) + 1):
        pc = wy + n - 2 * i
        ps = wx - n + 2 * i
        lmc = lst[n] - lst[i] - lst[n - i] + lst[m2] - lst[wy - i] - lst[m2 - wy + i]
        sg = np.full(port.shape, -1 if i & 1 else 1, dtype=np.int8)
        lm = np.full(port.shape, lmc)
        if pc > 0:
            lm = lm + pc * port.log_c
            if pc & 1:
                sg = sg * port.sign_c
        if ps > 0:
            lm = lm + ps * port.log_s
            if ps & 1:
                sg = sg * port.sign_s
        signs.append(np.broadcast_to(sg, port.shape))
        logmags.append(np.broadcast_to(lm, port.shape))
    sg, lm = _signed_sum_arrays(signs, logmags)
    lm = lm + (const + pref)
    lm = np.where(sg == 0, NEG_INF, lm)
    out = (sg, lm)
    port.cache[key] = out
    return out


def _amp(port, n: int, wx: int, wy: int, big_n: int, big_m: int):
    if isinstance(port, _ArrayPort):
        return _amp_array(port, n, wx, wy, big_n, big_m)
    return _amp_scalar(port, n, wx, wy, big_n, big_m)


# ---------------------------------------------------------------------------
# Chains: the post-selected coefficient vector after 1..3 ports.
# ---------------------------------------------------------------------------


@dataclass
class _Chain:
    big_n: int
    big_m: int
    omega: int
    # n -> (sign, logmag); floats for scalar chains, ndarrays once any
    # array port has been applied (mixing broadcasts transparently).
    coeffs: dict
    vector: bool = False


def _chain_root(inp: FockInput) -> _Chain:
    return _Chain(inp.n, inp.m, 0, {0: (1, 0.0)}, vector=False)


def _chain_extend(ch: _Chain, w: Outcome, port) -> _Chain:
    """Apply one more port firing with counts w to a running chain."""
    omega_w = w.total
    vector = ch.vector or isinstance(port, _ArrayPort)
    by_s: dict[int, list] = {}
    for n, (sg, lm) in ch.coeffs.items():
        rem_n = ch.big_n - n
        rem_m = ch.big_m + n - ch.omega
        k_lo = max(0, omega_w - rem_m)
        k_hi = min(omega_w, rem_n)
        for k in range(k_lo, k_hi + 1):
            a_sg, a_lm = _amp(port, k, w.wx, w.wy, rem_n, rem_m)
            by_s.setdefault(n + k, []).append((sg * a_sg, lm + a_lm))
    coeffs = {}
    if vector:
        for s, terms in by_s.items():
            c_sg, c_lm = _signed_sum_arrays([t[0] for t in terms], [t[1] for t in terms])
            coeffs[s] = (c_sg, c_lm)
    else:
        for s, terms in by_s.items():
            coeffs[s] = _ssum(terms)
    return _Chain(ch.big_n, ch.big_m, ch.omega + omega_w, coeffs, vector)


def _chain_log_prob(ch: _Chain):
    """log of the bare probability sum_s |coeff_s|^2; -inf when empty.

    Returns a float for scalar chains, an ndarray for vector chains.
    """
    if ch.vector:
        acc = None
        for sg, lm in ch.coeffs.values():
            term = np.where(sg == 0, NEG_INF, 2.0 * lm)
            acc = term if acc is None else np.logaddexp(acc, term)
        if acc is None:
            shape = ()
            return np.full(shape, NEG_INF)
        return acc
    live = [lm for sg, lm in ch.coeffs.values() if sg != 0]
    if not live:
        return NEG_INF
    top = max(live)
    return 2.0 * top + math.log(math.fsum(math.exp(2.0 * (lm - top)) for lm in live))


def _chain_post_state(ch: _Chain, inp: FockInput) -> PostState:
    coeffs = [
        (n, SignedLog(sg, lm))
        for n, (sg, lm) in sorted(ch.coeffs.items())
        if sg != 0
    ]
    return PostState(coefficients=coeffs, input=inp, omega=ch.omega)


# ---------------------------------------------------------------------------
# Public operations.
# ---------------------------------------------------------------------------


def _check_shared_r(ports: Sequence[PortConfig]) -> None:
    rs = {p.r for p in ports}
    if len(rs) > 1:
        raise ValueError(f"all ports must share one reflectivity, got {sorted(rs)}")


def amplitude_first(n: int, w, inp: FockInput, port: PortConfig) -> SignedLog:
    """Post-selection coefficient A_n for a single port firing with counts w."""
    w = _as_outcome(w)
    sg, lm = _amp_scalar(_scalar_port(port), n, w.wx, w.wy, inp.n, inp.m)
    return SignedLog(sg, lm)


def prob_one_port(w, inp: FockInput, port: PortConfig) -> tuple[float, PostState]:
    """Bare probability of counts w at one port, with the leftover state."""
    w = _as_outcome(w)
    ch = _chain_extend(_chain_root(inp), w, _scalar_port(port))
    lp = _chain_log_prob(ch)
    return (math.exp(lp) if lp != NEG_INF else 0.0), _chain_post_state(ch, inp)


def amplitude_second(s: int, w2, inp: FockInput, ports) -> SignedLog:
    """Coefficient B_s after two cascaded ports firing with (w1, w2)."""
    p1, p2 = ports
    _check_shared_r([p1, p2])
    w1, wb = _as_outcome(w2[0]), _as_outcome(w2[1])
    sp1, sp2 = _scalar_port(p1), _scalar_port(p2)
    o1 = w1.total
    terms = []
    for m in range(max(0, o1 - inp.m, s - wb.total), min(o1, inp.n, s) + 1):
        a_sg, a_lm = _amp_scalar(sp1, m, w1.wx, w1.wy, inp.n, inp.m)
        if a_sg == 0:
            continue
        b_sg, b_lm = _amp_scalar(sp2, s - m, wb.wx, wb.wy, inp.n - m, inp.m + m - o1)
        if b_sg == 0:
            continue
        terms.append((a_sg * b_sg, a_lm + b_lm))
    sg, lm = _ssum(terms)
    return SignedLog(sg, lm)


def prob_two_port(w2, inp: FockInput, ports) -> tuple[float, PostState]:
    """Bare probability of the two-port outcome pair w2 = (w1, w2)."""
    p1, p2 = ports
    _check_shared_r([p1, p2])
    ch = _chain_root(inp)
    ch = _chain_extend(ch, _as_outcome(w2[0]), _scalar_port(p1))
    ch = _chain_extend(ch, _as_outcome(w2[1]), _scalar_port(p2))
    lp = _chain_log_prob(ch)
    return (math.exp(lp) if lp != NEG_INF else 0.0), _chain_post_state(ch, inp)


def amplitude_third(t_idx: int, w3, inp: FockInput, ports) -> SignedLog:
    """Coefficient C_t after three cascaded ports firing with (w1, w2, w3)."""
    p1, p2, p3 = ports
    _check_shared_r([p1, p2, p3])
    w1, wb, wc = (_as_outcome(w) for w in w3)
    o12 = w1.total + wb.total
    sp3 = _scalar_port(p3)
    terms = []
    for l in range(max(0, o12 - inp.m, t_idx - wc.total), min(o12, inp.n, t_idx) + 1):
        b = amplitude_second(l, (w1, wb), inp, (p1, p2))
        if b.sign == 0:
            continue
        c_sg, c_lm = _amp_scalar(sp3, t_idx - l, wc.wx, wc.wy, inp.n - l, inp.m + l - o12)
        if c_sg == 0:
            continue
        terms.append((b.sign * c_sg, b.logmag + c_lm))
    sg, lm = _ssum(terms)
    return SignedLog(sg, lm)


def prob_three_port(w3, inp: FockInput, ports) -> float:
    """Bare probability of the three-port outcome triple."""
    p1, p2, p3 = ports
    _check_shared_r([p1, p2, p3])
    ch = _chain_root(inp)
    ch = _chain_extend(ch, _as_outcome(w3[0]), _scalar_port(p1))
    ch = _chain_extend(ch, _as_outcome(w3[1]), _scalar_port(p2))
    ch = _chain_extend(ch, _as_outcome(w3[2]), _scalar_port(p3))
    lp = _chain_log_prob(ch)
    return math.exp(lp) if lp != NEG_INF else 0.0
