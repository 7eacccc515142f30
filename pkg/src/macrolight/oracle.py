"""Brute-force reference for the cascade amplitudes.

States are kept as dense dictionaries of Fock coefficients and every
port is applied by literally expanding the beam-splitter and analyzer
binomials in linear arithmetic, then projecting onto the counted
reflected state.  Nothing here shares the closed-form coefficient
algebra or the log-domain plumbing of :mod:`.cascade`; agreement
between the two paths is checked in the test suite.

Scale is deliberately small (total photons <= 12): with float64 linear
arithmetic and dense tensors that is both fast and comfortably inside
the exactly-representable range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cascade import FockInput, Outcome, PortConfig, _as_outcome
from .numerics import CapacityError

__all__ = [
    "ORACLE_MAX_PHOTONS",
    "DenseTwoModeState",
    "from_fock",
    "oracle_port",
    "port_outcome_map",
    "oracle_sequence",
]

ORACLE_MAX_PHOTONS = 12


@dataclass
class DenseTwoModeState:
    """Dense two-mode state: (n_x, n_y) -> complex amplitude."""

    coefficients: dict[tuple[int, int], complex] = field(default_factory=dict)
    cutoff: int = ORACLE_MAX_PHOTONS

    def norm_squared(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.coefficients.values())

    def max_total(self) -> int:
        return max((nx + ny for nx, ny in self.coefficients), default=0)


def from_fock(inp: FockInput, cutoff: int = ORACLE_MAX_PHOTONS) -> DenseTwoModeState:
    if inp.total > cutoff:
        raise CapacityError(
            f"oracle input |{inp.n},{inp.m}> exceeds cutoff {cutoff}"
        )
    return DenseTwoModeState({(inp.n, inp.m): 1.0 + 0.0j}, cutoff=cutoff)


@lru_cache(maxsize=512)
def _split_tensor(dim: int, t: float, r: float) -> np.ndarray:
    """S[kept, refl, n]: coefficient of |kept>|refl> when one mode of
    |n> passes the beam splitter, from the binomial expansion of
    (t a + r b)^n term by term."""
    s = np.zeros((dim, dim, dim))
    for n in range(dim):
        for j in range(n + 1):
            s[n - j, j, n] = math.sqrt(math.comb(n, j)) * t ** (n - j) * r**j
    return s


@lru_cache(maxsize=512)
def _analyzer_tensor(dim: int, theta: float) -> np.ndarray:
    """R[wx, wy, jx, jy] = <wx, wy| analyzer rotation |jx, jy>.

    Expands (c bx - s by)^jx (s bx + c by)^jy monomial by monomial and
    collects the (wx, wy) coefficient; photon number is conserved, so
    entries vanish off the wx + wy == jx + jy blocks.
    """
    c = math.cos(theta)
    s = math.sin(theta)
    out = np.zeros((dim, dim, dim, dim))
    for jx in range(dim):
        for jy in range(dim):
            if jx + jy >= dim:
                continue
            for i in range(jx + 1):
                for l in range(jy + 1):
                    wy = i + l
                    wx = jx + jy - wy
                    coeff = (
                        math.comb(jx, i) * c ** (jx - i) * (-s) ** i
                        * math.comb(jy, l) * s ** (jy - l) * c**l
                    )
                    out[wx, wy, jx, jy] += coeff * math.sqrt(
                        math.factorial(wx) * math.factorial(wy)
                        / (math.factorial(jx) * math.factorial(jy))
                    )
    return out


def _expand(state: DenseTwoModeState, port: PortConfig):
    """Apply one port to every basis ket at once.

    Returns (kept_x_dim, kept_y_dim, out) where out[wx, wy, ax, ay] is
    the joint amplitude of counting (wx, wy) while transmitting
    |ax, ay>.
    """
    total = state.max_total()
    if total > min(state.cutoff, ORACLE_MAX_PHOTONS):
        raise CapacityError(
            f"oracle state holds {total} photons, above cutoff "
            f"{min(state.cutoff, ORACLE_MAX_PHOTONS)}"
        )
    if not state.coefficients:
        return np.zeros((1, 1, 1, 1), dtype=complex)
    nx_max = max(nx for nx, _ in state.coefficients)
    ny_max = max(ny for _, ny in state.coefficients)
    psi = np.zeros((nx_max + 1, ny_max + 1), dtype=complex)
    for (nx, ny), amp in state.coefficients.items():
        psi[nx, ny] = amp
    dim = max(nx_max, ny_max) + 1
    sx = _split_tensor(dim, port.t, port.r)[: nx_max + 1, : nx_max + 1, : nx_max + 1]
    sy = _split_tensor(dim, port.t, port.r)[: ny_max + 1, : ny_max + 1, : ny_max + 1]
    rot = _analyzer_tensor(nx_max + ny_max + 1, port.theta)
    # kept/reflected split per mode, then rotate and read the counters
    tmp = np.einsum("ajn,nm->ajm", sx, psi)
    phi = np.einsum("ajm,bkm->ajbk", tmp, sy)
    out = np.einsum("ajbk,wvjk->wvab", phi, rot[:, :, : nx_max + 1, : ny_max + 1])
    return out


def port_outcome_map(state: DenseTwoModeState, port: PortConfig):
    """All outcomes of one port at once: Outcome -> (post state, prob).

    Post states stay unnormalized, so probabilities of chained outcomes
    multiply out to joint probabilities of the whole sequence.
    """
    out = _expand(state, port)
    wx_dim, wy_dim, ax_dim, ay_dim = out.shape
    result = {}
    for wx in range(wx_dim):
        for wy in range(wy_dim):
            block = out[wx, wy]
            prob = float(np.sum(np.abs(block) ** 2))
            if prob == 0.0:
                continue
            coeffs = {
                (ax, ay): complex(block[ax, ay])
                for ax in range(ax_dim)
                for ay in range(ay_dim)
                if block[ax, ay] != 0.0
            }
            result[Outcome(wx, wy)] = (
                DenseTwoModeState(coeffs, cutoff=state.cutoff),
                prob,
            )
    return result


def oracle_port(state: DenseTwoModeState, port: PortConfig, w) -> tuple[DenseTwoModeState, float]:
    """Unnormalized post state and bare probability of counts w."""
    w = _as_outcome(w)
    hit = port_outcome_map(state, port).get(w)
    if hit is None:
        return DenseTwoModeState({}, cutoff=state.cutoff), 0.0
    return hit


def oracle_sequence(inp: FockInput, steps) -> float:
    """Joint probability of an ordered outcome sequence.

    `steps` is a list of (PortConfig, Outcome) pairs applied in order.
    """
    state = from_fock(inp)
    prob = 1.0
    for port, w in steps:
        state, prob = oracle_port(state, port, w)
        if prob == 0.0:
            return 0.0
    return prob
