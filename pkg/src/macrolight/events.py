"""Dichotomization of detector counts into two-valued events.

A port outcome (wx, wy) is mapped to an event label: ``x`` when the
x detector wins, ``y`` when the y detector wins, or discarded.  Three
families of rules are supported:

* sharp  ``s<w>``    accept exactly (w, 0) as x and (0, w) as y
* fair   ``f<hi>``   majority vote over all counts up to hi
* blurred ``b<lo>-<hi>``  majority vote where each detector must show
  either nothing or a count inside [lo, hi]

Fair is stored as blurred with lo = 1.  Ties and out-of-window counts
are discarded, as is the empty outcome (0, 0).

Event probabilities are post-selected sums of bare cascade
probabilities over all accepted outcome tuples.  The log-domain
worker `event_log_probs` accepts scalar or grid ports and is shared by
the public scalar API and the witness optimizers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from .cascade import (
    FockInput,
    Outcome,
    PortConfig,
    _chain_extend,
    _chain_log_prob,
    _chain_root,
    _check_shared_r,
    _scalar_port,
)
from .numerics import NEG_INF

__all__ = [
    "EventLabel",
    "Scheme",
    "classify",
    "accepted_outcomes",
    "parse_scheme",
    "render_scheme",
    "event_prob_one",
    "event_prob_two",
    "event_prob_three",
]


class EventLabel(Enum):
    X = "x"
    Y = "y"
    DISCARD = "discard"


@dataclass(frozen=True, slots=True)
class Scheme:
    """A dichotomization rule; use the sharp/fair/blurred constructors."""

    kind: str  # "sharp" | "blurred"
    omega: int = 0  # sharp only
    omega_min: int = 0  # blurred only
    omega_max: int = 0  # blurred only

    @staticmethod
    def sharp(omega: int) -> "Scheme":
        if omega < 1:
            raise ValueError(f"sharp scheme needs omega >= 1, got {omega}")
        return Scheme("sharp", omega=omega)

    @staticmethod
    def blurred(omega_min: int, omega_max: int) -> "Scheme":
        if omega_min < 1 or omega_max < omega_min:
            raise ValueError(
                f"blurred scheme needs 1 <= omega_min <= omega_max, got ({omega_min}, {omega_max})"
            )
        return Scheme("blurred", omega_min=omega_min, omega_max=omega_max)

    @staticmethod
    def fair(omega_max: int) -> "Scheme":
        return Scheme.blurred(1, omega_max)

    @property
    def min_detected(self) -> int:
        """Fewest photons a port can consume while still yielding an event."""
        return self.omega if self.kind == "sharp" else self.omega_min


def parse_scheme(text: str) -> Scheme:
    """Parse "s2", "f4" or "b2-4" style scheme strings."""
    m = re.fullmatch(r"s(\d+)", text)
    if m:
        return Scheme.sharp(int(m.group(1)))
    m = re.fullmatch(r"f(\d+)", text)
    if m:
        return Scheme.fair(int(m.group(1)))
    m = re.fullmatch(r"b(\d+)-(\d+)", text)
    if m:
        return Scheme.blurred(int(m.group(1)), int(m.group(2)))
    raise ValueError(f"unrecognized scheme string {text!r} (expected s<w>, f<hi> or b<lo>-<hi>)")


def render_scheme(s: Scheme) -> str:
    if s.kind == "sharp":
        return f"s{s.omega}"
    if s.omega_min == 1:
        return f"f{s.omega_max}"
    return f"b{s.omega_min}-{s.omega_max}"


def classify(w, s: Scheme) -> EventLabel:
    """Event label of one port outcome under scheme s."""
    if isinstance(w, Outcome):
        wx, wy = w.wx, w.wy
    else:
        wx, wy = w
    if s.kind == "sharp":
        if wx == s.omega and wy == 0:
            return EventLabel.X
        if wx == 0 and wy == s.omega:
            return EventLabel.Y
        return EventLabel.DISCARD
    lo, hi = s.omega_min, s.omega_max
    for c in (wx, wy):
        if c != 0 and not lo <= c <= hi:
            return EventLabel.DISCARD
    if wx > wy:
        return EventLabel.X
    if wy > wx:
        return EventLabel.Y
    return EventLabel.DISCARD  # ties, including (0, 0)


@lru_cache(maxsize=4096)
def _accepted_cached(s: Scheme, budget: int | None) -> tuple[tuple[Outcome, EventLabel], ...]:
    out: list[tuple[Outcome, EventLabel]] = []
    if s.kind == "sharp":
        counts = [0, s.omega]
    else:
        counts = [0] + list(range(s.omega_min, s.omega_max + 1))
    for wx in counts:
        for wy in counts:
            if budget is not None and wx + wy > budget:
                continue
            w = Outcome(wx, wy)
            lab = classify(w, s)
            if lab is not EventLabel.DISCARD:
                out.append((w, lab))
    out.sort(key=lambda p: (p[0].wx, p[0].wy))
    return tuple(out)


def accepted_outcomes(s: Scheme, budget: int | None = None) -> list[tuple[Outcome, EventLabel]]:
    """All outcomes a port can accept, with labels, in (wx, wy) order.

    `budget` caps the photons still available; outcomes needing more are
    never enumerated.
    """
    return list(_accepted_cached(s, budget))


def _logsumexp_list(vals: Sequence[float]) -> float:
    live = [v for v in vals if v != NEG_INF]
    if not live:
        return NEG_INF
    top = max(live)
    return top + math.log(math.fsum(math.exp(v - top) for v in live))


def event_log_probs(s: Scheme, inp: FockInput, ports: Sequence) -> dict:
    """log event probabilities for every label tuple over 1..3 ports.

    `ports` are prebuilt _ScalarPort/_ArrayPort bundles sharing one r.
    Scalar ports give float entries, grid ports give ndarrays broadcast
    over the angle axes.  Entries are log of the post-selected bare
    probability; -inf when no outcome tuple survives.
    """
    k = len(ports)
    labels = (EventLabel.X, EventLabel.Y)
    buckets: dict[tuple, list] = {}

    def walk(ch, labs: tuple, depth: int, budget: int):
        if depth == k:
            buckets.setdefault(labs, []).append(_chain_log_prob(ch))
            return
        for w, lab in _accepted_cached(s, budget):
            walk(
                _chain_extend(ch, w, ports[depth]),
                labs + (lab,),
                depth + 1,
                budget - w.total,
            )

    walk(_chain_root(inp), (), 0, inp.total)

    out = {}
    vector = any(getattr(p, "shape", None) is not None for p in ports)

    def all_tuples(depth):
        if depth == 0:
            return [()]
        return [t + (l,) for t in all_tuples(depth - 1) for l in labels]

    for labs in all_tuples(k):
        vals = buckets.get(labs, [])
        if vector:
            acc = None
            for v in vals:
                v = np.asarray(v, dtype=float)
                acc = v if acc is None else np.logaddexp(acc, v)
            out[labs] = acc if acc is not None else np.array(NEG_INF)
        else:
            out[labs] = _logsumexp_list(vals)
    return out


def _label(a) -> EventLabel:
    if isinstance(a, EventLabel):
        return a
    return EventLabel(str(a).lower())


def event_prob_one(a, s: Scheme, inp: FockInput, port: PortConfig) -> float:
    """Post-selected probability of event a at a single port."""
    lp = event_log_probs(s, inp, [_scalar_port(port)])[(_label(a),)]
    return math.exp(lp) if lp != NEG_INF else 0.0


def event_prob_two(ab, s: Scheme, inp: FockInput, ports) -> float:
    """Post-selected probability of the ordered event pair ab."""
    p1, p2 = ports
    _check_shared_r([p1, p2])
    key = tuple(_label(a) for a in ab)
    lp = event_log_probs(s, inp, [_scalar_port(p1), _scalar_port(p2)])[key]
    return math.exp(lp) if lp != NEG_INF else 0.0


def event_prob_three(abc, s: Scheme, inp: FockInput, ports) -> float:
    """Post-selected probability of the ordered event triple abc."""
    p1, p2, p3 = ports
    _check_shared_r([p1, p2, p3])
    key = tuple(_label(a) for a in abc)
    lp = event_log_probs(s, inp, [_scalar_port(p1), _scalar_port(p2), _scalar_port(p3)])[key]
    return math.exp(lp) if lp != NEG_INF else 0.0
