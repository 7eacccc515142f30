"""Reference dataset builders for the report figures.

Each figure id maps to a builder that computes a table of witness
values over a predeclared parameter range, plus a small matplotlib
renderer for a quick-look PNG. The CSV table is the contract; the PNG
is a convenience rendered from the same rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cascade import FockInput
from .events import Scheme, parse_scheme, render_scheme
from .numerics import CapacityError
from .witnesses import (
    AngleGrid,
    EmptyPostSelection,
    NotEnoughPhotons,
    kmax,
    lgi_k,
    v12,
    v123,
)

DEFAULT_R = 0.1


@dataclass
class FigureOptions:
    """Shared knobs; ``None`` means use the figure's own default."""

    r: float | None = None
    grid: int | None = None
    refine: bool | None = None
    stride: int | None = None
    n: int | None = None
    scheme: str | None = None

    def pick(self, name: str, default):
        val = getattr(self, name)
        return default if val is None else val


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    description: str
    fieldnames: tuple
    build: Callable
    plot: Callable


def _witness_cell(fn, *args, **kwargs):
    """Run one witness evaluation, mapping domain errors to an error string."""
    try:
        return fn(*args, **kwargs), None
    except (EmptyPostSelection, NotEnoughPhotons, CapacityError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


# ---------------------------------------------------------------------------
# Critical photon number.
# ---------------------------------------------------------------------------


def critical_photon_number(
    s: Scheme,
    r: float,
    *,
    m_ratio: float = 1.0 / 6.0,
    grid: AngleGrid | None = None,
    start: int = 6,
    cap: int = 16000,
    polish_starts: int = 2,
) -> int | None:
    """Largest N with a K violation for |N, round(N*m_ratio)>.

    Doubles N until the violation disappears, then bisects the bracket
    down to integer resolution. Returns None when even the smallest
    probed N shows no violation. Assumes a single violating-to-classical
    crossing along the scan direction.
    """
    grid = grid or AngleGrid()

    def violates(n: int) -> bool:
        m = round(n * m_ratio)
        try:
            rep = kmax(s, FockInput(n, m), r, grid=grid, refine=True,
                       polish_starts=polish_starts)
        except (EmptyPostSelection, NotEnoughPhotons):
            return False
        return rep.value > 1.0

    lo = start
    if not violates(lo):
        return None
    while violates(2 * lo):
        lo *= 2
        if 2 * lo > cap:
            raise CapacityError(f"still violating at N={lo}, cap is {cap}")
    hi = 2 * lo
    while hi - lo > 1:
        mid = (hi + lo) // 2
        if violates(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# Builders.
# ---------------------------------------------------------------------------


def _build_fig2a(opts: FigureOptions):
    g = AngleGrid(opts.pick("grid", 60))
    r = opts.pick("r", DEFAULT_R)
    s = parse_scheme(opts.pick("scheme", "s1"))
    inp = FockInput(1, 1)
    theta1 = math.pi / 2
    rows = []
    for t2 in g.points():
        for t3 in g.points():
            val, err = _witness_cell(lgi_k, theta1, float(t2), float(t3), s, inp, r)
            rows.append({"theta1": theta1, "theta2": float(t2), "theta3": float(t3),
                         "k": val, "error": err})
    meta = {"n": 1, "m": 1, "scheme": render_scheme(s), "r": r, "theta1": theta1,
            "grid": g.resolution}
    return rows, meta


def _plot_fig2a(rows, ax):
    t2 = sorted({row["theta2"] for row in rows})
    t3 = sorted({row["theta3"] for row in rows})
    z = np.full((len(t2), len(t3)), np.nan)
    ix = {v: i for i, v in enumerate(t2)}
    iy = {v: i for i, v in enumerate(t3)}
    for row in rows:
        if row["k"] is not None:
            z[ix[row["theta2"]], iy[row["theta3"]]] = row["k"]
    mesh = ax.pcolormesh(t3, t2, z, shading="nearest", cmap="RdBu_r", vmin=-3, vmax=3)
    ax.figure.colorbar(mesh, ax=ax, label="K")
    ax.set_xlabel("theta3 (rad)")
    ax.set_ylabel("theta2 (rad)")
    ax.set_title("K landscape, |1,1>, sharp single photon, theta1 = pi/2")


def _build_fig2b(opts: FigureOptions):
    g = AngleGrid(opts.pick("grid", 60))
    r = opts.pick("r", DEFAULT_R)
    s = parse_scheme(opts.pick("scheme", "s2"))
    refine = opts.pick("refine", False)
    stride = opts.pick("stride", 2)
    cap = opts.pick("n", 100)
    rows = []
    for n in range(0, cap + 1, stride):
        for m in range(0, cap + 1, stride):
            if n + m == 0:
                rows.append({"n": n, "m": m, "kmax": None, "error": "empty input"})
                continue
            rep, err = _witness_cell(kmax, s, FockInput(n, m), r, grid=g, refine=refine)
            rows.append({"n": n, "m": m,
                         "kmax": rep.value if rep else None, "error": err})
    meta = {"scheme": render_scheme(s), "r": r, "grid": g.resolution,
            "refine": refine, "stride": stride, "cap": cap}
    return rows, meta


def _plot_fig2b(rows, ax):
    ns = sorted({row["n"] for row in rows})
    ms = sorted({row["m"] for row in rows})
    z = np.full((len(ms), len(ns)), np.nan)
    for row in rows:
        if row["kmax"] is not None:
            z[ms.index(row["m"]), ns.index(row["n"])] = row["kmax"]
    mesh = ax.pcolormesh(ns, ms, z, shading="nearest", cmap="viridis")
    ax.figure.colorbar(mesh, ax=ax, label="K max")
    ax.contour(ns, ms, z, levels=[1.0], colors="red", linewidths=1.0)
    ax.set_xlabel("N")
    ax.set_ylabel("M")
    ax.set_title("K max over (N, M), sharp two-photon")


def _build_fig4a(opts: FigureOptions):
    g = AngleGrid(opts.pick("grid", 60))
    r = opts.pick("r", DEFAULT_R)
    refine = opts.pick("refine", True)
    stride = opts.pick("stride", 6)
    cap = opts.pick("n", 300)
    rows = []
    for omega in (2, 3, 4):
        s = Scheme.sharp(omega)
        for n in range(6, cap + 1, stride):
            m = round(n / 6)
            rep, err = _witness_cell(kmax, s, FockInput(n, m), r, grid=g, refine=refine)
            rows.append({"scheme": render_scheme(s), "n": n, "m": m,
                         "kmax": rep.value if rep else None, "error": err})
    meta = {"r": r, "grid": g.resolution, "refine": refine, "stride": stride,
            "cap": cap, "m_rule": "round(n/6)"}
    return rows, meta


def _plot_lines_by_scheme(rows, ax, xkey, ykey):
    schemes = sorted({row["scheme"] for row in rows})
    for sch in schemes:
        pts = [(row[xkey], row[ykey]) for row in rows
               if row["scheme"] == sch and row[ykey] is not None]
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker=".", label=sch)
    ax.axhline(1.0, color="gray", linestyle=":")
    ax.legend()


def _plot_fig4a(rows, ax):
    _plot_lines_by_scheme(rows, ax, "n", "kmax")
    ax.set_xlabel("N")
    ax.set_ylabel("K max")
    ax.set_title("K max vs N at M = round(N/6), sharp schemes")


def _build_fig4b(opts: FigureOptions):
    g = AngleGrid(opts.pick("grid", 60))
    r = opts.pick("r", DEFAULT_R)
    s = parse_scheme(opts.pick("scheme", "s2"))
    refine = opts.pick("refine", True)
    cap = opts.pick("n", 60)
    rows = []
    for n in range(1, cap + 1):
        rep, err = _witness_cell(kmax, s, FockInput(n, n), r, grid=g, refine=refine)
        rows.append({"n": n, "kmax": rep.value if rep else None, "error": err})
    meta = {"scheme": render_scheme(s), "r": r, "grid": g.resolution,
            "refine": refine, "cap": cap, "m_rule": "m=n"}
    return rows, meta


def _plot_fig4b(rows, ax):
    pts = [(row["n"], row["kmax"]) for row in rows if row["kmax"] is not None]
    xs, ys = zip(*pts)
    ax.plot(xs, ys, marker=".")
    ax.axhline(1.0, color="gray", linestyle=":")
    ax.set_xlabel("N")
    ax.set_ylabel("K max")
    ax.set_title("K max vs N for |N,N>, sharp two-photon")


def _build_fig5a(opts: FigureOptions):
    g = AngleGrid(opts.pick("grid", 60))
    r = opts.pick("r", DEFAULT_R)
    refine = opts.pick("refine", True)
    stride = opts.pick("stride", 50)
    n = opts.pick("n", 5000)
    rows = []
    for token in ("s2", "f2"):
        s = parse_scheme(token)
        for m in range(0, 1601, stride):
            rep, err = _witness_cell(kmax, s, FockInput(n, m), r, grid=g, refine=refine)
            rows.append({"scheme": render_scheme(s), "m": m,
                         "kmax": rep.value if rep else None, "error": err})
    meta = {"n": n, "r": r, "grid": g.resolution, "refine": refine, "stride": stride}
    return rows, meta


def _plot_fig5a(rows, ax):
    _plot_lines_by_scheme(rows, ax, "m", "kmax")
    ax.set_xlabel("M")
    ax.set_ylabel("K max")
    ax.set_title("K max vs M at N = 5000")


def _build_fig5b(opts: FigureOptions):
    g = AngleGrid(opts.pick("grid", 60))
    r = opts.pick("r", DEFAULT_R)
    s = parse_scheme(opts.pick("scheme", "s2"))
    refine = opts.pick("refine", True)
    stride = opts.pick("stride", 50)
    n = opts.pick("n", 5000)
    rows = []
    for m in range(0, 1601, stride):
        rep12, err12 = _witness_cell(v12, s, FockInput(n, m), r, grid=g, refine=refine)
        rep123, err123 = _witness_cell(v123, s, FockInput(n, m), r, grid=g, refine=refine)
        rows.append({"m": m,
                     "v12": rep12.value if rep12 else None,
                     "v123": rep123.value if rep123 else None,
                     "error": err12 or err123})
    meta = {"n": n, "scheme": render_scheme(s), "r": r, "grid": g.resolution,
            "refine": refine, "stride": stride}
    return rows, meta


def _plot_v_curves(rows, ax):
    for key in ("v12", "v123"):
        pts = [(row["m"], row[key]) for row in rows if row.get(key) is not None]
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker=".", label=key)
    ax.axhline(1.0, color="gray", linestyle=":")
    ax.set_xlabel("M")
    ax.set_ylabel("V")
    ax.legend()


def _plot_fig5b(rows, ax):
    _plot_v_curves(rows, ax)
    ax.set_title("NSIT overlaps vs M at N = 5000, sharp two-photon")


FIG6_R_VALUES = (0.05, 0.1, 0.2, 0.4, 0.8)


def _build_fig6(opts: FigureOptions):
    g = AngleGrid(opts.pick("grid", 60))
    rows = []
    for token in ("b2-4", "b3-4"):
        s = parse_scheme(token)
        for r in FIG6_R_VALUES:
            try:
                nc = critical_photon_number(s, r, grid=g)
                err = None
            except CapacityError as exc:
                nc, err = None, f"CapacityError: {exc}"
            rows.append({"scheme": render_scheme(s), "r": r, "n_c": nc,
                         "error": err if nc is not None or err else "no violation"})
    meta = {"grid": g.resolution, "m_rule": "round(n/6)"}
    return rows, meta


def _plot_fig6(rows, ax):
    for sch in sorted({row["scheme"] for row in rows}):
        pts = [(row["r"], row["n_c"]) for row in rows
               if row["scheme"] == sch and row["n_c"] is not None]
        if pts:
            xs, ys = zip(*pts)
            ax.loglog(xs, ys, marker="o", label=sch)
    ax.set_xlabel("r")
    ax.set_ylabel("critical N")
    ax.legend()
    ax.set_title("Critical photon number vs reflectivity")


def _build_fig7(opts: FigureOptions):
    g = AngleGrid(opts.pick("grid", 60))
    s = parse_scheme(opts.pick("scheme", "f4"))
    refine = opts.pick("refine", False)
    stride = opts.pick("stride", 4)
    cap = opts.pick("n", 120)
    r_values = [float(f"{x:.6g}") for x in np.geomspace(0.01, 0.9, 10)]
    rows = []
    for n in range(4, cap + 1, stride):
        m = round(n / 6)
        for r in r_values:
            rep, err = _witness_cell(kmax, s, FockInput(n, m), r, grid=g, refine=refine)
            val = rep.value if rep else None
            rows.append({"n": n, "m": m, "r": r, "kmax": val,
                         "violates": None if val is None else val > 1.0,
                         "error": err})
    meta = {"scheme": render_scheme(s), "grid": g.resolution, "refine": refine,
            "stride": stride, "cap": cap, "m_rule": "round(n/6)"}
    return rows, meta


def _plot_fig7(rows, ax):
    ns = sorted({row["n"] for row in rows})
    rs = sorted({row["r"] for row in rows})
    z = np.full((len(rs), len(ns)), np.nan)
    for row in rows:
        if row["kmax"] is not None:
            z[rs.index(row["r"]), ns.index(row["n"])] = row["kmax"]
    mesh = ax.pcolormesh(ns, rs, z, shading="nearest", cmap="viridis")
    ax.figure.colorbar(mesh, ax=ax, label="K max")
    ax.contour(ns, rs, z, levels=[1.0], colors="red", linewidths=1.0)
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("r")
    ax.set_title("K max over (N, r), fair up-to-four")


def _build_fig8(opts: FigureOptions):
    g = AngleGrid(opts.pick("grid", 60))
    r = opts.pick("r", 0.01)
    s = parse_scheme(opts.pick("scheme", "f2"))
    refine = opts.pick("refine", True)
    stride = opts.pick("stride", 200)
    n = opts.pick("n", 5000)
    rows = []
    for m in range(0, 1601, stride):
        rep12, err12 = _witness_cell(v12, s, FockInput(n, m), r, grid=g, refine=refine)
        rep123, err123 = _witness_cell(v123, s, FockInput(n, m), r, grid=g, refine=refine)
        rows.append({"m": m,
                     "v12": rep12.value if rep12 else None,
                     "v123": rep123.value if rep123 else None,
                     "error": err12 or err123})
    meta = {"n": n, "scheme": render_scheme(s), "r": r, "grid": g.resolution,
            "refine": refine, "stride": stride}
    return rows, meta


def _plot_fig8(rows, ax):
    _plot_v_curves(rows, ax)
    ax.set_title("NSIT overlaps vs M at N = 5000, fair up-to-two, r = 0.01")


FIGURES: dict[str, FigureSpec] = {
    spec.figure_id: spec
    for spec in (
        FigureSpec("fig2a", "K landscape over (theta2, theta3) for |1,1>, s1",
                   ("theta1", "theta2", "theta3", "k", "error"),
                   _build_fig2a, _plot_fig2a),
        FigureSpec("fig2b", "K max over the (N, M) plane, s2",
                   ("n", "m", "kmax", "error"), _build_fig2b, _plot_fig2b),
        FigureSpec("fig4a", "K max vs N at M=round(N/6) for s2, s3, s4",
                   ("scheme", "n", "m", "kmax", "error"), _build_fig4a, _plot_fig4a),
        FigureSpec("fig4b", "K max vs N for |N,N>, s2",
                   ("n", "kmax", "error"), _build_fig4b, _plot_fig4b),
        FigureSpec("fig5a", "K max vs M at N=5000 for s2 and f2",
                   ("scheme", "m", "kmax", "error"), _build_fig5a, _plot_fig5a),
        FigureSpec("fig5b", "V12 and V123 vs M at N=5000, s2",
                   ("m", "v12", "v123", "error"), _build_fig5b, _plot_fig5b),
        FigureSpec("fig6", "critical photon number vs r for b2-4 and b3-4",
                   ("scheme", "r", "n_c", "error"), _build_fig6, _plot_fig6),
        FigureSpec("fig7", "K max and violation region over (N, r), f4",
                   ("n", "m", "r", "kmax", "violates", "error"),
                   _build_fig7, _plot_fig7),
        FigureSpec("fig8", "V12 and V123 vs M at N=5000, f2, r=0.01",
                   ("m", "v12", "v123", "error"), _build_fig8, _plot_fig8),
    )
}


def build_figure(figure_id: str, opts: FigureOptions | None = None):
    """Compute the dataset for one figure id: (spec, rows, meta)."""
    if figure_id not in FIGURES:
        raise KeyError(f"unknown figure id: {figure_id!r}")
    spec = FIGURES[figure_id]
    rows, meta = spec.build(opts or FigureOptions())
    return spec, rows, meta


def render_figure_png(spec: FigureSpec, rows: Sequence[dict], path: str) -> None:
    import os

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)

    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=130)
    spec.plot(rows, ax)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
