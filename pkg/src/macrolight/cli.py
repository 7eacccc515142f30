"""Command line interface.

Subcommands: probe (raw outcome probability), kmax (Leggett-Garg
maximum), nsit (no-signaling overlap minimum), sweep (witness over a
parameter grid), figure (reference dataset + PNG). Exit codes: 0 on
success, 2 for invalid configuration, 3 when post-selection is empty,
4 when the input has too few photons.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .cascade import FockInput, Outcome, PortConfig, prob_one_port, prob_three_port, prob_two_port
from .events import parse_scheme, render_scheme
from .figures import FIGURES, FigureOptions, build_figure, render_figure_png
from .numerics import CapacityError
from .output import write_table
from .witnesses import AngleGrid, EmptyPostSelection, NotEnoughPhotons, kmax, v12, v123

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EMPTY = 3
EXIT_PHOTONS = 4

_CONFIG_TYPES = {
    "n": int, "m": int, "grid": int, "jobs": int, "stride": int,
    "r": float, "theta1": float, "theta2": float, "theta3": float,
    "scheme": str, "witness": str, "format": str, "id": str, "outcome": str,
    "refine": None,  # boolean, handled separately
}


class CliError(Exception):
    """Invalid command line or config file content."""


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise CliError(f"not a boolean: {text!r}")


def load_config(path: str) -> dict:
    """key=value lines; blank lines and # comments ignored."""
    out = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _CONFIG_TYPES:
                raise CliError(f"{path}:{lineno}: unknown config key {key!r}")
            if key == "refine":
                out[key] = _parse_bool(val)
            else:
                conv = _CONFIG_TYPES[key]
                try:
                    out[key] = conv(val)
                except ValueError as exc:
                    raise CliError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return out


def _apply_config(args: argparse.Namespace) -> None:
    """Config fills in options the command line left unset."""
    if not getattr(args, "config", None):
        return
    conf = load_config(args.config)
    for key, val in conf.items():
        if getattr(args, key, None) is None and hasattr(args, key):
            setattr(args, key, val)


def parse_outcomes(text: str) -> tuple:
    """'wx,wy[:wx,wy[:wx,wy]]' into a tuple of detector outcomes."""
    ports = text.split(":")
    if not 1 <= len(ports) <= 3:
        raise CliError(f"need 1 to 3 outcome pairs, got {len(ports)}")
    res = []
    for part in ports:
        pieces = part.split(",")
        if len(pieces) != 2:
            raise CliError(f"outcome must be 'wx,wy', got {part!r}")
        try:
            wx, wy = int(pieces[0]), int(pieces[1])
        except ValueError as exc:
            raise CliError(f"outcome counts must be integers: {part!r}") from exc
        if wx < 0 or wy < 0:
            raise CliError(f"outcome counts must be nonnegative: {part!r}")
        res.append(Outcome(wx, wy))
    return tuple(res)


def render_outcomes(ws) -> str:
    return ":".join(f"{w.wx},{w.wy}" for w in ws)


def parse_axis(text: str):
    """One sweep axis: 'n=2:6[:stride]', 'r=0.1,0.5', 'm=n', 'm=n/6'.

    Returns (name, values_list) for explicit axes or
    (name, ('derived', divisor)) for m derived from n.
    """
    if "=" not in text:
        raise CliError(f"axis must be name=spec, got {text!r}")
    name, _, spec = text.partition("=")
    name = name.strip()
    spec = spec.strip()
    if name not in ("n", "m", "r"):
        raise CliError(f"axis name must be n, m or r, got {name!r}")
    conv = float if name == "r" else int
    if name == "m" and (spec == "n" or spec.startswith("n/")):
        if spec == "n":
            return name, ("derived", 1)
        try:
            div = int(spec[2:])
        except ValueError as exc:
            raise CliError(f"bad derived axis {text!r}") from exc
        if div <= 0:
            raise CliError(f"derived axis divisor must be positive: {text!r}")
        return name, ("derived", div)
    if ":" in spec:
        pieces = spec.split(":")
        if len(pieces) not in (2, 3) or conv is float:
            raise CliError(f"range axis needs int start:stop[:stride], got {text!r}")
        try:
            start, stop = int(pieces[0]), int(pieces[1])
            stride = int(pieces[2]) if len(pieces) == 3 else 1
        except ValueError as exc:
            raise CliError(f"bad range axis {text!r}") from exc
        if stride <= 0 or stop < start:
            raise CliError(f"bad range axis {text!r}")
        return name, list(range(start, stop + 1, stride))
    try:
        values = [conv(piece) for piece in spec.split(",") if piece != ""]
    except ValueError as exc:
        raise CliError(f"bad axis values {text!r}") from exc
    if not values:
        raise CliError(f"axis has no values: {text!r}")
    return name, values


def _base_meta(command: str, args, extra: dict | None = None) -> dict:
    meta = {"engine": "macrolight", "version": __version__, "command": command}
    if extra:
        meta.update(extra)
    return meta


def _resolve(args, name, default):
    val = getattr(args, name, None)
    return default if val is None else val


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_probe(args) -> int:
    ws = parse_outcomes(args.outcome)
    n = _resolve(args, "n", None)
    m = _resolve(args, "m", None)
    if n is None or m is None:
        raise CliError("probe requires --n and --m")
    r = _resolve(args, "r", 0.1)
    thetas = [_resolve(args, "theta1", 0.0), _resolve(args, "theta2", 0.0),
              _resolve(args, "theta3", 0.0)][: len(ws)]
    inp = FockInput(n, m)
    ports = tuple(PortConfig(theta, r) for theta in thetas)
    if len(ws) == 1:
        prob, _ = prob_one_port(ws[0], inp, ports[0])
    elif len(ws) == 2:
        prob, _ = prob_two_port(ws, inp, ports)
    else:
        prob = prob_three_port(ws, inp, ports)
    row = {"n": n, "m": m, "r": r,
           "theta1": thetas[0],
           "theta2": thetas[1] if len(ws) > 1 else None,
           "theta3": thetas[2] if len(ws) > 2 else None,
           "outcome": render_outcomes(ws), "probability": prob}
    meta = _base_meta("probe", args, {"n": n, "m": m, "r": r})
    write_table(("n", "m", "r", "theta1", "theta2", "theta3", "outcome", "probability"),
                [row], meta, fmt=args.format or "csv", out=args.out)
    return EXIT_OK


_WITNESS_FIELDS = {
    "kmax": ("n", "m", "r", "scheme", "kmax", "theta1", "theta2", "theta3", "error"),
    "v12": ("n", "m", "r", "scheme", "v12", "theta1", "theta2", "error"),
    "v123": ("n", "m", "r", "scheme", "v123", "theta1", "theta2", "theta3", "error"),
}

_WITNESS_FN = {"kmax": kmax, "v12": v12, "v123": v123}


def _witness_row(witness: str, n: int, m: int, r: float, scheme_token: str,
                 grid: AngleGrid, refine: bool) -> dict:
    """One witness evaluation as an output row; domain errors become text."""
    row = {"n": n, "m": m, "r": r, "scheme": scheme_token, "error": None}
    try:
        s = parse_scheme(scheme_token)
        rep = _WITNESS_FN[witness](s, FockInput(n, m), r, grid=grid, refine=refine)
    except (EmptyPostSelection, NotEnoughPhotons, CapacityError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    row[witness] = rep.value
    for i, angle in enumerate(rep.angles, start=1):
        row[f"theta{i}"] = angle
    return row


def _single_witness(witness: str, args) -> int:
    n = _resolve(args, "n", None)
    m = _resolve(args, "m", None)
    if n is None or m is None:
        raise CliError(f"{witness} requires --n and --m")
    r = _resolve(args, "r", 0.1)
    scheme_token = _resolve(args, "scheme", "s1")
    grid = AngleGrid(_resolve(args, "grid", 60))
    refine = _resolve(args, "refine", True)
    s = parse_scheme(scheme_token)  # validate before computing
    rep = _WITNESS_FN[witness](s, FockInput(n, m), r, grid=grid, refine=refine)
    row = {"n": n, "m": m, "r": r, "scheme": render_scheme(s), witness: rep.value,
           "error": None}
    for i, angle in enumerate(rep.angles, start=1):
        row[f"theta{i}"] = angle
    meta = _base_meta(witness, args,
                      {"r": r, "scheme": render_scheme(s), "grid": grid.resolution,
                       "refine": refine})
    write_table(_WITNESS_FIELDS[witness], [row], meta,
                fmt=args.format or "csv", out=args.out)
    return EXIT_OK


def cmd_kmax(args) -> int:
    return _single_witness("kmax", args)


def cmd_nsit(args) -> int:
    witness = _resolve(args, "witness", "v12")
    if witness not in ("v12", "v123"):
        raise CliError(f"nsit witness must be v12 or v123, got {witness!r}")
    return _single_witness(witness, args)


def cmd_sweep(args) -> int:
    witness = _resolve(args, "witness", "kmax")
    if witness not in _WITNESS_FN:
        raise CliError(f"sweep witness must be one of kmax, v12, v123, got {witness!r}")
    axes = [parse_axis(text) for text in (args.axis or [])]
    if not axes:
        raise CliError("sweep requires at least one --axis")
    explicit = [(name, vals) for name, vals in axes if not (
        isinstance(vals, tuple) and vals[0] == "derived")]
    derived = [(name, vals) for name, vals in axes if
               isinstance(vals, tuple) and vals[0] == "derived"]
    seen = [name for name, _ in axes]
    if len(set(seen)) != len(seen):
        raise CliError("each axis may appear only once")

    base = {"n": _resolve(args, "n", None), "m": _resolve(args, "m", None),
            "r": _resolve(args, "r", 0.1)}
    scheme_token = _resolve(args, "scheme", "s1")
    parse_scheme(scheme_token)  # fail fast on bad scheme
    grid = AngleGrid(_resolve(args, "grid", 60))
    refine = _resolve(args, "refine", True)
    jobs = _resolve(args, "jobs", 1)
    if jobs < 1:
        raise CliError("--jobs must be at least 1")

    cells = [dict(base)]
    for name, vals in explicit:
        cells = [dict(cell, **{name: v}) for cell in cells for v in vals]
    for name, (_, div) in derived:
        for cell in cells:
            if cell["n"] is None:
                raise CliError("derived m axis needs an n value")
            cell[name] = round(cell["n"] / div)
    for cell in cells:
        if cell["n"] is None or cell["m"] is None:
            raise CliError("sweep cells need n and m (set --n/--m or an axis)")

    def run_cell(cell):
        return _witness_row(witness, cell["n"], cell["m"], cell["r"],
                            scheme_token, grid, refine)

    if jobs == 1:
        rows = [run_cell(cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_cell, cells))

    meta = _base_meta("sweep", args,
                      {"witness": witness, "scheme": scheme_token,
                       "grid": grid.resolution, "refine": refine,
                       "axes": ";".join(args.axis), "cells": len(cells)})
    write_table(_WITNESS_FIELDS[witness], rows, meta,
                fmt=args.format or "csv", out=args.out)
    return EXIT_OK


def cmd_figure(args) -> int:
    figure_id = _resolve(args, "id", None)
    if figure_id is None:
        raise CliError("figure requires --id (one of: " + ", ".join(sorted(FIGURES)) + ")")
    if figure_id not in FIGURES:
        raise CliError(f"unknown figure id {figure_id!r}; known ids: " + ", ".join(sorted(FIGURES)))
    opts = FigureOptions(
        r=getattr(args, "r", None),
        grid=getattr(args, "grid", None),
        refine=getattr(args, "refine", None),
        stride=getattr(args, "stride", None),
        n=getattr(args, "n", None),
        scheme=getattr(args, "scheme", None),
    )
    spec, rows, fig_meta = build_figure(figure_id, opts)
    fmt = args.format or "csv"
    base = args.out or figure_id
    if base.endswith(".csv") or base.endswith(".json"):
        base = base.rsplit(".", 1)[0]
    data_path = f"{base}.{fmt}"
    meta = _base_meta("figure", args, {"figure": figure_id,
                                       "description": spec.description})
    meta.update(fig_meta)
    write_table(spec.fieldnames, rows, meta, fmt=fmt, out=data_path)
    emitted = [data_path]
    if not args.no_plot:
        png_path = f"{base}.png"
        render_figure_png(spec, rows, png_path)
        emitted.append(png_path)
    print("\n".join(emitted), file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser.
# ---------------------------------------------------------------------------


def _add_common(sub, *, theta: bool = False, witnessy: bool = False) -> None:
    sub.add_argument("--n", type=int, default=None, help="x-polarized photon count")
    sub.add_argument("--m", type=int, default=None, help="y-polarized photon count")
    sub.add_argument("--r", type=float, default=None,
                     help="detector beam splitter reflectivity (default 0.1)")
    sub.add_argument("--config", default=None,
                     help="key=value file supplying defaults for unset options")
    sub.add_argument("--format", choices=("csv", "json"), default=None,
                     help="output format (default csv)")
    sub.add_argument("--out", default=None, help="output path (default stdout)")
    if theta:
        sub.add_argument("--theta1", type=float, default=None)
        sub.add_argument("--theta2", type=float, default=None)
        sub.add_argument("--theta3", type=float, default=None)
    if witnessy:
        sub.add_argument("--scheme", default=None,
                         help="dichotomization scheme token, e.g. s2, f4, b2-4 (default s1)")
        sub.add_argument("--grid", type=int, default=None,
                         help="angle lattice resolution (default 60)")
        sub.add_argument("--no-refine", dest="refine", action="store_const",
                         const=False, default=None,
                         help="skip simplex refinement of the best lattice points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macrolight",
        description="Macrorealism witnesses for photon-subtraction polarization measurements",
    )
    parser.add_argument("--version", action="version", version=f"macrolight {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p_probe = subs.add_parser("probe", help="probability of an explicit outcome sequence")
    _add_common(p_probe, theta=True)
    p_probe.add_argument("--outcome", required=True,
                         help="detector counts per port, 'wx,wy[:wx,wy[:wx,wy]]'")
    p_probe.set_defaults(fn=cmd_probe)

    p_kmax = subs.add_parser("kmax", help="maximum Leggett-Garg K over analyzer angles")
    _add_common(p_kmax, witnessy=True)
    p_kmax.set_defaults(fn=cmd_kmax)

    p_nsit = subs.add_parser("nsit", help="minimum no-signaling overlap over analyzer angles")
    _add_common(p_nsit, witnessy=True)
    p_nsit.add_argument("--witness", choices=("v12", "v123"), default=None,
                        help="which overlap to minimize (default v12)")
    p_nsit.set_defaults(fn=cmd_nsit)

    p_sweep = subs.add_parser("sweep", help="witness over a parameter grid")
    _add_common(p_sweep, witnessy=True)
    p_sweep.add_argument("--witness", choices=("kmax", "v12", "v123"), default=None,
                         help="witness to evaluate per cell (default kmax)")
    p_sweep.add_argument("--axis", action="append", default=None,
                         help="axis spec: n=2:6[:stride], r=0.1,0.5, m=n, m=n/6; repeatable")
    p_sweep.add_argument("--jobs", type=int, default=None,
                         help="worker threads (default 1); row order is unaffected")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_fig = subs.add_parser("figure", help="reference dataset (CSV/JSON) plus PNG plot")
    _add_common(p_fig, witnessy=True)
    p_fig.add_argument("--id", default=None, dest="id",
                       help="figure id: " + ", ".join(sorted(FIGURES)))
    p_fig.add_argument("--stride", type=int, default=None,
                       help="override the figure's sampling stride")
    p_fig.add_argument("--no-plot", action="store_true",
                       help="write only the data table, skip the PNG")
    p_fig.set_defaults(fn=cmd_figure)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, CapacityError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyPostSelection as exc:
        print(f"error: empty post-selection: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except NotEnoughPhotons as exc:
        print(f"error: not enough photons: {exc}", file=sys.stderr)
        return EXIT_PHOTONS


if __name__ == "__main__":
    sys.exit(main())
