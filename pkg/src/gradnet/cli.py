"""Command-line interface: ``gradnet <subcommand> ...``.

Every subcommand prints its table to stdout. With ``--out-dir`` the table is
also written there (atomically) together with ``manifest.json``. Outputs carry
no timestamps, so identical arguments and seed give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .admissible import AdmissibilityError, assemble
from .coupling import CouplingError, coupling_from_spec, phase_from_spec, polynomial_self
from .flow import FlowConfig, FlowError, integrate, sample_starts
from .graph import CellGraph, GraphError, complete_bipartite, load_graph
from .ring import ROW_COLUMNS, RingError, RingFunction, enumerate_equilibria, ground_state
from .spectra import SpectrumError, inertia_bounds, laplacian_spectrum, weighted_laplacian
from .synchrony import (
    NotCriticalError,
    SynchronyError,
    classify_synchronous,
    classify_synchronous_kmn,
    classify_two_colour,
    find_synchronous_critical,
    find_two_colour_critical,
    wedge_region,
)
from .coupling import quadratic_coupling

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_PRECONDITION = 0, 2, 3, 4


class InputError(ValueError):
    pass


# -- parsing helpers ----------------------------------------------------------


def _shorthand(text: str) -> dict:
    """``family[:key=val,...]`` as a coupling spec."""
    family, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise InputError(f"bad coupling parameter {item!r}; expected key=value")
        params[key.strip()] = float(val)
    return {"family": family.strip(), "params": params}


def parse_spec(text: str) -> dict:
    """A JSON file, an inline JSON object, or the ``family:key=val`` shorthand."""
    p = Path(text)
    if p.suffix == ".json" or p.is_file():
        try:
            return json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if text.lstrip().startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"inline JSON, column {exc.colno}: {exc.msg}") from exc
    return _shorthand(text)


def parse_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise InputError(f"could not parse numbers from {text!r}") from exc


def parse_range(text: str, parts: int) -> list[float]:
    vals = text.split(":")
    if len(vals) != parts:
        raise InputError(f"expected {parts} colon-separated values, got {text!r}")
    try:
        return [float(v) for v in vals]
    except ValueError as exc:
        raise InputError(f"bad range {text!r}") from exc


def parse_ints(text: str) -> list[int]:
    out = []
    for chunk in text.split(","):
        if ":" in chunk:
            a, b = chunk.split(":")
            out.extend(range(int(a), int(b) + 1))
        elif chunk:
            out.append(int(chunk))
    return out


# -- output -------------------------------------------------------------------


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clean(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    return value


def to_json_text(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def to_csv_text(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return " ".join(repr(float(t)) if isinstance(t, float) else str(t) for t in v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


class Emitter:
    def __init__(self, args):
        self.args = args
        self.outputs = []

    def table(self, name: str, rows: list[dict], columns, extra: dict | None = None):
        fmt = self.args.format
        if fmt == "csv":
            text = to_csv_text(rows, columns)
        else:
            payload = {"rows": rows}
            if extra:
                payload.update(extra)
            text = to_json_text(payload)
        self._out(f"{name}.{fmt}", text)

    def document(self, name: str, obj):
        self._out(f"{name}.json", to_json_text(obj))

    def raw(self, filename: str, text: str):
        self._out(filename, text, echo=False)

    def _out(self, filename: str, text: str, echo: bool = True):
        if echo:
            sys.stdout.write(text)
        if self.args.out_dir:
            path = Path(self.args.out_dir) / filename
            atomic_write(path, text)
            self.outputs.append(filename)

    def finish(self):
        if not self.args.out_dir:
            return
        params = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "out_dir")}
        manifest = {
            "command": self.args.command,
            "parameters": params,
            "seed": self.args.seed,
            "tool_version": __version__,
            "outputs": sorted(self.outputs),
        }
        atomic_write(Path(self.args.out_dir) / "manifest.json", to_json_text(manifest))


# -- subcommands --------------------------------------------------------------


def cmd_graph_info(args, out: Emitter):
    g = load_graph(args.graph)
    bp = g.bipartition()
    dm = g.is_dm_graph()
    report = {
        "n": g.n,
        "edges": [list(e) for e in g.sorted_edges],
        "loops": sorted(g.loops),
        "degrees": g.degrees(),
        "regular": g.is_regular(),
        "complete": g.is_complete(),
        "bipartite": bp is not None,
        "bipartition": list(bp.as_lists()) if bp else None,
        "odd_cycle": g.odd_cycle(),
        "dm_graph": list(dm) if dm else None,
        "laplacian_spectrum": [round(float(t), 12) + 0.0 for t in laplacian_spectrum(g)],
    }
    out.document("graph_info", report)


SYNC_COLUMNS = (
    "alpha", "beta", "x0", "verdict", "index", "n_minus", "n_zero", "n_plus",
    "formula_minimum", "phi_minimum", "wedge",
)


def _sync_row(c, x0) -> dict:
    nm, nz, npl = c.inertia
    return {
        "alpha": c.alpha,
        "beta": c.beta,
        "x0": x0,
        "verdict": c.verdict,
        "index": c.index,
        "n_minus": nm,
        "n_zero": nz,
        "n_plus": npl,
        "formula_minimum": c.formula_minimum,
        "phi_minimum": c.phi_minimum,
        "wedge": c.wedge,
    }


def _require_regular(g: CellGraph):
    if g.is_regular() is None:
        raise SynchronyError(
            "graph is not regular; use the kmn subcommand for K_{m,n} or dm-classify for 2-colour patterns"
        )


def cmd_sync_classify(args, out: Emitter):
    g = load_graph(args.graph)
    _require_regular(g)
    rows = []
    if args.grid:
        lo, hi, steps = parse_range(args.grid, 3)
        vals = np.linspace(lo, hi, int(steps))
        for a in vals:
            for b in vals:
                c = classify_synchronous(g, quadratic_coupling(float(a), float(b)), 0.0)
                rows.append(_sync_row(c, 0.0))
    else:
        if not args.coupling:
            raise InputError("sync-classify needs --coupling or --grid")
        phi = coupling_from_spec(parse_spec(args.coupling))
        box = parse_range(args.box, 2)
        found = find_synchronous_critical(phi, box, args.resolution)
        if found.continuum:
            raise SynchronyError("every synchronous point is critical; classification is degenerate")
        for x0 in found.points:
            rows.append(_sync_row(classify_synchronous(g, phi, x0), x0))
    w = wedge_region(g)
    out.table("sync", rows, SYNC_COLUMNS, extra={"wedge_region": w.to_json()})
    if args.svg:
        out.raw(Path(args.svg).name, wedge_svg(w, rows))
        if not args.out_dir:
            atomic_write(Path(args.svg), wedge_svg(w, rows))


def wedge_svg(w, rows, size: int = 400, lim: float = 2.0) -> str:
    """Static scatter of classification rows over the (alpha, beta) plane with the wedge shaded."""

    def px(a, b):
        return (size / 2 + a / lim * size / 2, size / 2 - b / lim * size / 2)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if not w.empty:
        # beta > 0 branch: -slope*beta < alpha < beta; beta < 0 is empty
        far = 4 * lim
        pts = [px(0, 0), px(far, far), px(-w.slope * far, far)]
        parts.append(
            '<polygon points="' + " ".join(f"{x:.2f},{y:.2f}" for x, y in pts) + '" fill="#f4c7c3" stroke="none"/>'
        )
    parts.append(f'<line x1="0" y1="{size / 2}" x2="{size}" y2="{size / 2}" stroke="black"/>')
    parts.append(f'<line x1="{size / 2}" y1="0" x2="{size / 2}" y2="{size}" stroke="black"/>')
    for r in rows:
        x, y = px(r["alpha"], r["beta"])
        colour = "#c0392b" if r["wedge"] else ("#2e86c1" if r["verdict"] == "minimum" else "#999999")
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2" fill="{colour}"/>')
    parts.append(f'<text x="{size - 20}" y="{size / 2 - 4}" font-size="12">alpha</text>')
    parts.append(f'<text x="{size / 2 + 4}" y="12" font-size="12">beta</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_kmn(args, out: Emitter):
    if args.m == args.n:
        raise SynchronyError("K_{n,n} is regular; use sync-classify")
    g = complete_bipartite(args.m, args.n)
    rows = []
    if args.grid:
        lo, hi, steps = parse_range(args.grid, 3)
        vals = np.linspace(lo, hi, int(steps))
        pairs = [(float(a), float(b)) for a in vals for b in vals]
        for a, b in pairs:
            rows.append(_sync_row(classify_synchronous_kmn(args.m, args.n, quadratic_coupling(a, b), 0.0), 0.0))
    else:
        if not args.coupling:
            raise InputError("kmn needs --coupling or --grid")
        phi = coupling_from_spec(parse_spec(args.coupling))
        found = find_synchronous_critical(phi, parse_range(args.box, 2), args.resolution)
        for x0 in found.points:
            rows.append(_sync_row(classify_synchronous_kmn(args.m, args.n, phi, x0), x0))
    out.table("kmn", rows, SYNC_COLUMNS, extra={"graph": g.to_json()})


DM_COLUMNS = ("x0", "y0", "alpha", "beta", "gamma", "verdict", "n_minus", "n_zero", "n_plus", "formula_minimum", "phi_minimum")


def cmd_dm_classify(args, out: Emitter):
    g = load_graph(args.graph)
    if g.is_dm_graph() is None:
        raise SynchronyError("dm-classify needs a connected regular bipartite graph with equal parts")
    phi = coupling_from_spec(parse_spec(args.coupling))
    rows = []
    for pat in find_two_colour_critical(g, phi, parse_range(args.box, 2), args.resolution):
        c = classify_two_colour(g, phi, pat)
        nm, nz, npl = c.inertia
        rows.append({
            "x0": pat.x0, "y0": pat.y0, "alpha": c.alpha, "beta": c.beta, "gamma": c.gamma,
            "verdict": c.verdict, "n_minus": nm, "n_zero": nz, "n_plus": npl,
            "formula_minimum": c.formula_minimum, "phi_minimum": c.phi_minimum,
        })
    out.table("two_colour", rows, DM_COLUMNS)


def _ring(args) -> RingFunction:
    spec = parse_spec(args.coupling)
    try:
        delta = phase_from_spec(spec)
    except CouplingError as exc:
        raise InputError(str(exc)) from exc
    return RingFunction(args.n, delta)


def cmd_ring_equilibria(args, out: Emitter):
    rf = _ring(args)
    eqs = enumerate_equilibria(rf, strict=not args.relaxed)
    out.table("ring_equilibria", [e.to_row() for e in eqs], ROW_COLUMNS)


GS_COLUMNS = ("n", "formula_energy", "empirical_energy", "enumerated_energy", "distance", "agree", "converged", "starts")


def cmd_ring_ground_state(args, out: Emitter):
    rows = []
    for n in parse_ints(args.n):
        args_n = argparse.Namespace(**{**vars(args), "n": n})
        rf = _ring(args_n)
        rep = ground_state(rf, starts=args.starts, seed=args.seed, strict=not args.relaxed)
        row = rep.to_json()
        rows.append({k: row[k] for k in GS_COLUMNS} | {"empirical_diffs": row["empirical_diffs"]})
    out.table("ground_state", rows, GS_COLUMNS + ("empirical_diffs",))


def load_function(spec: dict):
    """Flow target from JSON: ``{"ring": {"n": N, "delta": {...}}}`` or ``{"graph": ..., "coupling": ...}``."""
    if "ring" in spec:
        r = spec["ring"]
        return RingFunction(int(r["n"]), phase_from_spec(r["delta"])), True
    if "graph" not in spec or "coupling" not in spec:
        raise InputError("function JSON needs 'ring' or both 'graph' and 'coupling'")
    gspec = spec["graph"]
    g = CellGraph.from_json(gspec) if isinstance(gspec, dict) else load_graph(gspec)
    phi = coupling_from_spec(spec["coupling"])
    selfs = {int(d): polynomial_self(int(d), c) for d, c in spec.get("self_connections", {}).items()}
    return assemble(g, phi, selfs), bool(spec.get("torus", False))


TRAJ_COLUMNS_TAIL = ("energy", "grad_norm")


def cmd_flow(args, out: Emitter):
    spec = parse_spec(args.function)
    f, torus = load_function(spec)
    torus = torus or args.torus
    if args.x0:
        x0 = np.array(parse_floats(args.x0))
    else:
        x0 = sample_starts(f.n, 1, args.seed, None, torus)[0]
    if len(x0) != f.n:
        raise InputError(f"x0 has {len(x0)} entries, function has {f.n} cells")
    cfg = FlowConfig(integrator=args.integrator, h=args.h, T=args.T, tol=args.tol, torus=torus)
    traj = integrate(f, x0, cfg, record_every=args.record_every)
    cols = ("t",) + tuple(f"x{i}" for i in range(1, f.n + 1)) + TRAJ_COLUMNS_TAIL
    rows = [dict(zip(cols, r)) for r in traj.rows()]
    out.table("trajectory", rows, cols, extra={"status": traj.status})
    if traj.status != "converged":
        raise FlowError(f"flow ended with status {traj.status}")


def cmd_inertia_bounds(args, out: Emitter):
    g = load_graph(args.graph)
    if args.weights:
        weights = parse_floats(args.weights)
    elif args.signs:
        if any(ch not in "+-" for ch in args.signs):
            raise InputError("signs must be a string over + and -")
        weights = [1.0 if ch == "+" else -1.0 for ch in args.signs]
    else:
        raise InputError("inertia-bounds needs --weights or --signs")
    if len(weights) != len(g.edges):
        raise InputError(f"{len(weights)} weights for {len(g.edges)} edges (ordered as {g.sorted_edges})")
    signs = [float(np.sign(w)) for w in weights]
    b = inertia_bounds(g, signs)
    samples = []
    rng = np.random.default_rng(args.seed)
    trials = [weights] + [[s * m for s, m in zip(signs, rng.uniform(0.1, 10.0, len(signs)))] for _ in range(args.samples)]
    for w in trials:
        inr = weighted_laplacian(g, w).inertia()
        samples.append({"inertia": list(inr.as_tuple()), "inside": b.contains(inr)})
    doc = {
        "edges": [list(e) for e in g.sorted_edges],
        "weights": weights,
        "c_plus": b.c_plus,
        "c_minus": b.c_minus,
        "bounds": {"n_minus": list(b.minus), "n_zero": list(b.zero), "n_plus": list(b.plus)},
        "inertia": samples[0]["inertia"],
        "inside": samples[0]["inside"],
        "samples_checked": len(samples),
        "violations": sum(not s["inside"] for s in samples),
    }
    out.document("inertia_bounds", doc)


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")
    common.add_argument("--out-dir", default=None, help="write outputs and manifest.json here")
    common.add_argument("--format", choices=("csv", "json"), default="json")

    p = argparse.ArgumentParser(prog="gradnet", description="Admissible gradient systems on cell networks")
    p.add_argument("--version", action="version", version=f"gradnet {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("graph-info", parents=[common], help="structure and Laplacian spectrum of a graph")
    s.add_argument("graph", help="graph JSON path or bundled fixture name")
    s.set_defaults(func=cmd_graph_info)

    s = sub.add_parser("sync-classify", parents=[common], help="synchronous critical points on a regular graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--coupling", help="JSON file, inline JSON, or family:key=val,...")
    s.add_argument("--grid", help="alpha/beta sweep lo:hi:steps with a quadratic coupling")
    s.add_argument("--box", default="-2:2", help="search interval for synchronous points")
    s.add_argument("--resolution", type=int, default=512)
    s.add_argument("--svg", help="also write a wedge diagram to this file")
    s.set_defaults(func=cmd_sync_classify)

    s = sub.add_parser("kmn", parents=[common], help="synchronous classification on K_{m,n}")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--coupling")
    s.add_argument("--grid")
    s.add_argument("--box", default="-2:2")
    s.add_argument("--resolution", type=int, default=512)
    s.set_defaults(func=cmd_kmn)

    s = sub.add_parser("dm-classify", parents=[common], help="2-colour patterns on a (d,m)-graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--coupling", required=True)
    s.add_argument("--box", default="-2:2")
    s.add_argument("--resolution", type=int, default=128)
    s.set_defaults(func=cmd_dm_classify)

    s = sub.add_parser("ring-equilibria", parents=[common], help="equilibrium classes on an n-ring")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--coupling", default="cosine")
    s.add_argument("--relaxed", action="store_true", help="accept couplings failing only the monotonicity condition")
    s.set_defaults(func=cmd_ring_equilibria)

    s = sub.add_parser("ring-ground-state", parents=[common], help="ground state formula vs multistart flow")
    s.add_argument("--n", required=True, help="ring size, list, or range a:b")
    s.add_argument("--coupling", default="cosine")
    s.add_argument("--starts", type=int, default=200)
    s.add_argument("--relaxed", action="store_true")
    s.set_defaults(func=cmd_ring_ground_state)

    s = sub.add_parser("flow", parents=[common], help="integrate the gradient flow")
    s.add_argument("--function", required=True, help="function JSON file or inline JSON")
    s.add_argument("--x0", help="comma-separated start; random from --seed if omitted")
    s.add_argument("--integrator", choices=("rk4", "adaptive"), default="rk4")
    s.add_argument("--h", type=float, default=1e-2)
    s.add_argument("--T", type=float, default=1e4)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--torus", action="store_true")
    s.add_argument("--record-every", type=int, default=10)
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("inertia-bounds", parents=[common], help="sign-based inertia bounds of a weighted Laplacian")
    s.add_argument("--graph", required=True)
    s.add_argument("--weights", help="comma-separated weights in sorted edge order")
    s.add_argument("--signs", help="string over + and - in sorted edge order")
    s.add_argument("--samples", type=int, default=0, help="extra random weightings with the same signs")
    s.set_defaults(func=cmd_inertia_bounds)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Emitter(args)
    try:
        args.func(args, out)
        out.finish()
        return EXIT_OK
    except FlowError as exc:
        out.finish()
        print(f"gradnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SynchronyError, NotCriticalError, RingError, AdmissibilityError, SpectrumError) as exc:
        print(f"gradnet: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (InputError, GraphError, CouplingError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"gradnet: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
