"""Command line front end: ``cellavg simulate`` and ``cellavg converge``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .analysis import (GridFamily, QuadratureError, fmt, numerical_moment,
                       project_density, run_convergence_study)
from .cat import make_rhs
from .kernels import (INITIAL_CONDITIONS, KERNEL_FAMILIES,
                      analytic_constant_kernel_reference,
                      analytic_truncated_constant_kernel_reference, make_kernel)
from .timestepper import IntegrationConfig, IntegrationError, integrate, suggest_dt

log = logging.getLogger("cellavg")

AUTO_DT_SAFETY = 0.1


class UsageError(Exception):
    pass


def _dt_arg(s: str):
    if s == "auto":
        return s
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {s!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kernel", choices=KERNEL_FAMILIES, default="constant")
    common.add_argument("--kernel-param", type=float, default=1.0)
    common.add_argument("--grid", choices=("uniform", "geometric"), default="uniform")
    common.add_argument("--R", type=float, default=10.0, help="right end of the volume domain")
    common.add_argument("--cells", type=int, default=64, help="cell count (coarsest level for converge)")
    common.add_argument("--ratio", type=float, default=None, help="boundary ratio r of a geometric grid")
    common.add_argument("--ic", choices=sorted(INITIAL_CONDITIONS), default="exponential")
    common.add_argument("--t-end", type=float, default=1.0)
    common.add_argument("--dt", type=_dt_arg, default="auto", help="step size or 'auto'")
    common.add_argument("--out", type=Path, required=True)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--cadence", type=int, default=1, help="record every N steps")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cellavg", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate one grid and write moments/final state")
    c = sub.add_parser("converge", parents=[common], help="grid refinement study against the analytic solution")
    c.add_argument("--levels", type=int, default=4)
    c.add_argument("--reference", choices=("truncated", "untruncated"), default="truncated",
                   help="exact solution of the equation truncated at R, or the closed form on ]0, inf[")
    return p


def _family(a) -> GridFamily:
    if a.grid == "geometric" and a.ratio is None:
        raise UsageError("--ratio is required for --grid geometric")
    try:
        return GridFamily(a.grid, a.R, a.cells, a.ratio if a.grid == "geometric" else None)
    except ValueError as e:
        raise UsageError(str(e)) from None


def resolve(a) -> dict:
    """Validate arguments and return the fully materialised run spec."""
    fam = _family(a)
    try:
        kern = make_kernel(a.kernel, a.kernel_param)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if not a.t_end >= 0:
        raise UsageError("--t-end must be >= 0")
    if a.dt != "auto" and not a.dt > 0:
        raise UsageError("--dt must be positive or 'auto'")
    if a.cadence < 1:
        raise UsageError("--cadence must be >= 1")
    spec = {
        "command": a.command,
        "kernel": a.kernel,
        "kernel_param": a.kernel_param,
        "grid": a.grid,
        "R": a.R,
        "cells": a.cells,
        "ratio": a.ratio if a.grid == "geometric" else None,
        "ic": a.ic,
        "t_end": a.t_end,
        "dt_mode": "auto" if a.dt == "auto" else "fixed",
        "format": a.format,
        "cadence": a.cadence,
        "version": __version__,
    }
    if a.command == "converge":
        if a.levels < 3:
            raise UsageError("--levels must be >= 3")
        if a.kernel != "constant" or a.ic != "exponential":
            raise UsageError("convergence studies need the constant kernel with the exponential initial condition")
        if not a.kernel_param > 0:
            raise UsageError("convergence studies need a positive kernel constant")
        spec["levels"] = a.levels
        spec["reference"] = a.reference
    g = fam.build()
    n0 = project_density(INITIAL_CONDITIONS[a.ic](), g)
    if a.dt == "auto":
        spec["dt"] = suggest_dt(n0, g, kern, AUTO_DT_SAFETY)
        spec["dt_safety"] = AUTO_DT_SAFETY
    else:
        spec["dt"] = a.dt
    return spec


def _sibling(path: Path, tag: str) -> Path:
    return path.with_name(f"{path.stem}.{tag}{path.suffix}")


def _write_table(path: Path, spec: dict, columns: List[str], rows: List[list], key: str) -> None:
    if spec["format"] == "json":
        doc = {"spec": spec, key: [dict(zip(columns, r)) for r in rows]}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return
    buf = io.StringIO()
    buf.write("# " + json.dumps(spec, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in r])
    path.write_text(buf.getvalue())


def cmd_simulate(spec: dict, out: Path) -> int:
    kern = make_kernel(spec["kernel"], spec["kernel_param"])
    fam = GridFamily(spec["grid"], spec["R"], spec["cells"], spec["ratio"])
    g = fam.build()
    N0 = project_density(INITIAL_CONDITIONS[spec["ic"]](), g)
    cfg = IntegrationConfig(spec["t_end"], spec["dt"], record_every=spec["cadence"])
    traj = integrate(N0, cfg, make_rhs(g, kern))

    series = [
        [float(t), numerical_moment(N, g, 0), numerical_moment(N, g, 1),
         numerical_moment(N, g, 2), float(N.min())]
        for t, N in traj
    ]
    N = traj.final
    final = [
        [i, float(g.pivots[i]), float(g.widths[i]), float(N[i]), float(N[i] / g.widths[i])]
        for i in range(g.n_cells)
    ]
    _write_table(out, spec, ["t", "M0", "M1", "M2", "min_count"], series, "timeseries")
    _write_table(_sibling(out, "final"), spec, ["i", "x_i", "dx_i", "N_i", "n_i"], final, "cells")
    log.info("wrote %s and %s", out, _sibling(out, "final"))
    return 0


def cmd_converge(spec: dict, out: Path) -> int:
    kern = make_kernel(spec["kernel"], spec["kernel_param"])
    fam = GridFamily(spec["grid"], spec["R"], spec["cells"], spec["ratio"])
    c = spec["kernel_param"]
    if spec["reference"] == "truncated":
        ref = analytic_truncated_constant_kernel_reference(spec["R"], c=c)
    else:
        ref = analytic_constant_kernel_reference(c=c)
    report = run_convergence_study(
        fam, spec["levels"], kern, ref, spec["t_end"], spec["dt"],
        progress=lambda lv: log.info("level %d: I=%d error=%.6e", lv.level, lv.I, lv.error),
    )
    text = report.to_json(spec) if spec["format"] == "json" else report.to_csv(spec)
    out.write_text(text)
    print("eoc")
    for v in report.eoc:
        print(fmt(v))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        spec = resolve(a)
    except (UsageError, QuadratureError) as e:
        parser.print_usage(sys.stderr)
        print(f"cellavg: error: {e}", file=sys.stderr)
        return 2
    try:
        if a.command == "simulate":
            return cmd_simulate(spec, a.out)
        return cmd_converge(spec, a.out)
    except IntegrationError as e:
        print(f"cellavg: integration failed at t={e.t:.6g}, cell {e.i}: {e}", file=sys.stderr)
        return 1
    except (QuadratureError, OSError, ValueError) as e:
        print(f"cellavg: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
