"""Command-line front end: ``run``, ``certify``, ``verify`` and ``mesh-gen``.

Exit codes
----------
0  success (``certify``: admissible)
1  configuration, mesh or I/O error
2  a step increment was too large (raise ``schedule.total_steps``)
3  linear solver failure
4  certification failure with ``certification.mode = "strict"``
5  ``certify``: hypotheses violated or ``beta0`` above ``beta_max``
6  ``verify``: at least one suite failed
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .coercivity import certify, spectral_of
from .config import load_config
from .constitutive import QuadPointState
from .errors import (CertificationError, MooneySLAError, ParameterError, SolverError,
                     StepTooLargeError)
from .mesh_io import rectangle_mesh, save_mesh

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_STEP = 2
EXIT_SOLVER = 3
EXIT_STRICT = 4
EXIT_NOT_CERTIFIED = 5
EXIT_VERIFY = 6

log = logging.getLogger("mooney_sla")


def _error(msg):
    print(f"error: {msg}", file=sys.stderr)


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "allow_unclamped", False):
        cfg.mesh.require_clamped = False
    return cfg, Path(args.config).resolve().parent


def cmd_run(args):
    try:
        cfg, base = _load(args)
        if args.out is not None:
            cfg.output.dir = str(args.out)
        mesh = cfg.build_mesh(base)
    except (OSError, MooneySLAError) as exc:
        _error(exc)
        return EXIT_CONFIG
    from .sla_driver import run

    try:
        result = run(cfg, mesh=mesh)
    except StepTooLargeError as exc:
        _error(exc)
        return EXIT_STEP
    except SolverError as exc:
        _error(exc)
        return EXIT_SOLVER
    except CertificationError as exc:
        _error(f"certification failed (strict mode): {exc}")
        return EXIT_STRICT
    except (OSError, MooneySLAError) as exc:
        _error(exc)
        return EXIT_CONFIG
    print(json.dumps(result.final_summary(), indent=2))
    return EXIT_OK


def cmd_certify(args):
    try:
        cfg, base = _load(args)
        params = cfg.params()
        mesh = cfg.build_mesh(base)
        m = cfg.material
        states = QuadPointState.initial(params, n=mesh.n_triangles, F=m.F_initial,
                                        p0=m.p0_initial)
        c = cfg.certification
        alpha = args.alpha if args.alpha is not None else c.alpha
        k = args.k if args.k is not None else c.k
        beta_max = args.beta_max if args.beta_max is not None else c.beta_max
        report = certify(spectral_of(states.B0, states.p0, params), alpha=alpha, k=k,
                         beta_max=beta_max, params=params, raise_on_failure=False)
    except (OSError, MooneySLAError) as exc:
        _error(exc)
        return EXIT_CONFIG
    text = json.dumps(report.to_dict(), indent=2)
    if args.output is not None:
        Path(args.output).write_text(text + "\n")
    print(text)
    if not report.admissible:
        names = sorted({v["condition"] for v in report.violations}) or ["beta_max"]
        _error(f"not certified: {', '.join(names)}")
        return EXIT_NOT_CERTIFIED
    return EXIT_OK


def cmd_verify(args):
    from .suites import SUITES, run_suite

    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = []
    for name in names:
        res = run_suite(name, seed=args.seed)
        print(res.line(), flush=True)
        results.append(res)
    failed = [r.name for r in results if not r.passed]
    summary = {"suite": args.suite, "seed": args.seed, "passed": not failed,
               "first_failure": failed[0] if failed else None,
               "results": [r.to_dict() for r in results]}
    text = json.dumps(summary, indent=2, default=float)
    if args.json is not None:
        Path(args.json).write_text(text + "\n")
    print(text)
    if failed:
        _error(f"verification failed: {failed[0]}")
        return EXIT_VERIFY
    return EXIT_OK


def _parse_labels(text):
    labels = {}
    for item in text.split(","):
        side, _, value = item.partition("=")
        if side.strip() not in ("bottom", "right", "top", "left") or not value.strip().isdigit():
            raise argparse.ArgumentTypeError(f"bad label item {item!r}; use side=label")
        labels[side.strip()] = int(value)
    return labels


def cmd_mesh_gen(args):
    try:
        mesh = rectangle_mesh(args.width, args.height, args.nx, args.ny, labels=args.labels,
                              origin=tuple(args.origin),
                              require_clamped=not args.allow_unclamped)
        save_mesh(mesh, args.output)
    except (OSError, MooneySLAError) as exc:
        _error(exc)
        return EXIT_CONFIG
    print(f"wrote {args.output}: {mesh.n_nodes} nodes, {mesh.n_triangles} triangles, "
          f"{len(mesh.boundary_edges)} boundary edges")
    return EXIT_OK


def build_parser():
    from .suites import SUITES

    parser = argparse.ArgumentParser(prog="mooney-sla", description=__doc__.splitlines()[0],
                                     epilog="exit codes: 0 ok, 1 config, 2 step too large, "
                                            "3 solver, 4 strict certification, "
                                            "5 not certified, 6 verification failed")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a load-stepping simulation")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--allow-unclamped", action="store_true",
                   help="accept meshes without clamped edges")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("certify", help="certify the initial state of a configuration")
    p.add_argument("config")
    p.add_argument("--alpha", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--beta-max", type=float)
    p.add_argument("-o", "--output", help="also write the report JSON here")
    p.add_argument("--allow-unclamped", action="store_true")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", help="run oracle suites")
    p.add_argument("suite", choices=list(SUITES) + ["all"])
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--json", help="also write the JSON summary here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mesh-gen", help="write a structured rectangle mesh")
    p.add_argument("output")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--height", type=float, default=1.0)
    p.add_argument("--nx", type=int, default=8)
    p.add_argument("--ny", type=int, default=8)
    p.add_argument("--origin", type=float, nargs=2, default=(0.0, 0.0))
    p.add_argument("--labels", type=_parse_labels,
                   default={"bottom": 3, "right": 1, "top": 1, "left": 1},
                   help="e.g. bottom=3,right=1,top=3,left=1")
    p.add_argument("--allow-unclamped", action="store_true")
    p.set_defaults(func=cmd_mesh_gen)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
