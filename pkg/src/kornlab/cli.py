"""Batch command-line front end.

Subcommands::

    kornlab korn      FEM Korn-constant estimation (refinement sweep or mesh file)
    kornlab rigidity  synthesize and certify an extremal rigidity field
    kornlab shell     thin-shell blow-up experiment (CSV table + JSON summary)
    kornlab selftest  run the cross-module invariant suites

Every subcommand accepts ``--config FILE`` (flat JSON; explicit flags win)
and writes a JSON report embedding the exact configuration and the library
version.  Reports are deterministic for a fixed (config, seed) apart from
the timestamp field.  Exit codes: 0 success, 2 invalid input, 3 mathematical
degeneracy, 4 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
import time
from pathlib import Path

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DEGENERATE = 3
EXIT_SOLVER = 4


def _apply_thread_cap() -> None:
    cap = os.environ.get("KORNLAB_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _report_envelope(command: str, config: dict, result: dict) -> dict:
    from . import __version__

    return {
        "command": command,
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "config": config,
        "result": result,
    }


def _write_report(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _merge_config(args: argparse.Namespace, parser_keys: set[str]) -> dict:
    """Flat-JSON config with CLI-flag override precedence."""
    config = {}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config file: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a flat JSON object")
        unknown = set(loaded) - parser_keys
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    for key in parser_keys:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    return config


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in re.split(r"[,\s]+", text.strip()) if tok]


def _parse_pair(text: str) -> tuple[float, float]:
    vals = _parse_float_list(text)
    if len(vals) != 2:
        raise ValueError(f"expected two numbers, got {text!r}")
    return vals[0], vals[1]


_TERM_RE = re.compile(
    r"^\s*(?P<coeff>[+-]?\d*\.?\d+(?:[eE][+-]?\d+)?)?\s*\*?\s*"
    r"(?:(?P<fn>cos|sin)\(\s*(?P<k>\d*)\s*\*?\s*t\s*\))?\s*$"
)


def parse_profile(text: str) -> tuple[dict[int, float], dict[int, float]]:
    """Parse profiles like ``0.2 + 0.05*cos(3t) - 0.1*sin(2*t)`` into
    cosine/sine coefficient maps."""
    cos_coeffs: dict[int, float] = {}
    sin_coeffs: dict[int, float] = {}
    pieces = re.findall(r"[+-]?[^+-]+", text.replace(" ", ""))
    if not pieces:
        raise ValueError(f"empty profile {text!r}")
    for piece in pieces:
        m = _TERM_RE.match(piece)
        if not m or (m.group("coeff") is None and m.group("fn") is None):
            raise ValueError(f"cannot parse profile term {piece!r}")
        coeff = float(m.group("coeff")) if m.group("coeff") else (
            -1.0 if piece.startswith("-") else 1.0
        )
        if m.group("fn") is None:
            cos_coeffs[0] = cos_coeffs.get(0, 0.0) + coeff
        else:
            k = int(m.group("k")) if m.group("k") else 1
            target = cos_coeffs if m.group("fn") == "cos" else sin_coeffs
            target[k] = target.get(k, 0.0) + coeff
    return cos_coeffs, sin_coeffs


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------

def cmd_korn(args: argparse.Namespace) -> int:
    keys = {"domain", "refine", "bc", "tol", "mesh_file", "store_maximizer", "report"}
    config = _merge_config(args, keys)
    config.setdefault("domain", "square")
    config.setdefault("refine", 5)
    config.setdefault("bc", "tangential")
    config.setdefault("tol", 1e-10)
    config.setdefault("store_maximizer", False)

    from . import kornfem
    from .mesh import load_mesh

    if config.get("mesh_file"):
        mesh = load_mesh(config["mesh_file"])
        estimates = [kornfem.korn_constant(mesh, bc=config["bc"], tol=config["tol"])]
    else:
        # level 1 upward: level-0 stock meshes have no admissible fields
        levels = list(range(1, int(config["refine"]) + 2))
        estimates = kornfem.korn_sweep(
            config["domain"], levels, bc=config["bc"], tol=config["tol"]
        )
    seq = [est.kappa_sq for est in estimates]
    monotone = all(b >= a - 1e-12 * max(1.0, abs(a)) for a, b in zip(seq, seq[1:]))
    result = {
        "levels": [est.to_dict(include_maximizer=config["store_maximizer"]) for est in estimates],
        "kappa_sq_sequence": seq,
        "kappa_sq_final": seq[-1],
        "monotone_nondecreasing": monotone,
    }
    _write_report(config.get("report"), _report_envelope("korn", config, result))
    return EXIT_OK


def cmd_rigidity(args: argparse.Namespace) -> int:
    keys = {"profile", "amplitude", "width", "center", "alpha_file", "r0",
            "n", "box", "report"}
    config = _merge_config(args, keys)
    config.setdefault("profile", "dipole-bump")
    config.setdefault("amplitude", 1.0)
    config.setdefault("r0", 0.0)
    config.setdefault("n", 512)
    config.setdefault("box", 20.0)

    from . import rigidity
    from .gridfield import PeriodicGrid, ScalarField, load_field
    from .mat2 import Rotation

    if config.get("alpha_file"):
        alpha = load_field(config["alpha_file"])
        if not isinstance(alpha, ScalarField):
            raise ValueError("alpha file must hold a single-component field")
    else:
        grid = PeriodicGrid(int(config["n"]), float(config["box"]))
        name = config["profile"]
        if name == "gaussian-bump":
            config.setdefault("width", 1.0)
            center = _parse_pair(config.get("center", "0,0")) if isinstance(
                config.get("center"), str) else tuple(config.get("center") or (0.0, 0.0))
            alpha = rigidity.gaussian_bump(
                grid, amplitude=float(config["amplitude"]),
                width=float(config["width"]), center=center)
        elif name == "dipole-bump":
            config.setdefault("width", 0.8)
            offset = _parse_pair(config.get("center", "1.25,0")) if isinstance(
                config.get("center"), str) else tuple(config.get("center") or (1.25, 0.0))
            alpha = rigidity.dipole_bump(
                grid, amplitude=float(config["amplitude"]),
                width=float(config["width"]), offset=offset)
        else:
            raise ValueError(f"unknown profile {name!r}; "
                             "use gaussian-bump, dipole-bump, or --alpha-file")

    _, report = rigidity.synthesize_extremal(alpha, Rotation(float(config["r0"])))
    _write_report(config.get("report"),
                  _report_envelope("rigidity", config, report.to_dict()))
    return EXIT_OK


def cmd_shell(args: argparse.Namespace) -> int:
    keys = {"profile", "coeffs", "h_list", "angular", "radial", "csv", "report"}
    config = _merge_config(args, keys)
    config.setdefault("h_list", "0.1,0.05,0.025,0.0125")
    config.setdefault("angular", 2048)
    config.setdefault("radial", 4)

    from .shells import DEFAULT_COS_COEFFS, BlowupTable, ShellSpec, blowup_experiment

    if config.get("coeffs"):
        raw = json.loads(Path(config["coeffs"]).read_text())
        cos_coeffs = {int(k): float(v) for k, v in raw.get("cos", {}).items()}
        sin_coeffs = {int(k): float(v) for k, v in raw.get("sin", {}).items()}
    elif config.get("profile"):
        cos_coeffs, sin_coeffs = parse_profile(config["profile"])
    else:
        cos_coeffs, sin_coeffs = dict(DEFAULT_COS_COEFFS), {}

    h_list = config["h_list"]
    if isinstance(h_list, str):
        h_list = _parse_float_list(h_list)
    h_list = [float(h) for h in h_list]
    if not h_list:
        raise ValueError("h list is empty")

    spec = ShellSpec(
        cos_coeffs=cos_coeffs,
        sin_coeffs=sin_coeffs,
        h=h_list[0],
        angular_resolution=int(config["angular"]),
        radial_layers=int(config["radial"]),
    )
    table: BlowupTable = blowup_experiment(spec, h_list)

    if config.get("csv"):
        with open(config["csv"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["h", "grad_norm", "symgrad_norm", "ratio", "tangency_residual"])
            for row in table.rows:
                writer.writerow([row.h, row.grad_norm, row.symgrad_norm,
                                 row.ratio, row.tangency_residual])
    _write_report(config.get("report"),
                  _report_envelope("shell", config, table.to_dict()))
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    keys = {"seed", "samples", "break_det_constant", "report"}
    config = _merge_config(args, keys)
    config.setdefault("seed", 0)
    config.setdefault("samples", 20000)
    config.setdefault("break_det_constant", False)

    from .selftest import run_selftest

    results = run_selftest(
        seed=int(config["seed"]),
        samples=int(config["samples"]),
        det_constant=2.0 if config["break_det_constant"] else None,
    )
    all_pass = all(r["passed"] for r in results)
    for r in results:
        status = "PASS" if r["passed"] else "FAIL"
        sys.stdout.write(f"[{status}] {r['name']}: residual={r['residual']:.3e} "
                         f"(bound {r['bound']:.1e})\n")
    result = {"properties": results, "all_passed": all_pass}
    if config.get("report"):
        _write_report(config["report"], _report_envelope("selftest", config, result))
    return EXIT_OK if all_pass else 1


# ---------------------------------------------------------------------------
# Parser and entry point.
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kornlab",
        description="Korn and rigidity constant laboratory (batch runs).",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    korn = sub.add_parser("korn", help="FEM Korn-constant estimation")
    korn.add_argument("--domain", choices=["square", "disk", "annulus", "shell"])
    korn.add_argument("--refine", type=int, help="number of refinement steps")
    korn.add_argument("--bc", choices=["tangential", "dirichlet"])
    korn.add_argument("--tol", type=float, help="Rayleigh stagnation tolerance")
    korn.add_argument("--mesh-file", dest="mesh_file", help="JSON mesh instead of a builtin domain")
    korn.add_argument("--store-maximizer", dest="store_maximizer",
                      action="store_const", const=True, default=None)
    korn.set_defaults(func=cmd_korn)

    rig = sub.add_parser("rigidity", help="synthesize an extremal rigidity field")
    rig.add_argument("--profile", choices=["gaussian-bump", "dipole-bump"])
    rig.add_argument("--amplitude", type=float)
    rig.add_argument("--width", type=float)
    rig.add_argument("--center", help="x,y center (gaussian) or lobe offset (dipole)")
    rig.add_argument("--alpha-file", dest="alpha_file", help="field file with the angle profile")
    rig.add_argument("--r0", type=float, help="far-field rotation angle (radians)")
    rig.add_argument("--n", type=int, help="grid samples per axis (power of two)")
    rig.add_argument("--box", type=float, help="box side length")
    rig.set_defaults(func=cmd_rigidity)

    shell = sub.add_parser("shell", help="thin-shell blow-up experiment")
    shell.add_argument("--profile", help='profile string, e.g. "0.2+0.05*cos(3t)"')
    shell.add_argument("--coeffs", help="JSON file {cos: {k: c}, sin: {k: c}}")
    shell.add_argument("--h-list", dest="h_list", help="comma-separated thicknesses")
    shell.add_argument("--angular", type=int, help="angular samples")
    shell.add_argument("--radial", type=int, help="radial layers")
    shell.add_argument("--csv", help="CSV output path for the blow-up table")
    shell.set_defaults(func=cmd_shell)

    selftest = sub.add_parser("selftest", help="run the invariant suites")
    selftest.add_argument("--seed", type=int)
    selftest.add_argument("--samples", type=int)
    selftest.add_argument("--break-det-constant", dest="break_det_constant",
                          action="store_const", const=True, default=None,
                          help="flip the determinant identity constant to the "
                               "incorrect value 2; the det property must then fail")
    selftest.set_defaults(func=cmd_selftest)

    for p in (korn, rig, shell, selftest):
        p.add_argument("--config", help="flat JSON config; explicit flags override")
        p.add_argument("--report", help="JSON report path (default: stdout)")
    return parser


def main(argv: list[str] | None = None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)

    from .errors import (
        CurlResidualTooLarge,
        DegenerateRotation,
        InfiniteQuotient,
        MeshValidationError,
        SolverFailure,
        ZeroDistance,
    )

    try:
        return args.func(args)
    except (MeshValidationError, CurlResidualTooLarge, ValueError) as exc:
        sys.stderr.write(f"kornlab: invalid input: {exc}\n")
        return EXIT_INVALID
    except (ZeroDistance, InfiniteQuotient, DegenerateRotation) as exc:
        sys.stderr.write(f"kornlab: degenerate problem: {exc}\n")
        return EXIT_DEGENERATE
    except SolverFailure as exc:
        sys.stderr.write(f"kornlab: solver failure: {exc}\n")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
