"""Command-line front end.

Every run writes ``report.json`` plus CSV tables and PNG figures into the
output directory and echoes the report on stdout. Exit status is 0 on
success, 2 on invalid input and 3 on numerical failure; failures print one
line ``ERROR <code>: <detail>`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .errors import LeakwiseError, NumericalError, ValidationError
from .leakage import (
    FadingModel,
    capacity_colored,
    capacity_fading,
    capacity_white,
    compare_leakage_capacity,
    leakage_colored,
    leakage_fading,
    leakage_fading_output,
    leakage_output_constrained,
    leakage_parallel,
    leakage_white,
)
from .mask import (
    design_fading,
    design_finite,
    design_stationary,
    design_stationary_output_power,
    dual_fading,
    dual_finite,
    dual_stationary_distortion,
    dual_stationary_power,
)
from .sim import convergence_csv, empirical_mask_audit, szego_convergence
from .spectral import (
    ArmaModel,
    CovarianceMatrix,
    FrequencyGrid,
    SpectralDensity,
    arma_spectrum,
    default_grid_points,
    eig_sym,
    load_json,
)

BUDGET_FLAGS = ("distortion", "noise", "output_power", "power", "leakage_cap", "dual")
COMMANDS = ("leakage", "capacity", "design-mask", "dual", "compare", "simulate", "converge")


class UsageError(ValidationError):
    code = "usage"


class InputError(ValidationError):
    code = "input"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- input files -------------------------------------------------------------------

def load_input(path, grid: FrequencyGrid):
    """Read an input file and classify it by its keys.

    Returns ``(kind, obj)`` with kind one of ``spectrum``, ``covariance``,
    ``fading`` or ``eigenvalues``. ARMA models are expanded to a spectrum on
    ``grid``.
    """
    try:
        d = load_json(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(d, dict):
        raise InputError(f"{path}: top level must be an object")
    try:
        if "values" in d:
            return "spectrum", SpectralDensity.from_dict(d)
        if "innovation_variance" in d:
            return "spectrum", arma_spectrum(ArmaModel.from_dict(d), grid)
        if "rows" in d:
            return "covariance", CovarianceMatrix.from_dict(d)
        if "gains_sq" in d:
            return "fading", FadingModel.from_dict(d)
        if "eigenvalues" in d:
            return "eigenvalues", np.asarray(d["eigenvalues"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: malformed input ({exc})") from None
    except ValueError as exc:
        if isinstance(exc, LeakwiseError):
            raise
        raise InputError(f"{path}: malformed input ({exc})") from None
    raise InputError(f"{path}: unrecognised schema (keys: {', '.join(sorted(d))})")


# -- argument parsing --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", help="spectrum / ARMA / covariance / fading / eigenvalue JSON")
    common.add_argument("--grid-points", type=int, default=None,
                        help="frequency grid size M (default: $LEAKWISE_GRID_POINTS or 4096)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", default="leakwise_out", help="directory for report files")
    common.add_argument("--no-plot", action="store_true", help="skip PNG figures")
    common.add_argument("--white", action="store_true", help="white input/noise given by variances")
    common.add_argument("--sigma2", type=float, help="signal variance (white input or pre-fading)")
    common.add_argument("--side-info", action="store_true", help="fading realisations known to the designer")

    budgets = _Parser(add_help=False)
    budgets.add_argument("--distortion", type=float, help="distortion budget D")
    budgets.add_argument("--noise", type=float, help="noise power budget N")
    budgets.add_argument("--output-power", type=float, help="output power budget Y (or X-bar)")
    budgets.add_argument("--power", type=float, help="input power budget P (capacity)")
    budgets.add_argument("--leakage-cap", type=float, help="leakage cap R in bits")
    budgets.add_argument("--dual", type=float, metavar="R", help="switch a mask design to its dual with cap R")

    parser = _Parser(prog="leakwise", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"leakwise {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("leakage", parents=[common, budgets], help="channel leakage")
    p = sub.add_parser("capacity", parents=[common, budgets], help="channel capacity")
    p.add_argument("--noise-var", type=float, help="white noise variance (white/fading capacity)")
    p = sub.add_parser("design-mask", parents=[common, budgets], help="optimal privacy mask")
    p.add_argument("--diagonal-only", action="store_true", help="finite time: independent per-sample noise")
    p = sub.add_parser("dual", parents=[common, budgets], help="minimum budget for a leakage cap")
    p.add_argument("--output-constraint", action="store_true", help="minimise output power instead of distortion")
    p = sub.add_parser("compare", parents=[common, budgets], help="leakage vs capacity for matched moments")
    p.add_argument("--noise-spectrum", help="noise spectrum JSON for the capacity side")
    p = sub.add_parser("simulate", parents=[common, budgets], help="Monte Carlo audit of a finite-time mask")
    p.add_argument("--paths", type=int, default=100_000)
    p = sub.add_parser("converge", parents=[common, budgets], help="finite-block convergence to the stationary limit")
    p.add_argument("--horizons", default="16,64,256,512")
    return parser


def _budget(args) -> tuple[str, float]:
    given = [(k, getattr(args, k)) for k in BUDGET_FLAGS if getattr(args, k, None) is not None]
    if len(given) != 1:
        names = ", ".join("--" + k.replace("_", "-") for k, _ in given) or "none"
        raise UsageError(f"exactly one budget flag is required, got {names}")
    name, value = given[0]
    if not math.isfinite(value):
        raise UsageError(f"--{name.replace('_', '-')} must be finite")
    return name, value


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required here")


def _reject(args, *names):
    for n in names:
        v = getattr(args, n, None)
        if v not in (None, False):
            raise UsageError(f"--{n.replace('_', '-')} does not apply here")


def resolved_config(args, grid_points: int) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("output",)}
    cfg["grid_points"] = grid_points
    return cfg


# -- commands ----------------------------------------------------------------------------

class Run:
    """Collects report fields and artifact files for one invocation."""

    def __init__(self, args, outdir: Path, grid: FrequencyGrid):
        self.args = args
        self.outdir = outdir
        self.grid = grid
        self.files: dict[str, str] = {}
        self.plot = not args.no_plot

    def write(self, key: str, name: str, text: str):
        (self.outdir / name).write_text(text, encoding="utf-8")
        self.files[key] = name

    def figure(self, key: str, name: str, fn, *a, **kw):
        if self.plot:
            fn(*a, path=self.outdir / name, **kw)
            self.files[key] = name

    def input(self):
        _require(self.args, "input")
        return load_input(self.args.input, self.grid)


def _cmd_leakage(run: Run) -> dict:
    a = run.args
    bname, budget = _budget(a)
    if a.white:
        _require(a, "sigma2")
        if bname != "noise":
            raise UsageError("white leakage takes --noise")
        rep = leakage_white(a.sigma2, budget)
    else:
        kind, obj = run.input()
        if kind == "spectrum":
            _reject(a, "sigma2", "side_info")
            if bname == "noise":
                rep = leakage_colored(obj, budget)
            elif bname == "output_power":
                rep = leakage_output_constrained(obj, budget)
            else:
                raise UsageError("colored leakage takes --noise or --output-power")
            run.write("spectrum_csv", "noise_spectrum.csv",
                      SpectralDensity(obj.grid, rep.allocation.powers).to_csv())
            run.figure("spectrum_png", "noise_spectrum.png", plotting.plot_mask_spectrum,
                       obj, SpectralDensity(obj.grid, rep.allocation.powers),
                       title="Leakage-minimising noise spectrum")
        elif kind in ("eigenvalues", "covariance"):
            _reject(a, "sigma2", "side_info")
            if bname != "noise":
                raise UsageError("parallel leakage takes --noise")
            lam = obj if kind == "eigenvalues" else eig_sym(obj).eigenvalues
            rep = leakage_parallel(lam, budget)
        else:
            _require(a, "sigma2")
            if bname == "noise":
                rep = leakage_fading(obj, a.sigma2, budget, a.side_info)
            elif bname == "output_power":
                rep = leakage_fading_output(obj, a.sigma2, budget, a.side_info)
            else:
                raise UsageError("fading leakage takes --noise or --output-power")
    out = rep.to_dict()
    if rep.allocation is not None:
        run.write("allocation_csv", "allocation.csv", rep.allocation.to_csv())
        run.figure("allocation_png", "allocation.png", plotting.plot_allocation, rep.allocation)
    out["allocation_csv"] = run.files.get("allocation_csv")
    return out


def _cmd_capacity(run: Run) -> dict:
    a = run.args
    bname, budget = _budget(a)
    if bname != "power":
        raise UsageError("capacity takes --power")
    if a.white:
        _require(a, "noise_var")
        rep = capacity_white(budget, a.noise_var)
    else:
        kind, obj = run.input()
        if kind == "spectrum":
            _reject(a, "noise_var", "side_info")
            rep = capacity_colored(obj, budget)
        elif kind == "fading":
            _require(a, "noise_var")
            rep = capacity_fading(obj, a.noise_var, budget, a.side_info)
        else:
            raise UsageError(f"capacity needs a noise spectrum or fading model, got {kind}")
    out = rep.to_dict()
    if rep.allocation is not None:
        run.write("allocation_csv", "allocation.csv", rep.allocation.to_csv())
        run.figure("allocation_png", "allocation.png", plotting.plot_allocation, rep.allocation)
    out["allocation_csv"] = run.files.get("allocation_csv")
    return out


def _mask_outputs(run: Run, design, signal=None) -> dict:
    ns = design.noise_spec
    if isinstance(ns, SpectralDensity):
        run.write("spectrum_csv", "mask_spectrum.csv", ns.to_csv())
        run.figure("spectrum_png", "mask_spectrum.png", plotting.plot_mask_spectrum, signal, ns)
    elif isinstance(ns, CovarianceMatrix):
        run.write("covariance_csv", "mask_covariance.csv", ns.to_csv())
        run.figure("covariance_png", "mask_covariance.png", plotting.plot_covariance, ns.entries)
    else:
        rows = ["state,gain_sq,prob,variance"]
        f = signal
        rows += [f"{i},{g!r},{p!r},{v!r}" for i, (g, p, v)
                 in enumerate(zip(f.gains_sq.tolist(), f.probs.tolist(), np.asarray(ns).tolist()))]
        run.write("variances_csv", "mask_variances.csv", "\n".join(rows) + "\n")
    return design.to_dict()


def _design(run: Run, kind, obj, bname, budget, dual_output=False):
    a = run.args
    if kind == "spectrum":
        _reject(a, "sigma2", "side_info")
        if bname == "distortion":
            return design_stationary(obj, budget)
        if bname == "output_power":
            return design_stationary_output_power(obj, budget)
        if bname in ("dual", "leakage_cap"):
            return (dual_stationary_power if dual_output else dual_stationary_distortion)(obj, budget)
    elif kind == "fading":
        _require(a, "sigma2")
        if bname == "distortion":
            return design_fading(obj, a.sigma2, budget, a.side_info)
        if bname in ("dual", "leakage_cap"):
            return dual_fading(obj, a.sigma2, budget, a.side_info)
    elif kind == "covariance":
        _reject(a, "sigma2", "side_info")
        if bname == "distortion":
            return design_finite(obj, budget, diagonal_only=getattr(a, "diagonal_only", False))
        if bname in ("dual", "leakage_cap"):
            return dual_finite(obj, budget)
    else:
        raise UsageError(f"mask design needs a spectrum, ARMA, fading or covariance input, got {kind}")
    raise UsageError(f"--{bname.replace('_', '-')} is not a valid budget for a {kind} mask")


def _cmd_design(run: Run) -> dict:
    bname, budget = _budget(run.args)
    if bname in ("noise", "power", "leakage_cap"):
        raise UsageError("design-mask takes --distortion, --output-power or --dual R")
    kind, obj = run.input()
    if bname == "output_power" and kind != "spectrum":
        raise UsageError("--output-power masks are only defined for stationary inputs")
    design = _design(run, kind, obj, bname, budget)
    return _mask_outputs(run, design, obj)


def _cmd_dual(run: Run) -> dict:
    a = run.args
    bname, budget = _budget(a)
    if bname not in ("leakage_cap", "dual"):
        raise UsageError("dual takes --leakage-cap R")
    kind, obj = run.input()
    if a.output_constraint and kind != "spectrum":
        raise UsageError("--output-constraint only applies to stationary inputs")
    design = _design(run, kind, obj, "leakage_cap", budget, dual_output=a.output_constraint)
    return _mask_outputs(run, design, obj)


def _cmd_compare(run: Run) -> dict:
    a = run.args
    given = [k for k in BUDGET_FLAGS if getattr(a, k, None) is not None]
    if a.white:
        _require(a, "sigma2")
        if given != ["noise"]:
            raise UsageError("white compare takes --sigma2 and --noise only")
        res = compare_leakage_capacity(a.sigma2, a.noise)
    else:
        if given:
            raise UsageError("spectral compare takes its moments from the spectra; no budget flags")
        _require(a, "noise_spectrum")
        kx, sx = run.input()
        kz, sz = load_input(a.noise_spectrum, run.grid)
        if kx != "spectrum" or kz != "spectrum":
            raise UsageError("compare needs two spectra (or ARMA models)")
        res = compare_leakage_capacity(sx, sz)
    return res.to_dict()


def _cmd_simulate(run: Run) -> dict:
    a = run.args
    bname, budget = _budget(a)
    kind, cov = run.input()
    if kind != "covariance":
        raise UsageError("simulate needs a covariance input")
    if bname == "distortion":
        design = design_finite(cov, budget)
    elif bname in ("dual", "leakage_cap"):
        design = dual_finite(cov, budget)
    else:
        raise UsageError("simulate takes --distortion or --dual R")
    if a.paths < 2:
        raise UsageError("--paths must be at least 2")
    audit = empirical_mask_audit(design, cov, a.paths, a.seed)
    run.write("covariance_csv", "mask_covariance.csv", design.noise_spec.to_csv())
    return audit.to_dict()


def _cmd_converge(run: Run) -> dict:
    a = run.args
    bname, budget = _budget(a)
    if bname != "noise":
        raise UsageError("converge takes --noise")
    kind, s = run.input()
    if kind != "spectrum":
        raise UsageError("converge needs a spectrum or ARMA input")
    try:
        horizons = [int(h) for h in a.horizons.split(",") if h.strip()]
    except ValueError:
        raise UsageError(f"--horizons must be comma-separated integers, got {a.horizons!r}") from None
    limit, rows = szego_convergence(s, budget, horizons)
    run.write("convergence_csv", "convergence.csv", convergence_csv(rows))
    run.figure("convergence_png", "convergence.png", plotting.plot_convergence, limit, rows)
    errs = [r.abs_error for r in rows]
    return {
        "limit_bits": limit,
        "rows": [{"K": r.horizon, "per_sample_bits": r.per_sample_bits, "abs_error": r.abs_error}
                 for r in rows],
        "monotone": all(b < e for e, b in zip(errs, errs[1:])),
    }


HANDLERS = {
    "leakage": _cmd_leakage,
    "capacity": _cmd_capacity,
    "design-mask": _cmd_design,
    "dual": _cmd_dual,
    "compare": _cmd_compare,
    "simulate": _cmd_simulate,
    "converge": _cmd_converge,
}


def run(argv=None) -> dict:
    """Parse ``argv``, execute, write artifacts and return the report."""
    args = build_parser().parse_args(argv)
    m = args.grid_points if args.grid_points is not None else default_grid_points()
    grid = FrequencyGrid(m)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    r = Run(args, outdir, grid)
    result = HANDLERS[args.command](r)
    report = {
        "tool": "leakwise",
        "version": __version__,
        "command": args.command,
        "config": resolved_config(args, m),
        "result": result,
        "files": dict(sorted(r.files.items())),
    }
    # flat keys for the leakage/capacity reports
    for key in ("regime", "budget", "leakage_bits", "capacity_bits", "zeta", "allocation_csv"):
        if key in result:
            report[key] = result[key]
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"
    (outdir / "report.json").write_text(text, encoding="utf-8")
    return report


def load_schema(command: str) -> dict:
    """JSON schema of the report written by ``command``."""
    if command not in COMMANDS:
        raise KeyError(command)
    text = resources.files("leakwise").joinpath("schemas", f"{command}.schema.json").read_text()
    return json.loads(text)


def main(argv=None) -> int:
    try:
        report = run(argv)
    except NumericalError as exc:
        print(f"ERROR {exc.code}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 3
    except LeakwiseError as exc:
        print(f"ERROR {exc.code}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ERROR io: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
