"""Command-line front end.

Exit codes: 0 success, 1 I/O error, 2 invalid input, 3 resonance or
non-convergence, 4 verification thresholds not met.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

from . import __version__
from .branch import (BranchConfig, ConvergenceError, ResonanceError, almost_periodic_demo,
                     branch_csv_rows, branch_from_dict, branch_to_dict, continue_branch,
                     nonuniqueness_demo)
from .freqset import (AdmissiblePair, check_admissible, enumerate_modes, even_periodic_pair,
                      interleaved_pair, mode_from_text, pair_from_dict, pair_to_dict,
                      two_generator_pair)
from .reconstruct import StripGrid, Thresholds, build_field, emit_profile, verify_system
from .waveop import SurfaceError, WaveParams, dispersion_table, mode_frequency, surface_window

log = logging.getLogger("apwave")

EXIT_OK, EXIT_IO, EXIT_INPUT, EXIT_REFUSED, EXIT_FAILED = 0, 1, 2, 3, 4

DISPERSION_COLUMNS = ["k", "lambda_plus", "lambda_minus", "residual_plus", "residual_minus",
                      "transversality_plus", "transversality_minus",
                      "stagnation_plus", "stagnation_minus"]

PRESETS = {
    "periodic": lambda cutoff, cb: even_periodic_pair(cutoff if cutoff is not None else 20.5,
                                                      coeff_bound=cb),
    "interleaved": lambda cutoff, cb: interleaved_pair(cutoff if cutoff is not None else 20.5,
                                                       coeff_bound=cb),
    "two-generator": lambda cutoff, cb: two_generator_pair(
        coeff_bound=cb if cb is not None else 4, cutoff=cutoff if cutoff is not None else 10.0),
}


class InputError(ValueError):
    """Bad configuration; the message names the offending field."""


# -- config ------------------------------------------------------------------

def _load_structured(path: str | Path) -> Any:
    text = Path(path).read_text()
    return yaml.safe_load(text)


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    data = _load_structured(path)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InputError(f"config: top level of {path} must be a mapping")
    return data


def _section(cfg: Mapping, name: str) -> dict:
    sec = cfg.get(name) or {}
    if not isinstance(sec, dict):
        raise InputError(f"{name}: must be a mapping")
    return dict(sec)


def _pick(flag, sec: Mapping, key: str, default=None):
    return flag if flag is not None else sec.get(key, default)


def params_from(args, cfg: Mapping) -> WaveParams:
    sec = _section(cfg, "params")
    try:
        return WaveParams(gamma=float(_pick(args.gamma, sec, "gamma", 0.0)),
                          g=float(_pick(args.g, sec, "g", 9.8)),
                          h=float(_pick(args.h, sec, "h", 1.0)))
    except (TypeError, ValueError) as exc:
        raise InputError(f"params.{exc}") from exc


def pair_from(args, cfg: Mapping) -> AdmissiblePair:
    cutoff = getattr(args, "cutoff", None)
    cb = getattr(args, "coeff_bound", None)
    if getattr(args, "pair", None):
        try:
            data = _load_structured(args.pair)
        except yaml.YAMLError as exc:
            raise InputError(f"pair: cannot parse {args.pair}: {exc}") from exc
    elif getattr(args, "preset", None):
        return _preset(args.preset, cutoff, cb)
    elif "pair" in cfg:
        data = cfg["pair"]
    else:
        return _preset("periodic", cutoff, cb)
    if isinstance(data, dict) and "preset" in data:
        return _preset(data["preset"], _pick(cutoff, data, "cutoff"), _pick(cb, data, "coeff_bound"))
    if not isinstance(data, dict):
        raise InputError("pair: definition must be a mapping")
    try:
        pair = pair_from_dict(data)
        if cutoff is not None or cb is not None:
            pair = pair.with_truncation(cb, cutoff)
    except (TypeError, ValueError) as exc:
        raise InputError(f"pair: {exc}") from exc
    return pair


def require_admissible(pair: AdmissiblePair) -> AdmissiblePair:
    report = check_admissible(pair)
    if not report.ok:
        raise InputError("pair: not admissible: " + "; ".join(str(v) for v in report.violations))
    return pair


def _preset(name: str, cutoff, cb) -> AdmissiblePair:
    if name not in PRESETS:
        raise InputError(f"pair.preset: unknown preset {name!r}; choose from {sorted(PRESETS)}")
    try:
        return PRESETS[name](None if cutoff is None else float(cutoff), None if cb is None else int(cb))
    except (TypeError, ValueError) as exc:
        raise InputError(f"pair: {exc}") from exc


def branch_config_from(args, cfg: Mapping, pair: AdmissiblePair) -> BranchConfig:
    sec = _section(cfg, "branch")
    root = _pick(args.root_sign, sec, "root_sign", "+")
    root = {"+": 1, "-": -1, "1": 1, "-1": -1, "+1": 1}.get(str(root).strip())
    if root is None:
        raise InputError("branch.root_sign: must be '+' or '-'")
    try:
        k0 = mode_from_text(_pick(args.k0, sec, "k0", "cos:" + ",".join(["1"] + ["0"] * (pair.basis.dim - 1))),
                            pair.basis.dim)
    except ValueError as exc:
        raise InputError(f"branch.k0: {exc}") from exc
    try:
        return BranchConfig(
            pair=pair, k0=k0, root_sign=root,
            s_max=float(_pick(args.s_max, sec, "s_max", 1e-2)),
            n_steps=int(_pick(args.steps, sec, "n_steps", 20)),
            newton_tol=float(_pick(args.newton_tol, sec, "newton_tol", 1e-11)),
            newton_max_iter=int(_pick(args.newton_max_iter, sec, "newton_max_iter", 25)),
            both_signs=bool(args.both_signs or sec.get("both_signs", False)),
            resonance_tol=float(_pick(args.resonance_tol, sec, "resonance_tol", 1e-8)),
        )
    except (TypeError, ValueError) as exc:
        raise InputError(f"branch.{exc}") from exc


def thresholds_from(args, cfg: Mapping) -> Thresholds:
    sec = _section(cfg, "verify")
    try:
        return Thresholds(
            bernoulli=float(_pick(args.bernoulli_tol, sec, "bernoulli", 1e-8)),
            boundary=float(_pick(args.boundary_tol, sec, "boundary", 1e-10)),
            order_min=float(_pick(args.order_min, sec, "order_min", 1.9)),
            order_max=float(_pick(args.order_max, sec, "order_max", 2.1)),
            cauchy_riemann=float(_pick(args.cr_tol, sec, "cauchy_riemann", 1e-6)),
        )
    except (TypeError, ValueError) as exc:
        raise InputError(f"verify.{exc}") from exc


# -- output ------------------------------------------------------------------

def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def csv_text(rows: Sequence[Mapping], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    wr.writeheader()
    for r in rows:
        wr.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def emit(text: str, path: str | Path | None) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def out_dir(args, cfg: Mapping) -> Path:
    d = Path(_pick(args.out, _section(cfg, "output"), "dir", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _figures(args) -> bool:
    return not getattr(args, "no_figures", False)


# -- commands ----------------------------------------------------------------

def cmd_freqset(args) -> int:
    cfg = load_config(args.config)
    pair = pair_from(args, cfg)
    if args.action == "check":
        report = check_admissible(pair)
        out = {"pair": pair_to_dict(pair), "report": report.to_dict()}
        emit(dumps(out), args.output)
        if not report.ok:
            for v in report.violations:
                print(f"violation: {v}", file=sys.stderr)
            return EXIT_INPUT
        return EXIT_OK
    try:
        modes = enumerate_modes(pair)
    except ValueError as exc:
        raise InputError(f"pair: {exc}") from exc
    rows = [{"kind": m.kind.value, "coeffs": list(m.vec), "freq": mode_frequency(pair, m)} for m in modes]
    if args.format == "csv":
        flat = [{"kind": r["kind"], "coeffs": " ".join(map(str, r["coeffs"])), "freq": r["freq"]}
                for r in rows]
        emit(csv_text(flat, ["kind", "coeffs", "freq"]), args.output)
    else:
        emit(dumps({"pair": pair_to_dict(pair), "modes": rows}), args.output)
    return EXIT_OK


def cmd_dispersion(args) -> int:
    cfg = load_config(args.config)
    p = params_from(args, cfg)
    pair = require_admissible(pair_from(args, cfg))
    rows = dispersion_table(p, pair)
    for r in rows:
        r["stagnation_plus"] = int(r["stagnation_plus"])
        r["stagnation_minus"] = int(r["stagnation_minus"])
    emit(csv_text(rows, DISPERSION_COLUMNS), args.output)
    return EXIT_OK


def cmd_branch(args) -> int:
    cfg = load_config(args.config)
    p = params_from(args, cfg)
    pair = require_admissible(pair_from(args, cfg))
    bcfg = branch_config_from(args, cfg, pair)
    d = out_dir(args, cfg)
    pts = continue_branch(p, bcfg)
    emit(dumps(branch_to_dict(p, bcfg, pts)), d / f"{args.name}.json")
    rows = branch_csv_rows(p, pts)
    emit(csv_text(rows, ["s", "lambda", "mu", "residual", "min_surface", "stagnation_flag"]),
         d / f"{args.name}.csv")
    if args.figures:
        from .plotting import plot_branch
        plot_branch(rows, d / f"{args.name}.png")
    print(f"{len(pts)} points, lambda* = {pts[0].lam!r}", file=sys.stderr)
    return EXIT_OK


def _read_branch(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"branch: {path} is not valid JSON: {exc}") from exc
    try:
        return branch_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"branch: malformed branch file {path}: {exc}") from exc


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    th = thresholds_from(args, cfg)
    p, bcfg, pts = _read_branch(args.branch)
    sec = _section(cfg, "verify")
    nx = int(_pick(args.nx, sec, "nx", 200))
    ny = int(_pick(args.ny, sec, "ny", 200))
    every = max(1, int(_pick(args.every, sec, "every", 1)))
    order_ny = int(_pick(args.order_ny, sec, "order_ny", 64))
    length = surface_window(bcfg.pair.basis.generators)
    grid = StripGrid.regular(p.h, nx, ny, 0.0, length)
    chosen = pts[::every]
    if pts and chosen[-1] is not pts[-1]:
        chosen.append(pts[-1])
    reports = [verify_system(p, build_field(p, q, grid), q, order_ny).to_dict(th) for q in chosen]
    ok = all(r["pass"] for r in reports)
    d = out_dir(args, cfg)
    summary = {
        "branch_file": str(args.branch),
        "thresholds": th.to_dict(),
        "grid": {"nx": nx, "ny": ny, "x_min": 0.0, "x_max": length, "order_ny": order_ny},
        "pass": ok,
        "max": {k: max((r[k] for r in reports), default=0.0)
                for k in ("bernoulli", "boundary_top", "boundary_bottom", "cauchy_riemann",
                          "laplacian_residual")},
        "reports": reports,
    }
    emit(dumps(summary), d / f"{args.name}.json")
    emit(csv_text(reports, ["s", "bernoulli", "boundary_top", "boundary_bottom", "cauchy_riemann",
                            "laplacian_residual", "laplacian_order", "laplacian_exact",
                            "stagnation", "conformality_margin", "pass"]),
         d / f"{args.name}.csv")
    if _figures(args):
        from .plotting import plot_residuals
        plot_residuals(reports, d / f"{args.name}.png")
    status = "PASS" if ok else "FAIL"
    print(f"verify {status}: {len(reports)} points, max bernoulli {summary['max']['bernoulli']:.3e}",
          file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAILED


def _profile_xs(length: float, n: int, centered: bool = True) -> np.ndarray:
    a = -length if centered else 0.0
    return np.linspace(a, length, n)


def _strip_branches(report: dict, keys) -> dict:
    return {k: v for k, v in report.items() if k not in keys}


def cmd_demo(args) -> int:
    cfg = load_config(args.config)
    sec = _section(cfg, "params")
    p = WaveParams(gamma=float(_pick(args.gamma, sec, "gamma", 1.0)),
                   g=float(_pick(args.g, sec, "g", 9.8)),
                   h=float(_pick(args.h, sec, "h", 1.0)))
    d = out_dir(args, cfg)
    fig = _figures(args)
    if args.which == "nonuniqueness":
        rep = nonuniqueness_demo(p, s_max=args.s_max, n_steps=args.steps or 10)
        a, b = rep["branches"]["cos"], rep["branches"]["sin"]
        xs = _profile_xs(2 * math.pi, args.n)
        profiles = {"cos branch": emit_profile(a[-1], xs, p.h), "sin branch": emit_profile(b[-1], xs, p.h)}
        out = _strip_branches(rep, ("branches",))
        out["profile_s"] = a[-1].s
        out["profile_lambda"] = {"cos": a[-1].lam, "sin": b[-1].lam}
        emit(dumps(out), d / "nonuniqueness.json")
        emit(csv_text(rep["rows"], list(rep["rows"][0])), d / "nonuniqueness.csv")
        emit(csv_text(profiles["cos branch"], ["x", "eta"]), d / "profile_cos.csv")
        emit(csv_text(profiles["sin branch"], ["x", "eta"]), d / "profile_sin.csv")
        if fig:
            from .plotting import plot_profiles
            plot_profiles(profiles, d / "nonuniqueness.png", "two waves at the same lambda*")
    else:
        rep = almost_periodic_demo(p, s_max=args.s_max, n_steps=args.steps or 20,
                                   coeff_bound=args.coeff_bound or 18)
        pts = rep["branch"]
        xs = _profile_xs(2 * math.pi, args.n)
        prof = emit_profile(pts[-1], xs, p.h)
        out = _strip_branches(rep, ("branch",))
        out["points"] = [q.to_dict() for q in pts]
        emit(dumps(out), d / "almostperiodic.json")
        emit(csv_text(prof, ["x", "eta"]), d / "profile_almostperiodic.csv")
        if fig:
            from .plotting import plot_profiles
            plot_profiles({f"s = {pts[-1].s:g}": prof}, d / "almostperiodic.png",
                          "branch from cos(2 sqrt(5) x)")
    return EXIT_OK


def cmd_profile(args) -> int:
    p, bcfg, pts = _read_branch(args.branch)
    if args.index is not None:
        if not -len(pts) <= args.index < len(pts):
            raise InputError(f"index: branch has {len(pts)} points")
        pt = pts[args.index]
    else:
        pt = pts[-1]
    length = args.length if args.length is not None else surface_window(bcfg.pair.basis.generators)
    xs = _profile_xs(length, args.n, centered=not args.from_zero)
    rows = emit_profile(pt, xs, p.h)
    emit(csv_text(rows, ["x", "eta"]), args.output)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_params(sp, gamma_default_note="0"):
    sp.add_argument("--gamma", type=float, help=f"vorticity (1/s), default {gamma_default_note}")
    sp.add_argument("--g", type=float, help="gravity (m/s^2), default 9.8")
    sp.add_argument("--h", type=float, help="conformal mean depth (m), default 1")


def _add_pair(sp):
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--pair", help="pair definition file (YAML or JSON)")
    grp.add_argument("--preset", choices=sorted(PRESETS), help="built-in pair")
    sp.add_argument("--cutoff", type=float, help="frequency cutoff (1/m)")
    sp.add_argument("--coeff-bound", type=int, help="max |lattice coefficient|")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="apwave", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("--config", help="YAML config (flags override it)")
    sub = ap.add_subparsers(dest="command", required=True)

    fs = sub.add_parser("freqset", help="check or enumerate a frequency pair")
    fs.add_argument("action", choices=["check", "gen"])
    _add_pair(fs)
    fs.add_argument("--format", choices=["json", "csv"], default="json")
    fs.add_argument("-o", "--output", help="output file (default stdout)")
    fs.set_defaults(func=cmd_freqset)

    dp = sub.add_parser("dispersion", help="bifurcation values for every retained frequency (CSV)")
    _add_params(dp)
    _add_pair(dp)
    dp.add_argument("-o", "--output", help="output file (default stdout)")
    dp.set_defaults(func=cmd_dispersion)

    br = sub.add_parser("branch", help="continue a local bifurcation branch")
    _add_params(br)
    _add_pair(br)
    br.add_argument("--k0", help="kernel mode, e.g. cos:1 or cos:0,2 (default cos:1)")
    br.add_argument("--root-sign", choices=["+", "-"], help="dispersion root (default +)")
    br.add_argument("--s-max", type=float, help="largest amplitude s (m), default 1e-2")
    br.add_argument("--steps", type=int, help="continuation steps, default 20")
    br.add_argument("--newton-tol", type=float)
    br.add_argument("--newton-max-iter", type=int)
    br.add_argument("--resonance-tol", type=float,
                    help="multiplier magnitude counted as a kernel direction (default 1e-8)")
    br.add_argument("--both-signs", action="store_true", help="also continue to -s_max")
    br.add_argument("--out", help="output directory (default .)")
    br.add_argument("--name", default="branch", help="output file stem")
    br.add_argument("--figures", action="store_true", help="also render lambda(s), mu(s) to PNG")
    br.set_defaults(func=cmd_branch)

    vf = sub.add_parser("verify", help="reconstruct the flow and check the original system")
    vf.add_argument("branch", help="branch JSON file")
    vf.add_argument("--bernoulli-tol", type=float)
    vf.add_argument("--boundary-tol", type=float)
    vf.add_argument("--order-min", type=float)
    vf.add_argument("--order-max", type=float)
    vf.add_argument("--cr-tol", type=float)
    vf.add_argument("--nx", type=int, help="grid nodes in x (default 200)")
    vf.add_argument("--ny", type=int, help="grid nodes in y (default 200)")
    vf.add_argument("--order-ny", type=int, help="coarse y-intervals of the order test (default 64)")
    vf.add_argument("--every", type=int, help="verify every n-th point (last always included)")
    vf.add_argument("--out", help="output directory (default .)")
    vf.add_argument("--name", default="verify", help="output file stem")
    vf.add_argument("--no-figures", action="store_true")
    vf.set_defaults(func=cmd_verify)

    dm = sub.add_parser("demo", help="non-uniqueness or almost-periodic demonstration")
    dm.add_argument("which", choices=["nonuniqueness", "almostperiodic"])
    _add_params(dm, "1")
    dm.add_argument("--s-max", type=float, default=1e-2)
    dm.add_argument("--steps", type=int)
    dm.add_argument("--coeff-bound", type=int, help="almostperiodic lattice bound (default 18)")
    dm.add_argument("--n", type=int, default=801, help="profile samples")
    dm.add_argument("--out", help="output directory (default .)")
    dm.add_argument("--no-figures", action="store_true")
    dm.set_defaults(func=cmd_demo)

    pf = sub.add_parser("profile", help="surface profile (x, eta) of one branch point (CSV)")
    pf.add_argument("branch", help="branch JSON file")
    pf.add_argument("--index", type=int, help="point index (default last)")
    pf.add_argument("--n", type=int, default=801)
    pf.add_argument("--length", type=float, help="half-window (m), default 2 pi / min generator")
    pf.add_argument("--from-zero", action="store_true", help="sample [0, L] instead of [-L, L]")
    pf.add_argument("-o", "--output", help="output file (default stdout)")
    pf.set_defaults(func=cmd_profile)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResonanceError as exc:
        modes = ", ".join(str(m) for m in exc.modes)
        print(f"refused: {exc}" + (f"; resonant modes: {modes}" if modes else ""), file=sys.stderr)
        return EXIT_REFUSED
    except (ConvergenceError, SurfaceError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
