"""Command-line interface: ``python -m magwedge <command> [options]``.

Every command writes its results to ``--out`` (CSV, plain-text records,
optional SVG) together with ``metadata.txt`` holding the full configuration,
library versions and wall-clock time.  An existing non-empty output
directory is refused unless ``--overwrite`` is given.

Exit codes: 0 success, 1 solver error, 2 verification failure, 3 bad
arguments.
"""

from __future__ import annotations

import argparse
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, acceptance, band, halfplane, model1d, sector2d, svgplot
from .errors import BracketError, SolverError
from .halfplane import FieldSpec

EXIT_OK, EXIT_SOLVER, EXIT_VERIFY, EXIT_ARGS = 0, 1, 2, 3
COMMANDS = ("theta0", "mu1-curve", "sigma-curve", "band", "lambda",
            "figure1", "figure2", "figure4", "verify")
PI = math.pi

# per-command defaults; anything left as None falls back to these
DEFAULTS = {
    "theta0": dict(tol=1e-7),
    "mu1-curve": dict(tau_min=-1.0, tau_max=4.0, tau_step=0.05),
    "sigma-curve": dict(),
    "band": dict(alpha=PI / 2, gamma=PI / 10, tau_min=-1.0, tau_max=1.8, tau_step=0.1),
    "lambda": dict(alpha=PI / 2, gamma=PI / 10, tol=1e-3),
    "figure1": dict(alpha=PI / 2, gamma=PI / 10, L=14.0, tau_min=-1.0, tau_max=1.8,
                    tau_step=0.1),
    "figure2": dict(alpha=PI / 2, gamma=PI / 10, L=14.0),
    "figure4": dict(gamma=PI / 2, tol=1e-3),
    "verify": dict(),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_ARGS)


def build_parser():
    p = _Parser(prog="magwedge", description="Ground energy of the Neumann magnetic "
                "Laplacian on wedges, via the band function of the sector fibers.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--alpha", type=float, help="wedge opening in radians, in (0, pi)")
    p.add_argument("--gamma", type=float, help="field angle to the edge, in [0, pi/2]")
    p.add_argument("--tau", type=float, help="single edge frequency")
    p.add_argument("--tau-min", type=float)
    p.add_argument("--tau-max", type=float)
    p.add_argument("--tau-step", type=float)
    p.add_argument("--L", type=float, help="truncation x1 < L of the sector")
    p.add_argument("--resolution", type=int, default=sector2d.DEFAULT_RESOLUTION,
                   help="mesh nodes per unit length (default %(default)s)")
    p.add_argument("--tol", type=float, help="tolerance of the minimizations")
    p.add_argument("--out", default="out", help="output directory (default %(default)s)")
    p.add_argument("--svg", action="store_true", help="also write SVG plots")
    p.add_argument("--overwrite", action="store_true", help="reuse a non-empty --out")
    p.add_argument("--only", type=str, help="verify: comma-separated criterion numbers")
    return p


def resolve_config(ns):
    cfg = dict(vars(ns))
    for k, v in DEFAULTS[ns.command].items():
        if cfg.get(k) is None:
            cfg[k] = v
    a, g = cfg.get("alpha"), cfg.get("gamma")
    if a is not None and not 0 < a < PI:
        raise UsageError("--alpha must lie in (0, pi)")
    if g is not None and not 0 <= g <= PI / 2:
        raise UsageError("--gamma must lie in [0, pi/2]")
    if cfg["resolution"] < 8:
        raise UsageError("--resolution must be at least 8")
    if cfg.get("L") is not None and not cfg["L"] > 0:
        raise UsageError("--L must be positive")
    if cfg.get("tau_step") is not None and not cfg["tau_step"] > 0:
        raise UsageError("--tau-step must be positive")
    if cfg.get("tau_min") is not None and cfg.get("tau_max") is not None \
            and cfg["tau_max"] < cfg["tau_min"]:
        raise UsageError("--tau-max must not be below --tau-min")
    if cfg.get("only"):
        try:
            cfg["only"] = sorted({int(x) for x in cfg["only"].split(",")})
        except ValueError:
            raise UsageError("--only expects comma-separated integers") from None
        if not all(1 <= n <= len(acceptance.CRITERIA) for n in cfg["only"]):
            raise UsageError("--only: criterion numbers run from 1 to 10")
    return cfg


def prepare_out(path, overwrite):
    out = Path(path)
    if out.exists() and any(out.iterdir()) and not overwrite:
        raise UsageError(f"output directory {out} is not empty (use --overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_metadata(out, cfg, seconds, extra=None):
    lines = [f"command = {cfg['command']}"]
    for k in sorted(cfg):
        if k != "command":
            lines.append(f"{k} = {cfg[k]!r}")
    lines += [
        f"magwedge = {__version__}",
        f"python = {platform.python_version()}",
        f"numpy = {np.__version__}",
        f"scipy = {scipy.__version__}",
        f"wall_clock_seconds = {seconds:.3f}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    (out / "metadata.txt").write_text("\n".join(lines) + "\n")


def _tau_grid(cfg):
    if cfg.get("tau") is not None:
        return [cfg["tau"]]
    return band.default_tau_grid(cfg["tau_min"], cfg["tau_max"], cfg["tau_step"])


def cmd_theta0(cfg, out):
    bm = model1d.find_band_minimum(tol=cfg["tol"])
    text = (f"xi0 = {bm.xi0!r}\ntheta0 = {bm.theta0!r}\ntolerance = {bm.tolerance!r}\n"
            f"xi0^2 - theta0 = {bm.xi0**2 - bm.theta0!r}\n")
    (out / "theta0.txt").write_text(text)
    print(text, end="")


def cmd_mu1_curve(cfg, out):
    taus = _tau_grid(cfg)
    vals = model1d.mu1_curve(taus)
    with open(out / "mu1.csv", "w") as fh:
        fh.write("tau,mu1,residual\n")
        for v in vals:
            fh.write(f"{v.tau!r},{v.mu1!r},{v.residual!r}\n")
    if cfg["svg"]:
        svgplot.line_chart(out / "mu1.svg", [
            ("mu1", taus, [v.mu1 for v in vals], False),
            ("Theta0", taus, [model1d.THETA0_REFERENCE] * len(taus), True)],
            title="de Gennes eigenvalue", xlabel="tau", ylabel="mu1")


def cmd_sigma_curve(cfg, out):
    thetas = [k * PI / 20 for k in range(1, 11)]
    vals = [halfplane.sigma(t) for t in thetas]
    with open(out / "sigma.csv", "w") as fh:
        fh.write("theta,sigma\n")
        for t, v in zip(thetas, vals):
            fh.write(f"{t!r},{v!r}\n")
    if cfg["svg"]:
        svgplot.line_chart(out / "sigma.svg", [
            ("sigma", thetas, vals, False),
            ("Theta0", thetas, [model1d.THETA0_REFERENCE] * 10, True)],
            title="half-plane ground energy", xlabel="theta", ylabel="sigma")


def _band_svg(path, curve, extra, title):
    taus = curve.taus()
    series = [("s", taus, curve.values(), False),
              ("s_ess", taus, [p.s_ess for p in curve.samples], True)]
    series += [(name, taus, [v] * len(taus), True) for name, v in extra]
    svgplot.line_chart(path, series, title=title, xlabel="tau", ylabel="energy")


def cmd_band(cfg, out):
    f = FieldSpec(cfg["gamma"], cfg["alpha"])
    curve = band.band_sweep(f, _tau_grid(cfg), L=cfg["L"], resolution=cfg["resolution"])
    curve.to_csv(out / "band.csv")
    bad = [p for p in curve.samples if not p.ok]
    if bad:
        (out / "failures.txt").write_text("".join(f"{p.tau!r}: {p.error}\n" for p in bad))
    if cfg["svg"]:
        _band_svg(out / "band.svg", curve, [("Theta0", model1d.THETA0_REFERENCE)],
                  "band function")


def cmd_lambda(cfg, out):
    f = FieldSpec(cfg["gamma"], cfg["alpha"])
    w = band.lambda_wedge(f, tol=cfg["tol"], L=cfg["L"], resolution=cfg["resolution"])
    (out / "lambda.txt").write_text(w.record())
    print(w.record(), end="")


def cmd_figure1(cfg, out):
    f = FieldSpec(cfg["gamma"], cfg["alpha"])
    taus = _tau_grid(cfg)
    sig_beta = halfplane.lower_face_bottom(f) if f.gamma > 0 else float("nan")
    theta0 = model1d.THETA0_REFERENCE
    samples = []
    with open(out / "band.csv", "w") as fh, open(out / "overlays.csv", "w") as fo:
        fh.write("tau,s,s_ess,residual\n")
        fo.write("tau,theta0,sigma_beta,s_ess\n")
        for tau in taus:
            # one sample at a time, so an abort keeps the rows already done
            c = band.band_sweep(f, [tau], L=cfg["L"], resolution=cfg["resolution"])
            p = c.samples[0]
            if not p.ok:
                raise SolverError(f"solve failed at tau={tau}: {p.error}")
            samples.append(p)
            fh.write(f"{p.tau!r},{p.s!r},{p.s_ess!r},{p.residual!r}\n")
            fo.write(f"{p.tau!r},{theta0!r},{sig_beta!r},{p.s_ess!r}\n")
            fh.flush()
            fo.flush()
    curve = band.BandCurve(samples, f, cfg["L"], cfg["resolution"])
    if cfg["svg"]:
        _band_svg(out / "figure1.svg", curve, [("Theta0", theta0), ("sigma(beta)", sig_beta)],
                  "band function, alpha=%.4g, gamma=%.4g" % (f.alpha, f.gamma))


def cmd_figure2(cfg, out):
    f = FieldSpec(cfg["gamma"], cfg["alpha"])
    rows = []
    for tau in (0.0, 0.5, 1.0, 1.5, 2.0):
        prob = sector2d.SectorProblem(f, tau, L=cfg["L"], resolution=cfg["resolution"])
        res, mesh = sector2d.solve_sector(prob)
        prefix = out / f"eigenfunction_tau{tau:g}"
        sector2d.export_eigenfunction(res, mesh, str(prefix), prob)
        rows.append((tau, res.value, res.residual))
        if cfg["svg"]:
            line = None
            if f.gamma > 0:
                z = sector2d.zero_line(f, tau)
                line = (z.point, z.direction)
            u = res.vector
            mod = np.abs(u)
            lg = np.where(mod < 1e-13, -13.0, np.log10(np.maximum(mod, 1e-300)))
            ph = np.zeros_like(mod)
            nz = mod > 0
            ph[nz] = np.arcsin(np.clip(u.imag[nz] / mod[nz], -1, 1))
            for name, v in (("abs", mod), ("log10abs", lg), ("phase", ph)):
                svgplot.heatmap(f"{prefix}_{name}.svg", mesh.nodes, mesh.elements, v,
                                title=f"{name}, tau={tau:g}", line=line)
    with open(out / "eigenvalues.csv", "w") as fh:
        fh.write("tau,s,residual\n")
        for t, v, r in rows:
            fh.write(f"{t!r},{v!r},{r!r}\n")


def cmd_figure4(cfg, out):
    ks = range(1, 20)
    rows = []
    for k in ks:
        a = k * PI / 20
        w = band.lambda_wedge(FieldSpec(cfg["gamma"], a), tol=cfg["tol"], L=cfg["L"],
                              resolution=cfg["resolution"], estimate_error=False)
        rows.append((a, w.lam, w.tau_star, w.classification,
                     band.simple_upper_bound(a, cfg["gamma"])))
        print(f"alpha = {k}pi/20: lambda = {w.lam:.6f}, tau* = {w.tau_star:.4f}", flush=True)
    with open(out / "figure4.csv", "w") as fh:
        fh.write("alpha,lambda,tau_star,classification,theta0,upper_bound\n")
        for a, lam, ts, cls, ub in rows:
            fh.write(f"{a!r},{lam!r},{ts!r},{cls},{model1d.THETA0_REFERENCE!r},{ub!r}\n")
    if cfg["svg"]:
        al = [r[0] for r in rows]
        svgplot.line_chart(out / "figure4.svg", [
            ("lambda", al, [r[1] for r in rows], False),
            ("Theta0", al, [model1d.THETA0_REFERENCE] * len(al), True),
            ("upper bound", al, [min(r[4], 1.2) for r in rows], True)],
            title="bottom of the spectrum against the opening", xlabel="alpha",
            ylabel="lambda")


def cmd_verify(cfg, out):
    results = acceptance.run(cfg.get("only"), log=lambda s: print(s, flush=True))
    report = "\n".join(r.render() for r in results) + "\n"
    (out / "verify_report.txt").write_text(report)
    timings = "\n".join(f"criterion {r.number}: {r.seconds:.2f} s" for r in results)
    (out / "timings.txt").write_text(timings + "\n")
    return all(r.passed for r in results)


HANDLERS = {
    "theta0": cmd_theta0,
    "mu1-curve": cmd_mu1_curve,
    "sigma-curve": cmd_sigma_curve,
    "band": cmd_band,
    "lambda": cmd_lambda,
    "figure1": cmd_figure1,
    "figure2": cmd_figure2,
    "figure4": cmd_figure4,
    "verify": cmd_verify,
}


def main(argv=None):
    ns = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(ns)
        out = prepare_out(cfg["out"], cfg["overwrite"])
    except UsageError as exc:
        print(f"magwedge: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    t0 = time.perf_counter()
    status = EXIT_OK
    try:
        ok = HANDLERS[cfg["command"]](cfg, out)
        if ok is False:
            status = EXIT_VERIFY
    except (SolverError, BracketError) as exc:
        print(f"magwedge: solver error: {exc}", file=sys.stderr)
        status = EXIT_SOLVER
    write_metadata(out, cfg, time.perf_counter() - t0, {"exit_status": status})
    return status


if __name__ == "__main__":
    sys.exit(main())
