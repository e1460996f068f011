"""Command-line front end.

Subcommands
-----------
meanfield   critical rates, critical-density curves, Phi table, large-degree tables
simulate    density estimates, dichotomy probes, phase sweeps, coupling audits
bootstrap   recursion, grades, span bounds, Monte Carlo cross-checks, certificates
render      SVG phase diagram from a sweep CSV

Every command writes CSV files with a ``#`` metadata preamble into
``--out``.  Identical configuration and seed give byte-identical files.

Exit codes: 0 success, 2 usage error, 3 only inconclusive verdicts,
4 resource limit exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .topology import ResourceError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3
EXIT_RESOURCE = 4


class UsageError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


@dataclass
class RunConfig:
    command: str = "meanfield"
    b: int = 2
    theta: int = 2
    lam: float | None = None
    p: float = 1.0
    radius: int = 8
    tmax: float = 1.0
    n_times: int = 9
    replicas: int = 10_000
    seed: int = 0
    out: str = "out"
    grid_lambda: list = field(default_factory=list)
    grid_p: list = field(default_factory=list)
    threshold_A: float | None = None
    delta: float = 0.5
    delta_star: float = 0.5
    t_star: float = 2.0
    couple: bool = False
    probe: str = "oriented"
    n: int = 8
    b_list: list = field(default_factory=list)
    input: str = ""

    KEYS = ("b", "theta", "lam", "p", "radius", "tmax", "n_times", "replicas", "seed", "out",
            "grid_lambda", "grid_p", "threshold_A", "delta", "delta_star", "t_star", "couple",
            "probe", "n", "b_list", "input")

    def validate(self) -> "RunConfig":
        def need(cond, name, msg):
            if not cond:
                raise UsageError(f"{name}: {msg}")

        need(self.b >= 2, "b", "must be >= 2")
        need(self.theta >= 1, "theta", "must be >= 1")
        need(self.lam is None or (self.lam >= 0 and math.isfinite(self.lam)), "lambda", "must be >= 0")
        need(0.0 <= self.p <= 1.0, "p", "must lie in [0, 1]")
        need(self.radius >= 0, "radius", "must be >= 0")
        need(self.tmax > 0, "tmax", "must be > 0")
        need(self.n_times >= 2, "n_times", "must be >= 2")
        need(self.replicas >= 1, "replicas", "must be >= 1")
        need(self.seed >= 0, "seed", "must be >= 0")
        need(all(x >= 0 for x in self.grid_lambda), "grid_lambda", "entries must be >= 0")
        need(all(0 <= x <= 1 for x in self.grid_p), "grid_p", "entries must lie in [0, 1]")
        need(self.threshold_A is None or self.threshold_A > 0, "threshold_A", "must be > 0")
        need(self.delta > 0, "delta", "must be > 0")
        need(self.delta_star > 0, "delta_star", "must be > 0")
        need(self.t_star >= 0, "t_star", "must be >= 0")
        need(self.probe in ("oriented", "unoriented"), "probe", "must be oriented or unoriented")
        need(self.n >= 1, "n", "must be >= 1")
        need(all(int(x) >= 2 for x in self.b_list), "b_list", "entries must be >= 2")
        return self

    def canonical(self) -> dict:
        d = {k: getattr(self, k) for k in self.KEYS}
        d["command"] = self.command
        d.pop("out")
        return d

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def dumps(self) -> str:
        """Flat ``key = value`` text that :func:`load_config` reads back unchanged."""
        lines = []
        for k in self.KEYS:
            v = getattr(self, k)
            if v is None:
                continue
            if isinstance(v, list):
                v = ",".join(repr(float(x)) if k != "b_list" else str(int(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


_CASTS = {
    "b": int, "theta": int, "radius": int, "n_times": int, "replicas": int, "seed": int, "n": int,
    "lam": float, "p": float, "tmax": float, "threshold_A": float, "delta": float,
    "delta_star": float, "t_star": float,
    "out": str, "probe": str, "input": str,
    "grid_lambda": _floats, "grid_p": _floats,
    "b_list": lambda s: [int(x) for x in _floats(s)],
    "couple": lambda s: str(s).strip().lower() in ("1", "true", "yes", "on"),
}
_ALIASES = {"lambda": "lam", "grid-lambda": "grid_lambda", "grid-p": "grid_p",
            "threshold-A": "threshold_A", "threshold_a": "threshold_A", "delta-star": "delta_star",
            "t-star": "t_star", "n-times": "n_times", "b-list": "b_list"}


def load_config(text: str) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment; unknown keys are errors."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in _CASTS:
            raise UsageError(f"{key}: unknown configuration key")
        try:
            out[key] = _CASTS[key](val)
        except ValueError as exc:
            raise UsageError(f"{key}: {exc}") from None
    return out


# ---------------------------------------------------------------------------
# CSV output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    if hasattr(v, "value"):
        return str(v.value)
    return str(v)


def write_csv(path: str, cfg: RunConfig, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write one CSV with preamble and provenance columns; returns the path."""
    buf = io.StringIO()
    h = cfg.hash()
    buf.write(f"# tcptree {__version__}\n")
    buf.write(f"# command: {cfg.command}\n")
    buf.write(f"# config_hash: {h}\n")
    buf.write(f"# seed: {cfg.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["command", "config_hash", "seed", *header])
    for r in rows:
        w.writerow([cfg.command, h, cfg.seed, *(_fmt(x) for x in r)])
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return path


def read_csv(path: str) -> tuple[list[str], list[dict]]:
    """Read a CSV written by :func:`write_csv`; returns ``(preamble, rows)``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    pre = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return pre, list(csv.DictReader(body))


# ---------------------------------------------------------------------------
# commands


def cmd_meanfield(cfg: RunConfig) -> int:
    from . import meanfield as mf

    b, th = cfg.b, cfg.theta
    files = []
    lc = mf.lambda_c_mf(b, th)
    phi = mf.phi_theta(th)
    files.append(write_csv(os.path.join(cfg.out, "mf_critical.csv"), cfg,
                           ["kappa", "theta", "lambda_c_mf", "kappa_lambda_c_mf", "phi_theta",
                            "oriented_lambda_bound"],
                           [[b, th, lc, b * lc, phi, mf.oriented_lambda_bound(b, th) if th >= 2 else math.nan]]))
    grid = cfg.grid_lambda or ([lc * f for f in (1.0, 1.1, 1.25, 1.5, 2, 3, 5, 10)] if math.isfinite(lc) else [])
    if cfg.lam is not None:
        grid = sorted(set(grid) | {cfg.lam})
    rows = []
    for lam in grid:
        pc = mf.p_c_mf(mf.MFParams(b, th, lam))
        q = lam / (lam + 1.0)
        rows.append([lam, pc, q, mf.p_c_mf(mf.MFParams(b, th, q))])
    files.append(write_csv(os.path.join(cfg.out, "mf_pc_curve.csv"), cfg,
                           ["lambda", "p_c_mf", "lambda_over_1_plus_lambda", "p_c_mf_shifted"], rows))
    files.append(write_csv(os.path.join(cfg.out, "mf_phi_table.csv"), cfg,
                           ["theta", "phi_theta", "lambda_c_mf_theta_eq_1"],
                           [[t, mf.phi_theta(t), 1.0 / b if t == 1 else math.nan] for t in range(1, 9)]))
    rows = []
    for k in (10, 30, 100, 300, 1000, 2000):
        if k >= th:
            v = k * mf.lambda_c_mf(k, th)
            rows.append([k, th, v, phi, v / phi - 1.0])
    files.append(write_csv(os.path.join(cfg.out, "mf_kappa_lambda_c.csv"), cfg,
                           ["kappa", "theta", "kappa_lambda_c_mf", "phi_theta", "rel_diff"], rows))
    rows = []
    if th >= 2:
        lam = cfg.lam if cfg.lam else 1.0
        alpha = th / (th - 1)
        limit = (math.factorial(th) / lam) ** (1.0 / (th - 1))
        for k in (10, 30, 100, 300, 1000, 2000):
            if k >= th:
                v = k**alpha * mf.p_c_mf(mf.MFParams(k, th, lam))
                rows.append([k, th, lam, v, limit, v / limit - 1.0])
    files.append(write_csv(os.path.join(cfg.out, "mf_pc_scaling.csv"), cfg,
                           ["b", "theta", "lambda", "scaled_p_c_mf", "limit", "rel_diff"], rows))
    _announce(files)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    from . import estimator as est
    from . import graphical as gr
    from . import meanfield as mf
    from .topology import ROOT, Ball, TreeTopology, Variant

    b, th = cfg.b, cfg.theta
    lam = cfg.lam
    if lam is None:
        if cfg.threshold_A is None:
            raise UsageError("lambda: give --lambda or --threshold-A")
        lam = cfg.threshold_A / b
    t = np.linspace(0.0, cfg.tmax, cfg.n_times)
    files = []
    verdict_rows = []
    regimes = []

    variant = Variant.ORIENTED_FORWARD if cfg.probe == "oriented" else Variant.UNORIENTED
    topo = TreeTopology(b, variant, Ball(cfg.radius))
    d = est.rho_estimate(topo, th, lam, cfg.p, ROOT, t, cfg.replicas, cfg.seed)
    files.append(write_csv(os.path.join(cfg.out, "density.csv"), cfg,
                           ["b", "theta", "lambda", "p", "variant", "radius", "t", "rho_lower", "se_lower",
                            "rho_upper", "se_upper", "disagreement", "time_average", "time_average_se",
                            "replicas", "effectively_infinite"],
                           [[b, th, lam, cfg.p, variant.value, cfg.radius, t[i], d.mean[i], d.se[i],
                             d.upper[i], d.upper_se[i], d.disagreement[i], d.time_average[i],
                             d.time_average_se[i], cfg.replicas, d.effectively_infinite]
                            for i in range(len(t))]))

    if th >= 2:
        if cfg.probe == "oriented":
            v = est.dichotomy_probe_oriented(b, th, lam, cfg.p, cfg.tmax, cfg.replicas, cfg.seed,
                                             depth=cfg.radius, n_times=cfg.n_times)
            cert = (mf.oriented_survival_certificate(b, th, lam, cfg.p).verdict.value
                    if 0 < cfg.p < 1 else "n/a")
        else:
            v = est.dichotomy_probe_unoriented(b, th, lam, cfg.p, cfg.tmax, cfg.replicas, cfg.seed,
                                               cfg.delta_star, cfg.t_star, cfg.delta, cfg.radius,
                                               cfg.n_times)
            cert = "n/a"
        regimes.append(v.regime)
        e = v.estimate
        verdict_rows.append([b, th, lam, cfg.p, cfg.probe, v.regime, v.condition, v.t_trigger, v.threshold,
                             v.rate, v.rate_se, v.prefactor, cert, cfg.replicas, cfg.radius,
                             float(np.nanmax(e.disagreement)) if e is not None else math.nan])

    sweep = None
    if cfg.grid_lambda and cfg.grid_p:
        sweep = est.phase_sweep(b, th, cfg.grid_lambda, cfg.grid_p, cfg.replicas, cfg.seed, cfg.tmax,
                                depth=cfg.radius, n_times=cfg.n_times)
        rows = []
        for pt in sweep.points:
            v = pt.verdict
            regimes.append(v.regime)
            rows.append([b, th, pt.lam, pt.p, v.regime, v.condition, v.t_trigger, pt.pc_harris, pt.pc_thm1,
                         pt.flagged_harris, pt.flagged_thm1, pt.flagged_thm1_decay, cfg.replicas, sweep.depth,
                         float(np.nanmax(v.estimate.disagreement))])
        files.append(write_csv(os.path.join(cfg.out, "sweep.csv"), cfg,
                               ["b", "theta", "lambda", "p", "regime", "condition", "t_trigger",
                                "p_c_mf", "p_c_mf_shifted", "flag_below_p_c_mf", "flag_below_shifted",
                                "flag_decay_above_shifted", "replicas", "radius", "disagreement"], rows))
        files.append(write_csv(os.path.join(cfg.out, "sweep_audit.csv"), cfg,
                               ["inversions", "coupling_violations", "flagged_p_c_mf", "flagged_shifted",
                                "flagged_decay_above_shifted", "complete", "lambda_c_mf"],
                               [[len(sweep.inversions), sweep.coupling_violations, sweep.flagged_harris,
                                 sweep.flagged_thm1, sweep.flagged_thm1_decay, sweep.complete,
                                 sweep.lambda_c_mf]]))

    if verdict_rows:
        files.append(write_csv(os.path.join(cfg.out, "verdicts.csv"), cfg,
                               ["b", "theta", "lambda", "p", "probe", "regime", "condition", "t_trigger",
                                "threshold", "rate", "rate_se", "prefactor", "certificate", "replicas",
                                "radius", "disagreement"], verdict_rows))

    if cfg.couple:
        ps = sorted(cfg.grid_p) if cfg.grid_p else [0.2, 0.5, 0.8]
        ctopo = TreeTopology(b, Variant.UNORIENTED, Ball(cfg.radius))
        spec = gr.ProcessSpec(gr.Rule.THRESHOLD, ctopo, lam, th)
        reg = spec.region
        rows = []
        n_seeds = min(cfg.replicas, 100)
        for s in range(n_seeds):
            marks = gr.marks_for(spec, cfg.tmax, cfg.seed, s)
            inits = [gr.SpinConfig.product(reg, p, cfg.seed, s) for p in ps]
            trajs = gr.couple([spec] * len(ps), inits, marks, t)
            viol = sum(int(np.count_nonzero(a.state > c.state))
                       for lo, hi in zip(trajs, trajs[1:]) for a, c in zip(lo, hi))
            rows.append([s, ",".join(repr(p) for p in ps), len(t), viol])
        files.append(write_csv(os.path.join(cfg.out, "coupling_audit.csv"), cfg,
                               ["replica", "p_values", "sample_times", "violations"], rows))

    _announce(files)
    if regimes and all(r is est.Regime.INCONCLUSIVE for r in regimes):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_bootstrap(cfg: RunConfig) -> int:
    from . import bootstrap as bp

    b, th, p = cfg.b, cfg.theta, cfg.p
    files = []
    seq = bp.p_plus_n(b, th, p, cfg.n)
    files.append(write_csv(os.path.join(cfg.out, "bp_recursion.csv"), cfg, ["b", "theta", "p", "n", "p_plus_n"],
                           [[b, th, p, k, x] for k, x in enumerate(seq)]))
    pinf = bp.p_plus_infty(b, th, p)
    rows = [[b, th, p, pinf]]
    files.append(write_csv(os.path.join(cfg.out, "bp_fixed_point.csv"), cfg, ["b", "theta", "p", "p_plus_infty"],
                           rows))
    if b >= 3:
        rows = []
        for tail in (False, True):
            g = bp.grade_probs(b, th, p, tail)
            rows.append([b, th, p, "tail" if tail else "point", g.p_A, g.p_B, g.p_C, g.p_F])
        files.append(write_csv(os.path.join(cfg.out, "bp_grades.csv"), cfg,
                               ["b", "theta", "p", "convention", "p_A", "p_B", "p_C", "p_F"], rows))
        rows = []
        for n in range(1, cfg.n + 1):
            s = bp.span_bound_simple(b, th, p, n)
            rows.append([b, th, p, n, "simple", s.p0n, s.rn, s.base, s.geometric])
            if n >= 3:
                e = bp.span_bound_elaborate(b, th, p, n)
                rows.append([b, th, p, n, "elaborate", e.p0n, e.rn, e.base, e.geometric])
        files.append(write_csv(os.path.join(cfg.out, "bp_span_bounds.csv"), cfg,
                               ["b", "theta", "p", "n", "bound", "p0n", "rn", "base", "geometric"], rows))
    rows = []
    for n in range(1, cfg.n + 1):
        r = bp.mc_root_occupation(b, th, p, n, cfg.replicas, cfg.seed + n)
        rows.append([b, th, p, n, r.mean, r.se, r.exact, r.null_se, r.z])
    files.append(write_csv(os.path.join(cfg.out, "bp_mc_root.csv"), cfg,
                           ["b", "theta", "p", "n", "mc", "se", "p_plus_n", "null_se", "z"], rows))
    rows = []
    blist = cfg.b_list or [3, 4, 5, 6]
    for bb in blist:
        for tt in sorted({2, 3, th} if th >= 2 else {2, 3}):
            if bb >= tt + 1:
                for kind in ("simple", "elaborate"):
                    r = bp.certify_p_exp_lower(bb, tt, kind)
                    rows.append([bb, tt, kind, r.p, r.base, r.verdict, r.scaled, r.gamma_bar, r.gamma_A,
                                 r.gamma_B, r.gamma_C, r.gamma_prime])
    files.append(write_csv(os.path.join(cfg.out, "bp_certificates.csv"), cfg,
                           ["b", "theta", "bound", "p_star", "base", "verdict", "scaled_p_star", "gamma_bar",
                            "gamma_A", "gamma_B", "gamma_C", "gamma_prime"], rows))
    _announce(files)
    return EXIT_OK


def cmd_render(cfg: RunConfig) -> int:
    src = cfg.input or os.path.join(cfg.out, "sweep.csv")
    if not os.path.exists(src):
        raise UsageError(f"input: {src} does not exist")
    _, rows = read_csv(src)
    svg = render_svg(rows)
    path = os.path.join(cfg.out, "phase_diagram.svg")
    os.makedirs(cfg.out, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    _announce([path])
    return EXIT_OK


_COLOURS = {"SurvivalEvidence": "#2b8a3e", "DecayEvidence": "#c92a2a", "Inconclusive": "#adb5bd"}


def render_svg(rows: list[dict], width: int = 480, height: int = 360) -> str:
    """Heat grid of verdicts over (lambda, p) with the mean-field levels as ticks."""
    lams = sorted({float(r["lambda"]) for r in rows})
    ps = sorted({float(r["p"]) for r in rows})
    m = 50
    cw = (width - 2 * m) / max(len(lams), 1)
    ch = (height - 2 * m) / max(len(ps), 1)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    for r in rows:
        i = lams.index(float(r["lambda"]))
        j = ps.index(float(r["p"]))
        x = m + i * cw
        y = height - m - (j + 1) * ch
        col = _COLOURS.get(r["regime"], "#000000")
        out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw:.2f}" height="{ch:.2f}" fill="{col}" '
                   f'stroke="white"><title>lambda={r["lambda"]} p={r["p"]} {r["regime"]}</title></rect>')
        pc = float(r.get("p_c_mf", "nan"))
        if math.isfinite(pc) and 0 <= pc <= 1 and ps[0] <= pc <= ps[-1]:
            k = np.interp(pc, ps, np.arange(len(ps)))
            yy = height - m - (k + 0.5) * ch
            out.append(f'<line x1="{x:.2f}" x2="{x + cw:.2f}" y1="{yy:.2f}" y2="{yy:.2f}" '
                       f'stroke="black" stroke-width="2"/>')
    for i, lam in enumerate(lams):
        out.append(f'<text x="{m + (i + 0.5) * cw:.2f}" y="{height - m + 16}" font-size="11" '
                   f'text-anchor="middle">{lam:g}</text>')
    for j, p in enumerate(ps):
        out.append(f'<text x="{m - 6}" y="{height - m - (j + 0.5) * ch + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{p:g}</text>')
    out.append(f'<text x="{width / 2:.0f}" y="{height - 12}" font-size="12" text-anchor="middle">lambda</text>')
    out.append(f'<text x="14" y="{height / 2:.0f}" font-size="12" transform="rotate(-90 14 {height / 2:.0f})" '
               f'text-anchor="middle">p</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


COMMANDS = {"meanfield": cmd_meanfield, "simulate": cmd_simulate, "bootstrap": cmd_bootstrap,
            "render": cmd_render}


def _announce(files):
    for f in files:
        print(f)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 as well; keep the message terse
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tcptree", description="Threshold contact processes on homogeneous trees.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value file; flags override it")
        sp.add_argument("--b", type=int)
        sp.add_argument("--theta", type=int)
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--p", type=float)
        sp.add_argument("--radius", type=int)
        sp.add_argument("--tmax", type=float)
        sp.add_argument("--n-times", dest="n_times", type=int)
        sp.add_argument("--replicas", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--grid-lambda", dest="grid_lambda", type=_floats)
        sp.add_argument("--grid-p", dest="grid_p", type=_floats)
        sp.add_argument("--threshold-A", dest="threshold_A", type=float)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--delta-star", dest="delta_star", type=float)
        sp.add_argument("--t-star", dest="t_star", type=float)
        sp.add_argument("--couple", action="store_true", default=None)
        sp.add_argument("--probe", choices=("oriented", "unoriented"))
        sp.add_argument("--n", type=int)
        sp.add_argument("--b-list", dest="b_list", type=lambda s: [int(x) for x in _floats(s)])
        sp.add_argument("--input")
    return ap


def make_config(argv: Sequence[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values.update(load_config(fh.read()))
        except OSError as exc:
            raise UsageError(f"config: {exc}") from None
    for k, v in vars(args).items():
        if k in ("config", "command") or v is None:
            continue
        values[k] = v
    cfg = RunConfig(command=args.command, **values)
    return cfg.validate()


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = make_config(argv)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
