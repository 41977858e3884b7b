"""Command-line front end: ``lagrhofer {defect,geometry-check,diameter-table,phi-bounds}``.

Every subcommand builds a JSON-serialisable report carrying ``schema: 1``,
a list of named checks and a ``failures`` list; the exit code is 0 exactly
when ``failures`` is empty.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import geometry as geo
from . import novikov as nv
from . import qmcalc as qm
from . import toric

SCHEMA = 1
DEFAULT_DELTA = 0.95
DEFAULT_TAU = Fraction(1, 4)
GEOMETRY_TAU = 0.49

log = logging.getLogger("lagrhofer")


@dataclass
class RunConfig:
    cutoff: Fraction = Fraction(3)
    torus_grid: tuple = (720, 720)
    mu_grid: tuple = (360, 360)
    quadrature_n: int = 2048
    n_random: int = 10000
    algebraic_tol: float = 1e-12
    roundtrip_tol: float = 1e-10
    sampled_tol: float = 1e-4
    area_tol: float = 1e-6
    constancy_tol: float = 1e-8
    safety: float = 0.99
    seed: int = 0
    fixture: Optional[str] = None
    output: Optional[str] = None

    def __post_init__(self):
        self.cutoff = Fraction(self.cutoff)
        self.torus_grid = tuple(int(n) for n in self.torus_grid)
        self.mu_grid = tuple(int(n) for n in self.mu_grid)
        if self.cutoff <= 1:
            raise ValueError("cutoff must exceed 1, got %s" % self.cutoff)
        for f in fields(self):
            if f.name.endswith("_tol") and not getattr(self, f.name) > 0:
                raise ValueError("%s must be positive" % f.name)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError("unknown config keys: %s" % ", ".join(sorted(unknown)))
        return cls(**data)


class Report:
    def __init__(self, command: str, **params):
        self.data = {"schema": SCHEMA, "command": command, "params": params, "checks": []}

    def check(self, name, passed, residual=None, **extra):
        entry = {"name": name, "passed": bool(passed)}
        if residual is not None:
            entry["residual"] = float(residual)
        entry.update(extra)
        self.data["checks"].append(entry)
        return passed

    def __setitem__(self, key, value):
        self.data[key] = value

    def finish(self, t0):
        self.data["failures"] = [c["name"] for c in self.data["checks"] if not c["passed"]]
        self.data["runtime_s"] = round(time.perf_counter() - t0, 4)
        return self.data


# -- subcommands --------------------------------------------------------------


def cmd_defect(tau=DEFAULT_TAU, q_sign=1, config: RunConfig | None = None) -> dict:
    """Exact potential -> critical points -> idempotents -> expansions -> defect."""
    config = config or RunConfig()
    t0 = time.perf_counter()
    tau = Fraction(tau)
    fixture = None
    if config.fixture:
        fixture = toric.load_fixture(config.fixture, tau=tau, q_sign=q_sign)
    run = toric.run_defect_pipeline(tau, q_sign=q_sign, cutoff=config.cutoff, fixture=fixture)
    rep = Report("defect", tau=str(tau), q_sign=q_sign, cutoff=str(run.cutoff),
                 fixture=run.fixture.name)
    rep["potential"] = str(run.potential.poly)
    rep["critical_points"] = [
        {"label": _label(p), "y": [nv.format_novikov(y) for y in p.assignment]} for p in run.points
    ]
    rep["idempotents"] = [
        {"label": _label(p), "poly": str(i)} for p, i in zip(run.points, run.idempotents)
    ]
    rep["expansions"] = [
        {"label": _label(p), "coefficients": e.as_text()} for p, e in zip(run.points, run.expansions)
    ]
    rep["valuations"] = [str(v) for v in run.valuations]
    rep["defect"] = str(run.defect)
    rep.check("four_critical_points", len(run.points) == 4)
    for name, ok in run.checks.items():
        rep.check(name, ok)
    return rep.finish(t0)


def _label(p):
    return "(" + ",".join("+" if s > 0 else "-" for s in p.signs) + ")"


def cmd_geometry_check(delta=DEFAULT_DELTA, tau=GEOMETRY_TAU, config: RunConfig | None = None) -> dict:
    """Residuals of the embedding, torus and area identities at (delta, tau)."""
    config = config or RunConfig()
    t0 = time.perf_counter()
    tau = float(tau)
    rep = Report("geometry-check", delta=delta, tau=tau, grid=list(config.torus_grid))
    rng = np.random.default_rng(config.seed)
    n = config.n_random

    z = np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n)) * (1 - 1e-9)
    V = geo.theta_delta_array(z, delta)
    r = np.max(np.abs(np.sum(V * V, -1) - 1))
    rep.check("theta_unit_norm", r <= config.algebraic_tol, r)
    r = np.max(np.abs(V[:, 0] - (2 * delta * np.abs(z) ** 2 - 1)))
    rep.check("theta_v1_identity", r <= config.algebraic_tol, r)
    zc = np.exp(2j * np.pi * rng.random(n)) / math.sqrt(2 * delta)
    r = np.max(np.abs(geo.theta_delta_array(zc, delta)[:, 0]))
    rep.check("circle_to_v1_zero", r <= config.algebraic_tol, r)
    zr = (2 * rng.random(n) - 1) * (1 - 1e-9)
    r = np.max(np.abs(geo.theta_delta_array(zr, delta)[:, 2]))
    rep.check("real_line_to_v3_zero", r <= config.algebraic_tol, r)
    inside = V[:, 0] < 2 * delta - 1
    back = geo.theta_delta_array(geo.theta_delta_inverse_array(V[inside], delta), delta)
    r = np.max(np.abs(back - V[inside]))
    rep.check("inverse_roundtrip", r <= config.roundtrip_tol, r)

    ratio = geo.conformal_area_check(delta, 0.5, config.quadrature_n)
    rep.check("conformal_area_ratio", abs(ratio - delta) <= config.area_tol, abs(ratio - delta))

    A, B = geo.sample_torus_arrays(tau, config.torus_grid)
    r = max(np.max(np.abs(np.sum(A * A, -1) - 1)), np.max(np.abs(np.sum(B * B, -1) - 1)))
    rep.check("torus_unit_vectors", r <= config.algebraic_tol, r)
    u = geo.moment_map_array(A, B)
    r = np.max(np.abs(u - np.array([tau, 1 - tau])))
    rep.check("torus_moment_map", r <= 1e-9, r)
    rep.check("moment_image_in_polytope", bool(np.all(geo.in_polytope(u))))
    ext = geo.torus_projection_extent(tau)
    for i, X in ((1, A), (2, B)):
        r = abs(np.max(np.abs(X[:, 0])) - ext)
        rep.check("projection_extent_pr%d" % i, r <= config.sampled_tol, r)

    need = geo.min_delta_for_containment(tau)
    contained = geo.torus_in_image(tau, delta, config.torus_grid)
    rep["min_delta_for_containment"] = need
    rep["torus_in_image"] = contained
    rep.check("torus_contained", contained, need - delta)
    rep.check("containment_matches_threshold", contained == (delta > need))
    if delta > geo.DELTA_STAR:
        eps = geo.epsilon_delta(delta)
        rep["epsilon_delta"] = eps
        edge = 0.5 - config.safety * eps
        rep.check("epsilon_delta_edge_contained", geo.torus_in_image(edge, delta, (180, 180)))
    return rep.finish(t0)


def cmd_diameter_table(delta=1.0, h_list=(1, 10, 100), tau=DEFAULT_TAU,
                       config: RunConfig | None = None) -> dict:
    """Lower bounds (h - D/(delta vol))/(1 + delta^2) for the equator plateau family."""
    config = config or RunConfig()
    t0 = time.perf_counter()
    defect, valuation = qm.certified_defect(Fraction(tau), config.cutoff)
    rep = Report("diameter-table", delta=delta, tau=str(Fraction(tau)), h_values=list(h_list))
    certs = qm.diameter_table(delta, h_list, float(tau), float(defect), valuation)
    rows = []
    for h, c in zip(h_list, certs):
        closed = (h - float(defect) / (delta * qm.ambient_volume())) / qm.lipschitz_constant(delta)
        rep.check("closed_form_h=%g" % h, c.lower_bound == closed, abs(c.lower_bound - closed))
        rows.append(dict(c.to_dict(), display_lower_bound=c.display_lower))
    bounds = [c.lower_bound for c in certs]
    order = np.argsort(h_list)
    rep.check("increasing_in_h", all(bounds[order[i]] < bounds[order[i + 1]]
                                     for i in range(len(order) - 1)))
    rep["certificates"] = rows
    return rep.finish(t0)


def load_function_sample(path) -> qm.FunctionSample:
    with open(path) as fh:
        return qm.FunctionSample.from_dict(json.load(fh))


def cmd_phi_bounds(f, g, delta=DEFAULT_DELTA, config: RunConfig | None = None) -> dict:
    """Two-sided certificate for d(Phi(f), Phi(g)) plus constancy checks."""
    config = config or RunConfig()
    t0 = time.perf_counter()
    rep = Report("phi-bounds", delta=delta, grid_size=len(f.values))
    defect, valuation = qm.certified_defect(DEFAULT_TAU, config.cutoff)
    cert = qm.phi_bound_certificate(f, g, delta, config.safety, float(defect), valuation,
                                    grid=(120, 120))
    eps = cert.inputs["epsilon"]
    ft = qm.build_tilde_f(f, delta, config.safety)
    worst = 0.0
    for x in np.linspace(0.1, 0.9, 5):
        z1, z2 = qm.torus_preimage(float(qm.interval_to_tau(x, eps)), delta, (90, 90))
        vals = ft(0.0, z1, z2)
        worst = max(worst, float(np.ptp(vals)), float(np.max(np.abs(vals - f(x)))))
    rep.check("tilde_f_constant_on_tori", worst <= config.constancy_tol, worst)
    rep.check("mu_matches_sup_norm", cert.inputs["mu_sup_mismatch"] <= 1e-6,
              cert.inputs["mu_sup_mismatch"])
    rep.check("lower_le_upper", cert.lower_bound <= cert.upper_bound)
    rep["certificate"] = cert.to_dict()
    return rep.finish(t0)


# -- output ----------------------------------------------------------------------


def _to_text(report: dict) -> str:
    lines = ["%s (schema %s)" % (report["command"], report["schema"])]
    for k, v in report["params"].items():
        lines.append("  %s = %s" % (k, v))
    for key in ("potential", "defect", "valuations", "min_delta_for_containment", "epsilon_delta"):
        if key in report:
            lines.append("%s: %s" % (key, report[key]))
    for item in report.get("expansions", []):
        lines.append("e^tau%s:" % item["label"])
        for lab, c in item["coefficients"].items():
            lines.append("    %s: %s" % (lab, c))
    for row in report.get("certificates", []):
        lines.append("  h=%-8g lower=%.12g (shown %.6g)" % (row["inputs"]["h"], row["lower_bound"],
                                                          row["display_lower_bound"]))
    if "certificate" in report:
        c = report["certificate"]
        lines.append("  %.6g <= d <= %.6g   (tau'=%.6g)" % (c["lower_bound"], c["upper_bound"], c["tau"]))
    for c in report["checks"]:
        res = "" if "residual" not in c else "  residual=%.3g" % c["residual"]
        lines.append("[%s] %s%s" % ("PASS" if c["passed"] else "FAIL", c["name"], res))
    lines.append("failures: %s" % (", ".join(report["failures"]) or "none"))
    return "\n".join(lines)


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError("not serialisable: %r" % type(o))


def _parse_floats(s):
    return [float(x) for x in s.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lagrhofer", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with RunConfig fields")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json", help="JSON output (default)")
    fmt.add_argument("--text", dest="fmt", action="store_const", const="text", help="plain-text output")
    p.add_argument("-o", "--output", help="write the report here instead of stdout")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("defect", help="exact defect bound from the toric computation")
    d.add_argument("--tau", type=Fraction, default=DEFAULT_TAU, help="rational in (0, 1/2), e.g. 1/4")
    d.add_argument("--q-sign", type=int, choices=(1, -1), default=1)
    d.add_argument("--cutoff", type=Fraction)
    d.add_argument("--fixture", help="fixture JSON (path or name inside the package)")

    g = sub.add_parser("geometry-check", help="embedding and torus invariants")
    g.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    g.add_argument("--tau", type=float, default=GEOMETRY_TAU,
                   help="default sits inside the containment window of the default delta")
    g.add_argument("--grid", type=int, nargs=2, metavar=("N_PHI", "N_PSI"))
    g.add_argument("--seed", type=int)

    t = sub.add_parser("diameter-table", help="lower bounds for the equator plateau family")
    t.add_argument("--delta", type=float, default=1.0)
    t.add_argument("--tau", type=Fraction, default=DEFAULT_TAU)
    t.add_argument("--h-values", type=_parse_floats, default=[1.0, 10.0, 100.0],
                   help="comma-separated, e.g. 1,10,100")

    f = sub.add_parser("phi-bounds", help="two-sided bound for a pair of functions")
    f.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    f.add_argument("--f", required=True, dest="f_path", help="FunctionSample JSON")
    f.add_argument("--g", required=True, dest="g_path", help="FunctionSample JSON")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = RunConfig.from_file(args.config) if args.config else RunConfig()
        if getattr(args, "cutoff", None) is not None:
            config = RunConfig(**dict(asdict(config), cutoff=args.cutoff))
        if getattr(args, "fixture", None):
            config.fixture = args.fixture
        if getattr(args, "grid", None):
            config.torus_grid = tuple(args.grid)
        if getattr(args, "seed", None) is not None:
            config.seed = args.seed
        if args.command == "defect":
            report = cmd_defect(args.tau, args.q_sign, config)
        elif args.command == "geometry-check":
            report = cmd_geometry_check(args.delta, args.tau, config)
        elif args.command == "diameter-table":
            report = cmd_diameter_table(args.delta, args.h_values, args.tau, config)
        else:
            report = cmd_phi_bounds(load_function_sample(args.f_path), load_function_sample(args.g_path),
                                    args.delta, config)
    except (ValueError, OSError, ZeroDivisionError) as exc:
        report = {"schema": SCHEMA, "command": args.command, "error": str(exc),
                  "checks": [], "failures": ["error"]}
        log.error("%s", exc)

    if args.fmt == "text" and "error" not in report:
        out = _to_text(report)
    else:
        out = json.dumps(report, indent=2, default=_json_default)
    dest = args.output or config_output(args)
    if dest:
        Path(dest).write_text(out + "\n")
    else:
        print(out)
    return 0 if not report["failures"] else 1


def config_output(args):
    if args.config:
        try:
            return RunConfig.from_file(args.config).output
        except (ValueError, OSError):
            return None
    return None


if __name__ == "__main__":
    sys.exit(main())
