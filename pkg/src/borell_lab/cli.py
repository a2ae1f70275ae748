"""Command-line scenario runner: ``borell-lab {deficit,pde-check,simulate,catalog}``.

A scenario is one YAML file::

    id: strict_interval
    coefficients: [0.7, 0.7]
    convex_regime: false        # optional
    trivial_case: false         # optional
    functions:
      h: {type: interval_indicator, intervals: [[-1.4, 1.4]]}
      fs:
        - {type: interval_indicator, intervals: [[-1, 1]]}
        - {type: interval_indicator, intervals: [[-1, 1]]}
    quadrature: {order: 128, b_samples: 2000}
    sim: {dt: 0.001, t_end: 0.9, n_paths: 20000, seed: 0, t: [0.2], ensemble_paths: 1000}
    checks:
      expect: strict
      deficit: {value: 0.3229, tol: 1.0e-6}
      pde: {t: [0.5], x: [0.0], y: [0.0], dt: [1.0e-5, 5.0e-6], dx: 1.0e-3, max_residual: 1.0e-4}
      simulate: {max_z: 3.0, diag_spread_max: 1.0e-9, points: [[0.5, 0.1, 0.1]]}

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
Errors in a config name the offending field and, when it can be located,
its line in the file.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .borell import BorellInstance, MInstance, deficit, deficit_m, pde_residual
from .diffusion import (
    SimConfig,
    d1_d2_check,
    ensemble_summary,
    feynman_kac_estimate,
    lie_bracket_gap,
    minimizer_identities_check,
    simulate_paths,
    support_diagnostics,
)
from .equality import (
    FAMILIES,
    classify_equality,
    condition_a_check,
    convex_regime_fixtures,
    make_equality_instance,
    random_equality_params,
    strict_fixtures,
)
from .errors import BorellLabError, ConfigurationError, DomainError
from .functions import FunctionSpec, LinearGaussian, hypothesis_b_check, spec_from_dict

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
_Z_FLOOR = 1e-13

PDE_CSV_FIELDS = ("t", "x", "y", "dt", "dx", "residual")
SIM_CSV_FIELDS = ("t", "mean_x", "sd_x", "mean_y", "sd_y", "sd_x_minus_y", "mean_kill")
CATALOG_CSV_FIELDS = ("row", "family", "regime", "deficit", "verdict", "expected", "b_holds", "passed")


class UsageError(Exception):
    pass


# --- configuration ------------------------------------------------------------


class Scenario:
    """A parsed scenario together with a field-path -> line map for error messages."""

    def __init__(self, data: dict, lines: dict, source: str):
        self.data = data
        self.lines = lines
        self.source = source

    def line_of(self, path: str) -> int | None:
        while path:
            if path in self.lines:
                return self.lines[path]
            cut = max(path.rfind("."), path.rfind("["))
            path = path[:cut] if cut > 0 else ""
        return None

    def error(self, exc: Exception) -> ConfigurationError:
        msg = str(exc)
        path = msg.split(":", 1)[0].strip()
        line = self.line_of(path) if path and " " not in path else None
        where = f"{self.source}:{line}" if line else self.source
        return ConfigurationError(f"{where}: {msg}")

    def get(self, key: str, default=None):
        return self.data.get(key, default)

    def section(self, key: str) -> dict:
        value = self.data.get(key) or {}
        if not isinstance(value, dict):
            raise ConfigurationError(f"{key}: expected a mapping")
        return value


def _line_map(node, path: str = "", out: dict | None = None) -> dict:
    out = {} if out is None else out
    if path:
        out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            name = str(key.value)
            _line_map(value, f"{path}.{name}" if path else name, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            _line_map(value, f"{path}[{i}]", out)
    return out


def bundled_scenarios() -> list[str]:
    root = resources.files("borell_lab") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def _resolve(path: str) -> tuple[str, str]:
    p = Path(path)
    if p.is_file():
        return p.read_text(), str(p)
    name = path[:-5] if path.endswith(".yaml") else path
    res = resources.files("borell_lab") / "scenarios" / f"{name}.yaml"
    if res.is_file():
        return res.read_text(), f"{name}.yaml"
    raise ConfigurationError(f"{path}: no such file or bundled scenario (bundled: {', '.join(bundled_scenarios())})")


def load_scenario(path: str) -> Scenario:
    text, source = _resolve(path)
    return parse_scenario(text, source)


def parse_scenario(text: str, source: str = "<config>") -> Scenario:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigurationError(f"{where}: YAML error: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{source}: the scenario must be a mapping")
    return Scenario(data, _line_map(node), source)


def _number(value, path: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{path}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or (positive and value <= 0.0):
        raise ConfigurationError(f"{path}: expected a {'positive ' if positive else ''}finite number, got {value}")
    return value


def _numbers(value, path: str, positive: bool = False) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ConfigurationError(f"{path}: expected a nonempty list of numbers")
    return [_number(v, f"{path}[{i}]", positive) for i, v in enumerate(value)]


def build_instance(sc: Scenario) -> BorellInstance | MInstance:
    """Instantiate the scenario's coefficients and functions; errors carry line numbers."""
    try:
        if "coefficients" not in sc.data:
            raise ConfigurationError("coefficients: missing required field")
        lams = _numbers(sc.data["coefficients"], "coefficients", positive=True)
        funcs = sc.section("functions")
        if "h" not in funcs:
            raise ConfigurationError("functions.h: missing required field")
        if "fs" not in funcs or not isinstance(funcs["fs"], list):
            raise ConfigurationError("functions.fs: expected a list of functions")
        h = spec_from_dict(funcs["h"], "functions.h")
        fs = [spec_from_dict(d, f"functions.fs[{i}]") for i, d in enumerate(funcs["fs"])]
        if len(fs) != len(lams):
            raise ConfigurationError(f"functions.fs: need {len(lams)} functions, one per coefficient")
        convex = bool(sc.get("convex_regime", False))
        trivial = bool(sc.get("trivial_case", False))
        try:
            if len(lams) == 2:
                return BorellInstance(lams[0], lams[1], fs[0], fs[1], h, convex, trivial)
            order = sorted(range(len(lams)), key=lambda i: -lams[i])
            return MInstance(tuple(lams[i] for i in order), tuple(fs[i] for i in order), h, convex, trivial)
        except DomainError as exc:
            raise ConfigurationError(f"coefficients: {exc}") from exc
        except BorellLabError as exc:
            raise ConfigurationError(f"functions: {exc}") from exc
    except ConfigurationError as exc:
        raise sc.error(exc) from exc


def _sim_config(sc: Scenario, seed: int | None) -> tuple[SimConfig, list[float], int]:
    sim = sc.section("sim")
    try:
        kw = {}
        for key in ("dt", "t_end"):
            if key in sim:
                kw[key] = _number(sim[key], f"sim.{key}", positive=True)
        for key in ("n_paths", "chunk_size"):
            if key in sim:
                if not isinstance(sim[key], int) or isinstance(sim[key], bool):
                    raise ConfigurationError(f"sim.{key}: expected an integer")
                kw[key] = sim[key]
        kw["seed"] = int(seed if seed is not None else sim.get("seed", 0))
        cfg = SimConfig(**kw)
        ts = _numbers(sim.get("t", [0.5]), "sim.t", positive=True)
        for i, t in enumerate(ts):
            if t > cfg.t_end:
                raise ConfigurationError(f"sim.t[{i}]: t = {t} exceeds t_end = {cfg.t_end}")
        ens = int(sim.get("ensemble_paths", min(cfg.n_paths, 1000)))
        if ens < 1:
            raise ConfigurationError("sim.ensemble_paths: must be positive")
        return cfg, ts, ens
    except ConfigurationError as exc:
        raise sc.error(exc if str(exc).startswith("sim") else ConfigurationError(f"sim: {exc}")) from exc


def _order(sc: Scenario) -> int | None:
    q = sc.section("quadrature")
    if "order" not in q:
        return None
    o = q["order"]
    if not isinstance(o, int) or isinstance(o, bool) or not 1 <= o <= 128:
        raise sc.error(ConfigurationError("quadrature.order: expected an integer in [1, 128]"))
    return o


def config_hash(sc: Scenario, overrides: dict) -> str:
    blob = json.dumps({"config": sc.data, "overrides": overrides}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


# --- reports --------------------------------------------------------------------


def _enc(v):
    if isinstance(v, dict):
        return {k: _enc(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_enc(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _header(sc: Scenario | None, command: str, overrides: dict) -> dict:
    return {
        "command": command,
        "scenario": sc.get("id", sc.source) if sc is not None else None,
        "version": __version__,
        "config_hash": config_hash(sc, overrides) if sc is not None else None,
    }


def _instance_echo(inst) -> dict:
    if isinstance(inst, BorellInstance):
        lams, fs = [inst.lam, inst.mu], [inst.f, inst.g]
    else:
        lams, fs = list(inst.lambdas), list(inst.fs)
    return {"coefficients": lams, "h": inst.h.to_dict(), "fs": [f.to_dict() for f in fs],
            "convex_regime": inst.convex_regime, "trivial_case": inst.trivial_case}


def _parts(inst):
    if isinstance(inst, BorellInstance):
        return [inst.lam, inst.mu], [inst.f, inst.g], inst.h
    return list(inst.lambdas), list(inst.fs), inst.h


def run_deficit(sc: Scenario, seed: int | None = None, tol: float | None = None) -> tuple[dict, bool]:
    """Deficit, condition (A), sampled (B) and the equality verdict for one scenario."""
    inst = build_instance(sc)
    order = _order(sc)
    q = sc.section("quadrature")
    samples = int(q.get("b_samples", 2000))
    bseed = int(seed if seed is not None else sc.get("seed", 0))
    lams, fs, h = _parts(inst)
    d = float(deficit(inst, order) if isinstance(inst, BorellInstance) else deficit_m(inst, order))
    cond = condition_a_check(lams)
    b = hypothesis_b_check(h, fs, lams, samples=samples, seed=bseed)
    verdict = classify_equality(inst, tol=tol)
    checks = sc.section("checks")
    ok = True
    results = {}
    if "expect" in checks:
        results["expect"] = {"expected": checks["expect"], "passed": verdict.case_label == checks["expect"]}
        ok &= results["expect"]["passed"]
    if "deficit" in checks:
        spec = checks["deficit"]
        target, dtol = float(spec["value"]), float(spec.get("tol", 1e-8))
        passed = abs(d - target) <= dtol
        results["deficit"] = {"expected": target, "tol": dtol, "passed": passed}
        ok &= passed
    report = {
        "instance": _instance_echo(inst),
        "deficit": d,
        "condition_a": {"holds": cond.holds, "convex_regime_holds": cond.convex_regime_holds},
        "hypothesis_b": {"max_violation": b.max_violation, "n_violations": b.n_violations, "samples": b.samples,
                         "seed": bseed, "witness": [list(w) for w in b.witness],
                         "status": "sampled evidence; an a.e. condition cannot be certified by sampling"},
        "verdict": verdict.to_dict(),
        "checks": results,
        "passed": bool(ok),
    }
    return report, bool(ok)


def run_pde_check(sc: Scenario) -> tuple[dict, list[dict], bool]:
    """PDE residual over a (t, x, y) grid for every dt of a ladder, plus the observed order in dt."""
    inst = build_instance(sc)
    if not isinstance(inst, BorellInstance):
        raise sc.error(ConfigurationError("coefficients: pde-check needs exactly two coefficients"))
    pde = sc.section("checks").get("pde") or {}
    try:
        ts = _numbers(pde.get("t", [0.25, 0.5, 0.75]), "checks.pde.t", positive=True)
        xs = _numbers(pde.get("x", [0.0]), "checks.pde.x")
        ys = _numbers(pde.get("y", [0.0]), "checks.pde.y")
        dts = _numbers(pde.get("dt", [1e-5, 5e-6]), "checks.pde.dt", positive=True)
        dx = _number(pde.get("dx", 1e-3), "checks.pde.dx", positive=True)
        scheme = pde.get("scheme", "forward")
        if scheme not in ("forward", "central"):
            raise ConfigurationError(f"checks.pde.scheme: unknown scheme {scheme!r}")
        for i, t in enumerate(ts):
            for dt in dts:
                if not 2 * dt <= t <= 1 - 2 * dt:
                    raise ConfigurationError(f"checks.pde.t[{i}]: t = {t} must stay 2*dt = {2 * dt} away from 0 and 1")
    except ConfigurationError as exc:
        raise sc.error(exc) from exc
    if inst.dim != 1:
        raise sc.error(ConfigurationError("functions: pde-check grids are one-dimensional"))
    rows = []
    worst = {}
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts_x, pts_y = X.reshape(-1, 1), Y.reshape(-1, 1)
    for dt in dts:
        worst[dt] = 0.0
        for t in ts:
            res = pde_residual(inst, t, pts_x, pts_y, dt=dt, dx=dx, t_scheme=scheme)
            for x, y, r in zip(pts_x[:, 0], pts_y[:, 0], np.atleast_1d(res)):
                rows.append({"t": t, "x": float(x), "y": float(y), "dt": dt, "dx": dx, "residual": float(r)})
                worst[dt] = max(worst[dt], float(r))
    slopes = []
    for a, b in zip(dts[:-1], dts[1:]):
        ra, rb = worst[a], worst[b]
        ok = ra > 0.0 and rb > 0.0 and a != b
        slopes.append({"dt_pair": [a, b], "ratio": ra / rb if rb > 0.0 else None,
                       "slope": math.log(ra / rb) / math.log(a / b) if ok else None})
    passed = True
    checks = {}
    if "max_residual" in pde:
        lim = float(pde["max_residual"])
        checks["max_residual"] = {"limit": lim, "observed": worst[dts[0]], "passed": worst[dts[0]] <= lim}
        passed &= checks["max_residual"]["passed"]
    if "slope" in pde:
        lo, hi = (float(v) for v in pde["slope"])
        ok = all(s["slope"] is not None and lo <= s["slope"] <= hi for s in slopes)
        checks["slope"] = {"range": [lo, hi], "passed": ok}
        passed &= ok
    summary = {"scheme": scheme, "max_residual_by_dt": [{"dt": k, "max_residual": v} for k, v in worst.items()],
               "convergence": slopes, "checks": checks, "passed": bool(passed)}
    return summary, rows, bool(passed)


def run_simulate(sc: Scenario, seed: int | None = None) -> tuple[dict, list[dict], bool]:
    """Feynman-Kac estimates, an ensemble with its diagnostics, and the direct deficit."""
    inst = build_instance(sc)
    if not isinstance(inst, BorellInstance):
        raise sc.error(ConfigurationError("coefficients: simulate needs exactly two coefficients"))
    cfg, ts, n_ens = _sim_config(sc, seed)
    order = _order(sc)
    direct = float(deficit(inst, order))
    fk = []
    for t in ts:
        est = feynman_kac_estimate(inst, t, cfg)
        # nonrandom integrands have a stderr at roundoff level; do not score rounding as bias
        scale = max(est.stderr, _Z_FLOOR * max(1.0, abs(direct)))
        z = (est.mean - direct) / scale
        fk.append({"t": t, "mean": est.mean, "stderr": est.stderr, "n_paths": est.n_paths, "z": z})
    ens_cfg = SimConfig(cfg.dt, cfg.t_end, n_ens, cfg.seed, cfg.scheme, cfg.chunk_size)
    ens = simulate_paths(inst, ens_cfg)
    sup = support_diagnostics(ens)
    rows = ensemble_summary(ens)
    checks = sc.section("checks").get("simulate") or {}
    diag = {}
    if inst.dim == 1:
        pts = checks.get("points", [[0.5, 0.0, 0.0]])
        gaps, d1d2, mins = [], [], []
        for i, p in enumerate(pts):
            if not (isinstance(p, list) and len(p) == 3):
                raise sc.error(ConfigurationError(f"checks.simulate.points[{i}]: expected [t, x, y]"))
            t, x, y = (float(v) for v in p)
            gaps.append({"t": t, "x": x, "y": y, "gap": lie_bracket_gap(inst, t, x, y)})
            v = d1_d2_check(inst, t, x, y)
            d1d2.append({"t": t, "x": x, "y": y, "verdict": v.verdict, "d1": v.d1_residual, "d2": v.d2_residual})
            m = minimizer_identities_check(inst, t, x, y)
            mins.append({"t": t, "x": x, "y": y, "residuals": list(m.as_tuple()), "max_abs": m.max_abs})
        diag = {"bracket_gap": gaps, "d1d2": d1d2, "minimizer": mins}
    passed = True
    results = {}
    max_z = float(checks.get("max_z", 3.0))
    results["fk_z"] = {"max_z": max_z, "passed": all(abs(r["z"]) <= max_z for r in fk)}
    passed &= results["fk_z"]["passed"]
    if "diag_spread_max" in checks:
        lim = float(checks["diag_spread_max"])
        results["diag_spread"] = {"limit": lim, "passed": sup.diag_spread <= lim}
        passed &= results["diag_spread"]["passed"]
    report = {
        "sim": {"dt": cfg.dt, "t_end": cfg.t_end, "n_paths": cfg.n_paths, "seed": cfg.seed, "ensemble_paths": n_ens},
        "rho": inst.rho,
        "fk": fk,
        "fk_mean": fk[0]["mean"],
        "fk_stderr": fk[0]["stderr"],
        "direct_deficit": direct,
        "diag_spread": sup.diag_spread,
        "coverage": sup.coverage,
        **diag,
        "checks": results,
        "passed": bool(passed),
    }
    return report, rows, bool(passed)


# --- catalog --------------------------------------------------------------------


def catalog_rows(seed: int = 0, per_family: int = 3) -> list[dict]:
    """Row descriptors: random members of each family, strict fixtures and negative controls."""
    rows = []
    shapes = [(1, 2), (2, 2), (1, 3), (3, 2), (2, 3), (3, 3)]
    for fi, fam in enumerate(FAMILIES):
        rng = np.random.Generator(np.random.Philox(key=(seed << 8) + fi))
        for k in range(per_family):
            dim, m = shapes[k % len(shapes)]
            rows.append({"row": f"{fam}/{k}", "family": fam, "expected": fam,
                         "params": random_equality_params(fam, rng, dim, m)})
    for name, inst in strict_fixtures():
        rows.append({"row": f"strict/{name}", "family": "strict", "expected": "strict", "instance": inst})
    for k, inst in enumerate(convex_regime_fixtures(3, seed=seed + 3)):
        rows.append({"row": f"convex/{k}", "family": "convex_concave", "expected": "strict", "instance": inst})
    # negative control: an H1 member with one offset moved by 0.1 is no longer an equality case
    h1 = make_equality_instance("H1", {"lambdas": [0.6, 0.6], "a": [1.0], "bs": [0.3, -0.1]})
    moved = BorellInstance(h1.lam, h1.mu, h1.f, h1.g, LinearGaussian(h1.h.a, h1.h.b + 0.1))
    rows.append({"row": "control/h1_offset_plus_0.1", "family": "H1_perturbed", "expected": "strict",
                 "instance": moved})
    return rows


def _catalog_eval(desc: dict, tol: float | None) -> dict:
    inst = desc.get("instance") or make_equality_instance(desc["family"], desc["params"])
    v = classify_equality(inst, tol=tol)
    lams, fs, h = _parts(inst)
    b = hypothesis_b_check(h, fs, lams, samples=1000, seed=0).max_violation >= -1e-10
    passed = v.case_label == desc["expected"] and b
    return {"row": desc["row"], "family": desc["family"], "regime": v.regime, "deficit": v.deficit,
            "verdict": v.case_label, "expected": desc["expected"], "b_holds": bool(b), "passed": bool(passed)}


def run_catalog(seed: int = 0, row_filter: str | None = None, tol: float | None = None,
                jobs: int = 1, per_family: int = 3) -> tuple[dict, list[dict], bool]:
    descs = catalog_rows(seed, per_family)
    if row_filter is not None:
        descs = [d for d in descs if row_filter in d["row"]]
        if not descs:
            raise UsageError(f"filter {row_filter!r} selects no catalog rows")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_catalog_eval, descs, [tol] * len(descs)))
    else:
        rows = [_catalog_eval(d, tol) for d in descs]
    rows.sort(key=lambda r: r["row"])
    ok = all(r["passed"] for r in rows)
    summary = {"rows": len(rows), "failed": [r["row"] for r in rows if not r["passed"]], "passed": ok}
    return summary, rows, ok


# --- output ---------------------------------------------------------------------


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            sys.stderr.close()


def _csv(rows: list[dict], fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else _enc(r.get(k))) for k in fields})
    return buf.getvalue()


def _json(obj: Any) -> str:
    return json.dumps(_enc(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="borell-lab", description="Ehrhard-Borell numerical laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="scenario YAML file or bundled scenario name")
        p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed override")
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--tol", type=float, default=None, help="deficit tolerance for classification")

    common(sub.add_parser("deficit", help="deficit, (A), sampled (B) and equality verdict"))
    common(sub.add_parser("pde-check", help="PDE residual grid and dt-convergence slope"))
    common(sub.add_parser("simulate", help="Feynman-Kac estimate and diffusion diagnostics"))
    cat = sub.add_parser("catalog", help="regenerate and classify the equality-family catalog")
    common(cat, config=False)
    cat.add_argument("--filter", default=None, help="keep rows whose id contains this substring")
    cat.add_argument("--jobs", type=int, default=1, help="worker processes")
    cat.add_argument("--per-family", type=int, default=3, help="random members per family")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.seed is not None and not 0 <= args.seed < 1 << 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    overrides = {"seed": args.seed, "tol": args.tol}
    try:
        if args.command == "catalog":
            if args.jobs < 1 or args.per_family < 1:
                raise UsageError("--jobs and --per-family must be positive")
            seed = args.seed or 0
            summary, rows, ok = run_catalog(seed, args.filter, args.tol, args.jobs, args.per_family)
            head = {"command": "catalog", "version": __version__, "seed": seed, "filter": args.filter,
                    "config_hash": hashlib.sha256(json.dumps(overrides | {"filter": args.filter,
                                                                          "per_family": args.per_family},
                                                             sort_keys=True).encode()).hexdigest()}
            text = _csv(rows, CATALOG_CSV_FIELDS) if args.format == "csv" else _json({**head, **summary, "table": rows})
        else:
            sc = load_scenario(args.config)
            head = _header(sc, args.command, overrides)
            if args.command == "deficit":
                report, ok = run_deficit(sc, args.seed, args.tol)
                if args.format == "csv":
                    text = _csv([{"scenario": head["scenario"], "deficit": report["deficit"],
                                  "verdict": report["verdict"]["case_label"], "passed": ok}],
                                ("scenario", "deficit", "verdict", "passed"))
                else:
                    text = _json({**head, **report})
            elif args.command == "pde-check":
                summary, rows, ok = run_pde_check(sc)
                text = _csv(rows, PDE_CSV_FIELDS) if args.format == "csv" else _json({**head, **summary, "rows": rows})
            else:
                report, rows, ok = run_simulate(sc, args.seed)
                text = _csv(rows, SIM_CSV_FIELDS) if args.format == "csv" else _json({**head, **report})
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, BorellLabError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write(text, args.out)
    if not ok:
        print("check failed", file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
