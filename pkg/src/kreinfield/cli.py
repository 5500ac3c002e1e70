"""Scenario runner: ``kreinfield run <config>`` and ``kreinfield sweep <config> --param p --values a,b``.

Exit codes: 0 when every declared expectation passes, 1 when one fails,
2 for configuration errors.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import DEFAULT_TOL, Tolerances
from .diagnostics import fft_support_check, positivity_check, power_profile
from .errors import ConfigError, HypothesisViolated, KreinFieldError
from .funcalc import AlmostAnalyticExtension, QuadratureSpec, make_function, oracle_error
from .krein import IntervalUnion, SpectralDecomposition
from .lattice import build_grid, make_potential
from .models import build_dirac, build_kg, classify_criticality
from .propagator import decomposition_residuals, time_grid, two_point_kernels
from .states import build_state, ground_state_check, maximal_state_search

SCHEMA_VERSION = 1
TOP_KEYS = {"schema_version", "name", "model", "grid", "potential", "J", "time", "quadrature", "tolerances",
            "calculus", "expect", "description"}
EXPECT_KEYS = {"kind", "state_case", "support", "positivity", "dominating", "ground", "degeneracy_positive"}
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


# ---------------------------------------------------------------- scenario


@dataclass
class Scenario:
    config: dict
    out_dir: Path
    seed: int = 0
    tol: Tolerances = field(default_factory=Tolerances)

    @property
    def name(self) -> str:
        return str(self.config.get("name", "scenario"))

    @property
    def content_hash(self) -> str:
        return config_hash(self.config)


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form (sorted keys, no whitespace)."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode()).hexdigest()


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def validate_config(config) -> dict:
    """Structural checks; numerical validity is left to the builders."""
    _require(isinstance(config, dict), "config must be a JSON object")
    unknown = set(config) - TOP_KEYS
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    _require(config.get("schema_version", SCHEMA_VERSION) == SCHEMA_VERSION,
             f"unsupported schema_version {config.get('schema_version')!r}")
    _require(config.get("model") in ("dirac", "kg"), "model must be 'dirac' or 'kg'")
    grid = config.get("grid")
    _require(isinstance(grid, dict) and {"n", "length"} <= set(grid), "grid needs n and length")
    pot = config.get("potential", {})
    _require(isinstance(pot, dict) and set(pot) <= {"V", "A", "m"}, "potential accepts keys V, A, m")
    J = config.get("J", [[0.0, None]])
    _require(J == "maximal" or isinstance(J, list), "J must be a list of [lo, hi] pairs or 'maximal'")
    _require(not (J == "maximal" and config["model"] != "kg"), "J = 'maximal' needs the kg model")
    t = config.get("time", {})
    _require(isinstance(t, dict) and set(t) <= {"t_max", "n_steps"}, "time accepts keys t_max, n_steps")
    exp = config.get("expect", {})
    _require(isinstance(exp, dict) and set(exp) <= EXPECT_KEYS, f"expect accepts keys {sorted(EXPECT_KEYS)}")
    return config


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return validate_config(config)


def bundled_scenario(name: str) -> dict:
    """Frozen scenario shipped with the package (``DS1``, ``DS2``, ``free_dirac``)."""
    res = resources.files("kreinfield") / "scenarios" / f"{name}.json"
    if not res.is_file():
        raise ConfigError(f"no bundled scenario {name!r}")
    return validate_config(json.loads(res.read_text()))


def resolve_config(arg: str) -> dict:
    """Path to a JSON file, or the name of a bundled scenario."""
    if Path(arg).exists():
        return load_config(arg)
    try:
        return bundled_scenario(arg)
    except ConfigError:
        raise ConfigError(f"{arg!r} is neither a readable file nor a bundled scenario") from None


def tolerances_for(config: dict) -> Tolerances:
    base = DEFAULT_TOL.updated(**config.get("tolerances", {}))
    return Tolerances.from_env(base)


def build_model(config: dict, tol: Tolerances = DEFAULT_TOL):
    g = config["grid"]
    grid = build_grid(g["n"], g["length"], g.get("boundary", "periodic"))
    p = config.get("potential", {})
    pot = make_potential(grid, V=p.get("V"), A=p.get("A"), m=p.get("m", 1.0))
    if config["model"] == "dirac":
        return build_dirac(grid, pot)
    return build_kg(grid, pot, tol)


def set_path(config: dict, path: str, value) -> dict:
    """Copy of ``config`` with the dotted ``path`` (list indices allowed) set to ``value``."""
    out = copy.deepcopy(config)
    keys = path.split(".")
    node = out
    try:
        for k in keys[:-1]:
            node = node[int(k)] if isinstance(node, list) else node[k]
        last = keys[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            _require(last in node, f"parameter path {path!r} does not exist")
            node[last] = value
    except (KeyError, IndexError, ValueError, TypeError) as exc:
        raise ConfigError(f"parameter path {path!r} does not exist") from exc
    return out


# ---------------------------------------------------------------- pipeline


def _expectation(name, expected, observed, passed) -> dict:
    return {"name": name, "expected": expected, "observed": observed, "passed": bool(passed)}


def run_pipeline(scn: Scenario) -> tuple[dict, dict]:
    """Build, classify, kernels, support, positivity, states.  Returns ``(report, artifacts)``."""
    cfg, tol = scn.config, scn.tol
    model = build_model(cfg, tol)
    dec = SpectralDecomposition(model.generator, model.K, tol)
    spectrum = dec.report()
    report = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "scenario": scn.name,
        "config_hash": scn.content_hash,
        "seed": scn.seed,
        "model": model.kind,
        "grid": model.grid.to_dict(),
        "spectrum_summary": {
            "dim": int(dec.A.shape[0]),
            "n_clusters": len(dec.clusters),
            "n_complex_pairs": len(dec.complex_pairs),
            "critical_points": [float(x) for x in dec.critical_points],
            "completeness_residual": dec.completeness_residual(),
        },
    }
    expect = cfg.get("expect", {})
    checks = []
    verdict = None
    if model.kind == "kg":
        verdict = classify_criticality(model, spectrum, tol)
        report["verdict"] = verdict.to_json()
        if "kind" in expect:
            checks.append(_expectation("kind", expect["kind"], verdict.kind, verdict.kind == expect["kind"]))

    # frequency set
    search = None
    if model.kind == "kg":
        search = maximal_state_search(model, dec, tol=tol)
        report["maximal_state_search"] = search.to_json()
        if "state_case" in expect:
            checks.append(_expectation("state_case", expect["state_case"], search.case, search.case == expect["state_case"]))
    J = search.J_max if cfg.get("J") == "maximal" else IntervalUnion.from_json(cfg.get("J", [[0.0, None]]))
    report["J"] = J.to_json()

    # kernels and their spectral support
    t = cfg.get("time", {})
    times = time_grid(float(t.get("t_max", 40.0)), int(t.get("n_steps", 512)))
    kernels = two_point_kernels(model, J, times, dec, tol)
    res = decomposition_residuals(kernels)
    report["kernels"] = {
        "n_frames": len(times),
        "t_max": float(-times[0]),
        "dt": kernels["S"].dt,
        "decomposition_residual_max": float(res.max()),
        "zero_part_empty": kernels["S_zero"].is_zero,
    }
    support = IntervalUnion.from_json(expect["support"]) if "support" in expect else None
    if support is not None:
        sup = fft_support_check(kernels["S_plus"], support, leak_tol=tol.leak_tol)
        report["support"] = sup.to_json()
        checks.append(_expectation("support", support.to_json(), sup.leakage, sup.passed))

    pos = positivity_check(model, J, dec, seed=scn.seed, tol=tol.tol_mat)
    report["positivity"] = pos.to_json()
    if "positivity" in expect:
        checks.append(_expectation("positivity", expect["positivity"], pos.positive,
                                   pos.positive == expect["positivity"] and pos.agree))

    if model.kind == "kg":
        state = build_state(model, J, dec, seed=scn.seed, tol=tol)
        report["state"] = state.to_json()
        try:
            report["ground_state_check"] = ground_state_check(model, dec, tol=tol)
        except HypothesisViolated as exc:
            report["ground_state_check"] = {"ground": None, "hypothesis_violated": str(exc)}
        for key, observed in (("dominating", state.dominating), ("ground", state.ground)):
            if key in expect:
                checks.append(_expectation(key, expect[key], observed, observed == expect[key]))
        if "degeneracy_positive" in expect:
            obs = state.degeneracy_dim > 0
            checks.append(_expectation("degeneracy_positive", expect["degeneracy_positive"], state.degeneracy_dim,
                                       obs == expect["degeneracy_positive"]))

    if "calculus" in cfg:
        c = cfg["calculus"]
        ext = AlmostAnalyticExtension(make_function(c.get("function", {"kind": "gaussian"})),
                                      int(c.get("N", 3)), float(c.get("delta", 0.25)))
        q = QuadratureSpec(**cfg.get("quadrature", {}))
        report["calculus"] = {"oracle_error": oracle_error(dec, ext, q), "function": c.get("function")}

    report["expectations"] = checks
    report["passed"] = all(c["passed"] for c in checks)
    return report, {"kernels": kernels, "spectrum": spectrum, "J": J, "support": support}


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _json_dump(obj, path: Path):
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, allow_nan=True, default=_jsonable) + "\n")


GNUPLOT_TEMPLATE = """# gnuplot script: power profiles of the kernel parts
set terminal pngcairo size 900,600
set output '{name}_power.png'
set logscale y
set xlabel 'omega'
set ylabel '||F(omega)||_F^2'
set key top right
{arrows}plot '{name}_power.dat' using 1:2 with lines title 'S', \\
     '' using 1:3 with lines title 'S_plus', \\
     '' using 1:4 with lines title 'S_minus', \\
     '' using 1:5 with lines title 'S_zero'
set output '{name}_spectrum.png'
unset logscale y
set xlabel 'Re lambda'
set ylabel 'Im lambda'
plot '{name}_spectrum.dat' using 1:2:3 with points palette pt 7 title 'eigenvalues (color: sign type)'
"""


def write_artifacts(scn: Scenario, report: dict, artifacts: dict, dump_kernels: bool = False, stride: int = 16):
    out = scn.out_dir
    out.mkdir(parents=True, exist_ok=True)
    name = scn.name
    _json_dump(report, out / f"{name}_report.json")
    spectrum_json = artifacts["spectrum"].to_json()
    spectrum_json["schema_version"] = SCHEMA_VERSION
    _json_dump(spectrum_json, out / f"{name}_spectrum.json")

    kernels = artifacts["kernels"]
    cols = []
    for key in ("S", "S_plus", "S_minus", "S_zero"):
        omega, P = power_profile(kernels[key])
        cols.append(P)
    np.savetxt(out / f"{name}_power.dat", np.column_stack([omega, *cols]),
               header="omega P_S P_plus P_minus P_zero", fmt="%.10e")
    code = {"positive": 1, "negative": -1, "mixed": 0, "neutral": 2}
    rows = [(z.real, z.imag, code[c.sign_type]) for c in artifacts["spectrum"].decomposition.clusters
            for z in c.eigenvalues]
    np.savetxt(out / f"{name}_spectrum.dat", np.array(rows), header="re im sign_type(1 pos,-1 neg,0 mixed,2 complex)",
               fmt="%.12e")
    arrows = ""
    support = artifacts.get("support")
    if support is not None:
        for x in support.boundary():
            arrows += f"set arrow from {x},graph 0 to {x},graph 1 nohead dt 2\n"
    (out / f"{name}_plots.gp").write_text(GNUPLOT_TEMPLATE.format(name=name, arrows=arrows))
    if dump_kernels:
        for key, series in kernels.items():
            series.model_ref = {**series.model_ref, "config_hash": scn.content_hash}
            series.dump(out / f"{name}_{key}.bin", stride)


def run(config: dict, out_dir, *, seed: int = 0, dump_kernels: bool = False, stride: int = 16,
        stream=None) -> int:
    """Full pipeline for one scenario; returns the exit code."""
    stream = stream or sys.stdout
    try:
        config = validate_config(config)
        scn = Scenario(config, Path(out_dir), seed, tolerances_for(config))
        report, artifacts = run_pipeline(scn)
        write_artifacts(scn, report, artifacts, dump_kernels, stride)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for c in report["expectations"]:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {scn.name} {c['name']}: expected {c['expected']}, "
              f"observed {c['observed']}", file=stream)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ---------------------------------------------------------------- sweep

SWEEP_COLUMNS = ["value", "kind", "energy_min", "c_norm", "gap_alpha", "n_complex_pairs", "n_critical",
                 "min_abs_real_eig", "n_wrong_sign"]


def classify_config(config: dict, tol: Tolerances = DEFAULT_TOL) -> dict:
    model = build_model(config, tol)
    if model.kind != "kg":
        raise ConfigError("sweep classifies Klein-Gordon scenarios only")
    dec = SpectralDecomposition(model.generator, model.K, tol)
    v = classify_criticality(model, dec.report(), tol)
    real = [abs(c.center.real) for c in dec.real_clusters]
    return {
        "kind": v.kind,
        "energy_min": v.energy_min,
        "c_norm": v.c_norm,
        "gap_alpha": v.gap_alpha,
        "n_complex_pairs": v.n_complex_pairs,
        "n_critical": v.n_critical,
        "min_abs_real_eig": min(real) if real else None,
        # definite eigenvalues whose Krein sign is opposite to the sign of the frequency
        "n_wrong_sign": sum(
            c.mult for c in dec.real_clusters
            if (c.center.real > 0 and c.sign_type == "negative") or (c.center.real < 0 and c.sign_type == "positive")
        ),
    }


def sweep(config: dict, param: str, values, tol: Tolerances | None = None) -> list[dict]:
    """Classification table of ``config`` with ``param`` set to each of ``values``."""
    config = validate_config(config)
    tol = tol or tolerances_for(config)
    rows = []
    for val in values:
        row = {"value": val, **classify_config(set_path(config, param, val), tol)}
        rows.append(row)
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r[k] is None else r[k]) for k in SWEEP_COLUMNS})
    return buf.getvalue()


def parse_values(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            num = float(tok)
        except ValueError as exc:
            raise ConfigError(f"sweep value {tok!r} is not a number") from exc
        out.append(int(num) if num.is_integer() and "." not in tok and "e" not in tok.lower() else num)
    return out


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kreinfield", description="Krein-space analysis of lattice Dirac and Klein-Gordon fields")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the full pipeline on a scenario")
    r.add_argument("config", help="scenario JSON file or bundled scenario name (DS1, DS2, free_dirac)")
    r.add_argument("--out", default="out", help="output directory")
    r.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    r.add_argument("--dump-kernels", action="store_true", help="write binary kernel series")
    r.add_argument("--dump-stride", type=int, default=16, help="frame stride for kernel dumps")

    s = sub.add_parser("sweep", help="classify a scenario family over one scalar parameter")
    s.add_argument("config")
    s.add_argument("--param", required=True, help="dotted config path, e.g. potential.V.V0")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--out", default=None, help="directory for sweep.csv (stdout only if omitted)")
    s.add_argument("--seed", type=int, default=0, help="accepted for symmetry with run; sweeps are deterministic")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        config = resolve_config(args.config)
        if args.command == "run":
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            return run(config, args.out, seed=args.seed, dump_kernels=args.dump_kernels, stride=args.dump_stride)
        rows = sweep(config, args.param, parse_values(args.values))
        text = rows_to_csv(rows)
        sys.stdout.write(text)
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / "sweep.csv").write_text(text)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KreinFieldError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
