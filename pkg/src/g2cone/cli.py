"""Command-line front end.

Five subcommands: verify-appendix (engine vs closed-form certification),
solve (solution tables), converge (deviation report), torsion and
check-metric (pointwise structure diagnostics).  Configuration is a flat
key = value text file; unknown keys are rejected.  Exit codes: 0 pass,
1 verification failure, 2 config error, 3 hypothesis violation.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Dict, List, Tuple

import numpy as np

from . import convergence, exterior, flow, g2
from ._kernels import backend_name

DEFAULT_SEED = 414243

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3


class ConfigError(ValueError):
    pass


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def _parse_floats(s: str) -> List[float]:
    return [float(v) for v in s.split(",") if v.strip()]


_COMMON_KEYS = {
    "seed": int,
    "out": str,
    "format": str,
    "tol_quadrature": float,
    "tol_root": float,
    "tol_verify": float,
}

_FLOW_KEYS = {
    "f": str,
    "h": str,
    "initial_data": str,
}

_MODE_KEYS: Dict[str, Dict[str, object]] = {
    "verify-appendix": {**_COMMON_KEYS, "profiles": int, "selftest_sign_flip": _parse_bool},
    "solve": {
        **_COMMON_KEYS,
        **_FLOW_KEYS,
        "t_values": _parse_floats,
        "r_min": float,
        "r_max": float,
        "n_r": int,
        "oracle_checks": int,
        "oracle_steps": int,
        "oracle_tol": float,
    },
    "converge": {
        **_COMMON_KEYS,
        **_FLOW_KEYS,
        "t_values": _parse_floats,
        "K": float,
        "n": int,
        "converge_dev_max": float,
        "refinement_tol": float,
    },
    "torsion": {**_COMMON_KEYS, **_FLOW_KEYS, "profile": str, "r_min": float, "r_max": float, "n_r": int},
    "check-metric": {**_COMMON_KEYS, **_FLOW_KEYS, "profile": str, "r_min": float, "r_max": float, "n_r": int},
}

_DEFAULTS: Dict[str, Dict[str, object]] = {
    "verify-appendix": {"profiles": 100, "selftest_sign_flip": False, "format": "json"},
    "solve": {
        "f": "constant:0",
        "h": "constant:0",
        "t_values": [0.0, 1.0],
        "r_min": 1.0,
        "r_max": 4.0,
        "n_r": 64,
        "oracle_checks": 20,
        "oracle_steps": 4000,
        "oracle_tol": 1e-6,
        "format": "csv",
    },
    "converge": {
        "f": "constant:0",
        "h": "constant:-1",
        "t_values": [0.0, 1.0, 3.0, 7.0, 15.0, 31.0],
        "K": 4.0,
        "n": 512,
        "converge_dev_max": 0.05,
        "refinement_tol": 1e-6,
        "format": "json",
    },
    "torsion": {"profile": "cone", "r_min": 1.0, "r_max": 10.0, "n_r": 19, "format": "csv"},
    "check-metric": {"profile": "cone", "r_min": 1.0, "r_max": 10.0, "n_r": 19, "format": "csv"},
}

_COMMON_DEFAULTS = {
    "seed": DEFAULT_SEED,
    "tol_quadrature": 1e-10,
    "tol_root": 1e-10,
    "tol_verify": 1e-8,
}


def parse_config(mode: str, path: str | None, overrides: dict | None = None) -> dict:
    """Resolve the flat key = value file against the mode's schema."""
    schema = _MODE_KEYS[mode]
    cfg: dict = {**_COMMON_DEFAULTS, **_DEFAULTS[mode]}
    if path is not None:
        try:
            with open(path) as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}")
        for lineno, line in enumerate(lines, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected key = value, got {stripped!r}")
            key, _, value = stripped.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in schema:
                raise ConfigError(f"line {lineno}: unknown key {key!r} for mode {mode}")
            caster = schema[key]
            try:
                cfg[key] = caster(value)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}")
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    cfg["mode"] = mode
    return cfg


def _echo_config(cfg: dict) -> dict:
    out = {}
    for k in sorted(cfg):
        v = cfg[k]
        out[k] = v if isinstance(v, (int, float, bool, str, list)) else str(v)
    return out


def _resolve_flow_data(cfg: dict) -> flow.FlowData:
    if cfg.get("initial_data"):
        return flow.read_initial_data_csv(cfg["initial_data"], quad_tol=cfg["tol_quadrature"])
    return flow.FlowData(f=_parse_func(cfg.get("f", "constant:0")), h=_parse_func(cfg.get("h", "constant:0")))


def _parse_func(spec: str) -> flow.Func1D:
    """'constant:c' | 'gaussian:c' | 'rational:c' | 'table:path.csv'."""
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "table":
        ys, vals = [], []
        import csv as _csv

        with open(arg.strip(), newline="") as fh:
            reader = _csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header] != ["y", "value"]:
                raise ConfigError(f"function table must have header y,value, got {header}")
            for row in reader:
                if row:
                    ys.append(float(row[0]))
                    vals.append(float(row[1]))
        if len(ys) < 2:
            raise ConfigError("function table needs at least two rows")
        return flow.TabulatedFunc(ys, vals)
    try:
        param = float(arg) if arg else 0.0
        return flow.builtin_func(kind, param)
    except ValueError as exc:
        raise ConfigError(f"bad function spec {spec!r}: {exc}")


def _resolve_profile(cfg: dict, t_fixed_holder: list) -> exterior.Profile:
    spec = cfg.get("profile", "cone")
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "cone":
        return exterior.cone_profile()
    if kind == "constant":
        try:
            a_str, b_str = arg.split(",")
            return exterior.constant_profile(float(a_str), float(b_str))
        except ValueError as exc:
            raise ConfigError(f"bad constant profile {spec!r}: {exc}")
    if kind == "flow":
        try:
            t_fixed = float(arg) if arg else 0.0
        except ValueError as exc:
            raise ConfigError(f"bad flow profile {spec!r}: {exc}")
        t_fixed_holder.append(t_fixed)
        data = _resolve_flow_data(cfg)
        sol = flow.FlowSolution(data, quad_tol=cfg["tol_quadrature"], root_tol=cfg["tol_root"])
        return sol.profile()
    raise ConfigError(f"unknown profile kind {spec!r}")


def _emit(cfg: dict, text: str) -> None:
    out = cfg.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _csv_text(cfg: dict, header: str, rows: List[str], extra_meta: dict | None = None) -> str:
    lines = [f"# {k} = {v}" for k, v in sorted({**_echo_config(cfg), **(extra_meta or {})}.items())]
    return "\n".join(lines + [header] + rows)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_verify_appendix(cfg: dict) -> Tuple[int, str]:
    """Engine-vs-closed-form suite over seeded random profiles; certifies
    every coefficient of d(phi) and d(phi)/dt on the cone family."""
    rng = np.random.default_rng(cfg["seed"])
    tol = cfg["tol_verify"]
    n_profiles = cfg["profiles"]
    r0, t0 = 2.0, 0.0

    worst = 0.0
    worst_term = None
    worst_profile = None
    for _ in range(n_profiles):
        p = exterior.random_point_profile(rng)
        closed_d = flow.dphi_closed_form(p, r0, t0)
        if cfg["selftest_sign_flip"]:
            flipped = dict(closed_d.terms)
            flipped[(4, 5, 6, 7)] = -flipped[(4, 5, 6, 7)]
            closed_d = type(closed_d)(4, flipped)
        engine_d = flow.dphi_engine(p, r0, t0)
        closed_dt = flow.dphidt_closed_form(p, r0, t0)
        engine_dt = flow.dphidt_engine(p, r0, t0)
        for closed, engine in ((closed_d, engine_d), (closed_dt, engine_dt)):
            for idx in set(closed.terms) | set(engine.terms):
                diff = abs(closed.terms.get(idx, 0.0) - engine.terms.get(idx, 0.0))
                if diff > worst:
                    worst = diff
                    worst_term = "e" + "".join(str(i) for i in idx)
                    worst_profile = {k[0] + "_" + str(k[1]) + str(k[2]): v for k, v in p.values.items()}

    passed = worst < tol
    report = {
        "mode": "verify-appendix",
        "backend": backend_name(),
        "profiles": n_profiles,
        "max_diff": worst,
        "worst_term": worst_term,
        "worst_profile": worst_profile,
        "tolerance": tol,
        "pass": passed,
        "config": _echo_config(cfg),
    }
    return (EXIT_PASS if passed else EXIT_FAIL), json.dumps(report, indent=2, sort_keys=True)


def cmd_solve(cfg: dict) -> Tuple[int, str]:
    """Tabulate the closed-form solution over (t, r) and cross-check random
    rows against the RK4 characteristic oracle."""
    data = _resolve_flow_data(cfg)
    sol = flow.FlowSolution(data, quad_tol=cfg["tol_quadrature"], root_tol=cfg["tol_root"])
    profile = sol.profile()
    rng = np.random.default_rng(cfg["seed"])

    r_min, r_max, n_r = cfg["r_min"], cfg["r_max"], cfg["n_r"]
    if not (r_max > r_min >= 0):
        raise ConfigError("need r_max > r_min >= 0")
    r_grid = r_min + (r_max - r_min) * np.arange(1, n_r + 1) / n_r

    rows = []
    entries = []
    errors = []
    max_residual = 0.0
    for t in cfg["t_values"]:
        for r in r_grid:
            t, r = float(t), float(r)
            x, y = r + t, r - t
            try:
                B = sol.B(x, y)
                A = sol.A(x, y)
                res = flow.flow_residual(profile, r, t).max_abs_coeff()
            except (flow.DomainError, flow.DegenerateMetricError) as exc:
                errors.append(f"t={t} r={r}: {exc}")
                continue
            max_residual = max(max_residual, res)
            entries.append((t, r, x, y, B, A))
            rows.append(f"{t!r},{r!r},{x!r},{y!r},{float(B)!r},{float(A)!r},{float(res)!r}")

    # cross-check rows that lie strictly downstream of solvable initial data
    oracle_max = 0.0
    checked = 0
    checkable = [e for e in entries if e[2] > e[3] and e[3] - float(data.h.value(e[3])) > 1e-9]
    if checkable and cfg["oracle_checks"] > 0:
        idxs = rng.choice(len(checkable), size=min(cfg["oracle_checks"], len(checkable)), replace=False)
        for i in idxs:
            t, r, x, y, B, A = checkable[int(i)]
            B0 = sol.B(y, y)
            A0 = sol.A(y, y)
            state = flow.characteristic_oracle(y, B0, A0, x, steps=cfg["oracle_steps"])
            oracle_max = max(oracle_max, abs(state.B - B), abs(state.A - A))
            checked += 1

    flags = data.hypothesis_flags(min(e[3] for e in entries), max(e[3] for e in entries)) if entries else {}
    meta = {
        "backend": backend_name(),
        "max_residual": repr(float(max_residual)),
        "oracle_checked": checked,
        "oracle_max_discrepancy": repr(float(oracle_max)),
        "domain_errors": len(errors),
        **{f"hypothesis_{k}": v for k, v in flags.items()},
    }
    text = _csv_text(cfg, "t,r,x,y,B,A,residual", rows, meta)
    if errors:
        text += "\n" + "\n".join(f"# error: {e}" for e in errors)
        return EXIT_FAIL, text
    ok = max_residual < cfg["tol_verify"] and oracle_max < cfg["oracle_tol"]
    return (EXIT_PASS if ok else EXIT_FAIL), text


def cmd_converge(cfg: dict) -> Tuple[int, str]:
    """Deviation-from-cone report; gated on the convergence hypotheses."""
    data = _resolve_flow_data(cfg)
    K, n = cfg["K"], cfg["n"]
    t_values = cfg["t_values"]

    # f >= 0 must hold on everything we will query; h < y is the initial-data
    # condition (t = 0, where y = s runs over [1, K]).
    y_min = min((t + 1.0) - 2.0 * t for t in t_values)
    y_max = max((t + 1.0) * K - 2.0 * t for t in t_values)
    full = data.hypothesis_flags(y_min, y_max)
    initial = data.hypothesis_flags(1.0, K)
    violated = []
    if not full["f_nonneg"]:
        violated.append("f_nonneg")
    if not full["f_bounded"]:
        violated.append("f_bounded")
    if not full["h_bounded"]:
        violated.append("h_bounded")
    if not initial["h_below_identity"]:
        violated.append("h_below_identity")
    if violated:
        report = {
            "mode": "converge",
            "violated_hypotheses": violated,
            "config": _echo_config(cfg),
        }
        return EXIT_HYPOTHESIS, json.dumps(report, indent=2, sort_keys=True)

    sol = flow.FlowSolution(data, quad_tol=cfg["tol_quadrature"], root_tol=cfg["tol_root"])
    report = convergence.build_report(
        sol, t_values, K, n,
        refinement_tol=cfg["refinement_tol"],
        metadata={
            "backend": backend_name(),
            "config": _echo_config(cfg),
            "hypothesis_flags_full_window": full,
            "hypothesis_flags_initial_window": initial,
        },
    )

    exact = max(report.sup_metric_dev) <= 1e-12
    converged = exact or (
        report.fit_exponent <= -0.9 and report.sup_metric_dev[-1] < cfg["converge_dev_max"]
    )
    code = EXIT_PASS if converged else EXIT_FAIL
    if cfg.get("format") == "csv":
        return code, _csv_text(cfg, report.to_csv_rows()[0], report.to_csv_rows()[1:])
    return code, report.to_json()


def cmd_torsion(cfg: dict) -> Tuple[int, str]:
    """Pointwise d(phi) and delta(phi) residuals along an r-grid."""
    holder: list = []
    profile = _resolve_profile(cfg, holder)
    t_fixed = holder[0] if holder else 0.0
    r_min, r_max, n_r = cfg["r_min"], cfg["r_max"], cfg["n_r"]
    r_grid = r_min + (r_max - r_min) * np.arange(1, n_r + 1) / n_r

    rows = []
    worst = 0.0
    failures = []
    for r in r_grid:
        try:
            d_res, delta_res = g2.torsion_residuals(profile, float(r), t_fixed)
        except (flow.DomainError, flow.DegenerateMetricError, g2.DegenerateStructureError) as exc:
            failures.append(f"r={r}: {exc}")
            continue
        worst = max(worst, d_res, delta_res)
        rows.append(f"{float(r)!r},{d_res!r},{delta_res!r}")

    meta = {"backend": backend_name(), "t": t_fixed, "max_residual": repr(float(worst)), "row_errors": len(failures)}
    text = _csv_text(cfg, "r,dphi_residual,delta_phi_residual", rows, meta)
    if failures:
        text += "\n" + "\n".join(f"# error: {e}" for e in failures)
        return EXIT_FAIL, text
    return (EXIT_PASS if worst < cfg["tol_verify"] else EXIT_FAIL), text


def cmd_check_metric(cfg: dict) -> Tuple[int, str]:
    """Recompute the metric from the 3-form through the B tensor and compare
    against the diagonal (A^2 x3, B^2 x3, 1)."""
    holder: list = []
    profile = _resolve_profile(cfg, holder)
    t_fixed = holder[0] if holder else 0.0
    r_min, r_max, n_r = cfg["r_min"], cfg["r_max"], cfg["n_r"]
    r_grid = r_min + (r_max - r_min) * np.arange(1, n_r + 1) / n_r

    rows = []
    worst = 0.0
    failures = []
    for r in r_grid:
        try:
            A = profile.A(float(r), t_fixed)
            B = profile.B(float(r), t_fixed)
            phi = g2.scaled_associative_form((A, A, A, B, B, B, 1.0))
            gmat = g2.metric_from_phi(phi)
            expected = np.diag(g2.MetricDiag.from_cone(A, B).as_array())
            err = float(np.max(np.abs(gmat - expected)))
        except (flow.DomainError, flow.DegenerateMetricError, g2.DegenerateStructureError,
                g2.OrientationError) as exc:
            failures.append(f"r={r}: {exc}")
            continue
        worst = max(worst, err)
        rows.append(f"{float(r)!r},{err!r}")

    meta = {"backend": backend_name(), "t": t_fixed, "max_error": repr(float(worst)), "row_errors": len(failures)}
    text = _csv_text(cfg, "r,max_error", rows, meta)
    if failures:
        text += "\n" + "\n".join(f"# error: {e}" for e in failures)
        return EXIT_FAIL, text
    return (EXIT_PASS if worst < cfg["tol_verify"] else EXIT_FAIL), text


_COMMANDS = {
    "verify-appendix": cmd_verify_appendix,
    "solve": cmd_solve,
    "converge": cmd_converge,
    "torsion": cmd_torsion,
    "check-metric": cmd_check_metric,
}


def run(mode: str, config_path: str | None, seed: int | None = None, out: str | None = None) -> int:
    try:
        cfg = parse_config(mode, config_path, {"seed": seed, "out": out})
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    try:
        code, text = _COMMANDS[mode](cfg)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except flow.HypothesisError as exc:
        sys.stderr.write(f"hypothesis violation: {exc}\n")
        return EXIT_HYPOTHESIS
    _emit(cfg, text)
    return code


def main(argv: List[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="g2cone",
        description="Flow of G2-structures on the cone over S3 x S3: verification and solution tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None, help="override the run seed")
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
    args = parser.parse_args(argv)
    return run(args.command, args.config, args.seed, args.out)


if __name__ == "__main__":
    sys.exit(main())
