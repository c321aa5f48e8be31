"""Command-line front end.

Configs are TOML files.  Scalars are lists of ``[k, re, im]`` triples;
matrices are tables with keys ``m11, m12, m21, m22`` holding such lists.
Omitted coefficients are zero.  See ``configs/`` for one example per kind.

Exit codes: 0 success (well-posed for ``check``/``frame``), 2 ill-posed,
1 any error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys as _sys
from pathlib import Path
from typing import Any

import numpy as np
import tomli

from . import __version__
from .evolve import (DEFAULT_LADDER, DimensionCapExceeded, EvolutionConfig, StabilityViolation,
                     dichotomy_experiment, evolve, growth_study, verdict_for)
from .frame import FrameState, corrected_system, frame_coefficients, trace_identity_residuals
from .periodic import MatrixCoefficient, PeriodicScalar
from .symbols import NotDiagonallyDominant, TruncatedField
from .transforms import (ConditionsViolated, diagonalize, real_gauge, verify_diagonalization,
                         verify_energy_estimate)
from .wellposed import (VERDICT_TOL, ComplexSystem, NonRealCoefficients, RealSystem, SingleEquation,
                        Verdict, check_complex, check_real, check_real_time_dependent,
                        check_real_via_complex, check_single)

SCHEMA_VERSION = 1
KINDS = ("complex", "real", "single", "frame")
EXIT_OK, EXIT_ERROR, EXIT_ILL = 0, 1, 2


class ConfigError(ValueError):
    """Invalid configuration, with a ``path:line:`` prefix where possible."""


# ---------------------------------------------------------------------------
# config parsing

class Config:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        try:
            self.text = self.path.read_text()
        except OSError as exc:
            raise ConfigError(f"{self.path}: cannot read config ({exc.strerror})") from exc
        try:
            self.data = tomli.loads(self.text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{self.path}: {exc}") from exc
        self.kind = self.data.get("kind")
        if self.kind not in KINDS:
            raise self.error("kind", f"'kind' must be one of {', '.join(KINDS)}, got {self.kind!r}")
        self.experiment = self.data.get("experiment", {})

    def line_of(self, key: str) -> int | None:
        """First line mentioning ``key`` as a table header or assignment."""
        last = key.split(".")[-1]
        for n, line in enumerate(self.text.splitlines(), 1):
            s = line.strip()
            if s.startswith("[") and s.strip("[]").strip() == key:
                return n
            if s.split("=", 1)[0].strip() == last and "=" in s:
                return n
        return None

    def error(self, key: str, message: str) -> ConfigError:
        # absent blocks are reported against the 'kind' line that demands them
        n = self.line_of(key) or self.line_of("kind")
        where = f"{self.path}:{n}" if n else f"{self.path}"
        return ConfigError(f"{where}: {message}")

    def table(self, key: str, data: dict | None = None) -> dict:
        data = self.data if data is None else data
        node = data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                raise self.error(key, f"missing required block [{key}]")
            node = node[part]
        if not isinstance(node, dict):
            raise self.error(key, f"[{key}] must be a table")
        return node

    # coefficient grammar ------------------------------------------------
    def scalar(self, block: dict, name: str, where: str, default=0.0) -> PeriodicScalar:
        if name not in block:
            return PeriodicScalar.constant(default) if default else PeriodicScalar.zero()
        val = block[name]
        if isinstance(val, (int, float)):
            return PeriodicScalar.constant(float(val))
        try:
            return PeriodicScalar.from_triples(val)
        except (TypeError, ValueError) as exc:
            raise self.error(f"{where}.{name}", f"{where}.{name}: {exc}") from exc

    def matrix(self, block: dict, name: str, where: str) -> MatrixCoefficient:
        if name not in block:
            return MatrixCoefficient.zero()
        val = block[name]
        if not isinstance(val, dict):
            raise self.error(f"{where}.{name}", f"{where}.{name} must be a table of m11..m22 entries")
        try:
            return MatrixCoefficient.from_dict(val)
        except (TypeError, ValueError) as exc:
            raise self.error(f"{where}.{name}", f"{where}.{name}: {exc}") from exc

    def system(self, where: str = "system", kind: str | None = None):
        kind = kind or self.kind
        blk = self.table(where)
        if kind == "complex":
            return ComplexSystem(*(self.matrix(blk, n, where) for n in "ABCD"))
        if kind == "real":
            a = float(blk.get("principal_scale", 1.0))
            if a == 0:
                raise self.error(f"{where}.principal_scale", "principal_scale must be nonzero")
            sys = RealSystem(self.matrix(blk, "beta", where), self.matrix(blk, "gamma", where), a)
            try:
                sys.require_real()
            except NonRealCoefficients as exc:
                raise self.error(where, str(exc)) from exc
            return sys
        if kind == "single":
            sign = int(blk.get("sign", 1))
            if sign not in (1, -1):
                raise self.error(f"{where}.sign", "sign must be +1 or -1")
            return SingleEquation(sign, *(self.scalar(blk, n, where) for n in "abcd"))
        if kind == "frame":
            if "xi" not in blk or "eta" not in blk:
                raise self.error(where, f"[{where}] needs both xi and eta")
            try:
                K = blk.get("K", 1.0)
                K = float(K) if isinstance(K, (int, float)) else PeriodicScalar.from_triples(K)
                return FrameState(self.scalar(blk, "xi", where), self.scalar(blk, "eta", where), K,
                                  float(blk.get("a", 1.0)), float(blk.get("b", 0.0)),
                                  float(blk.get("c", 0.0)), int(blk.get("l", 4)))
            except (TypeError, ValueError) as exc:
                raise self.error(where, str(exc)) from exc
        raise self.error("kind", f"unsupported kind {kind!r}")

    def samples(self) -> tuple[list, list] | None:
        """Time samples ``[[system.samples]]`` of a real system, if any."""
        blk = self.data.get("system", {})
        raw = blk.get("samples") if isinstance(blk, dict) else None
        if not raw:
            return None
        times, systems = [], []
        for j, s in enumerate(raw):
            where = f"system.samples[{j}]"
            if "t" not in s:
                raise self.error("samples", f"{where} needs a time 't'")
            times.append(float(s["t"]))
            systems.append(RealSystem(self.matrix(s, "beta", where), self.matrix(s, "gamma", where),
                                      float(s.get("principal_scale", blk.get("principal_scale", 1.0)))))
        return times, systems


def _opt(args, cfg: Config, name: str, default):
    val = getattr(args, name, None)
    if val is not None:
        return val
    return cfg.experiment.get(name, default)


# ---------------------------------------------------------------------------
# output helpers

def _num(x: float) -> str:
    return f"{x:.17g}"


def _emit(args, report: dict, lines: list[str]) -> None:
    report = {"schema_version": SCHEMA_VERSION, **report}
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default)
    if args.out:
        Path(args.out).write_text(text + "\n")
    if args.json:
        print(text)
    else:
        print("\n".join(lines))


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _verdict_lines(v: Verdict, title: str) -> list[str]:
    lines = [f"{title}:"]
    for c in v.conditions:
        lines.append(f"  {c.name:<16} residual {c.residual: .6e}  {'pass' if c.passed else 'FAIL'}")
    lines.append(f"  verdict: {'well-posed' if v.well_posed else 'ill-posed'}")
    return lines


def _series_lines(name: str, f: PeriodicScalar, tol: float = 1e-14) -> list[str]:
    trip = f.to_triples(tol)
    body = ", ".join(f"[{k}, {re + 0.0!r}, {im + 0.0!r}]" for k, re, im in trip)
    return [f"  {name} = [{body}]"]


def _matrix_lines(name: str, m: MatrixCoefficient) -> list[str]:
    out = [f"  [{name}]"]
    for i in range(2):
        for j in range(2):
            out += ["  " + s for s in _series_lines(f"m{i + 1}{j + 1}", m.entry(i, j))]
    return out


# ---------------------------------------------------------------------------
# subcommands

def cmd_check(args) -> int:
    cfg = Config(args.config)
    tol = float(_opt(args, cfg, "tolerance", VERDICT_TOL))
    report: dict[str, Any] = {"command": "check", "kind": cfg.kind}
    if cfg.kind == "complex":
        v = check_complex(cfg.system(), tol)
        lines = _verdict_lines(v, "complex system conditions")
        report["verdict"] = v.report()
    elif cfg.kind == "real":
        samples = cfg.samples()
        if samples is not None:
            times, systems = samples
            v = check_real_time_dependent(systems, times, tol)
            lines = _verdict_lines(v, f"real system conditions over {len(times)} sample times")
            report["verdict"] = v.report()
        else:
            sys = cfg.system()
            v = check_real(sys, tol)
            v2 = check_real_via_complex(sys, tol)
            lines = _verdict_lines(v, "real system trace conditions")
            lines += _verdict_lines(v2, "complex image conditions")
            lines.append(f"  paths agree: {'yes' if v.well_posed == v2.well_posed else 'no'}")
            report["verdict"] = v.report()
            report["verdict_via_complex"] = v2.report()
    elif cfg.kind == "single":
        v = check_single(cfg.system(), tol)
        lines = _verdict_lines(v, "single equation conditions")
        report["verdict"] = v.report()
    else:
        theta = float(cfg.table("system").get("theta", 0.0))
        sys, _ = corrected_system(cfg.system(), theta)
        v = check_real(sys, tol)
        lines = _verdict_lines(v, "corrected frame system conditions")
        report["verdict"] = v.report()
    _emit(args, report, lines)
    return EXIT_OK if v.well_posed else EXIT_ILL


def cmd_diagonalize(args) -> int:
    cfg = Config(args.config)
    if cfg.kind != "complex":
        raise cfg.error("kind", "diagonalize needs kind = \"complex\"")
    sys = cfg.system()
    r = _opt(args, cfg, "r", None)
    res = diagonalize(sys, int(r) if r is not None else None)
    N = int(_opt(args, cfg, "modes", 32))
    chk = verify_diagonalization(sys, res, N)
    lines = [f"cutoff radius r = {res.r}", "row 1 (sign +1):"]
    lines += _series_lines("a", res.row1.a) + _series_lines("b", res.row1.b) + _series_lines("c", res.row1.c)
    lines.append("row 2 (sign -1):")
    lines += _series_lines("a", res.row2.a) + _series_lines("b", res.row2.b) + _series_lines("c", res.row2.c)
    lines.append(f"verification at N = {N} (inner |k| <= {chk.inner}):")
    for key in ("offdiag_norm", "diag_norm", "band_offdiag_norm", "band_diag_norm",
                "raw_offdiag_norm", "offdiag_ratio", "raw_ratio"):
        lines.append(f"  {key:<18} {getattr(chk, key):.6e}")
    v1, v2 = check_single(res.row1), check_single(res.row2)
    lines.append(f"rows well-posed: {v1.well_posed and v2.well_posed}")
    _emit(args, {"command": "diagonalize", **res.report(), "verification": chk.report(),
                 "row_verdicts": [v1.report(), v2.report()]}, lines)
    return EXIT_OK


def cmd_gauge(args) -> int:
    cfg = Config(args.config)
    if cfg.kind != "real":
        raise cfg.error("kind", "gauge needs kind = \"real\"")
    sys = cfg.system()
    r = _opt(args, cfg, "r", None)
    res = real_gauge(sys, int(r) if r is not None else None)
    N = int(_opt(args, cfg, "modes", 32))
    energy = verify_energy_estimate(res, N)
    band = verify_energy_estimate(res, N, high_band=True)
    lines = [f"cutoff radius r = {res.r}"]
    lines += _series_lines("Psi4", res.Psi4) + _series_lines("Psi6", res.Psi6) + _series_lines("mu", res.mu)
    lines += _matrix_lines("beta4", res.beta4) + _matrix_lines("gamma5_sym", res.gamma5_sym)
    lines.append(f"energy estimate at N = {N}: {energy:.6e} (high band {band:.6e})")
    _emit(args, {"command": "gauge", **res.report(), "N": N, "energy_estimate": energy,
                 "energy_estimate_high_band": band}, lines)
    return EXIT_OK


def _initial_field(cfg: Config, N: int) -> TruncatedField:
    blk = cfg.data.get("initial")
    if blk is None:
        return TruncatedField.from_scalars(N, PeriodicScalar.from_modes({1: 1.0}))
    u1 = cfg.scalar(blk, "u1", "initial")
    u2 = cfg.scalar(blk, "u2", "initial")
    return TruncatedField.from_scalars(N, u1, u2)


def cmd_evolve(args) -> int:
    cfg = Config(args.config)
    if cfg.kind not in ("complex", "real"):
        raise cfg.error("kind", "evolve needs kind = \"complex\" or \"real\"")
    sys = cfg.system()
    N = int(_opt(args, cfg, "modes", 16))
    T = float(_opt(args, cfg, "t_final", 0.01))
    method = _opt(args, cfg, "method", "expm")
    if method not in ("expm", "step"):
        raise cfg.error("method", "method must be 'expm' or 'step'")
    dt = cfg.experiment.get("dt")
    ecfg = EvolutionConfig(N, T, method, float(dt) if dt is not None else None,
                           int(cfg.experiment.get("samples", 33)))
    hist = evolve(sys, _initial_field(cfg, N), ecfg)
    lines = ["t,norm"] + [f"{_num(t)},{_num(n)}" for t, n in zip(hist.times, hist.norms)]
    _emit(args, {"command": "evolve", "N": N, "t_final": T, "method": method,
                 "times": hist.times.tolist(), "norms": hist.norms.tolist()}, lines)
    return EXIT_OK


def cmd_growth(args) -> int:
    cfg = Config(args.config)
    if cfg.kind not in ("complex", "real"):
        raise cfg.error("kind", "growth needs kind = \"complex\" or \"real\"")
    Ns = cfg.experiment.get("Ns", list(DEFAULT_LADDER))
    if args.modes is not None:
        Ns = [args.modes]
    t = float(_opt(args, cfg, "t_final", 0.01))
    if "compliant" in cfg.data or "violating" in cfg.data:
        comp = cfg.system("compliant") if "compliant" in cfg.data else None
        viol = cfg.system("violating") if "violating" in cfg.data else None
        rep = dichotomy_experiment(comp, viol, Ns, t)
        csv_text = rep.to_csv()
        notes = [n for _, s in rep.series() for n in s.notes]
        lines = [csv_text.rstrip("\n")] + [f"# {n}" for n in notes]
        for label, s in rep.series():
            lines.append(f"# {label}: model {s.model}, max/min {s.ratio:.6g}")
        lines.append(f"verdicts consistent: {'yes' if rep.consistent else 'no'}")
        report = {"command": "growth", **json.loads(rep.to_json())}
    else:
        sys = cfg.system()
        st = growth_study(sys, Ns, t)
        v = verdict_for(sys)
        lines = ["series,N,t,propagator_norm"]
        lines += [f"system,{n},{_num(tt)},{_num(p)}" for n, tt, p in st.rows()]
        lines += [f"# {n}" for n in st.notes]
        lines.append(f"# model {st.model}, max/min {st.ratio:.6g}")
        consistent = st.bounded == v.well_posed
        lines.append(f"verdicts consistent: {'yes' if consistent else 'no'}")
        report = {"command": "growth", "consistent": consistent, "Ns": st.Ns, "t": st.t,
                  "propagator_norms": st.propagator_norms, "model": st.model, "notes": st.notes,
                  "verdict": v.report()}
    _emit(args, report, lines)
    return EXIT_OK


def cmd_frame(args) -> int:
    cfg = Config(args.config)
    if cfg.kind != "frame":
        raise cfg.error("kind", "frame needs kind = \"frame\"")
    state = cfg.system()
    theta = float(cfg.table("system").get("theta", 0.0))
    fc = frame_coefficients(state)
    sys, hc = corrected_system(state, theta)
    v = check_real(sys, float(_opt(args, cfg, "tolerance", VERDICT_TOL)))
    ids = trace_identity_residuals(state, theta)
    lines = ["frame coefficients:"]
    lines += _matrix_lines("beta_hat", fc.beta_hat) + _matrix_lines("gamma_hat", fc.gamma_hat)
    lines.append("identity residuals:")
    lines += [f"  {k:<24} {val:.3e}" for k, val in ids.items()]
    lines.append(f"theta = {_num(theta)}, third_order_coeff = {_num(hc.third_order_coeff)}"
                 + ("" if hc.exact else " (rotation refit, approximate)"))
    lines += _verdict_lines(v, "corrected frame system conditions")
    lines.append("well-posed" if v.well_posed else "ill-posed")
    _emit(args, {"command": "frame", "state": state.to_dict(), "theta": theta,
                 "beta_hat": fc.beta_hat.to_dict(), "gamma_hat": fc.gamma_hat.to_dict(),
                 "beta_hat1": hc.beta_hat1.to_dict(), "gamma_hat1": hc.gamma_hat1.to_dict(),
                 "third_order_coeff": hc.third_order_coeff, "rotation_exact": hc.exact,
                 "identities": ids, "verdict": v.report()}, lines)
    return EXIT_OK if v.well_posed else EXIT_ILL


COMMANDS = {
    "check": (cmd_check, "evaluate the well-posedness conditions"),
    "diagonalize": (cmd_diagonalize, "diagonalize a complex system and verify the conjugation"),
    "gauge": (cmd_gauge, "gauge a real system and measure the energy estimate"),
    "evolve": (cmd_evolve, "evolve an initial field and print its norm history"),
    "growth": (cmd_growth, "propagator norms over a cutoff ladder"),
    "frame": (cmd_frame, "frame coefficients, identities and verdict"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dispersive-torus", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--modes", type=int, metavar="N")
        sp.add_argument("--t-final", dest="t_final", type=float, metavar="T")
        sp.add_argument("--r", type=int, metavar="R")
        sp.add_argument("--tolerance", type=float, metavar="TOL")
        sp.add_argument("--method", choices=("expm", "step"))
        sp.add_argument("--out", metavar="PATH")
        sp.add_argument("--json", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        return func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=_sys.stderr)
    except ConditionsViolated as exc:
        print(f"error: ConditionsViolated({exc.condition}): {exc}", file=_sys.stderr)
    except (NotDiagonallyDominant, StabilityViolation, DimensionCapExceeded, NonRealCoefficients) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=_sys.stderr)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
