"""Fourier-Galerkin propagators and norm-growth measurements.

Well-posedness shows up on truncated spaces as propagator norms that stay
bounded as the mode cutoff ``N`` grows; a violated condition makes
``||exp(t G_N)||`` blow up with ``N``.  This module assembles the generators,
evolves fields, and classifies the growth over a ladder of cutoffs.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
import scipy.linalg

from .periodic import E2, J2
from .symbols import GalerkinMatrix, Symbol, TruncatedField, galerkin_matrix
from .transforms import principal_symbol, real_generator_symbol
from .wellposed import ComplexSystem, RealSystem, Verdict, check_complex, check_real

System = Union[ComplexSystem, RealSystem]
TimeDependent = Callable[[float], System]

#: largest dense dimension exponentiated without an explicit override
MAX_DENSE_DIM = 2 * (2 * 64 + 1)
#: RK4 step bound numerator (the imaginary-axis stability limit is 2*sqrt(2))
RK4_BOUND = 2.6
#: auto-shrink threshold for the predicted growth exponent
MAX_EXPONENT = 40.0
#: default cutoff ladder
DEFAULT_LADDER = (8, 16, 32, 48)
#: max/min ratio below which a ladder counts as bounded
BOUNDED_RATIO = 1.5
#: R^2 threshold for the cubic-exponential model
CUBIC_R2 = 0.99


class StabilityViolation(ValueError):
    """Explicit step exceeds the RK4 stability bound."""


class DimensionCapExceeded(ValueError):
    """Dense exponential requested above the dimension cap."""


@dataclass(frozen=True)
class EvolutionConfig:
    N: int
    t_final: float
    method: str = "expm"
    dt: float | None = None
    samples: int = 33

    def __post_init__(self):
        if self.method not in ("expm", "step"):
            raise ValueError("method must be 'expm' or 'step'")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.samples < 2:
            raise ValueError("at least two samples are required")


@dataclass(frozen=True)
class NormHistory:
    times: np.ndarray
    norms: np.ndarray
    final: TruncatedField | None = None

    @property
    def growth(self) -> float:
        return float(self.norms.max() / self.norms[0]) if self.norms[0] else math.inf


# ---------------------------------------------------------------------------
# generators

def lower_order_size(sys: System) -> float:
    """Sum of coefficient sup bounds below the principal part."""
    if isinstance(sys, ComplexSystem):
        return sum(m.sup_bound() for m in (sys.A, sys.B, sys.C, sys.D))
    return sys.beta.sup_bound() + sys.gamma.sup_bound()


def principal_size(sys: System) -> float:
    return 1.0 if isinstance(sys, ComplexSystem) else abs(sys.principal_scale)


def generator_symbol(sys: System) -> Symbol:
    """Symbol of the generator: ``-iP`` for complex systems, ``-(aJd^4 + beta d^2 + gamma d)`` for real ones."""
    if isinstance(sys, ComplexSystem):
        return principal_symbol(sys) * -1j
    if isinstance(sys, RealSystem):
        return real_generator_symbol(sys)
    raise TypeError(f"unsupported system type {type(sys).__name__}")


def generator_matrix(sys: System, N: int) -> GalerkinMatrix:
    return galerkin_matrix(generator_symbol(sys), N)


def _as_generator(sys, N: int) -> GalerkinMatrix:
    if isinstance(sys, GalerkinMatrix):
        if sys.N != N:
            raise ValueError(f"generator has N={sys.N}, expected {N}")
        return sys
    return generator_matrix(sys, N)


def _check_dim(N: int, max_dim: int | None) -> None:
    cap = MAX_DENSE_DIM if max_dim is None else max_dim
    dim = 2 * (2 * N + 1)
    if dim > cap:
        raise DimensionCapExceeded(f"dense dimension {dim} exceeds cap {cap}; pass max_dim to override")


def propagator(G: GalerkinMatrix, t: float) -> np.ndarray:
    """``exp(t G)`` by scaling and squaring (scipy)."""
    return scipy.linalg.expm(t * G.data)


def propagator_norm(G: GalerkinMatrix, t: float) -> float:
    return float(np.linalg.norm(propagator(G, t), 2))


# ---------------------------------------------------------------------------
# evolution

def stability_bound(sys: System, N: int) -> float:
    """Largest admissible RK4 step ``2.6 / (|a| N^4 + ||lower|| N^3)``."""
    return RK4_BOUND / (principal_size(sys) * N ** 4 + lower_order_size(sys) * N ** 3)


def evolve(sys: System | TimeDependent | GalerkinMatrix, u0: TruncatedField, cfg: EvolutionConfig,
           max_dim: int | None = None) -> NormHistory:
    """Evolve ``u0`` to ``cfg.t_final`` and record L^2 norms at ``cfg.samples`` times.

    ``sys`` may be a system, a precomputed generator, or (stepping only) a
    callable returning the system at time ``t``.
    """
    N = cfg.N
    if u0.N != N:
        raise ValueError(f"initial field has N={u0.N}, config has N={N}")
    times = np.linspace(0.0, cfg.t_final, cfg.samples)
    if cfg.method == "expm":
        if callable(sys) and not isinstance(sys, GalerkinMatrix):
            raise ValueError("time-dependent coefficients require method='step'")
        _check_dim(N, max_dim)
        G = _as_generator(sys, N)
        step = propagator(G, times[1] - times[0])
        v = u0.to_vector()
        out = [v]
        for _ in times[1:]:
            v = step @ v
            out.append(v)
        return _history(times, out)
    return _evolve_rk4(sys, u0, times, cfg.dt)


def _history(times, vectors) -> NormHistory:
    norms = np.array([TruncatedField.from_vector(v).norm() for v in vectors])
    return NormHistory(times, norms, TruncatedField.from_vector(vectors[-1]))


def _evolve_rk4(sys, u0: TruncatedField, times: np.ndarray, dt: float | None) -> NormHistory:
    N = u0.N
    fixed = not callable(sys) or isinstance(sys, GalerkinMatrix)
    if isinstance(sys, GalerkinMatrix):
        bound = RK4_BOUND / max(np.linalg.norm(sys.data, 2), 1e-300)
        G_of_t = lambda t: sys.data  # noqa: E731
    else:
        probe = sys if fixed else sys(float(times[0]))
        bound = stability_bound(probe, N)
        if fixed:
            G = generator_matrix(sys, N).data
            G_of_t = lambda t: G  # noqa: E731
        else:
            G_of_t = lambda t: generator_matrix(sys(t), N).data  # noqa: E731
    if dt is None:
        dt = bound
    if dt > bound * (1 + 1e-12):
        raise StabilityViolation(f"dt={dt:.4g} exceeds the RK4 bound {bound:.4g} at N={N}")
    v = u0.to_vector()
    out = [v]
    t = float(times[0])
    for target in times[1:]:
        span = float(target) - t
        n = max(1, int(math.ceil(span / dt - 1e-9)))
        h = span / n
        for _ in range(n):
            if not fixed:
                # re-check stability against the current coefficients
                if h > stability_bound(sys(t), N) * (1 + 1e-12):
                    raise StabilityViolation(f"dt={h:.4g} exceeds the RK4 bound at t={t:.4g}")
            k1 = G_of_t(t) @ v
            Gm = G_of_t(t + h / 2)
            k2 = Gm @ (v + h / 2 * k1)
            k3 = Gm @ (v + h / 2 * k2)
            k4 = G_of_t(t + h) @ (v + h * k3)
            v = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        t = float(target)
        out.append(v)
    return _history(times, out)


# ---------------------------------------------------------------------------
# growth studies

def mean_symbol_exponent(sys: System, N: int) -> float:
    """Growth rate predicted from coefficient means: ``max_{|k|<=N} max Re eig``."""
    if isinstance(sys, ComplexSystem):
        means = [E2, sys.A.mode(0), sys.B.mode(0), sys.C.mode(0), sys.D.mode(0)]
        def sym(k):
            return -1j * sum(m * float(k) ** (4 - j) for j, m in enumerate(means))
    else:
        a, b, g = sys.principal_scale, sys.beta.mode(0), sys.gamma.mode(0)
        def sym(k):
            return -(a * J2 * k ** 4 - b * k ** 2 + 1j * g * k)
    return max(float(np.linalg.eigvals(sym(k)).real.max()) for k in range(-N, N + 1))


@dataclass(frozen=True)
class GrowthStudy:
    Ns: list
    propagator_norms: list
    t: float
    model: str
    ratio: float
    r2_cubic: float
    degree: float
    t_requested: float | None = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.Ns) != len(self.propagator_norms):
            raise ValueError("Ns and propagator_norms must have equal length")

    @property
    def bounded(self) -> bool:
        return self.model == "bounded"

    @property
    def shrunk(self) -> bool:
        return self.t_requested is not None and self.t != self.t_requested

    def rows(self) -> list[tuple[int, float, float]]:
        return [(n, self.t, v) for n, v in zip(self.Ns, self.propagator_norms)]


def classify(Ns: Sequence[int], norms: Sequence[float]) -> tuple[str, float, float, float]:
    """``(model, max/min ratio, R^2 of log-norm vs N^3, fitted degree)``.

    ``bounded`` when max/min <= 1.5; ``cubic-exponential`` when log-norm is
    linear in ``N^3`` with R^2 >= 0.99 and the fitted degree of log-norm in
    ``N`` is at least 2.5; otherwise ``polynomial`` (log-norm grows like
    ``N^degree``).
    """
    Ns = np.asarray(Ns, dtype=float)
    norms = np.asarray(norms, dtype=float)
    ratio = float(norms.max() / norms.min())
    logs = np.log(norms)
    r2, degree = math.nan, math.nan
    if len(Ns) >= 3:
        r2 = _r2(Ns ** 3, logs)
    pos = logs > 0
    if pos.sum() >= 2:
        degree = float(np.polyfit(np.log(Ns[pos]), np.log(logs[pos]), 1)[0])
    if ratio <= BOUNDED_RATIO:
        model = "bounded"
    elif r2 >= CUBIC_R2 and degree >= 2.5:
        model = "cubic-exponential"
    else:
        model = "polynomial"
    return model, ratio, r2, degree


def _r2(x: np.ndarray, y: np.ndarray) -> float:
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    tot = np.sum((y - y.mean()) ** 2)
    return 1.0 if tot == 0 else float(1 - np.sum(res ** 2) / tot)


def growth_study(sys: System, Ns: Sequence[int] = DEFAULT_LADDER, t: float = 0.01,
                 auto_shrink: bool = True, max_dim: int | None = None,
                 generator: Callable[[int], GalerkinMatrix] | None = None) -> GrowthStudy:
    """``||exp(t G_N)||_2`` over the ladder ``Ns`` and its growth model.

    When the mean-coefficient pre-scan predicts an exponent above 40 at the
    largest ``N``, ``t`` is reduced to keep it at 40 (noted in the result).
    ``generator`` overrides the Galerkin generator (e.g. a gauged one).
    """
    Ns = sorted(int(n) for n in Ns)
    if not Ns:
        raise ValueError("empty cutoff ladder")
    for n in Ns:
        _check_dim(n, max_dim)
    notes = []
    t_req = float(t)
    if auto_shrink:
        pred = mean_symbol_exponent(sys, Ns[-1]) * t
        if pred > MAX_EXPONENT:
            t = t * MAX_EXPONENT / pred
            notes.append(f"overflow guard: predicted exponent {pred:.4g} > {MAX_EXPONENT:g}; t reduced to {t:.6g}")
    norms = []
    for n in Ns:
        G = generator(n) if generator is not None else generator_matrix(sys, n)
        norms.append(propagator_norm(G, t))
    model, ratio, r2, degree = classify(Ns, norms)
    return GrowthStudy(Ns, norms, float(t), model, ratio, r2, degree, t_req, notes)


# ---------------------------------------------------------------------------
# dichotomy experiment

def verdict_for(sys: System, tolerance: float | None = None) -> Verdict:
    kw = {} if tolerance is None else {"tolerance": tolerance}
    if isinstance(sys, ComplexSystem):
        return check_complex(sys, **kw)
    return check_real(sys, **kw)


@dataclass(frozen=True)
class DichotomyReport:
    compliant: GrowthStudy | None
    violating: GrowthStudy | None
    compliant_verdict: Verdict | None
    violating_verdict: Verdict | None

    @property
    def consistent(self) -> bool:
        ok = True
        if self.compliant is not None:
            ok &= self.compliant.bounded == self.compliant_verdict.well_posed
        if self.violating is not None:
            ok &= self.violating.bounded == self.violating_verdict.well_posed
        return bool(ok)

    def series(self):
        for label, study in (("compliant", self.compliant), ("violating", self.violating)):
            if study is not None:
                yield label, study

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["series", "N", "t", "propagator_norm"])
        for label, study in self.series():
            for n, t, v in study.rows():
                w.writerow([label, n, f"{t:.17g}", f"{v:.17g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        out = {"schema_version": 1, "consistent": self.consistent, "series": {}}
        for label, study in self.series():
            verdict = self.compliant_verdict if label == "compliant" else self.violating_verdict
            out["series"][label] = {
                "Ns": study.Ns, "t": study.t, "t_requested": study.t_requested,
                "propagator_norms": study.propagator_norms, "model": study.model,
                "ratio": study.ratio, "r2_cubic": _finite(study.r2_cubic), "degree": _finite(study.degree),
                "notes": study.notes, "verdict": verdict.report(),
            }
        return json.dumps(out, indent=2, sort_keys=True)


def _finite(x: float):
    return None if x is None or not math.isfinite(x) else x


def dichotomy_experiment(compliant: System | None, violating: System | None,
                         Ns: Sequence[int] = DEFAULT_LADDER, t: float = 0.01,
                         **kwargs) -> DichotomyReport:
    """Growth studies of a compliant and a violating system plus their verdicts.

    Either side may be ``None`` for a one-sided report.
    """
    if compliant is None and violating is None:
        raise ValueError("at least one system is required")
    cs = growth_study(compliant, Ns, t, **kwargs) if compliant is not None else None
    vs = growth_study(violating, Ns, t, **kwargs) if violating is not None else None
    return DichotomyReport(cs, vs,
                           verdict_for(compliant) if compliant is not None else None,
                           verdict_for(violating) if violating is not None else None)
