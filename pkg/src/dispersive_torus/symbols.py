"""Separable pseudodifferential symbols on the torus and their Galerkin matrices.

A symbol is a finite sum ``sum_j f_j(x) g_j(xi)`` where ``f_j`` is a 2x2
:class:`~dispersive_torus.periodic.MatrixCoefficient` and ``g_j`` is an
:class:`XiFactor`, i.e. ``xi**p`` times a product of cutoff derivatives
``phi_r^{(d)}(xi)``.  Operators act on Fourier modes by left quantization,
``(Qu)(x) = sum_k exp(ikx) q(x, k) u_k``.

Truncated fields and Galerkin matrices use the mode-major layout: the
unknown for mode ``k`` and component ``c`` sits at index ``2*(k+N) + c``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import sympy

from .periodic import (DEFAULT_TOL, I2, TWO_PI, MatrixCoefficient, PeriodicScalar,
                       as_matrix)


class NotDiagonallyDominant(ArithmeticError):
    """The perturbation of the identity is too large for a certified inverse."""

    def __init__(self, norm: float, bound: float, message: str | None = None):
        self.norm = norm
        self.bound = bound
        super().__init__(message or f"perturbation norm {norm:.4g} is not below {bound}; increase the cutoff radius r")


class NonRealInput(ValueError):
    """A field expected to be real-valued has non conjugate-symmetric modes."""


# ---------------------------------------------------------------------------
# cutoff

@functools.lru_cache(maxsize=None)
def _transition_derivative(d: int):
    s = sympy.Symbol("s", real=True)
    h0 = sympy.exp(-1 / s)
    h1 = sympy.exp(-1 / (1 - s))
    expr = sympy.diff(h0 / (h0 + h1), s, d)
    return sympy.lambdify(s, expr, "numpy")


def transition(s, d: int = 0):
    """Smooth step ``psi(s) = h(s) / (h(s) + h(1-s))`` and its derivatives.

    ``h(s) = exp(-1/s)`` for ``s > 0`` and 0 otherwise, so ``psi`` is 0 for
    ``s <= 0`` and 1 for ``s >= 1``.
    """
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    if d == 0:
        out[s >= 1] = 1.0
    inside = (s > 0) & (s < 1)
    if np.any(inside):
        with np.errstate(all="ignore"):
            vals = _transition_derivative(d)(s[inside])
        out[inside] = np.nan_to_num(np.broadcast_to(vals, s[inside].shape), nan=0.0)
    return out


def cutoff(r: float, xi, d: int = 0):
    """``d``-th derivative of the even cutoff ``phi_r(xi) = psi(|xi| - r)``."""
    if r <= 0:
        raise ValueError("cutoff radius must be positive")
    if d < 0:
        raise ValueError("derivative order must be nonnegative")
    xi = np.asarray(xi, dtype=float)
    val = transition(np.abs(xi) - r, d)
    if d % 2:
        val = val * np.sign(xi)
    return val if val.ndim else float(val)


# ---------------------------------------------------------------------------
# xi factors

@dataclass(frozen=True, order=True)
class XiFactor:
    """``xi**power * prod_j phi_{r_j}^{(d_j)}(xi)``.

    ``cutoffs`` is a sorted tuple of ``(r, d)`` pairs.  A negative power needs
    at least one cutoff factor, which vanishes near ``xi = 0``.
    """

    power: int = 0
    cutoffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cutoffs", tuple(sorted((float(r), int(d)) for r, d in self.cutoffs)))
        if self.power < 0 and not self.cutoffs:
            raise ValueError("negative powers of xi require a cutoff factor")

    @property
    def order(self) -> float:
        # derivatives of the cutoff are compactly supported: order -inf
        if any(d > 0 for _, d in self.cutoffs):
            return -math.inf
        return self.power

    @property
    def is_poly(self) -> bool:
        return not self.cutoffs

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        val = np.ones_like(xi)
        for r, d in self.cutoffs:
            val = val * cutoff(r, xi, d)
        if self.power >= 0:
            val = val * xi ** self.power
        else:
            safe = np.where(val != 0, xi, 1.0)
            val = np.where(val != 0, val * safe ** float(self.power), 0.0)
        return val

    def __mul__(self, other: "XiFactor") -> "XiFactor":
        return XiFactor(self.power + other.power, self.cutoffs + other.cutoffs)

    def derivative(self) -> list[tuple[float, "XiFactor"]]:
        """``d/dxi`` as a list of ``(scale, factor)`` pairs."""
        out = []
        if self.power != 0:
            out.append((float(self.power), XiFactor(self.power - 1, self.cutoffs)))
        for j, (r, d) in enumerate(self.cutoffs):
            cs = list(self.cutoffs)
            cs[j] = (r, d + 1)
            out.append((1.0, XiFactor(self.power, tuple(cs))))
        return out


def poly(m: int) -> XiFactor:
    """``xi**m``."""
    if m < 0:
        raise ValueError("use cutoff_power for negative orders")
    return XiFactor(m)


def cutoff_power(l: int, r: float, d: int = 0) -> XiFactor:
    """``phi_r^{(d)}(xi) / xi**l``."""
    return XiFactor(-l, ((r, d),))


# ---------------------------------------------------------------------------
# symbols

@dataclass(frozen=True, eq=False)
class Symbol:
    """Finite sum of separable terms ``coef(x) * xi_factor(xi)``."""

    terms: Mapping[XiFactor, MatrixCoefficient] = field(default_factory=dict)
    remainder_order: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", dict(sorted(self.terms.items())))

    @classmethod
    def zero(cls) -> "Symbol":
        return cls({})

    @classmethod
    def term(cls, coef, xi: XiFactor, scale: complex = 1.0) -> "Symbol":
        return cls({xi: as_matrix(coef) * scale})

    @classmethod
    def from_terms(cls, pairs: Iterable[tuple], remainder_order: int | None = None) -> "Symbol":
        acc: dict[XiFactor, MatrixCoefficient] = {}
        for coef, xi in pairs:
            coef = as_matrix(coef)
            acc[xi] = acc[xi] + coef if xi in acc else coef
        return cls(acc, remainder_order)

    @classmethod
    def identity(cls) -> "Symbol":
        return cls.term(I2, poly(0))

    @classmethod
    def differential(cls, coefs: Iterable, variable: str = "D") -> "Symbol":
        """Operator ``sum_m coefs[m] * X**m`` with ``X = D_x`` (symbol ``xi``)
        or ``X = d/dx`` (symbol ``i*xi``)."""
        unit = {"D": 1.0, "d": 1j}[variable]
        pairs = []
        for m, c in enumerate(coefs):
            if c is None:
                continue
            pairs.append((as_matrix(c) * unit ** m, poly(m)))
        return cls.from_terms(pairs)

    # properties -------------------------------------------------------
    @property
    def order(self) -> float:
        live = [xi.order for xi, c in self.terms.items() if not c.is_zero(0.0)]
        return max(live) if live else -math.inf

    @property
    def coefficient_bandwidth(self) -> int:
        return max((c.K for c in self.terms.values()), default=0)

    @property
    def cutoff_radii(self) -> set:
        return {r for xi in self.terms for r, _ in xi.cutoffs}

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(c.is_zero(tol) for c in self.terms.values())

    def __call__(self, x, xi):
        """Point value ``q(x, xi)`` as a 2x2 array (broadcast over inputs)."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(np.broadcast(x, xi).shape + (2, 2), dtype=complex)
        for g, f in self.terms.items():
            out = out + f(x) * np.asarray(g(xi))[..., None, None]
        return out

    # algebra ------------------------------------------------------------
    def __add__(self, other: "Symbol") -> "Symbol":
        acc = dict(self.terms)
        for xi, c in other.terms.items():
            acc[xi] = acc[xi] + c if xi in acc else c
        rem = [o for o in (self.remainder_order, other.remainder_order) if o is not None]
        return Symbol(acc, max(rem) if rem else None)

    def __neg__(self) -> "Symbol":
        return Symbol({xi: -c for xi, c in self.terms.items()}, self.remainder_order)

    def __sub__(self, other: "Symbol") -> "Symbol":
        return self + (-other)

    def __mul__(self, s) -> "Symbol":
        if isinstance(s, Symbol):
            raise TypeError("use compose() for operator products")
        return Symbol({xi: c * s for xi, c in self.terms.items()}, self.remainder_order)

    __rmul__ = __mul__

    def left_multiply(self, mat) -> "Symbol":
        """``mat(x) @ q`` (pointwise; exact for x-only left factors)."""
        mat = as_matrix(mat)
        return Symbol({xi: mat @ c for xi, c in self.terms.items()}, self.remainder_order)

    def right_multiply(self, mat) -> "Symbol":
        mat = as_matrix(mat)
        return Symbol({xi: c @ mat for xi, c in self.terms.items()}, self.remainder_order)

    def xi_derivative(self) -> "Symbol":
        pairs = []
        for g, f in self.terms.items():
            for s, g1 in g.derivative():
                pairs.append((f * s, g1))
        return Symbol.from_terms(pairs, self.remainder_order)

    def x_derivative(self) -> "Symbol":
        return Symbol({xi: c.derivative() for xi, c in self.terms.items()}, self.remainder_order)

    def truncate(self, order_cut: float) -> "Symbol":
        """Drop terms of order below ``order_cut``."""
        kept = {xi: c for xi, c in self.terms.items() if xi.order >= order_cut}
        rem = self.remainder_order
        if len(kept) < len(self.terms):
            rem = max(rem, order_cut - 1) if rem is not None else order_cut - 1
        return Symbol(kept, rem)

    def trimmed(self, tol: float = 0.0) -> "Symbol":
        return Symbol({xi: c.trim(tol) for xi, c in self.terms.items() if not c.is_zero(tol)},
                      self.remainder_order)


#: expansion terms kept in compose (the constructions here never need more than 2)
MAX_EXPANSION = 4


def compose(p: Symbol, q: Symbol, order_cut: float, max_terms: int = MAX_EXPANSION) -> Symbol:
    """Symbol of ``Op(p) Op(q)`` modulo terms of order below ``order_cut``.

    Uses ``sum_k ((-i)^k / k!) d_xi^k p * d_x^k q``; the sum is exact (no
    remainder) when ``p`` is polynomial in ``xi`` of degree ``<= max_terms``
    and no term falls below the cut.
    """
    acc: dict[XiFactor, MatrixCoefficient] = {}
    dropped = False
    dp, dq = p, q
    exact = all(xi.is_poly for xi in p.terms)
    for k in range(max_terms + 1):
        if dp.is_zero():
            break
        if dp.order + dq.order < order_cut:
            dropped = dropped or not dp.is_zero()
            break
        scale = (-1j) ** k / math.factorial(k)
        for gp, fp in dp.terms.items():
            for gq, fq in dq.terms.items():
                g = gp * gq
                if g.order < order_cut:
                    dropped = True
                    continue
                c = (fp @ fq) * scale
                acc[g] = acc[g] + c if g in acc else c
        dp, dq = dp.xi_derivative(), dq.x_derivative()
    else:
        if not dp.is_zero():
            dropped = True
    rem = None if (exact and not dropped) else order_cut - 1
    for part in (p, q):
        if part.remainder_order is not None:
            rem = part.remainder_order if rem is None else max(rem, part.remainder_order)
    return Symbol(acc, rem)


# ---------------------------------------------------------------------------
# truncated fields

@dataclass(frozen=True, eq=False)
class TruncatedField:
    """C^2-valued trigonometric polynomial with modes ``|k| <= N``.

    ``modes[k + N, c]`` is the amplitude of component ``c`` at mode ``k``.
    """

    modes: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=complex)
        if m.ndim != 2 or m.shape[1] != 2 or m.shape[0] % 2 != 1:
            raise ValueError("field modes must have shape (2N+1, 2)")
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "modes", m)

    @property
    def N(self) -> int:
        return (self.modes.shape[0] - 1) // 2

    @property
    def dim(self) -> int:
        return self.modes.size

    @classmethod
    def zeros(cls, N: int) -> "TruncatedField":
        return cls(np.zeros((2 * N + 1, 2)))

    @classmethod
    def basis(cls, N: int, k: int, component: int) -> "TruncatedField":
        m = np.zeros((2 * N + 1, 2), dtype=complex)
        m[k + N, component] = 1.0
        return cls(m)

    @classmethod
    def from_scalars(cls, N: int, first: PeriodicScalar, second: PeriodicScalar | None = None) -> "TruncatedField":
        """Project two periodic scalars onto modes ``|k| <= N``."""
        second = second if second is not None else PeriodicScalar.zero()
        m = np.zeros((2 * N + 1, 2), dtype=complex)
        for c, f in enumerate((first, second)):
            for k in range(-min(N, f.K), min(N, f.K) + 1):
                m[k + N, c] = f.coeff(k)
        return cls(m)

    @classmethod
    def from_vector(cls, vec, N: int | None = None) -> "TruncatedField":
        vec = np.asarray(vec, dtype=complex)
        return cls(vec.reshape(-1, 2))

    def to_vector(self) -> np.ndarray:
        return np.array(self.modes).reshape(-1)

    def component(self, c: int) -> PeriodicScalar:
        return PeriodicScalar(self.modes[:, c])

    def norm(self) -> float:
        """L^2(T; C^2) norm via Parseval."""
        return float(math.sqrt(TWO_PI * float(np.sum(np.abs(self.modes) ** 2))))

    def imag_defect(self) -> float:
        """Max modulus of ``u_k - conj(u_{-k})``; zero iff the field is real."""
        return float(np.max(np.abs(self.modes - self.modes[::-1].conj()), initial=0.0))

    def is_real(self, tol: float = DEFAULT_TOL) -> bool:
        return self.imag_defect() <= tol

    def values(self, x) -> np.ndarray:
        """Point values, shape ``x.shape + (2,)``."""
        x = np.asarray(x, dtype=float)
        k = np.arange(-self.N, self.N + 1)
        return np.exp(1j * np.multiply.outer(x, k)) @ self.modes


def apply(q: Symbol, u: TruncatedField) -> TruncatedField:
    """Apply ``Op(q)`` to ``u`` and project back onto ``|k| <= N``."""
    N = u.N
    k = np.arange(-N, N + 1)
    out = np.zeros((2 * N + 1, 2), dtype=complex)
    for g, f in q.terms.items():
        v = u.modes * np.asarray(g(k), dtype=float)[:, None]
        for d in range(-f.K, f.K + 1):
            fd = f.mode(d)
            if not np.any(fd):
                continue
            # output mode j receives f_d v_{j-d}
            lo, hi = max(-N, -N + d), min(N, N + d)
            if lo > hi:
                continue
            out[lo + N: hi + N + 1] += v[lo - d + N: hi - d + N + 1] @ fd.T
    return TruncatedField(out)


def multiplier(l: int, r: float, v: TruncatedField, imaginary: bool = True,
               tol: float = DEFAULT_TOL) -> TruncatedField:
    """Fourier multiplier ``phi_r(xi) / (i xi)**l`` (or ``/ xi**l``) on a real field.

    Raises :class:`NonRealInput` when ``v`` is not real-valued to ``tol``.
    """
    if not v.is_real(tol):
        raise NonRealInput(f"input field is not real (defect {v.imag_defect():.3g})")
    k = np.arange(-v.N, v.N + 1)
    phi = cutoff(r, k)
    base = 1j * k if imaginary else k.astype(complex)
    mult = np.zeros(k.shape, dtype=complex)
    nz = phi != 0
    mult[nz] = phi[nz] / base[nz] ** l
    return TruncatedField(v.modes * mult[:, None])


def multiplier_symbol(l: int, r: float, imaginary: bool = True) -> Symbol:
    """Symbol of ``phi_r(xi) / (i xi)**l`` (or ``/ xi**l``) times the identity."""
    scale = (1j) ** (-l) if imaginary else 1.0
    return Symbol.term(I2, cutoff_power(l, r), scale)


# ---------------------------------------------------------------------------
# Galerkin matrices

@dataclass(frozen=True, eq=False)
class GalerkinMatrix:
    """Dense matrix of an operator on the modes ``|k| <= N`` (mode-major)."""

    N: int
    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        n = 2 * (2 * self.N + 1)
        if d.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix for N={self.N}, got {d.shape}")
        object.__setattr__(self, "data", d)

    @classmethod
    def identity(cls, N: int) -> "GalerkinMatrix":
        return cls(N, np.eye(2 * (2 * N + 1), dtype=complex))

    @property
    def blocks(self) -> np.ndarray:
        """View with shape ``(2N+1, 2, 2N+1, 2)``: ``[j, a, k, b]``."""
        n = 2 * self.N + 1
        return self.data.reshape(n, 2, n, 2)

    def block(self, j: int, k: int) -> np.ndarray:
        return self.blocks[j + self.N, :, k + self.N, :]

    def __matmul__(self, other):
        if isinstance(other, GalerkinMatrix):
            return GalerkinMatrix(self.N, self.data @ other.data)
        if isinstance(other, TruncatedField):
            return TruncatedField.from_vector(self.data @ other.to_vector())
        return self.data @ other

    def __add__(self, other: "GalerkinMatrix") -> "GalerkinMatrix":
        return GalerkinMatrix(self.N, self.data + other.data)

    def __sub__(self, other: "GalerkinMatrix") -> "GalerkinMatrix":
        return GalerkinMatrix(self.N, self.data - other.data)

    def __mul__(self, s) -> "GalerkinMatrix":
        return GalerkinMatrix(self.N, self.data * s)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.data, 2)) if self.data.size else 0.0

    def compress(self, n: int) -> "GalerkinMatrix":
        """Restriction to the inner modes ``|k| <= n``."""
        if n > self.N:
            raise ValueError("cannot compress to a larger mode range")
        lo, hi = self.N - n, self.N + n + 1
        b = self.blocks[lo:hi, :, lo:hi, :]
        return GalerkinMatrix(n, b.reshape(2 * (2 * n + 1), -1))

    def component_split(self) -> tuple["GalerkinMatrix", "GalerkinMatrix"]:
        """``(same-component part, cross-component part)``."""
        b = self.blocks
        same = np.zeros_like(b)
        cross = np.zeros_like(b)
        for a in range(2):
            same[:, a, :, a] = b[:, a, :, a]
            cross[:, a, :, 1 - a] = b[:, a, :, 1 - a]
        n = self.data.shape[0]
        return GalerkinMatrix(self.N, same.reshape(n, n)), GalerkinMatrix(self.N, cross.reshape(n, n))

    def hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.data + self.data.conj().T)

    def dump(self, path) -> None:
        """Write a text dump: one header line, then rows of ``re im`` pairs (row-major)."""
        n = self.data.shape[0]
        with open(path, "w") as fh:
            fh.write(f"# galerkin N={self.N} rows={n} cols={n} layout=mode-major order=row-major format=re,im\n")
            for row in self.data:
                fh.write(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))
                fh.write("\n")

    @classmethod
    def load(cls, path) -> "GalerkinMatrix":
        with open(path) as fh:
            header = fh.readline()
            fields = dict(tok.split("=", 1) for tok in header[1:].split() if "=" in tok)
            raw = np.loadtxt(fh, ndmin=2)
        data = raw[:, 0::2] + 1j * raw[:, 1::2]
        return cls(int(fields["N"]), data)


def galerkin_matrix(q: Symbol, N: int) -> GalerkinMatrix:
    """Block ``(j, k)`` equals ``sum_terms fhat_{j-k} g(k)``."""
    n = 2 * N + 1
    k = np.arange(-N, N + 1)
    diff = k[:, None] - k[None, :]
    out = np.zeros((n, n, 2, 2), dtype=complex)
    for g, f in q.terms.items():
        gk = np.asarray(g(k), dtype=float)
        K = f.K
        mask = np.abs(diff) <= K
        idx = np.clip(diff + K, 0, 2 * K)
        fhat = np.moveaxis(f.data, 2, 0)[idx]  # (n, n, 2, 2)
        out += np.where(mask[:, :, None, None], fhat, 0) * gk[None, :, None, None]
    return GalerkinMatrix(N, out.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n))


def operator_norm_estimate(q: Symbol, N: int) -> float:
    """Largest singular value of the Galerkin matrix of ``q``."""
    if q.is_zero():
        return 0.0
    return galerkin_matrix(q, N).norm()


def neumann_inverse(perturbation: GalerkinMatrix, bound: float = 0.5) -> GalerkinMatrix:
    """``(I + perturbation)^{-1}``, certified by ``||perturbation|| < bound``.

    The geometric series justifies invertibility; the inverse itself is a
    dense solve.
    """
    nrm = perturbation.norm()
    if nrm >= bound:
        raise NotDiagonallyDominant(nrm, bound)
    eye = np.eye(perturbation.data.shape[0], dtype=complex)
    return GalerkinMatrix(perturbation.N, np.linalg.solve(eye + perturbation.data, eye))
