"""Finite Fourier series on the torus R/2piZ.

Scalars are stored as dense coefficient vectors over modes ``-K..K`` and
2x2 matrix functions as arrays of shape ``(2, 2, 2K+1)``.  All arithmetic is
exact on the coefficients (products are full convolutions, nothing is
truncated), so integrals over a period are exact reads of the zero mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

#: absolute tolerance on coefficient magnitudes for mean-zero / realness tests
DEFAULT_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
E2 = np.array([[1, 0], [0, -1]], dtype=complex)
J2 = np.array([[0, -1], [1, 0]], dtype=complex)
M2 = np.array([[1, 1j], [1, -1j]], dtype=complex)
M2_INV = 0.5 * np.array([[1, 1], [-1j, 1j]], dtype=complex)


class MeanNonzero(ValueError):
    """Raised when a primitive is requested for a function with nonzero mean."""

    def __init__(self, mean: complex, message: str | None = None):
        self.mean = mean
        super().__init__(message or f"function has nonzero mean {mean!r}; primitive is not periodic")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


def _pad_last(arr: np.ndarray, K: int) -> np.ndarray:
    k0 = (arr.shape[-1] - 1) // 2
    if k0 == K:
        return arr
    pad = [(0, 0)] * (arr.ndim - 1) + [(K - k0, K - k0)]
    return np.pad(arr, pad)


def _modes(K: int) -> np.ndarray:
    return np.arange(-K, K + 1)


@dataclass(frozen=True, eq=False)
class PeriodicScalar:
    """Complex 2pi-periodic function ``sum_k c_k exp(ikx)`` with ``|k| <= K``."""

    # let numpy arrays defer to our operators
    __array_ufunc__ = None

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size % 2 != 1:
            raise ValueError("coefficient vector must be 1-D with odd length 2K+1")
        object.__setattr__(self, "coeffs", _frozen(c))

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls) -> "PeriodicScalar":
        return cls(np.zeros(1))

    @classmethod
    def constant(cls, value: complex) -> "PeriodicScalar":
        return cls(np.array([value]))

    @classmethod
    def from_modes(cls, modes: Mapping[int, complex]) -> "PeriodicScalar":
        """Build from a ``{k: c_k}`` mapping."""
        if not modes:
            return cls.zero()
        K = max(abs(int(k)) for k in modes)
        c = np.zeros(2 * K + 1, dtype=complex)
        for k, v in modes.items():
            c[int(k) + K] += v
        return cls(c)

    @classmethod
    def cos(cls, k: int = 1, amplitude: float = 1.0) -> "PeriodicScalar":
        return cls.from_modes({k: amplitude / 2, -k: amplitude / 2})

    @classmethod
    def sin(cls, k: int = 1, amplitude: float = 1.0) -> "PeriodicScalar":
        return cls.from_modes({k: amplitude / 2j, -k: -amplitude / 2j})

    @classmethod
    def from_samples(cls, samples: Sequence[complex], bandwidth: int) -> "PeriodicScalar":
        """Approximate series from equispaced samples on ``[0, 2pi)``.

        The samples are read at ``2*bandwidth + 1`` points (resampled by FFT
        if a different count is given); this path is approximate for
        functions that are not band-limited.
        """
        s = np.asarray(samples, dtype=complex)
        n = 2 * bandwidth + 1
        spec = np.fft.fft(s) / s.size
        k = np.fft.fftfreq(s.size, d=1.0 / s.size).round().astype(int)
        c = np.zeros(n, dtype=complex)
        keep = np.abs(k) <= bandwidth
        np.add.at(c, k[keep] + bandwidth, spec[keep])
        return cls(c)

    @classmethod
    def from_function(cls, func, bandwidth: int) -> "PeriodicScalar":
        n = 2 * bandwidth + 1
        x = TWO_PI * np.arange(n) / n
        return cls.from_samples(func(x), bandwidth)

    # basic properties -------------------------------------------------
    @property
    def K(self) -> int:
        return (self.coeffs.size - 1) // 2

    def coeff(self, k: int) -> complex:
        k = int(k)
        if abs(k) > self.K:
            return 0j
        return complex(self.coeffs[k + self.K])

    def padded(self, K: int) -> np.ndarray:
        if K < self.K:
            raise ValueError("cannot pad to a smaller bandwidth")
        return _pad_last(self.coeffs, K)

    def trim(self, tol: float = 0.0) -> "PeriodicScalar":
        """Drop outer modes whose magnitudes are ``<= tol``."""
        c = self.coeffs
        K = self.K
        while K > 0 and abs(c[0]) <= tol and abs(c[-1]) <= tol:
            c = c[1:-1]
            K -= 1
        return PeriodicScalar(c)

    def sup_bound(self) -> float:
        """Upper bound on ``sup |f|`` (sum of coefficient magnitudes)."""
        return float(np.abs(self.coeffs).sum())

    # analysis -----------------------------------------------------------
    def __call__(self, x):
        return evaluate(self, x)

    def is_real(self, tol: float = DEFAULT_TOL) -> bool:
        return bool(np.all(np.abs(self.coeffs - self.coeffs[::-1].conj()) <= tol))

    def is_zero(self, tol: float = DEFAULT_TOL) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def mean(self) -> complex:
        return complex(self.coeffs[self.K])

    def conj(self) -> "PeriodicScalar":
        return PeriodicScalar(self.coeffs[::-1].conj())

    def real_part(self) -> "PeriodicScalar":
        return (self + self.conj()) * 0.5

    def allclose(self, other, atol: float = DEFAULT_TOL) -> bool:
        other = as_scalar(other)
        K = max(self.K, other.K)
        return bool(np.allclose(self.padded(K), other.padded(K), rtol=0, atol=atol))

    def derivative(self, order: int = 1) -> "PeriodicScalar":
        return derivative(self, order)

    def primitive(self, tol: float = DEFAULT_TOL) -> "PeriodicScalar":
        return primitive(self, tol)

    def mean_integral(self) -> complex:
        return mean_integral(self)

    def shift(self, s: float) -> "PeriodicScalar":
        """Return ``x -> f(x + s)``."""
        return PeriodicScalar(self.coeffs * np.exp(1j * _modes(self.K) * s))

    def modulate(self, m: int) -> "PeriodicScalar":
        """Return ``exp(imx) f(x)`` (exact mode shift)."""
        m = int(m)
        K = self.K + abs(m)
        c = np.zeros(2 * K + 1, dtype=complex)
        c[K - self.K + m: K + self.K + m + 1] = self.coeffs
        return PeriodicScalar(c)

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = as_scalar(other)
        K = max(self.K, other.K)
        return PeriodicScalar(self.padded(K) + other.padded(K))

    __radd__ = __add__

    def __neg__(self):
        return PeriodicScalar(-self.coeffs)

    def __sub__(self, other):
        return self + (-as_scalar(other))

    def __rsub__(self, other):
        return as_scalar(other) - self

    def __mul__(self, other):
        if isinstance(other, PeriodicScalar):
            return product(self, other)
        if isinstance(other, MatrixCoefficient):
            return other * self
        return PeriodicScalar(self.coeffs * complex(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return PeriodicScalar(self.coeffs / complex(other))

    def __pow__(self, n: int):
        out = PeriodicScalar.constant(1.0)
        for _ in range(int(n)):
            out = out * self
        return out

    def __repr__(self) -> str:
        nz = {k: self.coeff(k) for k in range(-self.K, self.K + 1) if self.coeff(k) != 0}
        return f"PeriodicScalar({nz})"

    # serialization ----------------------------------------------------
    def to_triples(self, tol: float = 0.0) -> list[list[float]]:
        """List of ``[k, re, im]`` for stored modes with magnitude above ``tol``."""
        out = []
        for k in range(-self.K, self.K + 1):
            c = self.coeff(k)
            if abs(c) > tol:
                out.append([k, c.real, c.imag])
        return out

    @classmethod
    def from_triples(cls, triples: Iterable[Sequence[float]]) -> "PeriodicScalar":
        modes: dict[int, complex] = {}
        for item in triples:
            if len(item) != 3:
                raise ValueError(f"coefficient entry must be [k, re, im], got {item!r}")
            k, re, im = item
            if int(k) != k:
                raise ValueError(f"mode index must be an integer, got {k!r}")
            modes[int(k)] = modes.get(int(k), 0j) + complex(float(re), float(im))
        return cls.from_modes(modes)


def as_scalar(value) -> PeriodicScalar:
    if isinstance(value, PeriodicScalar):
        return value
    return PeriodicScalar.constant(complex(value))


def evaluate(f: PeriodicScalar, x):
    """Point values ``sum_k c_k exp(ikx)``; ``x`` may be an array."""
    x = np.asarray(x, dtype=float)
    k = _modes(f.K)
    vals = np.exp(1j * np.multiply.outer(x, k)) @ f.coeffs
    return complex(vals) if vals.ndim == 0 else vals


def derivative(f: PeriodicScalar, order: int = 1) -> PeriodicScalar:
    """d/dx: mode map c_k -> (ik)^order c_k."""
    return PeriodicScalar(f.coeffs * (1j * _modes(f.K)) ** order)


def mean_integral(f: PeriodicScalar) -> complex:
    """Exact integral over one period, ``2 pi c_0``."""
    return TWO_PI * f.mean()


def product(f: PeriodicScalar, g: PeriodicScalar) -> PeriodicScalar:
    return PeriodicScalar(np.convolve(f.coeffs, g.coeffs))


def primitive(f: PeriodicScalar, tol: float = DEFAULT_TOL) -> PeriodicScalar:
    """Periodic antiderivative ``F`` with ``F' = f`` and ``F(0) = 0``."""
    if abs(f.mean()) > tol:
        raise MeanNonzero(f.mean())
    k = _modes(f.K)
    c = np.zeros_like(f.coeffs)
    nz = k != 0
    c[nz] = f.coeffs[nz] / (1j * k[nz])
    c[f.K] = -c.sum()
    return PeriodicScalar(c)


@dataclass(frozen=True, eq=False)
class MatrixCoefficient:
    """2x2 matrix of periodic scalars, stored as ``data[i, j, k + K]``."""

    # let numpy arrays defer to our operators
    __array_ufunc__ = None

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.ndim == 2 and d.shape == (2, 2):
            d = d[:, :, None]
        if d.ndim != 3 or d.shape[:2] != (2, 2) or d.shape[2] % 2 != 1:
            raise ValueError("matrix coefficient data must have shape (2, 2, 2K+1)")
        object.__setattr__(self, "data", _frozen(d))

    @classmethod
    def zero(cls) -> "MatrixCoefficient":
        return cls(np.zeros((2, 2, 1)))

    @classmethod
    def constant(cls, mat) -> "MatrixCoefficient":
        return cls(np.asarray(mat, dtype=complex)[:, :, None])

    @classmethod
    def from_entries(cls, entries) -> "MatrixCoefficient":
        """``entries`` is a nested 2x2 list of scalars / PeriodicScalars."""
        ent = [[as_scalar(entries[i][j]) for j in range(2)] for i in range(2)]
        K = max(e.K for row in ent for e in row)
        return cls(np.array([[e.padded(K) for e in row] for row in ent]))

    @classmethod
    def scalar_times(cls, f: PeriodicScalar, mat) -> "MatrixCoefficient":
        """``f(x) * mat`` for a constant 2x2 matrix."""
        mat = np.asarray(mat, dtype=complex)
        return cls(mat[:, :, None] * f.coeffs[None, None, :])

    @property
    def K(self) -> int:
        return (self.data.shape[2] - 1) // 2

    def entry(self, i: int, j: int) -> PeriodicScalar:
        return PeriodicScalar(self.data[i, j])

    def __getitem__(self, ij) -> PeriodicScalar:
        return self.entry(*ij)

    def padded(self, K: int) -> np.ndarray:
        return _pad_last(self.data, K)

    def trim(self, tol: float = 0.0) -> "MatrixCoefficient":
        d = self.data
        while d.shape[2] > 1 and np.all(np.abs(d[:, :, 0]) <= tol) and np.all(np.abs(d[:, :, -1]) <= tol):
            d = d[:, :, 1:-1]
        return MatrixCoefficient(d)

    def sup_bound(self) -> float:
        """Upper bound on the sup over x of the Frobenius norm."""
        return float(np.sqrt((np.abs(self.data).sum(axis=2) ** 2).sum()))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * np.multiply.outer(x, _modes(self.K)))
        return np.einsum("...k,ijk->...ij", phase, self.data)

    def mode(self, k: int) -> np.ndarray:
        if abs(k) > self.K:
            return np.zeros((2, 2), dtype=complex)
        return np.array(self.data[:, :, k + self.K])

    # structure ----------------------------------------------------------
    def diag(self) -> "MatrixCoefficient":
        d = np.array(self.data)
        d[0, 1] = 0
        d[1, 0] = 0
        return MatrixCoefficient(d)

    def off(self) -> "MatrixCoefficient":
        d = np.array(self.data)
        d[0, 0] = 0
        d[1, 1] = 0
        return MatrixCoefficient(d)

    @property
    def T(self) -> "MatrixCoefficient":
        return MatrixCoefficient(self.data.transpose(1, 0, 2))

    def trace(self) -> PeriodicScalar:
        return PeriodicScalar(self.data[0, 0] + self.data[1, 1])

    def conj(self) -> "MatrixCoefficient":
        return MatrixCoefficient(self.data[:, :, ::-1].conj())

    def derivative(self, order: int = 1) -> "MatrixCoefficient":
        return MatrixCoefficient(self.data * (1j * _modes(self.K)) ** order)

    def commutator(self, other) -> "MatrixCoefficient":
        """``self @ other - other @ self``."""
        return (self @ other) - (as_matrix(other) @ self)

    def is_real(self, tol: float = DEFAULT_TOL) -> bool:
        return bool(np.all(np.abs(self.data - self.data[:, :, ::-1].conj()) <= tol))

    def is_zero(self, tol: float = DEFAULT_TOL) -> bool:
        return bool(np.all(np.abs(self.data) <= tol))

    def allclose(self, other, atol: float = DEFAULT_TOL) -> bool:
        other = as_matrix(other)
        K = max(self.K, other.K)
        return bool(np.allclose(self.padded(K), other.padded(K), rtol=0, atol=atol))

    def mean_integral(self) -> np.ndarray:
        return TWO_PI * np.array(self.data[:, :, self.K])

    def modulate(self, m: int) -> "MatrixCoefficient":
        return MatrixCoefficient.from_entries(
            [[self.entry(i, j).modulate(m) for j in range(2)] for i in range(2)])

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = as_matrix(other)
        K = max(self.K, other.K)
        return MatrixCoefficient(self.padded(K) + other.padded(K))

    __radd__ = __add__

    def __neg__(self):
        return MatrixCoefficient(-self.data)

    def __sub__(self, other):
        return self + (-as_matrix(other))

    def __rsub__(self, other):
        return as_matrix(other) - self

    def __mul__(self, other):
        if isinstance(other, PeriodicScalar):
            d = np.array([[np.convolve(self.data[i, j], other.coeffs) for j in range(2)] for i in range(2)])
            return MatrixCoefficient(d)
        if isinstance(other, MatrixCoefficient):
            raise TypeError("use @ for matrix products")
        return MatrixCoefficient(self.data * complex(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return MatrixCoefficient(self.data / complex(other))

    def __matmul__(self, other):
        other = as_matrix(other)
        n = self.data.shape[2] + other.data.shape[2] - 1
        out = np.zeros((2, 2, n), dtype=complex)
        for i in range(2):
            for j in range(2):
                for l in range(2):
                    out[i, j] += np.convolve(self.data[i, l], other.data[l, j])
        return MatrixCoefficient(out)

    def __rmatmul__(self, other):
        return as_matrix(other) @ self

    def __repr__(self) -> str:
        return f"MatrixCoefficient(K={self.K})"

    # serialization ----------------------------------------------------
    def to_dict(self, tol: float = 0.0) -> dict[str, list[list[float]]]:
        return {f"m{i + 1}{j + 1}": self.entry(i, j).to_triples(tol) for i in range(2) for j in range(2)}

    @classmethod
    def from_dict(cls, block: Mapping[str, Iterable]) -> "MatrixCoefficient":
        unknown = set(block) - {"m11", "m12", "m21", "m22"}
        if unknown:
            raise ValueError(f"unknown matrix entries {sorted(unknown)}; expected m11, m12, m21, m22")
        ent = [[PeriodicScalar.from_triples(block.get(f"m{i + 1}{j + 1}", [])) for j in range(2)]
               for i in range(2)]
        return cls.from_entries(ent)


def as_matrix(value) -> MatrixCoefficient:
    if isinstance(value, MatrixCoefficient):
        return value
    if isinstance(value, PeriodicScalar):
        return MatrixCoefficient.scalar_times(value, I2)
    arr = np.asarray(value, dtype=complex)
    if arr.shape == (2, 2):
        return MatrixCoefficient.constant(arr)
    if arr.ndim == 0:
        return MatrixCoefficient.constant(complex(arr) * I2)
    raise TypeError(f"cannot interpret {type(value).__name__} as a 2x2 matrix coefficient")


def trace(m: MatrixCoefficient) -> PeriodicScalar:
    return m.trace()


def transpose(m: MatrixCoefficient) -> MatrixCoefficient:
    return m.T


def commutator(m: MatrixCoefficient, c) -> MatrixCoefficient:
    return m.commutator(c)


def rotation(s: float) -> np.ndarray:
    """Plane rotation ``P(s)``."""
    return np.array([[math.cos(s), -math.sin(s)], [math.sin(s), math.cos(s)]], dtype=complex)
