"""Complex banded matrices in row-major band storage and their LU factorization.

Row ``i`` of a matrix with ``kl`` sub- and ``ku`` super-diagonals is stored
as ``band[i, j - i + kl] = A[i, j]`` for ``i - kl <= j <= i + ku``.  The LU
factorization keeps ``kl`` extra columns per row for pivoting fill, so the
upper factor has bandwidth ``kl + ku``.  As in LAPACK ``gbtrf``, the row
interchanges are applied to the trailing submatrix only and the multipliers
of ``L`` stay where they were computed; :meth:`BandedLU.solve` replays the
interchanges step by step.
"""
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import NumericalFailureError


@dataclass(frozen=True)
class BandedMatrix:
    band: np.ndarray  # shape (n, kl + ku + 1)
    kl: int
    ku: int

    @property
    def n(self):
        return self.band.shape[0]

    @property
    def shape(self):
        return (self.n, self.n)

    @classmethod
    def from_dense(cls, A, kl, ku):
        A = np.asarray(A)
        n = A.shape[0]
        band = np.zeros((n, kl + ku + 1), dtype=np.result_type(A.dtype, np.complex128))
        for c in range(kl + ku + 1):
            off = c - kl
            i = np.arange(max(0, -off), min(n, n - off))
            band[i, c] = A[i, i + off]
        return cls(band, kl, ku)

    def to_dense(self):
        n, kl, ku = self.n, self.kl, self.ku
        A = np.zeros((n, n), dtype=self.band.dtype)
        for c in range(kl + ku + 1):
            off = c - kl
            i = np.arange(max(0, -off), min(n, n - off))
            A[i, i + off] = self.band[i, c]
        return A

    def matvec(self, x):
        x = np.asarray(x, dtype=np.complex128)
        if _backend.use_numba():
            return _matvec_numba(self.band, self.kl, x)
        return _matvec_numpy(self.band, self.kl, x)

    def __matmul__(self, x):
        return self.matvec(x)

    def norm_inf(self):
        return float(np.max(np.sum(np.abs(self.band), axis=1)))

    def shifted(self, sigma):
        band = self.band.astype(np.complex128, copy=True)
        band[:, self.kl] -= sigma
        return BandedMatrix(band, self.kl, self.ku)


def _matvec_numpy(band, kl, x):
    n, width = band.shape
    y = np.zeros(x.shape, dtype=np.complex128)
    for c in range(width):
        off = c - kl
        lo, hi = max(0, -off), min(n, n - off)
        if hi > lo:
            if x.ndim == 1:
                y[lo:hi] += band[lo:hi, c] * x[lo + off:hi + off]
            else:
                y[lo:hi] += band[lo:hi, c, None] * x[lo + off:hi + off]
    return y


@_backend.njit
def _matvec_loops(band, kl, x, y):
    n, width = band.shape
    for i in range(n):
        jlo = max(0, kl - i)
        jhi = min(width, n - i + kl)
        for c in range(jlo, jhi):
            y[i] += band[i, c] * x[i - kl + c]


def _matvec_numba(band, kl, x):
    band = np.ascontiguousarray(band, dtype=np.complex128)
    if x.ndim == 1:
        y = np.zeros(x.shape, dtype=np.complex128)
        _matvec_loops(band, kl, np.ascontiguousarray(x), y)
        return y
    out = np.empty(x.shape, dtype=np.complex128)
    for k in range(x.shape[1]):
        y = np.zeros(x.shape[0], dtype=np.complex128)
        _matvec_loops(band, kl, np.ascontiguousarray(x[:, k]), y)
        out[:, k] = y
    return out


@dataclass(frozen=True)
class BandedLU:
    lu: np.ndarray  # shape (n, 2*kl + ku + 1)
    piv: np.ndarray
    kl: int
    ku: int

    @property
    def n(self):
        return self.lu.shape[0]

    def solve(self, b):
        b = np.array(b, dtype=np.complex128, copy=True)
        if b.shape[0] != self.n:
            raise ValueError("right-hand side has wrong length")
        squeeze = b.ndim == 1
        if squeeze:
            b = b[:, None]
        if _backend.use_numba():
            _solve_loops(self.lu, self.piv, self.kl, self.ku, b)
        else:
            _solve_numpy(self.lu, self.piv, self.kl, self.ku, b)
        return b[:, 0] if squeeze else b

    def upper_dense(self):
        n, kl, ku = self.n, self.kl, self.ku
        U = np.zeros((n, n), dtype=np.complex128)
        for i in range(n):
            for j in range(i, min(n, i + kl + ku + 1)):
                U[i, j] = self.lu[i, j - i + kl]
        return U

    def reconstruct(self):
        """Dense ``P L U`` product; used to validate the factorization."""
        n, kl = self.n, self.kl
        A = self.upper_dense()
        for k in range(n - 1, -1, -1):
            rows = np.arange(k + 1, min(n, k + kl + 1))
            if rows.size:
                mult = self.lu[rows, k - rows + kl]
                A[rows] += mult[:, None] * A[k][None, :]
            r = self.piv[k]
            if r != k:
                A[[k, r]] = A[[r, k]]
        return A


def lu_factor(matrix):
    """Banded LU with partial pivoting restricted to the band.

    Raises :class:`NumericalFailureError` on an exactly zero pivot.
    """
    n, kl, ku = matrix.n, matrix.kl, matrix.ku
    width = 2 * kl + ku + 1
    ab = np.zeros((n, width), dtype=np.complex128)
    ab[:, : kl + ku + 1] = matrix.band
    piv = np.zeros(n, dtype=np.int64)
    if _backend.use_numba():
        info = _factor_loops(ab, piv, kl, ku)
    else:
        info = _factor_numpy(ab, piv, kl, ku)
    if info > 0:
        raise NumericalFailureError(f"zero pivot in banded LU at row {info - 1}")
    return BandedLU(ab, piv, kl, ku)


@_backend.njit
def _factor_loops(ab, piv, kl, ku):
    n = ab.shape[0]
    for k in range(n):
        ilast = min(n - 1, k + kl)
        r = k
        best = abs(ab[k, kl])
        for i in range(k + 1, ilast + 1):
            v = abs(ab[i, k - i + kl])
            if v > best:
                best = v
                r = i
        piv[k] = r
        if best == 0.0:
            return k + 1
        jlast = min(n - 1, k + kl + ku)
        if r != k:
            for j in range(k, jlast + 1):
                tmp = ab[k, j - k + kl]
                ab[k, j - k + kl] = ab[r, j - r + kl]
                ab[r, j - r + kl] = tmp
        pivot = ab[k, kl]
        for i in range(k + 1, ilast + 1):
            mult = ab[i, k - i + kl] / pivot
            ab[i, k - i + kl] = mult
            if mult != 0:
                for j in range(k + 1, jlast + 1):
                    ab[i, j - i + kl] -= mult * ab[k, j - k + kl]
    return 0


def _factor_numpy(ab, piv, kl, ku):
    n = ab.shape[0]
    for k in range(n):
        m = min(kl + 1, n - k)
        c = min(kl + ku + 1, n - k)
        rows = k + np.arange(m)
        offs = (k + np.arange(c))[None, :] - rows[:, None] + kl
        S = ab[rows[:, None], offs]
        p = int(np.argmax(np.abs(S[:, 0])))
        piv[k] = k + p
        if S[p, 0] == 0:
            return k + 1
        if p:
            S[[0, p]] = S[[p, 0]]
        mult = S[1:, 0] / S[0, 0]
        S[1:, 1:] -= mult[:, None] * S[0, 1:][None, :]
        S[1:, 0] = mult
        ab[rows[:, None], offs] = S
    return 0


@_backend.njit
def _solve_loops(ab, piv, kl, ku, b):
    n = ab.shape[0]
    nrhs = b.shape[1]
    for k in range(n):
        r = piv[k]
        if r != k:
            for q in range(nrhs):
                tmp = b[k, q]
                b[k, q] = b[r, q]
                b[r, q] = tmp
        for i in range(k + 1, min(n, k + kl + 1)):
            mult = ab[i, k - i + kl]
            if mult != 0:
                for q in range(nrhs):
                    b[i, q] -= mult * b[k, q]
    for i in range(n - 1, -1, -1):
        for q in range(nrhs):
            s = b[i, q]
            for j in range(i + 1, min(n, i + kl + ku + 1)):
                s -= ab[i, j - i + kl] * b[j, q]
            b[i, q] = s / ab[i, kl]


def _solve_numpy(ab, piv, kl, ku, b):
    n = ab.shape[0]
    for k in range(n):
        r = piv[k]
        if r != k:
            b[[k, r]] = b[[r, k]]
        hi = min(n, k + kl + 1)
        if hi > k + 1:
            rows = np.arange(k + 1, hi)
            b[k + 1:hi] -= ab[rows, k - rows + kl][:, None] * b[k][None, :]
    w = kl + ku
    for i in range(n - 1, -1, -1):
        hi = min(n, i + w + 1)
        s = b[i] - ab[i, kl + 1:kl + 1 + hi - i - 1] @ b[i + 1:hi]
        b[i] = s / ab[i, kl]
