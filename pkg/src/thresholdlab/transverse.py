"""Transverse eigenpairs (thresholds) for the supported cross-sections.

Three geometries are available: the Dirichlet interval (0, pi), the harmonic
trap on the real line, and user-supplied ("manufactured") tabulated modes.
Mode indices are 1-based throughout, so the trap's ground state is mode 1
with eigenvalue 1.
"""
import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidArgumentError, OrthonormalityError
from .quadrature import gauss_legendre, panel_edges, panel_rule

GRAM_TOL = 1e-8


class ModeKind(enum.Enum):
    STRIP_SINE = "StripSine"
    HERMITE_GAUSS = "HermiteGauss"
    TABULATED = "Tabulated"


class Geometry(enum.Enum):
    INTERVAL_0_PI = "Interval0Pi"
    REAL_LINE_TRAP = "RealLineTrap"
    MANUFACTURED = "Manufactured"


@dataclass(frozen=True)
class TransverseMode:
    index: int
    eigenvalue: float
    eigenfunction: Callable[[np.ndarray], np.ndarray]
    kind: ModeKind

    def __call__(self, x):
        return self.eigenfunction(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ThresholdGroup:
    start: int  # p, 1-based
    multiplicity: int  # n
    value: float

    @property
    def is_bottom(self):
        return self.start == 1

    @property
    def indices(self):
        return tuple(range(self.start, self.start + self.multiplicity))


def hermite_polynomial(n, t):
    """Physicists' Hermite polynomial by the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    h_prev = np.zeros_like(t)
    h = np.ones_like(t)
    for k in range(n):
        h_prev, h = h, 2.0 * t * h - 2.0 * k * h_prev
    return h


def _oscillator_table(count, x):
    # rows are psi_0..psi_{count-1}; normalized recurrence avoids 2^p p! overflow
    x = np.asarray(x, dtype=float)
    out = np.zeros((count,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if count > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, count - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


@dataclass(frozen=True)
class TransverseSpectrum:
    modes: tuple
    geometry: Geometry
    _splines: tuple = field(default=(), repr=False, compare=False)
    _grid: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def m(self):
        return len(self.modes)

    @property
    def eigenvalues(self):
        return np.array([md.eigenvalue for md in self.modes])

    @property
    def unbounded(self):
        """True when modes exist beyond index ``m`` (closed-form geometries)."""
        return self.geometry is not Geometry.MANUFACTURED

    def eigenvalue(self, j):
        """Eigenvalue of mode ``j`` (1-based), also beyond ``m`` when available."""
        if self.geometry is Geometry.INTERVAL_0_PI:
            return float(j * j)
        if self.geometry is Geometry.REAL_LINE_TRAP:
            return float(2 * j - 1)
        if not 1 <= j <= self.m:
            raise InvalidArgumentError(f"manufactured spectrum has no mode {j}")
        return self.modes[j - 1].eigenvalue

    def max_modes(self):
        return None if self.unbounded else self.m

    def values(self, count, x):
        """Table of modes ``1..count`` at points ``x``, shape (count, len(x))."""
        x = np.asarray(x, dtype=float)
        if self.geometry is Geometry.INTERVAL_0_PI:
            j = np.arange(1, count + 1)[:, None]
            inside = (x >= 0.0) & (x <= np.pi)
            return np.sqrt(2.0 / np.pi) * np.sin(j * x[None, :]) * inside
        if self.geometry is Geometry.REAL_LINE_TRAP:
            return _oscillator_table(count, x)
        if count > self.m:
            raise InvalidArgumentError(f"manufactured spectrum has only {self.m} modes")
        lo, hi = self._grid[0], self._grid[-1]
        inside = (x >= lo) & (x <= hi)
        return np.array([s(x) * inside for s in self._splines[:count]])

    def domain(self, count=None):
        """Finite transverse interval carrying the first ``count`` modes."""
        if self.geometry is Geometry.INTERVAL_0_PI:
            return 0.0, np.pi
        if self.geometry is Geometry.REAL_LINE_TRAP:
            count = self.m if count is None else count
            half = np.sqrt(2.0 * count + 1.0) + 9.0
            return -half, half
        return float(self._grid[0]), float(self._grid[-1])

    def breakpoints(self):
        """Interior points where the modes are not smooth (spline knots)."""
        if self.geometry is Geometry.MANUFACTURED:
            return tuple(self._grid[1:-1])
        return ()

    def quadrature(self, count=None, order=32, extra_breaks=()):
        """Transverse rule resolving modes ``1..count`` and the given breaks."""
        count = self.m if count is None else count
        lo, hi = self.domain(count)
        freq = np.sqrt(max(self.eigenvalue(min(count, self.m) if not self.unbounded else count), 1.0))
        max_len = min(1.0, 0.25 * order / (freq + 4.0))
        brk = tuple(self.breakpoints()) + tuple(extra_breaks)
        if self.geometry is Geometry.MANUFACTURED:
            max_len = None
        return panel_rule(panel_edges(lo, hi, brk, max_len), order)

    def gram(self):
        """Gram matrix of the modes under the reference quadrature."""
        if self.geometry is Geometry.REAL_LINE_TRAP:
            nodes, w = np.polynomial.hermite.hermgauss(self.m + 20)
            vals = self.values(self.m, nodes) * np.exp(0.5 * nodes * nodes)
            return (vals * w) @ vals.T
        if self.geometry is Geometry.MANUFACTURED:
            return _spline_gram(self._splines, self._grid)
        nodes, w = self.quadrature(self.m)
        vals = self.values(self.m, nodes)
        return (vals * w) @ vals.T


def build_strip_spectrum(m):
    """Dirichlet modes of (0, pi): eigenvalue ``j**2``, ``sqrt(2/pi) sin(j x)``."""
    if int(m) != m or m < 1:
        raise InvalidArgumentError("m must be a positive integer")
    modes = []
    for j in range(1, int(m) + 1):
        def f(x, j=j):
            return np.sqrt(2.0 / np.pi) * np.sin(j * x) * ((x >= 0) & (x <= np.pi))

        modes.append(TransverseMode(j, float(j * j), f, ModeKind.STRIP_SINE))
    return TransverseSpectrum(tuple(modes), Geometry.INTERVAL_0_PI)


def build_oscillator_spectrum(m):
    """Hermite functions of ``-d^2/dx^2 + x^2``; mode ``j`` has eigenvalue ``2j - 1``."""
    if int(m) != m or m < 1:
        raise InvalidArgumentError("m must be a positive integer")
    modes = []
    for j in range(1, int(m) + 1):
        def f(x, j=j):
            return _oscillator_table(j, x)[j - 1]

        modes.append(TransverseMode(j, float(2 * j - 1), f, ModeKind.HERMITE_GAUSS))
    return TransverseSpectrum(tuple(modes), Geometry.REAL_LINE_TRAP)


def _spline_gram(splines, grid):
    # piecewise-cubic products are degree 6; a 4-point rule per interval is exact
    x, w = gauss_legendre(4)
    lo, hi = grid[:-1, None], grid[1:, None]
    nodes = (lo + 0.5 * (hi - lo) * (x + 1)).ravel()
    weights = (0.5 * (hi - lo) * w).ravel()
    vals = np.array([s(nodes) for s in splines])
    return (vals * weights) @ vals.T


def build_manufactured_spectrum(eigenvalues: Sequence[float], grid, samples, tol=GRAM_TOL):
    """Tabulated modes interpolated by natural cubic splines.

    Parameters
    ----------
    eigenvalues : sequence of float
        Transverse eigenvalue of each mode, non-decreasing.
    grid : array, shape (N,)
        Common sample abscissae, strictly increasing.
    samples : array, shape (m, N)
        Mode values; the Gram matrix of the interpolants must be the
        identity within ``tol``.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    grid = np.asarray(grid, dtype=float)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if lam.ndim != 1 or len(lam) < 1 or samples.shape != (len(lam), len(grid)):
        raise InvalidArgumentError("need one sample row of grid length per eigenvalue")
    if len(grid) < 4 or np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("grid must be strictly increasing with at least 4 points")
    if not np.all(np.isfinite(lam)) or np.any(np.diff(lam) < 0):
        raise InvalidArgumentError("eigenvalues must be finite and non-decreasing")
    splines = tuple(CubicSpline(grid, row, bc_type="natural") for row in samples)
    G = _spline_gram(splines, grid)
    dev = np.abs(G - np.eye(len(lam)))
    i, j = np.unravel_index(np.argmax(dev), dev.shape)
    if dev[i, j] > tol * (1 + 1e-6):
        raise OrthonormalityError((int(i) + 1, int(j) + 1), float(G[i, j]), tol)
    modes = []
    for k, (val, spl) in enumerate(zip(lam, splines), start=1):
        def f(x, spl=spl, lo=grid[0], hi=grid[-1]):
            return spl(x) * ((x >= lo) & (x <= hi))

        modes.append(TransverseMode(k, float(val), f, ModeKind.TABULATED))
    grid = grid.copy()
    grid.setflags(write=False)
    return TransverseSpectrum(tuple(modes), Geometry.MANUFACTURED, splines, grid)


def load_mode_table(path):
    """Read a columnar text file: header ``x name1 name2 ...``, then rows.

    Returns ``(grid, samples)`` with one sample row per mode column.
    """
    with open(path) as fh:
        raw = fh.readline()
        header = raw.replace(",", " ").split()
        if not header or header[0] != "x":
            raise InvalidArgumentError(f"{path}: header must start with 'x'")
        data = np.loadtxt(fh, delimiter="," if "," in raw else None, ndmin=2)
    if data.shape[1] != len(header):
        raise InvalidArgumentError(f"{path}: {len(header)} header names but {data.shape[1]} columns")
    return data[:, 0], data[:, 1:].T


def default_group_tol(value):
    return 1e-9 * max(1.0, abs(value))


def group_thresholds(spectrum, tol=None):
    """Partition mode indices into runs of equal eigenvalues.

    ``tol=None`` uses ``1e-9 * max(1, |Lambda|)`` relative to the run start.
    """
    if tol is not None and not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    lam = spectrum.eigenvalues
    groups = []
    start = 0
    for k in range(1, len(lam) + 1):
        t = default_group_tol(lam[start]) if tol is None else tol
        if k == len(lam) or abs(lam[k] - lam[start]) > t:
            groups.append(ThresholdGroup(start + 1, k - start, float(lam[start])))
            start = k
    return groups


def group_containing(spectrum, p, tol=None):
    """The threshold group whose first index is ``p``."""
    for g in group_thresholds(spectrum, tol):
        if g.start == p:
            return g
        if g.start < p < g.start + g.multiplicity:
            raise InvalidArgumentError(
                f"index {p} lies inside the group starting at {g.start}; use p={g.start}"
            )
    raise InvalidArgumentError(f"threshold index {p} outside 1..{spectrum.m}")
