"""Localized complex potentials ``V = V1 + eps V2`` and their support geometry."""
import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError


class PotentialForm(enum.Enum):
    TRIG_SERIES = "TrigSeries"
    GRID_SAMPLED = "GridSampled"
    BOX_CONSTANT = "BoxConstant"


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned rectangle ``[x1_lo, x1_hi] x [x2_lo, x2_hi]``."""

    x1_lo: float
    x1_hi: float
    x2_lo: float
    x2_hi: float

    def contains(self, x1, x2):
        return (x1 >= self.x1_lo) & (x1 <= self.x1_hi) & (x2 >= self.x2_lo) & (x2 <= self.x2_hi)

    def union(self, other):
        return Box(
            min(self.x1_lo, other.x1_lo),
            max(self.x1_hi, other.x1_hi),
            min(self.x2_lo, other.x2_lo),
            max(self.x2_hi, other.x2_hi),
        )

    @property
    def x2_halfwidth(self):
        return max(abs(self.x2_lo), abs(self.x2_hi))

    def as_tuple(self):
        return (self.x1_lo, self.x1_hi, self.x2_lo, self.x2_hi)


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PotentialSpec:
    """One potential in one of three closed forms.

    Use the constructors :meth:`trig_series`, :meth:`box_constant` and
    :meth:`grid_sampled` rather than filling the fields by hand.
    """

    form: PotentialForm
    box: Box
    a: np.ndarray = field(default=None, repr=False)
    b: np.ndarray = field(default=None, repr=False)
    amplitude: complex = 0.0
    x1_grid: np.ndarray = field(default=None, repr=False)
    x2_grid: np.ndarray = field(default=None, repr=False)
    values: np.ndarray = field(default=None, repr=False)

    @classmethod
    def trig_series(cls, a=(), b=(), support_halfwidth=np.pi, x1_range=(0.0, np.pi)):
        """``W1 + i W2`` with ``W1 = -sum a_j sin(j x1) cos(x2/2)``,
        ``W2 = sum b_j sin(j x1) sin(x2)`` on ``|x2| <= support_halfwidth``."""
        if not support_halfwidth > 0:
            raise InvalidArgumentError("support_halfwidth must be positive")
        a = _frozen(a, float)
        b = _frozen(b, float)
        if a.ndim != 1 or b.ndim != 1 or not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidArgumentError("coefficients must be finite 1-D sequences")
        h = float(support_halfwidth)
        return cls(PotentialForm.TRIG_SERIES, Box(float(x1_range[0]), float(x1_range[1]), -h, h), a=a, b=b)

    @classmethod
    def box_constant(cls, amplitude, x1_range, x2_range):
        lo1, hi1 = map(float, x1_range)
        lo2, hi2 = map(float, x2_range)
        if not (hi1 > lo1 and hi2 > lo2):
            raise InvalidArgumentError("box ranges must be non-empty")
        return cls(PotentialForm.BOX_CONSTANT, Box(lo1, hi1, lo2, hi2), amplitude=complex(amplitude))

    @classmethod
    def grid_sampled(cls, x1_grid, x2_grid, values):
        """Bilinear interpolant of ``values[i, j]`` at ``(x1_grid[i], x2_grid[j])``."""
        g1 = _frozen(x1_grid, float)
        g2 = _frozen(x2_grid, float)
        vals = _frozen(values, complex)
        if vals.shape != (len(g1), len(g2)) or len(g1) < 2 or len(g2) < 2:
            raise InvalidArgumentError("values must have shape (len(x1_grid), len(x2_grid))")
        if np.any(np.diff(g1) <= 0) or np.any(np.diff(g2) <= 0):
            raise InvalidArgumentError("sample grids must be strictly increasing")
        box = Box(g1[0], g1[-1], g2[0], g2[-1])
        return cls(PotentialForm.GRID_SAMPLED, box, x1_grid=g1, x2_grid=g2, values=vals)

    @classmethod
    def zero(cls):
        return cls.box_constant(0.0, (0.0, 1.0), (-1.0, 1.0))

    @property
    def is_zero(self):
        if self.form is PotentialForm.BOX_CONSTANT:
            return self.amplitude == 0
        if self.form is PotentialForm.TRIG_SERIES:
            return not (np.any(self.a) or np.any(self.b))
        return not np.any(self.values)

    def negated(self):
        """The potential ``-V`` in the same form."""
        if self.form is PotentialForm.TRIG_SERIES:
            return PotentialSpec(self.form, self.box, a=-self.a, b=-self.b)
        if self.form is PotentialForm.BOX_CONSTANT:
            return PotentialSpec(self.form, self.box, amplitude=-self.amplitude)
        return PotentialSpec(self.form, self.box, x1_grid=self.x1_grid, x2_grid=self.x2_grid,
                             values=_frozen(-self.values, complex))

    def __call__(self, x1, x2):
        return evaluate_potential(self, x1, x2)

    def breakpoints(self):
        """``(x1_breaks, x2_breaks)``: lines where the potential is not smooth."""
        bx = self.box
        if self.form is PotentialForm.GRID_SAMPLED:
            return tuple(self.x1_grid), tuple(self.x2_grid)
        return (bx.x1_lo, bx.x1_hi), (bx.x2_lo, bx.x2_hi)


def _bilinear(x1g, x2g, vals, x1, x2):
    i = np.clip(np.searchsorted(x1g, x1, side="right") - 1, 0, len(x1g) - 2)
    j = np.clip(np.searchsorted(x2g, x2, side="right") - 1, 0, len(x2g) - 2)
    s = (x1 - x1g[i]) / (x1g[i + 1] - x1g[i])
    t = (x2 - x2g[j]) / (x2g[j + 1] - x2g[j])
    return ((1 - s) * (1 - t) * vals[i, j] + s * (1 - t) * vals[i + 1, j]
            + (1 - s) * t * vals[i, j + 1] + s * t * vals[i + 1, j + 1])


def evaluate_potential(V: PotentialSpec, x1, x2):
    """Value of ``V`` at ``(x1, x2)`` (broadcasting arrays); exactly 0 off the support."""
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    inside = V.box.contains(x1, x2)
    if V.form is PotentialForm.BOX_CONSTANT:
        out = np.where(inside, V.amplitude, 0.0).astype(complex)
    elif V.form is PotentialForm.TRIG_SERIES:
        w1 = np.zeros(x1.shape)
        for j, c in enumerate(V.a, start=1):
            w1 -= c * np.sin(j * x1)
        w1 *= np.cos(0.5 * x2)
        w2 = np.zeros(x1.shape)
        for j, c in enumerate(V.b, start=1):
            w2 += c * np.sin(j * x1)
        w2 *= np.sin(x2)
        out = np.where(inside, w1 + 1j * w2, 0.0)
    else:
        out = np.where(inside, _bilinear(V.x1_grid, V.x2_grid, V.values, x1, x2), 0.0)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class PerturbationPair:
    """``V1`` and the second-order potential ``V2`` (None means zero)."""

    V1: PotentialSpec
    V2: Optional[PotentialSpec] = None

    @property
    def has_V2(self):
        return self.V2 is not None and not self.V2.is_zero

    def total(self, eps):
        """Callable ``(x1, x2) -> V1 + eps V2``."""
        if not self.has_V2:
            return self.V1
        return lambda x1, x2: self.V1(x1, x2) + eps * self.V2(x1, x2)

    def breakpoints(self):
        b1, b2 = self.V1.breakpoints()
        if self.has_V2:
            c1, c2 = self.V2.breakpoints()
            b1, b2 = b1 + c1, b2 + c2
        return tuple(sorted(set(b1))), tuple(sorted(set(b2)))


def support_box(pair: PerturbationPair) -> Box:
    """Smallest rectangle (among the declared boxes) outside which both vanish."""
    box = pair.V1.box
    if pair.has_V2:
        box = box.union(pair.V2.box)
    return box


@dataclass(frozen=True)
class SymmetryReport:
    symmetric: bool
    max_violation: float
    worst_point: tuple

    def __bool__(self):
        return self.symmetric


def check_pt_symmetry(V: PotentialSpec, tol=1e-12, probes=41):
    """Test ``V(x1, -x2) = conj(V(x1, x2))`` on a probe grid over the support."""
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    bx = V.box
    lo1, hi1 = max(bx.x1_lo, -20.0), min(bx.x1_hi, 20.0)
    x1 = np.linspace(lo1, hi1, probes)
    h = bx.x2_halfwidth
    x2 = np.linspace(-h, h, 2 * probes + 1)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    viol = np.abs(evaluate_potential(V, X1, -X2) - np.conj(evaluate_potential(V, X1, X2)))
    k = np.unravel_index(np.argmax(viol), viol.shape)
    worst = float(viol[k])
    return SymmetryReport(worst <= tol, worst, (float(X1[k]), float(X2[k])))
