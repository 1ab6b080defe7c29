"""Direct discretization of ``-Laplace (+ x1**2) + eps V`` on a truncated cylinder.

Unknowns are ordered with ``x1`` fastest, so the matrix is banded with
``kl = ku = N1``.  The axial direction uses the three-point second difference
on a stretched grid, symmetrized by the square roots of the cell weights so
that the unperturbed matrix is real symmetric.  The transverse operator is,
by default, the sine-pseudospectral second derivative: it reproduces the
transverse eigenvalues (and hence every threshold) exactly, which a second
order stencil would shift by ``O(h**2)``.
"""
import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs

from .banded import BandedMatrix, lu_factor
from .errors import (
    DomainError,
    GridQualityError,
    InvalidArgumentError,
    IterationLimitError,
    NumericalFailureError,
)
from .perturbation import support_box
from .transverse import Geometry

MAX_STEP_RATIO = 1.25
MIN_CENTER_DENSITY = 16.0  # cells per unit length near x2 = 0
NEUMANN_EPS = 0.2
DECAY_LENGTHS = 6.0  # automatic X0 in threshold-channel decay lengths
OPEN_DECAY_LENGTHS = 3.0  # and in open-channel decay lengths


class FarBC(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class QuasiGrid:
    """Tensor grid: uniform interior ``x1`` nodes, stretched ``x2`` nodes."""

    x1: np.ndarray
    x1_bounds: tuple
    x2_all: np.ndarray  # includes the two end nodes
    far_bc: FarBC
    sigma: float
    x0: float

    @property
    def n1(self):
        return len(self.x1)

    @property
    def x2(self):
        """Axial nodes carrying unknowns."""
        if self.far_bc is FarBC.DIRICHLET:
            return self.x2_all[1:-1]
        return self.x2_all

    @property
    def n2(self):
        return len(self.x2)

    @property
    def size(self):
        return self.n1 * self.n2

    @property
    def h1(self):
        return (self.x1_bounds[1] - self.x1_bounds[0]) / (self.n1 + 1)

    def axial_weights(self):
        """Cell weights ``(h_minus + h_plus) / 2`` of the unknown nodes."""
        x = self.x2_all
        h = np.diff(x)
        w = np.empty(len(x))
        w[1:-1] = 0.5 * (h[:-1] + h[1:])
        w[0], w[-1] = 0.5 * h[0], 0.5 * h[-1]
        return w[1:-1] if self.far_bc is FarBC.DIRICHLET else w

    def steps(self):
        return np.diff(self.x2_all)


def stretch_map(t, sigma, cap=None):
    """Odd map on [-1, 1] with density ``cosh(sigma t)``, capped at ``cap``.

    Without a cap this is ``sinh(sigma t) / sinh(sigma)``.  With a cap the
    step size stops growing once it reaches ``cap`` times the centre step and
    the map continues linearly.
    """
    t = np.asarray(t, dtype=float)
    if sigma < 1e-8:
        return t.copy()
    tc = np.inf if cap is None or cap <= 1 else np.arccosh(cap) / sigma

    def g(s):
        a = np.abs(s)
        core = np.sinh(sigma * np.minimum(a, tc)) / sigma
        lin = np.where(a > tc, cap * (a - tc), 0.0) if np.isfinite(tc) else 0.0
        return np.sign(s) * (core + lin)

    return g(t) / g(np.array(1.0))


def build_quasi_grid(n1, n2, x0, sigma, far_bc="dirichlet", x1_bounds=(0.0, np.pi),
                     support_halfwidth=0.0, cap=None, check=True):
    """Stretched axial grid ``x2 = x0 * map(t)`` on uniform ``t`` points.

    ``n2`` is the number of axial unknowns; Dirichlet grids get two extra
    end nodes where the solution is zero.

    Raises
    ------
    GridQualityError
        If adjacent steps differ by more than a factor 1.25 or the centre
        has fewer than 16 cells per unit length.
    """
    if int(n1) != n1 or int(n2) != n2 or n1 < 16 or n2 < 16:
        raise InvalidArgumentError("N1 and N2 must be integers >= 16")
    if not x0 > support_halfwidth:
        raise InvalidArgumentError("X0 must exceed the support half-width")
    if not sigma > 0:
        raise InvalidArgumentError("sigma must be positive")
    bc = FarBC(far_bc) if not isinstance(far_bc, FarBC) else far_bc
    # Dirichlet end nodes carry no unknowns; add them so N2 counts unknowns
    t = np.linspace(-1.0, 1.0, int(n2) + (2 if bc is FarBC.DIRICHLET else 0))
    x2 = x0 * stretch_map(t, sigma, cap)
    # exact odd symmetry
    half = len(x2) // 2
    x2[len(x2) - half:] = -x2[:half][::-1]
    if len(x2) % 2:
        x2[half] = 0.0
    lo, hi = map(float, x1_bounds)
    x1 = lo + (hi - lo) * np.arange(1, int(n1) + 1) / (int(n1) + 1)
    grid = QuasiGrid(x1, (lo, hi), x2, bc, float(sigma), float(x0))
    if check:
        h = grid.steps()
        if np.any(h <= 0):
            raise GridQualityError("axial nodes are not strictly increasing")
        ratio = np.max(np.maximum(h[1:] / h[:-1], h[:-1] / h[1:]))
        if ratio > MAX_STEP_RATIO:
            raise GridQualityError(
                f"adjacent step ratio {ratio:.3f} exceeds {MAX_STEP_RATIO}; increase N2 or reduce sigma"
            )
        hc = np.min(h)
        if 1.0 / hc < MIN_CENTER_DENSITY:
            raise GridQualityError(
                f"centre step {hc:.3g} gives fewer than {MIN_CENTER_DENSITY:.0f} cells per unit; "
                "increase N2 or sigma"
            )
    return grid


def design_axial_grid(x0, h_center=0.055, h_max=4.0, growth=1.0066):
    """``(n2, sigma, cap)`` for a centre step ``h_center`` and far step at most ``h_max``.

    ``growth`` is the step ratio between neighbouring cells in the stretching
    zone.
    """
    C = max(h_max / h_center, 1.0)
    a = x0 * np.log(growth) / h_center
    sigma = float(np.arcsinh(a))
    cap = None
    if C > 1 and np.arccosh(C) < sigma:
        sigma = (a + C * np.arccosh(C) - np.sqrt(C * C - 1.0)) / C
        cap = C
    dt = np.log(growth) / sigma
    n2 = int(np.ceil(2.0 / dt)) + 1
    n2 += 1 - n2 % 2  # odd: a node at x2 = 0
    return n2, sigma, cap


def fit_axial_grid(x0, n2, h_max=4.0, growth=1.0066):
    """``(sigma, cap)`` spending a prescribed ``n2`` on the design of :func:`design_axial_grid`.

    The centre step is the free parameter: it is bisected (in log scale)
    until the design needs exactly ``n2`` points.
    """
    lo, hi = np.log(1e-4), np.log(max(h_max, 1e-3))
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if design_axial_grid(x0, np.exp(mid), h_max, growth)[0] > n2:
            lo = mid
        else:
            hi = mid
    _, sigma, cap = design_axial_grid(x0, np.exp(hi), h_max, growth)
    return sigma, cap


def axial_second_difference(x):
    """Three-point ``u''`` on nodes ``x`` as a dense matrix (interior rows only).

    Row ``i`` (for ``0 < i < len(x) - 1``) is exact for quadratics.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    D = np.zeros((n, n))
    for i in range(1, n - 1):
        hm, hp = x[i] - x[i - 1], x[i + 1] - x[i]
        D[i, i - 1] = 2.0 / (hm * (hm + hp))
        D[i, i + 1] = 2.0 / (hp * (hm + hp))
        D[i, i] = -2.0 / (hm * hp)
    return D


def _axial_symmetric(grid):
    """Tridiagonal ``(diag, off)`` of ``W^-1/2 K W^-1/2`` for ``-d^2/dx2^2``."""
    x = grid.x2_all
    h = np.diff(x)
    w_all = np.empty(len(x))
    w_all[1:-1] = 0.5 * (h[:-1] + h[1:])
    w_all[0], w_all[-1] = 0.5 * h[0], 0.5 * h[-1]
    K_diag = np.zeros(len(x))
    K_diag[1:] += 1.0 / h
    K_diag[:-1] += 1.0 / h
    K_off = -1.0 / h
    if grid.far_bc is FarBC.DIRICHLET:
        w = w_all[1:-1]
        diag = K_diag[1:-1] / w
        off = K_off[1:-1] / np.sqrt(w[:-1] * w[1:])
    else:
        w = w_all
        diag = K_diag / w
        off = K_off / np.sqrt(w[:-1] * w[1:])
    return diag, off


def transverse_matrix(grid, kind="spectral", trap=False):
    """Dense ``-d^2/dx1^2 (+ x1**2)`` on the interior ``x1`` nodes (Dirichlet)."""
    n = grid.n1
    L = grid.x1_bounds[1] - grid.x1_bounds[0]
    if kind == "spectral":
        idx = np.arange(1, n + 1)
        S = np.sin(np.pi * np.outer(idx, idx) / (n + 1))
        T = (2.0 / (n + 1)) * (S * (idx * np.pi / L) ** 2) @ S
        T = 0.5 * (T + T.T)
    elif kind == "fd2":
        h = L / (n + 1)
        T = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h ** 2
    else:
        raise InvalidArgumentError(f"unknown transverse discretization {kind!r}")
    if trap:
        T = T + np.diag(grid.x1 ** 2)
    return T


@dataclass(frozen=True)
class DiscreteOperator:
    matrix: BandedMatrix
    grid: QuasiGrid
    eps: float
    model: str
    potential_id: str = ""

    @property
    def n(self):
        return self.matrix.n


def _model_name(spectrum):
    return {Geometry.INTERVAL_0_PI: "strip", Geometry.REAL_LINE_TRAP: "oscillator"}.get(spectrum.geometry)


def transverse_bounds(spectrum):
    """Transverse computational interval for the direct solver."""
    if spectrum.geometry is Geometry.INTERVAL_0_PI:
        return (0.0, np.pi)
    if spectrum.geometry is Geometry.REAL_LINE_TRAP:
        half = max(8.0, 2.0 * np.sqrt(spectrum.eigenvalues.max()))
        return (-half, half)
    raise DomainError("the direct solver supports the strip and oscillator models only")


def assemble_operator(spectrum, pair, eps, grid, transverse="spectral", potential_id=""):
    """Banded matrix of ``-Laplace (+ x1**2) + eps (V1 + eps V2)`` on ``grid``."""
    model = _model_name(spectrum)
    if model is None:
        raise DomainError("the direct solver supports the strip and oscillator models only")
    box = support_box(pair)
    lo1, hi1 = grid.x1_bounds
    if box.x2_lo < grid.x2_all[0] or box.x2_hi > grid.x2_all[-1]:
        raise DomainError("potential support exceeds the axial domain")
    if model == "oscillator" and (box.x1_lo < lo1 or box.x1_hi > hi1):
        raise DomainError("potential support exceeds the transverse domain")
    n1, n2 = grid.n1, grid.n2
    T = transverse_matrix(grid, transverse, trap=(model == "oscillator"))
    diag2, off2 = _axial_symmetric(grid)
    kl = n1
    band = np.zeros((n2, n1, 2 * n1 + 1), dtype=np.complex128)
    for d in range(-(n1 - 1), n1):
        i = np.arange(max(0, -d), min(n1, n1 - d))
        band[:, i, d + kl] = T[i, i + d][None, :]
    band[:, :, kl] += diag2[:, None]
    band[1:, :, 0] = off2[:, None]
    band[:-1, :, 2 * kl] = off2[:, None]
    if eps != 0.0:
        X1, X2 = np.meshgrid(grid.x1, grid.x2, indexing="ij")
        V = pair.total(eps)(X1, X2)
        band[:, :, kl] += eps * V.T
    mat = BandedMatrix(band.reshape(n1 * n2, 2 * n1 + 1), kl, kl)
    return DiscreteOperator(mat, grid, float(eps), model, potential_id)


@dataclass
class EigenResult:
    lam: complex
    vector: np.ndarray = field(repr=False)  # unit 2-norm, symmetrized variables
    residual: float
    tail_mass: float
    grid: QuasiGrid = field(repr=False, default=None)

    def profile(self):
        """Eigenfunction values on the grid, shape ``(n2, n1)``, unit L2 norm."""
        g = self.grid
        v = self.vector.reshape(g.n2, g.n1)
        return v / np.sqrt(g.axial_weights()[:, None] * g.h1)


def tail_mass(vector, grid, fraction=0.2):
    """Share of the squared norm carried by the outer ``fraction`` of the axial domain."""
    v = np.asarray(vector).reshape(grid.n2, grid.n1)
    dens = np.sum(np.abs(v) ** 2, axis=1)  # already cell weighted
    outer = np.abs(grid.x2) > (1.0 - fraction) * grid.x0
    total = dens.sum()
    return float(dens[outer].sum() / total) if total > 0 else 0.0


def _factor_shifted(matrix, sigma, retries=3):
    shift = complex(sigma)
    for attempt in range(retries + 1):
        try:
            return lu_factor(matrix.shifted(shift)), shift
        except NumericalFailureError:
            if attempt == retries:
                raise
            shift = shift + 1e-6j
    raise AssertionError("unreachable")


def _residual(matrix, v, lam):
    return float(np.linalg.norm(matrix.matvec(v) - lam * v))


def _polish(matrix, lu, shift, v, lam, tol, steps=6):
    """Inverse iteration with the factored shift, then a Rayleigh quotient."""
    best = (v, lam, _residual(matrix, v, lam))
    for _ in range(steps):
        if best[2] <= tol:
            break
        w = lu.solve(best[0])
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0:
            break
        w /= nrm
        Aw = matrix.matvec(w)
        mu = np.vdot(w, Aw)
        res = float(np.linalg.norm(Aw - mu * w))
        if res < best[2]:
            best = (w, mu, res)
        else:
            break
    return best


def solve_near(op, sigma_target, count=4, tol=1e-9, ncv=40, maxiter=None):
    """The ``count`` eigenvalues of ``op`` nearest ``sigma_target``.

    Shift-invert Arnoldi (ARPACK) on ``(A - sigma)^-1`` with the banded LU,
    followed by residual polishing.  Only pairs with residual at most ``tol``
    are returned, sorted by distance to the target.

    Raises
    ------
    NumericalFailureError
        If the shifted matrix stays singular after three shift perturbations.
    IterationLimitError
        If Arnoldi fails to converge or no pair reaches ``tol``.
    """
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    A = op.matrix
    n = A.n
    lu, shift = _factor_shifted(A, sigma_target)
    k = min(count, n - 2)
    ncv = min(max(ncv, 2 * k + 1), n - 1)
    Op = LinearOperator((n, n), matvec=lu.solve, dtype=np.complex128)
    v0 = np.ones(n, dtype=np.complex128)
    try:
        theta, vecs = eigs(Op, k=k, which="LM", ncv=ncv, tol=1e-13, v0=v0,
                           maxiter=maxiter or 50 * n)
    except ArpackNoConvergence as exc:
        if len(exc.eigenvalues) == 0:
            raise IterationLimitError("Arnoldi did not converge") from exc
        theta, vecs = exc.eigenvalues, exc.eigenvectors
    results = []
    best_res = np.inf
    for th, v in zip(theta, vecs.T):
        lam = shift + 1.0 / th
        v = v / np.linalg.norm(v)
        v, lam, res = _polish(A, lu, shift, v, lam, tol)
        best_res = min(best_res, res)
        if res <= tol:
            k_big = int(np.argmax(np.abs(v)))
            v = v * (abs(v[k_big]) / v[k_big])
            results.append(EigenResult(complex(lam), v, res, tail_mass(v, op.grid), op.grid))
    if not results:
        raise IterationLimitError(f"no eigenpair reached residual {tol:.1e}", best_res)
    results.sort(key=lambda r: (abs(r.lam - sigma_target), r.lam.real, r.lam.imag))
    return results


@dataclass(frozen=True)
class LocalizationReport:
    tail_mass: float
    decay_rate: float


def localization_report(result, grid=None):
    """Tail mass and the exponential decay rate fitted over the outer half-domain."""
    grid = grid or result.grid
    v = np.asarray(result.vector).reshape(grid.n2, grid.n1)
    amp = np.sqrt(np.sum(np.abs(v) ** 2, axis=1) / (grid.axial_weights() * grid.h1))
    x = np.abs(grid.x2)
    sel = (x >= 0.5 * grid.x0) & (amp > 1e-14 * amp.max())
    rate = np.nan
    if np.count_nonzero(sel) >= 3:
        slope = np.polyfit(x[sel], np.log(amp[sel]), 1)[0]
        rate = float(-slope)
    return LocalizationReport(tail_mass(result.vector, grid), rate)


@dataclass(frozen=True)
class SolverSettings:
    n1: int = 64
    n2: Optional[int] = None
    x0: Optional[float] = None
    sigma: Optional[float] = None
    cap: Optional[float] = None
    far_bc: str = "auto"
    tol: float = 1e-9
    transverse: str = "spectral"
    count: int = 6
    h_center: float = 0.055
    x0_max: float = 20000.0


def decay_rates(spectrum, lambda_p, lam, group_end):
    """Decay rates at ``lam``: ``(threshold, open, wave)``.

    ``threshold`` is the slowest decay among the threshold channels, ``open``
    the slowest among the open channels (inf if none) and ``wave`` the
    fastest open-channel wavenumber.
    """
    rates, open_rates, waves = [], [np.inf], [0.0]
    for s in range(1, group_end + 1):
        z = np.sqrt(complex(spectrum.eigenvalue(s) - lam))
        # decaying branch of exp(-z |x2|)
        z = z if z.real >= 0 else -z
        if spectrum.eigenvalue(s) < lambda_p - 1e-9 * max(1.0, lambda_p):
            open_rates.append(abs(z.real))
            waves.append(abs(z.imag))
        else:
            rates.append(abs(z.real))
    return min(rates), min(open_rates), max(waves)


def auto_grid(spectrum, pair, group, lam_pred, settings, eps):
    """Choose domain size and stretching from the predicted decay of the state."""
    rate, open_rate, wave = decay_rates(spectrum, group.value, lam_pred, group.start + group.multiplicity - 1)
    halfw = support_box(pair).x2_halfwidth
    x0 = settings.x0
    if x0 is None:
        x0 = max(DECAY_LENGTHS / max(rate, 1e-12), OPEN_DECAY_LENGTHS / max(open_rate, 1e-12))
        x0 = float(np.clip(x0, 10.0 * (1.0 + halfw), settings.x0_max))
    h_max = 4.0 if wave == 0 else min(4.0, 0.9 / wave)
    if settings.n2 is None:
        n2, sigma, cap = design_axial_grid(x0, settings.h_center, h_max)
    else:
        n2 = settings.n2
        sigma, cap = fit_axial_grid(x0, n2, h_max)
    if settings.sigma is not None:
        sigma, cap = settings.sigma, settings.cap
    bc = settings.far_bc
    if bc == "auto":
        bc = "neumann" if eps < NEUMANN_EPS else "dirichlet"
    return build_quasi_grid(settings.n1, n2, x0, sigma, bc, transverse_bounds(spectrum), halfw, cap)


@dataclass
class EmergentSearch:
    found: Optional[EigenResult]
    target: complex
    window: float
    candidates: list
    grid: QuasiGrid = field(repr=False, default=None)

    @property
    def absent(self):
        return self.found is None


def acceptance_window(eps):
    return max(10.0 * eps ** 3, 1e-6)


def _in_continuum(lam, bottom, rtol=1e-10):
    return abs(lam.imag) <= rtol * max(1.0, abs(lam)) and lam.real >= bottom


def find_emergent_state(spectrum, pair, eps, group, prediction, settings=None, target=None):
    """Search the direct spectrum for the state predicted near ``prediction.lam(eps)``.

    A candidate is accepted when it lies within ``max(10 eps**3, 1e-6)`` of
    the prediction and keeps less than 5% of its mass in the outer 20% of the
    domain.  Real candidates at or above the lowest threshold are rejected:
    they lie in the essential spectrum and are box modes of the truncated
    continuum, however small their tail.  Otherwise the result reports
    absence with the nearest candidates.
    """
    settings = settings or SolverSettings()
    lam_pred = complex(prediction.lam(eps)) if target is None else complex(target)
    grid = auto_grid(spectrum, pair, group, lam_pred, settings, eps)
    op = assemble_operator(spectrum, pair, eps, grid, settings.transverse)
    cands = solve_near(op, lam_pred, settings.count, settings.tol)
    win = acceptance_window(eps)
    bottom = spectrum.eigenvalue(1)
    good = [c for c in cands if abs(c.lam - lam_pred) < win and c.tail_mass < 0.05
            and not _in_continuum(c.lam, bottom)]
    found = min(good, key=lambda c: abs(c.lam - lam_pred)) if good else None
    return EmergentSearch(found, lam_pred, win, cands, grid)
