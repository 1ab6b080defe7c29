"""Mode/potential integrals and the threshold matrices built from them.

For a threshold group starting at ``p`` with multiplicity ``n`` the first
order matrix is ``M1[i, j] = -<psi_i' V1 psi_j'> / 2`` (primed indices are
shifted by ``p - 1``) and the second order matrix on branch ``tau`` is

    M2[i, j] = ( <psi_i' V2 psi_j'> - sum_s D_s[i, j] ) / 2,
    D_s[i, j] = iint G_s(|x2 - t2|) U_s^i(x2) U_s^j(t2) dx2 dt2,

where ``U_s^t(x2) = int psi_s V1 psi_t dx1`` and ``G_s`` is the axial Green
kernel of channel ``s`` at the threshold energy.
"""
import enum
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, QuadratureAccuracyError
from .quadrature import DEFAULT_ORDER, kernel_double_integral, panel_edges, panel_rule
from .transverse import Geometry, default_group_tol

DEFAULT_JMAX = 64
QUAD_RTOL = 1e-10
MAX_REFINE = 5


class TruncationWarning(UserWarning):
    """The mode sum was cut off while its estimated tail is still large."""


class Regime(enum.Enum):
    OSCILLATORY = "Oscillatory"
    LINEAR = "Linear"
    DECAYING = "Decaying"


@dataclass(frozen=True)
class AxialKernel:
    """Axial Green kernel of one transverse channel at the threshold energy."""

    regime: Regime
    kappa: float
    tau: Optional[int] = None

    @classmethod
    def for_channel(cls, lam_s, lam_p, tau, tol=None):
        tol = default_group_tol(lam_p) if tol is None else tol
        gap = lam_s - lam_p
        if abs(gap) <= tol:
            return cls(Regime.LINEAR, 0.0)
        if gap > 0:
            return cls(Regime.DECAYING, float(np.sqrt(gap)))
        if tau not in (-1, 1):
            raise InvalidArgumentError("tau must be -1 or +1")
        return cls(Regime.OSCILLATORY, float(np.sqrt(-gap)), tau)

    def __call__(self, d):
        d = np.asarray(d, dtype=float)
        if self.regime is Regime.LINEAR:
            return -0.5 * d
        if self.regime is Regime.DECAYING:
            return np.exp(-self.kappa * d) / (2.0 * self.kappa)
        K0 = -1j * self.kappa
        return np.exp(-self.tau * K0 * d) / (2.0 * self.tau * K0)


def _clip_range(lo, hi, dom_lo, dom_hi):
    lo, hi = max(lo, dom_lo), min(hi, dom_hi)
    if not hi > lo:
        return None
    return lo, hi


def _x1_edges(spectrum, count, V, refine=0):
    dom = spectrum.domain(count)
    rng = _clip_range(V.box.x1_lo, V.box.x1_hi, *dom)
    if rng is None:
        return None
    lam = spectrum.eigenvalue(count) if spectrum.unbounded else spectrum.eigenvalues.max()
    freq = np.sqrt(max(abs(lam), 1.0))
    max_len = min(1.0, 6.0 / (freq + 4.0)) / 2 ** refine
    breaks = tuple(V.breakpoints()[0]) + tuple(spectrum.breakpoints())
    return panel_edges(*rng, breaks, max_len)


def _x2_edges(V, max_len=1.0, refine=0, extra=()):
    lo, hi = V.box.x2_lo, V.box.x2_hi
    return panel_edges(lo, hi, tuple(V.breakpoints()[1]) + tuple(extra), max_len / 2 ** refine)


def _x1_order(spectrum, order):
    # spline knots already cut the line into many short panels
    return min(order, 8) if spectrum.geometry is Geometry.MANUFACTURED else order


def _overlap_tensor(spectrum, rows, cols, V, refine, order):
    """``int psi_r V psi_c`` for all r in rows, c in cols on a fixed rule."""
    count = max(max(rows), max(cols))
    e1 = _x1_edges(spectrum, count, V, refine)
    if e1 is None or V.is_zero:
        return np.zeros((len(rows), len(cols)), dtype=complex)
    x1, w1 = panel_rule(e1, _x1_order(spectrum, order))
    x2, w2 = panel_rule(_x2_edges(V, refine=refine), order)
    table = spectrum.values(count, x1)
    A = table[np.asarray(rows) - 1] * w1
    B = table[np.asarray(cols) - 1]
    Vx = V(x1[:, None], x2[None, :]) @ w2
    return (A * Vx) @ B.T


def _converged(fn, rtol=QUAD_RTOL, max_refine=MAX_REFINE):
    prev = fn(0)
    for level in range(1, max_refine + 1):
        cur = fn(level)
        if np.max(np.abs(cur - prev)) <= rtol * (1.0 + np.max(np.abs(cur))):
            return cur
        prev, last = cur, prev
    raise QuadratureAccuracyError(cur, last)


def mode_matrix_element(spectrum, i, j, V, order=DEFAULT_ORDER):
    """``int psi_i(x1) V(x) psi_j(x1) dx`` over the support of ``V``.

    The panel rule is refined by halving until two successive estimates
    agree to ``1e-10 (1 + |I|)``.

    Raises
    ------
    QuadratureAccuracyError
        If the refinement cap is reached first.
    """
    val = _converged(lambda lvl: _overlap_tensor(spectrum, [i], [j], V, lvl, order))
    return complex(val[0, 0])


def overlap_matrix(spectrum, group, V, order=DEFAULT_ORDER):
    """Matrix of ``<psi_i V psi_j>`` over the modes of ``group``."""
    idx = list(group.indices)
    if group.start + group.multiplicity - 1 > spectrum.m:
        raise InvalidArgumentError("threshold group exceeds the spectrum")
    return _converged(lambda lvl: _overlap_tensor(spectrum, idx, idx, V, lvl, order))


def build_M1(spectrum, group, V1, order=DEFAULT_ORDER):
    """``-1/2`` times the ``V1`` overlap matrix of the threshold modes."""
    return -0.5 * overlap_matrix(spectrum, group, V1, order)


@dataclass(frozen=True)
class AxialProfiles:
    """``U[s-1, t, :]``: profile of channel ``s`` driven by group mode ``t``."""

    edges: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    U: np.ndarray
    order: int

    @property
    def jmax(self):
        return self.U.shape[0]


def _check_jmax(spectrum, jmax):
    if spectrum.unbounded:
        if jmax < spectrum.m:
            raise InvalidArgumentError(f"J_max={jmax} must be at least m={spectrum.m}")
        return jmax
    # tabulated spectra carry no modes beyond m
    return spectrum.m


def axial_profiles(spectrum, group, V1, jmax=DEFAULT_JMAX, order=DEFAULT_ORDER):
    """Tabulate ``U_s^t`` for ``s = 1..jmax`` on Gauss nodes of the support of ``V1``."""
    jmax = _check_jmax(spectrum, jmax)
    lam_top = spectrum.eigenvalue(jmax)
    kappa_max = np.sqrt(max(abs(lam_top - group.value), 1.0))
    edges = _x2_edges(V1, min(1.0, 16.0 / kappa_max))
    x2, w2 = panel_rule(edges, order)
    count = max(jmax, group.start + group.multiplicity - 1)
    e1 = _x1_edges(spectrum, count, V1)
    U = np.zeros((jmax, group.multiplicity, len(x2)), dtype=complex)
    if e1 is not None and not V1.is_zero:
        x1, w1 = panel_rule(e1, _x1_order(spectrum, order))
        table = spectrum.values(count, x1)
        Vx = V1(x1[:, None], x2[None, :])
        for k, t in enumerate(group.indices):
            U[:, k, :] = (table[:jmax] * (w1 * table[t - 1])) @ Vx
    return AxialProfiles(edges, x2, w2, U, order)


def _channel_sum(spectrum, group, prof, channels, tau):
    n = group.multiplicity
    total = np.zeros((n, n), dtype=complex)
    per = {}
    # channels driven only at roundoff level are treated as exactly zero
    floor = 1e-13 * float(np.max(np.abs(prof.U), initial=0.0))
    for s in channels:
        Us = prof.U[s - 1]
        if not np.max(np.abs(Us), initial=0.0) > floor:
            per[s] = np.zeros((n, n), dtype=complex)
            continue
        kern = AxialKernel.for_channel(spectrum.eigenvalue(s), group.value, tau)
        D = kernel_double_integral(prof.edges, kern, Us[:, None, :], Us[None, :, :], prof.order)
        per[s] = D
        total += D
    return total, per


def _kappa(spectrum, s, lam_p):
    return np.sqrt(max(spectrum.eigenvalue(s) - lam_p, 0.0))


def tail_bound(spectrum, group, per_channel, jmax, diameter):
    """Estimate of ``|sum_{s > jmax} D_s|`` from the computed decaying terms.

    Two estimates are combined: geometric decay at the channel rates across
    the support diameter, and a power law ``|D_s| ~ s^-alpha`` fitted to the
    upper half of the computed channels.  The larger one is returned.
    """
    if not spectrum.unbounded:
        return 0.0
    lam_p = group.value
    last = float(np.max(np.abs(per_channel.get(jmax, 0.0))))
    kJ = _kappa(spectrum, jmax, lam_p)
    s_tail = np.arange(jmax + 1, jmax + 4001)
    k_tail = np.sqrt(np.array([spectrum.eigenvalue(int(s)) for s in s_tail]) - lam_p)
    geometric = last * float(np.sum(np.exp(-(k_tail - kJ) * diameter)))

    decaying = [s for s in per_channel if spectrum.eigenvalue(s) - lam_p > default_group_tol(lam_p)]
    mags = np.array([np.max(np.abs(per_channel[s])) for s in decaying]) if decaying else np.zeros(0)
    power = 0.0
    if mags.size:
        floor = 1e-13 * max(mags.max(), 1e-300)
        sel = [(s, m) for s, m in zip(decaying, mags) if s > jmax // 2 and m > floor]
        if len(sel) >= 3:
            s_arr = np.log([s for s, _ in sel])
            m_arr = np.log([m for _, m in sel])
            slope, icpt = np.polyfit(s_arr, m_arr, 1)
            alpha = -slope
            d_J = np.exp(icpt) * jmax ** slope
            power = d_J * jmax / (alpha - 1.0) if alpha > 1.0 else np.inf
    return max(geometric, power)


@dataclass(frozen=True)
class ThresholdMatrices:
    group: object
    M1: np.ndarray
    M2: dict
    jmax: int
    tail_estimate: float
    V2_overlap: np.ndarray = field(repr=False, default=None)


def build_M2(spectrum, group, pair, tau, jmax=DEFAULT_JMAX, order=DEFAULT_ORDER,
             profiles=None, tail_tol=1e-8):
    """Second order matrix on branch ``tau``; returns ``(M2, tail_estimate)``.

    Emits :class:`TruncationWarning` when the tail estimate exceeds
    ``tail_tol * (1 + max|M2|)``.
    """
    res = _build_M2_both(spectrum, group, pair, (tau,), jmax, order, profiles, tail_tol)
    return res[0][tau], res[1]


def _build_M2_both(spectrum, group, pair, taus, jmax, order, profiles, tail_tol):
    if group.start + group.multiplicity - 1 > spectrum.m:
        raise InvalidArgumentError("threshold group exceeds the spectrum")
    prof = profiles or axial_profiles(spectrum, group, pair.V1, jmax, order)
    jmax = prof.jmax
    n = group.multiplicity
    V2o = overlap_matrix(spectrum, group, pair.V2, order) if pair.has_V2 else np.zeros((n, n), complex)
    below = [s for s in range(1, jmax + 1) if spectrum.eigenvalue(s) < group.value - default_group_tol(group.value)]
    rest = [s for s in range(1, jmax + 1) if s not in below]
    common, per = _channel_sum(spectrum, group, prof, rest, None)
    diam = pair.V1.box.x2_hi - pair.V1.box.x2_lo
    tail = tail_bound(spectrum, group, per, jmax, diam)
    out = {}
    for tau in taus:
        osc, _ = _channel_sum(spectrum, group, prof, below, tau)
        out[tau] = 0.5 * (V2o - (common + osc))
    scale = 1.0 + max(np.max(np.abs(m)) for m in out.values())
    if tail > tail_tol * scale:
        warnings.warn(
            f"mode sum truncated at J_max={jmax} with tail estimate {tail:.2e}",
            TruncationWarning,
            stacklevel=3,
        )
    return out, tail, V2o


def build_threshold_matrices(spectrum, group, pair, jmax=DEFAULT_JMAX, order=DEFAULT_ORDER,
                             tail_tol=1e-8):
    """``M1`` and ``M2`` on both branches, sharing one set of axial profiles."""
    M1 = build_M1(spectrum, group, pair.V1, order)
    prof = axial_profiles(spectrum, group, pair.V1, jmax, order)
    M2, tail, V2o = _build_M2_both(spectrum, group, pair, (-1, 1), jmax, order, prof, tail_tol)
    return ThresholdMatrices(group, M1, M2, prof.jmax, tail, V2o)


def radiating_integrals(spectrum, group, V1, e, order=DEFAULT_ORDER):
    """Couplings of the group mode combination ``sum_t e_t psi_t`` to open channels.

    Returns an array of shape ``(p - 1, 2)``; entry ``[s-1, 0]`` uses the
    phase ``exp(-i k_s x2)`` and ``[s-1, 1]`` uses ``exp(+i k_s x2)`` with
    ``k_s = sqrt(Lambda_p - Lambda_s)``.
    """
    open_ch = [s for s in range(1, group.start)
               if spectrum.eigenvalue(s) < group.value - default_group_tol(group.value)]
    e = np.asarray(e, dtype=complex)
    out = np.zeros((len(open_ch), 2), dtype=complex)
    if not open_ch:
        return out
    count = group.start + group.multiplicity - 1

    def at_level(lvl):
        e1 = _x1_edges(spectrum, count, V1, lvl)
        if e1 is None:
            return out.copy()
        x1, w1 = panel_rule(e1, _x1_order(spectrum, order))
        x2, w2 = panel_rule(_x2_edges(V1, refine=lvl), order)
        table = spectrum.values(count, x1)
        drive = e @ table[group.start - 1:count]
        Vx = V1(x1[:, None], x2[None, :])
        res = np.empty_like(out)
        for k, s in enumerate(open_ch):
            U = (w1 * table[s - 1] * drive) @ Vx
            ks = np.sqrt(group.value - spectrum.eigenvalue(s))
            res[k, 0] = np.sum(w2 * np.exp(-1j * ks * x2) * U)
            res[k, 1] = np.sum(w2 * np.exp(1j * ks * x2) * U)
        return res

    return _converged(at_level)
