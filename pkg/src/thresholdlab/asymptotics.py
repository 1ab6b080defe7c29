"""Pole expansions near a threshold and their eigenvalue/resonance classification.

Near the threshold ``Lambda_p`` a pole ``k(eps)`` of the continued resolvent
gives the spectral value ``lambda = Lambda_p - k**2``.  To leading order
``k = eps mu`` with ``mu`` an eigenvalue of ``M1``.  The second order data
come from

    Q(z) = d/d eps det(z E - M1 + eps M2) |_{eps=0} = tr(adj(z E - M1) M2),

through the order ``r`` of the zero of ``Q`` at ``mu`` and the coefficient

    gamma = Q^(r)(mu) / (r! prod_{j != i} (mu - mu_j)^{q_j}).
"""
import enum
from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dense_eig import cluster_values, inverse_iteration, qr_eigvals
from .errors import InvalidArgumentError

MAX_DIM = 8
ZERO_BAND = 1e-10
Q_ZERO_TOL = 1e-13
R_TOL = 1e-9


def _band(x):
    return ZERO_BAND * (1.0 + abs(x))


@dataclass(frozen=True)
class EigenCluster:
    mu: complex
    q: int
    vector: Optional[np.ndarray] = field(default=None, repr=False)


def default_cluster_tol(M1):
    return 1e-8 * (1.0 + np.linalg.norm(M1))


def decompose_M1(M1, cluster_tol=None):
    """Eigenvalues of ``M1`` grouped into clusters with multiplicities.

    Clusters are ordered by decreasing real part, then decreasing imaginary
    part.  Simple clusters carry a unit eigenvector.
    """
    M1 = np.atleast_2d(np.asarray(M1, dtype=complex))
    n = M1.shape[0]
    if M1.shape != (n, n) or n < 1:
        raise InvalidArgumentError("M1 must be a non-empty square matrix")
    if n > MAX_DIM:
        raise InvalidArgumentError(f"threshold multiplicity {n} exceeds {MAX_DIM}")
    tol = default_cluster_tol(M1) if cluster_tol is None else cluster_tol
    if not tol > 0:
        raise InvalidArgumentError("cluster_tol must be positive")
    ev = qr_eigvals(M1)
    clusters = []
    for idx in cluster_values(ev, tol):
        mu = complex(np.mean(ev[idx]))
        vec = inverse_iteration(M1, mu) if len(idx) == 1 else None
        clusters.append(EigenCluster(mu, len(idx), vec))
    clusters.sort(key=lambda c: (-round(c.mu.real, 12), -round(c.mu.imag, 12)))
    return clusters


@dataclass(frozen=True)
class QData:
    identically_zero: bool
    r: Optional[int]
    gamma: Optional[complex]
    center: complex = 0.0
    radius: float = 1.0
    coeffs: np.ndarray = field(default=None, repr=False)  # in w = (z - center)/radius

    def __call__(self, z):
        w = (np.asarray(z) - self.center) / self.radius
        return np.polyval(self.coeffs[::-1], w)


def _q_samples(M1, M2):
    n = M1.shape[0]
    center = np.trace(M1) / n
    radius = 1.0 + 2.0 * np.linalg.norm(M1)
    roots = np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.empty(n, dtype=complex)
    for k, w in enumerate(roots):
        B = (center + radius * w) * np.eye(n) - M1
        vals[k] = np.linalg.det(B) * np.trace(np.linalg.solve(B, M2))
    # a degree n-1 polynomial sampled at the n-th roots of unity: a_j = fft_j / n
    coeffs = np.fft.fft(vals) / n
    return center, radius, vals, coeffs


def q_polynomial(M1, M2):
    """``(center, radius, coeffs)`` of ``Q`` in the variable ``(z - center)/radius``."""
    M1 = np.atleast_2d(np.asarray(M1, dtype=complex))
    M2 = np.atleast_2d(np.asarray(M2, dtype=complex))
    center, radius, _, coeffs = _q_samples(M1, M2)
    return center, radius, coeffs


def compute_Q_r_gamma(M1, M2, clusters, i):
    """Zero order ``r`` of ``Q`` at ``mu_i`` and the coefficient ``gamma``."""
    M1 = np.atleast_2d(np.asarray(M1, dtype=complex))
    M2 = np.atleast_2d(np.asarray(M2, dtype=complex))
    n = M1.shape[0]
    if M2.shape != (n, n):
        raise InvalidArgumentError("M1 and M2 must have the same shape")
    center, radius, vals, a = _q_samples(M1, M2)
    scale = radius ** (n - 1) * max(1.0, np.linalg.norm(M2))
    if np.max(np.abs(vals)) <= Q_ZERO_TOL * scale:
        return QData(True, None, None, center, radius, np.zeros(n, dtype=complex))
    cl = clusters[i]
    wmu = (cl.mu - center) / radius
    # Taylor coefficients of Q at mu in the scaled variable
    b = np.array([sum(a[j] * comb(j, k) * wmu ** (j - k) for j in range(k, n)) for k in range(n)])
    ref = np.max(np.abs(a))
    r = next((k for k in range(n) if abs(b[k]) > R_TOL * ref), n)
    if r >= cl.q:
        # the zero at mu is at least as deep as the cluster: no second order term
        return QData(False, r, None, center, radius, a)
    deriv_over_fact = b[r] / radius ** r
    denom = np.prod([(cl.mu - c.mu) ** c.q for k, c in enumerate(clusters) if k != i])
    return QData(False, r, complex(deriv_over_fact / denom), center, radius, a)


@dataclass(frozen=True)
class PoleExpansion:
    """``k(eps) = eps mu + coef eps**power + O(eps**remainder_order)``."""

    tau: int
    cluster: int
    branch: int
    mu: complex
    q: int
    r: Optional[int]
    gamma: Optional[complex]
    Q_identically_zero: bool
    remainder_order: float
    correction: Optional[complex] = None
    correction_power: Optional[float] = None

    def k(self, eps):
        eps = np.asarray(eps, dtype=float)
        out = eps * self.mu
        if self.correction is not None:
            out = out + self.correction * eps ** self.correction_power
        return out

    def k_leading(self, eps):
        return np.asarray(eps, dtype=float) * self.mu


def pole_expansions(clusters, qdata, tau):
    """All ``n`` pole expansions on branch ``tau`` (``qdata[i]`` per cluster)."""
    if tau not in (-1, 1):
        raise InvalidArgumentError("tau must be -1 or +1")
    out = []
    for i, (cl, qd) in enumerate(zip(clusters, qdata)):
        q = cl.q
        common = dict(tau=tau, cluster=i, mu=cl.mu, q=q, r=qd.r, gamma=qd.gamma,
                      Q_identically_zero=qd.identically_zero)
        if qd.identically_zero or qd.gamma is None:
            # Q vanishes identically, or its zero at mu is as deep as the cluster
            for j in range(1, q + 1):
                out.append(PoleExpansion(branch=j, remainder_order=1 + 2 / q, **common))
            continue
        r = qd.r
        if 2 * r >= q:
            for j in range(1, q + 1):
                out.append(PoleExpansion(branch=j, remainder_order=1 + 1 / r, **common))
            continue
        for j in range(1, r + 1):
            out.append(PoleExpansion(branch=j, remainder_order=1 + 1 / r, **common))
        m = q - r
        root = np.power(complex(-qd.gamma), 1.0 / m)
        for j in range(r + 1, q + 1):
            coef = root * np.exp(2j * np.pi * (j - r) / m)
            out.append(PoleExpansion(branch=j, remainder_order=1 + 2 / m, correction=complex(coef),
                                     correction_power=1 + 1 / m, **common))
    return out


def matrix_pole_refine(M1, M2, eps):
    """``k = eps z`` for the roots ``z`` of ``det(z E - M1 + eps M2)``."""
    M1 = np.atleast_2d(np.asarray(M1, dtype=complex))
    M2 = np.atleast_2d(np.asarray(M2, dtype=complex))
    return eps * qr_eigvals(M1 - eps * M2)


def match_refined(expansions, roots, eps):
    """Reorder refined ``roots`` to pair one-to-one with ``expansions``."""
    series = np.array([e.k(eps) for e in expansions])
    roots = np.asarray(roots)
    row, col = linear_sum_assignment(np.abs(series[:, None] - roots[None, :]))
    return roots[col[np.argsort(row)]]


def lambda_of_k(lambda_p, k):
    return lambda_p - np.asarray(k) ** 2


class Kind(enum.Enum):
    EIGENVALUE = "Eigenvalue"
    RESONANCE = "Resonance"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class SpectralPrediction:
    kind: Kind
    pole: PoleExpansion
    lambda_p: float
    clause: str
    conditions: dict = field(default_factory=dict)

    def lam(self, eps):
        """Spectral value from the series actually used for the clause."""
        if self.clause == "resonance-radiating" and self.pole.gamma is not None and self.pole.q == 1:
            eps = np.asarray(eps, dtype=float)
            return self.lambda_p - eps ** 2 * (self.pole.mu - eps * self.pole.gamma) ** 2
        return lambda_of_k(self.lambda_p, self.pole.k(eps))

    def lam_leading(self, eps):
        return lambda_of_k(self.lambda_p, self.pole.k_leading(eps))

    def lambda_series_coeffs(self):
        """``[(power, coef)]`` with ``lambda = sum coef eps**power``."""
        pl = self.pole
        terms = [(0.0, complex(self.lambda_p)), (2.0, -pl.mu ** 2)]
        if self.clause == "resonance-radiating" and pl.gamma is not None and pl.q == 1:
            return terms + [(3.0, 2 * pl.mu * pl.gamma), (4.0, -pl.gamma ** 2)]
        if pl.correction is not None:
            a = pl.correction_power
            terms += [(1.0 + a, -2 * pl.mu * pl.correction), (2 * a, -pl.correction ** 2)]
        return terms

    def record(self):
        pl = self.pole

        def cx(z):
            return None if z is None else [float(np.real(z)), float(np.imag(z))]

        return {
            "tau": pl.tau,
            "cluster": pl.cluster,
            "branch": pl.branch,
            "mu": cx(pl.mu),
            "q": pl.q,
            "r": pl.r,
            "gamma": cx(pl.gamma),
            "Q_identically_zero": pl.Q_identically_zero,
            "remainder_order": pl.remainder_order,
            "kind": self.kind.value,
            "lambda_series_coeffs": [[p, *cx(c)] for p, c in self.lambda_series_coeffs()],
            "justification_clause": self.clause,
            "conditions": {k: (cx(v) if isinstance(v, complex) else v) for k, v in self.conditions.items()},
        }


def _fractional(pole):
    """Correction coefficient of a fractional branch, or None if not available."""
    if pole.Q_identically_zero or pole.correction is None:
        return None
    return pole.correction


def classify_bottom(pole, lambda_p=1.0):
    """Eigenvalue iff the pole has positive real part (bottom threshold)."""
    mu = pole.mu
    cond = {"re_mu": mu.real}
    if mu.real > _band(mu):
        return SpectralPrediction(Kind.EIGENVALUE, pole, lambda_p, "re-mu-positive", cond)
    if mu.real < -_band(mu):
        return SpectralPrediction(Kind.RESONANCE, pole, lambda_p, "re-mu-negative", cond)
    c = _fractional(pole)
    if c is None:
        return SpectralPrediction(Kind.UNDETERMINED, pole, lambda_p, "re-mu-zero-no-second-order", cond)
    cond["re_correction"] = c.real
    if c.real > _band(c):
        return SpectralPrediction(Kind.EIGENVALUE, pole, lambda_p, "re-mu-zero-correction-positive", cond)
    if c.real < -_band(c):
        return SpectralPrediction(Kind.RESONANCE, pole, lambda_p, "re-mu-zero-correction-negative", cond)
    return SpectralPrediction(Kind.UNDETERMINED, pole, lambda_p, "re-mu-zero-correction-zero", cond)


@dataclass(frozen=True)
class RadiatingCoefficients:
    """Couplings to the open channels ``s < p`` (columns: minus, plus phase)."""

    values: np.ndarray
    any_nonzero: bool


def radiating_coupling(spectrum, group, V1, e, order=32, tol=1e-10):
    from .overlaps import radiating_integrals

    if group.start <= 1:
        raise InvalidArgumentError("radiating couplings need an internal threshold (p > 1)")
    e = np.asarray(e, dtype=complex)
    if e.shape != (group.multiplicity,) or not np.any(e):
        raise InvalidArgumentError("cluster eigenvector must be a non-zero n-vector")
    vals = radiating_integrals(spectrum, group, V1, e, order)
    return RadiatingCoefficients(vals, bool(np.any(np.abs(vals) > tol)))


def classify_internal(pole, lambda_p, coupling: Optional[RadiatingCoefficients] = None):
    """Classify a pole from an internal threshold on its branch ``tau``.

    Eigenvalue when the pole decays in the threshold channels and
    ``tau Im k**2 < 0`` keeps the open channels decaying.  Resonance when
    ``Re k < 0``, or, for a simple ``mu``, when the open channels grow and
    the radiating couplings do not all vanish.
    """
    mu, tau = pole.mu, pole.tau
    c = _fractional(pole)
    cond = {"re_mu": mu.real, "im_mu": mu.imag, "tau": tau}
    re_zero = abs(mu.real) <= _band(mu)
    im_zero = abs(mu.imag) <= _band(mu)
    if c is not None:
        cond["correction"] = complex(c)
    if mu.real < -_band(mu):
        return SpectralPrediction(Kind.RESONANCE, pole, lambda_p, "re-mu-negative", cond)

    re_pos = mu.real > _band(mu) or (re_zero and c is not None and c.real > _band(c))
    re_neg = re_zero and c is not None and c.real < -_band(c)
    if re_neg:
        return SpectralPrediction(Kind.RESONANCE, pole, lambda_p, "re-mu-zero-correction-negative", cond)
    if not re_pos:
        return SpectralPrediction(Kind.UNDETERMINED, pole, lambda_p, "re-undecided", cond)

    if tau * mu.imag < -_band(mu):
        return SpectralPrediction(Kind.EIGENVALUE, pole, lambda_p, "open-decay-im-mu", cond)
    if im_zero and c is not None and tau * c.imag < -_band(c):
        return SpectralPrediction(Kind.EIGENVALUE, pole, lambda_p, "open-decay-correction", cond)

    if pole.q == 1:
        grows = tau * mu.imag > _band(mu)
        if not grows and im_zero and pole.r == 0 and pole.gamma is not None:
            g = pole.gamma
            grows = tau * g.imag < -_band(g)
        if grows:
            if coupling is None:
                return SpectralPrediction(Kind.UNDETERMINED, pole, lambda_p, "open-growth-coupling-unknown", cond)
            cond["coupling_nonzero"] = coupling.any_nonzero
            if coupling.any_nonzero:
                return SpectralPrediction(Kind.RESONANCE, pole, lambda_p, "resonance-radiating", cond)
    return SpectralPrediction(Kind.UNDETERMINED, pole, lambda_p, "open-undecided", cond)


@dataclass(frozen=True)
class GroupPrediction:
    """Everything the asymptotic pipeline knows about one threshold group."""

    group: object
    matrices: object
    clusters: list
    qdata: dict  # tau -> [QData per cluster]
    expansions: dict  # tau -> [PoleExpansion]
    predictions: dict  # tau -> [SpectralPrediction], aligned with expansions

    @property
    def taus(self):
        return tuple(sorted(self.predictions))

    def refined_k(self, tau, eps):
        """Refined poles on branch ``tau`` in the order of the expansions."""
        M = self.matrices
        roots = matrix_pole_refine(M.M1, M.M2[tau], eps)
        return match_refined(self.expansions[tau], roots, eps)


def predict_group(spectrum, group, pair, jmax=None, order=32, cluster_tol=None, tail_tol=1e-8):
    """Run the asymptotic pipeline on ``group`` for both branches.

    For the bottom threshold the two branches coincide and only ``tau = +1``
    is reported.
    """
    from .overlaps import DEFAULT_JMAX, build_threshold_matrices

    mats = build_threshold_matrices(spectrum, group, pair, jmax or DEFAULT_JMAX, order, tail_tol)
    clusters = decompose_M1(mats.M1, cluster_tol)
    taus = (1,) if group.is_bottom else (-1, 1)
    coupling = {}
    if not group.is_bottom:
        for i, cl in enumerate(clusters):
            if cl.q == 1:
                coupling[i] = radiating_coupling(spectrum, group, pair.V1, cl.vector, order)
    qdata, expansions, predictions = {}, {}, {}
    for tau in taus:
        qdata[tau] = [compute_Q_r_gamma(mats.M1, mats.M2[tau], clusters, i) for i in range(len(clusters))]
        expansions[tau] = pole_expansions(clusters, qdata[tau], tau)
        if group.is_bottom:
            predictions[tau] = [classify_bottom(p, group.value) for p in expansions[tau]]
        else:
            predictions[tau] = [classify_internal(p, group.value, coupling.get(p.cluster))
                                for p in expansions[tau]]
    return GroupPrediction(group, mats, clusters, qdata, expansions, predictions)
