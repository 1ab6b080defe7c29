"""Eigenvalues of small dense complex matrices.

The production path is Householder reduction to Hessenberg form followed by
the single-shift complex QR iteration.  Durand-Kerner on the characteristic
polynomial (Faddeev-LeVerrier coefficients) is kept as an independent check.
"""
import numpy as np

from .errors import NumericalFailureError

_EPS = np.finfo(float).eps


def hessenberg(A):
    """Return ``(H, Q)`` with ``A = Q H Q^H`` and ``H`` upper Hessenberg."""
    H = np.array(A, dtype=np.complex128, copy=True)
    n = H.shape[0]
    Q = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        H[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, :])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        Q[:, k + 1:] -= 2.0 * np.outer(Q[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H, Q


def _givens(a, b):
    r = np.hypot(abs(a), abs(b))
    if r == 0.0:
        return 1.0, 0.0
    c = abs(a) / r
    if a == 0:
        return 0.0, 1.0 + 0j
    s = (a / abs(a)) * np.conj(b) / r
    return c, s


def _wilkinson_shift(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closer to d
    tr = a + d
    det = a * d - b * c
    disc = np.sqrt(tr * tr / 4.0 - det)
    l1, l2 = tr / 2.0 + disc, tr / 2.0 - disc
    return l1 if abs(l1 - d) < abs(l2 - d) else l2


def qr_eigvals(A, max_iter_per_eig=60):
    """Eigenvalues of a complex square matrix by shifted Hessenberg QR."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.complex128)
    H, _ = hessenberg(A)
    scale = max(np.max(np.abs(H)), np.finfo(float).tiny)
    eigs = np.zeros(n, dtype=np.complex128)
    hi = n - 1
    iters = 0
    while hi >= 0:
        if hi == 0:
            eigs[0] = H[0, 0]
            break
        # locate the active unreduced block [lo, hi]
        lo = hi
        while lo > 0:
            if abs(H[lo, lo - 1]) <= _EPS * (abs(H[lo, lo]) + abs(H[lo - 1, lo - 1]) + 1e-300 * scale):
                H[lo, lo - 1] = 0.0
                break
            if abs(H[lo, lo - 1]) <= _EPS * scale * 1e-3:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eigs[hi] = H[hi, hi]
            hi -= 1
            iters = 0
            continue
        iters += 1
        if iters > max_iter_per_eig:
            raise NumericalFailureError("QR iteration did not converge")
        if iters % 11 == 0:
            shift = H[hi, hi] + abs(H[hi, hi - 1]) * (0.75 + 0.5j)
        else:
            shift = _wilkinson_shift(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        for k in range(lo, hi + 1):
            H[k, k] -= shift
        rots = []
        for k in range(lo, hi):
            c, s = _givens(H[k, k], H[k + 1, k])
            G = np.array([[c, s], [-np.conj(s), c]], dtype=np.complex128)
            H[k:k + 2, k:] = G @ H[k:k + 2, k:]
            rots.append(G)
        for k, G in zip(range(lo, hi), rots):
            H[: min(hi, k + 2) + 1, k:k + 2] = H[: min(hi, k + 2) + 1, k:k + 2] @ G.conj().T
        for k in range(lo, hi + 1):
            H[k, k] += shift
    return eigs


def charpoly(A):
    """Coefficients of ``det(z I - A)``, highest degree first (Faddeev-LeVerrier)."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    coeffs = np.zeros(n + 1, dtype=np.complex128)
    coeffs[0] = 1.0
    M = np.zeros_like(A)
    I = np.eye(n, dtype=np.complex128)
    for k in range(1, n + 1):
        M = A @ M + coeffs[k - 1] * I
        coeffs[k] = -np.trace(A @ M) / k
    return coeffs


def durand_kerner(coeffs, tol=1e-14, max_iter=5000):
    """Roots of the polynomial with coefficients ``coeffs`` (highest first)."""
    c = np.asarray(coeffs, dtype=np.complex128)
    c = c / c[0]
    n = len(c) - 1
    if n == 0:
        return np.zeros(0, dtype=np.complex128)
    bound = 1.0 + np.max(np.abs(c[1:]))
    z = bound * (0.4 + 0.9j) ** np.arange(n)
    for _ in range(max_iter):
        pz = np.polyval(c, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        step = pz / np.prod(diff, axis=1)
        z = z - step
        if np.max(np.abs(step)) <= tol * bound:
            break
    else:
        raise NumericalFailureError("Durand-Kerner iteration did not converge")
    # Newton polish
    dc = np.polyder(c)
    for _ in range(3):
        d = np.polyval(dc, z)
        ok = np.abs(d) > 0
        z[ok] -= np.polyval(c, z[ok]) / d[ok]
    return z


def match_multisets(a, b):
    """Largest distance under the best one-to-one pairing of two small sets."""
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("multisets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if len(r) else 0.0


def cluster_values(values, tol):
    """Group values whose single-linkage distance is within ``tol``.

    Returns a list of index arrays, ordered by first appearance.
    """
    values = np.asarray(values)
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in sorted(groups.values(), key=lambda g: g[0])]


def inverse_iteration(A, mu, steps=4):
    """Right eigenvector of ``A`` for the (simple) eigenvalue near ``mu``."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    scale = 1.0 + np.linalg.norm(A)
    shift = mu + 1e-10 * scale
    B = A - shift * np.eye(n)
    x = np.ones(n, dtype=np.complex128) / np.sqrt(n)
    for _ in range(steps):
        try:
            y = np.linalg.solve(B, x)
        except np.linalg.LinAlgError:
            B = B + 1e-12 * scale * np.eye(n)
            y = np.linalg.solve(B, x)
        nrm = np.linalg.norm(y)
        if nrm == 0.0 or not np.isfinite(nrm):
            raise NumericalFailureError("inverse iteration broke down")
        x = y / nrm
    # fix the phase: largest component real positive
    k = int(np.argmax(np.abs(x)))
    return x * (abs(x[k]) / x[k])
