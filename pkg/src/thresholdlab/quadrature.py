"""Panelized Gauss-Legendre quadrature in one and two variables.

Double integrals of kernels that depend on ``|x - t|`` are split along the
diagonal: off-diagonal panel pairs use the tensor rule, diagonal panels are
cut into two triangles mapped onto the unit square (Duffy map), with the
integrand values at the off-node triangle points recovered by barycentric
interpolation from the panel nodes.
"""
from functools import lru_cache

import numpy as np

DEFAULT_ORDER = 32


@lru_cache(maxsize=None)
def gauss_legendre(order):
    """Nodes and weights of the ``order``-point rule on [-1, 1]."""
    if order < 1:
        raise ValueError("order must be positive")
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_edges(a, b, breakpoints=(), max_length=None):
    """Panel boundaries on [a, b] through every breakpoint inside (a, b).

    Each stretch between consecutive breakpoints is divided evenly so that
    no panel exceeds ``max_length``.
    """
    if not b > a:
        raise ValueError("need b > a")
    pts = [a] + sorted(float(p) for p in breakpoints if a < p < b) + [b]
    edges = [pts[0]]
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo <= 1e-14 * max(1.0, abs(hi)):
            continue
        n = 1
        if max_length is not None:
            n = max(1, int(np.ceil((hi - lo) / max_length - 1e-12)))
        edges.extend(np.linspace(lo, hi, n + 1)[1:])
    return np.asarray(edges, dtype=float)


def panel_rule(edges, order=DEFAULT_ORDER):
    """Composite rule over the panels delimited by ``edges``.

    Returns ``(nodes, weights)``; nodes of panel ``k`` occupy the slice
    ``k*order:(k+1)*order``.
    """
    x, w = gauss_legendre(order)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def integrate(f, a, b, breakpoints=(), order=DEFAULT_ORDER, max_length=None):
    """Integrate a vectorized callable over [a, b]."""
    nodes, weights = panel_rule(panel_edges(a, b, breakpoints, max_length), order)
    return np.sum(weights * f(nodes))


def barycentric_matrix(nodes, targets):
    """Matrix ``P`` with ``P @ values(nodes) = interpolant(targets)``."""
    nodes = np.asarray(nodes, dtype=float)
    targets = np.asarray(targets, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / np.prod(diff, axis=1)
    bw /= np.max(np.abs(bw))
    d = targets[:, None] - nodes[None, :]
    exact = np.isclose(d, 0.0, rtol=0.0, atol=1e-15)
    d[exact] = 1.0
    terms = bw[None, :] / d
    P = terms / terms.sum(axis=1, keepdims=True)
    rows = np.nonzero(exact.any(axis=1))[0]
    for r in rows:
        P[r] = exact[r].astype(float)
    return P


@lru_cache(maxsize=None)
def _triangle_template(order):
    """Duffy-map data on the reference panel [0, 1].

    Lower triangle t < x: x = u, t = u*v, Jacobian u.  Returns the weights
    ``w_u w_v u`` (order x order), the separations ``u (1 - v)`` and the
    interpolation matrix from the u-nodes to the points ``u v``.
    """
    x, w = gauss_legendre(order)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    W = (wu * u)[:, None] * wu[None, :]
    sep = u[:, None] * (1.0 - u[None, :])
    P = barycentric_matrix(u, (u[:, None] * u[None, :]).ravel())
    for arr in (W, sep, P):
        arr.setflags(write=False)
    return W, sep, P


def kernel_double_integral(edges, kernel, f, g, order=DEFAULT_ORDER):
    """Approximate the double integral of ``kernel(|x-t|) f(x) g(t)``.

    Parameters
    ----------
    edges : array
        Panel boundaries; ``f`` and ``g`` are tabulated on the matching
        :func:`panel_rule` nodes (last axis).
    kernel : callable
        Vectorized function of the non-negative separation ``|x - t|``.
    f, g : array, shape (..., n_nodes)
        Batched integrand factors; leading axes broadcast.

    Returns
    -------
    array with the broadcast leading shape of ``f`` and ``g``.
    """
    edges = np.asarray(edges, dtype=float)
    npan = len(edges) - 1
    nodes, weights = panel_rule(edges, order)
    f = np.asarray(f)
    g = np.asarray(g)

    # off-diagonal panel pairs: tensor rule with same-panel blocks masked
    K = kernel(np.abs(nodes[:, None] - nodes[None, :]))
    K = K * (weights[:, None] * weights[None, :])
    panel_id = np.repeat(np.arange(npan), order)
    K = np.where(panel_id[:, None] == panel_id[None, :], 0.0, K)
    total = np.einsum("...i,ij,...j->...", f, K, g)

    W, sep, P = _triangle_template(order)
    fs = f.reshape(f.shape[:-1] + (npan, order))
    gs = g.reshape(g.shape[:-1] + (npan, order))
    # interpolated values at the points c + L u v, shape (..., npan, order, order)
    f_in = np.einsum("pk,...ak->...ap", P, fs).reshape(fs.shape + (order,))
    g_in = np.einsum("pk,...ak->...ap", P, gs).reshape(gs.shape + (order,))
    lengths = np.diff(edges)
    Kt = kernel(lengths[:, None, None] * sep[None]) * (lengths[:, None, None] ** 2 * W[None])
    # lower triangle: f at node u, g at u v; upper triangle: roles swapped
    total = total + np.einsum("auv,...au,...auv->...", Kt, fs, g_in)
    total = total + np.einsum("auv,...au,...auv->...", Kt, gs, f_in)
    return total
