"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary under "acceptance criteria".
"""
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import ACCEPTANCE_LINES
from thresholdlab.asymptotics import Kind, compute_Q_r_gamma, decompose_M1, matrix_pole_refine, predict_group
from thresholdlab.banded import BandedMatrix, lu_factor
from thresholdlab.dense_eig import charpoly, durand_kerner, match_multisets, qr_eigvals
from thresholdlab.direct_solver import SolverSettings, find_emergent_state
from thresholdlab.perturbation import PerturbationPair, PotentialSpec, check_pt_symmetry
from thresholdlab.quadrature import panel_edges, panel_rule
from thresholdlab.transverse import build_manufactured_spectrum, group_containing


def report(number, title, checks):
    ok = all(passed for _, passed, _ in checks)
    detail = "; ".join(f"{name} {'ok' if passed else 'FAILED'} ({info})" for name, passed, info in checks)
    line = f"criterion {number} [{title}]: {'PASS' if ok else 'FAIL'} | {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@pytest.fixture(scope="module")
def manufactured(sine_table):
    x, rows = sine_table
    sp = build_manufactured_spectrum([1.0, 4.0, 4.0], x, rows)
    return sp, group_containing(sp, 2)


@pytest.fixture(scope="module")
def coupling_pair():
    return PerturbationPair(PotentialSpec.trig_series([1.0, 0.5, 1.0], [0.3, 0.7]))


def test_criterion_1_bottom_threshold(strip, bottom_pair):
    t0 = time.perf_counter()
    g = group_containing(strip, 1)
    gp = predict_group(strip, g, bottom_pair)
    pred = gp.predictions[1][0]
    mu_err = abs(gp.matrices.M1[0, 0] - 16 / (15 * np.pi))
    eps = [0.05, 0.1, 0.15, 0.2]
    lam, e1, e2 = [], [], []
    for e in eps:
        found = find_emergent_state(strip, bottom_pair, e, g, pred, SolverSettings(n1=64, n2=1500)).found
        lam.append(np.nan if found is None else found.lam)
        e1.append(abs(lam[-1] - pred.lam_leading(e)))
        e2.append(abs(lam[-1] - pred.lam(e)))
    lam = np.array(lam)
    runtime = time.perf_counter() - t0
    real_below = bool(np.all(np.isfinite(lam)) and np.all(lam.real < 1.0) and np.all(np.abs(lam.imag) <= 1e-7))
    slope = loglog_slope(eps, e2) if real_below else np.nan
    report(1, "bottom threshold", [
        ("mu closed form", mu_err <= 1e-8, f"|mu - 16/(15 pi)| = {mu_err:.1e}"),
        ("classified", pred.kind is Kind.EIGENVALUE, pred.kind.value),
        ("real eigenvalues below 1", real_below,
         f"lambda = {', '.join(f'{z.real:.9f}' for z in lam)}; max |Im| = {np.nanmax(np.abs(lam.imag)):.1e}"),
        ("two-term closer", bool(np.all(np.array(e2) <= np.array(e1))),
         f"errors asym1 {', '.join(f'{v:.2e}' for v in e1)} vs asym2 {', '.join(f'{v:.2e}' for v in e2)}"),
        ("slope", slope >= 2.5, f"{slope:.2f} >= 2.5"),
        ("runtime", runtime <= 300, f"{runtime:.0f} s <= 300 s"),
    ])


def test_criterion_2_embedded_threshold(strip, embedded_pair):
    t0 = time.perf_counter()
    g = group_containing(strip, 2)
    gp = predict_group(strip, g, embedded_pair)
    plus, minus = gp.predictions[1][0], gp.predictions[-1][0]
    mu_err = abs(plus.pole.mu - 64 / (15 * np.pi))
    conj_pred = abs(plus.lam(0.2) - np.conj(minus.lam(0.2)))
    eps = [0.1, 0.2, 0.3]
    settings = SolverSettings(n1=16)
    pairs, tails, e1, e2 = [], [], [], []
    for e in eps:
        a = find_emergent_state(strip, embedded_pair, e, g, plus, settings).found
        b = find_emergent_state(strip, embedded_pair, e, g, minus, settings).found
        if a is None or b is None:
            pairs.append((np.nan, np.nan))
            tails.append(np.nan)
            e1.append(np.nan)
            e2.append(np.nan)
            continue
        pairs.append((a.lam, b.lam))
        tails.append(max(a.tail_mass, b.tail_mass))
        e1.append(abs(a.lam - plus.lam_leading(e)))
        e2.append(abs(a.lam - plus.lam(e)))
    runtime = time.perf_counter() - t0
    lam = np.array([p[0] for p in pairs])
    conj_gap = max(abs(p[0] - np.conj(p[1])) for p in pairs)
    found = bool(np.all(np.isfinite(lam)))
    slope = loglog_slope(eps, e2) if found else np.nan
    report(2, "embedded threshold", [
        ("mu closed form", mu_err <= 1e-8, f"|mu - 64/(15 pi)| = {mu_err:.1e}"),
        ("both branches eigenvalues", plus.kind is Kind.EIGENVALUE and minus.kind is Kind.EIGENVALUE,
         f"{plus.clause}, {minus.clause}"),
        ("predicted conjugate", conj_pred <= 1e-12, f"{conj_pred:.1e}"),
        ("conjugate direct pair", found and conj_gap <= 1e-8, f"gap {conj_gap:.1e}"),
        ("embedded complex", found and bool(np.all(np.abs(lam.imag) > 1e-6) and np.all((lam.real > 1) & (lam.real < 4))),
         "lambda = " + ", ".join(f"{z.real:.6f}{z.imag:+.6f}i" for z in lam)),
        ("localized", found and max(tails) < 0.05, f"max tail mass {np.nanmax(tails):.2e}"),
        ("two-term closer", found and bool(np.all(np.array(e2) <= np.array(e1))),
         f"errors asym1 {', '.join(f'{v:.2e}' for v in e1)} vs asym2 {', '.join(f'{v:.2e}' for v in e2)}"),
        ("slope", slope >= 2.5, f"{slope:.2f} >= 2.5"),
        ("runtime", runtime <= 600, f"{runtime:.0f} s <= 600 s"),
    ])


def test_criterion_3_square_well(strip, well_pair):
    gp = predict_group(strip, group_containing(strip, 1), well_pair)
    pole = gp.expansions[1][0]
    eps = np.array([0.01, 0.02, 0.04])

    def exact_kappa(e):
        # even bound state of -u'' - e chi u = -kappa^2 u: q tan q = kappa, q^2 = e - kappa^2
        f = lambda k: np.sqrt(e - k * k) * np.tan(np.sqrt(e - k * k)) - k
        return brentq(f, 1e-14, np.sqrt(e) * (1 - 1e-14), xtol=1e-15, rtol=1e-15)

    kappa = np.array([exact_kappa(e) for e in eps])
    C = np.abs(kappa - eps) / eps ** 2
    spread = C.max() / C.min() - 1
    third = np.abs(kappa - np.array([pole.k(e) for e in eps]).real) / eps ** 3
    report(3, "square-well reduction", [
        ("mu = 1", abs(pole.mu - 1) <= 1e-12, f"mu = {pole.mu.real:.15f}"),
        ("gamma = 2/3", abs(pole.gamma - 2 / 3) <= 1e-10, f"gamma = {pole.gamma.real:.12f}"),
        ("stable C", spread <= 0.25, "C = " + ", ".join(f"{c:.5f}" for c in C) + f"; spread {spread:.1%}"),
        ("second order", bool(np.all(third < 10)), "|kappa - k| / eps^3 = " + ", ".join(f"{t:.3f}" for t in third)),
    ])


def test_criterion_4_degenerate_pole_count(manufactured, coupling_pair):
    sp, g = manufactured
    gp = predict_group(sp, g, coupling_pair)
    counts = {t: len(gp.expansions[t]) for t in gp.taus}
    eps = np.logspace(-3, -2, 5)
    slopes, targets = [], []
    for t in gp.taus:
        for i, ex in enumerate(gp.expansions[t]):
            err = [abs(gp.refined_k(t, e)[i] - ex.k(e)) for e in eps]
            slopes.append(loglog_slope(eps, err))
            targets.append(ex.remainder_order)
    slope_ok = all(abs(s - r) <= 0.4 for s, r in zip(slopes, targets))
    e = 0.05
    roots = np.concatenate([gp.refined_k(t, e) for t in gp.taus])
    distinct = len({tuple(np.round([z.real, z.imag], 10)) for z in roots})
    # second case: x1-independent well makes M1 a multiple of the identity (one 2-fold cluster)
    well = PerturbationPair(PotentialSpec.box_constant(-1.0, (0.0, np.pi), (-1.0, 1.0)))
    gw = predict_group(sp, g, well)
    ew = gw.expansions[1]
    errw = [np.max(np.abs(gw.refined_k(1, x) - [p.k(x) for p in ew])) for x in eps]
    sw = loglog_slope(eps, errw)
    report(4, "degenerate threshold", [
        ("n poles per branch", all(c == 2 for c in counts.values()), f"{counts}"),
        ("series vs refined", slope_ok,
         "slopes " + ", ".join(f"{s:.2f}/{r:.0f}" for s, r in zip(slopes, targets))),
        ("distinct poles", distinct == 2 * g.multiplicity, f"{distinct} of at most {2 * g.multiplicity}"),
        ("double cluster", len(ew) == 2 and ew[0].q == 2 and abs(sw - ew[0].remainder_order) <= 0.4,
         f"q = {ew[0].q}, r = {ew[0].r}, slope {sw:.2f} vs {ew[0].remainder_order:.0f}"),
    ])


def test_criterion_5_pt_conjugation(strip, bottom_pair, embedded_pair, manufactured, coupling_pair):
    sp_m, g_m = manufactured
    configs = {
        "bottom": (strip, group_containing(strip, 1), bottom_pair),
        "embedded": (strip, group_containing(strip, 2), embedded_pair),
        "degenerate": (sp_m, g_m, coupling_pair),
    }
    checks = []
    for name, (sp, g, pair) in configs.items():
        assert check_pt_symmetry(pair.V1)
        gp = predict_group(sp, g, pair)
        M = gp.matrices
        im1 = float(np.max(np.abs(M.M1.imag)))
        m2 = float(np.max(np.abs(M.M2[1] - np.conj(M.M2[-1]))))
        gaps = []
        for e in (0.01, 0.1, 0.3):
            a = matrix_pole_refine(M.M1, M.M2[1], e)
            b = matrix_pole_refine(M.M1, M.M2[-1], e)
            gaps.append(match_multisets(a, np.conj(b)))
        checks.append((f"{name} matrices", im1 <= 1e-10 and m2 <= 1e-10, f"Im M1 {im1:.1e}, M2 gap {m2:.1e}"))
        checks.append((f"{name} refined poles", max(gaps) <= 1e-9, f"{max(gaps):.1e}"))
    # direct spectra
    g = group_containing(strip, 2)
    gp = predict_group(strip, g, embedded_pair)
    gaps = []
    for e in (0.2, 0.3):
        a = find_emergent_state(strip, embedded_pair, e, g, gp.predictions[1][0], SolverSettings(n1=16))
        b = find_emergent_state(strip, embedded_pair, e, g, gp.predictions[-1][0], SolverSettings(n1=16))
        la = np.array([c.lam for c in a.candidates])
        lb = np.array([c.lam for c in b.candidates])
        gaps.append(match_multisets(la, np.conj(lb)) if len(la) == len(lb) else np.inf)
    checks.append(("embedded direct spectra", max(gaps) <= 1e-8, f"{max(gaps):.1e}"))
    gb = group_containing(strip, 1)
    pb = predict_group(strip, gb, bottom_pair).predictions[1][0]
    cand = find_emergent_state(strip, bottom_pair, 0.2, gb, pb, SolverSettings(n1=32)).candidates
    imag = max(abs(c.lam.imag) for c in cand)
    checks.append(("bottom direct spectra", imag <= 1e-8, f"max |Im| {imag:.1e}"))
    report(5, "PT conjugation", checks)


def test_criterion_6_classification_sanity(strip, well_pair):
    g = group_containing(strip, 1)
    attract = predict_group(strip, g, well_pair)
    repel_pair = PerturbationPair(well_pair.V1.negated())
    repel = predict_group(strip, g, repel_pair)
    pa, pr = attract.predictions[1][0], repel.predictions[1][0]
    exact_flip = np.array_equal(repel.matrices.M1, -attract.matrices.M1) and abs(pa.pole.mu) == abs(pr.pole.mu)
    found, absent = [], []
    for e in (0.1, 0.2):
        fa = find_emergent_state(strip, well_pair, e, g, pa, SolverSettings(n1=32)).found
        found.append(fa is not None and fa.lam.real < 1.0 and abs(fa.lam.imag) < 1e-9)
        sr = find_emergent_state(strip, repel_pair, e, g, pr, SolverSettings(n1=32))
        absent.append(sr.absent)
    report(6, "classification sanity", [
        ("attractive box", pa.kind is Kind.EIGENVALUE, pa.clause),
        ("repulsive box", pr.kind is Kind.RESONANCE, pr.clause),
        ("exchanged under sign flip", exact_flip, "M1 negated bitwise, |mu| equal"),
        ("direct eigenvalue below 1", all(found), f"{found}"),
        ("absence for resonance", all(absent), f"{absent}"),
    ])


def test_criterion_7_kernels():
    rng = np.random.default_rng(2024)
    # quadrature: degree-63 polynomials on each panel
    edges = panel_edges(-1.3, 2.1, (0.2, 0.9), max_length=0.7)
    x, w = panel_rule(edges, 32)
    worst = 0.0
    for _ in range(5):
        c = rng.standard_normal(64)
        p = np.polynomial.Polynomial(c, domain=[-1.3, 2.1], window=[-1, 1])
        exact = p.integ()(2.1) - p.integ()(-1.3)
        worst = max(worst, abs(np.sum(w * p(x)) - exact) / max(1.0, abs(exact)))
    # banded LU reconstruction
    lu_err = 0.0
    for n, kl, ku in ((2000, 3, 2), (500, 16, 16), (1200, 1, 7)):
        A = np.zeros((n, n), complex)
        for off in range(-kl, ku + 1):
            A += np.diag(rng.standard_normal(n - abs(off)) + 1j * rng.standard_normal(n - abs(off)), off)
        lu = lu_factor(BandedMatrix.from_dense(A, kl, ku))
        lu_err = max(lu_err, np.max(np.abs(lu.reconstruct() - A)) / np.linalg.norm(A, np.inf))
    # QR eigenvalues against characteristic-polynomial roots
    qr_err = 0.0
    for _ in range(20):
        A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        qr_err = max(qr_err, match_multisets(qr_eigvals(A), durand_kerner(charpoly(A))))
    # Q against the finite-difference derivative of the determinant
    q_err = 0.0
    for _ in range(10):
        n = int(rng.integers(1, 5))
        M1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        M2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        qd = compute_Q_r_gamma(M1, M2, decompose_M1(M1), 0)
        for z in rng.standard_normal(5) + 1j * rng.standard_normal(5):
            h = 1e-6
            fd = (np.linalg.det(z * np.eye(n) - M1 + h * M2) - np.linalg.det(z * np.eye(n) - M1 - h * M2)) / (2 * h)
            q_err = max(q_err, abs(qd(z) - fd) / max(abs(fd), 1e-300))
    report(7, "numerical kernels", [
        ("quadrature degree 63", worst <= 1e-12, f"{worst:.1e}"),
        ("banded LU", lu_err <= 1e-10, f"{lu_err:.1e} relative to |A|"),
        ("QR vs Durand-Kerner", qr_err <= 1e-9, f"{qr_err:.1e}"),
        ("Q vs finite differences", q_err <= 1e-6, f"{q_err:.1e} relative"),
    ])
