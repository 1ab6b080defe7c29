import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thresholdlab.errors import InvalidArgumentError
from thresholdlab.overlaps import (
    AxialKernel,
    Regime,
    TruncationWarning,
    axial_profiles,
    build_M1,
    build_M2,
    build_threshold_matrices,
    mode_matrix_element,
    overlap_matrix,
    radiating_integrals,
)
from thresholdlab.perturbation import PerturbationPair, PotentialSpec
from thresholdlab.transverse import (
    build_manufactured_spectrum,
    build_oscillator_spectrum,
    build_strip_spectrum,
    group_containing,
)


def test_first_order_closed_forms(strip, bottom_pair, embedded_pair):
    assert build_M1(strip, group_containing(strip, 1), bottom_pair.V1)[0, 0] == pytest.approx(
        16 / (15 * np.pi), abs=1e-12)
    assert build_M1(strip, group_containing(strip, 2), embedded_pair.V1)[0, 0] == pytest.approx(
        64 / (15 * np.pi), abs=1e-12)


def test_square_well_second_order(strip, well_pair):
    # only channel 1 couples; its linear kernel gives -1/2 iint |x-t| = -4/3 over [-1,1]^2
    g = group_containing(strip, 1)
    tm = build_threshold_matrices(strip, g, well_pair)
    assert tm.M1[0, 0] == pytest.approx(1.0, abs=1e-13)
    assert tm.M2[1][0, 0] == pytest.approx(2 / 3, abs=1e-12)
    assert tm.tail_estimate < 1e-12


def test_bottom_second_order_is_real_and_branch_free(strip, bottom_pair):
    tm = build_threshold_matrices(strip, group_containing(strip, 1), bottom_pair)
    assert np.array_equal(tm.M2[1], tm.M2[-1])
    assert abs(tm.M2[1][0, 0].imag) < 1e-14
    assert tm.M2[1][0, 0].real == pytest.approx(-0.16085869, abs=1e-7)


def test_jmax_doubling_within_tail_estimate(strip):
    g = group_containing(strip, 1)
    bottom_pair = PerturbationPair(PotentialSpec.box_constant(-1.0, (0.0, 1.0), (-1.0, 1.0)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        a, tail = build_M2(strip, g, bottom_pair, 1, jmax=32)
        b, _ = build_M2(strip, g, bottom_pair, 1, jmax=64)
    assert 0 < abs(a - b).max() <= tail


def test_truncation_warning(bottom_pair):
    strip = build_strip_spectrum(2)
    # a box localized in x1 couples to every channel
    pair = PerturbationPair(PotentialSpec.box_constant(-1.0, (0.0, 1.0), (-1.0, 1.0)))
    with pytest.warns(TruncationWarning):
        build_M2(strip, group_containing(strip, 1), pair, 1, jmax=4)
    # sin x1 and sin 3x1 reach modes 1..4 only: the sum is exact at jmax = 4
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        _, tail = build_M2(strip, group_containing(strip, 1), bottom_pair, 1, jmax=4)
    assert tail == 0.0


def test_pt_conjugation_of_branches(strip, embedded_pair):
    tm = build_threshold_matrices(strip, group_containing(strip, 2), embedded_pair)
    assert np.max(np.abs(tm.M1.imag)) <= 1e-12
    assert np.max(np.abs(tm.M2[1] - tm.M2[-1].conj())) <= 1e-12
    assert tm.M2[1][0, 0].imag != 0


def test_radiating_integral_closed_form(strip, embedded_pair):
    # U_1(x2) = 3i (32 / (15 pi)) sin x2; the W1 overlap integrates to zero
    g = group_containing(strip, 2)
    vals = radiating_integrals(strip, g, embedded_pair.V1, [1.0])
    a = np.sqrt(3.0)
    S = np.sin((a - 1) * np.pi) / (a - 1) - np.sin((a + 1) * np.pi) / (a + 1)
    c = 96 / (15 * np.pi) * S
    assert vals.shape == (1, 2)
    assert vals[0, 0] == pytest.approx(c, abs=1e-11)
    assert vals[0, 1] == pytest.approx(-c, abs=1e-11)


def test_radiating_integrals_vanish_for_axial_potential(strip):
    V = PotentialSpec.box_constant(-1.0, (0, np.pi), (-1, 1))
    vals = radiating_integrals(strip, group_containing(strip, 3), V, [1.0])
    assert np.max(np.abs(vals)) < 1e-13


@given(st.integers(1, 6), st.integers(1, 6))
def test_matrix_element_symmetry_for_real_potential(i, j):
    sp = build_oscillator_spectrum(6)
    V = PotentialSpec.box_constant(0.7, (-1.0, 2.0), (-0.5, 0.5))
    assert mode_matrix_element(sp, i, j, V) == pytest.approx(mode_matrix_element(sp, j, i, V), abs=1e-13)


def test_oscillator_box_overlap():
    from scipy.special import erf

    sp = build_oscillator_spectrum(2)
    V = PotentialSpec.box_constant(1.0, (-1.0, 1.0), (-0.5, 0.5))
    # <psi_1 V psi_1> = int_{-1}^{1} exp(-x^2)/sqrt(pi) dx * 1
    assert mode_matrix_element(sp, 1, 1, V) == pytest.approx(erf(1.0), abs=1e-13)


def test_kernel_regimes():
    assert AxialKernel.for_channel(9.0, 4.0, 1).regime is Regime.DECAYING
    assert AxialKernel.for_channel(4.0, 4.0, 1).regime is Regime.LINEAR
    k = AxialKernel.for_channel(1.0, 4.0, -1)
    assert k.regime is Regime.OSCILLATORY and k.kappa == pytest.approx(np.sqrt(3))
    # exp(i tau kappa d) / (-2 i tau kappa) with tau = -1
    d = 0.8
    assert k(d) == pytest.approx(np.exp(-1j * np.sqrt(3) * d) / (2j * np.sqrt(3)))
    assert AxialKernel.for_channel(4.0, 4.0, 1)(2.0) == -1.0
    with pytest.raises(InvalidArgumentError):
        AxialKernel.for_channel(1.0, 4.0, 0)


def test_manufactured_degenerate_group(sine_table):
    x, rows = sine_table
    sp = build_manufactured_spectrum([1.0, 4.0, 4.0], x, rows)
    g = group_containing(sp, 2)
    V = PotentialSpec.trig_series([1.0, 0.5, 1.0], [0.3, 0.7])
    M1 = build_M1(sp, g, V)
    assert M1.shape == (2, 2)
    ref = -0.5 * overlap_matrix(sp, g, V)
    assert np.allclose(M1, ref)
    prof = axial_profiles(sp, g, V)
    assert prof.jmax == 3  # limited to the tabulated modes


def test_zero_potential_gives_zero_matrices(strip):
    pair = PerturbationPair(PotentialSpec.zero())
    tm = build_threshold_matrices(strip, group_containing(strip, 2), pair)
    assert np.all(tm.M1 == 0) and np.all(tm.M2[1] == 0)
