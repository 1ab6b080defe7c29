import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thresholdlab.errors import InvalidArgumentError, OrthonormalityError
from thresholdlab.transverse import (
    Geometry,
    build_manufactured_spectrum,
    build_oscillator_spectrum,
    build_strip_spectrum,
    group_containing,
    group_thresholds,
    hermite_polynomial,
    load_mode_table,
)


def test_strip_eigenvalues_and_values():
    sp = build_strip_spectrum(5)
    assert list(sp.eigenvalues) == [1, 4, 9, 16, 25]
    assert sp.eigenvalue(12) == 144.0
    x = np.array([np.pi / 2])
    assert sp.modes[0](x)[0] == pytest.approx(np.sqrt(2 / np.pi))
    assert sp.values(3, np.array([-0.1, 4.0])).sum() == 0.0  # zero outside (0, pi)


@pytest.mark.parametrize("build", [build_strip_spectrum, build_oscillator_spectrum])
def test_gram_is_identity(build):
    sp = build(12)
    assert np.max(np.abs(sp.gram() - np.eye(12))) < 1e-12


def test_oscillator_matches_hermite_closed_form():
    sp = build_oscillator_spectrum(6)
    x = np.linspace(-3, 3, 11)
    for n in range(6):
        norm = 1.0 / np.sqrt(2.0 ** n * math.factorial(n) * np.sqrt(np.pi))
        ref = norm * hermite_polynomial(n, x) * np.exp(-x * x / 2)
        assert np.allclose(sp.modes[n](x), ref, atol=1e-13)
    assert list(sp.eigenvalues) == [1, 3, 5, 7, 9, 11]


def test_oscillator_high_index_is_finite():
    sp = build_oscillator_spectrum(1)
    vals = sp.values(200, np.linspace(-25, 25, 101))
    assert np.all(np.isfinite(vals))


@given(st.integers(1, 30))
def test_eigenvalue_formulas(j):
    assert build_strip_spectrum(1).eigenvalue(j) == j * j
    assert build_oscillator_spectrum(1).eigenvalue(j) == 2 * j - 1


def test_invalid_mode_count():
    for bad in (0, -3, 2.5):
        with pytest.raises(InvalidArgumentError):
            build_strip_spectrum(bad)


def test_manufactured_accepts_orthonormal_table(sine_table):
    x, rows = sine_table
    sp = build_manufactured_spectrum([1.0, 4.0, 4.0], x, rows)
    assert sp.geometry is Geometry.MANUFACTURED and not sp.unbounded
    assert np.max(np.abs(sp.gram() - np.eye(3))) < 1e-9
    with pytest.raises(InvalidArgumentError):
        sp.eigenvalue(4)


def test_manufactured_rejects_non_orthonormal(sine_table):
    x, rows = sine_table
    bad = rows.copy()
    bad[1] *= 1.01
    with pytest.raises(OrthonormalityError) as info:
        build_manufactured_spectrum([1.0, 4.0, 9.0], x, bad)
    assert info.value.pair == (2, 2)


def test_manufactured_rejects_decreasing_eigenvalues(sine_table):
    x, rows = sine_table
    with pytest.raises(InvalidArgumentError):
        build_manufactured_spectrum([4.0, 1.0, 9.0], x, rows)


def test_group_thresholds_degenerate(sine_table):
    x, rows = sine_table
    sp = build_manufactured_spectrum([1.0, 4.0, 4.0 + 1e-12], x, rows)
    groups = group_thresholds(sp)
    assert [(g.start, g.multiplicity) for g in groups] == [(1, 1), (2, 2)]
    assert group_containing(sp, 2).indices == (2, 3)
    with pytest.raises(InvalidArgumentError):
        group_containing(sp, 3)
    with pytest.raises(InvalidArgumentError):
        group_containing(sp, 7)


def test_group_tolerance_argument(sine_table):
    x, rows = sine_table
    sp = build_manufactured_spectrum([1.0, 4.0, 4.001], x, rows)
    assert len(group_thresholds(sp)) == 3
    assert len(group_thresholds(sp, tol=0.01)) == 2
    with pytest.raises(InvalidArgumentError):
        group_thresholds(sp, tol=0.0)


@pytest.mark.parametrize("sep", [" ", ","])
def test_load_mode_table(tmp_path, sep):
    x = np.linspace(0, 1, 5)
    path = tmp_path / "modes.txt"
    lines = [sep.join(["x", "a", "b"])] + [sep.join(repr(float(c)) for c in (v, v ** 2, -v)) for v in x]
    path.write_text("\n".join(lines) + "\n")
    grid, samples = load_mode_table(path)
    assert np.allclose(grid, x) and np.allclose(samples[0], x ** 2) and samples.shape == (2, 5)


def test_load_mode_table_bad_header(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("y a\n0 1\n")
    with pytest.raises(InvalidArgumentError):
        load_mode_table(path)
