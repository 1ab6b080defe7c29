import os
import subprocess
import sys

import numpy as np
import pytest

from thresholdlab import _backend
from thresholdlab.banded import BandedMatrix, lu_factor


def test_env_flag_selects_numpy():
    env = dict(os.environ, THRESHOLDLAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from thresholdlab import _backend; print(_backend.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


@pytest.fixture
def restore_backend():
    saved = _backend.backend()
    yield
    _backend.set_backend(saved)


def test_backends_agree(restore_backend):
    rng = np.random.default_rng(5)
    n, kl, ku = 300, 4, 3
    A = np.zeros((n, n), complex)
    for off in range(-kl, ku + 1):
        A += np.diag(rng.standard_normal(n - abs(off)) + 1j * rng.standard_normal(n - abs(off)), off)
    b = rng.standard_normal(n) + 0j
    out = {}
    for name in ("numpy", "numba") if _backend.HAVE_NUMBA else ("numpy",):
        _backend.set_backend(name)
        M = BandedMatrix.from_dense(A, kl, ku)
        out[name] = (M.matvec(b), lu_factor(M).solve(b))
    for mv, x in out.values():
        np.testing.assert_allclose(mv, A @ b, atol=1e-12)
        np.testing.assert_allclose(A @ x, b, atol=1e-9)


def test_unknown_backend_rejected(restore_backend):
    with pytest.raises(ValueError):
        _backend.set_backend("fortran")
