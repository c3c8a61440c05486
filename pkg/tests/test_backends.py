"""numba/numpy backend parity for the hot assembly kernels."""

import numpy as np
import pytest

from hartree_lab import accel
from hartree_lab.grid import RadialGrid
from hartree_lab.morawetz import (_pair_matrix_numba, _pair_matrix_numpy,
                                  build_weight)
from hartree_lab.riesz import (_GL_X, _GL_W, NEAR_BAND, _assemble_numba,
                               _assemble_numpy)


def test_backend_flag_reports():
    assert accel.backend() in ("numba", "numpy")


@pytest.mark.skipif(not accel.using_numba(), reason="numba unavailable/disabled")
def test_kernel_assembly_parity():
    g = RadialGrid(30.0, 255)
    for gamma in (0.6, 1.0, 2.0, 2.8):
        K1 = _assemble_numba(gamma, g.nodes, g.dr, _GL_X, _GL_W, NEAR_BAND)
        K2 = _assemble_numpy(gamma, g.nodes, g.dr)
        scale = np.abs(K1).max()
        assert np.abs(K1 - K2).max() <= 1e-9 * scale


@pytest.mark.skipif(not accel.using_numba(), reason="numba unavailable/disabled")
def test_pair_matrix_parity():
    g = RadialGrid(30.0, 255)
    w = build_weight(10.0, g)
    for gamma in (0.8, 1.0, 2.0):
        M1 = _pair_matrix_numba(gamma, g.nodes, g.dr, w.phi, w.phip)
        M2 = _pair_matrix_numpy(gamma, g.nodes, g.dr, w.phi, w.phip)
        scale = np.abs(M1).max()
        assert np.abs(M1 - M2).max() <= 1e-9 * scale
