import math

import numpy as np
import pytest

import perspec as ps
from perspec.eigensolve import (dispersion, eigenfunction, growth_slope,
                                scan_and_refine)
from perspec.errors import StaleEigenvalueError, ValidationError
from perspec.shooting import SolverConfig

PI = math.pi


class TestDispersion:
    def test_zero_is_an_exact_root(self, sine_model):
        d = dispersion(sine_model, 0.0)
        assert d.D == 0.0
        assert d.phi_plus == 1.0 and d.phi_minus == 1.0

    def test_antisymmetry_is_exact(self, sine_model):
        for lam in (0.8, 2.5, 7.1):
            a = dispersion(sine_model, lam)
            b = dispersion(sine_model, -lam)
            assert b.D == -a.D

    def test_no_root_below_first_eigenvalue(self, sine_model):
        # the first positive eigenvalue sits near 1.24; 0.5 is far from it
        d = dispersion(sine_model, 0.5)
        assert abs(d.D) > 1e-3

    def test_purely_imaginary_for_real_lambda(self, sine_model):
        for lam in (0.5, 3.3, 9.0):
            d = dispersion(sine_model, lam)
            assert d.D.real == 0.0


class TestScan:
    def test_contains_zero_with_tiny_residual(self, scan_8):
        k = np.argmin(np.abs(scan_8.eigenvalues))
        assert abs(scan_8.eigenvalues[k]) < 1e-10
        assert scan_8.residuals[k] < 1e-12

    def test_matches_independent_reference(self, scan_8, reference_eigs):
        pos = scan_8.positive()
        assert len(pos) == len(reference_eigs)
        np.testing.assert_allclose(pos, reference_eigs, atol=1e-5)

    def test_negation_symmetry(self, scan_8):
        eigs = scan_8.eigenvalues
        np.testing.assert_allclose(np.sort(eigs), np.sort(-eigs)[::-1] * -1, atol=0)
        for lam in eigs[eigs > 0]:
            assert np.min(np.abs(eigs + lam)) < 1e-8

    def test_indicator_detected_and_real(self, scan_8):
        assert scan_8.indicator == "imag"
        assert scan_8.max_off_component == 0.0

    def test_resolution_halving_keeps_all_roots(self, sine_model, scan_8):
        coarse = scan_and_refine(sine_model, 8.0, 0.1)
        fine = scan_8
        for lam in coarse.positive():
            assert np.min(np.abs(fine.positive() - lam)) < 1e-7

    def test_input_validation(self, sine_model):
        with pytest.raises(ValidationError):
            scan_and_refine(sine_model, -5.0, 0.05)
        with pytest.raises(ValidationError):
            scan_and_refine(sine_model, 5.0, 0.0)

    def test_growth_slope_positive_curvature(self, scan_8):
        slope = growth_slope(scan_8)
        assert 1.0 < slope < 2.4


class TestEigenfunction:
    def test_zero_eigenvalue_constant_trace(self, sine_model):
        tr = eigenfunction(sine_model, 0.0)
        assert np.max(np.abs(tr.values - 1.0)) < 1e-10
        assert np.max(np.abs(tr.values)) == 1.0

    def test_periodic_matching_at_refined_root(self, sine_model, scan_8):
        lam = float(scan_8.positive()[0])
        tr = eigenfunction(sine_model, lam)
        d = dispersion(sine_model, lam)
        # D = 0 restated: both boundary values agree after normalization
        bv = tr.meta["boundary_value"]
        other = d.phi_minus / tr.meta["normalization"]
        assert abs(bv - other) < 1e-6

    def test_reintegration_residual(self, sine_model, scan_8):
        lam = float(scan_8.positive()[0])
        tight = SolverConfig(rtol=1e-11, atol=1e-13)
        nodes = np.linspace(0.3, PI - 0.3, 11)
        a = ps.integrate_phi(sine_model, lam, output_nodes=nodes, record_steps=False)
        b = ps.integrate_phi(sine_model, lam, tight, output_nodes=nodes, record_steps=False)
        ia = np.searchsorted(a.grid, nodes)
        ib = np.searchsorted(b.grid, nodes)
        assert np.max(np.abs(a.values[ia] - b.values[ib])) < 1e-6

    def test_stale_eigenvalue_rejected(self, sine_model):
        with pytest.raises(StaleEigenvalueError):
            eigenfunction(sine_model, 1.1)
