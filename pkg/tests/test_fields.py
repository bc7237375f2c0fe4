import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugeqmt import (
    ComplexField,
    ContractError,
    Grid2D,
    NumericalError,
    RealField,
    UnitSystem,
    apply_phase,
    default_grid,
    expectation,
    inner_product,
    landau_state,
)
from gaugeqmt.fields import integrate

SMALL = Grid2D(-1.0, 2.0, -1.5, 1.0, 7, 5)


def random_field(rng, grid=SMALL):
    return ComplexField(grid, rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape))


class TestGrid:
    def test_spacing_and_endpoints(self):
        g = Grid2D(-1, 1, 0, 3, 5, 4)
        assert g.dx == 0.5 and g.dy == 1.0
        assert g.x[0] == -1 and g.x[-1] == 1
        assert g.y[-1] == 3

    @pytest.mark.parametrize(
        "args",
        [(1, 1, 0, 1, 5, 5), (0, 1, 2, 1, 5, 5), (0, 1, 0, 1, 3, 5), (0, 1, 0, 1, 5, 4.5)],
    )
    def test_invalid(self, args):
        with pytest.raises(ContractError):
            Grid2D(*args)

    def test_trapezoid_weights_sum_to_area(self):
        assert SMALL.weights.sum() == pytest.approx(3.0 * 2.5, rel=1e-14)

    def test_units_fixed(self):
        assert UnitSystem().hbar == 1.0
        with pytest.raises(ContractError):
            UnitSystem(hbar=2.0)


class TestFieldInvariants:
    def test_sample_count(self):
        with pytest.raises(ContractError):
            RealField(SMALL, np.zeros(7))

    def test_nonfinite_rejected(self):
        data = np.zeros(SMALL.shape)
        data[2, 3] = np.nan
        with pytest.raises(NumericalError, match=r"\(2, 3\)"):
            RealField(SMALL, data)

    def test_immutable(self, rng):
        f = random_field(rng)
        with pytest.raises(ValueError):
            f.samples[0, 0] = 1.0


class TestInnerProduct:
    def test_landau_normalization(self, grid1):
        psi = landau_state(1.0, 0, grid1)
        assert abs(inner_product(psi, psi) - 1.0) < 1e-10

    def test_hermitian_form(self, rng):
        f = random_field(rng)
        ff = inner_product(f, f)
        assert ff.imag == 0.0
        assert ff.real >= 0.0

    def test_conjugate_symmetry(self, rng):
        f, g = random_field(rng), random_field(rng)
        assert inner_product(f, g) == pytest.approx(inner_product(g, f).conjugate(), abs=1e-13)

    def test_linear_in_second_argument(self, rng):
        f, g, h = (random_field(rng) for _ in range(3))
        a, b = 0.3 - 1.2j, -2.0 + 0.5j
        combo = ComplexField(SMALL, a * g.samples + b * h.samples)
        expected = a * inner_product(f, g) + b * inner_product(f, h)
        assert inner_product(f, combo) == pytest.approx(expected, abs=1e-12)

    def test_grid_mismatch(self, rng):
        other = Grid2D(-1.0, 2.0, -1.5, 1.0, 7, 6)
        with pytest.raises(ContractError):
            inner_product(random_field(rng), random_field(rng, other))

    def test_bit_reproducible(self, grid1):
        psi = landau_state(1.3, 1, grid1)
        assert inner_product(psi, psi) == inner_product(psi, psi)

    def test_matches_independent_trapezoid(self, rng):
        # numpy's 1D trapezoid applied axis by axis is an independent route
        f, g = random_field(rng), random_field(rng)
        vals = np.conj(f.samples) * g.samples
        ref = np.trapezoid(np.trapezoid(vals, SMALL.y, axis=1), SMALL.x)
        assert inner_product(f, g) == pytest.approx(ref, abs=1e-13)

    def test_quadrature_convergence_superalgebraic(self):
        # doubling the number of intervals at fixed domain [-8, 8]^2
        errors = []
        for n in (5, 9, 17, 33):
            psi = landau_state(1.0, 0, default_grid(1.0, n, 8.0))
            errors.append(abs(psi.norm2() - 1.0))
        assert all(b < a for a, b in zip(errors, errors[1:]))
        # faster than O(N^-2): every ratio well above 4 until the rounding floor
        assert errors[0] / errors[1] > 4 and errors[1] / errors[2] > 4


class TestApplyPhase:
    def test_identity(self, rng):
        f = random_field(rng)
        out = apply_phase(f, RealField(SMALL, np.zeros(SMALL.shape)))
        np.testing.assert_array_equal(out.samples, f.samples)

    def test_modulus_preserved(self, rng):
        f = random_field(rng)
        alpha = RealField(SMALL, rng.uniform(-10, 10, SMALL.shape))
        out = apply_phase(f, alpha)
        np.testing.assert_allclose(np.abs(out.samples), np.abs(f.samples), rtol=0, atol=1e-15 * np.abs(f.samples).max() * 10)
        assert abs(out.norm2() - f.norm2()) <= 1e-12 * f.norm2()

    def test_pi_phase(self):
        one = ComplexField(SMALL, np.ones(SMALL.shape))
        out = apply_phase(one, RealField(SMALL, np.full(SMALL.shape, math.pi)))
        np.testing.assert_allclose(out.samples, -1.0, atol=1e-15)

    def test_grid_mismatch(self, rng):
        with pytest.raises(ContractError):
            apply_phase(random_field(rng), RealField(default_grid(1.0, 8), np.zeros((8, 8))))

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=35, max_size=35))
    def test_norm_preservation_property(self, phases):
        rng = np.random.default_rng(len(phases))
        f = random_field(rng)
        out = apply_phase(f, RealField(SMALL, np.array(phases)))
        assert abs(out.norm2() - f.norm2()) <= 1e-12 * f.norm2()


class TestExpectation:
    def test_odd_moment(self, grid1):
        X, Y = grid1.mesh
        psi = landau_state(1.0, 0, grid1)
        assert abs(expectation(psi, RealField(grid1, X * Y))) < 1e-10

    def test_r2_moment(self, grid1):
        X, Y = grid1.mesh
        psi = landau_state(1.0, 0, grid1)
        assert expectation(psi, RealField(grid1, X**2 + Y**2)) == pytest.approx(2.0, abs=1e-8)

    def test_unit_weight(self):
        grid = default_grid(0.7)
        psi = landau_state(0.7, 2, grid)
        assert expectation(psi, RealField(grid, np.ones(grid.shape))) == pytest.approx(1.0, abs=1e-10)

    def test_warns_when_not_normalized(self, rng):
        f = random_field(rng)
        with pytest.warns(RuntimeWarning, match="non-normalized"):
            value = expectation(f, RealField(SMALL, np.ones(SMALL.shape)))
        assert value == pytest.approx(f.norm2())

    def test_no_warning_when_normalized(self, grid1):
        psi = landau_state(1.0, 0, grid1)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            expectation(psi, RealField(grid1, np.ones(grid1.shape)))


def test_integrate_constant():
    assert integrate(SMALL, np.full(SMALL.shape, 2.0)) == pytest.approx(15.0)
