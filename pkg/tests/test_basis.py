import math

import numpy as np
import numpy.testing as npt
import pytest

from netkernel.core.basis import (
    BasisKind,
    BasisSpec,
    DampedSine,
    Indicator,
    Polynomial,
    PowerLawTruncated,
    Spline,
    Tabulated,
    Trig,
    descriptor_from_dict,
)
from netkernel.core.errors import ConfigError, DimensionMismatchError, UnknownDescriptorError
from netkernel.core.presets import lennard_jones_basis, spline_basis


def test_power_law_is_zero_outside_half_open_support():
    fn = PowerLawTruncated(-3.0, (0.5, None))
    npt.assert_allclose(fn(np.array([0.0, 0.25, 0.5, 2.0])), [0.0, 0.0, 8.0, 0.125])
    assert fn.support == (0.5, math.inf)


def test_indicator_support_is_half_open():
    fn = Indicator((0.0, 1.0))
    npt.assert_array_equal(fn(np.array([-0.1, 0.0, 0.999, 1.0])), [0.0, 1.0, 1.0, 0.0])


def test_trig_polynomial_and_damped_sine_values():
    r = np.array([0.0, 0.3, 1.2])
    npt.assert_allclose(Trig("sin", 2)(r), np.sin(2 * r))
    npt.assert_allclose(Trig("cos", 1)(r), np.cos(r))
    npt.assert_allclose(Polynomial((3.0, 0.0, -6.0, 0.0, 1.0))(r), r**4 - 6 * r**2 + 3)
    npt.assert_allclose(DampedSine(2, 0.1)(r), np.sin(4 * np.pi * r) / (r + 0.1))


def test_tabulated_interpolates_and_vanishes_outside_grid():
    fn = Tabulated((0.0, 1.0, 2.0), (0.0, 2.0, 0.0))
    npt.assert_allclose(fn(np.array([-1.0, 0.5, 1.5, 3.0])), [0.0, 1.0, 1.0, 0.0])


def test_spline_basis_is_a_partition_of_unity_inside_its_range():
    basis = spline_basis(d=1, p=8)
    r = np.linspace(0.0, 4.99, 50)
    npt.assert_allclose(basis.profiles(r).sum(axis=-1), 1.0, atol=1e-12)
    assert np.all(basis.profiles(np.array([5.5, -0.5])) == 0)


def test_spline_needs_more_knots_than_coefficients():
    with pytest.raises(ConfigError):
        Spline((0.0, 1.0), (1.0, 1.0, 1.0))


def test_radial_lift_evaluates_profile_along_unit_direction():
    basis = BasisSpec(2, BasisKind.RADIAL_LIFT, (PowerLawTruncated(-3.0), Indicator((0.0, 1.0))))
    x = np.array([[3.0, 4.0], [0.3, 0.4]])
    F = basis.evaluate(x)
    assert F.shape == (2, 2, 2)
    npt.assert_allclose(F[0, :, 0], np.array([0.6, 0.8]) * 5.0**-3)
    npt.assert_allclose(F[0, :, 1], [0.0, 0.0])
    npt.assert_allclose(F[1, :, 1], [0.6, 0.8])


def test_radial_lift_vanishes_at_origin():
    basis = lennard_jones_basis(d=2, p=10)
    F = basis.evaluate(np.zeros((3, 2)))
    assert np.all(F == 0)


def test_direct_scalar_requires_scalar_states():
    with pytest.raises(ConfigError):
        BasisSpec(2, BasisKind.DIRECT_SCALAR, (Trig("sin"),))
    basis = BasisSpec(1, BasisKind.DIRECT_SCALAR, (Trig("sin"), Trig("cos")))
    F = basis.evaluate(np.array([[0.5], [-1.0]]))
    npt.assert_allclose(F[:, 0, 0], np.sin([0.5, -1.0]))
    npt.assert_allclose(F[:, 0, 1], np.cos([0.5, -1.0]))


def test_evaluate_rejects_wrong_dimension():
    with pytest.raises(DimensionMismatchError):
        lennard_jones_basis(d=2, p=3).evaluate(np.zeros((4, 3)))


def test_basis_spec_serialises_every_descriptor_kind():
    functions = (
        PowerLawTruncated(-9.0, (0.75, None)),
        Indicator((0.0, 1.5)),
        Spline((0.0, 0.0, 1.0, 2.0, 2.0), (0.0, 1.0, 0.0)),
        Tabulated((0.0, 1.0), (1.0, 0.0)),
        Polynomial((1.0, 2.0)),
        DampedSine(3),
    )
    basis = BasisSpec(2, BasisKind.RADIAL_LIFT, functions)
    restored = BasisSpec.from_dict(basis.to_dict())
    assert restored == basis
    x = np.random.default_rng(0).uniform(-2, 2, size=(10, 2))
    npt.assert_allclose(restored.evaluate(x), basis.evaluate(x))


def test_unknown_descriptor_kind():
    with pytest.raises(UnknownDescriptorError):
        descriptor_from_dict({"kind": "gaussian_bump"})


def test_descriptor_with_bad_fields():
    with pytest.raises(ConfigError):
        descriptor_from_dict({"kind": "indicator", "width": 2})


def test_invalid_support_rejected():
    with pytest.raises(ConfigError):
        Indicator((1.0, 0.5))


def test_subset_keeps_selected_functions():
    full = lennard_jones_basis(d=2, p=10)
    sub = full.subset([0, 3, 6])
    assert sub.p == 3
    assert sub == lennard_jones_basis(d=2, p=3)
    assert sub.names == (full.names[0], full.names[3], full.names[6])
