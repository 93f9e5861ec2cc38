"""Dirichlet Green functions: closed forms, transport, and mutual energy."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from greenvar.conformal import (
    BUILTIN_FAMILIES,
    ConformalMap,
    boundary_grid,
    to_points,
)
from greenvar.errors import CoincidentPoleError, DomainError
from greenvar.greens import (
    GreenFunction,
    disk_green,
    disk_green_gradient,
    green_gradient,
    green_gradient_field,
    interior_rule,
    mapped_green,
    mutual_energy,
    poisson_normal_derivative,
)
from greenvar.quadrature import disk_rule

from conftest import interior_points

TWO_PI = 2.0 * np.pi

small = st.floats(-0.6, 0.6)


def test_center_value_log_two():
    assert disk_green((0.0, 0.0), (0.5, 0.0)) == pytest.approx(
        math.log(2.0) / TWO_PI, rel=1e-15
    )


def test_value_is_symmetric(rng):
    z = interior_points(rng, 30, radius=0.9)
    w = interior_points(rng, 30, radius=0.9)
    keep = np.abs(z - w) > 1e-6
    z, w = z[keep], w[keep]
    # |1 - z conj(w)| and |z - w| are literally swap-invariant in floats
    assert np.array_equal(disk_green(z, w), disk_green(w, z))


def test_positive_inside(rng):
    z = interior_points(rng, 50, radius=0.99)
    w = interior_points(rng, 50, radius=0.8)
    keep = np.abs(z - w) > 1e-3
    assert np.all(disk_green(z[keep], w[keep]) > 0.0)


def test_vanishes_on_boundary():
    th = np.linspace(0.0, TWO_PI, 32, endpoint=False)
    z = (1.0 - 1e-8) * np.exp(1j * th)
    vals = disk_green(z, 0.3 + 0.2j)
    assert np.max(np.abs(vals)) < 1e-6


def test_logarithmic_blowup_rate():
    # 2 pi |x - a| |grad G| -> 1 approaching the pole
    a = 0.3 + 0.1j
    for d in (1e-4, 1e-6):
        x = a + d * np.exp(0.7j)
        g = disk_green_gradient(x, a)
        assert TWO_PI * d * np.hypot(*g) == pytest.approx(1.0, abs=5.0 * d)


def test_gradient_matches_finite_differences(rng):
    a = 0.25 - 0.4j
    h = 1e-6
    for z in interior_points(rng, 10, radius=0.8):
        if abs(z - a) < 0.05:
            continue
        g = disk_green_gradient(z, a)
        fd = np.array(
            [
                (disk_green(z + h, a) - disk_green(z - h, a)) / (2 * h),
                (disk_green(z + 1j * h, a) - disk_green(z - 1j * h, a)) / (2 * h),
            ]
        )
        assert np.max(np.abs(g - fd)) < 1e-7 * max(1.0, np.max(np.abs(g)))


def test_pole_must_be_interior():
    with pytest.raises(DomainError):
        disk_green(0.2 + 0j, 1.0 + 0j)
    with pytest.raises(DomainError):
        disk_green_gradient(0.2 + 0j, 1.2 + 0j)


def test_evaluation_outside_closure_rejected():
    with pytest.raises(DomainError):
        disk_green(1.5 + 0j, 0.3 + 0j)


def test_coincident_evaluation_rejected():
    with pytest.raises(CoincidentPoleError):
        disk_green(0.3 + 0j, 0.3 + 0j)
    with pytest.raises(CoincidentPoleError):
        mapped_green(ConformalMap.identity(), 0.1 + 0.2j, 0.1 + 0.2j)


def test_poisson_kernel_closed_form():
    a = 0.4 + 0.1j
    th = np.linspace(0.0, TWO_PI, 16, endpoint=False)
    x = np.exp(1j * th)
    vals = poisson_normal_derivative(x, a)
    expected = -(1.0 - abs(a) ** 2) / np.abs(x - a) ** 2 / TWO_PI
    assert np.allclose(vals, expected, rtol=1e-14)
    assert np.all(vals < 0.0)


def test_poisson_kernel_matches_radial_difference():
    # G = 0 on the circle, so dG/dn ~ -G((1-h) x) / h
    a = 0.3 - 0.2j
    h = 1e-6
    for th in (0.3, 2.0, 4.4):
        x = np.exp(1j * th)
        fd = -disk_green((1.0 - h) * x, a) / h
        assert poisson_normal_derivative(x, a) == pytest.approx(fd, rel=1e-4)


def test_poisson_kernel_requires_unit_modulus():
    with pytest.raises(DomainError):
        poisson_normal_derivative(0.9 + 0j, 0.2 + 0j)


def test_harmonic_measure_integrates_to_minus_one():
    for name, factory in BUILTIN_FAMILIES.items():
        fam = factory()
        grid = boundary_grid(fam, 0.5 * fam.t_max, 256)
        fmap = grid.map
        green = GreenFunction(fmap)
        a = to_points(fmap(0.3 + 0.25j))
        total = np.dot(green.normal_derivative(grid, a), grid.weights)
        assert total == pytest.approx(-1.0, abs=1e-10), name


@given(small, small, small, small)
def test_conformal_transport(zr, zi, wr, wi):
    z, w = complex(zr, zi), complex(wr, wi)
    if abs(z - w) < 1e-3:
        return
    fmap = ConformalMap([1.0, 0.08, 0.03j])
    val = mapped_green(fmap, to_points(fmap(z)), to_points(fmap(w)))
    assert val == pytest.approx(disk_green(z, w), rel=1e-10, abs=1e-12)


def test_scale_invariance():
    # Green functions do not change under rescaling of the whole domain
    base = ConformalMap([1.0, 0.1])
    scaled = ConformalMap([1.3, 0.13])
    x, a = 0.3 + 0.2j, -0.1 + 0.4j
    lhs = mapped_green(base, to_points(base(x)), to_points(base(a)))
    rhs = mapped_green(scaled, to_points(scaled(x)), to_points(scaled(a)))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_mapped_gradient_chain_rule(rng):
    fmap = ConformalMap([1.0, 0.1, 0.05])
    a = to_points(fmap(0.2 + 0.1j))
    h = 1e-6
    for z in interior_points(rng, 8, radius=0.7):
        if abs(z - (0.2 + 0.1j)) < 0.1:
            continue
        x = complex(fmap(z))
        g = green_gradient(fmap, to_points(x), a)
        fd = np.array(
            [
                (mapped_green(fmap, to_points(x + h), a)
                 - mapped_green(fmap, to_points(x - h), a)) / (2 * h),
                (mapped_green(fmap, to_points(x + 1j * h), a)
                 - mapped_green(fmap, to_points(x - 1j * h), a)) / (2 * h),
            ]
        )
        assert np.max(np.abs(g - fd)) < 1e-6 * max(1.0, np.max(np.abs(g)))


def test_gradient_field_jacobian_structure(rng):
    fmap = ConformalMap([1.0, 0.05, 0.03])
    field = green_gradient_field(fmap, to_points(fmap(0.1 - 0.2j)))
    pts = to_points(fmap(interior_points(rng, 20, radius=0.8, min_radius=0.45)))
    J = field.jacobian(pts)
    # harmonic gradient: symmetric, trace-free Jacobian
    assert np.max(np.abs(J[..., 0, 1] - J[..., 1, 0])) == 0.0
    assert np.max(np.abs(J[..., 0, 0] + J[..., 1, 1])) == 0.0
    from greenvar.tensors import VectorField

    fd = VectorField(2, field._func).jacobian(pts)
    assert np.max(np.abs(J - fd)) < 1e-6


def test_gradient_field_matches_pointwise_gradient(rng):
    fmap = ConformalMap([1.0, 0.1])
    c = to_points(fmap(0.3 + 0.3j))
    field = green_gradient_field(fmap, c)
    pts = to_points(fmap(interior_points(rng, 10, radius=0.8, min_radius=0.5)))
    assert np.allclose(field(pts), green_gradient(fmap, pts, c), atol=1e-14)


def test_interior_rule_patches_at_preimages():
    fmap = ConformalMap([1.0, 0.1])
    w = 0.4 + 0.0j
    ambient = to_points(fmap(w))
    rule = interior_rule(fmap, poles=[ambient], n_r=16, n_theta=32, n_patch=16)
    direct = disk_rule(16, 32, poles=[w], n_patch=16)
    assert rule.nodes.shape == direct.nodes.shape
    assert np.allclose(rule.nodes, direct.nodes, atol=1e-10)
    assert np.allclose(rule.weights, direct.weights, atol=1e-10)


def test_interior_rule_rejects_boundary_pole():
    with pytest.raises(DomainError):
        interior_rule(None, poles=[(1.0, 0.0)])


def test_mutual_energy_center_pair():
    val = mutual_energy(None, (0.0, 0.0), (0.5, 0.0))
    assert val == pytest.approx(math.log(2.0) / TWO_PI, abs=1e-6)


def test_mutual_energy_swap_with_shared_rule():
    a, b = (0.2, 0.1), (-0.3, 0.25)
    rule = interior_rule(None, poles=[a, b])
    lhs = mutual_energy(None, a, b, rule=rule)
    rhs = mutual_energy(None, b, a, rule=rule)
    assert lhs == rhs


def test_mutual_energy_equals_green_value(rng):
    fmap = ConformalMap([1.0, 0.07, 0.02])
    for _ in range(3):
        z, w = interior_points(rng, 2, radius=0.6)
        if abs(z - w) < 0.2:
            continue
        a, b = to_points(fmap(z)), to_points(fmap(w))
        val = mutual_energy(fmap, a, b)
        assert val == pytest.approx(mapped_green(fmap, a, b), abs=1e-6)


def test_mutual_energy_rejects_coincident_sources():
    with pytest.raises(CoincidentPoleError):
        mutual_energy(None, (0.3, 0.0), (0.3, 0.0))


def test_mutual_energy_is_metric_independent():
    # g^{ij} sqrt(det g) = identity for any conformal factor in 2d
    from greenvar.tensors import conformal_metric

    met = conformal_metric(lambda x: 0.2 * x[..., 0],
                           lambda x: np.stack([0.2 * np.ones_like(x[..., 0]),
                                               np.zeros_like(x[..., 0])], axis=-1))
    a, b = (0.1, 0.2), (-0.3, 0.1)
    rule = interior_rule(None, poles=[a, b])
    flat = mutual_energy(None, a, b, rule=rule)
    curved = mutual_energy(None, a, b, rule=rule, metric=met)
    assert curved == pytest.approx(flat, rel=1e-12)
