import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crosslink_nav import constants as const
from crosslink_nav.dynamics import (
    EARTH_MOON,
    CrtbpParams,
    InertialState,
    KeplerianElements,
    RotatingState,
    barycentric_to_mci,
    cartesian_to_kepler,
    collinear_point,
    crtbp_derivative,
    crtbp_jacobian,
    inertial_to_rot,
    jacobi_constant,
    kepler_to_cartesian,
    mci_to_barycentric,
    propagate,
    rot_to_inertial,
    shift_frame,
)
from crosslink_nav.exceptions import SingularityError
from crosslink_nav.integrators import IntegratorConfig

MU = EARTH_MOON.mu
LUMIO = np.array([1.1473302, 0.0, -0.15142308, 0.0, -0.21994554, 0.0])
LPF = np.array([0.98512134, 0.00147649, 0.00492546, -0.87329730, -1.61190048, 0.0])


def _quintic_gamma(which, mu):
    """Moon-to-libration-point distance from the classical quintic (polynomial oracle)."""
    if which == "L1":
        coeffs = [1.0, -(3.0 - mu), 3.0 - 2.0 * mu, -mu, 2.0 * mu, -mu]
    else:
        coeffs = [1.0, 3.0 - mu, 3.0 - 2.0 * mu, -mu, -2.0 * mu, -mu]
    roots = np.roots(coeffs)
    real = roots[(np.abs(roots.imag) < 1e-12) & (roots.real > 0)].real
    return float(real.min())


def test_params_units():
    p = EARTH_MOON
    assert p.time_unit_s == pytest.approx(4.343 * 86400.0)
    assert p.velocity_unit_kms == pytest.approx(1.02535, rel=1e-5)
    assert p.nd_to_seconds(p.seconds_to_nd(1234.5)) == pytest.approx(1234.5)
    with pytest.raises(ValueError):
        CrtbpParams(mu=0.7)


@pytest.mark.parametrize("which,sign", [("L1", -1.0), ("L2", 1.0)])
def test_collinear_points_match_quintic(which, sign):
    gamma = _quintic_gamma(which, MU)
    assert collinear_point(which) == pytest.approx(1.0 - MU + sign * gamma, abs=1e-12)


def test_collinear_points_are_equilibria():
    for which in ("L1", "L2", "L3"):
        x = np.array([collinear_point(which), 0, 0, 0, 0, 0])
        assert np.max(np.abs(crtbp_derivative(x))) < 1e-12


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(4)
    for _ in range(10):
        x = LUMIO + rng.normal(scale=[0.05, 0.05, 0.05, 0.05, 0.05, 0.05])
        jac = crtbp_jacobian(x)
        fd = np.empty((6, 6))
        h = 1e-6
        for j in range(6):
            dx = np.zeros(6)
            dx[j] = h
            fd[:, j] = (crtbp_derivative(x + dx) - crtbp_derivative(x - dx)) / (2 * h)
        assert np.max(np.abs(jac - fd)) < 1e-8


def test_jacobi_constant_conserved_short_arc():
    out = propagate(LUMIO, np.linspace(0.0, 1.0, 5))
    c = [jacobi_constant(s.state) for s in out]
    assert max(abs(ci - c[0]) for ci in c) / abs(c[0]) < 1e-11


def test_lumio_jacobi_value():
    assert jacobi_constant(LUMIO) == pytest.approx(3.068093283, abs=1e-8)


def test_rk4_matches_adaptive():
    t = [0.0, 0.5, 1.0]
    a = propagate(LPF, t)
    b = propagate(LPF, t, IntegratorConfig.fixed(1e-4))
    assert np.allclose(a[-1].state.as_array(), b[-1].state.as_array(), atol=1e-9)


def test_stm_is_identity_at_start_and_symplectic_det():
    out = propagate(LUMIO, [0.0, 0.7], with_stm=True)
    assert np.array_equal(out[0].stm, np.eye(6))
    # Hamiltonian flow: det(Phi) = 1
    assert np.linalg.det(out[-1].stm) == pytest.approx(1.0, abs=1e-8)


def test_mirror_symmetry():
    """(x, -y, z, -vx, vy, -vz) at -t mirrors a forward solution."""
    fwd = propagate(LPF, [0.0, 0.3])[-1].state.as_array()
    m = np.array([1, -1, 1, -1, 1, -1.0])
    back = propagate(LPF * m, [0.0, -0.3])[-1].state.as_array()
    assert np.allclose(back, fwd * m, atol=1e-10)


def test_singularity_rejected():
    with pytest.raises(SingularityError):
        crtbp_derivative([1 - MU, 0, 0, 0, 0, 0])
    with pytest.raises(SingularityError):
        propagate([-MU, 0, 0, 0, 0, 0], [0.0, 1.0])


def test_bad_state_shape():
    with pytest.raises(ValueError):
        crtbp_derivative([1.0, 2.0])


# --- frames ------------------------------------------------------------------


def test_rotating_inertial_coincide_at_zero():
    s = RotatingState(0.0, [0.5, 0.2, 0.1], [0.0, 0.0, 0.3])
    i = rot_to_inertial(s)
    assert np.allclose(i.pos, s.pos)
    # velocity picks up omega x r
    assert np.allclose(i.vel, s.vel + np.cross([0, 0, 1], s.pos))


@given(st.floats(-10, 10), st.lists(st.floats(-2, 2), min_size=6, max_size=6))
@settings(max_examples=50, deadline=None)
def test_frame_round_trip(t, x):
    s = RotatingState(t, x[:3], x[3:])
    back = inertial_to_rot(rot_to_inertial(s))
    assert np.allclose(back.as_array(), s.as_array(), atol=1e-12)


def test_z_velocity_untouched_by_rotation():
    s = RotatingState(1.3, [0.1, 0.2, 0.3], [0.4, 0.5, 0.6])
    assert rot_to_inertial(s).vel[2] == pytest.approx(0.6)


def test_inertial_rotation_quarter_turn():
    i = InertialState(math.pi / 2, [0.0, 1.0, 0.0], [0.0, 0.0, 0.0])
    r = inertial_to_rot(i)
    assert np.allclose(r.pos, [1.0, 0.0, 0.0], atol=1e-15)


def test_shift_frame():
    s = RotatingState(0.0, [1 - MU, 0, 0], [0, 0, 0])
    assert np.allclose(shift_frame(s, "moon", "to").pos, 0.0)
    e = shift_frame(RotatingState(0.0, [0, 0, 0], [0, 0, 0]), "earth", "to")
    assert np.allclose(e.pos, [MU, 0, 0])
    with pytest.raises(ValueError):
        shift_frame(s, "mars")


def test_moon_origin_maps_to_moon():
    s = mci_to_barycentric([0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    assert np.allclose(s.as_array(), [1 - MU, 0, 0, 0, 0, 0])


def test_mci_round_trip():
    r = np.array([1200.0, -3000.0, 2500.0])
    v = np.array([0.3, 1.1, -0.4])
    s = mci_to_barycentric(r, v, epoch=0.8)
    rb, vb = barycentric_to_mci(s)
    assert np.allclose(rb, r, atol=1e-8) and np.allclose(vb, v, atol=1e-12)


# --- conics --------------------------------------------------------------------

LPF_ELEMENTS = KeplerianElements(5737.4, 0.61, 57.83, 61.55, 90.0, 0.0)


def test_periselene_radius_and_vis_viva():
    r, v = kepler_to_cartesian(LPF_ELEMENTS)
    rn, vn = np.linalg.norm(r), np.linalg.norm(v)
    assert rn == pytest.approx(5737.4 * (1 - 0.61), abs=1e-9)
    assert rn == pytest.approx(2237.586, abs=1e-3)
    assert vn**2 == pytest.approx(const.GM_MOON * (2 / rn - 1 / 5737.4), rel=1e-12)
    # at periapsis r and v are perpendicular
    assert abs(r @ v) < 1e-9


def test_angular_momentum_direction():
    r, v = kepler_to_cartesian(LPF_ELEMENTS)
    h = np.cross(r, v)
    inc = math.degrees(math.acos(h[2] / np.linalg.norm(h)))
    raan = math.degrees(math.atan2(h[0], -h[1]))
    assert inc == pytest.approx(57.83) and raan == pytest.approx(61.55)


@given(
    st.floats(2000, 20000),
    st.floats(0.01, 0.9),
    st.floats(1, 179),
    st.floats(0, 359),
    st.floats(0, 359),
    st.floats(0, 359),
)
@settings(max_examples=60, deadline=None)
def test_kepler_round_trip(a, e, i, raan, argp, nu):
    k = KeplerianElements(a, e, i, raan, argp, nu)
    r, v = kepler_to_cartesian(k)
    back = cartesian_to_kepler(r, v, const.GM_MOON)
    assert back.sma == pytest.approx(a, rel=1e-9)
    assert back.ecc == pytest.approx(e, abs=1e-9)
    r2, v2 = kepler_to_cartesian(back)
    assert np.allclose(r2, r, rtol=1e-8, atol=1e-6)
    assert np.allclose(v2, v, rtol=1e-8, atol=1e-9)


def test_elements_validation():
    with pytest.raises(ValueError):
        KeplerianElements(7000, 1.2, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        cartesian_to_kepler([7000, 0, 0], [0, 10, 0], const.GM_MOON)


def test_lpf_elements_to_rotating_state():
    r, v = kepler_to_cartesian(LPF_ELEMENTS)
    s = mci_to_barycentric(r, v, 0.0)
    assert np.max(np.abs(s.pos - LPF[:3])) < 1e-4
