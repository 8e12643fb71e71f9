import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasilab import Grid2D, GridFunction, ValidationError
from quasilab.factorization import (
    DEFAULT_GRID,
    Verdict,
    annihilation,
    assemble_family,
    creation,
    eigenmode_residual,
    family_amplitudes,
    gaussian_eigenmode,
    stalled_family_demo,
)
from quasilab.semiop import apply_factored, l2_norm

SQUARE = Grid2D(128, 128, 8.0, 8.0)


def inner(u, v):
    return np.vdot(u.values, v.values) * u.grid.cell_area


def test_gaussian_mode_shape():
    raw = gaussian_eigenmode(SQUARE, normalize=False)
    assert raw.values[64, 64] == 1.0
    np.testing.assert_array_equal(raw.values, raw.values.T)
    assert l2_norm(gaussian_eigenmode(SQUARE)) == pytest.approx(1.0, abs=1e-14)


def test_gaussian_mode_needs_wide_box():
    with pytest.raises(ValidationError):
        gaussian_eigenmode(Grid2D(128, 128, 6.0, 8.0))


@pytest.mark.parametrize("h", [0.1, 1.0])
def test_eigenmode_residual(h):
    assert 0 <= eigenmode_residual(h, SQUARE) <= 1e-8


def test_perturbed_mode_is_not_an_eigenmode():
    # D2 A_- exp(-0.9 r^2 / 2) = 0.09 x1 x2 exp(-0.9 r^2 / 2), and
    # |x1 x2 v| / |v| = 1 / (2 * 0.9) for this Gaussian weight
    expected = 0.09 / 1.8
    assert eigenmode_residual(0.1, SQUARE, decay=0.9) == pytest.approx(expected, rel=1e-8)
    assert expected > 1e-4


def smooth(seed, grid=SQUARE):
    rng = np.random.default_rng(seed)
    T, X2 = grid.mesh()
    c = rng.normal(size=5) + 1j * rng.normal(size=5)
    poly = c[0] + c[1] * T + c[2] * X2 + c[3] * T**2 + c[4] * T * X2
    return GridFunction(poly * np.exp(-(T**2) - (X2 - 0.5) ** 2 / 2), grid)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_ladder_commutator(seed):
    f = smooth(seed)
    comm = annihilation(creation(f)).values - creation(annihilation(f)).values
    assert np.max(np.abs(comm - 2 * f.values)) <= 1e-8 * np.max(np.abs(f.values))


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_creation_is_adjoint(s1, s2):
    u, v = smooth(s1), smooth(s2)
    gap = abs(inner(annihilation(u), v) - inner(u, creation(v)))
    assert gap <= 1e-10 * l2_norm(u) * l2_norm(v)


@pytest.mark.parametrize("profile", ["gauss", "wave"])
def test_factored_kernel(profile):
    T, X2 = SQUARE.mesh()
    f = np.exp(-(X2**2)) if profile == "gauss" else np.exp(-(X2**2) / 4) * (1 + np.sin(2 * X2))
    v = GridFunction(f * np.exp(-(T**2) / 2), SQUARE)
    assert l2_norm(apply_factored(v, 0.3)) <= 1e-8 * l2_norm(v)


def test_first_family_equation_leaves_zeta():
    amps = family_amplitudes(1.0, 0)
    for h in (0.5, 0.125):
        v = assemble_family(amps, h)
        # A_- kills the extracted Gaussian, so only -h zeta v survives
        assert l2_norm(apply_factored(v, h)) <= 1e-10 * h * l2_norm(v)


def test_family_order_limit():
    with pytest.raises(ValidationError):
        family_amplitudes(1.0, 5)


@pytest.fixture(scope="module")
def demo():
    return stalled_family_demo(1.0, (0, 1, 2))


def test_family_stalls(demo):
    slopes = [s for _, s in demo.family_slopes]
    assert max(slopes) - min(slopes) < 0.1
    comp = [s for _, s in demo.comparison_slopes]
    assert all(b - a >= 0.2 - 0.05 for a, b in zip(comp, comp[1:]))
    assert demo.verdict is Verdict.NO_QUASIMODE
    assert 0 <= demo.eigenmode_residual <= 1e-8


def test_report_dict(demo):
    d = demo.to_dict()
    assert d["verdict"] == "no_quasimode_confirmed"
    assert [n for n, _ in d["family_slopes"]] == [0, 1, 2]
    assert all(np.isfinite(s) for _, s in d["family_slopes"])


@pytest.mark.parametrize("zeta", [0.5, 2.0, 1.0 + 1.0j])
def test_zeta_off_unit_circle(zeta):
    with pytest.raises(ValidationError, match="zeta"):
        stalled_family_demo(zeta)


def test_unit_zeta_other_phase():
    rep = stalled_family_demo(np.exp(0.7j), (0, 1), h_values=(0.5, 0.35, 0.25, 0.18, 0.125))
    slopes = [s for _, s in rep.family_slopes]
    assert abs(slopes[1] - slopes[0]) < 0.1


def test_default_grid_is_wide():
    assert DEFAULT_GRID.Lt >= 8 and DEFAULT_GRID.Lx2 >= 8
