import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fcy import torus
from fcy.torus import GridSpec

TWO_PI = 2 * np.pi


@pytest.mark.parametrize("n,N", [(1, 8), (5, 8), (2, 7), (2, 2), (2, 66)])
def test_gridspec_rejects(n, N):
    with pytest.raises(ValueError):
        GridSpec(n, N)


def test_gridspec_shape():
    g = GridSpec(3, 6)
    assert g.shape == (6,) * 6 and g.size == 6 ** 6 and g.ndim == 6
    assert GridSpec.of(np.zeros(g.shape)) == g


def test_hessian_of_constant_is_zero():
    g = GridSpec(2, 8)
    assert np.abs(torus.complex_hessian(np.full(g.shape, 3.0), g)).max() < 1e-12


def test_hessian_cos_x1():
    g = GridSpec(2, 8)
    u = np.cos(TWO_PI * g.x(1))
    H = torus.complex_hessian(u, g)
    expected = np.zeros(g.shape + (2, 2), dtype=complex)
    expected[..., 0, 0] = -np.pi ** 2 * u
    np.testing.assert_allclose(H, expected, atol=1e-11)


def test_hessian_sin_x1_sin_y1():
    g = GridSpec(2, 8)
    u = np.sin(TWO_PI * g.x(1)) * np.sin(TWO_PI * g.y(1))
    H = torus.complex_hessian(u, g)
    # the imaginary cross term cancels; the real part is -2 pi^2 u, not zero
    assert np.abs(H.imag).max() < 1e-11
    np.testing.assert_allclose(H[..., 0, 0].real, -2 * np.pi ** 2 * u, atol=1e-10)
    assert np.abs(H[..., 1, :]).max() < 1e-11 and np.abs(H[..., :, 1]).max() < 1e-11


def test_hessian_matches_closed_form_mixed():
    # u = cos(2 pi x1) cos(2 pi y2) has a nonzero mixed term
    from fcy import catalog

    g = GridSpec(2, 8)
    u = catalog.expression("cos_x1_cos_y2", g)
    np.testing.assert_allclose(torus.complex_hessian(u, g), catalog.exact_hessian("cos_x1_cos_y2", g),
                               atol=1e-10)


def test_hessian_is_hermitian(rng):
    g = GridSpec(3, 6)
    H = torus.complex_hessian(torus.trig_field(g, rng), g)
    np.testing.assert_allclose(H, np.conj(np.swapaxes(H, -1, -2)), atol=1e-12)


def test_hessian_batched(rng):
    g = GridSpec(2, 4)
    us = np.stack([torus.trig_field(g, rng, kmax=1) for _ in range(3)])
    batch = torus.complex_hessian(us, g)
    for k in range(3):
        np.testing.assert_allclose(batch[k], torus.complex_hessian(us[k], g), atol=1e-13)


def test_laplacian_examples(rng):
    g = GridSpec(2, 8)
    u = np.cos(TWO_PI * g.x(1))
    np.testing.assert_allclose(torus.laplacian_eta(u, g), -np.pi ** 2 * u, atol=1e-11)
    assert np.abs(torus.laplacian_eta(np.full(g.shape, 2.0), g)).max() < 1e-12
    v = rng.normal(size=g.shape)
    assert abs(torus.laplacian_eta(v, g).mean()) < 1e-12
    H = torus.complex_hessian(v, g)
    np.testing.assert_allclose(torus.laplacian_eta(v, g), np.trace(H, axis1=-2, axis2=-1).real, atol=1e-10)


def test_invert_laplacian(rng):
    g = GridSpec(2, 8)
    r = torus.mean_zero(rng.normal(size=g.shape))
    np.testing.assert_allclose(torus.laplacian_eta(torus.invert_laplacian(r, g), g), r, atol=1e-12)


def test_integrate_examples():
    g = GridSpec(2, 8)
    one = np.ones(g.shape)
    assert torus.integrate(one, one) == pytest.approx(1.0, abs=1e-14)
    assert abs(torus.integrate(np.cos(TWO_PI * g.x(1)), one)) < 1e-14
    assert torus.integrate(np.cos(TWO_PI * g.x(1)) ** 2, one) == pytest.approx(0.5, abs=1e-14)
    assert isinstance(torus.integrate(one), float)
    with pytest.raises(ValueError):
        torus.integrate(one, np.ones((8, 8)))


def test_mean_zero_examples(rng):
    g = GridSpec(2, 8)
    assert np.abs(torus.mean_zero(np.full(g.shape, 5.0))).max() < 1e-14
    c = np.cos(TWO_PI * g.x(1))
    np.testing.assert_allclose(torus.mean_zero(3 + c), c, atol=1e-14)
    w = 1.0 + 0.5 * rng.random(g.shape)
    u = rng.normal(size=g.shape)
    assert abs(torus.integrate(torus.mean_zero(u, w), w)) < 1e-14


def test_trig_field_properties(rng):
    g = GridSpec(2, 8)
    u = torus.trig_field(g, rng, kmax=2, amplitude=0.3)
    assert np.abs(u).max() == pytest.approx(0.3)
    assert abs(u.mean()) < 1e-15
    # band-limited: no energy above kmax
    uh = np.fft.fftn(u)
    k = np.fft.fftfreq(g.N, 1.0 / g.N)
    high = np.zeros(g.shape, dtype=bool)
    for ax in range(g.ndim):
        shape = [1] * g.ndim
        shape[ax] = g.N
        high |= np.abs(k).reshape(shape) > 2
    assert np.abs(uh[high]).max() < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), N=st.sampled_from([4, 6, 8]))
def test_parseval_and_real_roundtrip(seed, N):
    g = GridSpec(2, N)
    u = np.random.default_rng(seed).normal(size=g.shape)
    uh = g.rfft(u)
    back = g.irfft(uh)
    np.testing.assert_allclose(back, u, atol=1e-12)
    full = np.fft.fftn(u)
    assert np.sum(np.abs(full) ** 2) / g.size == pytest.approx(np.sum(u ** 2), rel=1e-12)


@pytest.mark.parametrize("kind", ["real", "complex"])
def test_field_io_roundtrip(tmp_path, rng, kind):
    g = GridSpec(2, 4)
    values = rng.normal(size=g.shape)
    if kind == "complex":
        values = values + 1j * rng.normal(size=g.shape)
    base = torus.write_field(tmp_path / "field", values)
    header = (tmp_path / "field.json").read_text()
    assert f'"kind": "{kind}"' in header
    assert (tmp_path / "field.bin").stat().st_size == g.size * (8 if kind == "real" else 16)
    back = torus.read_field(base)
    assert back.dtype == values.dtype
    np.testing.assert_array_equal(back, values)


def test_field_io_rejects_truncated(tmp_path):
    g = GridSpec(2, 4)
    torus.write_field(tmp_path / "f", np.zeros(g.shape))
    (tmp_path / "f.bin").write_bytes(b"\0" * 16)
    with pytest.raises(ValueError):
        torus.read_field(tmp_path / "f")
