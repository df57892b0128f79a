import numpy as np
import pytest

from gbsverify.core import Representation, Stage, TrajectoryBatch
from gbsverify.network import (
    UnitaryMatrix,
    evolve_linear,
    haar_unitary,
    identity_unitary,
    load_unitary,
    save_unitary,
    transform,
)


def real_batch(n=50, M=6, seed=0):
    rng = np.random.default_rng(seed)
    return TrajectoryBatch(rng.normal(size=(n, M)), rng.normal(size=(n, M)), Representation.POSITIVE_P)


@pytest.mark.parametrize("M", [1, 2, 17, 200, 500])
def test_haar_is_unitary(M):
    U = haar_unitary(M, seed=M)
    assert U.unitarity_error() < 1e-12


def test_haar_single_mode_is_a_phase():
    U = haar_unitary(1, seed=3)
    assert abs(abs(U.entries[0, 0]) - 1) < 1e-14


def test_haar_deterministic_per_seed():
    np.testing.assert_array_equal(haar_unitary(8, 1).entries, haar_unitary(8, 1).entries)
    assert not np.array_equal(haar_unitary(8, 1).entries, haar_unitary(8, 2).entries)
    with pytest.raises(ValueError):
        haar_unitary(0, 1)


def test_haar_first_moment():
    M, draws = 50, 10_000
    x = np.array([abs(haar_unitary(M, s).entries[0, 0]) ** 2 for s in range(draws)])
    assert abs(x.mean() - 1 / M) < 3 * x.std(ddof=1) / np.sqrt(draws)


def test_haar_phase_uniformity():
    # Haar entries have uniformly distributed phases: E[U_00] = 0
    u = np.array([haar_unitary(4, s).entries[0, 0] for s in range(4000)])
    assert abs(u.mean()) < 3 * np.sqrt(0.25 / 4000)


def test_transform_identity_and_permutation():
    b = real_batch()
    t = transform(b, identity_unitary(6))
    np.testing.assert_array_equal(t.alpha, b.alpha)
    assert t.stage is Stage.TRANSFORMED
    b2 = real_batch(M=2)
    P = UnitaryMatrix(np.array([[0, 1], [1, 0]], dtype=complex))
    t = transform(b2, P)
    np.testing.assert_array_equal(t.alpha[:, 0], b2.alpha[:, 1])
    np.testing.assert_array_equal(t.beta[:, 1], b2.beta[:, 0])


def test_transform_preserves_total_n():
    b = real_batch(n=2000, M=200)
    t = transform(b, haar_unitary(200, 11), block_size=300)
    assert np.max(np.abs(t.total_n() - b.total_n())) < 1e-10


def test_transform_blocked_equals_unblocked():
    b = real_batch(n=1000, M=12)
    U = haar_unitary(12, 4)
    full = transform(b, U)
    for bs in (1, 7, 333):
        blk = transform(b, U, block_size=bs)
        np.testing.assert_allclose(blk.alpha, full.alpha, rtol=0, atol=1e-14)


def test_transform_rejects_mismatch_and_double_application():
    b = real_batch(M=3)
    with pytest.raises(ValueError):
        transform(b, haar_unitary(4, 0))
    t = transform(b, haar_unitary(3, 0))
    with pytest.raises(ValueError):
        transform(t, haar_unitary(3, 0))


def test_evolve_linear_single_mode_phase():
    b = TrajectoryBatch(np.array([[1.5]]), np.array([[0.5]]), Representation.POSITIVE_P)
    w0, t = 2.3, 0.7
    out = evolve_linear(b, np.array([[w0]]), t)
    assert out.alpha[0, 0] == pytest.approx(np.exp(-1j * w0 * t) * 1.5, abs=1e-15)
    assert out.beta[0, 0] == pytest.approx(np.exp(-1j * w0 * t) * 0.5, abs=1e-15)


def test_evolve_linear_identity_and_group_property():
    rng = np.random.default_rng(1)
    h = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    h = h + h.conj().T
    b = real_batch(M=5)
    np.testing.assert_allclose(evolve_linear(b, h, 0.0).alpha, b.alpha, atol=1e-14)
    two = evolve_linear(evolve_linear(b, h, 0.3), h, 0.5)
    one = evolve_linear(b, h, 0.8)
    np.testing.assert_allclose(two.alpha, one.alpha, atol=1e-10)
    with pytest.raises(ValueError):
        evolve_linear(b, h + 1j * np.eye(5), 0.1)


def test_unitary_file_roundtrip(tmp_path):
    U = haar_unitary(9, 5)
    path = tmp_path / "u.bin"
    save_unitary(U, path)
    assert path.stat().st_size == 9 * 9 * 16
    raw = np.fromfile(path, dtype="<f8")
    assert raw[0] == U.entries[0, 0].real and raw[1] == U.entries[0, 0].imag
    np.testing.assert_array_equal(load_unitary(path).entries, U.entries)
    (tmp_path / "bad.bin").write_bytes(b"\0" * 24)
    with pytest.raises(ValueError):
        load_unitary(tmp_path / "bad.bin")
