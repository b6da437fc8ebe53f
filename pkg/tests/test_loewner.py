import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loewnerid.exceptions import (CoincidentPoints, ConfigError, EmptyData, NotConjugateClosed,
                                  OddCount, SingularLoewner)
from loewnerid.loewner import (MeasurementSet, build_pencil, compress_realize, conjugate_augment,
                               loewner_model, loewner_rank, realify, realify_pencil, realize,
                               split_points)
from loewnerid.lti import FrequencyGrid, StateSpace, eval_tf, freqresp, make_random_stable

GRID = FrequencyGrid.logspace(1e-1, 1e3, 500)


def first_order(s):
    return 1 / (s + 1)


def samples(model, idx):
    pts = GRID.points[idx]
    return pts, freqresp(model, pts)


def spread(count):
    return np.linspace(0, len(GRID) - 1, count).astype(int)


def test_split_interlaces():
    ms = split_points(MeasurementSet([1j, 2j, 3j, 4j], [1, 2, 3, 4]))
    np.testing.assert_array_equal(ms.left[0], [1j, 3j])
    np.testing.assert_array_equal(ms.right[0], [2j, 4j])
    np.testing.assert_array_equal(ms.left[1], [1, 3])


def test_split_is_order_invariant():
    ms = split_points(MeasurementSet([4j, 1j, 3j, 2j], [4, 1, 3, 2]))
    np.testing.assert_array_equal(ms.left[0], [1j, 3j])
    np.testing.assert_array_equal(ms.right[0], [2j, 4j])
    np.testing.assert_array_equal(ms.right[1], [2, 4])


def test_split_breaks_ties_on_real_part():
    ms = split_points(MeasurementSet([1 + 1j, 1j, 2j, -1 + 2j], [0, 0, 0, 0]))
    np.testing.assert_array_equal(ms.left[0], [1j, -1 + 2j])


def test_split_odd_count():
    with pytest.raises(OddCount):
        split_points(MeasurementSet([1j, 2j, 3j], [1, 2, 3]))


def test_measurement_set_validation():
    with pytest.raises(ConfigError):
        MeasurementSet([1j, 1j], [1, 2])
    with pytest.raises(ConfigError):
        MeasurementSet([1j, 2j], [1])
    with pytest.raises(ConfigError):
        MeasurementSet([1j, 2j], [1, 2], (0,), (0,))


@pytest.mark.parametrize('n', [1, 3, 6, 10])
def test_rank_equals_order(n):
    m = make_random_stable(n, 10 + n)
    pts, vals = samples(m, spread(2 * n))
    assert loewner_rank(build_pencil(split_points(MeasurementSet(pts, vals)))) == n


def test_pencil_by_hand():
    ms = MeasurementSet([1, 2], [first_order(1), first_order(2)], (0,), (1,))
    p = build_pencil(ms)
    assert p.L[0, 0] == pytest.approx(-1 / 6, abs=1e-15)
    assert p.Ls[0, 0] == pytest.approx(1 / 6, abs=1e-15)
    assert p.V[0, 0] == pytest.approx(1 / 3) and p.W[0, 0] == pytest.approx(1 / 2)
    np.testing.assert_array_equal(p.ones, [1.0])


def test_constant_data_gives_zero_loewner():
    p = build_pencil(MeasurementSet([1j, 2j], [4.2, 4.2], (0,), (1,)), D=4.2)
    assert p.L[0, 0] == 0


def test_coincident_points():
    # a valid set never has coincident points, so force one past validation
    ms = MeasurementSet([1j, 2j], [1, 2], (0,), (1,))
    object.__setattr__(ms, 'points', np.array([1j, 1j]))
    with pytest.raises(CoincidentPoints):
        build_pencil(ms)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 1000))
def test_shifted_loewner_identities(n, seed):
    m = make_random_stable(n, seed)
    pts, vals = samples(m, spread(2 * n))
    p = build_pencil(split_points(MeasurementSet(pts, vals)))
    lam, mu = p.lam, p.mu
    scale = np.abs(vals).max()
    # Ls - mu_i L = H(lambda_j), Ls - lambda_j L = H(mu_i)
    np.testing.assert_allclose(p.Ls - mu[:, None] * p.L, np.broadcast_to(p.W, p.L.shape),
                               atol=1e-12 * scale * 1e3)
    np.testing.assert_allclose(p.Ls - lam[None, :] * p.L, np.broadcast_to(p.V, p.L.shape),
                               atol=1e-12 * scale * 1e3)
    # divided-difference form, entry by entry
    for i in range(p.size):
        for j in range(p.size):
            assert p.L[i, j] * (lam[j] - mu[i]) == pytest.approx(p.W[0, j] - p.V[i, 0],
                                                                   abs=1e-12 * scale)


def test_realize_order_one_example():
    ms = MeasurementSet([1, 2], [first_order(1), first_order(2)], (0,), (1,))
    r = realize(build_pencil(ms))
    assert eval_tf(r, 1) == pytest.approx(0.5, abs=1e-12)
    assert eval_tf(r, 2) == pytest.approx(1 / 3, abs=1e-12)
    for s in [0, 3j, 10 - 1j]:
        assert eval_tf(r, s) == pytest.approx(first_order(s), abs=1e-12)


def test_pure_gain_data():
    ms = MeasurementSet([1j, 2j, 3j, 4j], [2.5] * 4)
    p = build_pencil(split_points(ms), D=2.5)
    np.testing.assert_array_equal(p.V - p.D, 0)
    with pytest.raises(SingularLoewner):
        realize(p)
    r = compress_realize(p)
    assert r.order == 0
    assert eval_tf(r, 7j) == 2.5


def test_zero_data_gives_order_zero():
    r = compress_realize(build_pencil(split_points(MeasurementSet([1j, 2j], [0, 0]))))
    assert r.order == 0 and r.D == 0


def test_empty_pencil():
    with pytest.raises(EmptyData):
        compress_realize(build_pencil(MeasurementSet([], [], (), ())))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 10_000))
def test_interpolation_property(n, seed):
    m = make_random_stable(n, seed)
    pts, vals = samples(m, spread(2 * n))
    ms = split_points(MeasurementSet(pts, vals))
    r = realize(build_pencil(ms))
    got = freqresp(r, ms.points)
    assert np.max(np.abs(got - ms.values) / np.abs(ms.values)) <= 1e-8


def test_realize_with_feedthrough():
    m = make_random_stable(4, 1).with_feedthrough(0.75)
    pts, vals = samples(m, spread(8))
    r = realize(build_pencil(split_points(MeasurementSet(pts, vals)), D=0.75))
    assert r.D == 0.75
    np.testing.assert_allclose(freqresp(r, GRID.points), freqresp(m, GRID.points), rtol=1e-7)


def test_compress_order_four_from_twenty_samples():
    m = make_random_stable(4, 5)
    pts, vals = samples(m, spread(20))
    r = compress_realize(build_pencil(split_points(MeasurementSet(pts, vals))))
    assert r.order == 4
    assert np.max(np.abs(freqresp(r, GRID.points) - freqresp(m, GRID.points))) <= 1e-7


@pytest.mark.parametrize('n,seed', [(2, 0), (5, 1), (8, 2)])
def test_compress_with_zero_tol_equals_realize(n, seed):
    m = make_random_stable(n, seed)
    pts, vals = samples(m, spread(2 * n))
    p = build_pencil(split_points(MeasurementSet(pts, vals)))
    full, comp = realize(p), compress_realize(p, rank_tol=0)
    a, b = freqresp(full, GRID.points), freqresp(comp, GRID.points)
    assert np.max(np.abs(a - b)) <= 1e-10 * np.abs(a).max()


def test_conjugate_augment_layout():
    ms = split_points(MeasurementSet([1j, 2j, 3j, 4j], [1 + 1j, 2, 3, 4 - 1j]))
    aug = conjugate_augment(ms)
    np.testing.assert_array_equal(aug.left[0], [1j, -1j, 3j, -3j])
    np.testing.assert_array_equal(aug.left[1], [1 + 1j, 1 - 1j, 3, 3])
    np.testing.assert_array_equal(aug.right[0], [2j, -2j, 4j, -4j])


def test_conjugate_augment_keeps_real_points_single():
    aug = conjugate_augment(split_points(MeasurementSet([0, 2j], [1, 2])))
    assert len(aug) == 3


def complex_pair_model(n, seed):
    # conjugates double the data, so n measured points determine an order-n plant
    m = make_random_stable(n, seed)
    pts, vals = samples(m, spread(n))
    ms = conjugate_augment(split_points(MeasurementSet(pts, vals)))
    return m, realize(build_pencil(ms))


@pytest.mark.parametrize('n,seed', [(2, 3), (4, 4), (6, 5)])
def test_realify_model(n, seed):
    m, c = complex_pair_model(n, seed)
    assert not c.is_real
    r = realify(c)
    assert r.is_real
    a, b = freqresp(c, GRID.points[::5]), freqresp(r, GRID.points[::5])
    assert np.max(np.abs(a - b) / np.abs(a)) <= 1e-8
    np.testing.assert_allclose(b, freqresp(m, GRID.points[::5]), rtol=1e-6)


def test_realify_real_model_unchanged():
    m = make_random_stable(3, 0)
    assert realify(m) is m


def test_realify_rejects_unpaired_data():
    m = make_random_stable(2, 0)
    pts, vals = samples(m, spread(4))
    c = realize(build_pencil(split_points(MeasurementSet(pts, vals))))
    with pytest.raises(NotConjugateClosed):
        realify(c)


def test_realify_pencil_is_exactly_real_and_equivalent():
    m = make_random_stable(6, 8)
    pts, vals = samples(m, spread(6))
    p = build_pencil(conjugate_augment(split_points(MeasurementSet(pts, vals))))
    q = realify_pencil(p)
    assert q.is_real
    np.testing.assert_allclose(np.linalg.svd(q.L, compute_uv=False),
                               np.linalg.svd(p.L, compute_uv=False), rtol=1e-9, atol=1e-14)
    a, b = freqresp(realize(p), GRID.points[::7]), freqresp(realize(q), GRID.points[::7])
    np.testing.assert_allclose(b, a, rtol=1e-8)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 10_000), extra=st.integers(0, 10))
def test_loewner_model_is_real_minimal_and_accurate(n, seed, extra):
    m = make_random_stable(n, seed)
    count = 2 * n + 2 * extra
    pts, vals = samples(m, spread(count))
    r = loewner_model(pts, vals)
    assert r.is_real
    assert r.order == n
    gap = np.abs(freqresp(r, GRID.points) - freqresp(m, GRID.points))
    assert gap.max() <= 1e-6 * np.abs(freqresp(m, GRID.points)).max()


def test_loewner_model_discrete():
    T = 0.9 * np.pi / 1e3
    m = make_random_stable(6, 2, sample_time=T)
    grid = FrequencyGrid.logspace(1e-1, 1e3, 500, sample_time=T)
    idx = spread(12)
    z = grid.eval_points[idx]
    r = loewner_model(z, freqresp(m, z), sample_time=T)
    assert r.is_discrete and r.order == 6
    np.testing.assert_allclose(freqresp(r, grid.eval_points), freqresp(m, grid.eval_points),
                               atol=1e-8)


def test_loewner_model_noise_truncation_degrades_gracefully():
    m = make_random_stable(4, 0)
    pts, vals = samples(m, spread(20))
    rng = np.random.default_rng(0)
    noisy = vals + 1e-9 * (rng.standard_normal(20) + 1j * rng.standard_normal(20))
    r = loewner_model(pts, noisy, rank_tol=1e-8)
    assert r.order == 4
    assert np.max(np.abs(freqresp(r, pts) - vals)) <= 1e-6


def test_state_space_pair_on_real_axis():
    # a real interpolation point is its own conjugate and stays a 1x1 block
    m = StateSpace(1, -1, 1, 1, 0)
    r = loewner_model([0.5, 2j], [eval_tf(m, 0.5), eval_tf(m, 2j)])
    assert r.is_real
    assert eval_tf(r, 7j) == pytest.approx(eval_tf(m, 7j), abs=1e-10)


@pytest.mark.parametrize('n,seed,D', [(3, 0, 0.75), (6, 1, -2.0), (8, 2, 1e3)])
def test_real_pipeline_with_feedthrough(n, seed, D):
    m = make_random_stable(n, seed).with_feedthrough(D)
    pts, vals = samples(m, spread(2 * n + 4))
    r = loewner_model(pts, vals, D=D)
    assert r.is_real and r.order == n and r.D == D
    np.testing.assert_allclose(freqresp(r, GRID.points), freqresp(m, GRID.points), rtol=1e-7)
