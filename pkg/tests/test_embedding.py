import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import phasekit as pk


def test_embed_definition():
    ts = pk.TimeSeries([1.0, 2.0, 3.0, 4.0, 5.0])
    emb = pk.embed(ts, 2, 1)
    np.testing.assert_array_equal(
        emb.points, [[2, 1], [3, 2], [4, 3], [5, 4]])
    np.testing.assert_array_equal(emb.times, [1, 2, 3, 4])


def test_embed_m1_is_identity():
    ts = pk.TimeSeries([3.0, 1.0, 4.0, 1.0, 5.0])
    emb = pk.embed(ts, 1, 1)
    np.testing.assert_array_equal(emb.points[:, 0], ts.values[:, 0])


def test_embed_constant_series_identical_rows():
    ts = pk.TimeSeries(np.ones(10))
    emb = pk.embed(ts, 3, 2)
    assert np.all(emb.points == emb.points[0])


def test_embed_too_short():
    with pytest.raises(pk.InsufficientDataError):
        pk.embed(pk.TimeSeries([1.0, 2.0, 3.0]), 4, 1)


def test_embed_multichannel_blocks():
    vals = np.column_stack([np.arange(6.0), np.arange(6.0) * 10])
    emb = pk.embed(pk.TimeSeries(vals), 2, 2)
    # channel blocks: (y0(t), y0(t-2), y1(t), y1(t-2))
    np.testing.assert_array_equal(emb.points[0], [2.0, 0.0, 20.0, 0.0])
    assert emb.width == 4


@given(st.integers(1, 4), st.integers(1, 3), st.integers(12, 40))
def test_embed_row_count_and_exact_copies(m, tau, n):
    rng = np.random.default_rng(n)
    y = rng.normal(size=n)
    emb = pk.embed(pk.TimeSeries(y), m, tau)
    assert emb.n_points == n - (m - 1) * tau
    for row in (0, emb.n_points - 1):
        t = emb.times[row]
        for j in range(m):
            assert emb.points[row, j] == y[t - j * tau]


def test_embedding_to_series_names():
    emb = pk.embed(pk.TimeSeries(np.arange(8.0)), 2, 1)
    out = pk.embedding_to_series(emb)
    assert out.names == ("ch0_z1", "ch0_z2")


def test_mi_profile_non_negative(henon_series):
    prof = pk.mutual_information_profile(henon_series, 10)
    assert np.all(prof.values >= 0.0)
    assert prof.taus[0] == 1 and prof.taus[-1] == 10


def test_mi_constant_channel_rejected():
    with pytest.raises(pk.DegenerateDataError):
        pk.mutual_information_profile(pk.TimeSeries(np.ones(100)), 5)


def test_mi_iid_noise_near_zero():
    rng = np.random.default_rng(0)
    ts = pk.TimeSeries(rng.uniform(size=100000))
    prof = pk.mutual_information_profile(ts, 10, bins=16)
    assert np.all(prof.values < 0.02)


def test_mi_time_reversal_symmetry():
    rng = np.random.default_rng(3)
    y = rng.normal(size=600).cumsum()
    fwd = pk.mutual_information_profile(pk.TimeSeries(y), 12)
    rev = pk.mutual_information_profile(pk.TimeSeries(y[::-1].copy()), 12)
    np.testing.assert_allclose(fwd.values, rev.values, atol=1e-12)


def test_select_delay_interior_minimum():
    prof = pk.MIProfile(np.arange(1, 6), np.array([3, 2, 1, 2, 3.0]), 8)
    assert pk.select_delay(prof) == 3


def test_select_delay_monotone_warns():
    prof = pk.MIProfile(np.arange(1, 6), np.array([5, 4, 3, 2, 1.0]), 8)
    with pytest.warns(pk.NoInteriorMinimumWarning):
        assert pk.select_delay(prof) == 5


def test_select_delay_plateau_first_of_minimal_run():
    prof = pk.MIProfile(np.arange(1, 5), np.array([3, 1, 1, 2.0]), 8)
    with pytest.warns(pk.NoInteriorMinimumWarning):
        assert pk.select_delay(prof) == 2


def _line_embedding(values):
    pts = np.asarray(values, dtype=float)[:, None]
    return pk.DelayEmbedding(pts, np.arange(pts.shape[0]), 1, 1, 1.0)


def test_knn_line_basic():
    emb = _line_embedding([0.0, 1.0, 3.0])
    idx, dist = pk.knn_query(emb, 0, 1, theiler=0)
    assert idx[0] == 1 and dist[0] == pytest.approx(1.0)
    idx, dist = pk.knn_query(emb, 1, 2, theiler=0)
    np.testing.assert_array_equal(idx, [0, 2])
    np.testing.assert_allclose(dist, [1.0, 2.0])


def test_knn_theiler_excludes_temporal_neighbors():
    emb = _line_embedding([0.0, 0.1, 0.2, 5.0])
    idx, _ = pk.knn_query(emb, 1, 1, theiler=1)
    assert idx[0] == 3  # rows 0 and 2 are inside the temporal window


def test_knn_tie_breaks_by_lower_row():
    emb = _line_embedding([0.0, 1.0, -1.0, 1.0])
    idx, dist = pk.knn_query(emb, 0, 2, theiler=0)
    assert dist[0] == dist[1] == pytest.approx(1.0)
    np.testing.assert_array_equal(idx, [1, 2])


def test_knn_insufficient_neighbors():
    emb = _line_embedding([0.0, 1.0, 2.0])
    with pytest.raises(pk.InsufficientDataError):
        pk.knn_query(emb, 1, 4, theiler=0)


@given(st.integers(0, 10 ** 6), st.integers(1, 6), st.integers(0, 3))
def test_knn_matches_brute_force(seed, k, theiler):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(max(12, k + 2 * theiler + 3), 60))
    pts = rng.normal(size=(n, 2))
    emb = pk.DelayEmbedding(pts, np.arange(n), 1, 1, 1.0)
    row = int(rng.integers(0, n))
    adm = np.array([i for i in range(n) if abs(i - row) > theiler])
    if adm.size < k:
        return
    idx, dist = pk.knn_query(emb, row, k, theiler=theiler)
    d = np.sqrt(np.sum((pts[adm] - pts[row]) ** 2, axis=1))
    order = np.lexsort((adm, d))
    np.testing.assert_array_equal(idx, adm[order][:k])
    np.testing.assert_allclose(dist, d[order][:k])
    assert np.all(np.diff(dist) >= 0)


def test_radius_query_inclusive_and_ordered():
    emb = _line_embedding([0.0, 0.5, 1.0, 2.0])
    index = pk.NeighborIndex(emb, default_theiler=0)
    idx, dist = index.radius(0, 1.0)
    np.testing.assert_array_equal(idx, [1, 2])
    np.testing.assert_allclose(dist, [0.5, 1.0])
