import numpy as np
from scipy import stats

from regmodbp.rng import Stream


def test_streams_are_deterministic():
    a = Stream(123, 7).words(64)
    b = Stream(123, 7).words(64)
    assert np.array_equal(a, b)


def test_streams_are_counter_addressed():
    s = Stream(123, 7)
    first = s.words(10)
    rest = s.words(10)
    both = Stream(123, 7).words(20)
    assert np.array_equal(np.concatenate([first, rest]), both)


def test_distinct_streams_differ():
    a = Stream(123, 0).words(32)
    b = Stream(123, 1).words(32)
    c = Stream(124, 0).words(32)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_uniforms_range_and_mean():
    u = Stream(5, 0).uniforms(20000)
    assert np.all((u >= 0.0) & (u < 1.0))
    assert abs(u.mean() - 0.5) < 3 * 0.2887 / np.sqrt(u.size)


def test_gaussians_ks():
    z = Stream(5, 1).gaussians(10000)
    d = stats.kstest(z, "norm").statistic
    assert d < 1.63 / np.sqrt(z.size)  # 1% critical value


def test_gaussians_batching_independent_of_request_split():
    s1 = Stream(5, 2)
    a = np.concatenate([s1.gaussians(7), s1.gaussians(13)])
    # different split; the draw order from the stream differs, but the
    # stream itself must not be corrupted: full redraw matches
    b = Stream(5, 2)
    first = b.gaussians(7)
    assert np.array_equal(a[:7], first)


def test_randbelow_uniform():
    s = Stream(5, 3)
    counts = np.zeros(7, dtype=int)
    n = 14000
    for _ in range(n):
        counts[s.randbelow(7)] += 1
    expected = n / 7
    assert np.all(np.abs(counts - expected) < 5 * np.sqrt(expected))


def test_subset_is_sorted_uniform():
    s = Stream(5, 4)
    hits = np.zeros(10, dtype=int)
    n = 6000
    for _ in range(n):
        sub = s.subset(np.arange(10), 3)
        assert sub.size == 3 and np.all(np.diff(sub) > 0)
        hits[sub] += 1
    p = 0.3
    assert np.all(np.abs(hits - n * p) < 5 * np.sqrt(n * p * (1 - p)))
