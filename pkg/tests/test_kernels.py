import numpy as np
import pytest

from histreg import kernels
from histreg.histcore import constant

from oracles import eval_hist, quad, random_histogram


def test_loop_and_numpy_kernels_agree(rng):
    hs = [random_histogram(rng, max_bins=6) for _ in range(24)]
    qs = [h.quantile_function for h in hs]
    for mode in (kernels.PRODUCT, kernels.SQDIFF):
        for f, g in zip(qs[::2], qs[1::2]):
            a = kernels.merge_integral_loop(f.t, f.start, f.end, g.t, g.start, g.end, mode)
            b = kernels.merge_integral_numpy(f.t, f.start, f.end, g.t, g.start, g.end, mode)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)
        pa = kernels.pack(qs[:12])
        pb = kernels.pack(qs[12:])
        assert np.allclose(kernels.gram_loop(*pa, *pb, 4, 3, 3, mode), kernels.gram_numpy(*pa, *pb, 4, 3, 3, mode), rtol=1e-12)
        assert np.allclose(kernels.rowwise_loop(*pa, *pb, mode), kernels.rowwise_numpy(*pa, *pb, mode), rtol=1e-12)
    u = rng.random(5000)
    q = qs[0]
    assert np.allclose(kernels.sample_loop(q.t, q.start, q.end, u), kernels.sample_numpy(q.t, q.start, q.end, u), rtol=0, atol=1e-12)


def test_dispatch_uses_selected_path(kernel_path, rng):
    h, g = random_histogram(rng), random_histogram(rng)
    f, q = h.quantile_function, g.quantile_function
    got = kernels.merge_integral(f.t, f.start, f.end, q.t, q.start, q.end, kernels.PRODUCT)
    assert got == pytest.approx(quad(lambda t: eval_hist(h, t) * eval_hist(g, t), h, g), rel=1e-6, abs=1e-6)


def test_sampling_hits_every_piece(kernel_path, rng):
    h = random_histogram(rng, max_bins=4, point_prob=0.0)
    q = h.quantile_function
    u = rng.random(200_000)
    x = kernels.sample_inverse_cdf(q.t, q.start, q.end, u)
    assert np.allclose(x, eval_hist(h, u), atol=1e-9)
    assert x.mean() == pytest.approx(q.mean, abs=4 * q.std / np.sqrt(u.size) + 1e-12)


def test_union_grid_dedupes_close_points():
    grid = kernels.union_grid(np.array([0.0, 0.4, 1.0]), np.array([0.0, 0.4 + 1e-14, 0.7, 1.0]))
    assert np.allclose(grid, [0.0, 0.4, 0.7, 1.0])


def test_pack_layout():
    qs = [constant(1.0), random_histogram(np.random.default_rng(0), max_bins=3).quantile_function]
    poff, t, s, e = kernels.pack(qs)
    for c, q in enumerate(qs):
        assert np.array_equal(t[poff[c] + c : poff[c + 1] + c + 1], q.t)
        assert np.array_equal(s[poff[c] : poff[c + 1]], q.start)
