import numpy as np
import pytest

from histreg import AllResamplesFailed, Histogram, SingularDesign, SymbolicTable, bootstrap
from histreg import resample as rs


@pytest.fixture
def identical_rows():
    y = Histogram.from_bins([(10, 11, 0.3), (11, 14, 0.7)])
    x = Histogram.from_bins([(1, 1.5, 0.6), (1.5, 3, 0.4)])
    return SymbolicTable(tuple(range(6)), "Y", [y] * 6, {"X": [x] * 6})


def test_resample_indices():
    for b in range(20):
        idx = rs.resample_indices(9, seed=5, b=b)
        assert idx.shape == (9,) and idx.min() >= 0 and idx.max() < 9
    assert np.array_equal(rs.resample_indices(9, 5, 3), rs.resample_indices(9, 5, 3))
    assert not np.array_equal(rs.resample_indices(9, 5, 3), rs.resample_indices(9, 5, 4))


@pytest.mark.parametrize("kind", ["bd", "db"])
def test_identical_rows_have_no_spread(identical_rows, kind):
    s = bootstrap(identical_rows, kind, 30, seed=1, with_gof=False)
    for p in s.params.values():
        assert p.se == 0.0
        assert p.p2_5 == p.p97_5 == p.observed
        assert p.mean == pytest.approx(p.observed, abs=1e-12 * (1 + abs(p.observed)))


def test_same_seed_same_summary_any_worker_count(blood):
    a = bootstrap(blood, "iv", 40, seed=7, workers=1)
    b = bootstrap(blood, "iv", 40, seed=7, workers=3)
    assert a.to_dict(include_draws=True) == b.to_dict(include_draws=True)
    c = bootstrap(blood, "iv", 40, seed=8, workers=1)
    assert c.to_dict() != a.to_dict()


def test_bd_bootstrap_is_deterministic(blood):
    a = bootstrap(blood, "bd", 10, seed=2, workers=2)
    b = bootstrap(blood, "bd", 10, seed=2, workers=1)
    assert a.to_dict(include_draws=True) == b.to_dict(include_draws=True)


def test_constraint_and_percentile_order(blood):
    s = bootstrap(blood, "iv", 60, seed=3)
    assert np.all(s.draws["gamma[X]"] >= 0)
    for stats in list(s.params.values()) + list(s.gof.values()):
        assert stats.p2_5 <= stats.p97_5
    p = s.params["beta[X]"]
    x = s.draws["beta[X]"]
    assert p.se == pytest.approx(np.std(x, ddof=1))
    assert p.bias == pytest.approx(p.mean - p.observed)
    assert (p.p2_5, p.p97_5) == pytest.approx(tuple(np.percentile(x, [2.5, 97.5])))
    assert s.n_failed + s.n_succeeded == s.n_resamples


def test_failed_resamples_are_counted(blood, monkeypatch):
    real = rs.fit_model
    calls = {"n": 0}

    def flaky(tbl, kind, **kw):
        calls["n"] += 1
        if kw.get("diagnostics", True) is False and calls["n"] % 3 == 0:
            raise SingularDesign("forced")
        return real(tbl, kind, **kw)

    monkeypatch.setattr(rs, "fit_model", flaky)
    s = bootstrap(blood, "db", 30, seed=0, workers=1)
    assert s.n_failed == 10
    assert len(s.draws["beta0"]) == 20


def test_all_failed(blood, monkeypatch):
    real = rs.fit_model

    def failing(tbl, kind, **kw):
        if kw.get("diagnostics", True) is False:
            raise SingularDesign("forced")
        return real(tbl, kind, **kw)

    monkeypatch.setattr(rs, "fit_model", failing)
    with pytest.raises(AllResamplesFailed):
        bootstrap(blood, "iv", 5, seed=0)


def test_needs_two_resamples(blood):
    with pytest.raises(ValueError):
        bootstrap(blood, "iv", 1)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("HISTREG_THREADS", "2")
    assert rs.worker_count(8) == 2
    assert rs.worker_count(1) == 1
    monkeypatch.delenv("HISTREG_THREADS")
    assert rs.worker_count(5) == 5
