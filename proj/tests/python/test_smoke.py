import math

import pytest

filtlab = pytest.importorskip("filtlab")


def test_grid_points():
    g = filtlab.make_grid(1.0, 4)
    assert list(g.points) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert g.horizon == 1.0
    with pytest.raises(ValueError):
        filtlab.make_grid(1.0, 1)


def test_closed_forms():
    assert filtlab.bb_density_q(0.5, 0.0, 1.0, 1.0) == pytest.approx(
        math.sqrt(2.0) * math.exp(-0.5)
    )
    assert filtlab.bb_drift(0.0, 0.0, 1.0, 1.0) == pytest.approx(1.0)
    assert filtlab.poisson_density_q(0.5, 2, 1, 1.0) == pytest.approx(math.exp(0.5))
    assert filtlab.poisson_bridge_intensity(0.0, 3, 0) == pytest.approx(3.0)
    assert filtlab.hitting_cdf(0.0, 0.0, 1.0, True) == pytest.approx(0.3173105078629141)
    assert filtlab.hitting_alpha(0.0, 0.0, 2.0) == pytest.approx(0.5)
    assert filtlab.noisy_drift(0.0, 1.0, 0.0, 1.0, 0.0) == pytest.approx(1.0)


def test_brownian_reproducible_across_workers():
    g = filtlab.make_grid(1.0, 32)
    a = filtlab.simulate_brownian(g, 16, 7)
    b = filtlab.simulate_brownian(g, 16, 7, workers=4)
    assert a.values.shape == (16, 33)
    assert (a.values == b.values).all()
    assert "terminal" in a.aux


def test_poisson_jump_times():
    g = filtlab.make_grid(1.0, 8)
    bundle = filtlab.simulate_poisson(2.0, g, 64, 3)
    for jumps in bundle.jump_times:
        assert all(0.0 < t <= 1.0 for t in jumps)
        assert list(jumps) == sorted(jumps)


def test_hitting_sampler_ks():
    taus = filtlab.sample_hitting_time_unit(20000, 3)

    def cdf(t):
        return math.erfc(1.0 / math.sqrt(2.0 * t)) if t > 0 else 0.0

    report = filtlab.ks_test(taus, cdf, 0.01)
    assert report["pass"]


def test_variance_schedule():
    s = filtlab.VarianceSchedule.bridge_to(1.0, [0.0, 0.5, 1.0], [0.5, math.sqrt(0.75)])
    assert s.v0 == pytest.approx(0.5)
    assert s.v(1.0) == pytest.approx(1.0)
    assert filtlab.peof_cross_covariance(s, 0.5) > 0.0


def test_run_experiment_small():
    reports = filtlab.run_experiment(
        {"experiment": "hitting-time", "seed": 5, "n_paths": 4000, "n_steps": 64}
    )
    assert reports
    assert all(r["as_expected"] for r in reports)
