import numpy as np
import pytest

from zoprox.core import SeedSpec
from zoprox.experiments import (
    bias_asymptotics_quadratic,
    bias_variance_vs_delta,
    classical_prox_abs,
    continuation_comparison,
    delta_sweep_abs,
    escape_frequency,
    final_f_table,
    variance_vs_distance,
)


class TestDeltaSweep:
    def test_classical_prox(self):
        assert classical_prox_abs(2.0, 1.0) == 1.0
        assert classical_prox_abs(-0.5, 1.0) == 0.0
        assert classical_prox_abs(-3.0, 1.0) == -2.0

    def test_small_delta_gap(self):
        # the exact operator reaches the prox while the sampled mean cannot
        cols = delta_sweep_abs(np.geomspace(1e-4, 10.0, 25), seed=SeedSpec(0))
        assert abs(cols["zprox_exact"][0] - 1.0) <= 1e-3
        assert abs(cols["szopo_mean"][0] - 1.0) >= 0.05

    def test_top_delta_near_uniform_weights(self):
        cols = delta_sweep_abs(np.geomspace(1e-4, 10.0, 25), seed=SeedSpec(0))
        assert cols["ess_mean"][-1] >= 0.95 * 5000

    def test_bias_variance_grid_shape(self):
        deltas = np.geomspace(1e-3, 1.0, 5)
        cols = bias_variance_vs_delta(deltas, ns=(50, 500), trials=10, seed=SeedSpec(1))
        assert len(cols["n"]) == 10
        assert set(cols["n"]) == {50, 500}
        assert all(v >= 0 for v in cols["variance"])
        # mse = bias^2 + variance*(trials-1)/trials up to fp noise
        for b, v, m in zip(cols["bias"], cols["variance"], cols["mse"]):
            assert m == pytest.approx(b * b + v * 9 / 10, rel=1e-9, abs=1e-12)


class TestQuadraticAsymptotics:
    def test_fig6_theory_column(self):
        cols = variance_vs_distance([0.0, 1.0], n=1000, trials=5, seed=SeedSpec(2))
        assert cols["c2"][0] == pytest.approx(0.5625, abs=1e-12)
        assert cols["var_theory"][0] == pytest.approx(0.5625 / 1000, abs=1e-15)

    def test_bias_trend_toward_c1(self):
        out = bias_asymptotics_quadratic([1000, 10_000, 100_000], trials=300, seed=SeedSpec(606))
        c1 = out["c1"][0]
        devs = [abs(bn - c1) for bn in out["bias_times_n"]]
        ses = [se * n for se, n in zip(out["bias_controlled_se"], out["n"])]
        for dev, se in zip(devs, ses):
            assert dev <= 5 * se
        assert devs[-1] <= 0.3 * c1
        assert devs[-1] < devs[0]


class TestContinuation:
    def test_paired_streams_shared_across_configs(self):
        cols = continuation_comparison(
            "wiggly1d", 100, 5, range(2), fixed_lambdas=(1.0,),
            seed=SeedSpec(3), use_preset_x0=True,
        )
        finals = final_f_table(cols)
        # same preset start for all configs
        first_rows = {
            (cfg, s): f
            for cfg, s, k, f in zip(cols["config"], cols["seed"], cols["iter"], cols["f"])
            if k == 0
        }
        assert len(set(first_rows.values())) == 1
        assert len(finals) == 4  # 2 configs x 2 seeds

    def test_long_format_lengths(self):
        cols = continuation_comparison(
            "wiggly1d", 50, 4, range(3), fixed_lambdas=(0.1, 1.0), seed=SeedSpec(4),
        )
        # (2 fixed + 1 continuation) x 3 seeds x (4 iters + final row)
        assert len(cols["f"]) == 3 * 3 * 5


class TestEscapeFrequency:
    def test_matches_chi_square_tail(self):
        out = escape_frequency(batches=20_000, seed=SeedSpec(5))
        # chi^2_4 survival at R = 16: exp(-8) * (1 + 8)
        expected = np.exp(-8.0) * 9.0
        assert out["frequency"] == pytest.approx(expected, abs=4 * out["se"])
