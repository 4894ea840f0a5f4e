import csv
import json
import math

import numpy as np
import pytest

import statecp.simlab as simlab
from statecp.errors import ConfigError, DataSparsityError, SimulationError
from statecp.estimators import TimeSeries
from statecp.simlab import (
    MODEL_IDS,
    ModelSpec,
    TestConfig,
    calibrated_interval,
    power_experiment,
    provenance,
    run_replication,
    simulate,
    size_experiment,
    write_table,
)
from statecp.statetest import BandwidthPair, sup_statistic

NULL_MODELS = [ModelSpec("A", kappa=0.2), ModelSpec("A", kappa=0.8), ModelSpec("B"), ModelSpec("C"),
               ModelSpec("D"), ModelSpec("E"), ModelSpec("TAR", kappa=0.5)]


class TestSpec:
    def test_unknown_model(self):
        with pytest.raises(ConfigError):
            ModelSpec("Z")

    def test_short_burn_in(self):
        with pytest.raises(ConfigError):
            ModelSpec("D", burn_in=100)

    def test_defaults(self):
        assert ModelSpec("A").kappa == 0.2
        assert ModelSpec("F1").delta == 0.0 and ModelSpec("F1").change_points() == ()
        assert ModelSpec("F1", delta=0.8).change_points() == (0.0,)

    def test_labels(self):
        assert ModelSpec("A", kappa=0.8).label == "A(0.8)"
        assert ModelSpec("F2", delta=0.5).label == "F2(0.5)"


class TestSimulate:
    @pytest.mark.parametrize("model", MODEL_IDS)
    def test_reproducible(self, model):
        spec = ModelSpec(model, n=300, seed=4)
        a, b = simulate(spec).values, simulate(spec).values
        assert a.tobytes() == b.tobytes() and len(a) == 300

    def test_seed_changes_path(self):
        assert not np.array_equal(simulate(ModelSpec("D", seed=1)).values, simulate(ModelSpec("D", seed=2)).values)

    @pytest.mark.parametrize("spec", NULL_MODELS, ids=lambda s: s.label)
    def test_halves_agree(self, spec):
        v = simulate(ModelSpec(spec.id, n=10_000, seed=21, kappa=spec.kappa)).values
        a, b = v[:5000], v[5000:]
        pooled = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
        assert abs(a.mean() - b.mean()) < 4 * pooled

    def test_noiseless_d_contracts(self):
        v = simulate(ModelSpec("D", n=200, burn_in=500, sigma_scale=0.0)).values
        assert np.all(v == 0.0)

    def test_model_a_continuous(self):
        mu = ModelSpec("A", kappa=0.8).mean_function()
        for edge in (-1.0, 1.0):
            assert abs(mu(edge - 1e-9) - mu(edge + 1e-9)) < 1e-6

    def test_case2_jump_sizes(self):
        mu = ModelSpec("Case2").mean_function()
        assert abs(mu(-0.3) - mu(-0.3 - 1e-12)) == pytest.approx(1.56, abs=1e-9)
        assert abs(mu(0.0) - mu(-1e-12)) == pytest.approx(1.5, abs=1e-9)

    def test_tar_continuous_at_half(self):
        mu = ModelSpec("TAR", kappa=0.5).mean_function()
        assert mu(0.25) == pytest.approx(mu(0.25 - 1e-12), abs=1e-9)
        assert ModelSpec("TAR", kappa=0.5).change_points() == ()

    def test_explosion_reported(self, monkeypatch):
        monkeypatch.setitem(simlab._MU, "D", lambda s: lambda x: 3.0 * x + 1.0)
        with pytest.raises(SimulationError):
            simulate(ModelSpec("D", n=100))

    def test_returns_series(self):
        ts = simulate(ModelSpec("B", n=50))
        assert isinstance(ts, TimeSeries) and ts.name == "B"

    @pytest.mark.parametrize("kappa,target", [(0.2, 0.240), (0.8, 0.523)])
    def test_model_a_adcf(self, kappa, target):
        from statecp.estimators import adcf

        assert abs(adcf(simulate(ModelSpec("A", n=10_000, seed=1, kappa=kappa)), 1) - target) < 0.05

    def test_model_e_seasonal_adcf(self):
        from statecp.estimators import adcf

        ts = simulate(ModelSpec("E", n=10_000, seed=1))
        assert abs(adcf(ts, 7) - 0.258) < 0.05


class TestCalibration:
    def test_cached_and_fixed(self):
        a = calibrated_interval(ModelSpec("D", n=500, seed=1))
        b = calibrated_interval(ModelSpec("D", n=800, seed=99))
        assert a == b and a[0] < 0 < a[1]

    def test_central_mass(self):
        lo, hi = calibrated_interval(ModelSpec("D"))
        path = simulate(ModelSpec("D", n=simlab.CALIBRATION_LENGTH, seed=simlab.CALIBRATION_SEED)).values
        inside = np.mean((path >= lo) & (path <= hi))
        assert inside == pytest.approx(simlab._QUANTILES[1] - simlab._QUANTILES[0], abs=1e-3)

    def test_zero_noise_case1_is_too_sparse(self):
        # the noiseless orbit settles on a two-point cycle, leaving the interval empty
        ts = simulate(ModelSpec("Case1", n=800, sigma_scale=1e-3))
        with pytest.raises(DataSparsityError):
            sup_statistic(ts.pairs(), (-1.0, 1.0), BandwidthPair(0.2, 0.2))


class TestExperiments:
    CFG = TestConfig(boot_replicates=200, bandwidth=(0.5, 0.4))

    def test_replication_deterministic(self):
        a = run_replication(ModelSpec("D", n=300), self.CFG, 3, 0, detect=True)
        b = run_replication(ModelSpec("D", n=300), self.CFG, 3, 0, detect=True)
        assert a == b

    def test_workers_do_not_change_results(self):
        spec = ModelSpec("D", n=300)
        one = size_experiment(spec, self.CFG, replications=4, seed=5)
        two = size_experiment(spec, TestConfig(boot_replicates=200, bandwidth=(0.5, 0.4), workers=2), 4, 5)
        assert [r.sup for r in one.results] == [r.sup for r in two.results]
        assert [r.critical for r in one.results] == [r.critical for r in two.results]

    def test_errors_recorded_not_raised(self):
        res = run_replication(ModelSpec("D", n=300), TestConfig(bandwidth=(0.5, 0.4), interval=(5.0, 9.0)), 0, 0)
        assert res.error is not None and not res.reject

    def test_power_requires_jump_model(self):
        with pytest.raises(ConfigError):
            power_experiment(ModelSpec("D"), [0.0])

    def test_reports_and_table(self, tmp_path):
        rep = size_experiment(ModelSpec("D", n=300), self.CFG, replications=3, seed=1)
        assert rep.replications + rep.failures == 3
        assert 0.0 <= rep.metrics["rejection_rate"] <= 1.0
        path = tmp_path / "t.csv"
        write_table([rep], path)
        rows = list(csv.reader(open(path)))
        assert rows[0][:3] == ["model", "n", "alpha"] and rows[1][0] == "D"
        prov = provenance([rep])
        json.dumps(prov)
        assert len(prov["config_hash"]) == 16
