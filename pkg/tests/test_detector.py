from dataclasses import replace

import numpy as np
import pytest

from statecp.detector import accuracy_metrics, detect_change_points
from statecp.errors import OverSegmentationError, StateCPError
from statecp.estimators import RegressionPairs
from statecp.kernels import default_kernel
from statecp.statetest import BandwidthPair, gumbel_critical, sup_statistic

INTERVAL = (-1.5, 1.5)
BW = BandwidthPair(0.3, 0.2)


@pytest.fixture(scope="module")
def kern():
    return default_kernel()


def step_data(jumps, n=4000, noise=0.2, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, n)
    y = 0.3 * np.sin(x) + noise * rng.normal(size=n)
    for loc, size in jumps:
        y = y + np.where(x >= loc, size, 0.0)
    return RegressionPairs(x, y)


@pytest.fixture(scope="module")
def two_jumps():
    return step_data([(-0.5, 2.0), (0.7, -2.0)])


def crit(n, kern, alpha=0.05):
    return gumbel_critical(n, BW.b, INTERVAL, kern, alpha)


class TestDetection:
    def test_finds_both_jumps(self, two_jumps, kern):
        rep = detect_change_points(two_jumps, INTERVAL, BW, kern, critical=crit(two_jumps.n, kern))
        assert rep.m_hat == 2
        np.testing.assert_allclose(rep.locations, [-0.5, 0.7], atol=0.03)
        assert rep.residual_sup < rep.critical.value

    def test_detections_separated(self, two_jumps, kern):
        rep = detect_change_points(two_jumps, INTERVAL, BW, kern, critical=crit(two_jumps.n, kern))
        grid_locs = sorted(d.grid_location for d in rep.detections)
        assert all(b - a > BW.b for a, b in zip(grid_locs, grid_locs[1:]))

    def test_order_records_strength(self, two_jumps, kern):
        rep = detect_change_points(two_jumps, INTERVAL, BW, kern, critical=crit(two_jumps.n, kern))
        by_order = sorted(rep.detections, key=lambda d: d.order)
        assert abs(by_order[0].statistic) >= abs(by_order[1].statistic)
        assert rep.locations == sorted(rep.locations)

    def test_refinement_stays_near_grid(self, two_jumps, kern):
        rep = detect_change_points(two_jumps, INTERVAL, BW, kern, critical=crit(two_jumps.n, kern))
        step = rep.curve.grid[1] - rep.curve.grid[0]
        for d in rep.detections:
            assert abs(d.location - d.grid_location) <= step * (1 + 1e-9)
            assert abs(d.statistic) >= abs(rep.curve.t_n[np.argmin(np.abs(rep.curve.grid - d.grid_location))])

    def test_unrefined_uses_grid(self, two_jumps, kern):
        rep = detect_change_points(two_jumps, INTERVAL, BW, kern, critical=crit(two_jumps.n, kern), refine=False)
        assert all(d.location == d.grid_location for d in rep.detections)

    def test_nothing_above_huge_threshold(self, two_jumps, kern):
        big = replace(crit(two_jumps.n, kern), value=1e9)
        assert detect_change_points(two_jumps, INTERVAL, BW, kern, critical=big).m_hat == 0

    def test_cap_raises_with_partial_report(self, two_jumps, kern):
        with pytest.raises(OverSegmentationError) as ei:
            detect_change_points(two_jumps, INTERVAL, BW, kern, critical=crit(two_jumps.n, kern), max_points=1)
        assert ei.value.partial.m_hat == 1 and ei.value.partial.capped

    def test_reuses_given_curve(self, two_jumps, kern):
        curve, _ = sup_statistic(two_jumps, INTERVAL, BW, kern)
        a = detect_change_points(two_jumps, INTERVAL, BW, kern, critical=crit(two_jumps.n, kern), curve=curve)
        b = detect_change_points(two_jumps, INTERVAL, BW, kern, critical=crit(two_jumps.n, kern))
        assert a.locations == b.locations

    def test_boundary_flag(self, kern):
        data = step_data([(-1.4, 2.0)], seed=1)
        rep = detect_change_points(data, INTERVAL, BW, kern, critical=crit(data.n, kern))
        assert rep.m_hat >= 1
        near = min(rep.detections, key=lambda d: abs(d.location + 1.4))
        assert near.boundary

    def test_requires_threshold(self, two_jumps, kern):
        with pytest.raises(StateCPError):
            detect_change_points(two_jumps, INTERVAL, BW, kern)

    def test_report_serialises(self, two_jumps, kern):
        rep = detect_change_points(two_jumps, INTERVAL, BW, kern, critical=crit(two_jumps.n, kern))
        d = rep.to_dict()
        assert d["m_hat"] == 2 and len(d["exclusion_intervals"]) == 2
        assert [r["location"] for r in rep.csv_rows()] == rep.locations


class TestMetrics:
    def test_exact(self):
        m = accuracy_metrics([0.1, -0.2], [-0.2, 0.1])
        assert m.matched and m.made == 0.0 and m.mse == 0.0

    def test_errors(self):
        m = accuracy_metrics([0.05, 1.1], [0.0, 1.0])
        assert m.made == pytest.approx(0.075) and m.mse == pytest.approx((0.0025 + 0.01) / 2)

    def test_wrong_count(self):
        m = accuracy_metrics([0.0], [0.0, 1.0])
        assert not m.matched and m.made is None

    def test_no_truth(self):
        assert accuracy_metrics([], []).made == 0.0
