"""Counterfactual search on hand-built nets with known boundaries, plus the
burden averaging rules."""
import math

import numpy as np
import pytest

import fairmargin.cfburden as cfburden
from fairmargin.cfburden import (
    BurdenGap,
    CounterfactualResult,
    GAConfig,
    burden,
    delta_burden,
    find_counterfactual,
    mixed_distance,
)
from fairmargin.data import ColumnMeta, EncodedDataset
from fairmargin.net import Network, NetworkConfig, predict

COLS_1D = (ColumnMeta(name="x0", kind="numeric", start=0, width=1, vmin=0.0, vmax=1.0),)
COLS_2D = COLS_1D + (ColumnMeta(name="x1", kind="numeric", start=1, width=1, vmin=0.0, vmax=1.0),)


def line_net_1d():
    """Predicts 1 exactly when x0 > 0.5 (u = 4 - 8*x0)."""
    cfg = NetworkConfig(layer_widths=(1, 1, 2), seed=0)
    return Network(
        config=cfg,
        weights=(np.array([[1.0]]), np.array([[-4.0, 4.0]])),
        biases=(np.array([10.0]), np.array([42.0, -42.0])),
    )


def diag_net_2d():
    """Predicts 1 exactly when x0 + x1 > 1."""
    cfg = NetworkConfig(layer_widths=(2, 2, 2), seed=0)
    return Network(
        config=cfg,
        weights=(np.eye(2), np.array([[-2.0, 2.0], [-2.0, 2.0]])),
        biases=(np.array([10.0, 10.0]), np.array([42.0, -42.0])),
    )


def category_net():
    """Width-3 input (one numeric, one two-level categorical block);
    predicts 1 exactly when the categorical is at its second level."""
    cfg = NetworkConfig(layer_widths=(3, 3, 2), seed=0)
    return Network(
        config=cfg,
        weights=(np.eye(3), np.array([[0.0, 0.0], [0.0, 0.0], [-5.0, 5.0]])),
        biases=(np.full(3, 10.0), np.array([52.5, -52.5])),
    )


CAT_COLS = (
    ColumnMeta(name="x0", kind="numeric", start=0, width=1, vmin=0.0, vmax=1.0),
    ColumnMeta(name="color", kind="categorical", start=1, width=2, levels=("A", "B")),
)


class TestGAConfig:
    def test_defaults_are_the_audit_protocol(self):
        cfg = GAConfig()
        assert (cfg.population_size, cfg.generations) == (100, 50)
        assert (cfg.mutation_rate, cfg.crossover_rate) == (0.1, 0.5)
        assert (cfg.tournament_size, cfg.elitism_count) == (3, 2)

    @pytest.mark.parametrize("kwargs", [
        {"population_size": 2},
        {"generations": 0},
        {"mutation_rate": 1.5},
        {"crossover_rate": -0.1},
        {"tournament_size": 1},
        {"elitism_count": 100},
        {"mutation_scale": 0.0},
    ])
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ValueError):
            GAConfig(**kwargs)


class TestMixedDistance:
    def test_pure_numeric_is_l2(self):
        d = mixed_distance(np.array([0.2, 0.3]), np.array([[0.5, 0.7]]), COLS_2D)
        assert d[0] == pytest.approx(0.5, rel=1e-12)

    def test_categorical_part_counts_changed_columns(self):
        x = np.array([0.4, 1.0, 0.0])  # level A
        same = np.array([0.4, 1.0, 0.0])
        changed = np.array([0.4, 0.0, 1.0])  # level B
        d = mixed_distance(x, np.stack([same, changed]), CAT_COLS)
        assert d[0] == 0.0
        assert d[1] == pytest.approx(1.0)  # one of one categorical column

    def test_parts_add(self):
        x = np.array([0.4, 1.0, 0.0])
        cand = np.array([[0.1, 0.0, 1.0]])
        d = mixed_distance(x, cand, CAT_COLS)
        assert d[0] == pytest.approx(0.3 + 1.0, rel=1e-12)

    def test_vectorized_shape(self):
        d = mixed_distance(np.zeros(2), np.random.default_rng(0).uniform(size=(7, 2)), COLS_2D)
        assert d.shape == (7,)
        assert (d >= 0).all()


class TestFindCounterfactual:
    def test_one_dimensional_boundary_distance(self):
        net = line_net_1d()
        cfg = GAConfig(seed=5)
        for x0, want in [(0.2, 0.3), (0.3, 0.2), (0.45, 0.05)]:
            result = find_counterfactual(net, np.array([x0]), COLS_1D, cfg, row_key=1)
            assert result.flipped
            assert result.distance == pytest.approx(want, abs=0.02)
            assert predict(net, result.counterfactual[None, :])[0] == 1

    def test_already_at_target_returns_identity(self):
        net = line_net_1d()
        x = np.array([0.8])  # predicted 1 already
        result = find_counterfactual(net, x, COLS_1D, GAConfig(), target_class=1)
        assert result.distance == 0.0
        assert result.flipped
        assert result.generations_used == 0
        np.testing.assert_array_equal(result.counterfactual, x)

    def test_deterministic_per_seed_and_row(self):
        net = diag_net_2d()
        x = np.array([0.2, 0.3])
        a = find_counterfactual(net, x, COLS_2D, GAConfig(seed=3), row_key=17)
        b = find_counterfactual(net, x, COLS_2D, GAConfig(seed=3), row_key=17)
        assert a.distance == b.distance
        np.testing.assert_array_equal(a.counterfactual, b.counterfactual)
        assert a.best_history == b.best_history

    def test_best_history_non_increasing(self):
        net = diag_net_2d()
        result = find_counterfactual(net, np.array([0.1, 0.2]), COLS_2D, GAConfig(seed=1))
        finite = [h for h in result.best_history if math.isfinite(h)]
        assert finite, "search never found a feasible candidate"
        assert all(b <= a for a, b in zip(finite, finite[1:]))
        assert len(result.best_history) == 50

    def test_unreachable_target_reports_no_flip(self):
        cfg_net = NetworkConfig(layer_widths=(1, 1, 2), seed=0)
        stuck = Network(
            config=cfg_net,
            weights=(np.array([[1.0]]), np.array([[0.0, 0.0]])),
            biases=(np.array([10.0]), np.array([100.0, -100.0])),
        )
        result = find_counterfactual(stuck, np.array([0.4]), COLS_1D, GAConfig(seed=0))
        assert not result.flipped
        assert math.isinf(result.distance)
        assert all(math.isinf(h) for h in result.best_history)

    def test_categorical_flip_costs_one_column(self):
        net = category_net()
        x = np.array([0.4, 1.0, 0.0])  # level A, predicted 0
        result = find_counterfactual(net, x, CAT_COLS, GAConfig(seed=2), row_key=3)
        assert result.flipped
        # the cheapest flip changes only the categorical column
        assert result.distance == pytest.approx(1.0, abs=0.05)
        assert result.counterfactual[2] == 1.0

    def test_width_mismatch_rejected(self):
        with pytest.raises(ValueError):
            find_counterfactual(line_net_1d(), np.array([0.1, 0.2]), COLS_2D, GAConfig())


class TestGridSearchBound:
    def test_ga_upper_bounds_true_minimum(self):
        # the GA distance upper-bounds the true minimal flip distance; the
        # grid estimate of that minimum overshoots it by at most h*sqrt(2)
        # (any feasible point rounds up-right to a feasible lattice point at
        # most one diagonal step away), so that is the comparison cushion
        net = diag_net_2d()
        h = 0.005
        axis = np.linspace(0.0, 1.0, 201)
        xx, yy = np.meshgrid(axis, axis)
        points = np.column_stack([xx.ravel(), yy.ravel()])
        flipped_points = points[predict(net, points) == 1]

        rng = np.random.default_rng(11)
        ratios = []
        for _ in range(10):
            x = rng.uniform(0.0, 0.45, size=2)
            grid_min = float(np.sqrt(((flipped_points - x) ** 2).sum(axis=1)).min())
            result = find_counterfactual(net, x, COLS_2D, GAConfig(seed=7), row_key=int(x[0] * 1e6))
            assert result.flipped
            assert result.distance >= grid_min - h * math.sqrt(2)
            ratios.append(result.distance / grid_min)
        assert np.median(ratios) < 1.3


class TestBurden:
    def toy_data(self):
        return EncodedDataset(
            name="toy",
            features=np.array([[0.3], [0.3], [0.1], [0.1]]),
            labels=np.array([0, 0, 0, 0]),
            groups={"group": np.array([0, 0, 1, 1])},
            columns=COLS_1D,
        )

    def test_mean_of_flipped_distances(self, monkeypatch):
        def stub(net, x, columns, cfg, target_class=None, row_key=0):
            d = {0: 0.2, 1: 0.4}[row_key]
            return CounterfactualResult(np.asarray(x), d, True, 1, (d,))

        monkeypatch.setattr(cfburden, "find_counterfactual", stub)
        out = burden(line_net_1d(), self.toy_data(), "group", 0, GAConfig())
        assert out.value == pytest.approx((0.2 + 0.4) / 2, rel=1e-14)
        assert out.n_negative == 2
        assert out.n_flipped == 2
        assert not out.flagged

    def test_unflipped_rows_excluded_and_counted(self, monkeypatch):
        def stub(net, x, columns, cfg, target_class=None, row_key=0):
            if row_key == 0:
                return CounterfactualResult(np.asarray(x), 0.2, True, 1, (0.2,))
            return CounterfactualResult(np.asarray(x), math.inf, False, 50, ())

        monkeypatch.setattr(cfburden, "find_counterfactual", stub)
        out = burden(line_net_1d(), self.toy_data(), "group", 0, GAConfig())
        assert out.value == pytest.approx(0.2)
        assert out.n_flipped == 1
        assert out.n_unflipped == 1

    def test_no_negative_rows_flags_zero(self):
        always_positive = Network(
            config=NetworkConfig(layer_widths=(1, 1, 2), seed=0),
            weights=(np.array([[1.0]]), np.array([[0.0, 0.0]])),
            biases=(np.array([10.0]), np.array([-100.0, 100.0])),
        )
        out = burden(always_positive, self.toy_data(), "group", 0, GAConfig())
        assert out.flagged
        assert out.value == 0.0
        assert out.n_negative == 0

    def test_real_search_recovers_planted_gap(self):
        gap = delta_burden(line_net_1d(), self.toy_data(), "group", GAConfig(seed=9))
        assert gap.delta is not None
        assert gap.burden_a.value == pytest.approx(0.2, abs=0.02)
        assert gap.burden_b.value == pytest.approx(0.4, abs=0.02)
        assert gap.delta == pytest.approx(0.2, abs=0.03)

    def test_sampling_is_deterministic(self):
        rng = np.random.default_rng(0)
        features = rng.uniform(0.0, 0.45, size=(30, 1))
        data = EncodedDataset(
            name="toy",
            features=features,
            labels=np.zeros(30, dtype=int),
            groups={"group": np.array([0, 1] * 15)},
            columns=COLS_1D,
        )
        a = burden(line_net_1d(), data, "group", 0, GAConfig(seed=4), sample=5)
        b = burden(line_net_1d(), data, "group", 0, GAConfig(seed=4), sample=5)
        assert a == b
        assert a.n_negative == 5

    def test_delta_none_when_one_side_flagged(self, monkeypatch):
        def stub(net, x, columns, cfg, target_class=None, row_key=0):
            return CounterfactualResult(np.asarray(x), math.inf, False, 50, ())

        monkeypatch.setattr(cfburden, "find_counterfactual", stub)
        gap = delta_burden(line_net_1d(), self.toy_data(), "group", GAConfig())
        assert gap.delta is None
        assert gap.burden_a.flagged and gap.burden_b.flagged
