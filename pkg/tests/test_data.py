"""Encoding arithmetic on hand-written CSVs plus synthetic fixture checks."""
import textwrap

import numpy as np
import pandas as pd
import pytest

from fairmargin.data import (
    AttributeSpec,
    DataError,
    DatasetSpec,
    SizeMismatchError,
    load_and_encode,
    load_spec,
    make_synthetic,
    make_synthetic_pair,
    synthetic_frame,
)


def write(path, text):
    path.write_text(textwrap.dedent(text).lstrip())
    return path


def make_spec(tmp_path, **overrides):
    fields = dict(
        name="toy",
        label_column="outcome",
        positive_rule={"eq": "yes"},
        protected=(AttributeSpec(name="sex", column="sex", privileged={"eq": "M"}),),
        numeric_columns=("age",),
        categorical_columns=("color",),
        train_csv="train.csv",
        test_csv="test.csv",
        base_dir=tmp_path,
    )
    fields.update(overrides)
    return DatasetSpec(**fields)


def two_file_spec(tmp_path, **overrides):
    write(tmp_path / "train.csv", """
        age,color,outcome,sex
        20,red,yes,M
        30,blue,no,F
        40,green,yes,M
        60,red,no,F
        50,blue,yes,F
    """)
    write(tmp_path / "test.csv", """
        age,color,outcome,sex
        25,red,yes,M
        80,purple,no,F
    """)
    return make_spec(tmp_path, **overrides)


class TestRules:
    def test_membership_rule_strips_whitespace(self):
        spec = DatasetSpec(
            name="x",
            label_column="y",
            positive_rule={"in": [">50K", ">50K."]},
            protected=(AttributeSpec("s", "s", {"eq": "a"}),),
            numeric_columns=("n",),
            categorical_columns=(),
            csv_path="f.csv",
            train_size=1,
            test_size=1,
        )
        assert spec.positive_rule == {"in": [">50K", ">50K."]}

    def test_unknown_operator_rejected(self):
        with pytest.raises(DataError):
            DatasetSpec(
                name="x",
                label_column="y",
                positive_rule={"matches": "yes"},
                protected=(AttributeSpec("s", "s", {"eq": "a"}),),
                numeric_columns=("n",),
                categorical_columns=(),
                csv_path="f.csv",
                train_size=1,
                test_size=1,
            )

    def test_overlapping_feature_lists_rejected(self):
        with pytest.raises(DataError):
            DatasetSpec(
                name="x",
                label_column="y",
                positive_rule={"eq": 1},
                protected=(AttributeSpec("s", "s", {"eq": "a"}),),
                numeric_columns=("n",),
                categorical_columns=("n",),
                csv_path="f.csv",
                train_size=1,
                test_size=1,
            )

    def test_single_file_requires_sizes(self):
        with pytest.raises(DataError):
            DatasetSpec(
                name="x",
                label_column="y",
                positive_rule={"eq": 1},
                protected=(AttributeSpec("s", "s", {"eq": "a"}),),
                numeric_columns=("n",),
                categorical_columns=(),
                csv_path="f.csv",
            )


class TestEncoding:
    def test_matrix_enumerated_by_hand(self, tmp_path):
        train, test = load_and_encode(two_file_spec(tmp_path))
        # width: one numeric + three train levels of color
        assert train.width == 4
        assert [c.name for c in train.columns] == ["age", "color"]
        assert train.columns[1].levels == ("blue", "green", "red")
        # age scaled by train min 20 / max 60
        np.testing.assert_allclose(train.features[:, 0], [0.0, 0.25, 0.5, 1.0, 0.75])
        # one-hot in level order blue, green, red
        np.testing.assert_array_equal(train.features[0, 1:], [0, 0, 1])
        np.testing.assert_array_equal(train.features[1, 1:], [1, 0, 0])
        np.testing.assert_array_equal(train.features[2, 1:], [0, 1, 0])
        np.testing.assert_array_equal(train.labels, [1, 0, 1, 0, 1])
        np.testing.assert_array_equal(train.groups["sex"], [0, 1, 0, 1, 1])
        assert test.n == 2

    def test_train_numerics_land_in_unit_interval(self, tmp_path):
        train, _ = load_and_encode(two_file_spec(tmp_path))
        numeric = train.features[:, 0]
        assert numeric.min() == 0.0 and numeric.max() == 1.0

    def test_test_split_uses_train_stats_unclipped(self, tmp_path):
        _, test = load_and_encode(two_file_spec(tmp_path))
        # age 80 maps past 1.0 under train stats and stays there
        assert test.features[1, 0] == pytest.approx((80 - 20) / 40)
        assert test.features[1, 0] > 1.0

    def test_clip_test_option(self, tmp_path):
        _, test = load_and_encode(two_file_spec(tmp_path, clip_test=True))
        assert test.features[1, 0] == 1.0

    def test_unknown_test_level_encodes_to_zero_block(self, tmp_path):
        _, test = load_and_encode(two_file_spec(tmp_path))
        np.testing.assert_array_equal(test.features[1, 1:], [0, 0, 0])
        assert any(n.startswith("test_unknown_levels=1") for n in test.notes)

    def test_loading_is_idempotent(self, tmp_path):
        spec = two_file_spec(tmp_path)
        a_train, a_test = load_and_encode(spec)
        b_train, b_test = load_and_encode(spec)
        np.testing.assert_array_equal(a_train.features, b_train.features)
        np.testing.assert_array_equal(a_test.features, b_test.features)
        np.testing.assert_array_equal(a_train.labels, b_train.labels)

    def test_constant_numeric_column_encodes_to_zero(self, tmp_path):
        write(tmp_path / "train.csv", """
            age,color,outcome,sex
            20,red,yes,M
            20,blue,no,F
        """)
        write(tmp_path / "test.csv", """
            age,color,outcome,sex
            20,red,yes,M
        """)
        train, _ = load_and_encode(make_spec(tmp_path))
        np.testing.assert_array_equal(train.features[:, 0], [0.0, 0.0])
        assert any(n.startswith("constant_column=age") for n in train.notes)

    def test_missing_markers_drop_and_count(self, tmp_path):
        write(tmp_path / "train.csv", """
            age,color,outcome,sex
            20,red,yes,M
            30,?,no,F
            40,green,yes,M
            60,red,no,F
        """)
        write(tmp_path / "test.csv", """
            age,color,outcome,sex
            25,red,yes,M
        """)
        train, _ = load_and_encode(make_spec(tmp_path, missing_markers=("?",)))
        assert train.n == 3
        assert "dropped_missing=1" in train.notes

    def test_absent_file_mentions_readme(self, tmp_path):
        spec = two_file_spec(tmp_path)
        (tmp_path / "train.csv").unlink()
        with pytest.raises(DataError, match="README"):
            load_and_encode(spec)

    def test_missing_declared_column_rejected(self, tmp_path):
        write(tmp_path / "train.csv", "age,outcome,sex\n20,yes,M\n")
        write(tmp_path / "test.csv", "age,outcome,sex\n25,yes,M\n")
        with pytest.raises(DataError, match="color"):
            load_and_encode(make_spec(tmp_path))


class TestSplitSizes:
    def single_file_spec(self, tmp_path, train_size=4, test_size=2, seed=0):
        rows = "\n".join(
            f"{20 + i},{'red' if i % 2 else 'blue'},{'yes' if i % 3 else 'no'},{'M' if i % 2 else 'F'}"
            for i in range(8)
        )
        write(tmp_path / "all.csv", "age,color,outcome,sex\n" + rows + "\n")
        return DatasetSpec(
            name="toy",
            label_column="outcome",
            positive_rule={"eq": "yes"},
            protected=(AttributeSpec("sex", "sex", {"eq": "M"}),),
            numeric_columns=("age",),
            categorical_columns=("color",),
            csv_path="all.csv",
            train_size=train_size,
            test_size=test_size,
            split_seed=seed,
            base_dir=tmp_path,
        )

    def test_split_sizes_and_determinism(self, tmp_path):
        spec = self.single_file_spec(tmp_path)
        a_train, a_test = load_and_encode(spec)
        b_train, b_test = load_and_encode(spec)
        assert a_train.n == 4 and a_test.n == 2
        np.testing.assert_array_equal(a_train.features, b_train.features)
        np.testing.assert_array_equal(a_test.labels, b_test.labels)

    def test_different_split_seed_changes_assignment(self, tmp_path):
        a_train, _ = load_and_encode(self.single_file_spec(tmp_path, seed=0))
        b_train, _ = load_and_encode(self.single_file_spec(tmp_path, seed=1))
        assert not np.array_equal(a_train.features, b_train.features)

    def test_too_few_rows_raise(self, tmp_path):
        with pytest.raises(SizeMismatchError):
            load_and_encode(self.single_file_spec(tmp_path, train_size=7, test_size=7))

    def test_two_file_truncation_to_declared_size(self, tmp_path):
        spec = two_file_spec(tmp_path, train_size=3, test_size=2)
        train, test = load_and_encode(spec)
        assert train.n == 3
        assert any(n.startswith("train_truncated_from=5") for n in train.notes)
        # truncation keeps file order: first three rows
        np.testing.assert_array_equal(train.labels, [1, 0, 1])

    def test_two_file_shortfall_raises(self, tmp_path):
        with pytest.raises(SizeMismatchError):
            load_and_encode(two_file_spec(tmp_path, train_size=9, test_size=2))


class TestLoadSpecYaml:
    def test_yaml_roundtrip(self, tmp_path):
        write(tmp_path / "ds.yaml", """
            name: toy
            label_column: outcome
            positive_rule: {eq: "yes"}
            protected:
              - {name: sex, column: sex, privileged: {eq: M}}
            numeric_columns: [age]
            categorical_columns: [color]
            train_csv: train.csv
            test_csv: test.csv
            learning_rate: 0.0005
        """)
        spec = load_spec(tmp_path / "ds.yaml")
        assert spec.name == "toy"
        assert spec.learning_rate == 0.0005
        assert spec.protected[0].privileged == {"eq": "M"}
        assert spec.base_dir == tmp_path

    def test_missing_key_reported(self, tmp_path):
        write(tmp_path / "ds.yaml", "name: toy\nlabel_column: y\n")
        with pytest.raises(DataError, match="missing required key"):
            load_spec(tmp_path / "ds.yaml")

    def test_shipped_configs_parse(self):
        from pathlib import Path

        configs = Path(__file__).resolve().parents[1] / "configs"
        for name in ("adult.yaml", "german.yaml", "meps.yaml", "synthetic.yaml"):
            spec = load_spec(configs / name)
            assert spec.protected
            assert spec.feature_columns

    def test_data_dir_override(self, tmp_path, monkeypatch):
        spec = two_file_spec(tmp_path)
        moved = tmp_path / "elsewhere"
        moved.mkdir()
        (tmp_path / "train.csv").rename(moved / "train.csv")
        (tmp_path / "test.csv").rename(moved / "test.csv")
        monkeypatch.setenv("FAIRMARGIN_DATA", str(moved))
        train, _ = load_and_encode(spec)
        assert train.n == 5


class TestSynthetic:
    @pytest.mark.parametrize("kind", ["separable", "group_symmetric", "group_biased"])
    def test_shapes_balance_and_bounds(self, kind):
        ds = make_synthetic(kind, 400, seed=1)
        assert ds.features.shape == (400, 2)
        assert ds.labels.sum() == 200
        assert ds.groups["group"].sum() == 200
        assert ds.features.min() >= 0.0 and ds.features.max() <= 1.0

    def test_deterministic(self):
        a = make_synthetic("group_biased", 100, seed=3)
        b = make_synthetic("group_biased", 100, seed=3)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_kinds_differ(self):
        a = make_synthetic("separable", 100, seed=3)
        b = make_synthetic("group_symmetric", 100, seed=3)
        assert not np.array_equal(a.features, b.features)

    def test_separable_classes_disjoint_on_x0(self):
        ds = make_synthetic("separable", 500, seed=0)
        x0 = ds.features[:, 0]
        assert x0[ds.labels == 0].max() < 0.5 < x0[ds.labels == 1].min()

    def test_biased_kind_plants_group_gap(self):
        ds = make_synthetic("group_biased", 2000, seed=0)
        x0 = ds.features[:, 0]
        neg = ds.labels == 0
        g = ds.groups["group"]
        mean_a = x0[neg & (g == 0)].mean()
        mean_b = x0[neg & (g == 1)].mean()
        assert mean_a - mean_b > 0.1

    def test_symmetric_kind_has_no_group_gap(self):
        ds = make_synthetic("group_symmetric", 4000, seed=0)
        x0 = ds.features[:, 0]
        neg = ds.labels == 0
        g = ds.groups["group"]
        assert abs(x0[neg & (g == 0)].mean() - x0[neg & (g == 1)].mean()) < 0.02

    def test_pair_gives_distinct_splits(self):
        train, test = make_synthetic_pair("separable", 100, 60, seed=5)
        assert train.n == 100 and test.n == 60
        assert not np.array_equal(train.features[:60], test.features)

    def test_invalid_arguments(self):
        with pytest.raises(DataError):
            make_synthetic("nope", 100, 0)
        with pytest.raises(DataError):
            make_synthetic("separable", 7, 0)

    def test_frame_matches_encoded_values(self):
        frame = synthetic_frame("separable", 50, seed=9)
        ds = make_synthetic("separable", 50, seed=9)
        np.testing.assert_allclose(frame[["x0", "x1"]].to_numpy(), ds.features)
        np.testing.assert_array_equal((frame["group"] == "b").to_numpy().astype(int),
                                      ds.groups["group"])
