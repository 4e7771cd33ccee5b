import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ADULT_FILES, SYNTH_SCHEMA, numeric_dataset
from fae.dataset import (
    Schema,
    SplitSpec,
    load_table,
    partition_groups,
    read_frame,
    resolve_data_path,
    resolve_schema,
    split,
    split_indices,
    standardize,
)
from fae.errors import DataError, EmptyGroupError, SchemaError


class TestLoad:
    def test_duplicate_and_missing_rows_removed(self, tmp_path, synth_schema):
        p = tmp_path / "three.csv"
        p.write_text("1.0,2.0,red,F,yes\n1.0,2.0,red,F,yes\n3.0,?,blue,M,no\n")
        ds = load_table(p, synth_schema)
        assert ds.n == 1
        assert ds.y.tolist() == [1]
        assert ds.protected.tolist() == [True]

    def test_row_order_is_input_order(self, tmp_path, synth_schema):
        p = tmp_path / "order.csv"
        p.write_text("5,0,red,F,yes\n1,0,red,M,no\n5,0,red,F,yes\n3,0,blue,M,yes\n")
        df = read_frame(p, synth_schema)
        assert df["x1"].tolist() == [5, 1, 3]

    def test_unknown_category_names_column_and_value(self, tmp_path, synth_schema):
        p = tmp_path / "bad.csv"
        p.write_text("1,2,purple,F,yes\n1,3,red,M,no\n")
        with pytest.raises(DataError, match="color.*purple"):
            load_table(p, synth_schema)

    def test_non_binary_label(self, tmp_path):
        d = dict(SYNTH_SCHEMA)
        d["columns"] = [dict(c) for c in SYNTH_SCHEMA["columns"]]
        d["columns"][-1].pop("values")
        schema = Schema.from_dict(d)
        p = tmp_path / "multi.csv"
        p.write_text("1,2,red,F,yes\n1,3,red,M,no\n2,3,red,M,maybe\n")
        with pytest.raises(SchemaError):
            load_table(p, schema)

    def test_missing_file_mentions_download(self, tmp_path, synth_schema):
        with pytest.raises(DataError, match="test helper"):
            load_table(tmp_path / "nope.csv", synth_schema)

    def test_data_dir_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FAE_DATA_DIR", str(tmp_path))
        assert resolve_data_path("adult/adult.data") == tmp_path / "adult" / "adult.data"

    def test_label_map_applied_before_dedup(self, tmp_path):
        d = dict(SYNTH_SCHEMA, label_map={"yes.": "yes", "no.": "no"})
        d["columns"] = [dict(c) for c in SYNTH_SCHEMA["columns"]]
        d["columns"][-1]["values"] = ["yes", "no", "yes.", "no."]
        schema = Schema.from_dict(d)
        p = tmp_path / "dots.csv"
        p.write_text("1,2,red,F,yes\n1,2,red,F,yes.\n4,4,red,M,no.\n")
        ds = load_table(p, schema)
        assert ds.n == 2
        assert ds.y.tolist() == [1, -1]

    def test_unseen_category_at_predict_time_is_zero_block(self, tmp_path, synth_schema):
        p = tmp_path / "a.csv"
        p.write_text("1,2,red,F,yes\n1,3,green,M,no\n")
        ds = load_table(p, synth_schema)
        df = read_frame(p, synth_schema)
        df.loc[0, "color"] = "teal"
        X = ds.encoder.transform(df)
        names = ds.feature_names
        block = [i for i, nm in enumerate(names) if nm.startswith("color=")]
        assert X[0, block].sum() == 0.0
        assert X[1, block].sum() == 1.0

    def test_encoding_is_row_permutation_equivariant(self, tmp_path, synth_schema):
        from conftest import write_synth_csv

        p = write_synth_csv(tmp_path / "s.csv", n=60)
        df = read_frame(p, synth_schema)
        ds = load_table(p, synth_schema)
        perm = np.random.default_rng(1).permutation(len(df))
        X = ds.encoder.transform(df.iloc[perm].reset_index(drop=True))
        np.testing.assert_array_equal(X, ds.X[perm])

    def test_exclude_sensitive_attribute(self, tmp_path, synth_schema):
        from conftest import write_synth_csv

        p = write_synth_csv(tmp_path / "s.csv", n=30)
        with_sa = load_table(p, synth_schema)
        without = load_table(p, synth_schema, include_sa=False)
        assert without.m == with_sa.m - 2
        assert not any(nm.startswith("sex=") for nm in without.feature_names)


class TestSchema:
    def test_round_trip(self, synth_schema):
        assert Schema.from_dict(synth_schema.to_dict()) == synth_schema

    def test_builtin_schemas_load(self):
        adult = resolve_schema("adult")
        bank = resolve_schema("bank")
        assert adult.protected_value == "Female"
        assert bank.sensitive == "marital"

    @pytest.mark.parametrize(
        "change, msg",
        [
            ({"sensitive": "nope"}, "sensitive"),
            ({"label": "nope"}, "class attribute"),
            ({"protected_value": "X"}, "protected value"),
            ({"positive_label": "maybe"}, "positive label"),
            ({"drop": ["sex"]}, "dropped"),
            ({"bogus": 1}, "unknown schema fields"),
        ],
    )
    def test_invalid(self, change, msg):
        with pytest.raises(SchemaError, match=msg):
            Schema.from_dict({**SYNTH_SCHEMA, **change})

    def test_missing_field(self):
        d = dict(SYNTH_SCHEMA)
        del d["sensitive"]
        with pytest.raises(SchemaError, match="sensitive"):
            Schema.from_dict(d)


class TestPartition:
    def test_one_row_per_group(self):
        ds = numeric_dataset(np.eye(4), [1, -1, 1, -1], [True, True, False, False], scale=False)
        p = partition_groups(ds)
        assert [a.tolist() for a in (p.s_pos, p.s_neg, p.ns_pos, p.ns_neg)] == [[0], [1], [2], [3]]

    def test_empty_protected_positives(self):
        ds = numeric_dataset(np.eye(3), [-1, 1, -1], [True, False, False], scale=False)
        with pytest.raises(EmptyGroupError, match="empty group s\\+"):
            partition_groups(ds)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=40))
    def test_disjoint_exhaustive(self, rows):
        prot = [r[0] for r in rows]
        y = [1 if r[1] else -1 for r in rows]
        ds = numeric_dataset(np.zeros((len(rows), 1)), y, prot, scale=False)
        p = partition_groups(ds, require_nonempty=False)
        allidx = np.concatenate([p.s_pos, p.s_neg, p.ns_pos, p.ns_neg])
        assert sorted(allidx.tolist()) == list(range(len(rows)))
        assert all(prot[i] and y[i] == 1 for i in p.s_pos)
        assert all(not prot[i] and y[i] == -1 for i in p.ns_neg)


class TestSplit:
    def test_nine_rows(self):
        tr, te = split_indices(9, SplitSpec())
        assert (len(tr), len(te)) == (6, 3)

    def test_deterministic(self):
        a = split_indices(100, SplitSpec(seed=3, index=4))
        b = split_indices(100, SplitSpec(seed=3, index=4))
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_indices_differ(self):
        a = split_indices(100, SplitSpec(index=0))[0]
        b = split_indices(100, SplitSpec(index=1))[0]
        assert not np.array_equal(a, b)

    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 300), st.integers(0, 10**6))
    def test_disjoint_exhaustive(self, n, seed):
        tr, te = split_indices(n, SplitSpec(seed=seed))
        assert len(np.intersect1d(tr, te)) == 0
        assert sorted(np.concatenate([tr, te]).tolist()) == list(range(n))
        assert len(tr) == math.ceil(2 * n / 3)

    def test_standardization_uses_train_statistics(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([rng.normal(5, 3, 90), np.full(90, 7.0)])
        raw = numeric_dataset(X, rng.choice([-1, 1], 90), rng.random(90) < 0.5, scale=False)
        train, test = split(raw, SplitSpec())
        assert np.all(np.abs(train.X[:, 0].mean()) < 1e-9)
        assert abs(train.X[:, 0].var() - 1.0) < 1e-9
        assert np.all(train.X[:, 1] == 0.0) and np.all(test.X[:, 1] == 0.0)
        tr, te = split_indices(90, SplitSpec())
        mu, sd = X[tr, 0].mean(), X[tr, 0].std()
        np.testing.assert_allclose(test.X[:, 0], (X[te, 0] - mu) / sd, rtol=1e-12)

    def test_standardize_twice_rejected(self):
        ds = numeric_dataset(np.ones((3, 1)), [1, -1, 1], [True, False, True])
        with pytest.raises(DataError):
            standardize(ds)


adult_present = pytest.mark.skipif(not all(p.exists() for p in ADULT_FILES), reason="Adult data not present")


@pytest.fixture(scope="module")
def adult():
    return load_table(ADULT_FILES, resolve_schema("adult"))


@adult_present
class TestAdult:
    def test_row_count(self, adult):
        assert adult.n == 45175

    def test_ten_distinct_splits(self, adult):
        trains = [split_indices(adult.n, SplitSpec(index=i))[0] for i in range(10)]
        assert all(len(t) == math.ceil(2 / 3 * 45175) for t in trains)
        for i in range(10):
            for j in range(i):
                assert not np.array_equal(trains[i], trains[j])

    def test_group_imbalance(self, adult):
        train, _ = split(adult, SplitSpec())
        sizes = partition_groups(train).sizes
        assert sizes[0] * 10 < sizes[3]
        assert sizes[0] == min(sizes)
