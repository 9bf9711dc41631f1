from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mminforec import grids
from mminforec.data import (
    Catalog,
    Dataset,
    DatasetRepo,
    RawInteraction,
    RawRecords,
    ParseReport,
    batch_of,
    check_reference,
    generate_synthetic,
    make_batches,
    pad_left,
    parse,
    preprocess,
    split_leave_one_out,
    to_records,
)
from mminforec.errors import (
    ConfigError,
    DatasetVersionMismatch,
    EmptyDatasetError,
    IdOutOfRange,
    MMInfoRecError,
    ParseError,
)
from mminforec.evaluation import evaluate_oracle, evaluate_popularity


def _records(rows, attributes=None):
    return RawRecords(
        interactions=[RawInteraction(u, i, t) for u, i, t in rows],
        attributes=attributes or {},
        report=ParseReport(),
    )


# ---------- parse ----------

def test_parse_reads_interactions_and_merges_attribute_lines(tmp_path):
    inter = tmp_path / "interactions.tsv"
    inter.write_text("u1\ti1\t10\nu1\ti2\t20\n\nu2\ti1\t5\n", encoding="utf-8")
    attrs = tmp_path / "attributes.tsv"
    attrs.write_text("i1\tred\tbig\ni1\tred\tnew\ni2\n", encoding="utf-8")
    records = parse(str(inter), str(attrs))
    assert [r.item for r in records.interactions] == ["i1", "i2", "i1"]
    assert records.attributes["i1"] == ("red", "big", "new")
    assert records.attributes["i2"] == ()
    assert records.report.errors == []


def test_parse_tolerates_rare_malformed_lines(tmp_path):
    lines = [f"u{k}\ti{k % 7}\t{k}" for k in range(200)] + ["broken line"]
    inter = tmp_path / "interactions.tsv"
    inter.write_text("\n".join(lines) + "\n", encoding="utf-8")
    records = parse(str(inter))
    assert len(records.interactions) == 200
    assert len(records.report.errors) == 1
    name, line_no, _ = records.report.errors[0]
    assert (name, line_no) == ("interactions.tsv", 201)


def test_parse_rejects_more_than_one_percent_malformed(tmp_path):
    lines = [f"u{k}\ti{k}\t{k}" for k in range(98)] + ["u\ti\tnot-a-number", "only\ttwo"]
    inter = tmp_path / "interactions.tsv"
    inter.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ParseError) as e:
        parse(str(inter))
    assert len(e.value.report.errors) == 2


def test_parse_missing_file_raises(tmp_path):
    with pytest.raises(ParseError):
        parse(str(tmp_path / "nope.tsv"))


# ---------- preprocess ----------

def test_preprocess_cascades_to_a_fixpoint():
    # u5 only reaches 5 actions through item "rare", which only u5 touches, so both go
    rows = []
    for u in range(5):
        rows += [(f"u{u}", f"i{k}", k) for k in range(5)]
    rows += [("u5", "i0", 0), ("u5", "i1", 1), ("u5", "i2", 2), ("u5", "i3", 3), ("u5", "rare", 4)]
    ds = preprocess(_records(rows))
    assert ds.users == [f"u{u}" for u in range(5)]
    assert ds.items[1:] == [f"i{k}" for k in range(5)]


def test_preprocess_keeps_input_order_on_equal_timestamps():
    rows = [("u", name, 7) for name in ["c", "a", "d", "b"]]
    ds = preprocess(_records(rows), min_count=1)
    assert [ds.items[i] for i in ds.sequences[0]] == ["c", "a", "d", "b"]


def test_preprocess_truncates_to_the_most_recent_items():
    rows = [("u", f"i{k}", k) for k in range(6)]
    ds = preprocess(_records(rows), min_count=1, max_len=4)
    assert [ds.items[i] for i in ds.sequences[0]] == ["i2", "i3", "i4", "i5"]


def test_truncation_that_drops_an_item_below_min_count_is_refiltered():
    # after the first count filter u1 is [a, b, c]; cutting it to two leaves a once
    rows = [("u1", "a", 0), ("u1", "b", 1), ("u1", "c", 2), ("u2", "a", 0), ("u2", "b", 1), ("u3", "c", 0), ("u3", "b", 1)]
    ds = preprocess(_records(rows), min_count=2, max_len=2)
    assert ds.users == ["u1", "u3"]
    assert [[ds.items[i] for i in s] for s in ds.sequences] == [["b", "c"], ["c", "b"]]
    assert preprocess(to_records(ds), min_count=2, max_len=2).sequences == ds.sequences


def test_preprocess_empty_input_raises():
    with pytest.raises(EmptyDatasetError):
        preprocess(_records([]))
    with pytest.raises(EmptyDatasetError):
        preprocess(_records([("u", "i", 1)]))


def test_preprocess_maps_attributes_of_surviving_items():
    rows = [(f"u{u}", f"i{k}", k) for u in range(5) for k in range(5)]
    ds = preprocess(_records(rows, {"i0": ("x", "y"), "i3": ("y",), "gone": ("z",)}))
    assert ds.attrs[1:] == ["x", "y"]
    assert ds.catalog.item_attrs == {1: (1, 2), 4: (2,)}
    assert ds.catalog.attrs_of(2) == ()


interaction_rows = st.lists(
    st.tuples(st.integers(0, 11), st.integers(0, 9), st.integers(0, 50)),
    min_size=20,
    max_size=200,
)


@given(rows=interaction_rows)
@settings(max_examples=40, deadline=None)
def test_preprocess_reaches_k_core_and_is_idempotent(rows):
    records = _records([(f"u{u}", f"i{i}", t) for u, i, t in rows])
    try:
        ds = preprocess(records, min_count=3, max_len=8)
    except EmptyDatasetError:
        return
    counts = np.bincount(np.concatenate([np.asarray(s) for s in ds.sequences]), minlength=ds.catalog.n_items + 1)
    assert np.all(counts[1:] >= 3)
    assert all(3 <= len(s) <= 8 for s in ds.sequences)
    again = preprocess(to_records(ds), min_count=3, max_len=8)
    assert again.sequences == ds.sequences
    assert again.items == ds.items
    assert again.users == ds.users


# ---------- split ----------

def test_leave_one_out_split():
    rows = [(f"u{u}", f"i{k}", k) for u in range(5) for k in range(6)]
    ds = split_leave_one_out(preprocess(_records(rows)))
    assert ds.splits[0].train == (1, 2, 3, 4)
    assert ds.context(0, "valid") == [1, 2, 3, 4]
    assert ds.target(0, "valid") == 5
    assert ds.context(0, "test") == [1, 2, 3, 4, 5]
    assert ds.target(0, "test") == 6


def test_split_needs_three_items(catalog):
    ds = Dataset(sequences=[[1, 2]], catalog=catalog, users=["u"], items=[""] * 10, attrs=[""] * 6)
    with pytest.raises(MMInfoRecError):
        split_leave_one_out(ds)
    with pytest.raises(MMInfoRecError):
        ds.context(0, "valid")


def test_unknown_split_name_raises(synth_dataset):
    with pytest.raises(MMInfoRecError):
        synth_dataset.target(0, "train")


# ---------- batches ----------

def test_pad_left():
    items, mask = pad_left([[1, 2, 3], [4]])
    assert items.tolist() == [[1, 2, 3], [0, 0, 4]]
    assert mask.tolist() == [[True, True, True], [False, False, True]]


def test_batch_counts_unique_items():
    b = batch_of([[1, 2, 2], [2, 5]], [0, 1])
    assert b.n_unique == 3
    assert b.size == 2


def test_make_batches_cover_every_user_once(synth_dataset):
    users = np.concatenate([b.users for b in make_batches(synth_dataset, batch_size=32, shuffle_seed=5)])
    assert sorted(users.tolist()) == list(range(synth_dataset.n_users))
    again = np.concatenate([b.users for b in make_batches(synth_dataset, batch_size=32, shuffle_seed=5)])
    assert np.array_equal(users, again)


def test_catalog_checks_ids(catalog):
    with pytest.raises(IdOutOfRange):
        catalog.check_item(10)
    with pytest.raises(IdOutOfRange):
        catalog.check_attr(-1)
    ids, mask = catalog.padded()
    assert ids.shape == (10, 3)
    assert ids[8].tolist() == [2, 3, 4]
    assert not mask[9].any()


# ---------- synthetic corpus ----------

def test_synthetic_transition_rows_are_distributions(synth_corpus):
    P = synth_corpus.transition
    np.testing.assert_allclose(P.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    assert np.all(np.diag(P) == 0)
    assert np.all(P >= 0)


def test_synthetic_mass_concentrates_in_the_cluster(synth_corpus):
    P, clusters = synth_corpus.transition, synth_corpus.clusters
    same = clusters[:, None] == clusters[None, :]
    np.testing.assert_allclose((P * same).sum(axis=1), 0.8 + 0.2 * (same.sum(axis=1) - 1) / (len(P) - 1), atol=1e-9)


def test_synthetic_is_deterministic():
    a = generate_synthetic(users=100, items=20, attrs=2, seed=3)
    b = generate_synthetic(users=100, items=20, attrs=2, seed=3)
    assert a.records.interactions == b.records.interactions
    assert np.array_equal(a.transition, b.transition)


@pytest.mark.parametrize("kwargs", [{"items": 10}, {"users": 50}, {"attrs": 0}, {"items": 20, "attrs": 11}])
def test_synthetic_rejects_bad_sizes(kwargs):
    with pytest.raises(ConfigError):
        generate_synthetic(**kwargs)


def test_internal_transition_lines_up_with_dataset_ids(synth_corpus, synth_dataset):
    T = synth_corpus.internal_transition(synth_dataset)
    assert T.shape == (synth_dataset.catalog.n_items + 1,) * 2
    assert not T[0].any() and not T[:, 0].any()
    name = synth_dataset.items[1]
    k = synth_corpus.item_names.index(name)
    assert T[1, 1] == synth_corpus.transition[k, k]


def test_oracle_beats_popularity_on_synthetic_data(synth_corpus, synth_dataset):
    T = synth_corpus.internal_transition(synth_dataset)
    oracle = evaluate_oracle(synth_dataset, T, "test").metrics
    popular = evaluate_popularity(synth_dataset, "test").metrics
    assert oracle.hr5 > popular.hr5


# ---------- dataset repo ----------

def test_dataset_repo_round_trip(synth_dataset, tmp_path):
    repo = DatasetRepo(str(tmp_path / "ds"))
    repo.save(synth_dataset)
    loaded = repo.load()
    assert loaded.sequences == synth_dataset.sequences
    assert loaded.users == synth_dataset.users
    assert loaded.items == synth_dataset.items
    assert loaded.attrs == synth_dataset.attrs
    assert loaded.catalog == synth_dataset.catalog
    assert loaded.splits == synth_dataset.splits
    assert repo.stats()["users"] == synth_dataset.n_users


def test_dataset_repo_missing_directory(tmp_path):
    with pytest.raises(MMInfoRecError):
        DatasetRepo(str(tmp_path / "missing")).load()


# ---------- reference counts ----------

def test_reference_counts_match_and_mismatch():
    reference = grids.reference_counts()
    check_reference({"users": 22363, "items": 12101, "actions": 198502}, "beauty", reference)
    with pytest.raises(DatasetVersionMismatch) as e:
        check_reference({"users": 22363, "items": 12100, "actions": 198502}, "beauty", reference)
    assert "items" in str(e.value)
    with pytest.raises(DatasetVersionMismatch):
        check_reference({}, "unknown-set", reference)


def test_stats_describe_the_dataset(synth_dataset):
    s = synth_dataset.stats()
    assert s["users"] == synth_dataset.n_users
    assert s["actions"] == synth_dataset.n_actions
    assert s["avg_attributes_per_item"] == pytest.approx(1.0)
    assert 0.0 < s["sparsity"] < 1.0


def test_catalog_without_attributes_has_zero_width():
    assert Catalog(n_items=3, n_attrs=0).m_max == 0
