import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simpson import datasets as ds
from simpson.contingency import detect_simpson
from simpson.errors import InconsistentData, InvalidPartition, NormalizationError, ParseError, SchemaError

SMOKING_B = (0.0946, 0.2272, 0.1859, 0.1681, 0.1908, 0.1334)


def test_covid_fixture_conditionals(covid):
    assert covid.conditional(a2=0) == pytest.approx(0.0608, abs=1e-4)
    assert covid.conditional(a2=1) == pytest.approx(0.0760, abs=1e-4)
    assert covid.fine_conditionals() == pytest.approx(np.array([[0.0507, 0.150], [0.0490, 0.135]]), abs=1e-12)


def test_fixture_labels():
    t = ds.load_fixture("covid")
    assert t.labels["A2"] == ["China", "Italy"]
    assert "placeholder" in t.provenance


def test_smoking_full_marginals(smoking_full):
    assert smoking_full.kind == "count"
    assert np.allclose(smoking_full.b_marginals(), SMOKING_B, atol=5e-5)
    with pytest.raises(SchemaError):
        smoking_full.to_joint()


def test_unknown_fixture():
    with pytest.raises(KeyError):
        ds.load_fixture("nope")


def test_empty_file(tmp_path):
    f = tmp_path / "t.json"
    f.write_text("")
    with pytest.raises(ParseError):
        ds.load(f)
    f = tmp_path / "t.csv"
    f.write_text("  \n")
    with pytest.raises(ParseError):
        ds.load(f)


def test_missing_cell():
    d = ds.from_joint(ds.load_fixture("covid").to_joint()).to_dict()
    d["cells"].pop()
    with pytest.raises(SchemaError):
        ds.loads_json(json.dumps(d))


def test_unnormalized_probabilities():
    d = ds.from_joint(ds.load_fixture("covid").to_joint()).to_dict()
    d["cells"][0]["p"] += 1e-4
    with pytest.raises(NormalizationError):
        ds.loads_json(json.dumps(d))


def test_malformed_json():
    with pytest.raises(ParseError):
        ds.loads_json("{not json")
    with pytest.raises(SchemaError):
        ds.loads_json("[1, 2]")


def test_csv_counts():
    text = "a1,a2,b,count\n" + "\n".join(
        f"{a1},{a2},{b},{n}" for (a1, a2, b), n in zip(
            [(i, k, m) for i in "yn" for k in "tc" for m in "uv"], range(1, 9)))
    t = ds.loads_csv(text)
    assert t.kind == "count"
    assert t.values[1, 1, 1] == 8
    assert t.to_joint().p.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("fmt", ["json", "csv"])
@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1e-6, 1.0), min_size=8, max_size=8))
def test_save_load_round_trip(tmp_path_factory, fmt, cells):
    v = np.array(cells).reshape(2, 2, 2)
    t = ds.LabeledTable({"A1": ["x", "y"], "A2": ["u", "w"], "B": ["b", "c"]}, v / v.sum())
    path = tmp_path_factory.mktemp("rt") / f"t.{fmt}"
    ds.save(t, path)
    back = ds.load(path)
    assert np.array_equal(back.values, t.values)
    assert back.labels == t.labels


def test_coarse_grain_published_split(smoking_full):
    t = ds.coarse_grain(smoking_full, (["18-24", "25-34", "35-44", "45-54", "55-64"], ["65-74"]))
    assert t.prob(b=1) == pytest.approx(0.1334, abs=5e-5)
    fine = t.fine_conditionals()
    assert fine == pytest.approx(np.array([[0.1820, 0.8056], [0.1206, 0.7829]]), abs=1e-4)
    assert detect_simpson(t).status.value == "ParadoxAggregateLess"


def test_coarse_grain_by_index_and_complement(smoking_full):
    a = ds.coarse_grain(smoking_full, ([0, 1, 2, 3, 4], [5]))
    b = ds.coarse_grain(smoking_full, ([0, 1, 2, 3, 4],))
    assert a == b


@pytest.mark.parametrize("grouping", [([], [0, 1, 2, 3, 4, 5]), ([0, 1], [1, 2, 3, 4, 5]),
                                      ([0, 1], [2, 3]), (["90+"], [0])])
def test_invalid_partitions(smoking_full, grouping):
    with pytest.raises(InvalidPartition):
        ds.coarse_grain(smoking_full, grouping)


def test_partition_count(smoking_full):
    parts = list(ds.two_block_partitions(smoking_full.b_levels))
    assert len(parts) == 31
    assert len({frozenset(a) for a, _ in parts}) == 31


def test_only_one_partition_reverses(smoking_full):
    hits = [a for a, b in ds.two_block_partitions(smoking_full.b_levels)
            if detect_simpson(ds.coarse_grain(smoking_full, (a, b))).is_paradox]
    assert hits == [["18-24", "25-34", "35-44", "45-54", "55-64"]]


@settings(max_examples=50)
@given(st.lists(st.floats(0.0, 1.0), min_size=16, max_size=16), st.integers(1, 14))
def test_coarse_grain_preserves_margins(cells, mask):
    v = np.array(cells).reshape(2, 2, 4) + 1e-9
    t = ds.LabeledTable({"A1": ["a", "b"], "A2": ["c", "d"], "B": list("wxyz")}, v / v.sum())
    block = [j for j in range(4) if mask >> j & 1]
    if not block or len(block) == 4:
        return
    c = ds.coarse_grain(t, (block,))
    assert c.p.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(c.p.sum(axis=2), t.probabilities.sum(axis=2), atol=1e-15)


def test_reconstruct_smoking_by_hand():
    fine = [[0.1820, 0.8056], [0.1206, 0.7829]]
    rec = ds.reconstruct_joint(fine, aggregate=(0.2214, 0.2485), p_b=0.8666)
    # 0.2214 = 0.1820 x + 0.8056 (1 - x) and companions
    x = (0.8056 - 0.2214) / (0.8056 - 0.1820)
    y = (0.7829 - 0.2485) / (0.7829 - 0.1206)
    pa2 = (0.8666 - y) / (x - y)
    assert rec.b_given_a2 == pytest.approx((x, y), abs=1e-12)
    assert rec.p_a2 == pytest.approx(pa2, abs=1e-12)
    assert rec.b_given_a2 == pytest.approx((0.9368, 0.8069), abs=1e-4)
    assert rec.p_a2 == pytest.approx(0.4596, abs=1e-4)


def test_reconstruct_reproduces_inputs():
    fine = [[0.1820, 0.8056], [0.1206, 0.7829]]
    t = ds.reconstruct_joint(fine, aggregate=(0.2214, 0.2485), p_b=0.8666).table
    assert t.fine_conditionals() == pytest.approx(np.array(fine), abs=1e-3)
    assert (t.conditional(a2=0), t.conditional(a2=1)) == pytest.approx((0.2214, 0.2485), abs=1e-3)
    assert t.prob(b=0) == pytest.approx(0.8666, abs=1e-3)


def test_covid_redundancy():
    r = ds.total_probability_residuals([[0.0507, 0.150], [0.0490, 0.135]], (0.8983, 0.6859), (0.0608, 0.0760))
    assert abs(0.0507 * 0.8983 + 0.150 * 0.1017 - 0.0608) < 1e-4
    assert max(r) < 1e-4


def test_reconstruct_inconsistent():
    with pytest.raises(InconsistentData):
        ds.reconstruct_joint([[0.0507 + 0.05, 0.150], [0.0490, 0.135]], aggregate=(0.0608, 0.0760),
                             b_given_a2=(0.8983, 0.6859), p_a2=0.5)
