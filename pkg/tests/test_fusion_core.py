import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqfusion import (
    ConfusionMatrix,
    FusionNetwork,
    InvalidNetworkError,
    NetworkStructureError,
    RuleSpec,
    Vertex,
    VertexKind,
    fusion_order,
    propagate,
    validate_network,
)
from seqfusion.fusion_core import center_matrices
from seqfusion.oracle import OracleTooLarge, brute_force_network
from seqfusion.random_models import random_tree_network

M = ConfusionMatrix.from_rates
GOOD = M(0.1, 0.9)
AND, OR = RuleSpec.and_(), RuleSpec.or_()


def net(vertices, edges, m=2):
    return FusionNetwork(tuple(vertices), frozenset(edges), m)


def minimal():
    return FusionNetwork.build({"FC1": (AND, ["S1", "S2"])}, ["S1", "S2"])


def layered():
    return FusionNetwork.build(
        {"FC1": (AND, ["S1", "S2"]), "FC2": (OR, ["FC1", "S3"])},
        {"S1": GOOD, "S2": GOOD, "S3": GOOD},
    )


# --- validation --------------------------------------------------------------


def test_minimal_network_is_valid():
    assert validate_network(minimal()).ok


def test_two_childless_centers():
    n = FusionNetwork.build({"FC1": (AND, ["S1"]), "FC2": (AND, ["S2"])}, ["S1", "S2"])
    report = validate_network(n)
    assert "single_final" in report.rules()
    # each sensor still feeds exactly one center, so nothing else is flagged
    assert report.rules() == {"single_final"}


def test_center_with_object_parent():
    n = FusionNetwork.build({"FC1": (AND, ["S1", "H"])}, ["S1"])
    assert "center_object_parent" in validate_network(n).rules()


def test_sensor_with_two_center_parents():
    n = FusionNetwork.build(
        {"FC1": (AND, ["S1"]), "FC2": (AND, ["S2"]), "FC3": (OR, ["FC1", "FC2", "S3"])},
        ["S1", "S2", "S3"],
        cues=[("FC1", "S3"), ("FC2", "S3")],
    )
    report = validate_network(n)
    assert "sensor_parents" in report.rules()
    bad = [v for v in report.violations if v.rule == "sensor_parents"]
    assert bad[0].vertices[0] == "S3"


def test_cue_edge_is_legal():
    n = FusionNetwork.build(
        {"FC1": (AND, ["S1"]), "FC2": (OR, ["FC1", "S2"])}, ["S1", "S2"], cues=[("FC1", "S2")]
    )
    assert validate_network(n).ok


def test_no_root_sensor():
    n = FusionNetwork.build(
        {"FC1": (AND, ["S1"]), "FC2": (AND, ["S2"]), "FC3": (OR, ["FC1", "FC2"])},
        ["S1", "S2"],
        cues=[("FC2", "S1"), ("FC1", "S2")],
    )
    rules = validate_network(n).rules()
    assert "root_sensor" in rules and "acyclic" in rules


def test_cycle_detected():
    n = FusionNetwork.build({"FC1": (AND, ["S1", "FC2"]), "FC2": (AND, ["FC1", "S2"])}, ["S1", "S2"])
    assert "acyclic" in validate_network(n).rules()


def test_shared_sensor_breaks_tree():
    n = FusionNetwork.build(
        {"FC1": (AND, ["S1", "S2"]), "FC2": (AND, ["S2", "S3"]), "FC3": (OR, ["FC1", "FC2"])},
        ["S1", "S2", "S3"],
    )
    report = validate_network(n)
    assert report.rules() == {"tree"}
    assert report.violations[0].vertices[0] == "S2"


def test_every_violation_reported():
    n = FusionNetwork.build(
        {"FC1": (AND, ["H", "S1"]), "FC2": (AND, ["S2"]), "FC3": (AND, ["S2"])}, ["S1", "S2"]
    )
    rules = validate_network(n).rules()
    assert {"center_object_parent", "single_final", "tree"} <= rules


def test_structural_errors_are_distinct():
    with pytest.raises(NetworkStructureError):
        net([Vertex.object(), Vertex.sensor("S1")], {("H", "S1"), ("S1", "FC9")})
    with pytest.raises(NetworkStructureError):
        net([Vertex.object(), Vertex.object("H2")], set())
    with pytest.raises(NetworkStructureError):
        net([Vertex.object(), Vertex.sensor("S1"), Vertex.sensor("S1")], set())
    with pytest.raises(NetworkStructureError):
        net([Vertex.object(), Vertex.sensor("S1", ConfusionMatrix.identity(3))], {("H", "S1")})
    assert not issubclass(NetworkStructureError, InvalidNetworkError)


# --- ordering ----------------------------------------------------------------


def test_order_single():
    assert fusion_order(minimal()) == ["FC1"]


def test_order_chain():
    assert fusion_order(layered()) == ["FC1", "FC2"]


def test_order_tie_break_by_id():
    n = FusionNetwork.build(
        {"FC2": (AND, ["S2"]), "FC1": (AND, ["S1"]), "FC3": (OR, ["FC2", "FC1", "S3"])}, ["S1", "S2", "S3"]
    )
    assert fusion_order(n) == ["FC1", "FC2", "FC3"]


def test_order_respects_ancestry_not_just_ids():
    n = FusionNetwork.build({"A": (OR, ["Z", "S2"]), "Z": (AND, ["S1"])}, ["S1", "S2"])
    assert fusion_order(n) == ["Z", "A"]


def test_order_rejects_invalid():
    n = FusionNetwork.build({"FC1": (AND, ["S1"]), "FC2": (AND, ["S2"])}, ["S1", "S2"])
    with pytest.raises(InvalidNetworkError):
        fusion_order(n)


# --- propagation -------------------------------------------------------------


def test_pass_through_center():
    n = FusionNetwork.build({"D": (AND, ["S1"])}, ["S1"])
    assert propagate(n, {"S1": M(0.25, 0.7)}).allclose(M(0.25, 0.7), atol=0)


def test_and_pair():
    out = propagate(minimal(), {"S1": GOOD, "S2": GOOD})
    assert (out.pf, out.pd) == pytest.approx((0.01, 0.81), abs=1e-15)


def test_layered_matches_enumeration():
    # P_F = 1 - (1 - 0.01)(1 - 0.1) = 0.109, P_D = 1 - (1 - 0.81)(1 - 0.9) = 0.981
    out = propagate(layered())
    assert (out.pf, out.pd) == pytest.approx((0.109, 0.981), abs=1e-12)
    assert out.allclose(brute_force_network(layered()), atol=1e-12)


def test_missing_model():
    with pytest.raises(ValueError, match="S2"):
        propagate(minimal(), {"S1": GOOD})


def test_model_size_mismatch():
    with pytest.raises(ValueError):
        propagate(minimal(), {"S1": GOOD, "S2": ConfusionMatrix.identity(3)})


def test_np_center_uses_parent_center_matrix():
    n = FusionNetwork.build(
        {"FC1": (AND, ["S1", "S2"]), "FC2": (RuleSpec.neyman_pearson(0.05), ["FC1", "S3"])},
        {"S1": GOOD, "S2": GOOD, "S3": GOOD},
    )
    out = propagate(n)
    assert out.pf <= 0.05 + 1e-12
    assert out.allclose(brute_force_network(n), atol=1e-12)


def test_order_independence(rng):
    for _ in range(40):
        n = random_tree_network(rng, max_sensors=6)
        order = fusion_order(n)
        # any other parent-to-child order: reverse ids among independent centers
        alt = sorted(order, key=lambda c: (len(_depth(n, c)), c), reverse=False)
        a = center_matrices(n, order=order)
        b = center_matrices(n, order=alt)
        for c in order:
            np.testing.assert_array_equal(a[c].entries, b[c].entries)


def _depth(n, c):
    seen, todo = set(), list(n.parents(c))
    while todo:
        u = todo.pop()
        if u not in seen:
            seen.add(u)
            todo += n.parents(u)
    return {u for u in seen if n.kind(u) is VertexKind.CENTER}


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.sampled_from([2, 2, 3]))
def test_propagate_matches_joint_enumeration(seed, m):
    n = random_tree_network(np.random.default_rng(seed), max_sensors=6, m=m)
    out = propagate(n)
    np.testing.assert_allclose(out.entries.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(out.entries, brute_force_network(n).entries, atol=1e-12, rtol=0)


def test_brute_force_refuses_large():
    sensors = [f"S{i}" for i in range(16)]
    n = FusionNetwork.build({"D": (OR, sensors)}, {s: GOOD for s in sensors})
    with pytest.raises(OracleTooLarge):
        brute_force_network(n)
