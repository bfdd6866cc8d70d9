import json

import pytest

import errors
import special_geometry
from modular_j import GeoMatrix, full_variables, jet_variables, modular_levels
from atypicality import default_matrix_pool, modular_relation_search
from polycore import Ideal, Poly, ideal_dimension, radical_membership, same_radical
from special_geometry import (
    GeodesicSpec,
    JSpecialSpec,
    d_normality,
    geodesic_paths,
    is_free,
    j_block_decomposition,
    load_document,
    modular_relations,
    normality,
    product_with_affine,
    synthesize_dspecial,
)

JET2 = jet_variables(2)
S_ROWS = [[0, -1], [1, 0]]


def _jet2(text):
    return Poly.parse(text, JET2)


def _diagonal_pair():
    return synthesize_dspecial(
        JSpecialSpec(2, ((1, 2, 1),)), GeodesicSpec(2, ((1, 2, GeoMatrix.identity()),))
    )


def _inversion_pair():
    return synthesize_dspecial(JSpecialSpec(2, ((1, 2, 1),)), GeodesicSpec(2, ((1, 2, S_ROWS),)))


# ---------------------------------------------------------------------------
# Combinatorics


def test_jspecial_edges_are_normalized():
    spec = JSpecialSpec(3, ((2, 1, 2), (3, 2, 1)))
    assert spec.edges == ((1, 2, 2), (2, 3, 1))
    assert spec.level(2, 1) == 2
    assert spec.level(1, 3) is None


@pytest.mark.parametrize(
    "edges",
    [((1, 1, 2),), ((1, 4, 2),), ((1, 2, 0),), ((1, 2, 2), (2, 1, 3)), (("a", 2, 1),)],
)
def test_bad_jspecial_edges(edges):
    with pytest.raises(errors.InvalidInput):
        JSpecialSpec(3, edges)


def test_geodesic_reversed_edge_is_stored_by_adjugate():
    g = GeoMatrix(2, 1, 0, 1)
    geo = GeodesicSpec(2, ((2, 1, g),))
    assert geo.edges == ((1, 2, g.adjugate()),)
    assert geo.matrix(2, 1) == g


def test_geodesic_zero_marker_is_dropped():
    geo = GeodesicSpec(2, ((1, 2, [[0, 0], [0, 0]]),))
    assert geo.edges == ()


def test_block_decomposition():
    decomp = j_block_decomposition(JSpecialSpec(4, ((1, 3, 2), (3, 4, 1))))
    assert [b.members for b in decomp.blocks] == [(1, 3, 4), (2,)]
    assert decomp.block_of(4).root == 1
    assert decomp.block_of(2).is_trivial()
    with pytest.raises(errors.InvalidArgument):
        decomp.block_of(5)


def test_geodesic_paths_compose_from_root():
    a, b = GeoMatrix(2, 0, 0, 1), GeoMatrix(1, 1, 0, 1)
    ((root, paths),) = geodesic_paths(GeodesicSpec(3, ((1, 2, a), (2, 3, b))))
    assert root == 1
    assert paths[3] == b @ a


def test_consistent_cycle_is_accepted():
    a, b = GeoMatrix(2, 0, 0, 1), GeoMatrix(1, 1, 0, 1)
    geo = GeodesicSpec(3, ((1, 2, a), (2, 3, b), (1, 3, b @ a)))
    assert len(geodesic_paths(geo)) == 1


def test_inconsistent_cycle_is_invalid():
    a, b = GeoMatrix(2, 0, 0, 1), GeoMatrix(1, 1, 0, 1)
    geo = GeodesicSpec(3, ((1, 2, a), (2, 3, b), (1, 3, a)))
    with pytest.raises(errors.InvalidGeodesic) as info:
        geodesic_paths(geo)
    assert info.value.exit_code == 3


# ---------------------------------------------------------------------------
# Synthesis


def test_diagonal_pair_is_the_diagonal():
    variety = _diagonal_pair()
    assert variety.dimension() == 3
    assert variety.special_dimension() == 1
    assert variety.is_upper_triangular()
    assert variety.invariants_hold
    for text in ("y1 - y2", "dy1 - dy2", "ddy1 - ddy2"):
        assert variety.ideal.contains(_jet2(text))


def test_inversion_pair_has_dimension_four():
    variety = _inversion_pair()
    assert variety.block_dims == (4,)
    assert variety.expected_dims == (4,)
    assert not variety.is_upper_triangular()
    assert variety.invariants_hold
    assert radical_membership(_jet2("y1 - y2"), variety.ideal)
    cubic = _jet2("(ddy1*dy2^2 - dy1^2*ddy2)^2 - 4*dy1^3*dy2^3")
    assert radical_membership(cubic, variety.ideal)
    assert not radical_membership(_jet2("dy1 - dy2"), variety.ideal)


def test_unlinked_coordinates_give_the_full_space():
    variety = synthesize_dspecial(JSpecialSpec(2), GeodesicSpec(2))
    assert variety.ideal.generators == ()
    assert variety.dimension() == 6
    assert variety.special_dimension() == 2


def test_unassociated_geodesic_is_rejected():
    with pytest.raises(errors.InvalidGeodesic):
        synthesize_dspecial(JSpecialSpec(2, ((1, 2, 1),)), GeodesicSpec(2))


def test_report_shape():
    report = _inversion_pair().to_report()
    assert report["dim"] == 4
    assert report["blocks"] == [
        {"members": [1, 2], "dim": 4, "expected_dim": 4, "upper_triangular": False}
    ]
    json.dumps(report)


@pytest.mark.slow
def test_level_two_diagonal_block():
    variety = synthesize_dspecial(
        JSpecialSpec(2, ((1, 2, 2),)), GeodesicSpec(2, ((1, 2, [[2, 0], [0, 1]]),))
    )
    assert variety.block_dims == (3,)
    assert variety.invariants_hold


IDENTITY_ROWS = [[1, 0], [0, 1]]
SHIFT_ROWS = [[1, 1], [0, 1]]


@pytest.mark.parametrize(
    "n, jedges, gedges, dim, upper",
    [
        (2, ((1, 2, 1),), ((1, 2, IDENTITY_ROWS),), 3, True),
        (2, ((1, 2, 1),), ((1, 2, SHIFT_ROWS),), 3, True),
        (2, ((1, 2, 1),), ((1, 2, S_ROWS),), 4, False),
        (2, ((1, 2, 1),), ((1, 2, [[1, 0], [3, 1]]),), 4, False),
        (3, ((1, 2, 1),), ((1, 2, IDENTITY_ROWS),), 6, True),
        (3, ((1, 2, 1),), ((1, 2, S_ROWS),), 7, False),
        (4, ((1, 2, 1), (3, 4, 1)), ((1, 2, S_ROWS), (3, 4, IDENTITY_ROWS)), 7, False),
        pytest.param(
            2, ((1, 2, 2),), ((1, 2, [[2, 0], [0, 1]]),), 3, True, marks=pytest.mark.slow
        ),
    ],
)
def test_upper_triangular_exactly_when_three_per_block(n, jedges, gedges, dim, upper):
    variety = synthesize_dspecial(JSpecialSpec(n, jedges), GeodesicSpec(n, gedges))
    actual = ideal_dimension(variety.ideal)
    assert actual == dim == variety.dimension() == sum(variety.expected_dims)
    assert variety.invariants_hold
    assert variety.is_upper_triangular() is upper
    assert variety.is_upper_triangular() == (actual == 3 * variety.special_dimension())


def test_mixed_triangular_and_inversion_edges_share_one_block():
    variety = synthesize_dspecial(
        JSpecialSpec(3, ((1, 2, 1), (2, 3, 1))),
        GeodesicSpec(3, ((1, 2, SHIFT_ROWS), (2, 3, S_ROWS))),
    )
    assert variety.block_dims == (4,)
    assert variety.expected_dims == (4,)
    assert ideal_dimension(variety.ideal) == 4
    assert not variety.is_upper_triangular()
    for text in ("y1 - y2", "dy1 - dy2", "ddy1 - ddy2"):
        assert radical_membership(Poly.parse(text, jet_variables(3)), variety.ideal)


# ---------------------------------------------------------------------------
# Projections and normality


def test_projection_of_diagonal_onto_one_coordinate():
    variety = _diagonal_pair()
    assert special_geometry.projection_dimension(variety.ideal, (1,)) == 3
    assert special_geometry.coordinate_count(variety.ideal) == 2
    assert special_geometry.coordinate_group(1, full_variables(2)) == ["x1", "y1", "dy1", "ddy1"]


def test_normality_of_product_with_affine():
    full = product_with_affine(_inversion_pair().ideal)
    assert full.variables == full_variables(2)
    verdict = normality(full, "normal")
    assert verdict.holds
    assert [row["dim"] for row in verdict.table] == [4, 4, 6]
    strict = normality(full, "strongly-normal")
    assert not strict.holds
    assert strict.witness == (1, 2)


def test_normality_needs_the_full_ambient():
    with pytest.raises(errors.InvalidArgument):
        normality(_diagonal_pair().ideal)
    with pytest.raises(errors.InvalidArgument):
        normality(product_with_affine(_diagonal_pair().ideal), "weird")


def test_d_normality_against_the_special_variety():
    variety = _inversion_pair()
    inside = Ideal(JET2, list(variety.ideal.generators) + [_jet2("y1 - 5")])
    verdict = d_normality(inside, variety, "d-normal")
    assert verdict.holds
    strict = d_normality(inside, variety, "strongly-d-normal")
    assert not strict.holds


def test_modular_relations_and_freeness():
    variety = _diagonal_pair()
    assert modular_relations(variety.ideal) == [(1, 2, 1)]
    assert not is_free(variety.ideal)
    assert is_free(Ideal(JET2, ["dy1 - 1"]))


def test_freeness_default_reaches_past_the_shipped_levels():
    assert special_geometry.FREE_N_MAX == 5
    assert modular_levels(special_geometry.FREE_N_MAX) == [1, 2, 3]
    assert is_free(Ideal(JET2, ["dy1 - 1"]))
    with pytest.raises(errors.UnsupportedLevel):
        is_free(Ideal(JET2, ["dy1 - 1"]), strict=True)


def test_relation_searches_report_every_level():
    point = Ideal(JET2, ["y1 - 1728", "y2 - 1728"])
    assert modular_relations(point, n_max=2) == [(1, 2, 1), (1, 2, 2)]
    assert modular_relations(point, n_max=2, first_only=True) == [(1, 2, 1)]
    assert modular_relation_search([1728, 1728], n_max=2) == [(1, 2, 1), (1, 2, 2)]
    assert special_geometry.lowest_level_edges([(1, 2, 2), (1, 2, 1)]) == ((1, 2, 1),)


def test_closure_of_the_inversion_block():
    variety = _inversion_pair()
    closure = special_geometry.dspecial_closure(variety.ideal, n_max=1)
    assert closure.dimension() == 4
    assert ideal_dimension(closure.ideal) == 4


@pytest.mark.parametrize("g", [GeoMatrix(1, 0, 3, 1), GeoMatrix(2, 1, 1, 1)])
def test_closure_recovers_matrices_outside_the_pool(g):
    variety = synthesize_dspecial(JSpecialSpec(2, ((1, 2, 1),)), GeodesicSpec(2, ((1, 2, g),)))
    assert g not in default_matrix_pool()
    closure = special_geometry.dspecial_closure(variety.ideal, n_max=2)
    assert closure.block_dims == (4,)
    assert same_radical(closure.ideal, variety.ideal)


def test_closure_with_an_empty_pool_still_recovers_the_block():
    variety = _inversion_pair()
    closure = special_geometry.dspecial_closure(variety.ideal, n_max=1, pool=[])
    assert same_radical(closure.ideal, variety.ideal)


def test_edge_matrices_are_read_off_the_block():
    sheared = synthesize_dspecial(
        JSpecialSpec(2, ((1, 2, 1),)), GeodesicSpec(2, ((1, 2, GeoMatrix(1, 0, 3, 1)),))
    )
    recovered = special_geometry.recover_edge_matrices(sheared.ideal, 1, 2, 1)
    assert recovered[0] == GeoMatrix(1, 0, 3, 1)
    assert special_geometry.recover_edge_matrices(_diagonal_pair().ideal, 1, 2, 1) == [GeoMatrix.identity()]
    assert special_geometry.recover_edge_matrices(Ideal(JET2, []), 1, 2, 1) == []


def test_closure_of_a_constrained_loose_coordinate():
    with pytest.raises(errors.NoCanonicalClosure):
        special_geometry.dspecial_closure(Ideal(JET2, ["y1 - 3"]), n_max=1)


def test_free_parts_pick_one_member_per_block():
    variety = _diagonal_pair()
    parts = special_geometry.free_parts(variety.ideal, variety.blocks)
    assert [p.indices for p in parts] == [(1,), (2,)]


# ---------------------------------------------------------------------------
# Documents


def _doc(**extra):
    data = {
        "n": 2,
        "jspecial": {"edges": [{"i": 1, "k": 2, "N": 1}]},
        "geodesic": {"edges": [{"i": 1, "k": 2, "g": S_ROWS}]},
        "generators": ["y1 - y2"],
    }
    data.update(extra)
    return data


def test_load_document_from_dict_text_and_path(tmp_path):
    path = tmp_path / "doc.json"
    path.write_text(json.dumps(_doc()))
    for source in (_doc(), json.dumps(_doc()), path, str(path)):
        doc = load_document(source)
        assert doc.n == 2
        assert doc.jspec.edges == ((1, 2, 1),)
        assert doc.variables == JET2
        assert doc.ideal().generators == (_jet2("y1 - y2"),)


def test_document_sections_and_ambient():
    doc = load_document(_doc(ambient="full", V=["x1 - y1"]))
    assert doc.variables == full_variables(2)
    assert doc.ideal("V").generators[0] == Poly.parse("x1 - y1", full_variables(2))
    with pytest.raises(errors.InvalidInput):
        doc.ideal("T")


@pytest.mark.parametrize(
    "data",
    [
        "{not json",
        {"jspecial": {}},
        {"n": 2, "constants": {"y1": 3}},
        {"n": 2, "jspecial": {"edges": [{"i": 1}]}},
        {"n": 2, "ambient": "weird"},
    ],
)
def test_malformed_documents(data):
    with pytest.raises(errors.InvalidInput):
        load_document(data)


def test_dump_document_round_trips_edges():
    variety = _inversion_pair()
    doc = load_document(special_geometry.dump_document(variety))
    assert doc.geo.edges == variety.geo.edges
    assert doc.jspec.edges == variety.jspec.edges
