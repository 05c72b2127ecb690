"""Lattice construction invariants: counts, colouring, checks, surfaces."""

from __future__ import annotations

import json

import numpy as np
import pytest

from sffcc.lattice import (ErasedLogicalError, LatticeError, build_lattice,
                           build_syndrome_graph, evaluate_checks,
                           lattice_to_json, logical_parity)


@pytest.fixture(scope="module", params=[2, 3, 4, 5])
def lattice(request):
    spec = build_lattice(request.param)
    graph = build_syndrome_graph(spec)
    return spec, graph


def test_invalid_distance_rejected():
    for bad in (1, 0, -3, 2.5, "3", True):
        with pytest.raises(LatticeError):
            build_lattice(bad)


def test_counts(lattice):
    spec, graph = lattice
    L = spec.L
    assert spec.n_emitters == 6 * L * L
    assert spec.n_cells == 3 * L * L
    assert spec.n_edges == 9 * L * L
    assert spec.slots_per_layer == 3 * L * L
    assert spec.n_slots == 18 * L ** 3
    assert spec.layers == 6 * L
    assert graph.n_dets == 6 * L ** 3
    for c in range(3):
        assert np.sum(spec.edge_colour == c) == 3 * L * L
        assert np.sum(spec.cell_colour == c) == L * L


def test_proper_three_colouring(lattice):
    spec, _ = lattice
    # flanking cells of every edge carry the two colours the edge lacks
    for e in range(spec.n_edges):
        c = int(spec.edge_colour[e])
        f1, f2 = spec.edge_flanks[e]
        assert {int(spec.cell_colour[f1]), int(spec.cell_colour[f2])} == {(c + 1) % 3, (c + 2) % 3}
    # and around every cell the boundary colours alternate through the other two
    for f in range(spec.n_cells):
        q = int(spec.cell_colour[f])
        ring = np.concatenate([spec.cell_edges[f, 0], spec.cell_edges[f, 1]])
        cols = sorted(int(spec.edge_colour[e]) for e in ring)
        assert cols == sorted([(q + 1) % 3] * 3 + [(q + 2) % 3] * 3)


def test_switch_table(lattice):
    spec, _ = lattice
    assert np.all(spec.emitter_edge >= 0)
    for v in range(spec.n_emitters):
        owned = set()
        for c in range(3):
            e = int(spec.emitter_edge[v, c])
            assert int(spec.edge_colour[e]) == c
            assert v in spec.edge_endpoints[e]
            owned.add(e)
        assert len(owned) == 3
    # each edge is owned by exactly its two endpoints
    counts = np.zeros(spec.n_edges, dtype=int)
    for v in range(spec.n_emitters):
        for c in range(3):
            counts[spec.emitter_edge[v, c]] += 1
    assert np.all(counts == 2)


def test_every_bit_in_exactly_two_checks(lattice):
    _, graph = lattice
    assert graph.det_bits.shape[1] == 12
    assert np.all(graph.bit_dets[:, 0] != graph.bit_dets[:, 1])
    counts = np.zeros(2 * graph.spec.n_slots, dtype=int)
    for row in graph.det_bits:
        for b in row:
            counts[b] += 1
    assert np.all(counts == 2)


def test_trivial_outcomes_give_trivial_checks(lattice):
    spec, graph = lattice
    xx = np.ones(spec.n_slots, dtype=np.int64)
    zz = np.ones(spec.n_slots, dtype=np.int64)
    assert np.all(evaluate_checks(graph, xx, zz) == 1)
    assert logical_parity(graph, xx, zz) == (1, 1)


def test_single_flip_defect_pairs_exhaustive_L2():
    spec = build_lattice(2)
    graph = build_syndrome_graph(spec)
    xx = np.ones(spec.n_slots, dtype=np.int64)
    zz = np.ones(spec.n_slots, dtype=np.int64)
    for s in range(spec.n_slots):
        for species, arr in ((0, xx), (1, zz)):
            arr[s] = -1
            vals = evaluate_checks(graph, xx, zz)
            bad = np.nonzero(vals == -1)[0]
            assert len(bad) == 2
            assert set(bad) == set(graph.bit_dets[2 * s + species])
            arr[s] = 1


def test_erasing_one_edge_makes_two_checks_incomplete():
    spec = build_lattice(2)
    graph = build_syndrome_graph(spec)
    xx = np.ones(spec.n_slots, dtype=np.int64)
    zz = np.ones(spec.n_slots, dtype=np.int64)
    zz[17] = 0
    vals = evaluate_checks(graph, xx, zz)
    incomplete = np.nonzero(vals == 0)[0]
    assert len(incomplete) == 2
    assert set(incomplete) == set(graph.bit_dets[2 * 17 + 1])


def test_check_flips_leave_logical_parities_invariant(lattice):
    spec, graph = lattice
    rng = np.random.default_rng(5)
    for d in rng.integers(0, graph.n_dets, size=40):
        vals = np.ones(2 * spec.n_slots, dtype=np.int64)
        for b in graph.det_bits[d]:
            vals[b] = -vals[b]
        for which in (0, 1):
            bits = graph.logical_surface_bits(which)
            assert np.prod(vals[bits]) == 1


def test_logical_parity_flip_semantics():
    spec = build_lattice(3)
    graph = build_syndrome_graph(spec)
    xx = np.ones(spec.n_slots, dtype=np.int64)
    zz = np.ones(spec.n_slots, dtype=np.int64)
    # a flipped bit on surface 1 that is off surface 2
    only1 = [b for b in graph.logical_surface_bits(0)
             if not graph.bit_sheet[b, 1]][0]
    s, species = divmod(int(only1), 2)
    (xx if species == 0 else zz)[s] = -1
    assert logical_parity(graph, xx, zz) == (-1, 1)
    # the same edge flipped twice cancels back out
    (xx if species == 0 else zz)[s] = 1
    assert logical_parity(graph, xx, zz) == (1, 1)


def test_logical_surfaces_are_independent(lattice):
    _, graph = lattice
    m1 = graph.bit_sheet[:, 0].astype(bool)
    m2 = graph.bit_sheet[:, 1].astype(bool)
    assert m1.any() and m2.any()
    assert (m1 & ~m2).any() and (m2 & ~m1).any()


def test_erased_logical_raises():
    spec = build_lattice(2)
    graph = build_syndrome_graph(spec)
    xx = np.ones(spec.n_slots, dtype=np.int64)
    zz = np.ones(spec.n_slots, dtype=np.int64)
    bit = int(graph.logical_surface_bits(0)[0])
    s, species = divmod(bit, 2)
    (xx if species == 0 else zz)[s] = 0
    with pytest.raises(ErasedLogicalError):
        logical_parity(graph, xx, zz)


def test_slot_indexing_roundtrip():
    spec = build_lattice(3)
    for e in (0, 11, 80):
        c = int(spec.edge_colour[e])
        for k in (0, 1, 2 * spec.L - 1):
            s = spec.slot_index(e, c + 3 * k)
            assert spec.slot_edge_layer(s) == (e, c + 3 * k)
    with pytest.raises(LatticeError):
        spec.slot_index(0, (int(spec.edge_colour[0]) + 1) % 3)


def test_json_dump_structure():
    spec = build_lattice(2)
    graph = build_syndrome_graph(spec)
    payload = json.loads(lattice_to_json(spec, graph))
    assert payload["counts"]["emitters"] == 24
    assert payload["counts"]["encoded_fusions_per_cycle"] == 144
    assert len(payload["edge_colour"]) == 36
    assert len(payload["logical_loops"]) == 2
    assert payload["checks"]["count"] == 48
    assert all(len(bits) == 12 for bits in payload["checks"]["bits"])
