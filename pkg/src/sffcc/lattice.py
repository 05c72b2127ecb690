"""Construction of the sFFCC fusion lattice and its spacetime syndrome graph.

Geometry
--------
The spatial lattice is a three-colourable honeycomb on an ``L x L`` rhombic
torus.  We coordinatise it through its dual triangular lattice: hexagonal
cells sit on integer points ``(a, b)``, carry colour ``(a - b) mod 3``, and
the torus is the quotient by ``span{L*(2,-1), L*(1,1)}``, which keeps the
colouring single-valued for every ``L >= 2`` and yields ``L**2`` cells per
colour.  Honeycomb vertices (one emitter each) are the up/down triangles of
the dual lattice, so there are ``6*L**2`` emitters, and the ``9*L**2`` edges
are fusion sites.  Each vertex has exactly one incident edge of each colour;
an edge's colour is the one missing from its two flanking cells.

Time
----
A logical cycle has ``6*L`` layers.  Layer ``t`` fuses every edge of colour
``t mod 3``, so each emitter performs one encoded fusion per layer and its
routing cycles through its three edges with period three.  A *slot* is one
(edge, layer) fusion; each slot yields an XX and a ZZ outcome bit.

Checks
------
Parity checks live on (cell, anchor layer) pairs with ``anchor = colour(cell)
(mod 3)``.  Multiplying the chain stabilisers of the six emitters of a cell
over the two layers flanking the anchor closes onto measured fusion outcomes
only, giving a deterministic weight-12 check:

    ZZ bits of the cell's (q+1)-coloured edges at layer  anchor - 2,
    XX bits of the (q+2)-coloured edges          at layer  anchor - 1,
    XX bits of the (q+1)-coloured edges          at layer  anchor + 1,
    ZZ bits of the (q+2)-coloured edges          at layer  anchor + 2,

with ``q`` the cell colour and time taken periodic.  Every outcome bit then
sits in exactly two checks, which is what makes matching decoding possible.
Logical correlation surfaces are the sheets swept in time by non-contractible
loops of the honeycomb; their bit sets consist of both outcome species of
every slot on the loop's edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

U_SUB, D_SUB = 0, 1
XX, ZZ = 0, 1


class LatticeError(ValueError):
    """Invalid lattice parameter or inconsistent construction input."""


def _check_distance(L: int) -> int:
    if not isinstance(L, (int, np.integer)) or isinstance(L, bool) or L < 2:
        raise LatticeError(f"code distance must be an integer >= 2, got {L!r}")
    return int(L)


@dataclass(frozen=True)
class LatticeSpec:
    """The sFFCC honeycomb x time lattice under periodic boundaries.

    All index tables are immutable int32 arrays; the object is safe to share
    read-only across parallel trial workers.
    """

    L: int
    layers: int
    boundary: str
    n_cells: int          # 3*L**2 hexagonal faces (L**2 per colour)
    n_emitters: int       # 6*L**2
    n_edges: int          # 9*L**2 fusion sites
    n_slots: int          # 18*L**3 encoded fusions per logical cycle
    cell_colour: np.ndarray        # [n_cells]
    edge_colour: np.ndarray        # [n_edges]
    edge_endpoints: np.ndarray     # [n_edges, 2] emitter ids (U end, D end)
    edge_flanks: np.ndarray        # [n_edges, 2] cells, ordered [colour+1, colour+2]
    emitter_edge: np.ndarray       # [n_emitters, 3] incident edge per colour
    cell_edges: np.ndarray         # [n_cells, 2, 3] boundary edges by (q+1, q+2) colour
    logical_loops: tuple = ()      # two tuples of edge ids, non-contractible cycles

    @property
    def slots_per_layer(self) -> int:
        return 3 * self.L * self.L

    def slot_index(self, edge: int, layer: int) -> int:
        """Slot id of fusing `edge` at `layer`; requires matching colours."""
        c = int(self.edge_colour[edge])
        if layer % 3 != c:
            raise LatticeError(f"edge {edge} (colour {c}) is not fused on layer {layer}")
        return edge * (2 * self.L) + layer // 3

    def slot_edge_layer(self, slot: int) -> tuple[int, int]:
        edge, k = divmod(slot, 2 * self.L)
        return edge, int(self.edge_colour[edge]) + 3 * k


def _build_tables(L: int):
    """Index tables for the torus honeycomb; see the module docstring."""
    n_ab = 3 * L * L

    def ab_index(a: int, b: int) -> int:
        c = (a - b) % 3
        i = ((a - b - c) // 3) % L
        j = ((a + 2 * b - c) // 3) % L
        return (c * L + i) * L + j

    def vertex(sub: int, a: int, b: int) -> int:
        return sub * n_ab + ab_index(a, b)

    def edge(m: int, a: int, b: int) -> int:
        return m * n_ab + ab_index(a, b)

    cell_colour = np.zeros(n_ab, dtype=np.int32)
    for c in range(3):
        cell_colour[c * L * L:(c + 1) * L * L] = c

    n_edges = 3 * n_ab
    edge_colour = np.zeros(n_edges, dtype=np.int32)
    edge_endpoints = np.zeros((n_edges, 2), dtype=np.int32)
    edge_flanks = np.zeros((n_edges, 2), dtype=np.int32)
    emitter_edge = np.full((2 * n_ab, 3), -1, dtype=np.int32)

    for c in range(3):
        for i in range(L):
            for j in range(L):
                a, b = 2 * i + j + c, -i + j
                q = (a - b) % 3  # == c by construction
                # edge type 0: U(a,b) - D(a,b)
                e0 = edge(0, a, b)
                edge_colour[e0] = q
                edge_endpoints[e0] = (vertex(U_SUB, a, b), vertex(D_SUB, a, b))
                edge_flanks[e0] = (ab_index(a + 1, b), ab_index(a, b + 1))
                # edge type 1: U(a,b) - D(a-1,b)
                e1 = edge(1, a, b)
                edge_colour[e1] = (q + 1) % 3
                edge_endpoints[e1] = (vertex(U_SUB, a, b), vertex(D_SUB, a - 1, b))
                edge_flanks[e1] = (ab_index(a, b + 1), ab_index(a, b))
                # edge type 2: U(a,b) - D(a,b-1)
                e2 = edge(2, a, b)
                edge_colour[e2] = (q + 2) % 3
                edge_endpoints[e2] = (vertex(U_SUB, a, b), vertex(D_SUB, a, b - 1))
                edge_flanks[e2] = (ab_index(a, b), ab_index(a + 1, b))
                # photon-switch table (one edge of each colour per emitter)
                u, d = vertex(U_SUB, a, b), vertex(D_SUB, a, b)
                emitter_edge[u, q] = e0
                emitter_edge[u, (q + 1) % 3] = e1
                emitter_edge[u, (q + 2) % 3] = e2
                emitter_edge[d, q] = e0
                emitter_edge[d, (q + 1) % 3] = edge(2, a, b + 1)
                emitter_edge[d, (q + 2) % 3] = edge(1, a + 1, b)

    # boundary edges of every cell, grouped by colour (q+1 first, q+2 second)
    cell_edges = np.zeros((n_ab, 2, 3), dtype=np.int32)
    for c in range(3):
        for i in range(L):
            for j in range(L):
                a, b = 2 * i + j + c, -i + j
                f = ab_index(a, b)
                ring = [edge(1, a, b), edge(0, a - 1, b), edge(2, a - 1, b),
                        edge(1, a, b - 1), edge(0, a, b - 1), edge(2, a, b)]
                plus1 = [e for e in ring if edge_colour[e] == (c + 1) % 3]
                plus2 = [e for e in ring if edge_colour[e] == (c + 2) % 3]
                if len(plus1) != 3 or len(plus2) != 3:
                    raise LatticeError("cell boundary is not properly three-coloured")
                cell_edges[f, 0] = plus1
                cell_edges[f, 1] = plus2

    # two non-contractible loops; their swept sheets are the logical surfaces
    loop1, loop2 = [], []
    for k in range(3 * L):
        loop1.append(edge(1, -k, k))
        loop1.append(edge(2, -k - 1, k + 1))
        loop2.append(edge(0, k, 0))
        loop2.append(edge(1, k + 1, 0))
    return (cell_colour, edge_colour, edge_endpoints, edge_flanks, emitter_edge,
            cell_edges, (tuple(loop1), tuple(loop2)))


def build_lattice(L: int) -> LatticeSpec:
    """Construct the distance-``L`` sFFCC lattice (periodic boundaries only)."""
    L = _check_distance(L)
    tables = _build_tables(L)
    return LatticeSpec(
        L=L,
        layers=6 * L,
        boundary="periodic",
        n_cells=3 * L * L,
        n_emitters=6 * L * L,
        n_edges=9 * L * L,
        n_slots=18 * L ** 3,
        cell_colour=tables[0],
        edge_colour=tables[1],
        edge_endpoints=tables[2],
        edge_flanks=tables[3],
        emitter_edge=tables[4],
        cell_edges=tables[5],
        logical_loops=tables[6],
    )


class ErasedLogicalError(RuntimeError):
    """A logical representative was evaluated across an erased fusion outcome."""


@dataclass(frozen=True)
class SyndromeGraph:
    """Spacetime parity-check structure over one logical cycle.

    Outcome bits are indexed ``bit = 2*slot + species`` with species ``XX=0``,
    ``ZZ=1``.  ``bit_dets`` lists the exactly-two checks containing each bit;
    ``det_bits`` is the inverse (twelve bits per check).  ``bit_sheet`` marks
    membership of each bit in the two logical correlation surfaces.
    """

    spec: LatticeSpec
    n_dets: int                   # 6*L**3 checks: (cell, anchor) pairs
    det_cell: np.ndarray          # [n_dets]
    det_anchor: np.ndarray        # [n_dets] anchor layer
    bit_dets: np.ndarray          # [2*n_slots, 2]
    det_bits: np.ndarray          # [n_dets, 12]
    bit_sheet: np.ndarray         # [2*n_slots, 2] uint8
    edge_sheet: np.ndarray        # [n_edges, 2] uint8 (loop membership)

    def det_index(self, cell: int, layer: int) -> int:
        q = int(self.spec.cell_colour[cell])
        if layer % 3 != q:
            raise LatticeError(f"cell {cell} (colour {q}) has no check anchored at layer {layer}")
        return cell * 2 * self.spec.L + (layer % self.spec.layers) // 3

    def stabiliser_bits(self, det: int) -> np.ndarray:
        """The twelve (slot, species) bits whose product forms check `det`."""
        return self.det_bits[det]

    def logical_surface_bits(self, which: int) -> np.ndarray:
        return np.nonzero(self.bit_sheet[:, which])[0]


def build_syndrome_graph(spec: LatticeSpec) -> SyndromeGraph:
    """Derive checks, bit incidences and logical surfaces from a lattice."""
    L = spec.L
    layers = spec.layers
    two_l = 2 * L
    n_slots = spec.n_slots
    n_dets = spec.n_cells * two_l

    det_cell = np.repeat(np.arange(spec.n_cells, dtype=np.int32), two_l)
    det_anchor = (np.tile(np.arange(two_l, dtype=np.int32) * 3, spec.n_cells)
                  + np.repeat(spec.cell_colour, two_l))

    def det_of(cell: int, layer: int) -> int:
        return cell * two_l + ((layer - int(spec.cell_colour[cell])) % layers) // 3

    bit_dets = np.zeros((2 * n_slots, 2), dtype=np.int32)
    for e in range(spec.n_edges):
        c = int(spec.edge_colour[e])
        q1, q2 = int(spec.edge_flanks[e, 0]), int(spec.edge_flanks[e, 1])
        for k in range(two_l):
            t = c + 3 * k
            s = e * two_l + k
            bit_dets[2 * s + XX] = (det_of(q1, t + 1), det_of(q2, t - 1))
            bit_dets[2 * s + ZZ] = (det_of(q1, t - 2), det_of(q2, t + 2))

    det_bits = np.full((n_dets, 12), -1, dtype=np.int32)
    fill = np.zeros(n_dets, dtype=np.int32)
    for bit in range(2 * n_slots):
        for d in bit_dets[bit]:
            det_bits[d, fill[d]] = bit
            fill[d] += 1
    if not np.all(fill == 12):
        raise LatticeError("check supports are not uniformly weight 12")

    edge_sheet = np.zeros((spec.n_edges, 2), dtype=np.uint8)
    for which, loop in enumerate(spec.logical_loops):
        edge_sheet[list(loop), which] = 1
    slot_edge = np.arange(n_slots, dtype=np.int64) // two_l
    bit_sheet = np.repeat(edge_sheet[slot_edge], 2, axis=0).reshape(2 * n_slots, 2)

    return SyndromeGraph(
        spec=spec,
        n_dets=n_dets,
        det_cell=det_cell,
        det_anchor=det_anchor,
        bit_dets=bit_dets,
        det_bits=det_bits,
        bit_sheet=bit_sheet,
        edge_sheet=edge_sheet,
    )


def evaluate_checks(graph: SyndromeGraph, xx: np.ndarray, zz: np.ndarray) -> np.ndarray:
    """Evaluate every check on +-1 outcome arrays (0 marks an erased outcome).

    Returns one value per check: +-1, or 0 when any participating outcome is
    erased (the check is then incomplete and a supercell-merging candidate).
    """
    vals = np.empty(2 * graph.spec.n_slots, dtype=np.int64)
    vals[0::2] = xx
    vals[1::2] = zz
    out = np.ones(graph.n_dets, dtype=np.int64)
    for d in range(graph.n_dets):
        prod = 1
        for bit in graph.det_bits[d]:
            v = vals[bit]
            if v == 0:
                prod = 0
                break
            prod *= v
        out[d] = prod
    return out


def logical_parity(graph: SyndromeGraph, xx: np.ndarray, zz: np.ndarray) -> tuple[int, int]:
    """Product of +-1 outcomes along each logical surface representative.

    Raises :class:`ErasedLogicalError` if a representative touches an erased
    (0-valued) outcome; callers must first deform surfaces around erasures
    (see :mod:`sffcc.decoder`).
    """
    vals = np.empty(2 * graph.spec.n_slots, dtype=np.int64)
    vals[0::2] = xx
    vals[1::2] = zz
    parities = []
    for which in (0, 1):
        bits = graph.logical_surface_bits(which)
        view = vals[bits]
        if np.any(view == 0):
            raise ErasedLogicalError(f"logical surface {which + 1} crosses an erased outcome")
        parities.append(int(np.prod(np.sign(view))))
    return parities[0], parities[1]


def lattice_to_json(spec: LatticeSpec, graph: SyndromeGraph | None = None) -> str:
    """Serialize the lattice (and optionally its check structure) for debugging."""
    payload = {
        "L": spec.L,
        "layers": spec.layers,
        "boundary": spec.boundary,
        "counts": {
            "cells": spec.n_cells,
            "emitters": spec.n_emitters,
            "edges": spec.n_edges,
            "encoded_fusions_per_cycle": spec.n_slots,
        },
        "cell_colour": spec.cell_colour.tolist(),
        "edge_colour": spec.edge_colour.tolist(),
        "edge_endpoints": spec.edge_endpoints.tolist(),
        "edge_flanks": spec.edge_flanks.tolist(),
        "emitter_edge": spec.emitter_edge.tolist(),
        "logical_loops": [list(loop) for loop in spec.logical_loops],
    }
    if graph is not None:
        payload["checks"] = {
            "count": graph.n_dets,
            "cell": graph.det_cell.tolist(),
            "anchor_layer": graph.det_anchor.tolist(),
            "bits": graph.det_bits.tolist(),
        }
    return json.dumps(payload, indent=2, sort_keys=True)
