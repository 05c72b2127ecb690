"""Decoder behaviour: supercells, surface deformation, matching, verdicts."""

from __future__ import annotations

import heapq

import numpy as np
import pytest

from sffcc.decoder import (DecodeInput, TrialDecoder, check_matrix,
                           deform_logical_surfaces, form_supercells,
                           match_and_correct, reference_decode)
from sffcc.lattice import build_lattice, build_syndrome_graph
from sffcc.montecarlo import TrialEngine
from sffcc.noise import NoiseParams


@pytest.fixture(scope="module")
def g2():
    spec = build_lattice(2)
    return build_syndrome_graph(spec)


def _input(graph, flips=(), erased=()):
    n = graph.spec.n_slots
    xxf = np.zeros(n, np.uint8)
    zzf = np.zeros(n, np.uint8)
    xxe = np.zeros(n, np.uint8)
    zze = np.zeros(n, np.uint8)
    for b in flips:
        s, sp = divmod(int(b), 2)
        (xxf if sp == 0 else zzf)[s] ^= 1
    for b in erased:
        s, sp = divmod(int(b), 2)
        (xxe if sp == 0 else zze)[s] = 1
    return DecodeInput(graph, xxf, xxe, zzf, zze)


def test_no_erasure_no_flip_passthrough(g2):
    verdict = TrialDecoder(g2).decode(_input(g2))
    assert not verdict.failed and verdict.n_defects == 0


def test_supercell_merging_single_erasure(g2):
    erased = np.array([2 * 11 + 1], dtype=np.int64)   # one zz bit
    supports, members = form_supercells(g2, erased)
    assert not supports[:, erased].any()
    # the two checks bordering the erasure merged into one supercell
    merged = [m for m in members if len(m) == 2]
    assert len(merged) == 1
    assert set(merged[0]) == set(g2.bit_dets[erased[0]])
    assert supports.shape[0] == g2.n_dets - 1


def test_supercell_group_preserved_on_intact_bits(g2):
    rng = np.random.default_rng(3)
    erased = np.unique(rng.integers(0, 2 * g2.spec.n_slots, size=25)).astype(np.int64)
    supports, _ = form_supercells(g2, erased)
    h = check_matrix(g2)
    intact = np.setdiff1d(np.arange(2 * g2.spec.n_slots), erased)

    def gf2_rank(a):
        a = a.copy() % 2
        r = 0
        for c in range(a.shape[1]):
            piv = np.nonzero(a[r:, c])[0]
            if piv.size == 0:
                continue
            a[[r, r + piv[0]]] = a[[r + piv[0], r]]
            for rr in np.nonzero(a[:, c])[0]:
                if rr != r:
                    a[rr] ^= a[r]
            r += 1
        return r

    # the merged rows generate the same group as "all combinations of the
    # original checks that avoid the erasure", i.e. ranks agree on intact bits
    full_rank = gf2_rank(np.vstack([h[:, intact], supports[:, intact]]))
    assert gf2_rank(supports[:, intact]) == gf2_rank(supports)
    assert full_rank == gf2_rank(h[:, intact])
    # and no information was lost relative to direct elimination
    assert gf2_rank(supports[:, intact]) == full_rank - (
        gf2_rank(h[:, intact]) - gf2_rank(supports[:, intact]))


def test_deform_surfaces(g2):
    # no erasure: original surfaces come back
    out = deform_logical_surfaces(g2, np.array([], dtype=np.int64))
    assert np.array_equal(out[0], g2.bit_sheet[:, 0])
    assert np.array_equal(out[1], g2.bit_sheet[:, 1])

    # single erased bit on surface 1: a parity-equivalent deformation exists
    bit = int(g2.logical_surface_bits(0)[0])
    out = deform_logical_surfaces(g2, np.array([bit], dtype=np.int64))
    assert out[0] is not None and out[0][bit] == 0
    diff = (out[0] ^ g2.bit_sheet[:, 0])
    h = check_matrix(g2)
    # the deformation is a sum of check supports: consistent linear system
    aug = np.vstack([h, diff[None, :]])

    def rank(a):
        a = a.copy() % 2
        r = 0
        for c in range(a.shape[1]):
            piv = np.nonzero(a[r:, c])[0]
            if piv.size == 0:
                continue
            a[[r, r + piv[0]]] = a[[r + piv[0], r]]
            for rr in np.nonzero(a[:, c])[0]:
                if rr != r:
                    a[rr] ^= a[r]
            r += 1
        return r

    assert rank(aug) == rank(h)


def test_percolating_erasure_is_logical_erasure(g2):
    # erase every bit: no deformation can avoid the erasure
    all_bits = np.arange(2 * g2.spec.n_slots, dtype=np.int64)
    out = deform_logical_surfaces(g2, all_bits)
    assert out[0] is None and out[1] is None
    verdict = TrialDecoder(g2).decode(_input(g2, erased=all_bits))
    assert verdict.logical_erasure and verdict.logical_error is None


def test_single_flip_decoded_exhaustively(g2):
    dec = TrialDecoder(g2)
    for bit in range(2 * g2.spec.n_slots):
        verdict = dec.decode(_input(g2, flips=[bit]))
        assert verdict.n_defects == 2
        assert verdict.logical_error is False, f"logical error on single flip {bit}"


def test_empty_syndrome_empty_correction(g2):
    corr = match_and_correct(g2, _input(g2))
    assert corr.sum() == 0


def test_correction_clears_all_merged_checks(g2):
    dec = TrialDecoder(g2)
    eng = TrialEngine(2)
    noise = NoiseParams(p_loss=0.05, p_Z_photon=0.01, p_X_photon=0.02)
    flags = np.array([1, 0, 1], dtype=np.int64)
    import sffcc.kernels as kernels
    for seed in range(25):
        kernels.run_trial(np.uint64(1000 + seed), 2, 8, flags,
                          eng.edges_by_colour, eng.endpoints, noise.as_vector(),
                          eng._xxf, eng._xxe, eng._zzf, eng._zze, eng._lnm,
                          eng._sx, eng._sz, eng._blink, eng._first,
                          eng._slot_attempts)
        inp = DecodeInput(g2, eng._xxf.copy(), eng._xxe.copy(),
                          eng._zzf.copy(), eng._zze.copy())
        verdict = dec.decode(inp)
        if verdict.logical_erasure:
            continue
        # reference path asserts the merged checks are cleared internally and
        # must agree with the production verdict
        ref = reference_decode(g2, inp)
        assert ref.logical_error == verdict.logical_error, f"seed {seed}"


def test_two_flip_sweep_against_minimum_weight_oracle(g2):
    """Decoder verdicts agree with a per-class brute-force matching oracle.

    For each two-bit error the oracle computes, per logical class, the
    minimum correction weight via Dijkstra over (check, class) states; the
    decoder's verdict must be reachable by a minimum-weight correction.
    """
    dec = TrialDecoder(g2)
    n_bits = 2 * g2.spec.n_slots
    adj = [[] for _ in range(g2.n_dets)]
    for b in range(n_bits):
        d1, d2 = g2.bit_dets[b]
        par = int(g2.bit_sheet[b, 0]) | (int(g2.bit_sheet[b, 1]) << 1)
        adj[d1].append((int(d2), par))
        adj[d2].append((int(d1), par))

    def class_distances(src):
        dist = {}
        h = [(0, int(src), 0)]
        while h:
            d, u, p = heapq.heappop(h)
            if (u, p) in dist:
                continue
            dist[(u, p)] = d
            for v, ep in adj[u]:
                if (v, p ^ ep) not in dist:
                    heapq.heappush(h, (d + 1, v, p ^ ep))
        return dist

    rng = np.random.default_rng(12)
    pairs = [(int(a), int(b)) for a, b in
             rng.integers(0, n_bits, size=(140, 2)) if a != b]
    for b1, b2 in pairs:
        inp = _input(g2, flips=[b1, b2])
        verdict = dec.decode(inp)
        net_parity = (int(g2.bit_sheet[b1, 0] ^ g2.bit_sheet[b2, 0])
                      | (int(g2.bit_sheet[b1, 1] ^ g2.bit_sheet[b2, 1]) << 1))
        det_flip = np.zeros(g2.n_dets, np.uint8)
        for b in (b1, b2):
            det_flip[g2.bit_dets[b, 0]] ^= 1
            det_flip[g2.bit_dets[b, 1]] ^= 1
        defects = np.nonzero(det_flip)[0]
        if defects.size == 0:
            continue
        # oracle: minimum weight per class over all pairings
        best = {}
        if defects.size == 2:
            d = class_distances(defects[0])
            for p in range(4):
                if (int(defects[1]), p) in d:
                    best[p] = d[(int(defects[1]), p)]
        else:
            dists = [class_distances(x) for x in defects]
            pairings = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
            for (i, j), (k, l) in pairings:
                for p1 in range(4):
                    for p2 in range(4):
                        k1 = (int(defects[j]), p1)
                        k2 = (int(defects[l]), p2)
                        if k1 in dists[i] and k2 in dists[k]:
                            w = dists[i][k1] + dists[k][k2]
                            p = p1 ^ p2
                            if p not in best or w < best[p]:
                                best[p] = w
        w_min = min(best.values())
        optimal_classes = {p for p, w in best.items() if w == w_min}
        decoder_class = ((verdict.error_surfaces[0] | (verdict.error_surfaces[1] << 1))
                         ^ net_parity)
        assert decoder_class in optimal_classes, (b1, b2)


def test_reference_and_fast_decoders_agree_with_erasures(g2):
    eng = TrialEngine(2)
    dec = TrialDecoder(g2)
    import sffcc.kernels as kernels
    noise = NoiseParams(p_loss=0.04, p_Z_photon=0.008)
    flags = np.array([1, 0, 1], dtype=np.int64)
    checked = 0
    for seed in range(40):
        kernels.run_trial(np.uint64(777 + seed), 2, 8, flags,
                          eng.edges_by_colour, eng.endpoints, noise.as_vector(),
                          eng._xxf, eng._xxe, eng._zzf, eng._zze, eng._lnm,
                          eng._sx, eng._sz, eng._blink, eng._first,
                          eng._slot_attempts)
        inp = DecodeInput(g2, eng._xxf.copy(), eng._xxe.copy(),
                          eng._zzf.copy(), eng._zze.copy())
        fast = dec.decode(inp)
        ref = reference_decode(g2, inp)
        assert fast.logical_erasure == ref.logical_erasure, f"seed {seed}"
        if not fast.logical_erasure:
            assert fast.logical_error == ref.logical_error, f"seed {seed}"
            checked += 1
    assert checked > 10


def test_erasure_rate_decreases_with_size_below_percolation():
    rng = np.random.default_rng(8)
    rates = []
    for L in (2, 4):
        spec = build_lattice(L)
        graph = build_syndrome_graph(spec)
        dec = TrialDecoder(graph)
        hits = 0
        trials = 150
        for _ in range(trials):
            mask = rng.random(2 * spec.n_slots) < 0.05
            erased = np.nonzero(mask)[0]
            verdict = dec.decode(_input(graph, erased=erased))
            hits += verdict.logical_erasure
        rates.append(hits / trials)
    assert rates[1] <= rates[0] + 0.02


def test_union_find_matcher_decodes_single_flips(g2):
    dec = TrialDecoder(g2, matcher="unionfind")
    for bit in range(0, 2 * g2.spec.n_slots, 7):
        verdict = dec.decode(_input(g2, flips=[bit]))
        assert verdict.logical_error is False


def test_debug_dump_roundtrip(g2):
    dec = TrialDecoder(g2)
    inp = _input(g2, flips=[5, 40], erased=[77])
    import json
    dump = json.loads(dec.debug_json(inp))
    assert dump["erased_bits"] == [77]
    assert sorted(dump["flipped_bits"]) == [5, 40]
    assert "verdict" in dump and len(dump["defects"]) in (2, 4)
