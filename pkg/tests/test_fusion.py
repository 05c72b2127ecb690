"""RUS encoded-fusion state machine: outcomes, sign algebra, statistics."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sffcc.fusion import (EncodedFusionResult, FusionKind, FusionRecord,
                          RusPolicy, attempt_biased_measurement,
                          attempt_physical_fusion, apply_reinit_strategy,
                          run_encoded_fusion)
from sffcc.noise import PauliFrame


class SeqRng:
    def __init__(self, values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def _emitter(photons):
    it = iter(photons)
    return lambda: next(it)


def test_record_invariants():
    with pytest.raises(ValueError):
        FusionRecord(FusionKind.SUCCESS, xx=1, zz=None, attempt_index=1)
    with pytest.raises(ValueError):
        FusionRecord(FusionKind.FAILURE, xx=None, zz=None, attempt_index=1)
    with pytest.raises(ValueError):
        FusionRecord(FusionKind.ERASURE, xx=1, zz=None, attempt_index=1)
    with pytest.raises(ValueError):
        FusionRecord(FusionKind.BIASED_ZZ, xx=1, zz=1, attempt_index=1)


def test_physical_fusion_outcomes():
    clean = (0, 0, 0)
    rec = attempt_physical_fusion(clean, clean, SeqRng([0.2]))
    assert rec.kind == FusionKind.SUCCESS and rec.xx == 1 and rec.zz == 1

    rec = attempt_physical_fusion((1, 0, 0), clean, SeqRng([0.2]))
    assert rec.kind == FusionKind.SUCCESS and rec.zz == -1 and rec.xx == 1

    rec = attempt_physical_fusion((0, 1, 0), clean, SeqRng([0.2]))
    assert rec.xx == -1 and rec.zz == 1

    rec = attempt_physical_fusion((0, 0, 1), (0, 0, 1), SeqRng([]))
    assert rec.kind == FusionKind.ERASURE


def test_biased_measurement_outcomes():
    assert attempt_biased_measurement((0, 0, 0), (0, 0, 0)).zz == 1
    assert attempt_biased_measurement((1, 0, 0), (0, 0, 0)).zz == -1
    assert attempt_biased_measurement((0, 0, 0), (0, 1, 1)).kind == FusionKind.ERASURE


def test_reinit_clears_spin_frame():
    frame = PauliFrame(spin_x=1, spin_z=1)
    rec = FusionRecord(FusionKind.BIASED_ZZ, None, 1, 2)
    apply_reinit_strategy(rec, frame)
    assert (frame.spin_x, frame.spin_z) == (0, 0)
    frame = PauliFrame(spin_x=1, spin_z=0)
    apply_reinit_strategy(FusionRecord(FusionKind.SUCCESS, 1, 1, 1), frame)
    assert frame.spin_x == 1   # success does not reset the spin


def test_first_attempt_success():
    clean = [(0, 0, 0)] * 8
    res = run_encoded_fusion(_emitter(clean), _emitter(clean),
                             RusPolicy(n_attempts=8), SeqRng([0.1]))
    assert res.attempts_used == 1
    assert res.xx_bar == 1 and res.zz_bar == 1


def test_fail_loss_bias_success_scenario():
    # attempt 1 fails, attempt 2 loses a photon, attempt 3 is biased in ZZ
    a = [(0, 0, 0), (0, 0, 1), (0, 0, 0)]
    b = [(0, 0, 0), (0, 0, 0), (0, 0, 0)]
    res = run_encoded_fusion(_emitter(a), _emitter(b),
                             RusPolicy(n_attempts=8), SeqRng([0.9]))
    assert res.attempts_used == 3
    assert res.zz_bar == 1 and res.xx_bar is None
    kinds = [r.kind for r in res.records]
    assert kinds == [FusionKind.FAILURE, FusionKind.ERASURE, FusionKind.BIASED_ZZ]


def test_all_fail_recovers_xx_only():
    n = 4
    clean = [(0, 0, 0)] * n
    res = run_encoded_fusion(_emitter(clean), _emitter(clean),
                             RusPolicy(n_attempts=n), SeqRng([0.9] * n))
    assert res.xx_bar == 1 and res.zz_bar is None
    assert res.attempts_used == n


def test_xx_product_collects_all_attempt_flips():
    # photon Z on the second attempt's first photon flips the XX product
    a = [(0, 0, 0), (0, 1, 0), (0, 0, 0)]
    b = [(0, 0, 0)] * 3
    res = run_encoded_fusion(_emitter(a), _emitter(b),
                             RusPolicy(n_attempts=3), SeqRng([0.9, 0.9, 0.1]))
    assert res.attempts_used == 3
    assert res.xx_bar == -1 and res.zz_bar == 1


def test_budget_exhausted_with_losses_erases_both():
    lossy = [(0, 0, 1)] * 4
    res = run_encoded_fusion(_emitter(lossy), _emitter(lossy),
                             RusPolicy(n_attempts=4), SeqRng([]))
    assert res.xx_bar is None and res.zz_bar is None
    assert res.attempts_used == 4


def test_reinit_restart_recovers_xx():
    # loss then bias success; with re-init the fusion is re-attempted and
    # a later success recovers the XX parity within the shared budget
    a = [(0, 0, 1), (0, 0, 0), (0, 0, 0)]
    b = [(0, 0, 0)] * 3
    res = run_encoded_fusion(
        _emitter(a), _emitter(b),
        RusPolicy(n_attempts=8, reinit_after_zz_only=True), SeqRng([0.1]))
    assert res.attempts_used == 3
    assert res.zz_bar == 1 and res.xx_bar == 1


def test_biased_attempts_never_report_xx():
    a = [(0, 0, 1)] + [(0, 0, 0)] * 7
    b = [(0, 0, 0)] * 8
    res = run_encoded_fusion(_emitter(a), _emitter(b), RusPolicy(n_attempts=8),
                             SeqRng([]))
    for rec in res.records:
        if rec.kind == FusionKind.BIASED_ZZ:
            assert rec.xx is None


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=2, max_size=6),
       st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=2, max_size=6),
       st.integers(0, 2 ** 16 - 1))
def test_outcome_sign_algebra_matches_gf2_prediction(pa, pb, seed):
    """Reported parities equal the GF(2) parity of the injected Pauli bits."""
    n = min(len(pa), len(pb))
    photons_a = [(x, z, 0) for x, z in pa[:n]]
    photons_b = [(x, z, 0) for x, z in pb[:n]]
    rng = np.random.default_rng(seed)
    res = run_encoded_fusion(_emitter(photons_a), _emitter(photons_b),
                             RusPolicy(n_attempts=n), rng)
    used = res.attempts_used
    if res.zz_bar is not None:
        success_idx = next(i for i, r in enumerate(res.records)
                           if r.kind in (FusionKind.SUCCESS, FusionKind.BIASED_ZZ))
        ax, _ = pa[success_idx]
        bx, _ = pb[success_idx]
        assert res.zz_bar == (-1 if ax ^ bx else 1)
    if res.xx_bar is not None:
        parity = 0
        for i in range(used):
            parity ^= pa[i][1] ^ pb[i][1]
        assert res.xx_bar == (-1 if parity else 1)


def test_recovery_statistics_without_loss():
    """P(zz) = P(both) = 1 - 2^-N at zero loss, within 3 sigma."""
    n_trials = 30_000
    n = 4
    rng = np.random.default_rng(9)
    got_zz = got_both = 0
    clean = [(0, 0, 0)] * n
    for _ in range(n_trials):
        res = run_encoded_fusion(_emitter(clean), _emitter(clean),
                                 RusPolicy(n_attempts=n), rng)
        got_zz += res.zz_bar is not None
        got_both += (res.zz_bar is not None) and (res.xx_bar is not None)
        assert res.attempts_used <= n
    p_expect = 1 - 0.5 ** n
    sigma = np.sqrt(p_expect * (1 - p_expect) / n_trials)
    assert abs(got_zz / n_trials - p_expect) < 3 * sigma
    assert abs(got_both / n_trials - p_expect) < 3 * sigma
