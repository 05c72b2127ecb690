"""Noise-channel semantics: frame propagation, channel rules, invariants."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sffcc import kernels
from sffcc.montecarlo import TrialEngine
from sffcc.noise import (BlinkState, NoiseParameterError, NoiseParams,
                         PauliFrame, blink_initial, propagate_cnot,
                         propagate_hadamard, sample_blinking, sample_branching,
                         sample_photon_distinguishability,
                         sample_spin_depolarisation, resolve_straddle)


class CountingRng:
    """Deterministic uniform source for exercising rule branches."""

    def __init__(self, values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def test_noise_params_validation():
    with pytest.raises(NoiseParameterError):
        NoiseParams(p_loss=-0.1)
    with pytest.raises(NoiseParameterError):
        NoiseParams(p_b=1.2)
    with pytest.raises(NoiseParameterError):
        NoiseParams(blink_rate=0.0)
    p = NoiseParams(p_blink=0.061, blink_rate=0.01)
    assert p.blink_pa == pytest.approx((1 - 0.061) * 0.01)
    assert p.blink_stationary_alive == pytest.approx(1 - 0.061)


def test_cnot_propagation_examples():
    f = PauliFrame(spin_x=1, spin_z=0)
    propagate_cnot(f)
    assert (f.spin_x, f.spin_z) == (1, 0) and f.photons[-1][:2] == (1, 0)

    f = PauliFrame(spin_x=0, spin_z=1)
    propagate_cnot(f)
    assert (f.spin_x, f.spin_z) == (0, 0) and f.photons[-1][:2] == (0, 1)

    f = PauliFrame()
    propagate_cnot(f)
    assert (f.spin_x, f.spin_z) == (0, 0) and f.photons[-1][:2] == (0, 0)


def test_hadamard_swaps_frame_bits():
    assert propagate_hadamard(PauliFrame(spin_x=1, spin_z=0)).spin_z == 1
    f = propagate_hadamard(PauliFrame())
    assert (f.spin_x, f.spin_z) == (0, 0)
    f = propagate_hadamard(PauliFrame(spin_x=1, spin_z=1))
    assert (f.spin_x, f.spin_z) == (1, 1)


def test_branching_rule():
    f = PauliFrame()
    propagate_cnot(f)
    sample_branching(f, 0.0, 0, CountingRng([0.9]))
    assert f.photons[0][:2] == (0, 0)

    f = PauliFrame()
    propagate_cnot(f)
    sample_branching(f, 0.01, 0, CountingRng([0.001]), first_emission=True)
    assert f.photons[0][:2] == (1, 0) and f.spin_x == 0

    f = PauliFrame()
    propagate_cnot(f)
    sample_branching(f, 0.01, 0, CountingRng([0.001]), first_emission=False)
    assert f.photons[0][:2] == (1, 0) and f.spin_x == 1


def test_branching_spreads_through_block_and_localises_after_hadamard():
    # branching at photon i puts X on photons i..N of the block, then the
    # Hadamard turns the retained spin X into a Z on the next block's first photon
    f = PauliFrame()
    propagate_cnot(f)
    sample_branching(f, 0.5, 0, CountingRng([0.0]), first_emission=False)
    for _ in range(2):
        propagate_cnot(f)
    assert [p[0] for p in f.photons] == [1, 1, 1]
    propagate_hadamard(f)
    propagate_cnot(f)
    assert f.photons[-1][:2] == (0, 1)
    assert (f.spin_x, f.spin_z) == (0, 0)


def test_depolarisation_identity_at_zero():
    f = PauliFrame(spin_x=1)
    out, effect = sample_spin_depolarisation(f, 0.0, "hadamard", CountingRng([0.99]))
    assert (out.spin_x, out.spin_z, effect) == (1, 0, "none")


def test_straddle_rule_single_and_double():
    f = PauliFrame()
    propagate_cnot(f)
    f, lost = resolve_straddle(f, 1, CountingRng([0.9]))   # dephasing coin: no Z
    assert lost == 1 and f.spin_x == 1 and f.spin_z == 0
    assert f.photons[-1][2] == 1

    f = PauliFrame()
    propagate_cnot(f)
    f, lost = resolve_straddle(f, 1, CountingRng([0.1]))   # coin lands on Z
    assert lost == 1 and f.spin_x == 1 and f.spin_z == 1

    f = PauliFrame()
    propagate_cnot(f)
    f, lost = resolve_straddle(f, 2, CountingRng([0.1]))   # cancelled pair
    assert lost == 0 and f.spin_x == 0 and f.spin_z == 1


def test_distinguishability_deterministic_flip():
    f = PauliFrame()
    propagate_cnot(f)
    sample_photon_distinguishability(f, 1.0, 0.0, 0, CountingRng([0.5, 0.5]))
    assert f.photons[0][:2] == (1, 0)


def test_blinking_never_lost_when_pd_zero():
    state = BlinkState(alive=True)
    rng = CountingRng([0.3] * 50)
    for _ in range(50):
        state, lost = sample_blinking(state, 0.5, 0.0, rng)
        assert lost == 0


def test_blinking_stationary_distribution():
    # empirical stationary dead fraction within 3 sigma over 1e5 steps
    p = NoiseParams(p_blink=0.061, blink_rate=0.01)
    rng = np.random.default_rng(42)
    state = blink_initial(p.blink_pa, p.blink_pd, rng)
    n = 100_000
    dead = 0
    for _ in range(n):
        state, lost = sample_blinking(state, p.blink_pa, p.blink_pd, rng)
        dead += lost
    frac = dead / n
    # correlated chain: effective sample count is n * blink_rate-ish
    sigma = np.sqrt(0.061 * 0.939 / (n * p.blink_rate))
    assert abs(frac - 0.061) < 3 * max(sigma, 1e-3) + 0.01


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 1), st.integers(0, 1)),
                min_size=0, max_size=8))
def test_frame_propagation_is_gf2_linear(injections):
    """Injecting error sets A then B equals the XOR of A and B separately."""

    def run(faults):
        f = PauliFrame()
        for step in range(6):
            propagate_cnot(f)
            for at, fx, fz in faults:
                if at == step:
                    f.spin_x ^= fx
                    f.spin_z ^= fz
            if step == 2:
                propagate_hadamard(f)
        return np.array([[x, z] for x, z, _ in f.photons] + [[f.spin_x, f.spin_z]])

    half = len(injections) // 2
    a, b = injections[:half], injections[half:]
    combined = run(a + b)
    xor = run(a) ^ run(b) ^ run([])
    assert np.array_equal(combined, xor)


def test_zero_noise_full_cycle_is_trivial():
    eng = TrialEngine(3)
    vec = NoiseParams().as_vector()
    flags = np.array([1, 0, 1], dtype=np.int64)
    kernels.run_trial(np.uint64(7), 3, 8, flags, eng.edges_by_colour,
                      eng.endpoints, vec, eng._xxf, eng._xxe, eng._zzf,
                      eng._zze, eng._lnm, eng._sx, eng._sz, eng._blink,
                      eng._first, eng._slot_attempts)
    assert eng._xxf.sum() == 0 and eng._zzf.sum() == 0
    assert eng._xxe.sum() == 0
    # fusion failure is still stochastic: ZZ erasures occur at rate (1/2)^N
    assert eng._zze.mean() < 0.03


def test_kernel_branching_threshold_value_example():
    # p_b below 1/(C+1) for C=574 keeps the branching probability meaningful
    p_b = 1 / 575
    assert p_b < 1.74e-3
    NoiseParams(p_b=p_b)
