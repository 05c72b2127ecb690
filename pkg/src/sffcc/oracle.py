"""Amplitude-level simulator of the time-bin resource-state protocol.

Ground-truth oracle for the effective error rules used by the Pauli-frame
sampler: it evolves the full spin-photon state of small generation sequences
(N photons per encoded qubit, M encoded qubits, N*M <= 6) with a single
injected fault and checks the resulting density matrix against the rule
table's prediction.

State space: spin in {up, down} tensored with one four-valued mode per
emission round - early, late, vacuum (no photon) or double (both bins).
Vacuum and double are explicit flags rather than a bosonic Fock space; they
are exactly what is needed to classify loss against qubit-space outcomes.

One modelling note: two X-type faults straddling a single intra-bin pi pulse
cancel exactly in pure gate algebra, but the spin spends the interval
between the flips in the wrong eigenstate, so the echo leaves an
uncompensated precession phase.  The oracle represents that phase as an
explicit 50/50 Z branch inserted between the two flips (``phase_branch``),
which is what turns the cancelled pair into pure dephasing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

E, LATE, VAC, DOUBLE = 0, 1, 2, 3
_MODE_NAMES = {E: "early", LATE: "late", VAC: "vacuum", DOUBLE: "double"}
ATOL = 1e-9

# fault slots within one emission round, in temporal order
SLOT_POST_EARLY = "post_early_excitation"
SLOT_POST_INTRA = "post_intra_pi"
SLOT_POST_LATE = "post_late_excitation"
SLOT_POST_CLOSE = "post_closing_pi"
SLOT_POST_H = "post_hadamard"
ROUND_SLOTS = (SLOT_POST_EARLY, SLOT_POST_INTRA, SLOT_POST_LATE, SLOT_POST_CLOSE)


class OracleMismatchError(AssertionError):
    """No candidate effective rule reproduces the simulated faulty state."""


def _mixtures_equal(mix_a, mix_b, atol: float = 1e-8) -> bool:
    """Exact low-rank equality of two density-matrix mixtures.

    Each mixture is [(weight, kraus_columns)]; equality is checked on the
    joint column span, avoiding dense density matrices.
    """
    cols = [v for _w, v in mix_a] + [v for _w, v in mix_b]
    joint = np.concatenate(cols, axis=1)
    q, _r = np.linalg.qr(joint)
    keep = np.abs(np.diag(_r)) > 1e-12
    q = q[:, : int(np.sum(keep))] if keep.any() else q[:, :1]

    def gram(mix):
        g = np.zeros((q.shape[1], q.shape[1]), dtype=complex)
        for w, v in mix:
            proj = q.conj().T @ v
            g += w * (proj @ proj.conj().T)
        return g

    return bool(np.allclose(gram(mix_a), gram(mix_b), atol=atol))


@dataclass
class SpinPhotonState:
    """Dense amplitudes with axes (spin, mode_1, ..., mode_R)."""

    amps: np.ndarray

    @property
    def rounds(self) -> int:
        return self.amps.ndim - 1

    def copy(self) -> "SpinPhotonState":
        return SpinPhotonState(self.amps.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    # -- protocol operations -------------------------------------------------

    def new_round(self) -> None:
        shape = self.amps.shape + (4,)
        out = np.zeros(shape, dtype=complex)
        out[..., VAC] = self.amps
        self.amps = out

    def hadamard(self) -> None:
        up, down = self.amps[0].copy(), self.amps[1].copy()
        self.amps[0] = (up + down) / np.sqrt(2)
        self.amps[1] = (up - down) / np.sqrt(2)

    def pi_rotation(self) -> None:
        up, down = self.amps[0].copy(), self.amps[1].copy()
        self.amps[0] = -down
        self.amps[1] = up

    def excite(self, time_bin: int, branching: bool = False) -> None:
        """Optical excitation of the down state's cycling transition.

        With ``branching`` the excited state decays through the non-cycling
        transition instead: the photon is filtered away and the spin ends up.
        """
        down = self.amps[1]
        moved = np.moveaxis(down, -1, 0)
        if branching:
            emitted = moved[VAC].copy()
            moved[VAC] = 0.0
            up_moved = np.moveaxis(self.amps[0], -1, 0)
            up_moved[VAC] -= emitted          # |down,vac> -> -|up,vac>
            return
        if time_bin == E:
            emitted = moved[VAC].copy()
            moved[VAC] = 0.0
            moved[E] += emitted
        else:
            emitted = moved[VAC].copy()
            moved[VAC] = 0.0
            moved[LATE] += emitted
            re_emitted = moved[E].copy()      # early photon already present
            moved[E] = 0.0
            moved[DOUBLE] += re_emitted

    def spin_x(self) -> None:
        self.amps = self.amps[::-1].copy()

    def spin_z(self) -> None:
        self.amps[1] *= -1.0

    def photon_x(self, r: int) -> None:
        ax = np.moveaxis(self.amps, 1 + r, 0)
        e, l = ax[E].copy(), ax[LATE].copy()
        ax[E], ax[LATE] = l, e

    def photon_z(self, r: int) -> None:
        ax = np.moveaxis(self.amps, 1 + r, 0)
        ax[LATE] *= -1.0

    # -- analysis ------------------------------------------------------------

    def density_matrix(self, traced_rounds=()) -> np.ndarray:
        """|psi><psi| with the given photon rounds traced out."""
        a = self.kraus_vectors(traced_rounds)
        return a @ a.conj().T

    def kraus_vectors(self, traced_rounds=()) -> np.ndarray:
        """Columns k with rho_traced = sum_k |k><k|; low-rank DM representation."""
        keep = [0] + [1 + r for r in range(self.rounds) if r not in set(traced_rounds)]
        trace = [1 + r for r in sorted(traced_rounds)]
        a = np.transpose(self.amps, keep + trace)
        dim_keep = int(np.prod([self.amps.shape[i] for i in keep]))
        return a.reshape(dim_keep, -1)

    def round_mode_weights(self, r: int) -> np.ndarray:
        """Probability weight of each mode value of round ``r``."""
        ax = np.moveaxis(np.abs(self.amps) ** 2, 1 + r, 0)
        return ax.reshape(4, -1).sum(axis=1)

    def equals_up_to_phase(self, other: "SpinPhotonState", atol: float = ATOL) -> bool:
        a, b = self.amps.ravel(), other.amps.ravel()
        ia = np.argmax(np.abs(a))
        if abs(a[ia]) < atol or abs(b[ia]) < atol:
            return bool(np.allclose(a, b, atol=atol))
        phase = b[ia] / a[ia]
        return abs(abs(phase) - 1) < 1e-7 and bool(np.allclose(a * phase, b, atol=atol))


@dataclass(frozen=True)
class Fault:
    kind: str          # "X" | "Z" | "branching" | "phase_branch"
    block: int         # 1-based encoded-qubit index
    round_in_block: int  # 1-based emission round within the block (0 for H slot)
    slot: str


def _check_size(n_photons: int, m_blocks: int) -> None:
    if n_photons * m_blocks > 6:
        raise ValueError("oracle is a desk-scale tool: N*M must be <= 6")
    if n_photons < 1 or m_blocks < 1:
        raise ValueError("N and M must be >= 1")


def evolve(n_photons: int, m_blocks: int, faults=()) -> SpinPhotonState:
    """Run the generation protocol with optional injected faults.

    Each block starts with a spin pi/2 rotation, followed by ``n_photons``
    rounds of early excitation, intra-bin pi pulse, late excitation and a
    closing pi pulse.  Faults fire immediately after their named slot.
    """
    _check_size(n_photons, m_blocks)
    faults = list(faults)
    state = SpinPhotonState(np.array([1.0 + 0j, 0.0 + 0j]))

    def fire(block, rnd, slot):
        for f in faults:
            if f.kind == "branching":
                continue   # handled inside the excitation itself
            if (f.block, f.round_in_block, f.slot) == (block, rnd, slot):
                if f.kind == "X":
                    state.spin_x()
                elif f.kind in ("Z", "phase_branch"):
                    state.spin_z()
                else:
                    raise ValueError(f"unknown fault kind {f.kind}")

    def branch_here(block, rnd):
        return any(f.kind == "branching" and (f.block, f.round_in_block) == (block, rnd)
                   for f in faults)

    def project_here(block, rnd):
        return any(f.kind == "project_down" and (f.block, f.round_in_block) == (block, rnd)
                   for f in faults)

    for m in range(1, m_blocks + 1):
        state.hadamard()
        fire(m, 0, SLOT_POST_H)
        for r in range(1, n_photons + 1):
            state.new_round()
            if project_here(m, r):
                state.amps[0] = 0.0   # condition on the emitting (down) component
            state.excite(E, branching=branch_here(m, r))
            fire(m, r, SLOT_POST_EARLY)
            state.pi_rotation()
            fire(m, r, SLOT_POST_INTRA)
            state.excite(LATE)
            fire(m, r, SLOT_POST_LATE)
            state.pi_rotation()
            fire(m, r, SLOT_POST_CLOSE)
    return state


def evolve_ideal(n_photons: int, m_blocks: int) -> SpinPhotonState:
    return evolve(n_photons, m_blocks)


# -- effective-rule prediction -------------------------------------------------


def predicted_branches(n_photons: int, m_blocks: int, fault: Fault):
    """Frame-rule prediction for a single fault: [(weight, pattern)].

    A pattern is (spin_x, spin_z, photon_bits, lost_rounds) with photon_bits
    a dict round_index -> (x, z).  Produced by propagating the fault through
    the same CNOT/Hadamard rules the samplers use.
    """
    from .noise import PauliFrame, propagate_cnot, propagate_hadamard

    def run(extra_spin_z_coin: int, force_branch_spin_x: bool = False):
        frame = PauliFrame()
        lost = set()
        rnd_global = 0
        for m in range(1, m_blocks + 1):
            propagate_hadamard(frame)
            if (fault.block, fault.round_in_block, fault.slot) == (m, 0, SLOT_POST_H):
                if fault.kind == "X":
                    frame.spin_x ^= 1
                elif fault.kind == "Z":
                    frame.spin_z ^= 1
            for r in range(1, n_photons + 1):
                rnd_global += 1
                propagate_cnot(frame)
                here = (fault.block, fault.round_in_block) == (m, r)
                if here and fault.kind == "branching":
                    x, z, lostbit = frame.photons[-1]
                    frame.photons[-1] = (x ^ 1, z, lostbit)
                    if rnd_global > 1 or force_branch_spin_x:
                        frame.spin_x ^= 1
                if here and fault.slot in (SLOT_POST_EARLY, SLOT_POST_INTRA):
                    if fault.kind == "X":
                        # odd straddle parity: photon lost, spin X, dephasing
                        lost.add(rnd_global - 1)
                        frame.spin_x ^= 1
                        frame.spin_z ^= extra_spin_z_coin
                    elif fault.kind == "Z":
                        x, z, lostbit = frame.photons[-1]
                        frame.photons[-1] = (x, z ^ 1, lostbit)
                if here and fault.slot in (SLOT_POST_LATE, SLOT_POST_CLOSE):
                    if fault.kind == "X":
                        frame.spin_x ^= 1
                    elif fault.kind == "Z":
                        frame.spin_z ^= 1
        photon_bits = {i: (x, z) for i, (x, z, _) in enumerate(frame.photons)}
        return (frame.spin_x, frame.spin_z, photon_bits, frozenset(lost))

    if fault.kind == "X" and fault.slot in (SLOT_POST_EARLY, SLOT_POST_INTRA):
        return [(0.5, run(0)), (0.5, run(1))]
    if fault.kind == "branching":
        return [(1.0, run(0, force_branch_spin_x=True)), (1.0, run(0))]
    return [(1.0, run(0))]


def apply_pattern(ideal: SpinPhotonState, pattern) -> SpinPhotonState:
    spin_x, spin_z, photon_bits, _lost = pattern
    out = ideal.copy()
    for r, (x, z) in photon_bits.items():
        if x:
            out.photon_x(r)
        if z:
            out.photon_z(r)
    if spin_x:
        out.spin_x()
    if spin_z:
        out.spin_z()
    return out


def verify_branching(n_photons: int, m_blocks: int, block: int, rnd: int) -> dict:
    """Branching is an incoherent jump: compare conditioned trajectories.

    Conditioned on the branch click, the trajectory must equal the
    conditioned ideal trajectory with an X on the spin and an X on the
    round's photon; on the very first emission of the cycle the spin X acts
    on a fresh |+> and is invisible, leaving the photon error alone.
    """
    fault = Fault("branching", block, rnd, SLOT_POST_EARLY)
    full_pattern, frame_pattern = [p for _w, p in predicted_branches(n_photons, m_blocks, fault)]

    # conditioned trajectory == fully propagated (spin X and photon X) pattern
    proj = Fault("project_down", block, rnd, "pre_early")
    jump = evolve(n_photons, m_blocks, [proj, fault])
    ref = evolve(n_photons, m_blocks, [proj])
    expected = apply_pattern(ref, full_pattern)
    if not jump.equals_up_to_phase(expected):
        raise OracleMismatchError(
            f"branching block {block} round {rnd}: conditioned trajectory does not "
            f"match the propagated spin-and-photon X pattern")

    ideal = evolve_ideal(n_photons, m_blocks)
    first = (block == 1 and rnd == 1)
    if first:
        # on the cycle's first emission the propagated pattern is the image of
        # the first chain stabiliser: it acts trivially on the ideal state
        if not apply_pattern(ideal, full_pattern).equals_up_to_phase(ideal):
            raise OracleMismatchError(
                "cycle-first branching pattern is not a resource-stabiliser image")
    else:
        # elsewhere the frame rule and the propagated pattern are identical
        a = apply_pattern(ideal, full_pattern)
        b = apply_pattern(ideal, frame_pattern)
        if not a.equals_up_to_phase(b):
            raise OracleMismatchError(
                f"branching block {block} round {rnd}: frame rule deviates from "
                f"the propagated pattern")
    return {"fault": fault, "lost_rounds": [], "branches": 1, "match": True,
            "first_emission_stabiliser_image": first}


def verify_fault_rule(n_photons: int, m_blocks: int, fault: Fault,
                      atol: float = ATOL) -> dict:
    """Compare the simulated faulty state against the frame-rule prediction.

    Returns a report dict; raises :class:`OracleMismatchError` on mismatch.
    Loss classification demands the affected round's amplitude weight to sit
    entirely in the vacuum/double modes.
    """
    if fault.kind == "branching":
        return verify_branching(n_photons, m_blocks, fault.block, fault.round_in_block)
    branches = predicted_branches(n_photons, m_blocks, fault)
    lost_rounds = branches[0][1][3]
    ideal = evolve_ideal(n_photons, m_blocks)

    if fault.kind == "X" and fault.slot in (SLOT_POST_EARLY, SLOT_POST_INTRA):
        faulty_states = [(0.5, evolve(n_photons, m_blocks, [fault])),
                         (0.5, evolve(n_photons, m_blocks,
                                      [fault, Fault("phase_branch", fault.block,
                                                    fault.round_in_block, SLOT_POST_INTRA)]))]
    else:
        faulty_states = [(1.0, evolve(n_photons, m_blocks, [fault]))]

    for _w, st in faulty_states:
        for r in lost_rounds:
            weights = st.round_mode_weights(r)
            if weights[E] + weights[LATE] > atol:
                raise OracleMismatchError(
                    f"{fault}: round {r} predicted lost but has qubit-space weight")

    fault_vecs = [(w, st.kraus_vectors(traced_rounds=lost_rounds)) for w, st in faulty_states]
    pred_vecs = [(w, apply_pattern(ideal, pat).kraus_vectors(traced_rounds=pat[3]))
                 for w, pat in branches]
    if not _mixtures_equal(fault_vecs, pred_vecs):
        raise OracleMismatchError(f"{fault}: reduced density matrices differ")
    return {
        "fault": fault,
        "lost_rounds": sorted(lost_rounds),
        "branches": len(branches),
        "match": True,
    }


def evolve_with_branching(n_photons: int, m_blocks: int, block: int, rnd: int) -> dict:
    return verify_fault_rule(n_photons, m_blocks, Fault("branching", block, rnd, SLOT_POST_EARLY))


def evolve_with_spin_flip(n_photons: int, m_blocks: int, block: int, rnd: int,
                          slot: str = SLOT_POST_INTRA) -> dict:
    return verify_fault_rule(n_photons, m_blocks, Fault("X", block, rnd, slot))


def all_single_fault_locations(n_photons: int, m_blocks: int):
    for m in range(1, m_blocks + 1):
        for kind in ("X", "Z"):
            yield Fault(kind, m, 0, SLOT_POST_H)
        for r in range(1, n_photons + 1):
            yield Fault("branching", m, r, SLOT_POST_EARLY)
            for slot in ROUND_SLOTS:
                for kind in ("X", "Z"):
                    yield Fault(kind, m, r, slot)


def verify_double_straddle(n_photons: int, m_blocks: int, block: int, rnd: int) -> bool:
    """Two X faults straddling one intra-bin pi pulse: no loss, pure dephasing."""
    f1 = Fault("X", block, rnd, SLOT_POST_EARLY)
    f2 = Fault("X", block, rnd, SLOT_POST_INTRA)
    ideal = evolve_ideal(n_photons, m_blocks)
    plain = evolve(n_photons, m_blocks, [f1, f2])
    phased = evolve(n_photons, m_blocks,
                    [f1, Fault("phase_branch", block, rnd, SLOT_POST_EARLY), f2])
    # no loss: every round keeps full qubit-space weight
    for st in (plain, phased):
        for r in range(st.rounds):
            w = st.round_mode_weights(r)
            if w[VAC] + w[DOUBLE] > ATOL:
                return False
    (_w, z_pattern), = predicted_branches(
        n_photons, m_blocks, Fault("Z", block, rnd, SLOT_POST_INTRA))
    dephased = apply_pattern(ideal, z_pattern)
    return _mixtures_equal(
        [(0.5, plain.kraus_vectors()), (0.5, phased.kraus_vectors())],
        [(0.5, ideal.kraus_vectors()), (0.5, dephased.kraus_vectors())])


def verify_rules(max_n: int = 3, max_m: int = 2) -> list:
    """Exhaustive single-fault verification; returns one report per location."""
    reports = []
    for m_blocks in range(1, max_m + 1):
        for n_photons in range(1, max_n + 1):
            if n_photons * m_blocks > 6:
                continue
            for fault in all_single_fault_locations(n_photons, m_blocks):
                reports.append(verify_fault_rule(n_photons, m_blocks, fault))
            for m in range(1, m_blocks + 1):
                for r in range(1, n_photons + 1):
                    if not verify_double_straddle(n_photons, m_blocks, m, r):
                        raise OracleMismatchError(
                            f"double straddle rule failed at N={n_photons} M={m_blocks} "
                            f"block {m} round {r}")
    return reports
