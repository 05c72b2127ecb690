"""Quantum-dot noise catalogue: parameters, Pauli-frame propagation, benchmarks.

The channels modelled here and their circuit-level images:

========================  =====================================================
branching (finite C)      X on the emitted photon, plus X on the spin except
                          for the first emission of the cycle
spin depolarisation       uniform X/Y/Z after every pulse; X-type faults
                          between the two time-bin excitations lose the photon
                          (odd count) or cancel to pure dephasing (even count)
laser-induced spin flips  X per rotation pulse at rate kappa_bar, same
                          intra-bin loss machinery as depolarisation
photon distinguishability independent X (emitter-emitter) and Z (single
                          emitter) flips on each photon
blinking                  two-state Markov chain over emission events;
                          dead emitter = lost photon
ground-state dephasing    Z on the spin once per emission round and gate
uniform loss              independent per-photon erasure
==========================  ===================================================

The per-fault effective rules are hard-coded in :mod:`sffcc.kernels` and are
machine-verified against the amplitude-level simulator in
:mod:`sffcc.oracle` (see tests).  Frames are GF(2): propagation is linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import kernels


class NoiseParameterError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseParams:
    """Physical error rates of one experiment configuration.

    All fields are probabilities in [0, 1] except ``kappa_bar`` (a
    dimensionless normalised spin-flip rate applied per rotation pulse) and
    ``blink_rate`` (the Markov-chain switching scale P_A + P_D; the
    stationary dead fraction is ``p_blink``).
    """

    p_loss: float = 0.0
    p_b: float = 0.0
    p_dep: float = 0.0
    p_Z_spin: float = 0.0
    p_X_photon: float = 0.0
    p_Z_photon: float = 0.0
    p_blink: float = 0.0
    blink_rate: float = 0.002
    kappa_bar: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or math.isnan(v):
                raise NoiseParameterError(f"{f.name} must be a number, got {v!r}")
        for name in ("p_loss", "p_b", "p_dep", "p_Z_spin", "p_X_photon",
                     "p_Z_photon", "p_blink", "kappa_bar"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise NoiseParameterError(f"{name}={v} outside [0, 1]")
        if not 0.0 < self.blink_rate <= 1.0:
            raise NoiseParameterError("blink_rate must be in (0, 1]")

    @property
    def blink_pa(self) -> float:
        """Dead-to-alive transition probability per emission event."""
        return (1.0 - self.p_blink) * self.blink_rate if self.p_blink > 0 else 0.0

    @property
    def blink_pd(self) -> float:
        """Alive-to-dead transition probability per emission event."""
        return self.p_blink * self.blink_rate if self.p_blink > 0 else 0.0

    @property
    def blink_stationary_alive(self) -> float:
        pa, pd = self.blink_pa, self.blink_pd
        return pa / (pa + pd) if pa + pd > 0 else 1.0

    def as_vector(self) -> np.ndarray:
        v = np.zeros(kernels.N_PARAMS, dtype=np.float64)
        v[kernels.P_LOSS] = self.p_loss
        v[kernels.P_BRANCH] = self.p_b
        v[kernels.P_DEP] = self.p_dep
        v[kernels.P_ZSPIN] = self.p_Z_spin
        v[kernels.P_XPHOT] = self.p_X_photon
        v[kernels.P_ZPHOT] = self.p_Z_photon
        v[kernels.P_BLINK_A] = self.blink_pa
        v[kernels.P_BLINK_D] = self.blink_pd
        v[kernels.P_KAPPA] = self.kappa_bar
        return v

    def replace(self, **kw) -> "NoiseParams":
        from dataclasses import replace as _replace
        return _replace(self, **kw)


@dataclass
class PauliFrame:
    """Per-emitter record of accumulated X/Z errors on spin and photons."""

    spin_x: int = 0
    spin_z: int = 0
    photons: list = field(default_factory=list)   # (x, z, lost) per emission

    def append_photon(self, x=0, z=0, lost=0):
        self.photons.append((int(x), int(z), int(lost)))

    def __len__(self):
        return len(self.photons)


@dataclass
class BlinkState:
    """Two-state emitter chain; first emission drawn from the stationary law."""

    alive: bool = True


def propagate_cnot(frame: PauliFrame) -> PauliFrame:
    """Photon emission: copy spin X onto the new photon, move spin Z to it."""
    frame.append_photon(x=frame.spin_x, z=frame.spin_z)
    frame.spin_z = 0
    return frame


def propagate_hadamard(frame: PauliFrame) -> PauliFrame:
    """Spin pi/2 rotation exchanges the X and Z frame bits."""
    frame.spin_x, frame.spin_z = frame.spin_z, frame.spin_x
    return frame


class _RngAdapter:
    """Uniform-variate source over either a numpy Generator or a kernel state."""

    def __init__(self, rng):
        if isinstance(rng, (int, np.integer)):
            self._state = np.uint64(rng)
            self._np = None
        else:
            self._np = rng
            self._state = None

    def uniform(self) -> float:
        if self._np is not None:
            return float(self._np.random())
        self._state, u = kernels.rng_uniform(self._state)
        return u


def sample_branching(frame: PauliFrame, p_b: float, photon_index: int, rng,
                     first_emission: bool = False) -> PauliFrame:
    """Branching through the non-cycling transition at one emission round.

    Applies X to the photon, and X to the spin except on the first emission
    of the logical cycle (no prior spin-photon correlation exists there).
    """
    if photon_index < 0:
        raise NoiseParameterError("photon_index must be >= 0")
    adapter = _RngAdapter(rng)
    if p_b > 0 and adapter.uniform() < p_b:
        x, z, lost = frame.photons[photon_index]
        frame.photons[photon_index] = (x ^ 1, z, lost)
        if not first_emission:
            frame.spin_x ^= 1
    return frame


STEP_KINDS = ("excitation_early", "intra_bin_pi", "excitation_late", "hadamard", "buffer_pi")
_STRADDLE_STEPS = ("excitation_early", "intra_bin_pi")


def sample_spin_depolarisation(frame: PauliFrame, p_dep: float, step_kind: str, rng):
    """One depolarising slot; returns (frame, photon_lost).

    X-type faults on the two straddle slots (after the early excitation and
    after the intra-bin pi pulse) are accumulated by the caller through
    :func:`resolve_straddle`; this function reports them via the returned
    effect string instead of mutating the frame, matching the rule table.
    """
    if step_kind not in STEP_KINDS:
        raise NoiseParameterError(f"unknown step kind {step_kind!r}")
    adapter = _RngAdapter(rng)
    if p_dep <= 0 or adapter.uniform() >= p_dep:
        return frame, "none"
    k = int(adapter.uniform() * 3)
    pauli = ("X", "Y", "Z")[min(k, 2)]
    if step_kind in _STRADDLE_STEPS:
        # Z component lands on the in-flight photon; X component is deferred
        if pauli in ("Y", "Z") and frame.photons:
            x, z, lost = frame.photons[-1]
            frame.photons[-1] = (x, z ^ 1, lost)
        return frame, ("straddle_x" if pauli in ("X", "Y") else "none")
    if pauli in ("X", "Y"):
        frame.spin_x ^= 1
    if pauli in ("Y", "Z"):
        frame.spin_z ^= 1
    return frame, "none"


def resolve_straddle(frame: PauliFrame, n_x_faults: int, rng):
    """Apply the validated intra-bin X-fault rule; returns (frame, lost).

    Odd X-fault parity between the two excitations loses the photon and
    leaves spin X plus 50/50 dephasing; an even non-zero count cancels the
    flips and leaves dephasing alone.
    """
    adapter = _RngAdapter(rng)
    lost = 0
    if n_x_faults > 0:
        if n_x_faults % 2 == 1:
            lost = 1
            frame.spin_x ^= 1
            if adapter.uniform() < 0.5:
                frame.spin_z ^= 1
        else:
            if adapter.uniform() < 0.5:
                frame.spin_z ^= 1
        if lost and frame.photons:
            x, z, _ = frame.photons[-1]
            frame.photons[-1] = (x, z, 1)
    return frame, lost


def sample_laser_spin_flip(frame: PauliFrame, kappa_bar: float, step_kind: str, rng):
    """Laser-induced incoherent flip on a rotation pulse; returns (frame, effect).

    On the intra-bin pi pulse the flip feeds the straddle rule (photon loss);
    on any other rotation pulse it is a plain spin X.
    """
    if step_kind not in ("intra_bin_pi", "hadamard", "buffer_pi", "closing_pi"):
        raise NoiseParameterError(f"laser flips act on rotation pulses, not {step_kind!r}")
    adapter = _RngAdapter(rng)
    if kappa_bar > 0 and adapter.uniform() < kappa_bar:
        if step_kind == "intra_bin_pi":
            return frame, "straddle_x"
        frame.spin_x ^= 1
    return frame, "none"


def sample_photon_distinguishability(frame: PauliFrame, p_x: float, p_z: float,
                                     photon_index: int, rng) -> PauliFrame:
    """Independent Bernoulli X and Z flips on one photon's frame bits."""
    adapter = _RngAdapter(rng)
    x, z, lost = frame.photons[photon_index]
    if p_x > 0 and adapter.uniform() < p_x:
        x ^= 1
    if p_z > 0 and adapter.uniform() < p_z:
        z ^= 1
    frame.photons[photon_index] = (x, z, lost)
    return frame


def sample_blinking(state: BlinkState, p_a: float, p_d: float, rng):
    """One Markov step per emission event; returns (state, lost_bit)."""
    adapter = _RngAdapter(rng)
    u = adapter.uniform()
    if state.alive:
        if u < p_d:
            state.alive = False
    else:
        if u < p_a:
            state.alive = True
    return state, (0 if state.alive else 1)


def blink_initial(p_a: float, p_d: float, rng) -> BlinkState:
    """First emission sampled from the stationary distribution."""
    if p_a + p_d <= 0:
        return BlinkState(alive=True)
    adapter = _RngAdapter(rng)
    return BlinkState(alive=adapter.uniform() < p_a / (p_a + p_d))


def sample_ground_state_dephasing(frame: PauliFrame, p_z_spin: float, rng) -> PauliFrame:
    """Bernoulli spin Z per gate step (Overhauser-limited dephasing)."""
    adapter = _RngAdapter(rng)
    if p_z_spin > 0 and adapter.uniform() < p_z_spin:
        frame.spin_z ^= 1
    return frame
