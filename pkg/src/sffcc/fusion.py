"""Physical fusions and the repeat-until-success encoded fusion machine.

A physical type-II fusion on two surviving photons succeeds with probability
1/2 (both XX and ZZ parities), else fails into the XX basis (single-qubit X
measurements whose product keeps the XX parity alive).  Lost photons erase
the attempt.  After a loss the next attempts can be biased: both photons are
measured in Z individually, which deterministically recovers ZZ once a pair
survives, projects each measured emitter spin into a known eigenstate
(clearing its error frame) and - optionally - lets the encoded fusion be
re-attempted for the XX parity within the remaining budget.

Outcome-sign algebra:  XX outcomes are flipped by photon Z errors, ZZ
outcomes by photon X errors; the encoded XX parity is the product over every
attempt, the encoded ZZ parity comes from a single surviving attempt.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .noise import PauliFrame, _RngAdapter


class FusionKind(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    ERASURE = "erasure"
    BIASED_ZZ = "biased_zz"


@dataclass(frozen=True)
class FusionRecord:
    """Outcome of one physical fusion attempt."""

    kind: FusionKind
    xx: int | None          # +-1 or None
    zz: int | None
    attempt_index: int

    def __post_init__(self):
        if self.kind == FusionKind.SUCCESS and (self.xx is None or self.zz is None):
            raise ValueError("success carries both parities")
        if self.kind == FusionKind.FAILURE and (self.xx is None or self.zz is not None):
            raise ValueError("failure carries the XX parity only")
        if self.kind == FusionKind.ERASURE and (self.xx is not None or self.zz is not None):
            raise ValueError("erasure carries no parity")
        if self.kind == FusionKind.BIASED_ZZ and (self.xx is not None or self.zz is None):
            raise ValueError("biased attempt carries the ZZ parity only")


@dataclass(frozen=True)
class RusPolicy:
    n_attempts: int = 8
    bias_after_loss: bool = True
    reinit_after_zz_only: bool = False
    reinit_restart_budget: str = "shared"   # "shared" | "fresh"

    def __post_init__(self):
        if self.n_attempts < 1:
            raise ValueError("n_attempts must be >= 1")
        if self.reinit_restart_budget not in ("shared", "fresh"):
            raise ValueError("reinit_restart_budget must be 'shared' or 'fresh'")


@dataclass
class EncodedFusionResult:
    xx_bar: int | None
    zz_bar: int | None
    attempts_used: int
    records: list = field(default_factory=list)

    @property
    def erased_xx(self) -> bool:
        return self.xx_bar is None

    @property
    def erased_zz(self) -> bool:
        return self.zz_bar is None


def _photon(frame: PauliFrame, index: int):
    x, z, lost = frame.photons[index]
    return x, z, lost


def attempt_physical_fusion(photon_a, photon_b, rng, attempt_index: int = 1) -> FusionRecord:
    """One fusion attempt on two photon frame entries (x, z, lost)."""
    ax, az, alost = photon_a
    bx, bz, blost = photon_b
    if alost or blost:
        return FusionRecord(FusionKind.ERASURE, None, None, attempt_index)
    adapter = _RngAdapter(rng)
    xx = -1 if (az ^ bz) else 1
    if adapter.uniform() < 0.5:
        zz = -1 if (ax ^ bx) else 1
        return FusionRecord(FusionKind.SUCCESS, xx, zz, attempt_index)
    return FusionRecord(FusionKind.FAILURE, xx, None, attempt_index)


def attempt_biased_measurement(photon_a, photon_b, rng=None, attempt_index: int = 1) -> FusionRecord:
    """Single-qubit Z measurements on both photons; recovers ZZ when both survive."""
    ax, az, alost = photon_a
    bx, bz, blost = photon_b
    if alost or blost:
        return FusionRecord(FusionKind.ERASURE, None, None, attempt_index)
    zz = -1 if (ax ^ bx) else 1
    return FusionRecord(FusionKind.BIASED_ZZ, None, zz, attempt_index)


def apply_reinit_strategy(result: FusionRecord, frame: PauliFrame) -> PauliFrame:
    """Spin projection after a biased measurement of one of its photons.

    Any ZZ-only measurement projects the emitter spin into a known Z
    eigenstate: the accumulated frame bits become irrelevant and are cleared.
    """
    if result.kind == FusionKind.BIASED_ZZ:
        frame.spin_x = 0
        frame.spin_z = 0
    return frame


def run_encoded_fusion(emit_a, emit_b, policy: RusPolicy, rng,
                       frame_a: PauliFrame | None = None,
                       frame_b: PauliFrame | None = None) -> EncodedFusionResult:
    """Run one RUS encoded fusion.

    ``emit_a`` / ``emit_b`` are callables producing the next photon frame
    entry (x, z, lost) for each emitter; they encapsulate resource-state
    generation noise.  ``frame_a`` / ``frame_b``, when given, receive the
    spin re-initialisation on surviving biased measurements.

    Termination: first fusion success (both parities; XX only if no photon
    was lost earlier in the run), a successful biased pair (ZZ only, unless
    the policy re-attempts), all attempts failed (XX product only), or
    budget exhausted under losses (both parities erased).
    """
    records: list[FusionRecord] = []
    xx_bar: int | None = None
    zz_bar: int | None = None
    xx_alive = True
    xx_acc = 1
    biasing = False
    n = 0
    budget = policy.n_attempts
    while n < budget:
        n += 1
        pa, pb = emit_a(), emit_b()
        if not biasing:
            rec = attempt_physical_fusion(pa, pb, rng, n)
            records.append(rec)
            if rec.kind == FusionKind.ERASURE:
                xx_alive = False
                if policy.bias_after_loss:
                    biasing = True
                continue
            xx_acc *= rec.xx
            if rec.kind == FusionKind.SUCCESS:
                if zz_bar is None:
                    zz_bar = rec.zz
                if xx_alive:
                    xx_bar = xx_acc
                break
        else:
            rec = attempt_biased_measurement(pa, pb, rng, n)
            records.append(rec)
            ax, az, alost = pa
            bx, bz, blost = pb
            if not alost and frame_a is not None:
                apply_reinit_strategy(FusionRecord(FusionKind.BIASED_ZZ, None, 1, n), frame_a)
            if not blost and frame_b is not None:
                apply_reinit_strategy(FusionRecord(FusionKind.BIASED_ZZ, None, 1, n), frame_b)
            if rec.kind == FusionKind.BIASED_ZZ:
                if zz_bar is None:
                    zz_bar = rec.zz
                if policy.reinit_after_zz_only and n < budget:
                    if policy.reinit_restart_budget == "fresh":
                        budget = n + policy.n_attempts
                    biasing = False
                    xx_alive = True
                    xx_acc = 1
                else:
                    break
    if xx_bar is None and xx_alive and records and \
            all(r.kind == FusionKind.FAILURE for r in records):
        xx_bar = xx_acc   # every attempt failed without loss: XX product survives
    return EncodedFusionResult(xx_bar=xx_bar, zz_bar=zz_bar, attempts_used=len(records),
                               records=records)
