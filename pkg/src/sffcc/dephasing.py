"""Ground-state dephasing of encoded linear cluster states.

Two models of the same physics:

* the closed-form Gaussian envelope - a static Overhauser field with RMS
  fluctuation ``delta_OH`` dephases the state, giving a fidelity that is a
  double sum over Hamming-weight classes (evaluated here in O(M^2) through
  the binomial weight distribution, never by 4^M enumeration);

* a stochastic circuit sampler - a Z error with probability ``p_Z`` after
  every photon emission and every Hadamard of the generation circuit.  Each
  sampled pattern collapses, per encoded qubit, to the parity of the Z hits
  landing in its block, and the sample fidelity is 1 exactly when every
  block parity is even.

The two agree at low error rates and part ways as ``M * N * p_Z`` grows,
with the stochastic (independent per block) model pessimistic relative to
the common-mode Gaussian field.  Mapping between them equates the single
encoded qubit's off-diagonal: ``delta_OH^2 = -2 ln(1 - 2 N p_Z) / (tau N)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import jit
from .kernels import rng_uniform


class DephasingDomainError(ValueError):
    """Parameter outside the validity domain of the Overhauser mapping."""


@dataclass(frozen=True)
class ClusterParams:
    """Encoded-cluster geometry and dephasing strength."""

    m_qubits: int
    n_photons: int
    tau_round: float = 1.0
    delta_oh: float = 0.0
    p_z: float = 0.0

    def __post_init__(self):
        if self.m_qubits < 1 or self.n_photons < 1:
            raise DephasingDomainError("M and N must be >= 1")
        if self.tau_round <= 0:
            raise DephasingDomainError("tau_round must be positive")
        if self.delta_oh < 0:
            raise DephasingDomainError("delta_OH must be non-negative")
        if not 0 <= self.p_z < 0.5:
            raise DephasingDomainError("p_Z must be in [0, 0.5)")


def delta_from_pz(p_z: float, n_photons: int, tau_round: float = 1.0) -> float:
    """RMS Overhauser fluctuation equivalent to a per-gate Z rate ``p_z``.

    Valid only while the mapped off-diagonal 1 - 2 N p_z stays positive.
    """
    arg = 1.0 - 2.0 * n_photons * p_z
    if arg <= 0.0:
        raise DephasingDomainError(
            f"2*N*p_Z = {2 * n_photons * p_z:.4f} >= 1: off-diagonal map undefined")
    return math.sqrt(-2.0 * math.log(arg)) / (tau_round * n_photons)


def analytic_fidelity(params: ClusterParams) -> float:
    """Gaussian-envelope fidelity of the M-qubit encoded cluster state.

    F = 2^(-2M) * sum_{x,y} exp(-(N tau Delta)^2 (sigma(x)-sigma(y))^2 / 2),
    evaluated over Hamming-weight classes with binomial multiplicities.
    """
    m = params.m_qubits
    phase = params.n_photons * params.tau_round * params.delta_oh
    weights = np.array([math.comb(m, w) for w in range(m + 1)], dtype=float)
    ks = np.arange(m + 1)
    damp = np.exp(-0.5 * (phase ** 2) * (ks.astype(float) ** 2))
    total = 0.0
    for k in range(m + 1):
        # number of (x, y) pairs with |sigma(x) - sigma(y)| = k
        pair_count = float(np.sum(weights[: m + 1 - k] * weights[k:]))
        total += (1 if k == 0 else 2) * pair_count * damp[k]
    return total / 4.0 ** m


def analytic_fidelity_enumerated(params: ClusterParams) -> float:
    """Naive 4^M evaluation of the same sum; test oracle for small M."""
    m = params.m_qubits
    phase = params.n_photons * params.tau_round * params.delta_oh
    total = 0.0
    for x in range(2 ** m):
        sx = bin(x).count("1")
        for y in range(2 ** m):
            sy = bin(y).count("1")
            total += math.exp(-0.5 * (phase ** 2) * (sx - sy) ** 2)
    return total / 4.0 ** m


@jit
def _sample_block_failures(state, m_qubits, n_photons, p_z, trials):
    """Count samples whose encoded state picks up any net block Z parity.

    Z slots: one after each Hadamard and one after each emission; a slot's
    hit flips the parity of the block receiving the *next* photon, matching
    the spin-Z transfer rule (the final emission's slot is harmless).
    """
    failures = 0
    for _t in range(trials):
        bad = False
        carry = 0          # pending spin Z, lands on the next photon
        for blk in range(m_qubits):
            parity = 0
            state, u = rng_uniform(state)
            if u < p_z:    # slot after the block's Hadamard
                carry ^= 1
            for _p in range(n_photons):
                parity ^= carry
                carry = 0
                state, u = rng_uniform(state)
                if u < p_z:  # slot after this emission
                    carry ^= 1
            if parity == 1:
                bad = True
        if bad:
            failures += 1
    return state, failures


def stochastic_infidelity(params: ClusterParams, trials: int, seed: int = 0):
    """Monte Carlo mean infidelity and its standard error for one M."""
    if trials < 1:
        raise DephasingDomainError("trials must be >= 1")
    _state, failures = _sample_block_failures(
        np.uint64(seed), params.m_qubits, params.n_photons, params.p_z, trials)
    mean = failures / trials
    sem = math.sqrt(max(mean * (1.0 - mean), 1e-300) / trials)
    return mean, sem


def infidelity_curve(m_range, n_photons: int, p_z: float, trials: int,
                     tau_round: float = 1.0, seed: int = 0):
    """Analytic vs stochastic infidelity across a range of M.

    Returns a list of rows (M, analytic_infidelity, stochastic_mean, sem,
    sample_std); the sample band is the +-1 standard deviation of the
    per-sample fidelity (a Bernoulli variable), the quantity shaded in the
    reference comparison.
    """
    delta = delta_from_pz(p_z, n_photons, tau_round)
    rows = []
    for i, m in enumerate(m_range):
        p = ClusterParams(m_qubits=m, n_photons=n_photons, tau_round=tau_round,
                          delta_oh=delta, p_z=p_z)
        ana = 1.0 - analytic_fidelity(p)
        mean, sem = stochastic_infidelity(p, trials, seed=seed + 7919 * i)
        band = math.sqrt(max(mean * (1.0 - mean), 0.0))
        rows.append((m, ana, mean, sem, band))
    return rows


def t2star_requirement(p_z_threshold: float, n_photons: int, tau_round: float = 1.0):
    """T2* implied by a per-gate Z threshold, next to the quoted benchmark.

    Returns (formula_value, quoted_value) in units of tau_round: the direct
    evaluation T2* = sqrt(2)/delta_OH, and the 56 tau_round benchmark value
    reported for the same operating point.  The two differ by roughly a
    factor of two; both are reported, neither is asserted as ground truth.
    """
    delta = delta_from_pz(p_z_threshold, n_photons, tau_round)
    return math.sqrt(2.0) / delta, 56.0 * tau_round
