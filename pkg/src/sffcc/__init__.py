"""Monte Carlo simulator for fault-tolerant fusion-based photonic quantum
computing on the synchronous foliated Floquet colour-code (sFFCC) lattice.

Subpackages map one-to-one onto the problem's moving parts: ``lattice``
(geometry and parity checks), ``noise`` (the quantum-dot error catalogue),
``fusion`` (repeat-until-success encoded fusions), ``decoder`` (erasure
absorption and matching), ``montecarlo`` (sweeps and thresholds),
``chronology`` (timing, clock cycles, component counts), ``dephasing``
(Overhauser fidelity model) and ``oracle`` (amplitude-level rule checks).
"""

from .chronology import (ChronologyResult, ResourceCount, TimingParams,
                         check_timing, convert_benchmarks, count_resources,
                         simulate_clock_cycle)
from .decoder import DecodeInput, DecodeVerdict, TrialDecoder, decode
from .dephasing import ClusterParams, analytic_fidelity, delta_from_pz
from .fusion import (EncodedFusionResult, FusionKind, FusionRecord, RusPolicy,
                     run_encoded_fusion)
from .lattice import (LatticeSpec, SyndromeGraph, build_lattice,
                      build_syndrome_graph, logical_parity)
from .montecarlo import (ExperimentPlan, SweepResult, find_threshold,
                         run_sweep, sweep_n)
from .noise import NoiseParams, PauliFrame

__all__ = [
    "ChronologyResult", "ResourceCount", "TimingParams", "check_timing",
    "convert_benchmarks", "count_resources", "simulate_clock_cycle",
    "DecodeInput", "DecodeVerdict", "TrialDecoder", "decode",
    "ClusterParams", "analytic_fidelity", "delta_from_pz",
    "EncodedFusionResult", "FusionKind", "FusionRecord", "RusPolicy",
    "run_encoded_fusion",
    "LatticeSpec", "SyndromeGraph", "build_lattice", "build_syndrome_graph",
    "logical_parity",
    "ExperimentPlan", "SweepResult", "find_threshold", "run_sweep", "sweep_n",
    "NoiseParams", "PauliFrame",
]

__version__ = "0.1.0"
