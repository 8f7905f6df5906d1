"""Photon-echo quantum memory with controlled reversible inhomogeneous broadening.

Library layout:

* :mod:`echomem.envelopes` - complex envelopes on uniform time grids
* :mod:`echomem.ideal_map` - the exact analytic memory channel
* :mod:`echomem.medium` - discretized broadened ensemble and coherence field
* :mod:`echomem.solver` - dynamical absorption / storage / backward retrieval
* :mod:`echomem.oracle` - brute-force Hamiltonian ground truth
* :mod:`echomem.timebin` - time-bin qubit storage
* :mod:`echomem.interferometer` - double-pass Mach-Zehnder experiment
* :mod:`echomem.cli` - scenario runner (``echomem run`` / ``echomem compare``)
"""

from .envelopes import (
    SampledEnvelope,
    fidelity,
    make_double_packet,
    make_gaussian,
    overlap,
    time_reverse,
)
from .ideal_map import NPhotonAmplitude, ideal_retrieve_envelope, ideal_retrieve_nphoton
from .medium import AtomicMedium, CoherenceField, build_medium, invert_detunings
from .solver import (
    ProtocolReport,
    ProtocolSchedule,
    StageResult,
    absorb,
    control_pi_pulse,
    retrieve,
    run_protocol,
    store,
)
from .oracle import DiscreteSystem, build_discrete_system, evolve, verify_reversal_identity
from .timebin import TimeBinQubit, decode, encode, memory_transform
from .interferometer import MzConfig, double_pass, fringe_scan, mz_pass

__version__ = "0.1.0"

__all__ = [
    "SampledEnvelope",
    "fidelity",
    "make_double_packet",
    "make_gaussian",
    "overlap",
    "time_reverse",
    "NPhotonAmplitude",
    "ideal_retrieve_envelope",
    "ideal_retrieve_nphoton",
    "AtomicMedium",
    "CoherenceField",
    "build_medium",
    "invert_detunings",
    "ProtocolReport",
    "ProtocolSchedule",
    "StageResult",
    "absorb",
    "control_pi_pulse",
    "retrieve",
    "run_protocol",
    "store",
    "DiscreteSystem",
    "build_discrete_system",
    "evolve",
    "verify_reversal_identity",
    "TimeBinQubit",
    "decode",
    "encode",
    "memory_transform",
    "MzConfig",
    "double_pass",
    "fringe_scan",
    "mz_pass",
]
