"""Shared fixtures: reference configurations reused across test modules.

Session-scoped because the d=30 protocol runs take seconds each; tests must
treat the returned objects as read-only (they are immutable anyway).
"""

import numpy as np
import pytest

from echomem import build_medium, make_gaussian, run_protocol
from echomem.solver import ProtocolSchedule

# reference configuration: delta_omega=0.2 packet entering around t=0,
# grid [-30, 30], pulses at t1=35 / t2=45 (snapped onto the dt=0.05 lattice)
REF_DT = 0.05
REF_SPAN = 6.0
REF_NDET = 281


@pytest.fixture(scope="session")
def ref_input():
    return make_gaussian(0.2, t_center=0.0, t_start=-30.0, dt=REF_DT, n=1201)


@pytest.fixture(scope="session")
def ref_schedule():
    return ProtocolSchedule.from_t1_t2(t1=35.0, t2=45.0)


def make_ref_medium(d, **kw):
    kw.setdefault("nz", max(200, int(10 * d)))
    kw.setdefault("n_detunings", REF_NDET)
    kw.setdefault("span", REF_SPAN)
    return build_medium("gaussian", d=d, **kw)


@pytest.fixture(scope="session")
def d30_medium():
    return make_ref_medium(30.0)


@pytest.fixture(scope="session")
def d30_report(ref_input, ref_schedule, d30_medium):
    return run_protocol(ref_input, d30_medium, ref_schedule, substeps=2)


@pytest.fixture(scope="session")
def depth_sweep_reports(ref_input, ref_schedule, d30_report):
    """ProtocolReports for d in {2, 5, 10, 20, 30} at reference settings."""
    out = {}
    for d in (2.0, 5.0, 10.0, 20.0):
        rep = run_protocol(ref_input, make_ref_medium(d), ref_schedule, substeps=2)
        out[d] = rep
    out[30.0] = d30_report
    return out


@pytest.fixture(scope="session")
def narrowband_law_reports():
    """d in {1, 2, 5, 10} with a delta_omega=0.15 packet (efficiency-law check)."""
    inp = make_gaussian(0.15, t_center=0.0, t_start=-40.0, dt=REF_DT, n=1601)
    sched = ProtocolSchedule.from_t1_t2(t1=45.0, t2=55.0)
    return {
        d: run_protocol(inp, make_ref_medium(d), sched, substeps=2)
        for d in (1.0, 2.0, 5.0, 10.0)
    }, inp, sched
