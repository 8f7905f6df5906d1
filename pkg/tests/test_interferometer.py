"""Double-pass Mach-Zehnder: fringe structure, path attribution, controls.

The fringe oracle is the explicit four-path sum with hand-countable coupler
algebra: through the cross port each pass contributes cs*cc per arm, the long
arm adds exp(i*alpha), and the memory maps the train t -> P - t.  The paths
land as ls | (ss + ll e^{2 i alpha}) | sl, so

    I_central(alpha) ~ |cs*cc|^4 * |1 + e^{2 i alpha}|^2,

and the side pulses carry |cs*cc|^4 each, alpha-independent.
"""

import numpy as np
import pytest

from echomem import make_gaussian
from echomem.interferometer import (
    MzConfig,
    double_pass,
    fringe_scan,
    make_delay_memory,
    make_ideal_memory,
    make_solver_memory,
    mz_pass,
)
from echomem.solver import ProtocolSchedule

from conftest import make_ref_medium


@pytest.fixture(scope="module")
def pulse():
    return make_gaussian(1.0, t_center=0.0, t_start=-8.0, dt=0.02, n=801)


def path_sum_central(alpha, ratio=0.5):
    cs2 = ratio
    cc2 = 1.0 - ratio
    return (cs2 * cc2) ** 2 * abs(1.0 + np.exp(2j * alpha)) ** 2


def path_sum_side(ratio=0.5):
    return (ratio * (1.0 - ratio)) ** 2


class TestMzPass:
    def test_balanced_recombination(self, pulse):
        res = mz_pass(pulse, MzConfig(delta_L=0.0, alpha=0.0))
        assert res.out.energy() == pytest.approx(pulse.energy(), abs=1e-10)
        assert res.unused.energy() < 1e-20

    def test_two_bins_from_short_pulse(self, pulse):
        res = mz_pass(pulse, MzConfig(delta_L=10.0))
        w = np.abs(res.out.samples) ** 2
        t = res.out.times
        early = np.sum(w[t < 5.0]) * res.out.dt
        late = np.sum(w[t >= 5.0]) * res.out.dt
        assert early == pytest.approx(0.25, abs=1e-9)
        assert late == pytest.approx(0.25, abs=1e-9)

    def test_energy_conserved_across_ports(self, pulse):
        res = mz_pass(pulse, MzConfig(delta_L=10.0, alpha=1.3))
        assert res.energy() == pytest.approx(pulse.energy(), abs=1e-10)

    def test_blocking(self, pulse):
        res = mz_pass(pulse, MzConfig(delta_L=10.0), block="long")
        assert res.out.energy() == pytest.approx(0.25, abs=1e-9)


class TestDoublePass:
    def test_three_resolved_pulses_alpha_zero(self, pulse):
        res = double_pass(pulse, MzConfig(delta_L=10.0, alpha=0.0), make_ideal_memory())
        ie, ic, il = res.intensities
        assert ie == pytest.approx(path_sum_side(), rel=1e-6)
        assert il == pytest.approx(path_sum_side(), rel=1e-6)
        assert ic == pytest.approx(path_sum_central(0.0), rel=1e-6)
        # everything accounted for
        total = res.output_energy + res.unused_first_pass.energy() + res.unused_second_pass.energy()
        assert total == pytest.approx(pulse.energy(), abs=1e-10)

    def test_null_at_alpha_pi_over_2(self, pulse):
        res = double_pass(pulse, MzConfig(delta_L=10.0, alpha=np.pi / 2), make_ideal_memory())
        res0 = double_pass(pulse, MzConfig(delta_L=10.0, alpha=0.0), make_ideal_memory())
        assert res.intensities[1] / res0.intensities[1] < 1e-3
        assert res.intensities[0] == pytest.approx(res0.intensities[0], rel=1e-9)

    def test_fringe_matches_path_sum(self, pulse):
        alphas = np.linspace(0.0, np.pi, 13)
        rows = fringe_scan(pulse, MzConfig(delta_L=10.0), make_ideal_memory(), alphas)
        pred = np.array([path_sum_central(a) for a in alphas])
        assert np.max(np.abs(rows[:, 2] - pred)) < 1e-3 * pred.max()
        # period pi in alpha: endpoints equal
        assert rows[0, 2] == pytest.approx(rows[-1, 2], rel=1e-9, abs=1e-12)

    def test_visibility_unity(self, pulse):
        alphas = np.linspace(0.0, np.pi, 13)
        rows = fringe_scan(pulse, MzConfig(delta_L=10.0), make_ideal_memory(), alphas)
        ic = rows[:, 2]
        vis = (ic.max() - ic.min()) / (ic.max() + ic.min())
        assert vis > 0.999999

    def test_side_pulses_alpha_independent(self, pulse):
        alphas = np.linspace(0.0, np.pi, 9)
        rows = fringe_scan(pulse, MzConfig(delta_L=10.0), make_ideal_memory(), alphas)
        assert np.ptp(rows[:, 1]) < 1e-9
        assert np.ptp(rows[:, 3]) < 1e-9

    def test_block_attribution_ss_ll(self, pulse):
        # blocking the long arm on either pass leaves only ss in the center;
        # blocking short leaves ll: the reversing-memory pairing of Fig-3 type
        mz = MzConfig(delta_L=10.0, alpha=0.4)
        mem = make_ideal_memory()
        full = double_pass(pulse, mz, mem)
        no_ll = double_pass(pulse, mz, mem, block_first="long")
        no_ss = double_pass(pulse, mz, mem, block_first="short")
        cs2cc2 = 0.25
        assert no_ll.intensities[1] == pytest.approx(cs2cc2**2, rel=1e-6)
        assert no_ss.intensities[1] == pytest.approx(cs2cc2**2, rel=1e-6)
        # blocked runs lose the interference: sum of parts != coherent total
        coherent = path_sum_central(0.4)
        assert full.intensities[1] == pytest.approx(coherent, rel=1e-6)
        # ss blocked on pass 1 and pass 2 agree (same path removed)
        no_ll2 = double_pass(pulse, mz, mem, block_second="long")
        assert no_ll2.intensities[1] == pytest.approx(no_ll.intensities[1], rel=1e-6)

    def test_delay_memory_alpha_independent_central(self, pulse):
        alphas = np.linspace(0.0, np.pi, 9)
        rows = fringe_scan(pulse, MzConfig(delta_L=10.0), make_delay_memory(40.0), alphas)
        assert np.ptp(rows[:, 2]) < 1e-9 * rows[:, 2].max()

    def test_pulse_too_wide_refused(self):
        wide = make_gaussian(0.2, t_center=0.0, t_start=-30.0, dt=0.05, n=1201)
        with pytest.raises(ValueError, match="too wide"):
            double_pass(wide, MzConfig(delta_L=10.0), make_ideal_memory())

    def test_asymmetric_coupler_keeps_period(self, pulse):
        mz = MzConfig(delta_L=10.0, coupler_ratio=0.3)
        alphas = np.linspace(0.0, np.pi, 9)
        rows = fringe_scan(pulse, mz, make_ideal_memory(), alphas)
        pred = np.array([path_sum_central(a, 0.3) for a in alphas])
        assert np.max(np.abs(rows[:, 2] - pred)) < 1e-3 * pred.max()

    def test_chi12_does_not_move_fringe(self, pulse):
        # the memory's global phase is common to all three pulses
        a = fringe_scan(pulse, MzConfig(delta_L=10.0), make_ideal_memory(0.0),
                        np.linspace(0, np.pi, 5))
        b = fringe_scan(pulse, MzConfig(delta_L=10.0), make_ideal_memory(1.3),
                        np.linspace(0, np.pi, 5))
        assert np.allclose(a[:, 1:], b[:, 1:], atol=1e-12)


class TestSolverBackend:
    def test_solver_memory_fringe(self, pulse):
        med = make_ref_medium(30.0)
        sched = ProtocolSchedule.from_t1_t2(t1=25.0, t2=31.0)
        mem = make_solver_memory(med, sched)
        alphas = np.array([0.0, np.pi / 4, np.pi / 2])
        rows = fringe_scan(pulse, MzConfig(delta_L=10.0), mem, alphas)
        pred = np.array([path_sum_central(a) for a in alphas])
        assert np.max(np.abs(rows[:, 2] - pred)) < 5e-3 * pred.max()
