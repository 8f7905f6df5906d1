"""Medium construction, quadrature normalization, detuning inversion."""

import numpy as np
import pytest

from echomem.medium import AtomicMedium, CoherenceField, build_medium, invert_detunings


class TestBuildMedium:
    def test_weights_normalized(self):
        m = build_medium("gaussian", d=10.0, nz=50, n_detunings=201, span=6.0)
        assert abs(m.weights.sum() - 1.0) < 1e-10
        assert np.all(m.weights > 0)

    def test_grid_symmetric(self):
        m = build_medium("gaussian", d=5.0, nz=50, n_detunings=101, span=5.0)
        assert np.allclose(m.detunings, -m.detunings[::-1])

    def test_zero_depth_zero_coupling(self):
        m = build_medium("gaussian", d=0.0, nz=50, n_detunings=51, span=6.0)
        assert m.kappa_c == 0.0

    def test_lorentzian_needs_wide_span(self):
        with pytest.raises(ValueError, match="span"):
            build_medium("lorentzian", d=5.0, span=10.0)
        m = build_medium("lorentzian", d=5.0, span=20.0, n_detunings=801)
        assert abs(m.weights.sum() - 1.0) < 1e-10

    def test_gaussian_span_minimum(self):
        with pytest.raises(ValueError, match="span"):
            build_medium("gaussian", d=5.0, span=3.0)

    def test_node_count_minimum(self):
        with pytest.raises(ValueError, match="16"):
            build_medium("gaussian", d=5.0, n_detunings=8)

    def test_beta_cal_matches_beer_lambert_form(self):
        # amplitude transmission exp(-beta*pi*G_eff(0)) must be exp(-d/2)
        m = build_medium("gaussian", d=7.0, span=6.0)
        assert m.beta_cal * np.pi * m.g0_density == pytest.approx(3.5, rel=1e-12)

    def test_custom_table(self):
        deltas = np.linspace(-5, 5, 101)
        vals = np.exp(-np.abs(deltas))
        m = build_medium("table", d=3.0, table=(deltas, vals), n_detunings=101)
        assert abs(m.weights.sum() - 1.0) < 1e-10

    def test_custom_table_rejects_negative(self):
        deltas = np.linspace(-5, 5, 101)
        vals = np.cos(deltas)  # goes negative
        with pytest.raises(ValueError, match="non-negative"):
            build_medium("table", d=3.0, table=(deltas, vals))

    def test_custom_table_rejects_nan(self):
        deltas = np.linspace(-5, 5, 33)
        vals = np.ones(33)
        vals[3] = np.nan
        with pytest.raises(ValueError, match="finite"):
            build_medium("table", d=3.0, table=(deltas, vals))


class TestInvertDetunings:
    def test_literal_flip(self):
        m = build_medium("gaussian", d=5.0, n_detunings=51, span=6.0)
        inv = invert_detunings(m)
        assert np.allclose(inv.detunings, -m.detunings)
        assert np.allclose(inv.weights, m.weights)
        assert inv.inverted and not m.inverted

    def test_involution(self):
        m = build_medium("gaussian", d=5.0, n_detunings=51, span=6.0)
        back = invert_detunings(invert_detunings(m))
        assert np.array_equal(back.detunings, m.detunings)
        assert back.inverted == m.inverted

    def test_symmetric_grid_set_equal(self):
        m = build_medium("gaussian", d=5.0, n_detunings=51, span=6.0)
        inv = invert_detunings(m)
        assert np.allclose(np.sort(inv.detunings), np.sort(m.detunings))

    def test_weight_sum_preserved(self):
        m = build_medium("lorentzian", d=2.0, span=25.0, n_detunings=401)
        assert invert_detunings(m).weights.sum() == pytest.approx(1.0, abs=1e-12)


class TestCoherenceField:
    def test_norm_positive_and_shape_checked(self):
        m = build_medium("gaussian", d=5.0, nz=40, n_detunings=51, span=6.0)
        amps = np.ones((40, 51), complex)
        c = CoherenceField(active_transition="sigma13", amps=amps, medium=m)
        assert c.excitation_norm() > 0
        with pytest.raises(ValueError, match="shape"):
            CoherenceField(active_transition="sigma13", amps=np.ones((3, 3), complex), medium=m)

    def test_chi12_property(self):
        m = build_medium("gaussian", d=5.0, nz=40, n_detunings=51, span=6.0, omega32=0.25)
        amps = np.zeros((40, 51), complex)
        c = CoherenceField(
            active_transition="sigma13", amps=amps, medium=m,
            pulse1_time=10.0, pulse1_xi=0.8, pulse2_time=14.0, pulse2_xi=0.1,
        )
        assert c.chi12 == pytest.approx(0.8 - 0.1 - 0.25 * 4.0)

    def test_chi12_none_before_pulses(self):
        m = build_medium("gaussian", d=5.0, nz=40, n_detunings=51, span=6.0)
        c = CoherenceField("sigma13", np.zeros((40, 51), complex), m)
        assert c.chi12 is None
