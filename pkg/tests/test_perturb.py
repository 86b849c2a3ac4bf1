import math
from fractions import Fraction

import numpy as np
import pytest

from hubspoke import (
    FormationKind,
    FormationSpec,
    SystemParams,
    main_satellite_forcing,
    cancellation_hypothesis,
    second_order_sums,
)
from hubspoke.errors import UnbalancedSpecError
from hubspoke.harness import design_frequencies

from conftest import spec_from_phi0

I, II = FormationKind.TYPE_I, FormationKind.TYPE_II


class TestHypothesis:
    @pytest.mark.parametrize("p,q,n,expected", [
        (1, 2, 5, True),
        (3, 4, 5, True),
        (1, 2, 3, False),   # N divides q + p
        (1, 2, 4, False),   # N divides 2q
        (1, 3, 2, False),   # N divides q - p and q + p
        (2, 5, 9, True),
    ])
    def test_examples(self, p, q, n, expected):
        assert cancellation_hypothesis(p, q, n) is expected

    def test_requires_coprime(self):
        with pytest.raises(ValueError):
            cancellation_hypothesis(2, 4, 5)


class TestSecondOrderSums:
    def scale(self, spec):
        return spec.amp_x**2 * 2.0 * math.pi * spec.q

    def test_cancellation_n5_12(self, rng):
        spec = spec_from_phi0("type1", 1, 2, 5, Fraction(1, 4))
        tau = rng.uniform(0.0, 1.0, size=100)
        sums = second_order_sums(spec, tau)
        assert np.max(sums.magnitude) < 1e-12 * self.scale(spec)

    def test_cancellation_n5_34(self):
        spec = spec_from_phi0("type1", 3, 4, 5, Fraction(1, 4))
        tau = np.linspace(0.0, 1.0, 1000)
        sums = second_order_sums(spec, tau)
        assert np.max(sums.magnitude) < 1e-12 * self.scale(spec)

    def test_no_cancellation_n3(self):
        spec = spec_from_phi0("type1", 1, 2, 3, Fraction(1, 4))
        tau = np.linspace(0.0, 1.0, 200)
        sums = second_order_sums(spec, tau)
        assert np.max(sums.magnitude) > 1e-3 * self.scale(spec)

    def test_exhaustive_equivalence_small(self):
        # Vanishing on a dense grid is exactly the divisibility hypothesis.
        tau = np.linspace(0.0, 1.0, 1000)
        for p, q in [(1, 2), (1, 3), (2, 3), (1, 4), (3, 4), (1, 5), (2, 5), (3, 5)]:
            for n in range(2, 10):
                spec = spec_from_phi0("type1", p, q, n, Fraction(1, 4))
                sums = second_order_sums(spec, tau)
                vanish = bool(np.max(sums.magnitude) < 1e-11 * self.scale(spec))
                assert vanish == cancellation_hypothesis(p, q, n), (p, q, n)

    def test_quadratic_amplitude_scaling(self):
        tau = np.linspace(0.0, 1.0, 64)
        small = spec_from_phi0("type1", 1, 2, 3, Fraction(1, 4), amplitude=1.0)
        large = spec_from_phi0("type1", 1, 2, 3, Fraction(1, 4), amplitude=2.0)
        s_small = second_order_sums(small, tau)
        s_large = second_order_sums(large, tau)
        assert np.allclose(s_large.sum_xx, 4.0 * s_small.sum_xx, atol=1e-12)
        assert np.allclose(s_large.sum_yy, 4.0 * s_small.sum_yy, atol=1e-12)
        assert np.allclose(s_large.sum_xy, 4.0 * s_small.sum_xy, atol=1e-12)

    def test_period_rescales_sums(self):
        tau = np.linspace(0.0, 1.0, 16)
        spec = spec_from_phi0("type1", 1, 2, 3, Fraction(1, 4))
        base = second_order_sums(spec, tau, period=1.0)
        halved = second_order_sums(spec, tau, period=2.0)
        assert np.allclose(halved.sum_xy, 0.5 * base.sum_xy, atol=1e-15)


class TestMainSatelliteForcing:
    def params(self, n):
        return SystemParams.from_design(n, 8.0, 1000.0)

    def test_vanishes_under_hypothesis(self):
        params = self.params(5)
        amp = math.radians(1.0) * params.slack_length
        spec = FormationSpec.from_phi0(I, 1, 2, 5, amp, Fraction(1, 4))
        tau = np.linspace(0.0, 1.0, 257)
        fx, fy = main_satellite_forcing(spec, params, tau)
        w0 = params.mean_motion
        scale = (2.0 * w0 / params.slack_length) * amp**2 * design_frequencies(1, 2, w0)[1]
        assert np.max(np.abs(fx)) < 1e-14 * scale * 1e3
        assert np.max(np.abs(fy)) < 1e-14 * scale * 1e3

    def test_nonzero_forcing_spectrum(self):
        # Forcing of the generic N=3 case concentrates on the doubled and
        # combination frequencies: bins {2p, 2q} for x, {q-p, q+p} for y.
        params = self.params(3)
        amp = math.radians(1.0) * params.slack_length
        spec = FormationSpec.from_phi0(I, 1, 2, 3, amp, Fraction(1, 4))
        m = 256
        tau = np.arange(m) / m
        fx, fy = main_satellite_forcing(spec, params, tau)
        sx = np.abs(np.fft.rfft(fx))
        sy = np.abs(np.fft.rfft(fy))
        scale = max(sx.max(), sy.max())
        assert scale > 0.0
        x_bins = {2 * spec.p, 2 * spec.q}
        y_bins = {spec.q - spec.p, spec.q + spec.p}
        for k in range(m // 2 + 1):
            if k not in x_bins:
                assert sx[k] < 1e-10 * scale
            if k not in y_bins:
                assert sy[k] < 1e-10 * scale

    def test_unbalanced_spec_refused(self):
        params = self.params(2)
        spec = FormationSpec.from_phi0(I, 1, 2, 2, 100.0, Fraction(1, 4))
        with pytest.raises(UnbalancedSpecError):
            main_satellite_forcing(spec, params, 0.0)

    def test_deputy_count_guard(self):
        spec = FormationSpec.from_phi0(I, 1, 2, 5, 100.0, Fraction(1, 4))
        with pytest.raises(ValueError):
            main_satellite_forcing(spec, self.params(3), 0.0)
