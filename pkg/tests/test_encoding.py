import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from osc_conn.encoding import (EncodingError, FreqCalib, GrayImage, Kernel25,
                               codes_to_frequencies, encode_differences, extract_fragment,
                               gabor_kernel, gray_to_signal, ideal_dot, make_filter_bank,
                               signal_to_gray)

patch_values = st.lists(st.floats(-1, 1, allow_nan=False), min_size=25, max_size=25)


class TestGrayToSignal:
    def test_endpoints(self):
        assert gray_to_signal(0) == -1.0
        assert gray_to_signal(255) == 1.0

    def test_midpoint(self):
        # 2*128/255 - 1 = 1/255
        assert gray_to_signal(128) == pytest.approx(0.0039215686274509665, abs=1e-15)

    @pytest.mark.parametrize("g", [-1, 256, 1000])
    def test_out_of_range(self, g):
        with pytest.raises(EncodingError):
            gray_to_signal(g)

    def test_bijection_and_spacing(self):
        g = np.arange(256)
        s = gray_to_signal(g)
        assert np.all(np.diff(s) > 0)
        assert np.allclose(np.diff(s), 2 / 255)
        assert np.array_equal(signal_to_gray(s), g)


class TestGabor:
    def test_flat_gaussian(self):
        kern = gabor_kernel(0, 0, 50.0)
        grid = kern.as_grid()
        assert np.all(grid > 0)
        assert grid[2, 2] == 1.0
        assert np.allclose(grid, grid.T)
        assert np.allclose(grid, grid[::-1, :])
        assert np.allclose(grid, grid[:, ::-1])

    def test_orientation_transpose(self):
        for k in (math.pi / 4, math.pi / 2, 1.0):
            a = gabor_kernel(0, k, 1.5).as_grid()
            b = gabor_kernel(90, k, 1.5).as_grid()
            assert np.allclose(b, a.T, atol=1e-12)

    def test_center_row_values(self):
        # exp(-x^2/4.5) * cos(pi/2 * x) for x = -2..2; centre is the peak so N = 1
        expected = [-0.41111229050718745, 0.0, 1.0, 0.0, -0.41111229050718745]
        row = gabor_kernel(0, math.pi / 2, 1.5).as_grid()[2]
        assert np.allclose(row, expected, atol=1e-12)

    def test_peak_normalized(self):
        for kern in make_filter_bank():
            assert np.max(np.abs(kern.values)) == pytest.approx(1.0)
            assert np.all(np.abs(kern.values) <= 1.0)

    @given(st.floats(-720, 720), st.floats(0, 3), st.floats(0.3, 5))
    def test_periodic_in_theta(self, theta, k, sigma):
        a = gabor_kernel(theta, k, sigma).values
        b = gabor_kernel(theta + 360.0, k, sigma).values
        assert np.allclose(a, b, atol=1e-9)

    def test_bad_sigma(self):
        with pytest.raises(EncodingError):
            gabor_kernel(0, 1, 0)


class TestFilterBank:
    def test_default_cardinality(self):
        assert len(make_filter_bank()) == 8

    def test_single(self):
        bank = make_filter_bank([0], [0], 1.5)
        assert len(bank) == 1
        assert np.all(bank[0].values > 0)

    def test_order_and_distinct(self):
        bank = make_filter_bank([0, 45, 90, 135], [math.pi / 4, math.pi / 2], 1.5)
        assert [(b.theta_deg, b.k) for b in bank][:3] == [
            (0, math.pi / 4), (0, math.pi / 2), (45, math.pi / 4)]
        for i in range(len(bank)):
            for j in range(i + 1, len(bank)):
                assert not np.allclose(bank[i].values, bank[j].values)

    def test_empty(self):
        with pytest.raises(EncodingError):
            make_filter_bank([], [1.0])


class TestFragments:
    def test_black_and_white(self):
        black = GrayImage(np.zeros((5, 5), dtype=int))
        white = GrayImage(np.full((7, 7), 255))
        assert np.all(extract_fragment(black, 0, 0) == -1.0)
        assert np.all(extract_fragment(white, 2, 1) == 1.0)

    def test_ramp(self):
        px = 7 * np.arange(36).reshape(6, 6)
        frag = extract_fragment(GrayImage(px), 1, 1)
        assert frag[0] == pytest.approx(-0.615686274509804)  # pixel 49
        assert frag[-1] == pytest.approx(0.9215686274509804)  # pixel 245
        assert frag.shape == (25,)

    def test_out_of_bounds(self):
        img = GrayImage(np.zeros((6, 6), dtype=int))
        with pytest.raises(EncodingError):
            extract_fragment(img, 2, 0)

    def test_too_small_image(self):
        with pytest.raises(EncodingError):
            GrayImage(np.zeros((4, 9), dtype=int))


class TestDot:
    def test_ones(self):
        assert ideal_dot(np.ones(25), np.ones(25)) == 25.0

    def test_alternating(self):
        alt = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(25)])
        assert ideal_dot(alt, np.ones(25)) == 1.0

    @given(patch_values, patch_values)
    def test_matches_scalar_loop(self, f, k):
        acc = 0.0
        for a, b in zip(f, k):
            acc += a * b
        assert ideal_dot(f, k) == pytest.approx(acc, abs=1e-12)
        assert ideal_dot(f, k) == pytest.approx(ideal_dot(k, f), abs=1e-12)
        assert abs(ideal_dot(f, k)) <= 25 + 1e-12

    def test_accepts_kernel(self):
        kern = gabor_kernel(0, 0, 1.5)
        assert ideal_dot(kern, kern) == pytest.approx(float(kern.values @ kern.values))


class TestCodes:
    def test_zero(self):
        f = np.linspace(-1, 1, 25)
        assert np.all(encode_differences(f, f) == 0)

    def test_max(self):
        assert np.all(encode_differences(np.ones(25), -np.ones(25)) == 20)

    def test_half(self):
        assert np.all(encode_differences(np.full(25, 0.35), np.full(25, -0.15)) == 5)

    @given(patch_values, patch_values)
    def test_symmetric_and_bounded(self, f, k):
        a = encode_differences(f, k)
        assert np.array_equal(a, encode_differences(k, f))
        assert a.min() >= 0 and a.max() <= 20

    @given(patch_values, patch_values)
    def test_zero_iff_close(self, f, k):
        codes = encode_differences(f, k)
        close = np.abs(np.array(f) - np.array(k)) < 0.05
        assert np.array_equal(codes == 0, close)

    def test_mean_code_falls_with_match(self):
        rng = np.random.default_rng(3)
        kern = gabor_kernel(45, math.pi / 4, 1.5).values
        noise = np.clip(rng.normal(0, 0.6, 25), -1, 1)
        alphas = np.linspace(0, 1, 11)
        dots, means = [], []
        for a in alphas:
            f = a * kern + (1 - a) * noise
            dots.append(ideal_dot(f, kern))
            means.append(encode_differences(f, kern).mean())
        assert stats.spearmanr(dots, means).statistic <= -0.9


class TestFrequencies:
    def test_endpoints(self):
        cal = FreqCalib.preset(3)
        freqs = codes_to_frequencies(np.array([0, 20]), cal)
        assert freqs[0] == cal.f0
        assert freqs[1] == pytest.approx(cal.f0 + 20 * cal.slope)

    def test_linear(self):
        cal = FreqCalib(stages=5)
        freqs = codes_to_frequencies(np.arange(0, 21, 4), cal)
        steps = np.diff(freqs)
        assert np.allclose(steps, steps[0], rtol=1e-12)
        assert np.all(steps > 0)

    @pytest.mark.parametrize("stages", [3, 5, 7])
    def test_preset_ratio(self, stages):
        cal = FreqCalib.preset(stages)
        assert 0.1 <= cal.slope * 20 / cal.f0 <= 0.4

    def test_invalid(self):
        with pytest.raises(EncodingError):
            FreqCalib(stages=4)
        with pytest.raises(EncodingError):
            FreqCalib(stages=3, f0=-1.0)
        with pytest.raises(EncodingError):
            codes_to_frequencies(np.array([32]), FreqCalib())


def test_kernel_rejects_out_of_range():
    with pytest.raises(EncodingError):
        Kernel25(np.full(25, 1.5))
