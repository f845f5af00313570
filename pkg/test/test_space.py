"""Tests for space accounting and memory-budget sizing."""

import pytest

from baselines.pisketch import equal_space_p_max, pisketch_space
from flows.errors import ConfigurationError
from sketch.space import max_storable, memory_bits, protection_entry_bits, size_for_budget
from sketch.types import SketchConfig, WidthConfig


class TestMemoryBits:
    def test_defaults(self):
        # 32,000 entries of 32 bits plus 500 PL entries of 80 bits
        assert memory_bits(1000, 32, 500) == 1_064_000
        assert SketchConfig(x=1000, y=32, r=500).memory_bits == 1_064_000

    def test_without_protection_layer(self):
        assert memory_bits(1000, 32, 0) == 32_000 * 32

    def test_linear_in_buckets(self):
        single = memory_bits(1000, 32, 0)
        assert memory_bits(2000, 32, 0) == 2 * single

    def test_custom_widths(self):
        widths = WidthConfig(fp_bits=12, f_bits=6, p_bits=4, fof_bits=10, pof_bits=6)
        assert widths.entry_bits == 24
        assert protection_entry_bits(widths) == 80
        assert memory_bits(10, 4, 2, widths) == 10 * 4 * 24 + 2 * 80


class TestMaxStorable:
    def test_defaults(self):
        assert max_storable() == (255 * 255, 255 * 63)
        assert max_storable() == (65_025, 16_065)

    def test_one_bit_widths(self):
        widths = WidthConfig(f_bits=1, p_bits=1, fof_bits=1, pof_bits=1, p_overflow_threshold=2)
        assert max_storable(widths) == (1, 1)


class TestSizeForBudget:
    def test_hundred_kilobytes(self):
        budget = 100 * 1024 * 8
        x, r = size_for_budget(budget, 32, WidthConfig(), 0.25)
        assert (x, r) == (600, 2560)
        assert memory_bits(x, 32, r) <= budget

    def test_tiny_budget_keeps_one_of_each(self):
        assert size_for_budget(8, 32, WidthConfig(), 0.25) == (1, 1)

    @pytest.mark.parametrize("kb", [1, 3, 50, 500])
    def test_stays_within_budget(self, kb):
        budget = kb * 8192
        x, r = size_for_budget(budget, 32, WidthConfig(), 0.3)
        assert memory_bits(x, 32, r) <= budget


class TestPiSketchSpace:
    def test_defaults(self):
        f_max, p_max = max_storable()
        # 64 + ceil(3 * 16) + 14 bits per cell
        assert pisketch_space(32_000, 8, f_max, p_max) == 32_000 * 126

    def test_monotone_in_weight_increment(self):
        f_max, p_max = max_storable()
        sizes = [pisketch_space(32_000, L, f_max, p_max) for L in (2, 4, 8, 16, 32)]
        assert sizes == sorted(sizes)
        assert len(set(sizes)) == len(sizes)

    def test_rejects_unit_increment(self):
        with pytest.raises(ConfigurationError):
            pisketch_space(10, 1, 100, 100)

    def test_equal_space_persistence_range(self):
        assert equal_space_p_max() == 63
        assert equal_space_p_max() < max_storable()[1]
