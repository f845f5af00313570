"""Space accounting for PSSketch."""

from .types import WidthConfig

# Width of a full flow ID in the Protection Layer
ID_BITS = 64


def memory_bits(x: int, y: int, r: int, widths: WidthConfig | None = None) -> int:
    """Total bits: X*Y*(L_fp + L_f + L_p + 2) + R*(L_id + L_fof + L_pof).

    The per-window burst bookkeeping in Protection Layer entries is not counted.
    """
    widths = widths or WidthConfig()
    pl_entry = ID_BITS + widths.fof_bits + widths.pof_bits
    return x * y * widths.entry_bits + r * pl_entry


def protection_entry_bits(widths: WidthConfig | None = None) -> int:
    widths = widths or WidthConfig()
    return ID_BITS + widths.fof_bits + widths.pof_bits


def max_storable(widths: WidthConfig | None = None) -> tuple[int, int]:
    """Largest (frequency, persistence) the two layers can represent.

    f_max = (2^L_fof - 1)(2^L_f - 1) and p_max = (2^L_pof - 1)(2^L_p - 1).
    """
    widths = widths or WidthConfig()
    f_max = ((1 << widths.fof_bits) - 1) * ((1 << widths.f_bits) - 1)
    p_max = ((1 << widths.pof_bits) - 1) * ((1 << widths.p_bits) - 1)
    return f_max, p_max


def size_for_budget(
    memory_bits_budget: int, y: int, widths: WidthConfig, pl_fraction: float
) -> tuple[int, int]:
    """Split a bit budget into (X, R).

    pl_fraction of the budget goes to the Protection Layer; the rest is filled
    with buckets of Y entries. Both results are at least 1.
    """
    pl_bits = int(memory_bits_budget * pl_fraction)
    r = max(1, pl_bits // protection_entry_bits(widths))
    cl_bits = memory_bits_budget - r * protection_entry_bits(widths)
    x = max(1, cl_bits // (y * widths.entry_bits))
    return x, r
