"""Deterministic text rendering of PSSketch state.

Format (one record per line)::

    window <index>
    CL <bucket> <slot> fp=<fp> f=<f> p=<p> W=<flag_w> OF=<flag_of>
    PL id=<id> f_of=<f_of> p_of=<p_of>

CL lines are sorted by (bucket, slot), PL lines by id. Empty CL slots are
omitted.
"""

from pathlib import Path

from .pssketch import PSSketch


def dump_state(sketch: PSSketch) -> str:
    """Render the sketch state; identical states render identically."""
    lines = [f"window {sketch.window}"]
    for m, n, e in sketch.entries():
        lines.append(f"CL {m} {n} fp={e.fp} f={e.f} p={e.p} W={e.flag_w} OF={e.flag_of}")
    for entry in sketch.protection_entries():
        lines.append(f"PL id={entry.id} f_of={entry.f_of} p_of={entry.p_of}")
    return "\n".join(lines) + "\n"


def write_dump(sketch: PSSketch, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dump_state(sketch))
