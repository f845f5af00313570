"""Trace text format reader and writer.

One record per line, UTF-8::

    # comment
    flow_id,window
    flow_id            (windows derived from --window-size)

flow_id is a decimal or 0x-hex 64-bit integer. Any other token (for example a
textual 5-tuple) is hashed to 64 bits with hash_identity.
"""

import logging
from collections.abc import Iterable
from pathlib import Path

from .errors import InvalidParameterError, TraceFormatError
from .hashing import hash_identity
from .model import partition_windows
from .types import MAX_FLOW_KEY, FlowKey, PacketRecord, WindowedTrace

logger = logging.getLogger(__name__)


def parse_flow_id(token: str) -> FlowKey:
    """Parse one flow identifier, hashing non-numeric identities."""
    token = token.strip()
    try:
        value = int(token, 16) if token.lower().startswith("0x") else int(token, 10)
    except ValueError:
        return FlowKey(hash_identity(token))
    if not 0 <= value <= MAX_FLOW_KEY:
        raise ValueError(f"flow id out of 64-bit range: {token}")
    return FlowKey(value)


def parse_trace_lines(lines: Iterable[str], window_size: int | None = None) -> WindowedTrace:
    """Parse trace lines into a WindowedTrace.

    Args:
        lines: Raw text lines
        window_size: Packets per window when lines carry no window column

    Returns:
        The parsed trace

    Raises:
        InvalidParameterError: If window_size is given and < 1
        TraceFormatError: On malformed lines, mixed formats or missing window size
    """
    if window_size is not None and window_size < 1:
        raise InvalidParameterError(f"window size must be >= 1, got {window_size}")

    keys: list[FlowKey] = []
    windows: list[int] = []
    has_window: bool | None = None
    previous = 0

    for line_number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) > 2 or not parts[0]:
            raise TraceFormatError(f"expected 'flow_id[,window]', got {line!r}", line_number)

        this_has_window = len(parts) == 2
        if has_window is None:
            has_window = this_has_window
        elif has_window != this_has_window:
            raise TraceFormatError("mixed lines with and without a window column", line_number)

        try:
            keys.append(parse_flow_id(parts[0]))
        except ValueError as e:
            raise TraceFormatError(str(e), line_number) from e

        if this_has_window:
            try:
                window = int(parts[1])
            except ValueError as e:
                raise TraceFormatError(
                    f"window is not an integer: {parts[1]!r}", line_number
                ) from e
            if window < 0 or window < previous:
                raise TraceFormatError(
                    f"window indices must be non-negative and non-decreasing, got {window}",
                    line_number,
                )
            previous = window
            windows.append(window)

    if has_window:
        return WindowedTrace(tuple(PacketRecord(k, w) for k, w in zip(keys, windows, strict=True)))
    if not keys:
        return WindowedTrace((), window_size)
    if window_size is None:
        raise TraceFormatError("trace has no window column; a window size is required")
    return partition_windows(keys, window_size)


def read_trace(path: str | Path, window_size: int | None = None) -> WindowedTrace:
    """Read a trace file.

    Raises:
        OSError: If the file cannot be read
        InvalidParameterError: If window_size is given and < 1
        TraceFormatError: If the content is malformed or not UTF-8
    """
    with open(path, encoding="utf-8") as f:
        try:
            trace = parse_trace_lines(f, window_size)
        except UnicodeDecodeError as e:
            raise TraceFormatError(f"not valid UTF-8 text: {e.reason}") from e
    logger.info(f"Loaded {len(trace)} packets over {trace.num_windows} windows from {path}")
    return trace


def write_trace(trace: WindowedTrace, path: str | Path, header: str | None = None) -> None:
    """Write a trace with an explicit window column."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if header:
            for line in header.splitlines():
                f.write(f"# {line}\n")
        for record in trace.records:
            f.write(f"{record.flow},{record.window}\n")
