"""Local-memory address encoding shared by the engines and their tests.

A local address is a 32-bit value. Bit 31 selects the accumulator over the
scratchpad; bit 30 requests accumulation instead of overwrite (meaningful on
accumulator writes only); bit 29 requests a full-width accumulator read
(meaningful on accumulator reads only); bits 0-28 are the row index. The
all-ones value is the "garbage" sentinel with special meaning per
instruction (keep the loaded B tile, omit the bias).
"""

from __future__ import annotations

from dataclasses import dataclass

ADDR_MASK = 0xFFFFFFFF
ACC_BIT = 1 << 31
ACCUMULATE_BIT = 1 << 30
FULL_WIDTH_BIT = 1 << 29
ROW_MASK = 0x1FFFFFFF
GARBAGE_ADDR = 0xFFFFFFFF

SCRATCHPAD = "scratchpad"
ACCUMULATOR = "accumulator"


@dataclass(frozen=True)
class LocalAddress:
    raw: int
    space: str                # "scratchpad" or "accumulator"
    accumulate: bool          # accumulator writes only
    full_width_read: bool     # accumulator reads only
    row: int


def decode_local_address(raw: int, access: str = "write") -> LocalAddress:
    """Decode a 32-bit local address for the given access direction.

    The accumulate flag is only meaningful when writing and the full-width
    flag only when reading; both are reported False otherwise.
    """
    if access not in ("read", "write"):
        raise ValueError(f"access must be 'read' or 'write', not {access!r}")
    raw &= ADDR_MASK
    is_acc = bool(raw & ACC_BIT)
    return LocalAddress(
        raw=raw,
        space=ACCUMULATOR if is_acc else SCRATCHPAD,
        accumulate=is_acc and access == "write" and bool(raw & ACCUMULATE_BIT),
        full_width_read=is_acc and access == "read" and bool(raw & FULL_WIDTH_BIT),
        row=raw & ROW_MASK,
    )


def encode_local_address(space: str, row: int, accumulate: bool = False,
                         full_width_read: bool = False) -> int:
    """Build a raw 32-bit local address from its fields."""
    if row < 0 or row > ROW_MASK:
        raise ValueError(f"row {row} outside the 29-bit range")
    raw = row
    if space == ACCUMULATOR:
        raw |= ACC_BIT
        if accumulate:
            raw |= ACCUMULATE_BIT
        if full_width_read:
            raw |= FULL_WIDTH_BIT
    elif space != SCRATCHPAD:
        raise ValueError(f"unknown space {space!r}")
    elif accumulate or full_width_read:
        raise ValueError("accumulate/full-width flags apply to the accumulator only")
    return raw


def is_garbage(raw: int) -> bool:
    return (raw & ADDR_MASK) == GARBAGE_ADDR
