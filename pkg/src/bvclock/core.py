"""Binary vector clock algebra.

A timestamp is an ``(epoch, bits)`` pair where ``bits`` is a fixed-width
bit array. Within one epoch timestamps are partially ordered by bitwise
inclusion; across epochs the lower epoch always comes first.

Bit arrays are written most-significant bit first, so ``BitMask.parse("001")``
has only bit 0 set. That is the first bit a wallet hands out.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

MAX_WIDTH = 256
MAX_LATTICE_WIDTH = 10


class WidthMismatch(ValueError):
    """Two masks of different widths were combined."""


class MalformedTimestamp(ValueError):
    """A transaction timestamp with an all-zero bit array."""


class ContractViolation(RuntimeError):
    """An operation was called outside its precondition."""


@dataclass(frozen=True, slots=True)
class BitMask:
    value: int
    width: int

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"mask width must be in 1..{MAX_WIDTH}, got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"mask value {self.value} does not fit in {self.width} bits")

    @classmethod
    def zero(cls, width: int) -> BitMask:
        return cls(0, width)

    @classmethod
    def full(cls, width: int) -> BitMask:
        return cls((1 << width) - 1, width)

    @classmethod
    def bit(cls, index: int, width: int) -> BitMask:
        return cls(1 << index, width)

    @classmethod
    def parse(cls, text: str) -> BitMask:
        """Build a mask from a bit string such as ``"011"`` (MSB first)."""
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(int(text, 2), len(text))

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> BitMask:
        """Build a mask from a list like ``[1, 0, 0]`` (MSB first)."""
        return cls.parse("".join(str(int(b)) for b in bits))

    def to_bits(self) -> list[int]:
        return [int(c) for c in str(self)]

    def __str__(self) -> str:
        return format(self.value, f"0{self.width}b")

    def _check(self, other: BitMask) -> None:
        if self.width != other.width:
            raise WidthMismatch(f"widths differ: {self.width} vs {other.width}")

    def __or__(self, other: BitMask) -> BitMask:
        self._check(other)
        return BitMask(self.value | other.value, self.width)

    def __and__(self, other: BitMask) -> BitMask:
        self._check(other)
        return BitMask(self.value & other.value, self.width)

    def __invert__(self) -> BitMask:
        return BitMask(~self.value & ((1 << self.width) - 1), self.width)

    def __bool__(self) -> bool:
        return self.value != 0

    def popcount(self) -> int:
        return bin(self.value).count("1")

    def is_full(self) -> bool:
        return self.value == (1 << self.width) - 1

    def highest_bit(self) -> BitMask:
        if not self.value:
            raise ValueError("empty mask has no highest bit")
        return BitMask(1 << (self.value.bit_length() - 1), self.width)

    def lowest_free_bit(self) -> int | None:
        for i in range(self.width):
            if not self.value >> i & 1:
                return i
        return None

    def to_bytes(self) -> bytes:
        return self.value.to_bytes((self.width + 7) // 8, "big")


@dataclass(frozen=True, slots=True)
class Timestamp:
    """Ordering tag carried by a transaction."""

    epoch: int
    bits: BitMask

    def __post_init__(self) -> None:
        if not 0 <= self.epoch < 2**64:
            raise ValueError(f"epoch out of range: {self.epoch}")

    @classmethod
    def parse(cls, epoch: int, bits: str) -> Timestamp:
        return cls(epoch, BitMask.parse(bits))

    @property
    def width(self) -> int:
        return self.bits.width

    def __str__(self) -> str:
        return f"({self.epoch},[{','.join(str(self.bits))}])"


@dataclass(frozen=True, slots=True)
class ClockState:
    """An account's confirmed clock. Never stores a full mask."""

    epoch: int
    confirmed: BitMask

    def __post_init__(self) -> None:
        if not 0 <= self.epoch < 2**64:
            raise ValueError(f"epoch out of range: {self.epoch}")
        if self.confirmed.is_full():
            raise ValueError("clock state is not normalized: full mask must roll over")

    @classmethod
    def initial(cls, width: int) -> ClockState:
        return cls(0, BitMask.zero(width))

    @classmethod
    def parse(cls, epoch: int, bits: str) -> ClockState:
        return cls(epoch, BitMask.parse(bits))

    @property
    def width(self) -> int:
        return self.confirmed.width

    def __str__(self) -> str:
        return f"({self.epoch},[{','.join(str(self.confirmed))}])"


class Ordering(enum.Enum):
    BEFORE = "B"
    AFTER = "A"
    EQUAL = "E"
    INCOMPARABLE = "I"


# Confirmability outcomes.


@dataclass(frozen=True, slots=True)
class Confirmable:
    new_bit: BitMask


@dataclass(frozen=True, slots=True)
class MissingDependencies:
    # diagnostic only: the unconfirmed bits minus the highest one
    missing: BitMask


@dataclass(frozen=True, slots=True)
class FutureEpoch:
    pass


@dataclass(frozen=True, slots=True)
class PastEpoch:
    pass


@dataclass(frozen=True, slots=True)
class AlreadyCovered:
    pass


ConfirmDecision = Union[Confirmable, MissingDependencies, FutureEpoch, PastEpoch, AlreadyCovered]


def leq(a: BitMask, b: BitMask) -> bool:
    """True when every bit set in ``a`` is also set in ``b``."""
    a._check(b)
    return a.value & ~b.value == 0


def join(a: BitMask, b: BitMask) -> BitMask:
    """Least upper bound of two masks (bitwise OR)."""
    return a | b


def compare(a: Timestamp, b: Timestamp) -> Ordering:
    a.bits._check(b.bits)
    if a.epoch != b.epoch:
        return Ordering.BEFORE if a.epoch < b.epoch else Ordering.AFTER
    if a.bits == b.bits:
        return Ordering.EQUAL
    if leq(a.bits, b.bits):
        return Ordering.BEFORE
    if leq(b.bits, a.bits):
        return Ordering.AFTER
    return Ordering.INCOMPARABLE


def state_leq(a: ClockState, b: ClockState) -> bool:
    """Lattice order on clock states: epoch first, then mask inclusion."""
    if a.epoch != b.epoch:
        return a.epoch < b.epoch
    return leq(a.confirmed, b.confirmed)


def state_lt(a: ClockState, b: ClockState) -> bool:
    return a != b and state_leq(a, b)


def confirmability(ts: Timestamp, state: ClockState) -> ConfirmDecision:
    """Decide whether ``ts`` can be confirmed against ``state``.

    A timestamp is confirmable when exactly one of its bits is not yet in the
    confirmed mask. That bit is the transaction's own claim; every other set
    bit names a dependency that must already be confirmed.
    """
    if not ts.bits:
        raise MalformedTimestamp(f"timestamp {ts} has an empty bit array")
    ts.bits._check(state.confirmed)
    if ts.epoch < state.epoch:
        return PastEpoch()
    if ts.epoch > state.epoch:
        return FutureEpoch()
    fresh = ts.bits & ~state.confirmed
    n = fresh.popcount()
    if n == 0:
        return AlreadyCovered()
    if n == 1:
        return Confirmable(fresh)
    top = fresh.highest_bit()
    return MissingDependencies(BitMask(fresh.value & ~top.value, fresh.width))


def merge(state: ClockState, ts: Timestamp) -> ClockState:
    """Fold a confirmed timestamp into the account clock, rolling full epochs."""
    decision = confirmability(ts, state)
    if not isinstance(decision, Confirmable):
        raise ContractViolation(f"merge of {ts} into {state}: {type(decision).__name__}")
    confirmed = state.confirmed | ts.bits
    if confirmed.is_full():
        return ClockState(state.epoch + 1, BitMask.zero(state.width))
    return ClockState(state.epoch, confirmed)


class Lattice(NamedTuple):
    masks: list[BitMask]
    matrix: list[list[Ordering]]

    def incomparable_pairs(self) -> int:
        """Number of unordered incomparable pairs."""
        n = len(self.masks)
        return sum(
            self.matrix[i][j] is Ordering.INCOMPARABLE
            for i in range(n)
            for j in range(i + 1, n)
        )


def enumerate_lattice(width: int) -> Lattice:
    """All ``2**width`` masks and their pairwise ordering at a common epoch."""
    if not 1 <= width <= MAX_LATTICE_WIDTH:
        raise ValueError(f"lattice width must be in 1..{MAX_LATTICE_WIDTH}, got {width}")
    masks = [BitMask(v, width) for v in range(1 << width)]
    stamps = [Timestamp(0, m) for m in masks]
    matrix = [[compare(a, b) for b in stamps] for a in stamps]
    return Lattice(masks, matrix)
