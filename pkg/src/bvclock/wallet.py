"""Sender-side tag assignment.

In BVC mode a wallet gives every new transaction the lowest unused bit of its
current epoch and ORs in the bits of any same-epoch dependencies. In nonce
mode it just counts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Union

from .core import BitMask, ClockState, Timestamp, state_lt
from .ledger import Mode, Tag, Transaction


class UnknownDependency(KeyError):
    pass


class NotInvalidated(ValueError):
    pass


class IssueStatus(enum.Enum):
    PENDING = "pending"
    CONFIRMED = "confirmed"
    INVALIDATED = "invalidated"


@dataclass
class Issued:
    tag: Tag
    deps: frozenset[bytes]
    recipient: bytes
    value: int
    fee: int
    status: IssueStatus = IssueStatus.PENDING


class Wallet:
    def __init__(
        self,
        address: bytes,
        mode: Mode,
        width: int = 8,
        clock: Union[ClockState, int, None] = None,
    ):
        self.address = address
        self.mode = mode
        self.width = width
        if mode is Mode.BVC:
            clock = clock if clock is not None else ClockState.initial(width)
            self.confirmed_clock: Union[ClockState, int] = clock
            self.local_epoch = clock.epoch
            self.allocated = clock.confirmed
            self.next_nonce = 0
        else:
            self.confirmed_clock = clock if clock is not None else 0
            self.next_nonce = self.confirmed_clock
        self.issued: dict[bytes, Issued] = {}

    def assign_timestamp(self, deps: Iterable[bytes] = ()) -> Tag:
        """Reserve the next tag for a transaction depending on ``deps``."""
        deps = list(deps)
        for d in deps:
            if d not in self.issued:
                raise UnknownDependency(d.hex())
        if self.mode is Mode.NONCE:
            nonce = self.next_nonce
            self.next_nonce += 1
            return nonce

        own = self.allocated.lowest_free_bit()
        if own is None:
            self.local_epoch += 1
            self.allocated = BitMask.zero(self.width)
            own = 0
        bits = BitMask.bit(own, self.width)
        for d in deps:
            tag = self.issued[d].tag
            # deps from earlier epochs are already implied by the epoch order
            if tag.epoch == self.local_epoch:
                bits = bits | tag.bits
        self.allocated = self.allocated | BitMask.bit(own, self.width)
        return Timestamp(self.local_epoch, bits)

    def issue(self, recipient: bytes, value: int, fee: int, deps: Iterable[bytes] = ()) -> Transaction:
        deps = frozenset(deps)
        tag = self.assign_timestamp(deps)
        tx = Transaction.create(self.address, recipient, value, fee, tag)
        self.issued[tx.id] = Issued(tag, deps, recipient, value, fee)
        return tx

    def on_confirmed(self, tx_id: bytes | None, state: Union[ClockState, int]) -> bool:
        """Record a confirmation; returns False for stale notifications."""
        if self.mode is Mode.BVC:
            if not state_lt(self.confirmed_clock, state):
                return False
            if state.epoch > self.local_epoch:
                self.local_epoch = state.epoch
                self.allocated = state.confirmed
            elif state.epoch == self.local_epoch:
                self.allocated = self.allocated | state.confirmed
        else:
            if state <= self.confirmed_clock:
                return False
            self.next_nonce = max(self.next_nonce, state)
        self.confirmed_clock = state
        if tx_id in self.issued:
            self.issued[tx_id].status = IssueStatus.CONFIRMED
        return True

    def mark_invalidated(self, tx_id: bytes) -> None:
        record = self.issued[tx_id]
        if record.status is IssueStatus.PENDING:
            record.status = IssueStatus.INVALIDATED

    def reissue_invalidated(self, tx_id: bytes) -> Transaction:
        """Re-tag an invalidated transaction's payload with a fresh bit."""
        record = self.issued.get(tx_id)
        if record is None or record.status is not IssueStatus.INVALIDATED:
            raise NotInvalidated(f"transaction {tx_id.hex()[:12]} was not invalidated")
        live = {d for d in record.deps if self.issued[d].status is not IssueStatus.INVALIDATED}
        return self.issue(record.recipient, record.value, record.fee, live)
