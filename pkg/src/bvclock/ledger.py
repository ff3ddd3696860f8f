"""Account-based ledger state machine with nonce or binary-vector-clock ordering."""

from __future__ import annotations

import enum
import hashlib
import struct
from dataclasses import dataclass, field, replace
from typing import Iterable, Union

from .core import (
    AlreadyCovered,
    ClockState,
    Confirmable,
    FutureEpoch,
    MalformedTimestamp,
    PastEpoch,
    Timestamp,
    WidthMismatch,
    confirmability,
    merge,
)

ADDRESS_LEN = 20
ZERO_HASH = bytes(32)

Tag = Union[int, Timestamp]


class Mode(enum.Enum):
    BVC = "bvc"
    NONCE = "nonce"


class Verdict(enum.Enum):
    VALID = "Valid"
    ORDERING_NOT_READY = "OrderingNotReady"
    REPLAY = "Replay"
    FUTURE_EPOCH = "FutureEpoch"
    INSUFFICIENT_BALANCE = "InsufficientBalance"
    MALFORMED = "Malformed"
    UNKNOWN_ACCOUNT = "UnknownAccount"


class InvalidTransaction(RuntimeError):
    def __init__(self, tx: Transaction, verdict: Verdict):
        super().__init__(f"tx {tx.id.hex()[:12]} rejected: {verdict.value}")
        self.tx = tx
        self.verdict = verdict


class InvalidBlock(RuntimeError):
    pass


def address_from_name(name: str) -> bytes:
    """Deterministic 20-byte address for a human-readable name."""
    return hashlib.sha256(name.encode()).digest()[:ADDRESS_LEN]


def parse_address(text: str) -> bytes:
    raw = bytes.fromhex(text.removeprefix("0x"))
    if len(raw) != ADDRESS_LEN:
        raise ValueError(f"address must be {ADDRESS_LEN} bytes, got {len(raw)}: {text!r}")
    return raw


def encode_tag(tag: Tag) -> bytes:
    if isinstance(tag, Timestamp):
        return b"\x01" + struct.pack(">QH", tag.epoch, tag.width) + tag.bits.to_bytes()
    return b"\x00" + struct.pack(">Q", tag)


def encode_transaction(sender: bytes, recipient: bytes, value: int, fee: int, tag: Tag) -> bytes:
    """Canonical byte encoding hashed into the transaction id."""
    return sender + recipient + struct.pack(">QQ", value, fee) + encode_tag(tag)


@dataclass(frozen=True)
class Transaction:
    sender: bytes
    recipient: bytes
    value: int
    fee: int
    tag: Tag
    auth: bytes = b""
    id: bytes = field(default=b"", compare=False)

    def __post_init__(self) -> None:
        if len(self.sender) != ADDRESS_LEN or len(self.recipient) != ADDRESS_LEN:
            raise ValueError("addresses must be 20 bytes")
        if not (0 <= self.value < 2**64 and 0 <= self.fee < 2**64):
            raise ValueError("value and fee must be unsigned 64-bit amounts")
        if not self.auth:
            object.__setattr__(self, "auth", self.sender)
        if not self.id:
            object.__setattr__(self, "id", self.compute_id())

    @classmethod
    def create(cls, sender: bytes, recipient: bytes, value: int, fee: int, tag: Tag) -> Transaction:
        return cls(sender, recipient, value, fee, tag)

    def encode(self) -> bytes:
        return encode_transaction(self.sender, self.recipient, self.value, self.fee, self.tag)

    def compute_id(self) -> bytes:
        return hashlib.sha256(self.encode()).digest()

    @property
    def mode(self) -> Mode:
        return Mode.BVC if isinstance(self.tag, Timestamp) else Mode.NONCE


@dataclass(frozen=True)
class Account:
    balance: int
    ordering: Union[int, ClockState]


@dataclass(frozen=True)
class Block:
    height: int
    parent_id: bytes
    transactions: tuple[Transaction, ...]
    producer: bytes = bytes(ADDRESS_LEN)

    @property
    def id(self) -> bytes:
        h = hashlib.sha256()
        h.update(struct.pack(">Q", self.height) + self.parent_id + self.producer)
        for tx in self.transactions:
            h.update(tx.id)
        return h.digest()


class Ledger:
    """Balances and per-account ordering state.

    Height 0 is the implicit genesis block; the first applied block has
    height 1 and names the genesis hash as its parent.
    """

    def __init__(self, mode: Mode, width: int = 8, accounts: dict[bytes, Account] | None = None):
        self.mode = mode
        self.width = width
        self.accounts: dict[bytes, Account] = dict(accounts or {})
        self.height = 0
        self.tip_id = self.state_hash()

    @classmethod
    def genesis(
        cls,
        mode: Mode,
        balances: dict[bytes, int],
        width: int = 8,
        ordering: dict[bytes, Union[int, ClockState]] | None = None,
    ) -> Ledger:
        ordering = ordering or {}
        accounts = {a: Account(b, ordering.get(a, cls._fresh_ordering(mode, width))) for a, b in balances.items()}
        return cls(mode, width, accounts)

    @staticmethod
    def _fresh_ordering(mode: Mode, width: int) -> Union[int, ClockState]:
        return ClockState.initial(width) if mode is Mode.BVC else 0

    def copy(self) -> Ledger:
        other = Ledger.__new__(Ledger)
        other.mode = self.mode
        other.width = self.width
        other.accounts = dict(self.accounts)
        other.height = self.height
        other.tip_id = self.tip_id
        return other

    def balance(self, address: bytes) -> int:
        acct = self.accounts.get(address)
        return acct.balance if acct else 0

    def ordering(self, address: bytes) -> Union[int, ClockState]:
        acct = self.accounts.get(address)
        return acct.ordering if acct else self._fresh_ordering(self.mode, self.width)

    def total_supply(self) -> int:
        return sum(a.balance for a in self.accounts.values())

    def _well_formed(self, tx: Transaction) -> bool:
        if tx.mode is not self.mode or tx.auth != tx.sender or tx.id != tx.compute_id():
            return False
        if isinstance(tx.tag, Timestamp):
            return tx.tag.width == self.width and bool(tx.tag.bits)
        return 0 <= tx.tag < 2**64

    def ordering_verdict(self, tx: Transaction) -> Verdict:
        """Ordering check alone, ignoring balance."""
        if not self._well_formed(tx):
            return Verdict.MALFORMED
        acct = self.accounts.get(tx.sender)
        if acct is None:
            return Verdict.UNKNOWN_ACCOUNT
        if self.mode is Mode.NONCE:
            if tx.tag < acct.ordering:
                return Verdict.REPLAY
            if tx.tag > acct.ordering:
                return Verdict.ORDERING_NOT_READY
            return Verdict.VALID
        try:
            decision = confirmability(tx.tag, acct.ordering)
        except (MalformedTimestamp, WidthMismatch):
            return Verdict.MALFORMED
        if isinstance(decision, Confirmable):
            return Verdict.VALID
        if isinstance(decision, (AlreadyCovered, PastEpoch)):
            return Verdict.REPLAY
        if isinstance(decision, FutureEpoch):
            return Verdict.FUTURE_EPOCH
        return Verdict.ORDERING_NOT_READY

    def validate(self, tx: Transaction) -> Verdict:
        verdict = self.ordering_verdict(tx)
        if verdict is not Verdict.VALID:
            return verdict
        if self.accounts[tx.sender].balance < tx.value + tx.fee:
            return Verdict.INSUFFICIENT_BALANCE
        return Verdict.VALID

    def apply(self, tx: Transaction, producer: bytes = bytes(ADDRESS_LEN)) -> None:
        """Apply a validated transaction in place; fees go to ``producer``."""
        verdict = self.validate(tx)
        if verdict is not Verdict.VALID:
            raise InvalidTransaction(tx, verdict)
        sender = self.accounts[tx.sender]
        if isinstance(sender.ordering, ClockState):
            ordering = merge(sender.ordering, tx.tag)
        else:
            ordering = sender.ordering + 1
        self.accounts[tx.sender] = Account(sender.balance - tx.value - tx.fee, ordering)
        self._credit(tx.recipient, tx.value)
        self._credit(producer, tx.fee)

    def _credit(self, address: bytes, amount: int) -> None:
        acct = self.accounts.get(address)
        if acct is None:
            acct = Account(0, self._fresh_ordering(self.mode, self.width))
        self.accounts[address] = replace(acct, balance=acct.balance + amount)

    def next_block(self, transactions: Iterable[Transaction], producer: bytes = bytes(ADDRESS_LEN)) -> Block:
        return Block(self.height + 1, self.tip_id, tuple(transactions), producer)

    def apply_block(self, block: Block) -> None:
        """Apply every transaction of ``block`` or none of them."""
        if block.height != self.height + 1:
            raise InvalidBlock(f"expected height {self.height + 1}, got {block.height}")
        if block.parent_id != self.tip_id:
            raise InvalidBlock(f"block {block.height} does not extend the current tip")
        staged = self.copy()
        for i, tx in enumerate(block.transactions):
            try:
                staged.apply(tx, block.producer)
            except InvalidTransaction as exc:
                raise InvalidBlock(f"block {block.height} tx #{i}: {exc.verdict.value}") from exc
        self.accounts = staged.accounts
        self.height = block.height
        self.tip_id = block.id

    def state_hash(self) -> bytes:
        h = hashlib.sha256()
        h.update(struct.pack(">Q", self.height))
        for address in sorted(self.accounts):
            acct = self.accounts[address]
            h.update(address + struct.pack(">Q", acct.balance))
            if isinstance(acct.ordering, ClockState):
                h.update(encode_tag(Timestamp(acct.ordering.epoch, acct.ordering.confirmed)))
            else:
                h.update(encode_tag(acct.ordering))
        return h.digest()

    def nonce_gap_behavior(self, pending: Iterable[Transaction]) -> list[Transaction]:
        """Pending nonce transactions that cannot run until a gap is filled."""
        if self.mode is not Mode.NONCE:
            raise ValueError("nonce_gap_behavior requires a nonce-mode ledger")
        return [tx for tx in pending if tx.tag > self.ordering(tx.sender)]
