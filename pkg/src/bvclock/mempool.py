"""Per-sender pending pool with classification, conflict eviction and block packing."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .ledger import ADDRESS_LEN, Block, Ledger, Mode, Transaction, Verdict

DEFAULT_TTL_BLOCKS = 32
NONCE_SENDER_LIMIT = 256

# verdicts a transaction may wait out in the pool
WAITING = frozenset(
    {Verdict.VALID, Verdict.ORDERING_NOT_READY, Verdict.FUTURE_EPOCH, Verdict.INSUFFICIENT_BALANCE}
)


class Admission(enum.Enum):
    ACCEPTED = "Accepted"
    REPLAY = "Replay"
    MALFORMED = "Malformed"
    UNKNOWN_ACCOUNT = "UnknownAccount"
    DUPLICATE = "Duplicate"
    OVERFLOW = "Overflow"


class Eviction(enum.Enum):
    CONFIRMED = "Confirmed"
    INVALIDATED = "Invalidated"
    EXPIRED = "Expired"


@dataclass(frozen=True)
class EvictionRecord:
    tx_id: bytes
    reason: Eviction


class Mempool:
    def __init__(self, mode: Mode, width: int = 8, ttl_blocks: int = DEFAULT_TTL_BLOCKS, max_size: int | None = None):
        self.mode = mode
        self.width = width
        self.ttl_blocks = ttl_blocks
        self.max_size = max_size
        self.sender_limit = 4 * width if mode is Mode.BVC else NONCE_SENDER_LIMIT
        self.txs: dict[bytes, Transaction] = {}
        self.by_sender: dict[bytes, dict[bytes, Transaction]] = {}
        self.status: dict[bytes, Verdict] = {}
        self.arrival: dict[bytes, int] = {}
        self.evicted: dict[bytes, Eviction] = {}

    def __len__(self) -> int:
        return len(self.txs)

    def __contains__(self, tx_id: bytes) -> bool:
        return tx_id in self.txs

    def insert(self, ledger: Ledger, tx: Transaction) -> Admission:
        if tx.id in self.txs:
            return Admission.DUPLICATE
        verdict = ledger.validate(tx)
        if verdict not in WAITING:
            return Admission(verdict.value)
        queue = self.by_sender.setdefault(tx.sender, {})
        if len(queue) >= self.sender_limit or (self.max_size is not None and len(self.txs) >= self.max_size):
            return Admission.OVERFLOW
        queue[tx.id] = tx
        self.txs[tx.id] = tx
        self.status[tx.id] = verdict
        self.arrival[tx.id] = ledger.height
        return Admission.ACCEPTED

    def _remove(self, tx_id: bytes, reason: Eviction) -> EvictionRecord:
        tx = self.txs.pop(tx_id)
        queue = self.by_sender[tx.sender]
        del queue[tx_id]
        if not queue:
            del self.by_sender[tx.sender]
        del self.status[tx_id]
        del self.arrival[tx_id]
        self.evicted[tx_id] = reason
        return EvictionRecord(tx_id, reason)

    def ready(self) -> list[Transaction]:
        return [self.txs[i] for i, v in self.status.items() if v is Verdict.VALID]

    def select_for_block(self, ledger: Ledger, limit: int, producer: bytes = bytes(ADDRESS_LEN)) -> list[Transaction]:
        """Greedy fee-first packing against a tentative copy of ``ledger``.

        Each step takes the highest-fee transaction that is valid right now,
        breaking ties by ascending id, then re-checks only the accounts that
        step touched.
        """
        if limit < 0:
            raise ValueError("limit must be non-negative")
        tentative = ledger.copy()
        candidates = {i: tx for i, tx in self.txs.items() if tentative.validate(tx) is Verdict.VALID}
        chosen: list[Transaction] = []
        taken: set[bytes] = set()
        while candidates and len(chosen) < limit:
            best = min(candidates.values(), key=lambda t: (-t.fee, t.id))
            tentative.apply(best, producer)
            chosen.append(best)
            taken.add(best.id)
            touched = {best.sender, best.recipient, producer}
            for address in touched:
                for i, tx in self.by_sender.get(address, {}).items():
                    if i in taken:
                        continue
                    if tentative.validate(tx) is Verdict.VALID:
                        candidates[i] = tx
                    else:
                        candidates.pop(i, None)
            candidates.pop(best.id, None)
        return chosen

    def on_block_applied(self, ledger: Ledger, block: Block) -> list[EvictionRecord]:
        """Evict confirmed, invalidated and expired transactions; reclassify the rest."""
        records = [self._remove(tx.id, Eviction.CONFIRMED) for tx in block.transactions if tx.id in self.txs]
        for tx_id in list(self.txs):
            verdict = ledger.validate(self.txs[tx_id])
            if verdict not in WAITING:
                records.append(self._remove(tx_id, Eviction.INVALIDATED))
            elif ledger.height - self.arrival[tx_id] >= self.ttl_blocks:
                records.append(self._remove(tx_id, Eviction.EXPIRED))
            else:
                self.status[tx_id] = verdict
        return records

    def stalled(self) -> list[Transaction]:
        """Pending transactions blocked on ordering rather than funds."""
        return [
            self.txs[i]
            for i, v in self.status.items()
            if v in (Verdict.ORDERING_NOT_READY, Verdict.FUTURE_EPOCH)
        ]
