"""Seeded discrete-event simulation of transaction propagation and block production.

Every random draw comes from a generator keyed on ``(seed, purpose, ...)``
rather than from one shared stream, so BVC and nonce runs of the same
scenario see the same drops and latencies even though their blocks differ.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import logging
import random
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Optional, Union

import numpy as np

from .core import ClockState, Confirmable, Timestamp, confirmability
from .ledger import Block, Ledger, Mode, Transaction, address_from_name
from .mempool import DEFAULT_TTL_BLOCKS, Mempool
from .wallet import Wallet
from .workload import CONFIG_KEYS, Delay, Drop, Scenario, ScenarioError, validate

log = logging.getLogger(__name__)

CLIENT = -1
STATUSES = ("Confirmed", "Stalled", "Invalidated", "Expired", "Dropped")
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    mode: Mode = Mode.BVC
    width: int = 8
    node_count: int = 4
    block_interval: int = 1000
    latency_min: int = 50
    latency_max: int = 200
    drop_probability: float = 0.0
    max_block_txs: int = 100
    horizon: int = 60_000
    ttl_blocks: int = DEFAULT_TTL_BLOCKS

    def check(self) -> None:
        problems = []
        if self.node_count < 1:
            problems.append("node_count must be >= 1")
        if self.block_interval <= 0:
            problems.append("block_interval must be positive")
        if not 0 <= self.latency_min <= self.latency_max:
            problems.append("latency must satisfy 0 <= min <= max")
        # blocks must reach every node before the next slot; there is no fork choice
        if self.latency_max >= self.block_interval:
            problems.append("latency_max must be below block_interval")
        if not 0.0 <= self.drop_probability <= 1.0:
            problems.append("drop_probability must be in [0, 1]")
        if self.max_block_txs < 0:
            problems.append("max_block_txs must be non-negative")
        if self.horizon <= 0:
            problems.append("horizon must be positive")
        if self.ttl_blocks < 1:
            problems.append("ttl_blocks must be >= 1")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be an unsigned 64-bit integer")
        if problems:
            raise ScenarioError([f"config: {p}" for p in problems])

    @classmethod
    def for_scenario(cls, scenario: Scenario, **overrides: Any) -> SimConfig:
        """Defaults, then the scenario's ``config`` block, then ``overrides``."""
        values: dict[str, Any] = {"width": scenario.width}
        values.update({k: v for k, v in scenario.config.items() if k in CONFIG_KEYS})
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def echo(self) -> dict:
        return {
            "seed": self.seed,
            "mode": self.mode.value,
            "width": self.width,
            "node_count": self.node_count,
            "block_interval": self.block_interval,
            "latency_min": self.latency_min,
            "latency_max": self.latency_max,
            "drop_probability": self.drop_probability,
            "max_block_txs": self.max_block_txs,
            "horizon": self.horizon,
            "ttl_blocks": self.ttl_blocks,
        }


@dataclass
class TxRecord:
    label: str
    id: str
    sender: str
    submit_time: int
    confirm_time: Optional[int] = None
    status: str = "Stalled"

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "id": self.id,
            "sender": self.sender,
            "submit_time": self.submit_time,
            "confirm_time": self.confirm_time,
            "status": self.status,
        }


@dataclass
class Metrics:
    config: dict
    transactions: list[TxRecord]
    blocks_produced: int
    mean_mempool_occupancy: float
    trace_hash: str = ""

    def count(self, status: str) -> int:
        return sum(t.status == status for t in self.transactions)

    @property
    def confirmed(self) -> int:
        return self.count("Confirmed")

    @property
    def stalled(self) -> int:
        return self.count("Stalled")

    def by_label(self) -> dict[str, TxRecord]:
        return {t.label: t for t in self.transactions}

    def latencies(self) -> list[int]:
        return [t.confirm_time - t.submit_time for t in self.transactions if t.confirm_time is not None]

    def aggregates(self) -> dict:
        lat = self.latencies()
        return {
            "submitted": len(self.transactions),
            "confirmed": self.confirmed,
            "stalled": self.stalled,
            "invalidated": self.count("Invalidated"),
            "expired": self.count("Expired"),
            "dropped": self.count("Dropped"),
            "mean_latency_ms": float(np.mean(lat)) if lat else None,
            "p95_latency_ms": float(np.percentile(lat, 95)) if lat else None,
            "blocks_produced": self.blocks_produced,
            "mean_mempool_occupancy": self.mean_mempool_occupancy,
        }

    def to_document(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "trace_hash": self.trace_hash,
            "aggregates": self.aggregates(),
            "transactions": [t.as_dict() for t in self.transactions],
        }


@dataclass
class SimResult:
    metrics: Metrics
    trace: list[str]
    trace_hash: str
    chain: list[tuple[int, Block]]
    genesis: Ledger
    transactions: dict[str, Transaction]
    node_ledgers: list[Ledger]

    def node_state_hashes(self) -> list[str]:
        return [ledger.state_hash().hex() for ledger in self.node_ledgers]

    def sender_clocks(self, sender: bytes) -> list[Union[ClockState, int]]:
        """The sender's ordering state after each of its confirmed transactions."""
        ledger = self.genesis.copy()
        states = []
        for _, block in self.chain:
            for tx in block.transactions:
                ledger.apply(tx, block.producer)
                if tx.sender == sender:
                    states.append(ledger.ordering(sender))
        return states


def _rng(seed: int, *key: Any) -> random.Random:
    return random.Random("|".join(str(k) for k in (seed, *key)))


@dataclass
class _Node:
    index: int
    address: bytes
    ledger: Ledger
    mempool: Mempool
    waiting: dict[int, Block] = field(default_factory=dict)


class Simulation:
    def __init__(self, scenario: Scenario, config: SimConfig):
        validate(scenario)
        config.check()
        if config.width != scenario.width:
            scenario = replace(scenario, width=config.width)
            validate(scenario)
        for i, sub in enumerate(scenario.submissions):
            if sub.tag is None:
                continue
            tag_mode = Mode.BVC if isinstance(sub.tag, Timestamp) else Mode.NONCE
            if tag_mode is not config.mode:
                raise ScenarioError([f"submissions[{i}].tag: {tag_mode.value} tag in a {config.mode.value} run"])
        self.scenario = scenario
        self.config = config
        self.trace: list[str] = []
        self._queue: list[tuple[int, int, str, tuple]] = []
        self._seq = 0

        mode, width = config.mode, config.width
        balances = {a.address: a.balance for a in scenario.accounts}
        ordering: dict[bytes, Union[ClockState, int]] = {}
        for a in scenario.accounts:
            if mode is Mode.BVC and a.clock is not None:
                ordering[a.address] = a.clock
            elif mode is Mode.NONCE and a.nonce is not None:
                ordering[a.address] = a.nonce
        self.genesis = Ledger.genesis(mode, balances, width, ordering)
        self.nodes = [
            _Node(
                i,
                address_from_name(f"validator-{i}"),
                self.genesis.copy(),
                Mempool(mode, width, config.ttl_blocks),
            )
            for i in range(config.node_count)
        ]
        self.wallets = {
            a.address: Wallet(a.address, mode, width, self.genesis.ordering(a.address)) for a in scenario.accounts
        }
        self.drops = {f.label: f for f in scenario.faults if isinstance(f, Drop)}
        self.delays: dict[str, int] = {}
        for f in scenario.faults:
            if isinstance(f, Delay):
                self.delays[f.label] = self.delays.get(f.label, 0) + f.ms
        self.by_label: dict[str, Transaction] = {}
        self.ids: dict[str, bytes] = {}
        self.chain: list[tuple[int, Block]] = []

    # -- plumbing ---------------------------------------------------------

    def _schedule(self, time: int, kind: str, *payload: Any) -> None:
        heapq.heappush(self._queue, (time, self._seq, kind, payload))
        self._seq += 1

    def _log(self, time: int, node: int, kind: str, ident: str, decision: str) -> None:
        record = {"time": time, "node": node, "kind": kind, "id": ident, "decision": decision}
        self.trace.append(json.dumps(record, separators=(",", ":")))

    def _latency(self, *key: Any) -> int:
        rng = _rng(self.config.seed, "latency", *key)
        return rng.randint(self.config.latency_min, self.config.latency_max)

    # -- event handlers ---------------------------------------------------

    def _build(self, label: str) -> Transaction:
        sub = self.scenario.submission(label)
        wallet = self.wallets[sub.sender]
        if sub.tag is not None:
            return Transaction.create(sub.sender, sub.recipient, sub.value, sub.fee, sub.tag)
        deps = [self.ids[d] for d in sub.deps]
        return wallet.issue(sub.recipient, sub.value, sub.fee, deps)

    def _on_submit(self, time: int, label: str) -> None:
        tx = self._build(label)
        self.by_label[label] = tx
        self.ids[label] = tx.id
        self._log(time, CLIENT, "submit", tx.id.hex(), f"label={label} sender={tx.sender.hex()}")
        random_drop = _rng(self.config.seed, "drop", label).random() < self.config.drop_probability
        fault = self.drops.get(label)
        if fault is not None or random_drop:
            self._log(time, CLIENT, "drop", tx.id.hex(), "fault" if fault else "random")
            if fault is not None and fault.resubmit_at is not None:
                self._schedule(fault.resubmit_at, "resubmit", label)
            return
        self._broadcast(time, label, tx, attempt=0, extra=self.delays.get(label, 0))

    def _on_resubmit(self, time: int, label: str) -> None:
        tx = self.by_label[label]
        self._log(time, CLIENT, "resubmit", tx.id.hex(), f"label={label}")
        self._broadcast(time, label, tx, attempt=1, extra=0)

    def _broadcast(self, time: int, label: str, tx: Transaction, attempt: int, extra: int) -> None:
        for node in self.nodes:
            delay = self._latency("tx", label, attempt, node.index) + extra
            self._schedule(time + delay, "deliver", node.index, tx)

    def _on_deliver(self, time: int, index: int, tx: Transaction) -> None:
        node = self.nodes[index]
        admission = node.mempool.insert(node.ledger, tx)
        self._log(time, index, "deliver", tx.id.hex(), admission.value)

    def _after_block(self, time: int, node: _Node, block: Block) -> None:
        for rec in node.mempool.on_block_applied(node.ledger, block):
            self._log(time, node.index, "evict", rec.tx_id.hex(), rec.reason.value)

    def _on_produce(self, time: int, slot: int) -> None:
        node = self.nodes[(slot - 1) % len(self.nodes)]
        self._drain_waiting(time, node)
        occupancy = len(node.mempool)
        txs = node.mempool.select_for_block(node.ledger, self.config.max_block_txs, node.address)
        block = node.ledger.next_block(txs, node.address)
        tentative = node.ledger.copy()
        node.ledger.apply_block(block)
        self.chain.append((time, block))
        self._log(
            time,
            node.index,
            "produce",
            block.id.hex(),
            f"height={block.height} txs={len(txs)} pool={occupancy}",
        )
        for tx in txs:
            tentative.apply(tx, block.producer)
            state = tentative.ordering(tx.sender)
            self._log(time, node.index, "confirm", tx.id.hex(), f"height={block.height} clock={state}")
            self.wallets[tx.sender].on_confirmed(tx.id, state)
        self._after_block(time, node, block)
        for other in self.nodes:
            if other is not node:
                delay = self._latency("block", block.height, other.index)
                self._schedule(time + delay, "block", other.index, block)

    def _drain_waiting(self, time: int, node: _Node) -> None:
        while node.ledger.height + 1 in node.waiting:
            block = node.waiting.pop(node.ledger.height + 1)
            node.ledger.apply_block(block)
            self._log(time, node.index, "block", block.id.hex(), f"height={block.height}")
            self._after_block(time, node, block)

    def _on_block(self, time: int, index: int, block: Block) -> None:
        node = self.nodes[index]
        node.waiting[block.height] = block
        self._drain_waiting(time, node)

    # -- driver -----------------------------------------------------------

    def run(self) -> SimResult:
        cfg = self.config
        self._log(0, CLIENT, "config", "", " ".join(f"{k}={v}" for k, v in cfg.echo().items()))
        for sub in self.scenario.submissions:
            self._schedule(sub.time, "submit", sub.label)
        for slot in range(1, cfg.horizon // cfg.block_interval + 1):
            self._schedule(slot * cfg.block_interval, "produce", slot)
        handlers = {
            "submit": self._on_submit,
            "resubmit": self._on_resubmit,
            "deliver": self._on_deliver,
            "produce": self._on_produce,
            "block": self._on_block,
        }
        while self._queue and self._queue[0][0] <= cfg.horizon:
            time, _, kind, payload = heapq.heappop(self._queue)
            handlers[kind](time, *payload)
        log.info("%s run: %d events left in flight at horizon", cfg.mode.value, len(self._queue))
        digest = trace_hash(self.trace)
        metrics = metrics_from_trace(self.trace)
        return SimResult(
            metrics=metrics,
            trace=self.trace,
            trace_hash=digest,
            chain=self.chain,
            genesis=self.genesis,
            transactions=dict(self.by_label),
            node_ledgers=[n.ledger for n in self.nodes],
        )


def run(scenario: Scenario, config: SimConfig) -> SimResult:
    return Simulation(scenario, config).run()


def trace_hash(lines: Iterable[str]) -> str:
    h = hashlib.sha256()
    for line in lines:
        h.update(line.encode() + b"\n")
    return h.hexdigest()


def _fields(decision: str) -> dict[str, str]:
    return dict(part.split("=", 1) for part in decision.split())


def _config_from_trace(decision: str) -> dict:
    raw = _fields(decision)
    out: dict[str, Any] = {}
    for key, value in raw.items():
        if key == "mode":
            out[key] = value
        elif key == "drop_probability":
            out[key] = float(value)
        else:
            out[key] = int(value)
    return out


def metrics_from_trace(lines: Iterable[str]) -> Metrics:
    """Rebuild run metrics from trace lines alone.

    Records are per submission label. When several labels carry byte-identical
    transactions, the earliest label owns the transaction's outcome and the
    later ones count as Invalidated replays.
    """
    lines = list(lines)
    config: dict = {}
    txs: dict[str, TxRecord] = {}
    owner: dict[str, str] = {}
    confirm_time: dict[str, int] = {}
    dropped: set[str] = set()
    resubmitted: set[str] = set()
    outcome: dict[str, str] = {}
    occupancy: list[int] = []
    for line in lines:
        r = json.loads(line)
        kind, ident = r["kind"], r["id"]
        if kind == "config":
            config = _config_from_trace(r["decision"])
        elif kind == "submit":
            f = _fields(r["decision"])
            txs[f["label"]] = TxRecord(f["label"], ident, f["sender"], r["time"])
            owner.setdefault(ident, f["label"])
        elif kind == "drop":
            dropped.add(ident)
        elif kind == "resubmit":
            resubmitted.add(ident)
        elif kind == "produce":
            occupancy.append(int(_fields(r["decision"])["pool"]))
        elif kind == "confirm":
            confirm_time.setdefault(ident, r["time"])
        elif kind == "evict" and r["decision"] in ("Invalidated", "Expired"):
            outcome.setdefault(ident, r["decision"])
        elif kind == "deliver" and r["decision"] in ("Replay", "Malformed", "UnknownAccount"):
            outcome.setdefault(ident, "Invalidated")
    for label, rec in txs.items():
        ident = rec.id
        if owner[ident] != label:
            rec.status = "Invalidated"
        elif ident in confirm_time:
            rec.status = "Confirmed"
            rec.confirm_time = confirm_time[ident]
        elif ident in outcome:
            rec.status = outcome[ident]
        elif ident in dropped and ident not in resubmitted:
            rec.status = "Dropped"
        else:
            rec.status = "Stalled"
    return Metrics(
        config=config,
        transactions=list(txs.values()),
        blocks_produced=len(occupancy),
        mean_mempool_occupancy=float(np.mean(occupancy)) if occupancy else 0.0,
        trace_hash=trace_hash(lines),
    )


@dataclass(frozen=True)
class ProbeEntry:
    label: str
    tag: Timestamp
    submit_time: int
    confirmable_time: Optional[int]
    confirmable_at: Optional[tuple[int, int]]
    confirmed_time: Optional[int]
    confirmed_at: Optional[tuple[int, int]]


def epoch_jump_probe(scenario: Scenario, config: SimConfig) -> dict[str, ProbeEntry]:
    """Run ``scenario`` in BVC mode and return its confirmability timeline."""
    if config.mode is not Mode.BVC:
        raise ValueError("epoch_jump_probe requires BVC mode")
    return confirmability_timeline(run(scenario, config))


def confirmability_timeline(result: SimResult) -> dict[str, ProbeEntry]:
    """When each transaction first became confirmable on the canonical chain.

    Ledger positions are ``(height, i)``: the state after the first ``i``
    transactions of block ``height``; genesis is ``(0, 0)``. A transaction
    included at position ``(h, i)`` was applied to the state at that position.
    The reported time is never earlier than the submission time.
    """
    if result.genesis.mode is not Mode.BVC:
        raise ValueError("confirmability timeline requires a BVC run")
    submit = {t.label: t.submit_time for t in result.metrics.transactions}
    label_of = {tx.id: label for label, tx in result.transactions.items()}
    first: dict[str, tuple[int, tuple[int, int]]] = {}
    included: dict[str, tuple[int, tuple[int, int]]] = {}

    def scan(ledger: Ledger, time: int, pos: tuple[int, int]) -> None:
        for label, tx in result.transactions.items():
            if label in first:
                continue
            decision = confirmability(tx.tag, ledger.ordering(tx.sender))
            if isinstance(decision, Confirmable):
                first[label] = (time, pos)

    ledger = result.genesis.copy()
    scan(ledger, 0, (0, 0))
    for time, block in result.chain:
        for i, tx in enumerate(block.transactions):
            included[label_of[tx.id]] = (time, (block.height, i))
            ledger.apply(tx, block.producer)
            scan(ledger, time, (block.height, i + 1))

    out = {}
    for label, tx in result.transactions.items():
        hit = first.get(label)
        conf = included.get(label)
        out[label] = ProbeEntry(
            label=label,
            tag=tx.tag,
            submit_time=submit[label],
            confirmable_time=max(hit[0], submit[label]) if hit else None,
            confirmable_at=hit[1] if hit else None,
            confirmed_time=conf[0] if conf else None,
            confirmed_at=conf[1] if conf else None,
        )
    return out
