"""Scenario files and the seeded workload generator.

Scenario files are JSON documents with top-level keys ``width``,
``accounts``, ``submissions``, ``faults`` and an optional ``config``.
See docs/scenario-format.md for the field reference.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .core import BitMask, ClockState, Timestamp
from .ledger import Tag, address_from_name, parse_address

CONFIG_KEYS = frozenset(
    {
        "node_count",
        "block_interval",
        "latency_min",
        "latency_max",
        "drop_probability",
        "max_block_txs",
        "horizon",
        "ttl_blocks",
    }
)


class ScenarioError(ValueError):
    """Scenario failed to parse or validate. ``errors`` holds one message per problem."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class AccountSpec:
    address: bytes
    balance: int
    nonce: Optional[int] = None
    clock: Optional[ClockState] = None


@dataclass(frozen=True)
class Submission:
    time: int
    label: str
    sender: bytes
    recipient: bytes
    value: int
    fee: int
    deps: tuple[str, ...] = ()
    tag: Optional[Tag] = None


@dataclass(frozen=True)
class Drop:
    label: str
    resubmit_at: Optional[int] = None


@dataclass(frozen=True)
class Delay:
    label: str
    ms: int


Fault = Union[Drop, Delay]


@dataclass(frozen=True)
class Scenario:
    width: int
    accounts: tuple[AccountSpec, ...] = ()
    submissions: tuple[Submission, ...] = ()
    faults: tuple[Fault, ...] = ()
    config: dict[str, Any] = field(default_factory=dict)

    def submission(self, label: str) -> Submission:
        for s in self.submissions:
            if s.label == label:
                return s
        raise KeyError(label)

    def dependency_edges(self) -> int:
        return sum(len(s.deps) for s in self.submissions)


# --- validation ---------------------------------------------------------


def validate(s: Scenario) -> Scenario:
    """Check every scenario invariant; raise ScenarioError listing all problems."""
    errors: list[str] = []
    if not isinstance(s.width, int) or not 1 <= s.width <= 256:
        errors.append(f"width: must be an integer in 1..256, got {s.width!r}")
    declared: set[bytes] = set()
    for i, a in enumerate(s.accounts):
        if a.address in declared:
            errors.append(f"accounts[{i}]: duplicate address {a.address.hex()}")
        declared.add(a.address)
        if a.balance < 0:
            errors.append(f"accounts[{i}].balance: must be non-negative")
        if a.clock is not None and a.clock.width != s.width:
            errors.append(f"accounts[{i}].clock: width {a.clock.width} != scenario width {s.width}")

    seen: dict[str, int] = {}
    sender_of: dict[str, bytes] = {}
    last_time: dict[bytes, int] = {}
    explicit: dict[bytes, bool] = {}
    for i, sub in enumerate(s.submissions):
        where = f"submissions[{i}]"
        if sub.label in seen:
            errors.append(f"{where}.label: duplicate label {sub.label!r}")
        if sub.time < 0:
            errors.append(f"{where}.time: must be non-negative")
        for who, addr in (("sender", sub.sender), ("recipient", sub.recipient)):
            if addr not in declared:
                errors.append(f"{where}.{who}: undeclared account {addr.hex()}")
        if sub.value < 0 or sub.fee < 0:
            errors.append(f"{where}: value and fee must be non-negative")
        if sub.time < last_time.get(sub.sender, 0):
            errors.append(f"{where}.time: {sub.time} earlier than the sender's previous submission")
        last_time[sub.sender] = max(sub.time, last_time.get(sub.sender, 0))
        for j, dep in enumerate(sub.deps):
            if dep == sub.label:
                errors.append(f"{where}.deps[{j}]: {dep!r} depends on itself")
            elif dep not in seen:
                errors.append(f"{where}.deps[{j}]: unknown or later label {dep!r}")
            elif sender_of[dep] != sub.sender:
                errors.append(f"{where}.deps[{j}]: {dep!r} belongs to another sender")
        has_tag = sub.tag is not None
        if explicit.setdefault(sub.sender, has_tag) != has_tag:
            errors.append(f"{where}.tag: a sender must tag all of its submissions or none")
        if isinstance(sub.tag, Timestamp) and sub.tag.width != s.width:
            errors.append(f"{where}.tag: width {sub.tag.width} != scenario width {s.width}")
        if isinstance(sub.tag, Timestamp) and not sub.tag.bits:
            errors.append(f"{where}.tag: empty bit array")
        seen.setdefault(sub.label, i)
        sender_of.setdefault(sub.label, sub.sender)

    faulted: set[str] = set()
    for i, f in enumerate(s.faults):
        where = f"faults[{i}]"
        if f.label not in seen:
            errors.append(f"{where}.label: unknown label {f.label!r}")
            continue
        if f.label in faulted:
            errors.append(f"{where}: {f.label!r} already has a fault")
        faulted.add(f.label)
        if isinstance(f, Delay) and f.ms < 0:
            errors.append(f"{where}.ms: must be non-negative")
        if isinstance(f, Drop) and f.resubmit_at is not None:
            if f.resubmit_at < s.submissions[seen[f.label]].time:
                errors.append(f"{where}.resubmit_at: before the original submission")

    for key, value in s.config.items():
        if key not in CONFIG_KEYS:
            errors.append(f"config.{key}: unknown key")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append(f"config.{key}: expected a number, got {value!r}")
    if errors:
        raise ScenarioError(errors)
    return s


# --- file format --------------------------------------------------------


def _tag_to_json(tag: Tag) -> dict:
    if isinstance(tag, Timestamp):
        return {"epoch": tag.epoch, "bits": str(tag.bits)}
    return {"nonce": tag}


def _tag_from_json(obj: dict) -> Tag:
    if "nonce" in obj:
        return int(obj["nonce"])
    return Timestamp(int(obj["epoch"]), BitMask.parse(obj["bits"]))


def to_dict(s: Scenario) -> dict:
    accounts = []
    for a in s.accounts:
        entry: dict[str, Any] = {"address": a.address.hex(), "balance": a.balance}
        if a.nonce is not None:
            entry["nonce"] = a.nonce
        if a.clock is not None:
            entry["clock"] = {"epoch": a.clock.epoch, "bits": str(a.clock.confirmed)}
        accounts.append(entry)
    submissions = []
    for sub in s.submissions:
        entry = {
            "time": sub.time,
            "label": sub.label,
            "sender": sub.sender.hex(),
            "recipient": sub.recipient.hex(),
            "value": sub.value,
            "fee": sub.fee,
            "deps": list(sub.deps),
        }
        if sub.tag is not None:
            entry["tag"] = _tag_to_json(sub.tag)
        submissions.append(entry)
    faults = []
    for f in s.faults:
        if isinstance(f, Drop):
            entry = {"kind": "drop", "label": f.label}
            if f.resubmit_at is not None:
                entry["resubmit_at"] = f.resubmit_at
        else:
            entry = {"kind": "delay", "label": f.label, "ms": f.ms}
        faults.append(entry)
    doc = {"width": s.width, "accounts": accounts, "submissions": submissions, "faults": faults}
    if s.config:
        doc["config"] = dict(s.config)
    return doc


def emit(s: Scenario) -> str:
    return json.dumps(to_dict(s), indent=2) + "\n"


def from_dict(doc: Any) -> Scenario:
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise ScenarioError(["top level: expected an object"])
    for key in doc:
        if key not in ("width", "accounts", "submissions", "faults", "config"):
            errors.append(f"{key}: unknown top-level key")
    if "width" not in doc:
        errors.append("width: missing")

    def convert(where: str, fn, *args):
        try:
            return fn(*args)
        except (KeyError, TypeError, ValueError) as exc:
            detail = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
            errors.append(f"{where}: {detail}")
            return None

    accounts = []
    for i, a in enumerate(doc.get("accounts", [])):
        acct = convert(
            f"accounts[{i}]",
            lambda a: AccountSpec(
                parse_address(a["address"]),
                int(a["balance"]),
                int(a["nonce"]) if "nonce" in a else None,
                ClockState.parse(int(a["clock"]["epoch"]), a["clock"]["bits"]) if "clock" in a else None,
            ),
            a,
        )
        if acct:
            accounts.append(acct)
    submissions = []
    for i, sub in enumerate(doc.get("submissions", [])):
        parsed = convert(
            f"submissions[{i}]",
            lambda sub: Submission(
                int(sub["time"]),
                str(sub["label"]),
                parse_address(sub["sender"]),
                parse_address(sub["recipient"]),
                int(sub["value"]),
                int(sub["fee"]),
                tuple(str(d) for d in sub.get("deps", [])),
                _tag_from_json(sub["tag"]) if "tag" in sub else None,
            ),
            sub,
        )
        if parsed:
            submissions.append(parsed)
    faults: list[Fault] = []
    for i, f in enumerate(doc.get("faults", [])):
        kind = f.get("kind") if isinstance(f, dict) else None
        if kind == "drop":
            fault = convert(
                f"faults[{i}]",
                lambda f: Drop(str(f["label"]), int(f["resubmit_at"]) if "resubmit_at" in f else None),
                f,
            )
        elif kind == "delay":
            fault = convert(f"faults[{i}]", lambda f: Delay(str(f["label"]), int(f["ms"])), f)
        else:
            errors.append(f"faults[{i}].kind: expected 'drop' or 'delay', got {kind!r}")
            fault = None
        if fault:
            faults.append(fault)
    config = doc.get("config", {})
    if not isinstance(config, dict):
        errors.append("config: expected an object")
        config = {}
    if errors:
        raise ScenarioError(errors)
    return validate(Scenario(doc["width"], tuple(accounts), tuple(submissions), tuple(faults), dict(config)))


def loads(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"line {exc.lineno} column {exc.colno}: {exc.msg}"]) from exc
    return from_dict(doc)


def load(path: Union[str, Path]) -> Scenario:
    return loads(Path(path).read_text(encoding="utf-8"))


# --- generator ----------------------------------------------------------


@dataclass(frozen=True)
class GenParams:
    senders: int = 10
    txs: int = 100
    alpha: float = 1.16
    dep_prob: float = 0.0
    value_range: tuple[int, int] = (1, 10)
    fee_range: tuple[int, int] = (1, 10)
    rate: float = 50.0  # submissions per simulated second
    width: int = 8
    block_interval: int = 1000

    def check(self) -> None:
        problems = []
        if self.senders < 0 or self.txs < 0:
            problems.append("senders and txs must be non-negative")
        if self.senders == 0 and self.txs > 0:
            problems.append("cannot generate transactions with zero senders")
        if not self.alpha > 0:
            problems.append("alpha must be positive")
        if not 0.0 <= self.dep_prob <= 1.0:
            problems.append("dep_prob must be in [0, 1]")
        for name, (lo, hi) in (("value_range", self.value_range), ("fee_range", self.fee_range)):
            if not 0 <= lo <= hi:
                problems.append(f"{name} must satisfy 0 <= lo <= hi")
        if not self.rate > 0:
            problems.append("rate must be positive")
        if not 1 <= self.width <= 256:
            problems.append("width must be in 1..256")
        if self.block_interval <= 0:
            problems.append("block_interval must be positive")
        if problems:
            raise ScenarioError(problems)


def pareto_counts(senders: int, total: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Split ``total`` transactions over senders with Pareto-distributed weights.

    Weights are inverse-transform samples of Pareto(alpha, x_m=1), floored and
    capped at ``total``; counts are apportioned by largest remainder.
    """
    if senders == 0:
        return np.zeros(0, dtype=np.int64)
    u = rng.random(senders)
    weights = np.minimum(np.floor((1.0 - u) ** (-1.0 / alpha)), max(total, 1))
    quotas = weights / weights.sum() * total
    counts = np.floor(quotas).astype(np.int64)
    short = total - int(counts.sum())
    # stable sort keeps ties in sender order
    order = np.argsort(-(quotas - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def generate(params: GenParams, seed: int) -> Scenario:
    params.check()
    rng = np.random.default_rng(seed)
    counts = pareto_counts(params.senders, params.txs, params.alpha, rng)
    senders = [address_from_name(f"sender-{i}") for i in range(params.senders)]
    sink = address_from_name("sink")

    slots = np.repeat(np.arange(params.senders), counts)
    slots = rng.permutation(slots)
    vlo, vhi = params.value_range
    flo, fhi = params.fee_range
    values = rng.integers(vlo, vhi + 1, size=len(slots))
    fees = rng.integers(flo, fhi + 1, size=len(slots))
    coins = rng.random(len(slots))

    last_label: dict[int, str] = {}
    submissions = []
    for n, who in enumerate(slots.tolist()):
        label = f"tx{n}"
        deps: tuple[str, ...] = ()
        if who in last_label and coins[n] < params.dep_prob:
            deps = (last_label[who],)
        last_label[who] = label
        submissions.append(
            Submission(
                time=int(math.floor(n * 1000 / params.rate)),
                label=label,
                sender=senders[who],
                recipient=sink,
                value=int(values[n]),
                fee=int(fees[n]),
                deps=deps,
            )
        )
    accounts = [
        AccountSpec(addr, int(counts[i]) * (vhi + fhi)) for i, addr in enumerate(senders)
    ] + [AccountSpec(sink, 0)]
    last = submissions[-1].time if submissions else 0
    config = {"block_interval": params.block_interval, "horizon": last + 20 * params.block_interval}
    return validate(Scenario(params.width, tuple(accounts), tuple(submissions), (), config))


def top_share(counts: np.ndarray, fraction: float = 0.2) -> float:
    """Share of all transactions held by the top ``fraction`` of senders."""
    if counts.sum() == 0:
        return 0.0
    k = max(1, int(round(len(counts) * fraction)))
    return float(np.sort(counts)[::-1][:k].sum() / counts.sum())

