"""Property suites run at 1000 cases each by test_acceptance.py."""

import itertools
import random

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from bvclock.core import (
    AlreadyCovered,
    BitMask,
    ClockState,
    Ordering,
    PastEpoch,
    Timestamp,
    compare,
    confirmability,
    join,
    leq,
    merge,
    state_lt,
)
from bvclock.ledger import Ledger, Mode, Verdict, address_from_name
from bvclock.mempool import Mempool
from bvclock.wallet import Wallet

from . import oracles
from .helpers import BOB, MINER

CASES = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])

widths = st.sampled_from([1, 3, 8, 64])


def masks(k):
    return st.integers(0, (1 << k) - 1).map(lambda v: BitMask(v, k))


def mask_triples():
    return widths.flatmap(lambda k: st.tuples(masks(k), masks(k), masks(k)))


@CASES
@given(mask_triples())
def partial_order_laws(abc):
    a, b, c = abc
    assert leq(a, a)
    if leq(a, b) and leq(b, a):
        assert a == b
    if leq(a, b) and leq(b, c):
        assert leq(a, c)
    # compare agrees with leq at equal epochs
    o = compare(Timestamp(0, a), Timestamp(0, b))
    assert (o in (Ordering.BEFORE, Ordering.EQUAL)) == leq(a, b)


@CASES
@given(mask_triples())
def semilattice_laws(abc):
    a, b, c = abc
    j = join(a, b)
    assert j == join(b, a)
    assert join(join(a, b), c) == join(a, join(b, c))
    assert join(a, a) == a
    assert leq(a, j) and leq(b, j)
    # anything above both is above the join
    if leq(a, c) and leq(b, c):
        assert leq(j, c)
    # and nothing strictly between the inputs and the join bounds both
    if a.width <= 3:
        for bits in oracles.all_masks(a.width):
            d = BitMask.from_bits(bits)
            if leq(a, d) and leq(b, d) and leq(d, j):
                assert d == j


@st.composite
def confirmable_pairs(draw):
    k = draw(st.sampled_from([1, 3, 8, 64]))
    epoch = draw(st.integers(0, 2**32))
    confirmed = draw(masks(k).filter(lambda m: not m.is_full()))
    free = [i for i in range(k) if not confirmed.value >> i & 1]
    own = BitMask.bit(draw(st.sampled_from(free)), k)
    deps = draw(masks(k)) & confirmed
    return ClockState(epoch, confirmed), Timestamp(epoch, own | deps)


@CASES
@given(confirmable_pairs())
def merge_monotonicity(pair):
    state, ts = pair
    after = merge(state, ts)
    assert state_lt(state, after)
    before_ts = Timestamp(state.epoch, state.confirmed)
    after_ts = Timestamp(after.epoch, after.confirmed)
    assert compare(before_ts, after_ts) is Ordering.BEFORE
    assert isinstance(confirmability(ts, after), (AlreadyCovered, PastEpoch))


SENDERS = [address_from_name(f"prop-{i}") for i in range(3)]


@st.composite
def workloads(draw, max_txs=12):
    """A list of (sender index, value, fee, depend-on-previous) issues."""
    n = draw(st.integers(1, max_txs))
    return [
        (draw(st.integers(0, 2)), draw(st.integers(0, 5)), draw(st.integers(0, 3)), draw(st.booleans()))
        for _ in range(n)
    ]


def issue(workload, mode, width=3):
    wallets = {a: Wallet(a, mode, width) for a in SENDERS}
    last = {}
    txs = []
    for who, value, fee, chained in workload:
        sender = SENDERS[who]
        deps = {last[sender]} if chained and sender in last else set()
        tx = wallets[sender].issue(BOB, value, fee, deps)
        last[sender] = tx.id
        txs.append(tx)
    return txs


@CASES
@given(workloads(), st.sampled_from(list(Mode)), st.integers(0, 2**32))
def replay_rejection(workload, mode, seed):
    """Every applied transaction is a Replay afterwards, and balances are conserved."""
    ledger = Ledger.genesis(mode, {a: 20 for a in SENDERS}, 3)
    total = ledger.total_supply()
    pool = Mempool(mode, 3)
    rng = random.Random(seed)
    txs = issue(workload, mode)
    rng.shuffle(txs)
    for tx in txs:
        pool.insert(ledger, tx)
    applied = []
    while True:
        chosen = pool.select_for_block(ledger, rng.randint(1, 4), MINER)
        if not chosen:
            break
        block = ledger.next_block(chosen, MINER)
        ledger.apply_block(block)
        pool.on_block_applied(ledger, block)
        applied.extend(chosen)
        assert ledger.total_supply() == total
        assert all(a.balance >= 0 for a in ledger.accounts.values())
        for tx in applied:
            assert ledger.validate(tx) is Verdict.REPLAY


@CASES
@given(workloads(max_txs=10), st.sampled_from(list(Mode)), st.integers(0, 2**32))
def balance_conservation(workload, mode, seed):
    """Random valid blocks, including underfunded senders, conserve the total."""
    rng = random.Random(seed)
    balances = {a: rng.randint(0, 12) for a in SENDERS}
    ledger = Ledger.genesis(mode, balances, 3)
    total = ledger.total_supply()
    txs = issue(workload, mode)
    pending = list(txs)
    while pending:
        rng.shuffle(pending)
        block_txs = []
        staged = ledger.copy()
        for tx in pending:
            if staged.validate(tx) is Verdict.VALID and rng.random() < 0.8:
                staged.apply(tx, MINER)
                block_txs.append(tx)
        if not block_txs:
            break
        ledger.apply_block(ledger.next_block(block_txs, MINER))
        pending = [t for t in pending if t not in block_txs]
        assert ledger.total_supply() == total
        assert min(a.balance for a in ledger.accounts.values()) >= 0


ALICE = SENDERS[0]


@st.composite
def compatible_sets(draw):
    """A single-sender wallet DAG (k=3) plus the subset actually handed to validators."""
    n = draw(st.integers(1, 5))
    deps = {i: (set(draw(st.sets(st.integers(0, i - 1), max_size=2))) if i else set()) for i in range(n)}
    present = draw(st.sets(st.integers(0, n - 1), min_size=1))
    limits = draw(st.lists(st.integers(1, 3), min_size=1, max_size=4))
    return deps, present, limits


def pack_until_stable(txs, order, limits):
    ledger = Ledger.genesis(Mode.BVC, {ALICE: 10**6}, 3)
    pool = Mempool(Mode.BVC, 3)
    for i in order:
        pool.insert(ledger, txs[i])
    confirmed = set()
    for r in itertools.count():
        chosen = pool.select_for_block(ledger, limits[r % len(limits)], MINER)
        if not chosen:
            return frozenset(confirmed)
        block = ledger.next_block(chosen, MINER)
        ledger.apply_block(block)
        pool.on_block_applied(ledger, block)
        confirmed.update(tx.id for tx in chosen)


@CASES
@given(compatible_sets())
def mempool_confluence(case):
    deps, present, limits = case
    wallet = Wallet(ALICE, Mode.BVC, 3)
    txs = {}
    for i in sorted(deps):
        txs[i] = wallet.issue(BOB, 1, 1 + i % 3, {txs[d].id for d in deps[i]})
    expected = frozenset(txs[i].id for i in oracles.confirmed_fixpoint(present, deps, 3, sorted(deps)))
    outcomes = {pack_until_stable(txs, perm, limits) for perm in itertools.permutations(sorted(present))}
    assert outcomes == {expected}


@st.composite
def chain_workloads(draw):
    counts = draw(st.lists(st.integers(0, 7), min_size=1, max_size=3))
    fees = draw(st.lists(st.integers(0, 5), min_size=sum(counts), max_size=sum(counts)))
    limits = draw(st.lists(st.integers(1, 4), min_size=1, max_size=3))
    seed = draw(st.integers(0, 2**32))
    return counts, fees, limits, seed


def confirmation_order(mode, counts, fees, limits, seed):
    width = 3
    wallets = {a: Wallet(a, mode, width) for a in SENDERS}
    per_sender: dict[bytes, list[bytes]] = {}
    txs = []
    f = iter(fees)
    for who, n in enumerate(counts):
        sender = SENDERS[who]
        prev = set()
        for j in range(n):
            tx = wallets[sender].issue(BOB, 1, next(f), prev)
            prev = {tx.id}
            txs.append((sender, j, tx))
    random.Random(seed).shuffle(txs)
    ledger = Ledger.genesis(mode, {a: 1000 for a in SENDERS}, width)
    pool = Mempool(mode, width)
    for _, _, tx in txs:
        pool.insert(ledger, tx)
    index = {tx.id: (sender, j) for sender, j, tx in txs}
    for r in itertools.count():
        chosen = pool.select_for_block(ledger, limits[r % len(limits)], MINER)
        if not chosen:
            break
        block = ledger.next_block(chosen, MINER)
        ledger.apply_block(block)
        pool.on_block_applied(ledger, block)
        for tx in chosen:
            sender, j = index[tx.id]
            per_sender.setdefault(sender, []).append(j)
    return per_sender


@CASES
@given(chain_workloads())
def chain_equivalence(case):
    """With every transaction depending on the previous one, both modes confirm in issue order."""
    counts, fees, limits, seed = case
    bvc = confirmation_order(Mode.BVC, counts, fees, limits, seed)
    nonce = confirmation_order(Mode.NONCE, counts, fees, limits, seed)
    assert bvc == nonce
    for who, n in enumerate(counts):
        assert bvc.get(SENDERS[who], []) == list(range(n))


SUITES = {
    "partial-order laws": partial_order_laws,
    "semilattice laws (join = least upper bound)": semilattice_laws,
    "merge monotonicity": merge_monotonicity,
    "replay rejection in both modes": replay_rejection,
    "conservation of total balance": balance_conservation,
    "mempool confluence vs permutation oracle (k=3)": mempool_confluence,
    "chain workload BVC/nonce order equivalence": chain_equivalence,
}
