from pathlib import Path

from bvclock.core import ClockState, Timestamp
from bvclock.ledger import Ledger, Mode, Transaction, address_from_name

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

ALICE = address_from_name("alice")
BOB = address_from_name("bob")
CAROL = address_from_name("carol")
MINER = address_from_name("miner")


def bvc_ledger(balance=10, clock="000", epoch=0, width=3):
    return Ledger.genesis(
        Mode.BVC, {ALICE: balance, BOB: 0}, width, {ALICE: ClockState.parse(epoch, clock)}
    )


def nonce_ledger(balance=10, nonce=0):
    return Ledger.genesis(Mode.NONCE, {ALICE: balance, BOB: 0}, ordering={ALICE: nonce})


def btx(bits, epoch=0, value=3, fee=1, sender=ALICE, recipient=BOB):
    return Transaction.create(sender, recipient, value, fee, Timestamp.parse(epoch, bits))


def ntx(nonce, value=1, fee=1, sender=ALICE, recipient=BOB):
    return Transaction.create(sender, recipient, value, fee, nonce)
