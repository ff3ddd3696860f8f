"""Binary vector clocks: partially ordered transaction tags for account-based ledgers."""

from .core import (
    AlreadyCovered,
    BitMask,
    ClockState,
    Confirmable,
    FutureEpoch,
    MissingDependencies,
    Ordering,
    PastEpoch,
    Timestamp,
    compare,
    confirmability,
    enumerate_lattice,
    join,
    leq,
    merge,
)
from .ledger import Block, Ledger, Mode, Transaction, Verdict, address_from_name
from .mempool import Admission, Eviction, Mempool
from .simnet import SimConfig, epoch_jump_probe, run
from .wallet import Wallet
from .workload import GenParams, Scenario, generate, load

__version__ = "0.1.0"
