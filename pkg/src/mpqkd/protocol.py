"""Monte Carlo prepare-and-measure simulation with optional measurement protection.

Per pulse: Alice prepares a state, optionally conjugates it by a randomly
chosen V_j, one Pauli error is drawn from the channel, Bob undoes V_j and
measures. A pulse reaches Bob's detectors with probability
10^(-(loss_db + receiver_loss_db)/10) * detector_efficiency; each of the two
detectors in the measured basis also fires on its own with the dark-count
probability. Only rounds with exactly one click are kept.

Pulses that neither arrive nor dark-click leave no trace, so they are
accounted for by drawing counts instead of being simulated one by one. Every
pulse that produces a click is simulated individually.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator, Literal, NamedTuple, Sequence

import numpy as np

from .channels import PauliChannel
from .discrimination import guess_prob_through, m0plus, protected_channel, s0plus
from .errors import InsufficientBits
from .qubit import PAULIS
from .security import mp_qber
from .twirl import TwirlSet

Protocol = Literal["bb84", "two-state"]

DEFAULT_EFFICIENCY = 0.5
DEFAULT_RECEIVER_LOSS_DB = 8.0
# 500 counts/s per detector at a 100 MHz gate rate.
DEFAULT_DARK_COUNT_PROB = 500 / 100e6

CHUNK = 1 << 20

_S = 1 / math.sqrt(2)
# Alice's S4 states in the order |0>, |1>, |+>, |->; index = 2 * basis + bit.
_BB84_KETS = np.array([[1, 0], [0, 1], [_S, _S], [_S, -_S]], dtype=complex)
# Bob's outcome-0 vector for basis Z (0) and X (1).
_BASIS0 = np.array([[1, 0], [_S, _S]], dtype=complex)
_TWO_STATE_KETS = np.array([[1, 0], [_S, _S]], dtype=complex)


def photon_number_loss_db(mean_photon_number: float) -> float:
    """Attenuation equivalent to a weak coherent pulse being non-empty."""
    return -10 * math.log10(-math.expm1(-mean_photon_number))


@dataclass(frozen=True)
class SimulationConfig:
    protocol: Protocol = "bb84"
    n_pulses: int = 1_000_000
    channel: PauliChannel = field(default_factory=PauliChannel.identity)
    protection: TwirlSet | None = None
    loss_db: float = 0.0
    receiver_loss_db: float = DEFAULT_RECEIVER_LOSS_DB
    detector_efficiency: float = DEFAULT_EFFICIENCY
    dark_count_prob: float = DEFAULT_DARK_COUNT_PROB
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.protocol not in ("bb84", "two-state"):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if int(self.n_pulses) < 1:
            raise ValueError("n_pulses must be at least 1")
        if self.loss_db < 0:
            raise ValueError("loss_db must be nonnegative")
        if self.receiver_loss_db < 0:
            raise ValueError("receiver_loss_db must be nonnegative")
        for name in ("detector_efficiency", "dark_count_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be a probability")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if int(self.workers) < 1:
            raise ValueError("workers must be at least 1")

    @property
    def survival(self) -> float:
        return 10 ** (-(self.loss_db + self.receiver_loss_db) / 10) * self.detector_efficiency

    def ideal(self) -> SimulationConfig:
        """Same config with lossless, noiseless detection."""
        return replace(self, loss_db=0.0, receiver_loss_db=0.0, detector_efficiency=1.0, dark_count_prob=0.0)


class SiftedRecord(NamedTuple):
    alice_bit: int
    bob_bit: int
    basis: str
    twirl_index: int | None


@dataclass(frozen=True, eq=False)
class SiftedRecords:
    """Column store of sifted rounds. ``twirl_index`` is -1 when unprotected."""

    alice_bits: np.ndarray
    bob_bits: np.ndarray
    basis: np.ndarray
    twirl_index: np.ndarray

    def __len__(self):
        return len(self.alice_bits)

    def __iter__(self) -> Iterator[SiftedRecord]:
        for a, b, bs, j in zip(self.alice_bits, self.bob_bits, self.basis, self.twirl_index):
            yield SiftedRecord(int(a), int(b), "ZX"[bs], None if j < 0 else int(j))

    @classmethod
    def from_bits(cls, alice_bits, bob_bits) -> SiftedRecords:
        a = np.asarray(alice_bits, dtype=np.uint8)
        b = np.asarray(bob_bits, dtype=np.uint8)
        zeros = np.zeros(len(a), dtype=np.uint8)
        return cls(a, b, zeros, np.full(len(a), -1, dtype=np.int16))

    @classmethod
    def concat(cls, parts: Sequence[SiftedRecords]) -> SiftedRecords:
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("alice_bits", "bob_bits", "basis", "twirl_index")))

    def take(self, idx) -> SiftedRecords:
        return SiftedRecords(self.alice_bits[idx], self.bob_bits[idx], self.basis[idx], self.twirl_index[idx])


@dataclass(frozen=True, eq=False)
class SimulationReport:
    n_pulses: int
    n_detected: int
    n_sifted: int
    n_errors: int
    qber_estimate: float
    qber_stderr: float
    analytic_qber: float
    records: SiftedRecords | None = None

    def as_row(self) -> dict:
        return {
            "n_pulses": self.n_pulses,
            "n_detected": self.n_detected,
            "n_sifted": self.n_sifted,
            "n_errors": self.n_errors,
            "qber_estimate": self.qber_estimate,
            "qber_stderr": self.qber_stderr,
            "analytic_qber": self.analytic_qber,
        }


# -- Born-rule tables ---------------------------------------------------------------


def _twirl_mats(cfg: SimulationConfig) -> np.ndarray:
    if cfg.protection is None:
        return np.eye(2, dtype=complex)[None]
    return cfg.protection.matrices()


def _outcome0_table(cfg: SimulationConfig) -> np.ndarray:
    """P(outcome 0) indexed [state, twirl, pauli, bob_basis] for the actual pulse path."""
    vs = _twirl_mats(cfg)
    paulis = np.stack(PAULIS)
    if cfg.protocol == "bb84":
        kets, meas = _BB84_KETS, _BASIS0
    else:
        kets, meas = _TWO_STATE_KETS, np.array([[math.cos(math.pi / 8), -math.sin(math.pi / 8)]], dtype=complex)
    # Kets at Bob after V_j, Pauli_k, V_j^dag.
    ops = np.einsum("jba,kbc,jcd->jkad", vs.conj(), paulis, vs)
    out = np.einsum("jkad,sd->sjka", ops, kets)
    amp = np.einsum("mb,sjkb->sjkm", meas.conj(), out)
    return np.abs(amp) ** 2


# -- worker ------------------------------------------------------------------------


@dataclass
class _Tally:
    n_detected: int = 0
    n_sifted: int = 0
    n_errors: int = 0
    records: list = field(default_factory=list)

    def merge(self, other: _Tally) -> None:
        self.n_detected += other.n_detected
        self.n_sifted += other.n_sifted
        self.n_errors += other.n_errors
        self.records.extend(other.records)


def _simulate_clicks(cfg, table, rng, n, signal: bool, keep_records: bool) -> _Tally:
    """Simulate ``n`` clicking pulses; signal pulses use the quantum path, others dark counts only."""
    tally = _Tally()
    bb84 = cfg.protocol == "bb84"
    n_twirl = table.shape[1]
    protected = cfg.protection is not None
    for start in range(0, n, CHUNK):
        m = min(CHUNK, n - start)
        if bb84:
            a_basis = rng.integers(0, 2, m, dtype=np.uint8)
            a_bit = rng.integers(0, 2, m, dtype=np.uint8)
            b_basis = rng.integers(0, 2, m, dtype=np.uint8)
            state = 2 * a_basis + a_bit
        else:
            state = rng.integers(0, 2, m, dtype=np.uint8)
            a_basis = b_basis = np.zeros(m, dtype=np.uint8)
            a_bit = state
        j = rng.integers(0, n_twirl, m) if protected else np.zeros(m, dtype=np.int64)
        if signal:
            k = rng.choice(4, size=m, p=cfg.channel.p)
            p0 = table[state, j, k, b_basis if bb84 else 0]
            outcome = (rng.random(m) >= p0).astype(np.uint8)
            # The idle detector dark-clicking makes a double click.
            kept = rng.random(m) >= cfg.dark_count_prob
        else:
            outcome = rng.integers(0, 2, m, dtype=np.uint8)
            kept = np.ones(m, dtype=bool)
        sifted = kept & (a_basis == b_basis)
        tally.n_detected += int(kept.sum())
        tally.n_sifted += int(sifted.sum())
        tally.n_errors += int(np.count_nonzero(outcome[sifted] != a_bit[sifted]))
        if keep_records:
            tw = j[sifted].astype(np.int16) if protected else np.full(int(sifted.sum()), -1, dtype=np.int16)
            tally.records.append(SiftedRecords(a_bit[sifted], outcome[sifted], a_basis[sifted], tw))
    return tally


def _worker(cfg: SimulationConfig, table: np.ndarray, n_pulses: int, seed_seq: np.random.SeedSequence, keep_records: bool) -> _Tally:
    rng = np.random.default_rng(seed_seq)
    d = cfg.dark_count_prob
    n_signal = int(rng.binomial(n_pulses, cfg.survival))
    # Lost pulses: only exactly one of the two dark detectors firing yields a click.
    n_dark = int(rng.binomial(n_pulses - n_signal, 2 * d * (1 - d)))
    tally = _simulate_clicks(cfg, table, rng, n_signal, True, keep_records)
    tally.merge(_simulate_clicks(cfg, table, rng, n_dark, False, keep_records))
    if keep_records and tally.records:
        recs = SiftedRecords.concat(tally.records)
        # Signal and dark rounds are i.i.d.; shuffle to restore an arrival order.
        tally.records = [recs.take(rng.permutation(len(recs)))]
    return tally


def _split(n: int, workers: int) -> list[int]:
    q, r = divmod(n, workers)
    return [q + (i < r) for i in range(workers)]


def run(cfg: SimulationConfig, keep_records: bool = False) -> SimulationReport:
    """Run the Monte Carlo. Results are fixed by ``(seed, workers)``."""
    table = _outcome0_table(cfg)
    seeds = np.random.SeedSequence(int(cfg.seed)).spawn(cfg.workers)
    shares = _split(int(cfg.n_pulses), cfg.workers)
    jobs = list(zip(shares, seeds))
    if cfg.workers == 1:
        tallies = [_worker(cfg, table, n, s, keep_records) for n, s in jobs]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            tallies = list(pool.map(lambda job: _worker(cfg, table, job[0], job[1], keep_records), jobs))
    total = _Tally()
    for t in tallies:
        total.merge(t)
    n = total.n_sifted
    if n > 0:
        q = total.n_errors / n
        stderr = math.sqrt(q * (1 - q) / n)
    else:
        q = stderr = math.nan
    records = SiftedRecords.concat(total.records) if keep_records and total.records else None
    return SimulationReport(int(cfg.n_pulses), total.n_detected, n, total.n_errors, q, stderr, analytic_qber(cfg), records)


# -- analytic model ------------------------------------------------------------------


def signal_qber(cfg: SimulationConfig) -> float:
    """Error rate of rounds triggered by the signal itself."""
    c = cfg.channel
    if cfg.protocol == "two-state":
        return 1 - guess_prob_through(s0plus(), c, cfg.protection is not None, m0plus(), cfg.protection)
    if cfg.protection is None:
        # Z-basis errors come from X and Y flips, X-basis errors from Z and Y flips.
        return 0.5 * ((c.px + c.py) + (c.pz + c.py))
    if cfg.protection.kind in ("three-element", "full-design"):
        return mp_qber(c)
    t = protected_channel(c, cfg.protection)
    return 0.5 * ((t.px + t.py) + (t.pz + t.py))


def click_rates(cfg: SimulationConfig) -> tuple[float, float]:
    """Per-pulse probabilities of a kept, sifted signal click and dark-only click."""
    s, d = cfg.survival, cfg.dark_count_prob
    sift = 0.5 if cfg.protocol == "bb84" else 1.0
    return sift * s * (1 - d), sift * (1 - s) * 2 * d * (1 - d)


def analytic_qber(cfg: SimulationConfig) -> float:
    r_s, r_d = click_rates(cfg)
    if r_s + r_d == 0:
        return math.nan
    return (r_s * signal_qber(cfg) + 0.5 * r_d) / (r_s + r_d)


def pulses_for_sifted(cfg: SimulationConfig, n_sifted: int) -> int:
    """Pulse budget whose expected sifted yield is ``n_sifted``."""
    r_s, r_d = click_rates(cfg)
    return int(math.ceil(n_sifted / (r_s + r_d)))


# -- advantage distillation -----------------------------------------------------------


@dataclass(frozen=True)
class AdConfig:
    k: int

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError("block size k must be at least 1")


@dataclass(frozen=True)
class AdStats:
    n_blocks: int
    n_accepted: int
    n_errors: int
    acceptance_rate: float
    post_error: float
    acceptance_stderr: float
    post_error_stderr: float


def advantage_distillation(
    bits: SiftedRecords | Sequence[SiftedRecord], cfg: AdConfig, seed: int = 0
) -> tuple[np.ndarray, AdStats]:
    """Block-wise two-way post-selection on sifted bits.

    For each consecutive k-block Alice draws a secret bit s_A and announces
    a_i = s_A xor m_i^A; Bob computes b_i = a_i xor m_i^B and keeps the block
    only if all b_i agree, taking s_B = b_1. The trailing partial block is
    dropped. Returns the accepted ``(s_A, s_B)`` pairs as an (m, 2) array.
    """
    if not isinstance(bits, SiftedRecords):
        bits = SiftedRecords.from_bits([r.alice_bit for r in bits], [r.bob_bit for r in bits])
    k = cfg.k
    n_blocks = len(bits) // k
    if n_blocks == 0:
        raise InsufficientBits(f"need at least k={k} sifted bits, got {len(bits)}")
    rng = np.random.default_rng(seed)
    ma = bits.alice_bits[: n_blocks * k].reshape(n_blocks, k)
    mb = bits.bob_bits[: n_blocks * k].reshape(n_blocks, k)
    s_a = rng.integers(0, 2, n_blocks, dtype=np.uint8)
    a = s_a[:, None] ^ ma
    b = a ^ mb
    accepted = np.all(b == b[:, :1], axis=1)
    pairs = np.column_stack([s_a[accepted], b[accepted, 0]])
    n_acc = int(accepted.sum())
    n_err = int(np.count_nonzero(pairs[:, 0] != pairs[:, 1]))
    acc = n_acc / n_blocks
    err = n_err / n_acc if n_acc else math.nan
    stats = AdStats(
        n_blocks,
        n_acc,
        n_err,
        acc,
        err,
        math.sqrt(acc * (1 - acc) / n_blocks),
        math.sqrt(err * (1 - err) / n_acc) if n_acc else math.nan,
    )
    return pairs, stats


def ad_exact_stats(eps, k: int):
    """Closed-form acceptance probability and post-selection error rate.

    Works with floats or ``fractions.Fraction`` inputs.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not 0 <= eps <= 1:
        raise ValueError("eps must be a probability")
    wrong = eps**k
    accept = wrong + (1 - eps) ** k
    return accept, wrong / accept


def ad_enumerated_stats(eps, k: int):
    """Same quantities by summing over all 2^k error patterns of a block."""
    accept = 0 * eps
    wrong = 0 * eps
    for pattern in itertools.product((0, 1), repeat=k):
        w = sum(pattern)
        prob = eps**w * (1 - eps) ** (k - w)
        # b_i = s_A xor e_i, so the block survives iff every e_i is equal.
        if w in (0, k):
            accept += prob
            if w == k:
                wrong += prob
    return accept, wrong / accept


def iid_records(eps: float, n: int, rng: np.random.Generator) -> SiftedRecords:
    """Uniform Alice bits with Bob's copy flipped independently with probability eps."""
    a = rng.integers(0, 2, n, dtype=np.uint8)
    flips = (rng.random(n) < eps).astype(np.uint8)
    return SiftedRecords.from_bits(a, a ^ flips)
