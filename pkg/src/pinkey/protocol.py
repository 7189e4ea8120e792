"""Key agreement over the round-robin public channel.

Step one of the key-generation pipeline: every relay establishes one
pairwise key with Alice and one with Bob, then broadcasts the XOR of the
two so that both terminals learn the smaller key of each pair (the
"common message").  Every public bit is logged in a :class:`Transcript`,
which is exactly the eavesdropper's view.

Noisy (doubly-symmetric) pairs are reconciled with a syndrome scheme
built on the Hamming(7,4) code: the relay publishes per-block syndromes
plus a per-block parity checksum; the terminal corrects single errors,
and blocks whose checksum fails after correction are discarded (the
terminal publishes the kept-block mask).  Retained information bits are
then compressed through a fixed public binary Toeplitz hash, dropping
ceil(7 * h2(p) / 4) bits per retained block.  The achieved rate is
sub-capacity and is reported as such.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .bitops import as_bits, bits_to_hex
from .errors import BlockUncorrectable, ReconciliationFailure
from .model import (MODE_DSBS, MODE_IDEAL, PinInstance, SourceRealization,
                    binary_entropy)

SENDER_ALICE = "alice"
SENDER_BOB = "bob"

# Fixed public seed of the compression hash; part of the protocol, never
# secret.
_COMPRESSION_SEED = 0x70B1_1C4A5
_BLOCK = 7
_INFO_POSITIONS = np.array([2, 4, 5, 6])  # non-power-of-two columns
# Parity-check matrix with column j equal to the binary expansion of j+1,
# so a nonzero syndrome names the flipped position directly.
_H = np.array([[(j + 1) >> k & 1 for j in range(_BLOCK)] for k in range(3)],
              dtype=np.uint8)


def relay_sender(i: int) -> str:
    """Public name of relay i (0-based index, 1-based on the wire)."""
    return f"relay-{i + 1}"


@dataclass
class Round:
    index: int
    sender: str
    payload: np.ndarray


class Transcript:
    """Ordered public-channel messages with the round-robin schedule.

    With M relays the schedule has period M+2: relay m owns rounds
    l = m (mod M+2), Alice owns l = M+1, Bob owns l = 0 (mod M+2).
    Only rounds that actually carry a payload are recorded; indices are
    strictly increasing.
    """

    def __init__(self, num_relays: int):
        if num_relays < 2:
            raise ValueError("at least two relays are required")
        self.num_relays = num_relays
        self.rounds: List[Round] = []
        self._last = 0

    def _residue(self, sender: str) -> int:
        period = self.num_relays + 2
        if sender == SENDER_ALICE:
            return (self.num_relays + 1) % period
        if sender == SENDER_BOB:
            return 0
        if sender.startswith("relay-"):
            m = int(sender.split("-", 1)[1])
            if 1 <= m <= self.num_relays:
                return m
        raise ValueError(f"unknown sender: {sender!r}")

    def append(self, sender: str, payload) -> Round:
        """Log a payload at the sender's next scheduled round."""
        period = self.num_relays + 2
        residue = self._residue(sender)
        index = self._last + 1
        index += (residue - index) % period
        rnd = Round(index=index, sender=sender, payload=as_bits(payload))
        self.rounds.append(rnd)
        self._last = index
        return rnd

    def schedule_ok(self) -> bool:
        period = self.num_relays + 2
        last = 0
        for rnd in self.rounds:
            if rnd.index <= last or rnd.index % period != self._residue(rnd.sender):
                return False
            last = rnd.index
        return True

    def total_bits(self) -> int:
        return sum(r.payload.size for r in self.rounds)

    def rate_log(self, n: int) -> List[float]:
        """Per-round public rate in bits per source repetition."""
        return [r.payload.size / n for r in self.rounds]

    def to_jsonl(self) -> str:
        lines = []
        for r in self.rounds:
            lines.append(json.dumps({"l": r.index, "sender": r.sender,
                                     "bits": int(r.payload.size),
                                     "payload": bits_to_hex(r.payload)}))
        return "\n".join(lines) + ("\n" if lines else "")

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()


@dataclass
class ReconcileResult:
    key_terminal: np.ndarray
    key_relay: np.ndarray
    syndrome_bits: np.ndarray   # relay's public message: 3+1 bits per block
    kept_mask: np.ndarray       # terminal's public reply: 1 bit per block
    corrected_blocks: int
    raw_bits: int               # info bits retained before compression
    dropped_bits: int


def _syndromes(blocks: np.ndarray) -> np.ndarray:
    return (blocks @ _H.T) % 2


def _toeplitz_hash(bits: np.ndarray, out_len: int) -> np.ndarray:
    """Fixed public universal-hash compression to out_len bits."""
    bits = as_bits(bits)
    if out_len <= 0:
        return np.zeros(0, dtype=np.uint8)
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=_COMPRESSION_SEED,
                               spawn_key=(bits.size, out_len))))
    diag = rng.integers(0, 2, size=out_len + bits.size - 1, dtype=np.uint8)
    rows = np.arange(out_len)[:, None]
    cols = np.arange(bits.size)[None, :]
    matrix = diag[rows - cols + bits.size - 1]
    return (matrix @ bits % 2).astype(np.uint8)


def compression_drop_per_block(crossover: float) -> int:
    return math.ceil(_BLOCK * binary_entropy(crossover) / 4.0)


def reconcile_pair(seq_terminal, seq_relay, crossover: float,
                   on_bad_block: str = "discard") -> ReconcileResult:
    """Syndrome-based one-way reconciliation of two correlated sequences.

    The relay publishes, per 7-bit block, the Hamming(7,4) syndrome and
    the block parity.  The terminal corrects at most one flip per block;
    a parity mismatch after correction flags the block, which is either
    discarded (default) or raised as :class:`BlockUncorrectable`
    (``on_bad_block="raise"``).  Both sides keep the 4 information
    positions of each surviving block and compress them through the fixed
    public hash.
    """
    term = as_bits(seq_terminal)
    relay = as_bits(seq_relay)
    if term.size != relay.size:
        raise ValueError("sequences must have equal length")
    if term.size == 0 or term.size % _BLOCK:
        raise ValueError(f"sequence length must be a positive multiple "
                         f"of {_BLOCK}")
    if on_bad_block not in ("discard", "raise"):
        raise ValueError(f"unknown bad-block policy: {on_bad_block!r}")

    term_blocks = term.reshape(-1, _BLOCK).copy()
    relay_blocks = relay.reshape(-1, _BLOCK)
    num_blocks = term_blocks.shape[0]

    relay_syn = _syndromes(relay_blocks)
    relay_par = relay_blocks.sum(axis=1) % 2
    diff_syn = (_syndromes(term_blocks) + relay_syn) % 2

    # A nonzero syndrome difference names one position to flip (1-based).
    err_pos = (diff_syn * np.array([1, 2, 4])).sum(axis=1)
    corrected = np.flatnonzero(err_pos)
    term_blocks[corrected, err_pos[corrected] - 1] ^= 1

    kept = (term_blocks.sum(axis=1) % 2) == relay_par
    if on_bad_block == "raise" and not kept.all():
        raise BlockUncorrectable(int(np.flatnonzero(~kept)[0]))

    raw_term = term_blocks[kept][:, _INFO_POSITIONS].ravel()
    raw_relay = relay_blocks[kept][:, _INFO_POSITIONS].ravel()
    n_kept = int(kept.sum())
    drop = compression_drop_per_block(crossover) * n_kept
    out_len = max(raw_term.size - drop, 0)
    syndrome_bits = np.concatenate(
        [np.hstack([relay_syn, relay_par[:, None]]).ravel()])
    return ReconcileResult(
        key_terminal=_toeplitz_hash(raw_term, out_len),
        key_relay=_toeplitz_hash(raw_relay, out_len),
        syndrome_bits=syndrome_bits.astype(np.uint8),
        kept_mask=kept.astype(np.uint8),
        corrected_blocks=int(np.count_nonzero(kept[corrected])),
        raw_bits=int(raw_term.size),
        dropped_bits=min(drop, raw_term.size),
    )


@dataclass
class PairwiseKeys:
    """Pairwise keys held after the agreement step.

    Terminal copies and relay copies are tracked separately: they are
    identical by construction in ideal-common mode and identical up to
    undetected reconciliation errors in noisy mode.
    """

    w_a: List[np.ndarray]          # Alice's copy of each W_{A,i}
    w_b: List[np.ndarray]          # Bob's copy of each W_{B,i}
    relay_w_a: List[np.ndarray]    # relay i's copy of W_{A,i}
    relay_w_b: List[np.ndarray]    # relay i's copy of W_{B,i}
    n: int

    @property
    def common(self) -> List[np.ndarray]:
        """Ground-truth common messages: the smaller key of each pair
        (relay copy; ties go to the Bob side)."""
        out = []
        for wa, wb in zip(self.relay_w_a, self.relay_w_b):
            out.append(wb if wb.size <= wa.size else wa)
        return out

    @property
    def rates(self) -> List[float]:
        """Achieved common-message rates in bits per repetition."""
        return [w.size / self.n for w in self.common]


def agree_keys(realization: SourceRealization,
               instance: PinInstance) -> Tuple[PairwiseKeys, Transcript]:
    """Algorithm step one: establish both pairwise keys at every relay.

    Ideal-common pairs read their shared bits off directly with no public
    transmission.  Noisy pairs run :func:`reconcile_pair` on each side;
    the relay's syndrome message and the terminal's kept-block mask are
    logged at their owners' rounds.  Raises
    :class:`ReconciliationFailure` when a noisy pair ends with an empty
    key on either side.
    """
    transcript = Transcript(instance.m)
    w_a, w_b, relay_w_a, relay_w_b = [], [], [], []
    for i, pair in enumerate(instance.pairs):
        if pair.mode == MODE_IDEAL:
            w_a.append(realization.x_a[i].copy())
            relay_w_a.append(realization.x_relays[i][0].copy())
            w_b.append(realization.x_b[i].copy())
            relay_w_b.append(realization.x_relays[i][1].copy())
            continue
        usable = (realization.n // _BLOCK) * _BLOCK
        if usable == 0:
            raise ReconciliationFailure(i, f"blocklength {realization.n} "
                                           f"shorter than one code block")
        res_a = reconcile_pair(realization.x_a[i][:usable],
                               realization.x_relays[i][0][:usable],
                               pair.crossover_a)
        transcript.append(relay_sender(i), res_a.syndrome_bits)
        transcript.append(SENDER_ALICE, res_a.kept_mask)
        res_b = reconcile_pair(realization.x_b[i][:usable],
                               realization.x_relays[i][1][:usable],
                               pair.crossover_b)
        transcript.append(relay_sender(i), res_b.syndrome_bits)
        transcript.append(SENDER_BOB, res_b.kept_mask)
        if res_a.key_terminal.size == 0 or res_b.key_terminal.size == 0:
            raise ReconciliationFailure(i, "no key bits survived")
        w_a.append(res_a.key_terminal)
        relay_w_a.append(res_a.key_relay)
        w_b.append(res_b.key_terminal)
        relay_w_b.append(res_b.key_relay)
    keys = PairwiseKeys(w_a=w_a, w_b=w_b, relay_w_a=relay_w_a,
                        relay_w_b=relay_w_b, n=realization.n)
    return keys, transcript


def xor_payloads(keys: PairwiseKeys) -> List[np.ndarray]:
    """Per-relay broadcast payload: XOR of the two keys, truncated to the
    shorter one (computed from the relay's copies)."""
    out = []
    for wa, wb in zip(keys.relay_w_a, keys.relay_w_b):
        length = min(wa.size, wb.size)
        out.append(wa[:length] ^ wb[:length])
    return out


def xor_broadcast(keys: PairwiseKeys, transcript: Transcript) -> Transcript:
    """Log every relay's XOR payload at its scheduled round."""
    for i, payload in enumerate(xor_payloads(keys)):
        transcript.append(relay_sender(i), payload)
    return transcript


def _recover(own: np.ndarray, other_len: int, payload: np.ndarray,
             own_is_a_side: bool) -> np.ndarray:
    if other_len < own.size:
        return payload ^ own[:other_len]
    if other_len > own.size:
        return own
    # Equal lengths: the common message is the Bob-side key.
    return (payload ^ own) if own_is_a_side else own


def alice_common(keys: PairwiseKeys,
                 payloads: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Alice's reconstruction of every common message from the broadcast.

    Key lengths are public metadata, so Alice knows which side is the
    smaller."""
    return [_recover(keys.w_a[i], keys.relay_w_b[i].size, payloads[i], True)
            for i in range(len(keys.w_a))]


def bob_common(keys: PairwiseKeys,
               payloads: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Bob's reconstruction of every common message from the broadcast."""
    return [_recover(keys.w_b[i], keys.relay_w_a[i].size, payloads[i], False)
            for i in range(len(keys.w_b))]
