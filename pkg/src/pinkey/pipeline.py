"""End-to-end run: sample, agree, broadcast, distill, audit."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import distillation, infotools, model, protocol
from .bitops import bits_to_int
from .distillation import RbCodebook
from .model import MODE_IDEAL, PinInstance
from .protocol import PairwiseKeys, Transcript


@dataclass
class PipelineResult:
    key_alice: int
    key_bob: int
    key_bits: int
    message_bits: List[int]
    truncated: bool
    achieved_rates: List[float]
    transcript: Transcript
    codebook: RbCodebook
    keys: PairwiseKeys
    leakage: Optional[List[infotools.LeakageAudit]]
    xor_key_alice: np.ndarray
    xor_key_bob: np.ndarray

    @property
    def agreed(self) -> bool:
        return self.key_alice == self.key_bob


def key_bits_for(message_bits: List[int], epsilon_bits: int) -> int:
    """Key length: sum of the M-1 smallest message widths minus the
    withheld slack bits, floored at zero."""
    return max(sum(sorted(message_bits)[:-1]) - epsilon_bits, 0)


def _truncation(message_bits: List[int], budget: int) -> List[int]:
    """Proportional prefix lengths fitting the enumeration budget."""
    total = sum(message_bits)
    if total <= budget:
        return list(message_bits)
    return [b * budget // total for b in message_bits]


def run_once(instance: PinInstance, sample_seed: int, codebook_seed: int,
             audit: bool = True, max_total_bits: int = 20) -> PipelineResult:
    """One full protocol execution for one sampled realization.

    When the agreed common messages jointly exceed ``max_total_bits``
    (possible for long noisy-pair runs), each is truncated to a
    proportional prefix so the explicit codebook stays at desk scale; the
    result is flagged.  The leakage audit is exact and only valid in
    ideal-common mode; it is skipped automatically for instances
    containing noisy pairs.
    """
    realization = model.sample(instance, sample_seed)
    keys, transcript = protocol.agree_keys(realization, instance)
    payloads = protocol.xor_payloads(keys)
    protocol.xor_broadcast(keys, transcript)

    w_alice = protocol.alice_common(keys, payloads)
    w_bob = protocol.bob_common(keys, payloads)
    full_bits = [w.size for w in keys.common]
    message_bits = _truncation(full_bits, max_total_bits)
    truncated = message_bits != full_bits
    if truncated:
        w_alice = [w[:b] for w, b in zip(w_alice, message_bits)]
        w_bob = [w[:b] for w, b in zip(w_bob, message_bits)]
    key_bits = key_bits_for(message_bits, instance.params.epsilon_bits)
    codebook = distillation.build_codebook(message_bits, key_bits,
                                           codebook_seed)
    key_alice = distillation.distill(codebook,
                                     [bits_to_int(w) for w in w_alice]).k
    key_bob = distillation.distill(codebook,
                                   [bits_to_int(w) for w in w_bob]).k

    all_ideal = all(p.mode == MODE_IDEAL for p in instance.pairs)
    leakage = None
    if audit and all_ideal:
        leakage = [infotools.leakage_audit(codebook, m)
                   for m in range(instance.m)]
    return PipelineResult(
        key_alice=key_alice,
        key_bob=key_bob,
        key_bits=key_bits,
        message_bits=message_bits,
        truncated=truncated,
        achieved_rates=keys.rates,
        transcript=transcript,
        codebook=codebook,
        keys=keys,
        leakage=leakage,
        xor_key_alice=distillation.xor_distill(w_alice),
        xor_key_bob=distillation.xor_distill(w_bob),
    )
