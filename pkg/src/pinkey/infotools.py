"""Exact and empirical information measures.

This module is the verification oracle for every secrecy and uniformity
claim in the package.  Wherever the joint law is known it is enumerated as
a dense table and entropies are computed to machine precision; sampling
based estimates are used only where exact enumeration is intractable
(noisy sources, wireless Monte Carlo).

All quantities are in bits (log base 2).  Tiny negative mutual
informations (> -1e-9) are clamped to zero; anything more negative aborts
with :class:`InvariantViolation`, since it signals a logic error rather
than numerical dust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Iterable, Sequence, Tuple

import numpy as np

from .distillation import RbCodebook
from .errors import BudgetExceeded, InvariantViolation

_TABLE_BUDGET = 1 << 24
_NEG_CLAMP = 1e-9


def entropy_bits(probs: np.ndarray) -> float:
    """Shannon entropy of a probability vector, with 0*log 0 := 0."""
    p = np.asarray(probs, dtype=float).ravel()
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


class JointPmf:
    """Dense joint pmf over a small number of finite-alphabet variables.

    The table's k-th axis is the k-th variable; entries must be
    nonnegative and sum to one within 1e-12.
    """

    def __init__(self, table):
        t = np.asarray(table, dtype=float)
        if t.size > _TABLE_BUDGET:
            raise BudgetExceeded(f"pmf table of {t.size} entries exceeds "
                                 f"the 2^24 budget")
        if t.size == 0 or np.any(t < 0.0):
            raise ValueError("pmf entries must be nonnegative and nonempty")
        if abs(float(t.sum()) - 1.0) > 1e-12:
            raise ValueError(f"pmf does not sum to 1: {t.sum()!r}")
        self.table = t

    @property
    def arity(self) -> int:
        return self.table.ndim

    def marginal(self, subset: Sequence[int]) -> np.ndarray:
        """Marginal table over the given variable indices, in that order."""
        subset = tuple(subset)
        if not subset:
            raise ValueError("variable subset must be nonempty")
        if len(set(subset)) != len(subset):
            raise ValueError("variable subset has duplicates")
        drop = tuple(i for i in range(self.arity) if i not in subset)
        marg = self.table.sum(axis=drop) if drop else self.table
        kept = [i for i in range(self.arity) if i in subset]
        order = [kept.index(i) for i in subset]
        return np.transpose(marg, order)


def exact_entropy(pmf: JointPmf, subset: Sequence[int] | None = None) -> float:
    """Marginal entropy in bits of the given variable subset."""
    if subset is None:
        subset = range(pmf.arity)
    return entropy_bits(pmf.marginal(subset))


def exact_mi(pmf: JointPmf, set_a: Sequence[int], set_b: Sequence[int]) -> float:
    """Mutual information I(A;B) = H(A) + H(B) - H(A,B), in bits."""
    a, b = tuple(set_a), tuple(set_b)
    if not a or not b:
        raise ValueError("variable sets must be nonempty")
    if set(a) & set(b):
        raise ValueError("variable sets must be disjoint")
    mi = exact_entropy(pmf, a) + exact_entropy(pmf, b) - exact_entropy(pmf, a + b)
    if mi < -_NEG_CLAMP:
        raise InvariantViolation(f"mutual information {mi} below -1e-9")
    return max(mi, 0.0)


@dataclass
class LeakageAudit:
    """Exact per-relay leakage of one codebook, with its decomposition.

    ``mi_bits`` is I(K; W_m, F) where F is the XOR-broadcast transcript.
    In ideal-common mode every XOR payload is the shorter pairwise key
    masked by an independent uniform string, so the transcript is exactly
    independent of (K, W_m) and the quantity reduces to I(K; W_m); the
    reduction is verified by enumeration in the test suite.
    """

    relay: int
    mi_bits: float
    h_wm: float
    h_all_given_key: float
    h_all_given_wm_key: float
    # |direct MI - (h_wm - h_all_given_key + h_all_given_wm_key)|
    decomposition_residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def codebook_key_of_all(codebook: RbCodebook) -> np.ndarray:
    """Bin index of every message tuple, in flat (row-major) order."""
    return codebook.position >> codebook.bin_bits


def leakage_audit(codebook: RbCodebook, relay: int) -> LeakageAudit:
    """Exact leakage of the private key toward one relay's common message.

    Assumes the message tuple is uniform over the product space, which is
    exact in ideal-common mode; noisy-pair instances must use
    :func:`empirical_mi` instead.
    """
    if not 0 <= relay < len(codebook.message_bits):
        raise ValueError(f"relay index out of range: {relay}")
    total = 1 << codebook.total_bits
    b_m = codebook.message_bits[relay]
    shift = sum(codebook.message_bits[relay + 1:])
    flat = np.arange(total, dtype=np.int64)
    w_m = (flat >> shift) & ((1 << b_m) - 1)
    k = codebook_key_of_all(codebook)

    counts = np.zeros((codebook.num_bins, 1 << b_m), dtype=np.int64)
    np.add.at(counts, (k, w_m), 1)
    pmf = JointPmf(counts / total)
    mi = exact_mi(pmf, (0,), (1,))

    h_wm = float(b_m)
    h_all_given_key = float(codebook.bin_bits)
    nz = counts[counts > 0]
    h_all_given_wm_key = float(np.sum((nz / total) * np.log2(nz)))
    residual = abs(mi - (h_wm - h_all_given_key + h_all_given_wm_key))
    return LeakageAudit(relay=relay, mi_bits=mi, h_wm=h_wm,
                        h_all_given_key=h_all_given_key,
                        h_all_given_wm_key=h_all_given_wm_key,
                        decomposition_residual=residual)


@dataclass
class MiEstimate:
    """Plug-in MI estimate with bias correction and a bootstrap CI."""

    mi_bits: float
    ci_low: float
    ci_high: float
    samples: int
    unreliable: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _plugin_mi(codes: np.ndarray, k_x: int, k_y: int) -> float:
    n = codes.size
    joint = np.bincount(codes, minlength=k_x * k_y).astype(float)
    joint_p = joint / n
    x_p = joint_p.reshape(k_x, k_y).sum(axis=1)
    y_p = joint_p.reshape(k_x, k_y).sum(axis=0)

    def h_mm(p, counts_nonzero):
        # Miller-Madow: plug-in entropy plus (support - 1) / (2 n ln 2).
        return entropy_bits(p) + (counts_nonzero - 1) / (2.0 * n * math.log(2))

    h_x = h_mm(x_p, int(np.count_nonzero(x_p)))
    h_y = h_mm(y_p, int(np.count_nonzero(y_p)))
    h_xy = h_mm(joint_p, int(np.count_nonzero(joint_p)))
    return h_x + h_y - h_xy


def empirical_mi(x: Sequence[int], y: Sequence[int],
                 bootstrap: int = 1000, confidence: float = 0.95,
                 seed: int = 0) -> MiEstimate:
    """Estimate I(X;Y) in bits from paired discrete samples.

    Plug-in estimator on empirical joint counts with Miller-Madow bias
    correction; percentile bootstrap CI.  The result is flagged unreliable
    when the joint alphabet exceeds a tenth of the sample count.
    """
    x = np.asarray(x, dtype=np.int64).ravel()
    y = np.asarray(y, dtype=np.int64).ravel()
    if x.size != y.size:
        raise ValueError("paired sample arrays must have equal length")
    if x.size < 1000:
        raise ValueError("need at least 1000 samples")
    k_x = int(x.max()) + 1
    k_y = int(y.max()) + 1
    codes = x * k_y + y
    point = _plugin_mi(codes, k_x, k_y)

    rng = np.random.Generator(np.random.PCG64(seed))
    boots = np.empty(bootstrap)
    for b in range(bootstrap):
        resampled = rng.choice(codes, size=codes.size, replace=True)
        boots[b] = _plugin_mi(resampled, k_x, k_y)
    tail = (1.0 - confidence) / 2.0
    lo, hi = np.quantile(boots, [tail, 1.0 - tail])
    return MiEstimate(mi_bits=float(point), ci_low=float(lo),
                      ci_high=float(hi), samples=int(x.size),
                      unreliable=(k_x * k_y) / x.size > 0.1)
