"""Key rates from fading-channel estimation in a relay network.

Every fading block of T symbols is split into M+2 training slots; each
node broadcasts a known constant-amplitude training sequence whose energy
is slot length times the per-symbol power budget.  Both ends of a link
form the linear MMSE estimate of the same reciprocal scalar Gaussian
gain; the mutual information between the two estimates is the pairwise
key rate, and the network key rate follows by applying the closed-form
capacity to the per-relay minima and normalizing by T.

Channels are real Gaussian.  A Monte Carlo estimation oracle
(:func:`mc_estimate_check`) validates the closed-form pairwise rate
independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import rates

_EXHAUSTIVE_LIMIT = 1_000_000
_RESTARTS = 16


@dataclass(frozen=True)
class WirelessConfig:
    m: int
    power: float
    noise_var: float
    channel_vars: Tuple[Tuple[float, float], ...]  # (Alice-side, Bob-side)
    block_len: int
    allocation: Tuple[int, ...]  # (T_A, T_B, T_1, ..., T_M)

    def __post_init__(self):
        object.__setattr__(self, "channel_vars",
                           tuple((float(a), float(b))
                                 for a, b in self.channel_vars))
        object.__setattr__(self, "allocation",
                           tuple(int(t) for t in self.allocation))
        if self.m < 2:
            raise ValueError("at least two relays are required")
        if self.power <= 0 or self.noise_var <= 0:
            raise ValueError("power and noise variance must be > 0")
        if len(self.channel_vars) != self.m:
            raise ValueError(f"expected {self.m} channel variance pairs")
        if any(a <= 0 or b <= 0 for a, b in self.channel_vars):
            raise ValueError("channel variances must be > 0")
        if len(self.allocation) != self.m + 2:
            raise ValueError(f"allocation needs {self.m + 2} slots")
        if any(t < 1 for t in self.allocation):
            raise ValueError("every training slot needs >= 1 symbol")
        if sum(self.allocation) != self.block_len:
            raise ValueError("training slots must sum to the block length")

    @property
    def t_a(self) -> int:
        return self.allocation[0]

    @property
    def t_b(self) -> int:
        return self.allocation[1]

    @property
    def t_relays(self) -> Tuple[int, ...]:
        return self.allocation[2:]


def uniform_config(m: int, slot: int = 2, power: float = 1.0,
                   noise_var: float = 1.0,
                   channel_var: float = 1.0) -> WirelessConfig:
    """Fully symmetric configuration: every slot and variance equal."""
    return WirelessConfig(m=m, power=power, noise_var=noise_var,
                          channel_vars=[(channel_var, channel_var)] * m,
                          block_len=slot * (m + 2),
                          allocation=[slot] * (m + 2))


def pairwise_rate(t_i: int, t_alpha: int, power: float, noise_var: float,
                  channel_var: float) -> float:
    """Closed-form pairwise key rate in bits per fading block.

    Equals 0.5*log2(1 + Ti*Ta*P^2*v^2 / (d^2 + (Ti+Ta)*d*v*P)) with v the
    channel variance and d the noise variance, i.e. the Gaussian MI
    between the two MMSE channel estimates.
    """
    if t_i <= 0 or t_alpha <= 0 or power <= 0 or noise_var <= 0 \
            or channel_var <= 0:
        raise ValueError("all arguments must be > 0")
    num = t_i * t_alpha * power ** 2 * channel_var ** 2
    den = noise_var ** 2 + (t_i + t_alpha) * noise_var * channel_var * power
    return 0.5 * math.log2(1.0 + num / den)


@dataclass
class WirelessRateReport:
    pairwise: List[Tuple[float, float]]  # (Alice-side, Bob-side) per relay
    i_g: List[float]                     # per-relay minima
    r_key: float                         # bits per channel use
    xor_r_key: float

    def to_dict(self) -> dict:
        return asdict(self)


def key_rate(config: WirelessConfig) -> WirelessRateReport:
    """Network key rate per channel use for one slot allocation."""
    pairwise = []
    for i in range(config.m):
        var_a, var_b = config.channel_vars[i]
        t_i = config.t_relays[i]
        pairwise.append((
            pairwise_rate(t_i, config.t_a, config.power, config.noise_var,
                          var_a),
            pairwise_rate(t_i, config.t_b, config.power, config.noise_var,
                          var_b),
        ))
    i_g = [min(a, b) for a, b in pairwise]
    return WirelessRateReport(
        pairwise=pairwise,
        i_g=i_g,
        r_key=rates.capacity(i_g) / config.block_len,
        xor_r_key=rates.xor_baseline_rate(i_g) / config.block_len,
    )


def _compositions(total: int, parts: int):
    """All ways to split total into `parts` positive integers."""
    for cuts in combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[j + 1] - bounds[j] for j in range(parts))


def _rate_of_allocation(allocation, m, block_len, power, noise_var,
                        channel_vars) -> float:
    cfg = WirelessConfig(m=m, power=power, noise_var=noise_var,
                         channel_vars=channel_vars, block_len=block_len,
                         allocation=allocation)
    return key_rate(cfg).r_key


@dataclass
class AllocationResult:
    allocation: Tuple[int, ...]
    r_key: float
    method: str  # "exhaustive" or "coordinate_ascent"


def optimize_allocation(m: int, block_len: int, power: float,
                        noise_var: float,
                        channel_vars: Sequence[Tuple[float, float]],
                        seed: int = 0) -> AllocationResult:
    """Best training-slot allocation for the network key rate.

    Exhaustive over all compositions of the block length into M+2
    positive slots when their count is at most 10^6; otherwise seeded
    coordinate ascent from near-uniform starts.  The method used is
    reported so heuristic results are clearly flagged.
    """
    parts = m + 2
    if block_len < parts:
        raise ValueError(f"block length {block_len} cannot host "
                         f"{parts} nonempty slots")
    channel_vars = tuple((float(a), float(b)) for a, b in channel_vars)
    count = math.comb(block_len - 1, parts - 1)
    if count <= _EXHAUSTIVE_LIMIT:
        best, best_rate = None, -1.0
        for alloc in _compositions(block_len, parts):
            r = _rate_of_allocation(alloc, m, block_len, power, noise_var,
                                    channel_vars)
            if r > best_rate:
                best, best_rate = alloc, r
        return AllocationResult(best, best_rate, "exhaustive")

    rng = np.random.Generator(np.random.PCG64(seed))
    best, best_rate = None, -1.0
    for _ in range(_RESTARTS):
        alloc = np.ones(parts, dtype=int)
        for _ in range(block_len - parts):
            alloc[rng.integers(parts)] += 1
        rate = _rate_of_allocation(tuple(alloc), m, block_len, power,
                                   noise_var, channel_vars)
        improved = True
        while improved:
            improved = False
            for src in range(parts):
                for dst in range(parts):
                    if src == dst or alloc[src] <= 1:
                        continue
                    alloc[src] -= 1
                    alloc[dst] += 1
                    r = _rate_of_allocation(tuple(alloc), m, block_len,
                                            power, noise_var, channel_vars)
                    if r > rate:
                        rate = r
                        improved = True
                    else:
                        alloc[src] += 1
                        alloc[dst] -= 1
        if rate > best_rate:
            best, best_rate = tuple(int(t) for t in alloc), rate
    return AllocationResult(best, best_rate, "coordinate_ascent")


@dataclass
class SweepRow:
    power: float
    rb_ratio: float
    xor_ratio: float
    r_key: float
    r_s: float


def multiplexing_gain_sweep(m: int, p_grid: Sequence[float],
                            slot: int = 2, noise_var: float = 1.0,
                            channel_var: float = 1.0) -> List[SweepRow]:
    """Key rate over a power grid, normalized by r_s = log2(P)/(2T).

    Uses the balanced symmetric family (equal slots and unit-ratio
    variances) so the high-power ratios converge to M-1 for the binning
    scheme and floor(M/2) for the XOR baseline.
    """
    p_grid = [float(p) for p in p_grid]
    if not p_grid or any(b <= a for a, b in zip(p_grid, p_grid[1:])):
        raise ValueError("power grid must be nonempty and increasing")
    rows = []
    for power in p_grid:
        cfg = uniform_config(m, slot=slot, power=power, noise_var=noise_var,
                             channel_var=channel_var)
        report = key_rate(cfg)
        r_s = math.log2(power) / (2.0 * cfg.block_len)
        rows.append(SweepRow(power=power,
                             rb_ratio=report.r_key / r_s,
                             xor_ratio=report.xor_r_key / r_s,
                             r_key=report.r_key,
                             r_s=r_s))
    return rows


@dataclass
class McCheckResult:
    mi_estimate: float
    formula_value: float
    gap: float
    samples: int
    degenerate: bool  # noiseless limit; gap check not meaningful

    def to_dict(self) -> dict:
        return asdict(self)


def mc_estimate_check(config: WirelessConfig, pair_index: int,
                      samples: int, seed: int = 0,
                      side: str = "A") -> McCheckResult:
    """Monte Carlo validation of the closed-form pairwise rate.

    Simulates the reciprocal scalar gain per block, forms both ends'
    MMSE estimates from their noisy training observations, and computes
    the Gaussian MI from the sample correlation via -0.5*log2(1-rho^2).
    """
    if samples < 100_000:
        raise ValueError("need at least 1e5 samples")
    if not 0 <= pair_index < config.m:
        raise ValueError(f"pair index out of range: {pair_index}")
    if side not in ("A", "B"):
        raise ValueError(f"side must be 'A' or 'B': {side!r}")
    var_h = config.channel_vars[pair_index][0 if side == "A" else 1]
    t_alpha = config.t_a if side == "A" else config.t_b
    t_i = config.t_relays[pair_index]
    e_relay = t_i * config.power       # relay training seen by the terminal
    e_term = t_alpha * config.power    # terminal training seen by the relay
    formula = pairwise_rate(t_i, t_alpha, config.power, config.noise_var,
                            var_h)

    degenerate = config.noise_var <= 1e-12 * var_h * min(e_relay, e_term)
    if degenerate:
        return McCheckResult(mi_estimate=math.inf, formula_value=formula,
                             gap=math.inf, samples=samples, degenerate=True)

    rng = np.random.Generator(np.random.PCG64(seed))
    h = rng.normal(0.0, math.sqrt(var_h), samples)
    noise_sd = math.sqrt(config.noise_var)
    # Matched-filter outputs, then MMSE scaling at each end.
    z_term = math.sqrt(e_relay) * h + rng.normal(0.0, noise_sd, samples)
    z_relay = math.sqrt(e_term) * h + rng.normal(0.0, noise_sd, samples)
    est_term = (math.sqrt(e_relay) * var_h
                / (e_relay * var_h + config.noise_var)) * z_term
    est_relay = (math.sqrt(e_term) * var_h
                 / (e_term * var_h + config.noise_var)) * z_relay
    rho = float(np.corrcoef(est_term, est_relay)[0, 1])
    mi = -0.5 * math.log2(max(1.0 - rho * rho, 1e-300))
    return McCheckResult(mi_estimate=mi, formula_value=formula,
                         gap=abs(mi - formula), samples=samples,
                         degenerate=False)
