"""Restart schedules for Las Vegas searches with a per-attempt budget.

A *budgeted run* is any callable ``run(seed, budget) -> int | None`` that is
deterministic in its arguments and returns the generation at which it
succeeded (``<= budget``) or ``None`` when the budget ran out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

UNBOUNDED = 2**63 - 1
DEFAULT_GLOBAL_CAP = 10**6
MASK64 = (1 << 64) - 1

BudgetedRun = Callable[[int, int], Union[int, None]]


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix_seed(master: int, index: int) -> int:
    """Seed for attempt/run ``index`` under ``master``.

    splitmix64 is a bijection of 64-bit words, so distinct indices under one
    master always give distinct seeds.
    """
    return splitmix64((master + index * 0x9E3779B97F4A7C15) & MASK64)


@dataclass(frozen=True)
class NoRestart:
    def __str__(self):
        return "none"


@dataclass(frozen=True)
class Fixed:
    theta: int

    def __post_init__(self):
        if int(self.theta) != self.theta or self.theta < 1:
            raise ValueError("fixed threshold must be a positive integer")

    def __str__(self):
        return f"fixed:{self.theta}"


@dataclass(frozen=True)
class Luby:
    def __str__(self):
        return "luby"


@dataclass(frozen=True)
class Walsh:
    gamma: float

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValueError("Walsh factor must be > 1")

    def __str__(self):
        return f"walsh:{self.gamma:g}"


RestartStrategy = Union[NoRestart, Fixed, Luby, Walsh]


def parse_strategy(text: str) -> RestartStrategy:
    """Parse ``none``, ``fixed:6``, ``luby`` or ``walsh:1.2``."""
    name, _, arg = text.strip().lower().partition(":")
    if name == "none" and not arg:
        return NoRestart()
    if name == "luby" and not arg:
        return Luby()
    if name == "fixed" and arg:
        return Fixed(int(arg))
    if name == "walsh" and arg:
        return Walsh(float(arg))
    raise ValueError(f"unknown restart strategy {text!r}")


def luby(i: int) -> int:
    """``i``-th term (1-based) of the universal sequence 1,1,2,1,1,2,4,..."""
    if i < 1:
        raise ValueError("index must be >= 1")
    while True:
        k = i.bit_length()
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        # 2^(k-1) <= i < 2^k - 1
        i = i - (1 << (k - 1)) + 1


def threshold_sequence(strategy: RestartStrategy, i: int) -> int:
    if i < 1:
        raise ValueError("index must be >= 1")
    if isinstance(strategy, NoRestart):
        return UNBOUNDED
    if isinstance(strategy, Fixed):
        return strategy.theta
    if isinstance(strategy, Luby):
        return luby(i)
    if isinstance(strategy, Walsh):
        return max(1, round(strategy.gamma ** (i - 1)))
    raise TypeError(f"not a restart strategy: {strategy!r}")


@dataclass(frozen=True)
class RestartOutcome:
    total_generations: int
    restarts_used: int
    succeeded: bool
    winning_seed: int | None


def run_with_restarts(
    run: BudgetedRun,
    strategy: RestartStrategy,
    master_seed: int,
    global_cap: int = DEFAULT_GLOBAL_CAP,
) -> RestartOutcome:
    if global_cap < 1:
        raise ValueError("global_cap must be >= 1")
    total = 0
    attempt = 1
    while True:
        budget = min(threshold_sequence(strategy, attempt), global_cap - total)
        seed = mix_seed(master_seed, attempt)
        result = run(seed, budget)
        if result is not None:
            return RestartOutcome(total + result, attempt - 1, True, seed)
        total += budget
        if total >= global_cap:
            return RestartOutcome(total, attempt - 1, False, None)
        attempt += 1


# --- runtime models --------------------------------------------------------

class EmpiricalRunModel:
    """Budgeted run that replays an observed runtime sample.

    The seed picks one entry of the sample; censored entries never succeed.
    """

    def __init__(self, observed: Iterable[float], censored: int = 0):
        self.values = [int(math.ceil(v)) for v in observed] + [None] * int(censored)
        if not self.values:
            raise ValueError("empty sample")

    def __call__(self, seed: int, budget: int) -> int | None:
        x = self.values[seed % len(self.values)]
        return x if x is not None and x <= budget else None


class ParetoRunModel:
    """Runtimes ``ceil(scale * U**(-1/alpha))`` with ``U`` uniform on (0, 1]."""

    def __init__(self, alpha: float, scale: float = 1.0):
        if not alpha > 0 or not scale > 0:
            raise ValueError("alpha and scale must be positive")
        self.alpha = alpha
        self.scale = scale

    def runtime(self, seed: int) -> int:
        u = 1.0 - (splitmix64(seed) >> 11) * 2.0**-53
        return int(math.ceil(self.scale * u ** (-1.0 / self.alpha)))

    def __call__(self, seed: int, budget: int) -> int | None:
        x = self.runtime(seed)
        return x if x <= budget else None


# --- optimal fixed threshold -----------------------------------------------

def fixed_restart_cost(observed: Sequence[float], theta: int, censored: int = 0) -> float:
    """Expected total cost of restarting every ``theta`` generations.

    ``F(theta) = P(X <= theta)`` is taken over all ``len(observed) + censored``
    runs, censored runs counting as longer than any threshold.
    """
    x = np.asarray(observed, dtype=float)
    k = len(x) + censored
    hit = x <= theta
    p = hit.sum() / k
    if p == 0:
        return math.inf
    return theta * (1 - p) / p + (x[hit].sum() / k) / p


def optimal_fixed_threshold(
    observed: Sequence[float],
    candidates: Iterable[int],
    censored: int = 0,
) -> tuple[int, float]:
    best: tuple[int, float] | None = None
    for theta in candidates:
        cost = fixed_restart_cost(observed, theta, censored)
        if math.isinf(cost):
            continue
        if best is None or cost < best[1]:
            best = (int(theta), cost)
    if best is None:
        raise ValueError("no candidate threshold has a nonzero success probability")
    return best


def doubling_thresholds(start: int = 2, stop: int = 2048) -> list[int]:
    out = []
    t = start
    while t <= stop:
        out.append(t)
        t *= 2
    return out
