"""Symbolic fractal dimension of curves given by angle-invariant D0L systems.

For a single-rule system ``X ::= G`` the ruler dimension is ``log N / log d``
where ``N`` is the number of visible steps of the generator ``G`` and ``d``
the straight-line distance between its endpoints.  Curves that retrace
themselves (inside ``G`` or only after further derivations) are handled by
counting *distinct* visible unit segments of the ``m``-th derivation and
iterating ``m`` until the ratio settles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lsystem import (
    D0LSystem,
    SymbolClass,
    TurtleConfig,
    derive,
    is_angle_invariant,
)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_DERIVATIONS = 8
MAX_WORD_LENGTH = 10**7

_ROUND = 7
# above this many candidate segments the expansion switches to numpy
_PY_LIMIT = 4096


class DimensionError(ValueError):
    pass


class NotAngleInvariantError(DimensionError):
    pass


class NoVisibleTrailError(DimensionError):
    pass


class DegenerateGeneratorError(DimensionError):
    pass


@dataclass(frozen=True)
class DimensionResult:
    """Outcome of a dimension computation.

    ``draw_count`` is the number of draw symbols of the inspected word and
    ``segments`` the number of distinct visible unit segments it traces;
    they coincide unless the curve retraces itself.  ``value`` is computed
    from ``segments``.
    """

    value: float
    draw_count: int
    distance: float
    derivations_used: int
    converged: bool
    segments: int

    @property
    def overlapping(self) -> bool:
        return self.segments != self.draw_count


def _check_value(value: float) -> float:
    if not 0.0 < value <= 2.0 or math.isnan(value):
        raise DegenerateGeneratorError(f"dimension {value!r} outside (0, 2]")
    return value


def _generator(system: D0LSystem) -> tuple[str, str]:
    rules = system.nontrivial_rules()
    if not rules:
        # every rule is the identity, so the curve never rescales
        raise DegenerateGeneratorError("all rules are trivial")
    if len(rules) != 1:
        raise DimensionError(f"expected exactly one non-trivial rule, found {len(rules)}")
    (symbol, rhs), = rules.items()
    return symbol, rhs


def _trace(word: str, system: D0LSystem, config: TurtleConfig):
    """Walk ``word`` in step units (ignores step_length).

    Returns the endpoint and, per draw symbol, the (start, direction index)
    pair, plus a flag telling whether any move or branch symbol occurred.
    """
    system.check_word(word)
    classes = system.classes
    k, n = config.reduced
    units = config.unit_vectors()
    pos = 0j
    turns = 0
    draws: list[tuple[complex, int]] = []
    plain = True
    for s in word:
        c = classes[s]
        if c is SymbolClass.DRAW:
            h = (turns * k) % n
            draws.append((pos, h))
            pos += units[h]
        elif c is SymbolClass.TURN_PLUS:
            turns += 1
        elif c is SymbolClass.TURN_MINUS:
            turns -= 1
        elif c is SymbolClass.MOVE:
            plain = False
            pos += units[(turns * k) % n]
        elif c is not SymbolClass.NON_GRAPHIC:
            plain = False
    return pos, draws, plain


def generator_counts(word: str, system: D0LSystem, config: TurtleConfig) -> tuple[int, float]:
    """Draw-symbol count ``N`` and endpoint distance ``d`` of ``word`` in step units."""
    if not is_angle_invariant(word, system, config):
        raise NotAngleInvariantError(f"{word!r} is not angle-invariant at angle {config}")
    end, draws, _ = _trace(word, system, config)
    if not draws:
        raise NoVisibleTrailError(f"{word!r} has no draw symbols")
    return len(draws), abs(end)


def _key(z: complex) -> tuple[float, float]:
    return (round(z.real, _ROUND) + 0.0, round(z.imag, _ROUND) + 0.0)


def _edge(a: complex, b: complex):
    ka, kb = _key(a), _key(b)
    return (ka, kb) if ka <= kb else (kb, ka)


def _dedup_array(starts: np.ndarray, ends: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.stack([np.round(starts.real, _ROUND), np.round(starts.imag, _ROUND)], axis=1) + 0.0
    b = np.stack([np.round(ends.real, _ROUND), np.round(ends.imag, _ROUND)], axis=1) + 0.0
    swap = (b[:, 0] < a[:, 0]) | ((b[:, 0] == a[:, 0]) & (b[:, 1] < a[:, 1]))
    lo = np.where(swap[:, None], b, a)
    hi = np.where(swap[:, None], a, b)
    keys = np.concatenate([lo, hi], axis=1)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return starts[idx], ends[idx]


class _Expansion:
    """Distinct segment sets of successive derivations of ``X ::= G``.

    The ``m``-th derivation is ``G`` with every ``X`` replaced by the
    ``(m-1)``-th derivation, each copy rotated to that draw's heading and
    placed at ``v**(m-1)`` times that draw's start, ``v`` being the endpoint
    of ``G``.  Only distinct segments and distinct placements are kept, so
    retracing curves stay small.
    """

    def __init__(self, draws: list[tuple[complex, int]], end: complex, units: tuple[complex, ...]):
        self.v = end
        seen = {}
        for p, h in draws:
            seen.setdefault((_key(p), h), (p, units[h]))
        self.placements = list(seen.values())
        edges = {}
        for p, h in draws:
            edges.setdefault(_edge(p, p + units[h]), (p, p + units[h]))
        self.starts = np.array([e[0] for e in edges.values()], dtype=complex)
        self.ends = np.array([e[1] for e in edges.values()], dtype=complex)
        self.level = 1

    @property
    def count(self) -> int:
        return len(self.starts)

    def next_size(self) -> int:
        return self.count * len(self.placements)

    def advance(self) -> None:
        scale = self.v ** self.level
        if self.next_size() <= _PY_LIMIT:
            edges = {}
            for p, rot in self.placements:
                off = scale * p
                for a, b in zip(self.starts.tolist(), self.ends.tolist()):
                    sa, sb = off + rot * a, off + rot * b
                    edges.setdefault(_edge(sa, sb), (sa, sb))
            self.starts = np.array([e[0] for e in edges.values()], dtype=complex)
            self.ends = np.array([e[1] for e in edges.values()], dtype=complex)
        else:
            offs = np.array([scale * p for p, _ in self.placements], dtype=complex)[:, None]
            rots = np.array([r for _, r in self.placements], dtype=complex)[:, None]
            starts = (offs + rots * self.starts[None, :]).ravel()
            ends = (offs + rots * self.ends[None, :]).ravel()
            self.starts, self.ends = _dedup_array(starts, ends)
        self.level += 1


def _walk_segments(word: str, system: D0LSystem, config: TurtleConfig) -> tuple[int, int, complex]:
    """Draw count, distinct visible segment count and endpoint of any word."""
    classes = system.classes
    k, n = config.reduced
    units = config.unit_vectors()
    codes = np.frombuffer(word.encode("utf-32-le"), dtype=np.uint32)
    lut = {ord(s): c for s, c in classes.items()}
    turn = np.zeros(len(word), dtype=np.int64)
    step = np.zeros(len(word), dtype=bool)
    draw = np.zeros(len(word), dtype=bool)
    for code, c in lut.items():
        mask = codes == code
        if not mask.any():
            continue
        if c is SymbolClass.TURN_PLUS:
            turn[mask] = 1
        elif c is SymbolClass.TURN_MINUS:
            turn[mask] = -1
        elif c is SymbolClass.DRAW:
            step[mask] = draw[mask] = True
        elif c is SymbolClass.MOVE:
            step[mask] = True
        elif c in (SymbolClass.PUSH_BRANCH, SymbolClass.POP_BRANCH):
            raise DimensionError("dimension of branching curves is not supported")
    heading = (np.cumsum(turn) * k) % n
    vec = np.where(step, np.asarray(units, dtype=complex)[heading], 0)
    pos = np.concatenate([[0j], np.cumsum(vec)])
    starts, ends = pos[:-1][draw], pos[1:][draw]
    n_draw = int(draw.sum())
    if n_draw == 0:
        return 0, 0, complex(pos[-1])
    starts, _ = _dedup_array(starts, ends)
    return n_draw, len(starts), complex(pos[-1])


def dimension_direct(system: D0LSystem, config: TurtleConfig) -> DimensionResult:
    """``log N / log d`` from the single rule's right-hand side."""
    _, rhs = _generator(system)
    n_draw, d = generator_counts(rhs, system, config)
    if d <= 1 + 1e-12:
        raise DegenerateGeneratorError(f"generator distance {d} <= 1")
    value = _check_value(math.log(n_draw) / math.log(d))
    return DimensionResult(value, n_draw, d, 1, True, n_draw)


def _limit_sequence(system, config, max_derivations, max_length):
    """Yield (m, D_m, draw_count, segments, d_m) for m = 1, 2, ..."""
    symbol, rhs = _generator(system)
    if not is_angle_invariant(rhs, system, config):
        raise NotAngleInvariantError(f"{rhs!r} is not angle-invariant at angle {config}")
    end, draws, plain = _trace(rhs, system, config)
    if not draws:
        raise NoVisibleTrailError(f"{rhs!r} has no draw symbols")
    d = abs(end)
    if d <= 1 + 1e-12:
        raise DegenerateGeneratorError(f"generator distance {d} <= 1")
    draw_syms = system.draw_symbols
    if plain and draw_syms == {symbol}:
        exp = _Expansion(draws, end, config.unit_vectors())
        n_draw = len(draws)
        m = 1
        while True:
            yield m, math.log(exp.count) / (m * math.log(d)), n_draw**m, exp.count, d**m
            if m >= max_derivations or exp.next_size() > max_length:
                return
            exp.advance()
            m += 1
    else:
        # general route: materialise the m-th derivation and walk it
        length = 1
        for m in range(1, max_derivations + 1):
            word = derive(system, symbol, m)
            if len(word) > max_length:
                return
            n_draw, segs, end_m = _walk_segments(word, system, config)
            d_m = abs(end_m)
            if segs == 0 or d_m <= 1 + 1e-12:
                raise DegenerateGeneratorError(f"derivation {m}: distance {d_m}, {segs} segments")
            yield m, math.log(segs) / math.log(d_m), n_draw, segs, d_m
            length = len(word)
            if length * max(len(rhs), 1) > max_length:
                return


def dimension_limit(
    system: D0LSystem,
    config: TurtleConfig,
    max_derivations: int = DEFAULT_MAX_DERIVATIONS,
    tol: float = DEFAULT_TOL,
    max_length: int = MAX_WORD_LENGTH,
) -> DimensionResult:
    """Iterate derivations until successive dimension estimates agree within ``tol``.

    On convergence at step ``m`` the estimate of derivation ``m - 1`` is
    returned (so a ratio-preserving generator reports ``derivations_used == 1``).
    Otherwise the last estimate is returned with ``converged=False``.
    """
    if max_derivations < 2:
        raise ValueError("max_derivations must be >= 2")
    if not tol > 0:
        raise ValueError("tol must be positive")
    prev = None
    for m, value, n_draw, segs, d_m in _limit_sequence(system, config, max_derivations, max_length):
        current = DimensionResult(value, n_draw, d_m, m, False, segs)
        if prev is not None and abs(value - prev.value) < tol:
            _check_value(prev.value)
            return DimensionResult(prev.value, prev.draw_count, prev.distance, prev.derivations_used, True, prev.segments)
        prev = current
    _check_value(prev.value)
    return prev


def dimension(
    system: D0LSystem,
    config: TurtleConfig,
    max_derivations: int = DEFAULT_MAX_DERIVATIONS,
    tol: float = DEFAULT_TOL,
    max_length: int = MAX_WORD_LENGTH,
) -> DimensionResult:
    """Dimension of the curve of ``system``; the direct ratio whenever it is stable."""
    result = dimension_limit(system, config, max_derivations, tol, max_length)
    if result.converged and result.derivations_used == 1 and not result.overlapping:
        return dimension_direct(system, config)
    return result


def word_dimension(word: str, config: TurtleConfig, symbol: str = "F", **kwargs) -> DimensionResult:
    """Dimension of the single-rule system ``symbol ::= word``."""
    return dimension(D0LSystem.single_rule(word, symbol), config, **kwargs)
