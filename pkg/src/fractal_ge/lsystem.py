"""Angle-invariant D0L systems and their turtle-graphics interpretation.

Symbols are single characters. ``+``, ``-``, ``(`` and ``)`` are always turn
and branch symbols; every other symbol must be classified as drawing, moving
or non-graphic when the system is built.

The turtle heading is carried as an integer count of angle steps and only
turned into a direction when a step is taken, so long words never accumulate
heading drift.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

MAX_BRANCH_DEPTH = 10**6


class LSystemError(ValueError):
    """Base class for malformed systems, words and text documents."""


class ClassificationError(LSystemError):
    pass


class DuplicateRuleError(LSystemError):
    pass


class BranchError(LSystemError):
    pass


class LSystemSyntaxError(LSystemError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SymbolClass(enum.Enum):
    DRAW = "draw"
    MOVE = "move"
    TURN_PLUS = "turn+"
    TURN_MINUS = "turn-"
    PUSH_BRANCH = "push"
    POP_BRANCH = "pop"
    NON_GRAPHIC = "non-graphic"


FIXED_CLASSES = MappingProxyType({
    "+": SymbolClass.TURN_PLUS,
    "-": SymbolClass.TURN_MINUS,
    "(": SymbolClass.PUSH_BRANCH,
    ")": SymbolClass.POP_BRANCH,
})


@dataclass(frozen=True)
class TurtleConfig:
    """Angle step ``2*pi*k/n`` kept as the rational pair ``(k, n)``."""

    angle_numerator: int = 1
    angle_denominator: int = 6
    step_length: float = 1.0

    def __post_init__(self):
        if not isinstance(self.angle_numerator, int) or not isinstance(self.angle_denominator, int):
            raise TypeError("angle numerator and denominator must be integers")
        if self.angle_denominator <= 0:
            raise ValueError("angle denominator must be positive")
        if not self.step_length > 0:
            raise ValueError("step length must be positive")

    @classmethod
    def parse(cls, text: str, step_length: float = 1.0) -> "TurtleConfig":
        """Build from ``"k/n"`` (fraction of a full turn) or a plain ``"k"``."""
        frac = Fraction(text.strip())
        return cls(frac.numerator, frac.denominator, step_length)

    @classmethod
    def from_degrees(cls, degrees: float | int | str, step_length: float = 1.0) -> "TurtleConfig":
        frac = Fraction(str(degrees)) / 360
        return cls(frac.numerator, frac.denominator, step_length)

    @property
    def reduced(self) -> tuple[int, int]:
        g = math.gcd(self.angle_numerator, self.angle_denominator)
        return self.angle_numerator // g, self.angle_denominator // g

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.angle_numerator, self.angle_denominator)

    @property
    def radians(self) -> float:
        return 2 * math.pi * self.angle_numerator / self.angle_denominator

    @property
    def degrees(self) -> float:
        return 360 * self.angle_numerator / self.angle_denominator

    def __str__(self):
        k, n = self.reduced
        return f"{k}/{n}"

    def direction_index(self, turns: int) -> int:
        """Index into :meth:`unit_vectors` for a heading of ``turns`` steps."""
        k, n = self.reduced
        return (turns * k) % n

    def unit_vectors(self) -> tuple[complex, ...]:
        return _unit_vectors(self.reduced[1])


_SNAP = (0.0, 0.5, -0.5, 1.0, -1.0)


def _snap(value: float) -> float:
    for exact in _SNAP:
        if abs(value - exact) < 1e-12:
            return exact
    return value


_UNIT_CACHE: dict[int, tuple[complex, ...]] = {}


def _unit_vectors(n: int) -> tuple[complex, ...]:
    # cos/sin of multiples of 2*pi/n, with values that are exactly 0, +-1/2
    # or +-1 snapped so that 60 and 90 degree walks land on exact coordinates
    vecs = _UNIT_CACHE.get(n)
    if vecs is None:
        vecs = tuple(
            complex(_snap(math.cos(2 * math.pi * j / n)), _snap(math.sin(2 * math.pi * j / n)))
            for j in range(n)
        )
        _UNIT_CACHE[n] = vecs
    return vecs


def default_classes(symbols: Iterable[str], draw: str | None = None, move: str | None = None) -> dict[str, SymbolClass]:
    """Classify ``symbols``.

    Without explicit ``draw``/``move`` sets, upper-case letters draw and
    lower-case letters move; anything else is non-graphic.
    """
    classes = {}
    for s in symbols:
        if s in FIXED_CLASSES:
            classes[s] = FIXED_CLASSES[s]
        elif draw is not None or move is not None:
            if draw and s in draw:
                classes[s] = SymbolClass.DRAW
            elif move and s in move:
                classes[s] = SymbolClass.MOVE
            else:
                classes[s] = SymbolClass.NON_GRAPHIC
        elif s.isalpha() and s.isupper():
            classes[s] = SymbolClass.DRAW
        elif s.isalpha() and s.islower():
            classes[s] = SymbolClass.MOVE
        else:
            classes[s] = SymbolClass.NON_GRAPHIC
    return classes


@dataclass(frozen=True)
class D0LSystem:
    """Deterministic context-free L-system.

    Symbols missing from ``rules`` keep the implicit trivial rule ``s ::= s``.
    """

    axiom: str
    rules: Mapping[str, str]
    classes: Mapping[str, SymbolClass] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        rules = dict(self.rules)
        for lhs in rules:
            if len(lhs) != 1:
                raise LSystemError(f"rule left-hand side must be a single symbol, got {lhs!r}")
        used = set(self.axiom).union(*rules.values(), rules.keys())
        if self.classes is None:
            classes = default_classes(sorted(used))
        else:
            classes = dict(self.classes)
            for s, cls in FIXED_CLASSES.items():
                if s in classes and classes[s] is not cls:
                    raise ClassificationError(f"symbol {s!r} must be {cls.value}")
            for s in used:
                if s not in classes and s in FIXED_CLASSES:
                    classes[s] = FIXED_CLASSES[s]
            missing = sorted(s for s in used if s not in classes)
            if missing:
                raise ClassificationError(f"unclassified symbols: {''.join(missing)!r}")
        # turn and branch symbols are part of every alphabet
        classes = {**FIXED_CLASSES, **classes}
        object.__setattr__(self, "rules", MappingProxyType(rules))
        object.__setattr__(self, "classes", MappingProxyType(classes))
        object.__setattr__(self, "_table", str.maketrans(rules))

    @classmethod
    def single_rule(cls, rhs: str, symbol: str = "F", axiom: str | None = None) -> "D0LSystem":
        return cls(axiom=symbol if axiom is None else axiom, rules={symbol: rhs})

    def check_word(self, word: str) -> None:
        for i, s in enumerate(word):
            if s not in self.classes:
                raise ClassificationError(f"unknown symbol {s!r} at position {i}")

    @property
    def draw_symbols(self) -> frozenset[str]:
        return frozenset(s for s, c in self.classes.items() if c is SymbolClass.DRAW)

    def nontrivial_rules(self) -> dict[str, str]:
        return {s: w for s, w in self.rules.items() if w != s}


def derive(system: D0LSystem, word: str, steps: int) -> str:
    """Rewrite every symbol of ``word`` in parallel, ``steps`` times."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    system.check_word(word)
    table = system._table  # type: ignore[attr-defined]
    for _ in range(steps):
        word = word.translate(table)
    return word


class Segment(NamedTuple):
    start: tuple[float, float]
    end: tuple[float, float]
    visible: bool


@dataclass(frozen=True)
class TurtlePath:
    segments: tuple[Segment, ...]
    endpoint: tuple[float, float]
    net_turns: int

    @property
    def visible_segments(self) -> tuple[Segment, ...]:
        return tuple(s for s in self.segments if s.visible)


def net_turns(word: str, system: D0LSystem) -> int:
    """Signed count of angle steps at the end of ``word``; branches excluded."""
    system.check_word(word)
    classes = system.classes
    turns = 0
    stack = []
    for s in word:
        c = classes[s]
        if c is SymbolClass.TURN_PLUS:
            turns += 1
        elif c is SymbolClass.TURN_MINUS:
            turns -= 1
        elif c is SymbolClass.PUSH_BRANCH:
            stack.append(turns)
        elif c is SymbolClass.POP_BRANCH:
            if not stack:
                raise BranchError("unbalanced ')'")
            turns = stack.pop()
    return turns


def turtle_walk(word: str, system: D0LSystem, config: TurtleConfig) -> TurtlePath:
    system.check_word(word)
    classes = system.classes
    k, n = config.reduced
    if n in (1, 2, 4):
        # axis-aligned headings: integer coordinates in step units
        units = [(1, 0), (0, 1), (-1, 0), (0, -1)][:: 4 // n]
    else:
        units = [(v.real, v.imag) for v in _unit_vectors(n)]
    step = config.step_length

    x = y = 0
    turns = 0
    stack: list[tuple[int | float, int | float, int]] = []
    raw: list[tuple[int | float, int | float, int | float, int | float, bool]] = []
    for i, s in enumerate(word):
        c = classes[s]
        if c is SymbolClass.DRAW or c is SymbolClass.MOVE:
            ux, uy = units[(turns * k) % n]
            nx, ny = x + ux, y + uy
            raw.append((x, y, nx, ny, c is SymbolClass.DRAW))
            x, y = nx, ny
        elif c is SymbolClass.TURN_PLUS:
            turns += 1
        elif c is SymbolClass.TURN_MINUS:
            turns -= 1
        elif c is SymbolClass.PUSH_BRANCH:
            if len(stack) >= MAX_BRANCH_DEPTH:
                raise BranchError(f"branch depth exceeds {MAX_BRANCH_DEPTH} at position {i}")
            stack.append((x, y, turns))
        elif c is SymbolClass.POP_BRANCH:
            if not stack:
                raise BranchError(f"unbalanced ')' at position {i}")
            x, y, turns = stack.pop()

    segments = tuple(
        Segment((x0 * step, y0 * step), (x1 * step, y1 * step), vis) for x0, y0, x1, y1, vis in raw
    )
    return TurtlePath(segments, (x * step, y * step), turns)


def is_angle_invariant(word: str, system: D0LSystem, config: TurtleConfig) -> bool:
    k, n = config.reduced
    return (net_turns(word, system) * k) % n == 0


# --- text format -----------------------------------------------------------

_RULE_RE = re.compile(r"^(\S)\s*->\s*(\S*)\s*$")
_KEY_RE = re.compile(r"^(axiom|angle|draw|move)\s*:\s*(.*?)\s*$", re.IGNORECASE)


def _parse(text: str) -> tuple[D0LSystem, TurtleConfig | None]:
    axiom = None
    angle = None
    draw = move = None
    rules: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0]
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        stripped = line.strip()
        m = _KEY_RE.match(stripped)
        if m:
            key, value = m.group(1).lower(), m.group(2)
            if key == "axiom":
                if axiom is not None:
                    raise LSystemSyntaxError("duplicate axiom", lineno, col)
                if not value or any(ch.isspace() for ch in value):
                    raise LSystemSyntaxError("axiom must be a nonempty word without spaces", lineno, col)
                axiom = value
            elif key == "angle":
                try:
                    angle = TurtleConfig.parse(value)
                except (ValueError, ZeroDivisionError) as exc:
                    raise LSystemSyntaxError(f"bad angle {value!r}: expected k/n", lineno, col) from exc
            elif key == "draw":
                draw = value
            else:
                move = value
            continue
        m = _RULE_RE.match(stripped)
        if m is None:
            raise LSystemSyntaxError(f"cannot parse {stripped!r}", lineno, col)
        lhs, rhs = m.group(1), m.group(2)
        if lhs in rules:
            raise DuplicateRuleError(f"line {lineno}: duplicate rule for {lhs!r}")
        rules[lhs] = rhs
    if axiom is None:
        raise LSystemSyntaxError("missing 'axiom:' line", 1, 1)
    used = set(axiom).union(*rules.values(), rules.keys())
    classes = default_classes(sorted(used), draw=draw, move=move)
    return D0LSystem(axiom, rules, classes), angle


def parse_lsystem(text: str) -> D0LSystem:
    return _parse(text)[0]


def load_lsystem(text: str) -> tuple[D0LSystem, TurtleConfig]:
    """Parse a document that must also carry an ``angle:`` line."""
    system, angle = _parse(text)
    if angle is None:
        raise LSystemSyntaxError("missing 'angle:' line", 1, 1)
    return system, angle


def format_lsystem(system: D0LSystem, config: TurtleConfig | None = None) -> str:
    lines = [f"axiom: {system.axiom}"]
    lines += [f"{lhs} -> {rhs}" for lhs, rhs in system.rules.items()]
    if config is not None:
        lines.append(f"angle: {config}")
    return "\n".join(lines) + "\n"


# --- SVG -------------------------------------------------------------------

def _polylines(path: TurtlePath) -> list[list[tuple[float, float]]]:
    lines: list[list[tuple[float, float]]] = []
    current: list[tuple[float, float]] | None = None
    for seg in path.segments:
        if not seg.visible:
            current = None
            continue
        if current is not None and current[-1] == seg.start:
            current.append(seg.end)
        else:
            current = [seg.start, seg.end]
            lines.append(current)
    return lines


def render_svg(path: TurtlePath, size: int = 1000, margin: int = 20, stroke_width: float = 1.0) -> str:
    """Visible segments as polylines, uniformly scaled into a ``size`` square viewBox."""
    lines = _polylines(path)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}" width="{size}" height="{size}">',
    ]
    if lines:
        xs = [p[0] for line in lines for p in line]
        ys = [p[1] for line in lines for p in line]
        xmin, xmax, ymin, ymax = min(xs), max(xs), min(ys), max(ys)
        extent = max(xmax - xmin, ymax - ymin) or 1.0
        scale = (size - 2 * margin) / extent
        # centre the drawing; SVG y grows downwards
        ox = margin + ((size - 2 * margin) - (xmax - xmin) * scale) / 2
        oy = margin + ((size - 2 * margin) - (ymax - ymin) * scale) / 2
        for line in lines:
            pts = " ".join(
                f"{ox + (px - xmin) * scale:.4f},{oy + (ymax - py) * scale:.4f}" for px, py in line
            )
            out.append(
                f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="{stroke_width}"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
