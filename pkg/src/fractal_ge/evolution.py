"""Grammatical evolution of L-system generators with a prescribed dimension.

A genotype is a vector of integer codons. It is expressed into a generator
word over ``F + -`` by the developmental mapping of :func:`express`; the word
is used as the right-hand side of ``F ::= word`` and scored by how close the
dimension of the resulting curve is to the target.

The search is steady state: every generation the 16 fittest individuals
breed 16 offspring which replace the 16 least fit.
"""
from __future__ import annotations

import functools
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .dimension import DimensionError, DimensionResult, dimension
from .lsystem import D0LSystem, TurtleConfig

# production k rewrites F into GRAMMAR[k]; "" is the empty word
GRAMMAR = ("F", "FF", "F+", "F-", "+F", "-F", "F+F", "F-F", "+", "-", "")
EPSILON = 1e-12
RNG_ALGORITHM = f"numpy-{np.__version__.split('.')[0]}.PCG64(SeedSequence)"

Genotype = tuple[int, ...]


class InvalidCodonError(ValueError):
    pass


@dataclass(frozen=True)
class GEConfig:
    target_dimension: float = 1.3
    target_fitness: float = 100.0
    angle: TurtleConfig = field(default_factory=TurtleConfig)
    codon_max: int = 255
    population_size: int = 64
    replacement: int = 16
    initial_length: int = 8
    mutation_equal: float = 50.0      # n1, percent, parents with equal genotypes
    mutation_distinct: float = 10.0   # n2, percent
    fusion_rate: float = 10.0         # n3, percent
    elision_rate: float = 5.0
    fusion_whole: bool = False
    tau: int = 5000
    seed: int = 0
    # dimension evaluation bounds for phenotypes
    dimension_tol: float = 1e-6
    dimension_max_derivations: int = 8
    dimension_max_length: int = 20_000

    def __post_init__(self):
        if not 0 < self.target_dimension <= 2:
            raise ValueError("target_dimension must lie in (0, 2]")
        if not self.target_fitness > 0:
            raise ValueError("target_fitness must be positive")
        if self.codon_max < len(GRAMMAR) - 1:
            raise ValueError(f"codon_max must be at least {len(GRAMMAR) - 1}")
        for name in ("mutation_equal", "mutation_distinct", "fusion_rate", "elision_rate"):
            if not 0 <= getattr(self, name) <= 100:
                raise ValueError(f"{name} must be a percentage in [0, 100]")
        if self.replacement < 2 or self.replacement % 2:
            raise ValueError("replacement must be a positive even number")
        if self.population_size < 2 * self.replacement:
            raise ValueError("population_size must be at least twice the replacement batch")
        if self.initial_length < 1 or self.tau < 1:
            raise ValueError("initial_length and tau must be >= 1")

    @property
    def degenerate_code(self) -> bool:
        return self.codon_max > len(GRAMMAR) - 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["angle"] = str(self.angle)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "GEConfig":
        data = dict(data)
        angle = data.get("angle")
        if isinstance(angle, str):
            data["angle"] = TurtleConfig.parse(angle)
        return cls(**data)


@dataclass(frozen=True)
class Individual:
    genotype: Genotype
    phenotype: str
    dimension: DimensionResult | None
    fitness: float


@dataclass(frozen=True)
class RunRecord:
    seed: int
    generations: int
    censored: bool
    best_fitness: float
    best_phenotype: str

    @property
    def solved(self) -> bool:
        return not self.censored


def express(genotype: Sequence[int], degenerate_code: bool = True) -> str:
    """Developmental genotype-to-word mapping.

    Starting from ``F``, each step takes one codon per ``F`` in the current
    word from the unread part of the genotype, completing a short supply by
    cycling over the whole genotype from its head, and rewrites the ``i``-th
    ``F`` with production ``codon_i`` (``codon_i mod 11`` under the degenerate
    code).  The word is returned as soon as the genotype is used up; a word
    without ``F`` is otherwise reset to ``F``.
    """
    codes = list(genotype)
    if not codes:
        raise ValueError("genotype must be nonempty")
    if degenerate_code:
        codes = [c % len(GRAMMAR) for c in codes]
    else:
        bad = [c for c in codes if not 0 <= c < len(GRAMMAR)]
        if bad:
            raise InvalidCodonError(f"codons {bad} outside [0, {len(GRAMMAR) - 1}]")
    total = len(codes)
    pos = 0
    word = "F"
    while True:
        parts = word.split("F")
        need = len(parts) - 1
        if pos + need <= total:
            taken = codes[pos:pos + need]
            pos += need
        else:
            taken = codes[pos:]
            short = need - len(taken)
            taken += (codes * (short // total + 1))[:short]
            pos = total
        pieces = [parts[0]]
        for code, tail in zip(taken, parts[1:]):
            pieces.append(GRAMMAR[code])
            pieces.append(tail)
        word = "".join(pieces)
        if pos == total:
            return word
        if "F" not in word:
            word = "F"


@functools.lru_cache(maxsize=1 << 17)
def _word_dimension(word: str, k: int, n: int, tol: float, max_derivations: int, max_length: int):
    system = D0LSystem.single_rule(word)
    try:
        result = dimension(system, TurtleConfig(k, n), max_derivations=max_derivations, tol=tol, max_length=max_length)
    except DimensionError:
        return None
    return result if result.converged else None


def evaluate(word: str, config: GEConfig) -> tuple[DimensionResult | None, float]:
    """Dimension of ``F ::= word`` and fitness ``1 / max(|target - D|, eps)``.

    Words that are not angle-invariant, draw nothing, do not advance
    (``d <= 1``), give a dimension outside ``(0, 2]`` or whose dimension does
    not settle within the evaluation bounds score 0.
    """
    k, n = config.angle.reduced
    result = _word_dimension(
        word, k, n, config.dimension_tol, config.dimension_max_derivations, config.dimension_max_length
    )
    if result is None:
        return None, 0.0
    return result, 1.0 / max(abs(config.target_dimension - result.value), EPSILON)


def make_individual(genotype: Sequence[int], config: GEConfig) -> Individual:
    genotype = tuple(int(c) for c in genotype)
    word = express(genotype, config.degenerate_code)
    dim, fit = evaluate(word, config)
    return Individual(genotype, word, dim, fit)


# --- genetic operators -------------------------------------------------------

def recombine(g1: Sequence[int], g2: Sequence[int], rng: np.random.Generator, point: int | None = None) -> tuple[Genotype, Genotype]:
    """One-point crossover with the cut drawn from ``[0, min(n, m)]``.

    Cut ``i`` keeps the first ``i - 1`` codons of each parent (none for
    ``i`` in {0, 1}) and swaps the rest.
    """
    x, y = tuple(g1), tuple(g2)
    if point is None:
        point = int(rng.integers(0, min(len(x), len(y)) + 1))
    cut = max(point - 1, 0)
    return x[:cut] + y[cut:], y[:cut] + x[cut:]


def mutate(g: Sequence[int], rng: np.random.Generator, codon_max: int) -> Genotype:
    g = list(g)
    g[int(rng.integers(len(g)))] = int(rng.integers(0, codon_max + 1))
    return tuple(g)


def fuse(g: Sequence[int], sibling: Sequence[int], rng: np.random.Generator, whole: bool = False) -> Genotype:
    source = tuple(g) if rng.random() < 0.5 else tuple(sibling)
    if whole:
        piece = source
    else:
        start = int(rng.integers(len(source)))
        end = int(rng.integers(start + 1, len(source) + 1))
        piece = source[start:end]
    return tuple(g) + piece


def elide(g: Sequence[int], rng: np.random.Generator) -> Genotype:
    g = tuple(g)
    if len(g) < 2:
        return g
    i = int(rng.integers(len(g)))
    return g[:i] + g[i + 1:]


def breed(a: Genotype, b: Genotype, config: GEConfig, rng: np.random.Generator) -> tuple[Genotype, Genotype]:
    """Two offspring of a pair: crossover, then mutation, fusion, elision."""
    children = list(recombine(a, b, rng))
    siblings = children[::-1]
    mutation = config.mutation_equal if a == b else config.mutation_distinct
    for i, child in enumerate(children):
        if rng.random() * 100 < mutation:
            child = mutate(child, rng, config.codon_max)
        if rng.random() * 100 < config.fusion_rate:
            child = fuse(child, siblings[i], rng, config.fusion_whole)
        if rng.random() * 100 < config.elision_rate:
            child = elide(child, rng)
        children[i] = child
    return children[0], children[1]


def rank(population: Sequence[Individual]) -> list[Individual]:
    return sorted(population, key=lambda ind: -ind.fitness)


def step_generation(population: Sequence[Individual], config: GEConfig, rng: np.random.Generator) -> list[Individual]:
    if len(population) != config.population_size:
        raise ValueError(f"population has {len(population)} individuals, expected {config.population_size}")
    ranked = rank(population)
    batch = config.replacement
    survivors = ranked[: len(ranked) - batch]
    parents = [ranked[i] for i in rng.permutation(batch)]
    offspring = []
    for a, b in zip(parents[0::2], parents[1::2]):
        for child in breed(a.genotype, b.genotype, config, rng):
            offspring.append(make_individual(child, config))
    return survivors + offspring


def initial_population(config: GEConfig, rng: np.random.Generator) -> list[Individual]:
    codons = rng.integers(0, config.codon_max + 1, size=(config.population_size, config.initial_length))
    return [make_individual(row, config) for row in codons.tolist()]


def best_individual(population: Sequence[Individual]) -> Individual:
    return max(population, key=lambda ind: ind.fitness)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def run(config: GEConfig, seed: int | None = None, budget: int | None = None) -> RunRecord:
    """One search, stopped at the first generation whose best fitness reaches
    the target or censored after ``budget`` (default ``config.tau``) generations."""
    seed = config.seed if seed is None else int(seed)
    budget = config.tau if budget is None else int(budget)
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = make_rng(seed)
    population = initial_population(config, rng)
    generation = 1
    while True:
        best = best_individual(population)
        if best.fitness >= config.target_fitness:
            return RunRecord(seed, generation, False, best.fitness, best.phenotype)
        if generation >= budget:
            return RunRecord(seed, generation, True, best.fitness, best.phenotype)
        population = step_generation(population, config, rng)
        generation += 1
