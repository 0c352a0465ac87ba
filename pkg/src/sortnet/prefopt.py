"""Evolutionary search for channel relabelings of a prefix that shrink the
total window size of its outputs."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .netcore import (
    ChannelPermutation,
    ComparatorNetwork,
    NetworkError,
    outputs,
    permute,
    standardize_forward,
    window_sum,
)


@dataclass(frozen=True)
class OptimizerConfig:
    population_size: int = 32
    iterations: int = 20
    swaps_per_mutation: int = 1
    rng_seed: int | None = 0

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be at least 1")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.swaps_per_mutation < 1:
            raise ValueError("swaps_per_mutation must be at least 1")


@dataclass(frozen=True)
class OptimizedPrefix:
    original: ComparatorNetwork
    permutation: ChannelPermutation
    result: ComparatorNetwork
    fitness: int

    def to_json(self) -> dict:
        return {
            "original": self.original.to_text(),
            "permutation": self.permutation.to_json(),
            "result": self.result.to_text(),
            "fitness": self.fitness,
        }


def fitness(prefix: ComparatorNetwork) -> int:
    """Total window size over the outputs; lower is better."""
    return window_sum(outputs(prefix), prefix.n)


def relabel(prefix: ComparatorNetwork, perm: ChannelPermutation) -> ComparatorNetwork:
    return standardize_forward(permute(prefix, perm))


def _random_swaps(n: int, rng: random.Random, count: int) -> ChannelPermutation:
    perm = ChannelPermutation.identity(n)
    for _ in range(count):
        i = rng.randint(1, n)
        j = rng.randint(1, n)
        while j == i:
            j = rng.randint(1, n)
        perm = perm.then(ChannelPermutation.transposition(n, i, j))
    return perm


def mutate(prefix: ComparatorNetwork, rng: random.Random, swaps: int = 1) -> ComparatorNetwork:
    """Swap random channel pairs, then untangle back to a standard network."""
    return _mutate_with_perm(prefix, rng, swaps)[0]


def _mutate_with_perm(prefix: ComparatorNetwork, rng: random.Random, swaps: int):
    if prefix.n < 2:
        return prefix, ChannelPermutation.identity(prefix.n)
    perm = _random_swaps(prefix.n, rng, swaps)
    return relabel(prefix, perm), perm


@dataclass
class _Member:
    net: ComparatorNetwork
    perm: ChannelPermutation  # relative to the original input
    fit: int
    text: str

    @classmethod
    def of(cls, net, perm):
        return cls(net, perm, fitness(net), net.to_text())


def optimize_prefix(prefix: ComparatorNetwork, config: OptimizerConfig = OptimizerConfig()) -> OptimizedPrefix:
    """(mu + mu) evolution over relabelings of ``prefix``.

    The population starts as the input plus single-swap mutants; every round
    each survivor spawns one mutant and the best ``population_size`` of
    parents and children survive (ties broken by network text).  The
    returned permutation maps the input to the result via
    ``relabel(original, permutation)``.
    """
    if not prefix.is_standard:
        raise NetworkError("prefix must be standard")
    rng = random.Random(config.rng_seed)
    identity = ChannelPermutation.identity(prefix.n)
    start = _Member.of(prefix, identity)
    if config.iterations == 0:
        return OptimizedPrefix(prefix, identity, prefix, start.fit)

    def child(parent: _Member, swaps: int) -> _Member:
        perm = parent.perm.then(_random_swaps(prefix.n, rng, swaps))
        return _Member.of(relabel(prefix, perm), perm)

    if prefix.n < 2:
        return OptimizedPrefix(prefix, identity, prefix, start.fit)
    population = [start] + [child(start, 1) for _ in range(config.population_size - 1)]
    population = _select(population, config.population_size)
    for _ in range(config.iterations):
        offspring = [child(m, config.swaps_per_mutation) for m in population]
        population = _select(population + offspring, config.population_size)
    best = population[0]
    return OptimizedPrefix(prefix, best.perm, best.net, best.fit)


def _select(pool: list[_Member], size: int) -> list[_Member]:
    seen, unique = set(), []
    for m in sorted(pool, key=lambda m: (m.fit, m.text)):
        if m.text in seen:
            continue
        seen.add(m.text)
        unique.append(m)
    # keep duplicates only if the pool is too small to fill the population
    if len(unique) < size:
        rest = [m for m in sorted(pool, key=lambda m: (m.fit, m.text)) if m not in unique]
        unique += rest[: size - len(unique)]
    return unique[:size]


def exhaustive_optimum(prefix: ComparatorNetwork, limit: int = 8) -> OptimizedPrefix:
    """Best relabeling over all ``n!`` permutations (small ``n`` only)."""
    if prefix.n > limit:
        raise NetworkError(f"exhaustive search over {prefix.n}! permutations refused (limit {limit})")
    best = None
    for images in itertools.permutations(range(1, prefix.n + 1)):
        perm = ChannelPermutation(images)
        net = relabel(prefix, perm)
        f = fitness(net)
        if best is None or (f, net.to_text()) < (best.fitness, best.result.to_text()):
            best = OptimizedPrefix(prefix, perm, net, f)
    return best
