import random

import pytest
from hypothesis import strategies as st

from sortnet.netcore import ComparatorNetwork


def odd_even_transposition(n: int) -> ComparatorNetwork:
    """n rounds of neighbour exchanges; sorts every input."""
    return ComparatorNetwork.from_layers(n, [[(i, i + 1) for i in range(1 + t % 2, n, 2)] for t in range(n)])


def random_layer(rng: random.Random, n: int, fill: float = 0.7):
    chans = list(range(1, n + 1))
    rng.shuffle(chans)
    layer = []
    for a, b in zip(chans[::2], chans[1::2]):
        if rng.random() < fill:
            layer.append((min(a, b), max(a, b)))
    return layer


def random_network(rng: random.Random, n: int, depth: int) -> ComparatorNetwork:
    return ComparatorNetwork.from_layers(n, [random_layer(rng, n) for _ in range(depth)])


def random_sorter(rng: random.Random, n: int, extra: int = 2) -> ComparatorNetwork:
    """Random layers followed by a transposition sorter, so the whole thing sorts."""
    return random_network(rng, n, extra) + odd_even_transposition(n)


@st.composite
def networks(draw, min_n=2, max_n=6, max_depth=4, standard=True):
    n = draw(st.integers(min_n, max_n))
    depth = draw(st.integers(0, max_depth))
    layers = []
    for _ in range(depth):
        perm = draw(st.permutations(list(range(1, n + 1))))
        k = draw(st.integers(0, n // 2))
        layer = []
        for a, b in zip(perm[: 2 * k : 2], perm[1 : 2 * k : 2]):
            layer.append((min(a, b), max(a, b)) if standard else (a, b))
        layers.append(layer)
    return ComparatorNetwork.from_layers(n, layers)


@st.composite
def permutations_of(draw, n):
    from sortnet.netcore import ChannelPermutation

    return ChannelPermutation(draw(st.permutations(list(range(1, n + 1)))))


@pytest.fixture(scope="session")
def cat():
    from sortnet.filters import catalog

    return catalog()
