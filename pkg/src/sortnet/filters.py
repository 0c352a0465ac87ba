"""Prefixes: canonical first layers, Green filters, saturated two-layer
prefixes, subsumption-pruned complete filter sets and the network catalog."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterator

import numpy as np

from .netcore import (
    ComparatorNetwork,
    NetworkError,
    OutputSet,
    all_words,
    apply_comparators,
    find_set_embedding,
    make_layer,
    outputs,
    parse_network,
)

log = logging.getLogger(__name__)

DEFAULT_FILTER_LIMIT = 11


def first_layer_P(n: int):
    """Pairs of neighbours: (1,2), (3,4), ..."""
    if n < 2:
        raise NetworkError("a first layer needs at least two channels")
    return make_layer((2 * i - 1, 2 * i) for i in range(1, n // 2 + 1))


def first_layer_BZ(n: int):
    """Nested pairs: (1,n), (2,n-1), ..."""
    if n < 2:
        raise NetworkError("a first layer needs at least two channels")
    return make_layer((i, n + 1 - i) for i in range(1, n // 2 + 1))


def is_maximal(layer, n: int) -> bool:
    return len(layer) == n // 2


def green_filter(n: int, depth: int | None = None) -> ComparatorNetwork:
    """The first ``depth`` layers of the Green filter on ``n`` channels.

    Layer ``t`` joins ``i`` and ``i + 2**(t-1)`` whenever bit ``t-1`` of
    ``i - 1`` is clear.
    """
    if n < 1 or n & (n - 1):
        raise NetworkError(f"Green filters need a power of two, got {n}")
    log_n = n.bit_length() - 1
    depth = log_n if depth is None else depth
    if not 0 <= depth <= log_n:
        raise NetworkError(f"depth must be between 0 and {log_n}")
    layers = []
    for t in range(1, depth + 1):
        stride = 1 << (t - 1)
        layers.append([(i, i + stride) for i in range(1, n + 1) if not (i - 1) & stride])
    return ComparatorNetwork.from_layers(n, layers)


def embed(net: ComparatorNetwork, n: int, offset: int = 0) -> ComparatorNetwork:
    """Place ``net`` on channels ``offset+1 ..`` of a wider network."""
    if net.n + offset > n:
        raise NetworkError("network does not fit")
    return ComparatorNetwork(n, tuple(tuple((c.top + offset, c.bottom + offset) for c in layer) for layer in net.layers))


# ------------------------------------------------------------------ layers

def count_layers(n: int) -> int:
    """Number of non-empty layers on ``n`` channels (matchings of K_n minus one)."""
    a, b = 1, 1  # involution numbers T(0), T(1)
    for m in range(2, n + 1):
        a, b = b, b + (m - 1) * a
    return (b if n >= 1 else a) - 1


def _matchings(channels: tuple[int, ...]) -> Iterator[tuple]:
    if not channels:
        yield ()
        return
    first, rest = channels[0], channels[1:]
    yield from _matchings(rest)
    for idx, partner in enumerate(rest):
        remaining = rest[:idx] + rest[idx + 1:]
        for m in _matchings(remaining):
            yield ((first, partner),) + m


def enumerate_layers(n: int, channels=None) -> Iterator[tuple]:
    """Stream every non-empty layer on ``n`` channels (or on ``channels``)."""
    if channels is None:
        if n > 20:
            raise NetworkError("refusing to stream layers for n > 20")
        channels = range(1, n + 1)
    for m in _matchings(tuple(channels)):
        if m:
            yield make_layer(m)


# -------------------------------------------------------------- saturation

def _bitset(words: np.ndarray, n: int) -> int:
    mask = np.zeros(1 << n, dtype=bool)
    mask[words.astype(np.int64)] = True
    return int.from_bytes(np.packbits(mask, bitorder="little").tobytes(), "little")


def saturated_second_layers(first, n: int) -> list[tuple]:
    """Every second layer ``L2`` after ``first`` that cannot be enlarged to a
    layer with strictly fewer outputs (an output subset).

    The empty second layer is included when it is itself saturated.
    """
    first = make_layer(first)
    if not is_maximal(first, n):
        raise NetworkError("the first layer must be maximal")
    base = np.unique(apply_comparators(all_words(n), first))
    candidates = [()] + list(enumerate_layers(n))
    out_bits = {}
    for layer in candidates:
        out_bits[layer] = _bitset(np.unique(apply_comparators(base, layer)), n)

    result = []
    for layer in candidates:
        mine = out_bits[layer]
        free = tuple(ch for ch in range(1, n + 1) if all(ch not in c for c in layer))
        saturated = True
        for extra in _matchings(free):
            if not extra:
                continue
            other = out_bits[make_layer(layer + extra)]
            if other != mine and other & ~mine == 0:
                saturated = False
                break
        if saturated:
            result.append(layer)
    return result


# ------------------------------------------------------------- filter sets

@dataclass
class FilterSet:
    n: int
    prefixes: list[ComparatorNetwork]
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.prefixes)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(p.to_json()) + "\n" for p in self.prefixes)

    @classmethod
    def from_jsonl(cls, text: str, provenance: dict | None = None) -> "FilterSet":
        prefixes = [parse_network(line) for line in text.splitlines() if line.strip()]
        if not prefixes:
            raise NetworkError("empty filter file")
        n = prefixes[0].n
        if any(p.n != n for p in prefixes):
            raise NetworkError("filter file mixes channel counts")
        return cls(n, prefixes, provenance or {"source": "file"})


def _dual_words(words: np.ndarray, n: int) -> np.ndarray:
    """Reverse and complement each word: the outputs of the mirrored network."""
    w = np.asarray(words, dtype=np.uint64)
    out = np.zeros(w.shape, dtype=np.uint64)
    for i in range(n):
        bit = ((w >> np.uint64(i)) & np.uint64(1)) ^ np.uint64(1)
        out |= bit << np.uint64(n - 1 - i)
    return out


def prefix_subsumes(a: OutputSet, b: OutputSet, b_dual: OutputSet):
    """Witness that prefix ``a`` makes prefix ``b`` unnecessary: ``a`` embeds
    into ``b`` or into ``b``'s mirror image."""
    return find_set_embedding(a, b) or find_set_embedding(a, b_dual)


def prune_by_subsumption(candidates: list[ComparatorNetwork]) -> list[ComparatorNetwork]:
    """Reduce ``candidates`` to an antichain, smallest output sets first."""
    entries = []
    seen = set()
    for net in candidates:
        o = outputs(net)
        key = o.words.tobytes()
        if key in seen:
            continue
        seen.add(key)
        entries.append((len(o), net.to_text(), net, o, OutputSet(o.n, _dual_words(o.words, o.n))))
    entries.sort(key=lambda e: (e[0], e[1]))
    kept: list[tuple] = []
    for size, text, net, o, dual in entries:
        if any(prefix_subsumes(k[3], o, dual) for k in kept):
            continue
        kept = [k for k in kept if not prefix_subsumes(o, k[3], k[4])]
        kept.append((size, text, net, o, dual))
    return [k[2] for k in kept]


def complete_filter_set(n: int, limit: int = DEFAULT_FILTER_LIMIT) -> FilterSet:
    """A complete set of two-layer filters whose first layer is (1,2),(3,4),..."""
    if n > limit:
        raise NetworkError(f"generating filters for n={n} exceeds the limit {limit}; load a precomputed set instead")
    if n < 2:
        raise NetworkError("filters need at least two channels")
    first = first_layer_P(n)
    seconds = saturated_second_layers(first, n)
    candidates = [ComparatorNetwork(n, (first, second)) for second in seconds]
    kept = prune_by_subsumption(candidates)
    log.info("n=%d: %d saturated prefixes pruned to %d", n, len(candidates), len(kept))
    return FilterSet(n, kept, {"first_layer": "P", "saturated": len(candidates), "generator": "saturate+subsume"})


# ----------------------------------------------------------------- catalog

@dataclass(frozen=True)
class KnownBounds:
    """Best known size/depth bounds for 1 <= n <= 20, as (lower, upper)."""

    size: dict
    depth: dict

    def t(self, n: int) -> tuple[int, int]:
        return self.depth[n]

    def s(self, n: int) -> tuple[int, int]:
        return self.size[n]


@lru_cache(maxsize=1)
def _catalog_data() -> dict:
    return json.loads(resources.files("sortnet").joinpath("data/catalog.json").read_text())


def known_bounds() -> KnownBounds:
    kb = _catalog_data()["known_bounds"]
    size = {n: (lo, hi) for n, (lo, hi) in enumerate(zip(kb["size_lower"], kb["size_upper"]), 1)}
    depth = {n: (lo, hi) for n, (lo, hi) in enumerate(zip(kb["depth_lower"], kb["depth_upper"]), 1)}
    return KnownBounds(size, depth)


def filter_set_sizes() -> dict[int, int]:
    return {int(k): v for k, v in _catalog_data()["filter_set_sizes"].items()}


def catalog() -> dict[str, ComparatorNetwork]:
    """Named networks; ``<name>_prefix`` entries hold the fixed prefixes."""
    out = {}
    for name, entry in _catalog_data()["networks"].items():
        net = parse_network(entry["text"], entry["n"])
        out[name] = net
        if "prefix_depth" in entry:
            out[name + "_prefix"] = net.prefix(entry["prefix_depth"])
    return out
