"""The end of a network: blocks, last layer normal form, co-saturation and
counting of admissible last layers and two-layer suffixes."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from .netcore import (
    ComparatorNetwork,
    NetworkError,
    all_words,
    apply_comparators,
    is_sorting_network,
    layer_channels,
    make_layer,
    remove_redundant,
    str_to_word,
)


@dataclass(frozen=True)
class BlockPartition:
    k: int
    blocks: tuple  # tuple of sorted channel tuples, ordered by smallest channel


def k_blocks(net: ComparatorNetwork, k: int) -> BlockPartition:
    """Connected components of the channels under the comparators of the
    layers after ``k`` (layers are numbered from 1, so ``k = depth - 1``
    gives the blocks of the last layer)."""
    if not 0 <= k < net.depth:
        raise IndexError(f"k={k} outside 0..{net.depth - 1}")
    parent = list(range(net.n + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for layer in net.layers[k:]:
        for a, b in layer:
            parent[find(a)] = find(b)
    groups: dict[int, list[int]] = {}
    for ch in range(1, net.n + 1):
        groups.setdefault(find(ch), []).append(ch)
    return BlockPartition(k, tuple(sorted((tuple(g) for g in groups.values()), key=lambda g: g[0])))


@lru_cache(maxsize=64)
def _sorts(net: ComparatorNetwork) -> bool:
    return is_sorting_network(net)


def _require_sorting(net: ComparatorNetwork):
    if not _sorts(net):
        raise NetworkError("operation requires a sorting network")


def mixed_block_check(net: ComparatorNetwork, word) -> bool:
    """True iff, for every ``k``, at most one ``k``-block holds both a 0
    and a 1 when the values leave layer ``k``."""
    _require_sorting(net)
    if isinstance(word, str):
        word = str_to_word(word)
    values = np.array([word], dtype=np.uint64)
    for k in range(net.depth):
        if k:
            values = apply_comparators(values, net.layers[k - 1])
        w = int(values[0])
        mixed = 0
        for block in k_blocks(net, k).blocks:
            bits = {(w >> (ch - 1)) & 1 for ch in block}
            mixed += len(bits) == 2
        if mixed > 1:
            return False
    return True


def validate_suffix_conditions(net: ComparatorNetwork) -> list[str]:
    """Violations of the shape every non-redundant sorting network has at its
    end: adjacent-only last layer, and penultimate comparators spanning at
    most three channels with the matching last-layer comparators."""
    problems = []
    if net.depth == 0:
        return problems
    last = set(net.layers[-1])
    for a, b in net.layers[-1]:
        if b - a != 1:
            problems.append(f"last layer comparator {a}:{b} is not between adjacent channels")
    if net.depth >= 2:
        for a, b in net.layers[-2]:
            span = b - a
            if span > 3:
                problems.append(f"penultimate comparator {a}:{b} spans more than 3 channels")
            elif span == 2 and (a, a + 1) not in last and (a + 1, a + 2) not in last:
                problems.append(f"penultimate comparator {a}:{b} needs {a}:{a + 1} or {a + 1}:{a + 2} in the last layer")
            elif span == 3 and not ((a, a + 1) in last and (a + 2, a + 3) in last):
                problems.append(f"penultimate comparator {a}:{b} needs {a}:{a + 1} and {a + 2}:{a + 3} in the last layer")
    return problems


# ----------------------------------------------------------------- llnf

def _unused_pairs(layer, n: int) -> list[int]:
    used = layer_channels(layer)
    return [j for j in range(1, n) if j not in used and j + 1 not in used]


def is_llnf(net: ComparatorNetwork) -> bool:
    if net.depth == 0:
        return False
    last = net.layers[-1]
    return all(b - a == 1 for a, b in last) and not _unused_pairs(last, net.n)


def _fill_last_layer(layers: list, n: int):
    last = list(layers[-1])
    used = layer_channels(last)
    for j in range(1, n):
        if j not in used and j + 1 not in used:
            last.append((j, j + 1))
            used.update((j, j + 1))
    layers[-1] = make_layer(last)


def to_llnf(net: ComparatorNetwork) -> ComparatorNetwork:
    """Same-depth sorting network in last layer normal form.

    Redundant comparators are removed first (emptied layers are kept so the
    depth does not change); then ``(j, j+1)`` is added to the last layer for
    every pair of adjacent channels both left unused, scanning upwards.
    """
    _require_sorting(net)
    if is_llnf(net):
        return net
    if net.depth == 0:
        raise NetworkError("a network without layers has no last layer")
    layers = list(remove_redundant(net, keep_empty=True).layers)
    _fill_last_layer(layers, net.n)
    return ComparatorNetwork(net.n, tuple(layers))


# ---------------------------------------------------------- co-saturation

def _last_blocks(last, n: int) -> list[tuple[int, ...]]:
    partner = {}
    for a, b in last:
        partner[a], partner[b] = b, a
    blocks, ch = [], 1
    while ch <= n:
        if partner.get(ch) == ch + 1:
            blocks.append((ch, ch + 1))
            ch += 2
        else:
            blocks.append((ch,))
            ch += 1
    return blocks


def _cosat_violations(pen, last, n: int) -> tuple[list[int], list[tuple[int, str]]]:
    """Block pairs breaking condition (ii) and comparators breaking (iii)."""
    used_pen = layer_channels(pen)
    used_last = layer_channels(last)
    blocks = _last_blocks(last, n)
    free = [any(ch not in used_pen for ch in b) for b in blocks]
    bad_pairs = [t for t in range(len(blocks) - 1) if free[t] and free[t + 1]]
    bad_comps = []
    for a, b in last:
        if b == a + 1 and a not in used_pen and b not in used_pen:
            if b + 1 <= n and b + 1 not in used_last:
                bad_comps.append((a, "below"))
            elif a - 1 >= 1 and a - 1 not in used_last:
                bad_comps.append((a, "above"))
    return bad_pairs, bad_comps


def is_cosaturated(net: ComparatorNetwork) -> bool:
    """Last layer in llnf, no two consecutive last-layer blocks both with a
    channel idle in the penultimate layer, and no last-layer comparator idle
    in the penultimate layer next to a channel idle in the last layer."""
    if not is_llnf(net):
        return False
    if net.depth == 1:
        return True
    bad_pairs, bad_comps = _cosat_violations(net.layers[-2], net.layers[-1], net.n)
    return not bad_pairs and not bad_comps


def cosaturate(net: ComparatorNetwork) -> ComparatorNetwork:
    """Same-depth co-saturated sorting network.

    After normalizing the last layer, redundant comparators are added to the
    penultimate layer between neighbouring blocks that both have an idle
    channel there; a last-layer comparator idle in the penultimate layer and
    next to a channel idle in the last layer is moved one layer up and the
    last layer re-completed.  Both steps run left to right until nothing
    changes.
    """
    net = to_llnf(net)
    if net.depth < 2:
        return net
    n = net.n
    layers = list(net.layers)
    while True:
        pen, last = list(layers[-2]), list(layers[-1])
        bad_pairs, bad_comps = _cosat_violations(pen, last, n)
        if bad_pairs:
            blocks = _last_blocks(last, n)
            used = layer_channels(pen)
            for t in range(len(blocks) - 1):
                left, right = blocks[t], blocks[t + 1]
                while True:
                    lf = [ch for ch in left if ch not in used]
                    rf = [ch for ch in right if ch not in used]
                    if not lf or not rf:
                        break
                    pen.append((lf[-1], rf[0]))
                    used.update((lf[-1], rf[0]))
            layers[-2], layers[-1] = make_layer(pen), make_layer(last)
            continue
        if bad_comps:
            i, side = bad_comps[0]
            last.remove((i, i + 1))
            pen.append((i, i + 1))
            used_last = layer_channels(last)
            if side == "below":
                last.append((i + 1, i + 2))
                if i > 1 and i - 1 not in used_last:
                    last.append((i - 1, i))
            else:
                last.append((i - 1, i))
                if i + 2 <= n and i + 2 not in used_last:
                    last.append((i + 1, i + 2))
            layers[-2], layers[-1] = make_layer(pen), make_layer(last)
            continue
        break
    return ComparatorNetwork(n, tuple(layers))


# ------------------------------------------------------------- enumeration

@dataclass
class EnumerationReport:
    n: int
    kind: str
    count: int
    items: list | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {"n": self.n, "kind": self.kind, "count": self.count}


def _adjacent_layers(n: int, allow_empty_pairs: bool) -> Iterator[tuple]:
    """Layers of adjacent comparators; with ``allow_empty_pairs`` false, two
    neighbouring channels may not both stay unused."""

    def rec(ch: int, prev_unused: bool):
        if ch > n:
            yield ()
            return
        if allow_empty_pairs or not prev_unused:
            for rest in rec(ch + 1, True):
                yield rest
        if ch + 1 <= n:
            for rest in rec(ch + 2, False):
                yield ((ch, ch + 1),) + rest

    yield from rec(1, False)


def enumerate_last_layers(n: int, mode: str = "nonredundant", emit_items: bool = False) -> EnumerationReport:
    """Possible last layers: ``nonredundant`` counts non-empty adjacent-only
    layers, ``llnf`` additionally forbids two neighbouring unused channels."""
    if n < 1:
        raise NetworkError("n must be positive")
    if mode == "nonredundant":
        items = [make_layer(layer) for layer in _adjacent_layers(n, True) if layer]
    elif mode == "llnf":
        items = [make_layer(layer) for layer in _adjacent_layers(n, False)]
    else:
        raise NetworkError(f"unknown mode {mode!r}")
    items.sort()
    return EnumerationReport(n, mode, len(items), items if emit_items else None)


def fibonacci(k: int) -> int:
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def padovan(k: int) -> int:
    seq = [1, 0, 0]
    while len(seq) <= k:
        seq.append(seq[-3] + seq[-2])
    return seq[k]


# Two-layer co-saturated suffixes are walked block by block.  The last layer
# is a sequence of blocks, a pair (i, i+1) joined by a comparator or a single
# idle channel, never two singles in a row.  Penultimate comparators join
# channels of neighbouring blocks.  State while scanning: the current block,
# which of its channels are already taken by comparators to its left
# neighbour, the left neighbour's kind and whether it kept an idle channel.

def _cross_matchings(left_free: tuple[int, ...], right: tuple[int, ...]) -> list[tuple]:
    out = [()]
    for a in left_free:
        for b in right:
            out.append(((a, b),))
    if len(left_free) == 2 and len(right) == 2:
        a1, a2 = left_free
        b1, b2 = right
        out.append(((a1, b1), (a2, b2)))
        out.append(((a1, b2), (a2, b1)))
    return out


def _block_ok(size: int, used: set, block: tuple, prev_size: int | None, prev_free: bool, next_size: int | None) -> bool:
    has_free = len(used) < size
    if prev_free and has_free:
        return False
    if size == 2 and not used:
        if prev_size == 1 or next_size == 1:
            return False
    return True


def _walk_cosat(n: int, count_only: bool):
    @lru_cache(maxsize=None)
    def count(start: int, size: int, used_mask: int, prev_size, prev_free: bool) -> int:
        block = tuple(range(start, start + size))
        total = 0
        nxt_start = start + size
        if nxt_start > n:
            used = {block[i] for i in range(size) if used_mask >> i & 1}
            return int(_block_ok(size, used, block, prev_size, prev_free, None))
        for nsize in (1, 2):
            if nsize == 1 and size == 1:
                continue
            if nxt_start + nsize - 1 > n:
                continue
            nblock = tuple(range(nxt_start, nxt_start + nsize))
            free = tuple(ch for i, ch in enumerate(block) if not used_mask >> i & 1)
            for cross in _cross_matchings(free, nblock):
                used = {block[i] for i in range(size) if used_mask >> i & 1} | {a for a, _ in cross}
                if not _block_ok(size, used, block, prev_size, prev_free, nsize):
                    continue
                nmask = 0
                for _, b in cross:
                    nmask |= 1 << (b - nxt_start)
                total += count(nxt_start, nsize, nmask, size, len(used) < size)
        return total

    def items(start, size, used, prev_size, prev_free, pen, last):
        block = tuple(range(start, start + size))
        last = last + ((block,) if size == 2 else ())
        nxt_start = start + size
        if nxt_start > n:
            if _block_ok(size, used, block, prev_size, prev_free, None):
                yield pen, last
            return
        for nsize in (1, 2):
            if (nsize == 1 and size == 1) or nxt_start + nsize - 1 > n:
                continue
            nblock = tuple(range(nxt_start, nxt_start + nsize))
            free = tuple(ch for ch in block if ch not in used)
            for cross in _cross_matchings(free, nblock):
                now_used = used | {a for a, _ in cross}
                if not _block_ok(size, now_used, block, prev_size, prev_free, nsize):
                    continue
                yield from items(nxt_start, nsize, frozenset(b for _, b in cross), size,
                                 len(now_used) < size, pen + cross, last)

    if count_only:
        return sum(count(1, s, 0, None, False) for s in (1, 2) if s <= n)
    return ((make_layer(p), make_layer(l)) for s in (1, 2) if s <= n
            for p, l in items(1, s, frozenset(), None, False, (), ()))


def enumerate_cosat_suffixes(n: int, emit_items: bool = False) -> EnumerationReport:
    """Two-layer suffixes ``(penultimate, last)`` of co-saturated networks
    whose penultimate comparators join neighbouring last-layer blocks."""
    if n < 3:
        raise NetworkError("co-saturated suffixes are counted for n >= 3")
    if emit_items:
        items = list(_walk_cosat(n, False))
        return EnumerationReport(n, "cosaturated-2-suffix", len(items), items)
    return EnumerationReport(n, "cosaturated-2-suffix", _walk_cosat(n, True))


def iter_cosat_suffixes(n: int) -> Iterator[tuple]:
    return _walk_cosat(n, False)


def is_cosat_suffix(pen, last, n: int) -> bool:
    """Direct check of a candidate suffix, used to cross-check the walk."""
    last = make_layer(last)
    pen = make_layer(pen)
    net = ComparatorNetwork(n, (pen, last))
    if not pen and not last:
        return False
    if not is_llnf(net):
        return False
    blocks = _last_blocks(last, n)
    where = {ch: t for t, b in enumerate(blocks) for ch in b}
    if any(abs(where[a] - where[b]) != 1 for a, b in pen):
        return False
    bad_pairs, bad_comps = _cosat_violations(pen, last, n)
    return not bad_pairs and not bad_comps


def all_sorting_words(n: int) -> np.ndarray:
    return all_words(n)
