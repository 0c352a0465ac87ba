"""Comparator networks on Boolean inputs.

Channels are numbered from 1.  A word is an ``int`` whose bit ``i - 1``
holds the value on channel ``i``; a word is sorted when all its zeros sit on
the low channels and all its ones on the high channels.  A comparator
``(a, b)`` always routes the minimum to ``a`` and the maximum to ``b``, so
``a > b`` describes a reversed (generalized) comparator.

Output sets are kept as sorted, deduplicated ``numpy.uint64`` arrays, which
limits networks to 63 channels.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

MAX_CHANNELS = 63
WORD = np.uint64


class NetworkError(ValueError):
    pass


class Comparator(NamedTuple):
    top: int
    bottom: int

    @property
    def reversed(self) -> bool:
        return self.top > self.bottom

    @property
    def channels(self) -> tuple[int, int]:
        return (self.top, self.bottom)

    def standard(self) -> "Comparator":
        return Comparator(min(self), max(self))


Layer = tuple  # tuple[Comparator, ...], canonically ordered


def make_layer(comparators: Iterable[Sequence[int]]) -> Layer:
    """Build a canonical layer, checking that comparators are disjoint."""
    comps = sorted({Comparator(int(a), int(b)) for a, b in comparators}, key=lambda c: (min(c), max(c)))
    seen: set[int] = set()
    for c in comps:
        if c.top == c.bottom:
            raise NetworkError(f"comparator {c.top}:{c.bottom} joins a channel to itself")
        if c.top in seen or c.bottom in seen:
            raise NetworkError(f"channel used twice in layer: {c.top}:{c.bottom}")
        seen.update(c)
    return tuple(comps)


def layer_channels(layer: Layer) -> set[int]:
    return {ch for c in layer for ch in c}


@dataclass(frozen=True)
class ComparatorNetwork:
    """An ``n``-channel network given as a sequence of layers.

    Layers may be empty; this happens for decoded SAT models and for
    intermediate results of redundancy removal.
    """

    n: int
    layers: tuple

    def __post_init__(self):
        if not 0 <= self.n <= MAX_CHANNELS:
            raise NetworkError(f"channel count {self.n} outside 0..{MAX_CHANNELS}")
        layers = tuple(make_layer(layer) for layer in self.layers)
        for layer in layers:
            for c in layer:
                if not (1 <= c.top <= self.n and 1 <= c.bottom <= self.n):
                    raise NetworkError(f"comparator {c.top}:{c.bottom} out of range for n={self.n}")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_layers(cls, n: int, layers: Iterable[Iterable[Sequence[int]]]) -> "ComparatorNetwork":
        return cls(n, tuple(tuple(tuple(c) for c in layer) for layer in layers))

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def size(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def is_standard(self) -> bool:
        return not any(c.reversed for layer in self.layers for c in layer)

    def comparators(self) -> Iterator[tuple[int, Comparator]]:
        """Yield ``(layer_index, comparator)`` with 0-based layer indices."""
        for k, layer in enumerate(self.layers):
            for c in layer:
                yield k, c

    def prefix(self, depth: int) -> "ComparatorNetwork":
        return ComparatorNetwork(self.n, self.layers[:depth])

    def suffix(self, start: int) -> "ComparatorNetwork":
        return ComparatorNetwork(self.n, self.layers[start:])

    def __add__(self, other: "ComparatorNetwork") -> "ComparatorNetwork":
        if other.n != self.n:
            raise NetworkError("cannot concatenate networks with different channel counts")
        return ComparatorNetwork(self.n, self.layers + other.layers)

    def compact(self) -> "ComparatorNetwork":
        """Drop empty layers."""
        return ComparatorNetwork(self.n, tuple(layer for layer in self.layers if layer))

    def reflect(self) -> "ComparatorNetwork":
        """Mirror the channel order; outputs become reversed complements."""
        m = self.n + 1
        return ComparatorNetwork(self.n, tuple(tuple((m - c.bottom, m - c.top) for c in layer) for layer in self.layers))

    def to_text(self) -> str:
        return format_network(self)

    def to_json(self) -> dict:
        return {"n": self.n, "layers": [[list(c) for c in layer] for layer in self.layers]}

    def __str__(self) -> str:
        return format_network(self)


# ---------------------------------------------------------------- text / json

def format_network(net: ComparatorNetwork) -> str:
    return "; ".join(" ".join(f"{c.top}:{c.bottom}" for c in layer) or "-" for layer in net.layers)


def parse_network(text: str, n: int | None = None) -> ComparatorNetwork:
    """Parse the ``1:2 3:4; 2:4 3:5`` layer format or the JSON form.

    ``-`` stands for an empty layer.
    Lines starting with ``#`` are comments, except ``# n=17`` which fixes the
    channel count.  Without it the count is the largest channel mentioned.
    """
    stripped = text.strip()
    if not stripped:
        raise NetworkError("empty network description")
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
            return ComparatorNetwork.from_layers(int(data["n"]), data["layers"])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise NetworkError(f"bad network JSON: {exc}") from exc
    body = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("#"):
            directive = s[1:].replace(" ", "")
            if directive.startswith("n="):
                try:
                    n = int(directive[2:])
                except ValueError:
                    raise NetworkError(f"line {lineno}: bad channel count directive") from None
            continue
        body.append((lineno, line))
    if not any(line.strip() for _, line in body):
        raise NetworkError("empty network description")
    layers = []
    max_ch = 0
    for lineno, line in body:
        if not line.strip():
            continue
        segments = line.split(";")
        if len(segments) > 1 and not segments[-1].strip():
            segments.pop()  # trailing ';' only terminates the last layer
        for segment in segments:
            comps = []
            for m in re.finditer(r"\S+", segment):
                tok = m.group()
                if tok == "-":  # explicit empty layer
                    continue
                col = line.index(segment) + m.start() + 1
                parts = tok.split(":")
                if len(parts) != 2 or not all(p.isdigit() for p in parts):
                    raise NetworkError(f"line {lineno}, column {col}: bad comparator {tok!r}")
                a, b = int(parts[0]), int(parts[1])
                if a == 0 or b == 0:
                    raise NetworkError(f"line {lineno}, column {col}: channels are 1-based")
                max_ch = max(max_ch, a, b)
                comps.append((a, b))
            layers.append(comps)
    if n is None:
        n = max_ch
    try:
        return ComparatorNetwork.from_layers(n, layers)
    except NetworkError as exc:
        raise NetworkError(str(exc)) from None


# ------------------------------------------------------------------ words

def all_words(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=WORD)


def sorted_word(n: int, ones: int) -> int:
    return ((1 << ones) - 1) << (n - ones)


def sorted_words(n: int) -> np.ndarray:
    return np.array([sorted_word(n, k) for k in range(n + 1)], dtype=WORD)


def word_to_str(word: int, n: int) -> str:
    return "".join("1" if (int(word) >> i) & 1 else "0" for i in range(n))


def str_to_word(bits: str) -> int:
    bits = bits.strip()
    if any(ch not in "01" for ch in bits):
        raise NetworkError(f"not a bit string: {bits!r}")
    return sum(1 << i for i, ch in enumerate(bits) if ch == "1")


def popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(words, dtype=WORD)).astype(np.int64)


def is_sorted_word(words, n: int):
    """Vectorized sortedness test; works on scalars too."""
    w = np.asarray(words, dtype=WORD)
    low = w & (~w + WORD(1))  # lowest set bit
    full = WORD(1 << n) if n < 64 else WORD(0)
    return (w == 0) | ((w + low) == full)


def apply_comparators(words: np.ndarray, comparators: Iterable[Comparator]) -> np.ndarray:
    w = np.array(words, dtype=WORD, copy=True)
    for a, b in comparators:
        sa, sb = WORD(a - 1), WORD(b - 1)
        swap = ((w >> sa) & ~(w >> sb)) & WORD(1)
        w ^= swap * WORD((1 << (a - 1)) | (1 << (b - 1)))
    return w


def apply_network(net: ComparatorNetwork, words: np.ndarray) -> np.ndarray:
    """Run every word in ``words`` through ``net`` (bit-parallel over the array)."""
    w = np.asarray(words, dtype=WORD)
    for layer in net.layers:
        w = apply_comparators(w, layer)
    return w


def evaluate(net: ComparatorNetwork, word) -> int:
    """Output of ``net`` on one input, given as ``int`` or bit string."""
    if isinstance(word, str):
        if len(word.strip()) != net.n:
            raise NetworkError(f"input has length {len(word.strip())}, network has {net.n} channels")
        word = str_to_word(word)
    elif int(word) >> net.n:
        raise NetworkError(f"input word does not fit in {net.n} channels")
    return int(apply_network(net, np.array([word], dtype=WORD))[0])


def trace(net: ComparatorNetwork, word) -> list[int]:
    """The sequence of values after each layer, input first."""
    if isinstance(word, str):
        if len(word.strip()) != net.n:
            raise NetworkError(f"input has length {len(word.strip())}, network has {net.n} channels")
        word = str_to_word(word)
    elif int(word) >> net.n:
        raise NetworkError(f"input word does not fit in {net.n} channels")
    w = np.array([word], dtype=WORD)
    steps = [int(w[0])]
    for layer in net.layers:
        w = apply_comparators(w, layer)
        steps.append(int(w[0]))
    return steps


# --------------------------------------------------------------- output sets

class OutputSet:
    """A deduplicated set of ``n``-bit words, iterated in ascending order."""

    __slots__ = ("n", "words")

    def __init__(self, n: int, words):
        self.n = n
        self.words = np.unique(np.asarray(words, dtype=WORD))

    def __len__(self) -> int:
        return int(self.words.size)

    def __iter__(self):
        return (int(w) for w in self.words)

    def __contains__(self, word) -> bool:
        i = np.searchsorted(self.words, WORD(word))
        return bool(i < self.words.size and self.words[i] == WORD(word))

    def __eq__(self, other) -> bool:
        return isinstance(other, OutputSet) and self.n == other.n and np.array_equal(self.words, other.words)

    def __repr__(self) -> str:
        return f"OutputSet(n={self.n}, size={len(self)})"

    def issubset(self, other: "OutputSet") -> bool:
        return bool(np.isin(self.words, other.words, assume_unique=True).all())

    @property
    def sorted_count(self) -> int:
        return int(is_sorted_word(self.words, self.n).sum())

    def unsorted(self) -> "OutputSet":
        return OutputSet(self.n, self.words[~is_sorted_word(self.words, self.n)])

    def weight_counts(self) -> np.ndarray:
        return np.bincount(popcount(self.words), minlength=self.n + 1)


def outputs(net: ComparatorNetwork, inputs: OutputSet | None = None) -> OutputSet:
    """Image of the Boolean cube (or of ``inputs``) under ``net``."""
    words = all_words(net.n) if inputs is None else inputs.words
    w = np.asarray(words, dtype=WORD)
    for layer in net.layers:
        w = np.unique(apply_comparators(w, layer))
    return OutputSet(net.n, w)


def is_sorting_network(net: ComparatorNetwork) -> bool:
    """Zero-one principle check over all ``2**n`` inputs, chunked for memory."""
    n = net.n
    chunk = 1 << 20
    total = 1 << n
    for start in range(0, total, chunk):
        w = np.arange(start, min(total, start + chunk), dtype=WORD)
        w = apply_network(net, w)
        if not is_sorted_word(w, n).all():
            return False
    return True


def sorts_set(net: ComparatorNetwork) -> OutputSet:
    """All inputs that ``net`` maps to sorted words."""
    words = all_words(net.n)
    return OutputSet(net.n, words[is_sorted_word(apply_network(net, words), net.n)])


# ------------------------------------------------------------------ windows

@dataclass(frozen=True)
class WindowStats:
    leading_zeros: int
    trailing_ones: int
    window: int


def window_stats(word, n: int | None = None) -> WindowStats:
    if isinstance(word, str):
        n = len(word)
        word = str_to_word(word)
    if n is None:
        raise TypeError("n is required for integer words")
    word = int(word)
    r = 0
    while r < n and not (word >> r) & 1:
        r += 1
    s = 0
    while s < n - r and (word >> (n - 1 - s)) & 1:
        s += 1
    return WindowStats(r, s, n - r - s)


def window_bounds(words: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading-zero and trailing-one counts for an array of words."""
    w = np.asarray(words, dtype=WORD)
    r = np.zeros(w.shape, dtype=np.int64)
    alive = np.ones(w.shape, dtype=bool)
    for i in range(n):
        alive &= ((w >> WORD(i)) & WORD(1)) == 0
        r += alive
    s = np.zeros(w.shape, dtype=np.int64)
    alive = np.ones(w.shape, dtype=bool)
    for i in range(n - 1, -1, -1):
        alive &= ((w >> WORD(i)) & WORD(1)) == 1
        s += alive
    return r, s


def window_sum(words: OutputSet | np.ndarray, n: int | None = None) -> int:
    if isinstance(words, OutputSet):
        n, words = words.n, words.words
    r, s = window_bounds(words, n)
    return int((n - r - s).sum())


# ------------------------------------------------------------- permutations

class ChannelPermutation:
    """A bijection on channels ``1..n``; ``perm[i]`` is the image of ``i``."""

    __slots__ = ("mapping",)

    def __init__(self, images: Sequence[int]):
        images = tuple(int(x) for x in images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise NetworkError(f"not a permutation of 1..{len(images)}: {images}")
        self.mapping = images

    @classmethod
    def identity(cls, n: int) -> "ChannelPermutation":
        return cls(range(1, n + 1))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> "ChannelPermutation":
        images = list(range(1, n + 1))
        images[i - 1], images[j - 1] = j, i
        return cls(images)

    @property
    def n(self) -> int:
        return len(self.mapping)

    def __call__(self, channel: int) -> int:
        return self.mapping[channel - 1]

    def __eq__(self, other) -> bool:
        return isinstance(other, ChannelPermutation) and self.mapping == other.mapping

    def __hash__(self) -> int:
        return hash(self.mapping)

    def __repr__(self) -> str:
        return f"ChannelPermutation({list(self.mapping)})"

    def inverse(self) -> "ChannelPermutation":
        inv = [0] * self.n
        for i, p in enumerate(self.mapping, 1):
            inv[p - 1] = i
        return ChannelPermutation(inv)

    def then(self, other: "ChannelPermutation") -> "ChannelPermutation":
        """The permutation applying ``self`` first and ``other`` second."""
        return ChannelPermutation(other(p) for p in self.mapping)

    def apply_words(self, words) -> np.ndarray:
        w = np.asarray(words, dtype=WORD)
        out = np.zeros(w.shape, dtype=WORD)
        for i, p in enumerate(self.mapping):
            out |= ((w >> WORD(i)) & WORD(1)) << WORD(p - 1)
        return out

    def apply_set(self, s: OutputSet) -> OutputSet:
        return OutputSet(s.n, self.apply_words(s.words))

    def to_json(self) -> list[int]:
        return list(self.mapping)


def permute(net: ComparatorNetwork, perm: ChannelPermutation) -> ComparatorNetwork:
    """Relabel channels; the result may contain reversed comparators."""
    if perm.n != net.n:
        raise NetworkError(f"permutation on {perm.n} channels applied to {net.n}-channel network")
    return ComparatorNetwork(net.n, tuple(tuple((perm(c.top), perm(c.bottom)) for c in layer) for layer in net.layers))


def _swap_in(layer, i: int, j: int):
    def sw(x):
        return j if x == i else i if x == j else x
    return tuple((sw(a), sw(b)) for a, b in layer)


def standardize_forward(net: ComparatorNetwork) -> ComparatorNetwork:
    """Untangle front to back: flip each reversed comparator and swap its
    channels in every later layer."""
    layers = [list(layer) for layer in net.layers]
    for k in range(len(layers)):
        for idx, (a, b) in enumerate(layers[k]):
            if a > b:
                layers[k][idx] = (b, a)
                for m in range(k + 1, len(layers)):
                    layers[m] = list(_swap_in(layers[m], a, b))
    return ComparatorNetwork(net.n, tuple(tuple(layer) for layer in layers))


def standardize_dual(net: ComparatorNetwork) -> ComparatorNetwork:
    """Untangle back to front, leaving the shape of the last layers intact.

    Repeatedly pick the last layer holding a reversed comparator ``(i, j)``
    and swap ``i`` and ``j`` in that layer and every earlier one.
    """
    layers = [tuple(tuple(c) for c in layer) for layer in net.layers]
    while True:
        k = next((k for k in range(len(layers) - 1, -1, -1) if any(a > b for a, b in layers[k])), None)
        if k is None:
            break
        i, j = next((a, b) for a, b in layers[k] if a > b)
        for m in range(k + 1):
            layers[m] = _swap_in(layers[m], i, j)
    return ComparatorNetwork(net.n, tuple(layers))


# --------------------------------------------------------------- redundancy

def is_redundant(net: ComparatorNetwork, layer_index: int, comp: Sequence[int]) -> bool:
    """True iff ``comp`` (in 0-based layer ``layer_index``) never sees a
    larger value on its min channel than on its max channel."""
    if not 0 <= layer_index < net.depth:
        raise IndexError(f"layer index {layer_index} out of range for depth {net.depth}")
    comp = Comparator(*comp)
    if comp not in net.layers[layer_index]:
        raise NetworkError(f"comparator {comp.top}:{comp.bottom} is not in layer {layer_index}")
    # comparators of the same layer are disjoint from comp, so only earlier layers matter
    reach = outputs(net.prefix(layer_index))
    return not _ever_swaps(reach.words, comp)


def _ever_swaps(words: np.ndarray, comp: Comparator) -> bool:
    a, b = comp
    bad = ((words >> WORD(a - 1)) & ~(words >> WORD(b - 1))) & WORD(1)
    return bool(bad.any())


def remove_redundant(net: ComparatorNetwork, keep_empty: bool = False) -> ComparatorNetwork:
    """Drop redundant comparators until none is left.

    The function computed on every input is unchanged.  Emptied layers are
    removed unless ``keep_empty`` is set.
    """
    current = net
    while True:
        reach = all_words(net.n)
        new_layers = []
        removed = False
        for layer in current.layers:
            kept = []
            for c in layer:
                if _ever_swaps(reach, c):
                    kept.append(c)
                else:
                    removed = True
            reach = np.unique(apply_comparators(reach, kept))
            new_layers.append(tuple(kept))
        current = ComparatorNetwork(net.n, tuple(new_layers))
        if not removed:
            break
    return current if keep_empty else current.compact()


# -------------------------------------------------------------- subsumption

def _weight_signatures(words: np.ndarray, n: int):
    """Per weight class and channel: how many words carry a 1 / a 0 there."""
    weights = popcount(words)
    ones = np.zeros((n + 1, n), dtype=np.int64)
    zeros = np.zeros((n + 1, n), dtype=np.int64)
    for i in range(n):
        bit = ((words >> WORD(i)) & WORD(1)).astype(bool)
        ones[:, i] = np.bincount(weights[bit], minlength=n + 1)[: n + 1]
        zeros[:, i] = np.bincount(weights[~bit], minlength=n + 1)[: n + 1]
    return weights, ones, zeros


def find_set_embedding(src: OutputSet, dst: OutputSet) -> ChannelPermutation | None:
    """Search for a channel permutation mapping ``src`` into ``dst``.

    Backtracks over channel images.  Candidates are filtered by per-weight
    one/zero counts (an injective map cannot increase them) and each partial
    assignment is checked by projecting both sets onto the assigned channels.
    """
    n = src.n
    if dst.n != n:
        raise NetworkError("sets over different channel counts")
    if len(src) > len(dst):
        return None
    if (src.weight_counts() > dst.weight_counts()).any():
        return None
    sw, s_ones, s_zeros = _weight_signatures(src.words, n)
    dw, d_ones, d_zeros = _weight_signatures(dst.words, n)
    cand = []
    for i in range(n):
        ok = [j for j in range(n) if (s_ones[:, i] <= d_ones[:, j]).all() and (s_zeros[:, i] <= d_zeros[:, j]).all()]
        if not ok:
            return None
        cand.append(ok)
    if not _has_perfect_matching(cand, n):
        return None
    order = sorted(range(n), key=lambda i: (len(cand[i]), i))
    s_bits = [((src.words >> WORD(i)) & WORD(1)).astype(np.int64) for i in range(n)]
    d_bits = [((dst.words >> WORD(j)) & WORD(1)).astype(np.int64) for j in range(n)]
    image = [-1] * n
    used = [False] * n

    def rec(t: int, s_code: np.ndarray, d_code: np.ndarray) -> bool:
        if t == n:
            return True
        i = order[t]
        for j in cand[i]:
            if used[j]:
                continue
            sc = s_code * 2 + s_bits[i]
            dc = d_code * 2 + d_bits[j]
            if not np.isin(np.unique(sc), dc).all():
                continue
            used[j] = True
            image[i] = j
            if rec(t + 1, sc, dc):
                return True
            used[j] = False
        image[i] = -1
        return False

    # weight goes in the high part of the key so projections compare within a class
    if not rec(0, sw.astype(np.int64), dw.astype(np.int64)):
        return None
    return ChannelPermutation([j + 1 for j in image])


def _has_perfect_matching(cand: list[list[int]], n: int) -> bool:
    match_of = [-1] * n

    def augment(i, seen):
        for j in cand[i]:
            if not seen[j]:
                seen[j] = True
                if match_of[j] < 0 or augment(match_of[j], seen):
                    match_of[j] = i
                    return True
        return False

    return all(augment(i, [False] * n) for i in range(n))


def subsumes(c: ComparatorNetwork, c2: ComparatorNetwork) -> ChannelPermutation | None:
    """A permutation ``p`` with ``p(outputs(c))`` inside ``outputs(c2)``, if any."""
    if c.n != c2.n:
        raise NetworkError("networks have different channel counts")
    return find_set_embedding(outputs(c), outputs(c2))


def cosubsumes(c: ComparatorNetwork, c2: ComparatorNetwork) -> ChannelPermutation | None:
    """A permutation ``p`` with ``p(sorts(c))`` inside ``sorts(c2)``, if any."""
    if c.n != c2.n:
        raise NetworkError("networks have different channel counts")
    return find_set_embedding(sorts_set(c), sorts_set(c2))


def monotone_check(net: ComparatorNetwork) -> bool:
    """Exhaustively confirm ``x <= y`` implies ``net(x) <= net(y)``.

    Only pairs differing in a single bit need checking; the order is the
    transitive closure of those covering pairs.
    """
    words = all_words(net.n)
    out = apply_network(net, words)
    for i in range(net.n):
        bit = WORD(1 << i)
        low = words[(words & bit) == 0]
        lo_out = out[low.astype(np.int64)]
        hi_out = out[(low | bit).astype(np.int64)]
        if ((lo_out & ~hi_out) != 0).any():
            return False
    return True


def enumerate_sorting_extensions(prefix: ComparatorNetwork, max_extra: int) -> int | None:
    """Fewest extra layers that turn ``prefix`` into a sorting network.

    Brute force over every layer sequence (memoized on output sets); meant
    for tiny ``n`` only.  Returns ``None`` if ``max_extra`` layers do not
    suffice.
    """
    from .filters import enumerate_layers  # local import: filters depends on netcore

    n = prefix.n
    target = OutputSet(n, sorted_words(n))
    start = outputs(prefix)
    if start == target:
        return 0
    layers = [()] + list(enumerate_layers(n))
    frontier = {start.words.tobytes(): start.words}
    for extra in range(1, max_extra + 1):
        nxt = {}
        for words in frontier.values():
            for layer in layers:
                w = np.unique(apply_comparators(words, layer))
                nxt.setdefault(w.tobytes(), w)
        if any(np.array_equal(w, target.words) for w in nxt.values()):
            return extra
        frontier = nxt
    return None

