"""CNF encoding of "some depth-d comparator network sorts these inputs",
with window folding, inert-update pruning, oneDown/oneUp propagation
clauses and last-layer constraints."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import __version__
from .netcore import ComparatorNetwork, NetworkError, OutputSet, is_sorted_word, window_bounds

log = logging.getLogger(__name__)


class EncodingError(ValueError):
    pass


class _Const:
    __slots__ = ("value",)

    def __init__(self, value: bool):
        self.value = value

    def __repr__(self):
        return "TRUE" if self.value else "FALSE"


TRUE = _Const(True)
FALSE = _Const(False)


def _neg(x):
    if x is TRUE:
        return FALSE
    if x is FALSE:
        return TRUE
    return -x


@dataclass(frozen=True)
class EncodeOptions:
    improved_windows: bool = True
    prune_inert_updates: bool = True
    one_up_down_clauses: bool = True
    last_layer_necessary: bool = False
    last_layer_implications: bool = False
    cosat_breaks: bool = False
    generalized_phi1_per_layer: bool = False

    @classmethod
    def base(cls) -> "EncodeOptions":
        return cls(False, False, False, False, False, False, False)

    @classmethod
    def all_on(cls) -> "EncodeOptions":
        return cls(True, True, True, True, True, True, False)

    @property
    def needs_two_layers(self) -> bool:
        return self.last_layer_implications or self.cosat_breaks or self.generalized_phi1_per_layer

    def without_two_layer_flags(self) -> "EncodeOptions":
        return EncodeOptions(self.improved_windows, self.prune_inert_updates, self.one_up_down_clauses,
                             self.last_layer_necessary, False, False, False)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class _VBlock:
    word: int
    lo: int
    hi: int
    offset: int

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1


class VarRegistry:
    """Dense variable numbering.

    Comparator variables come first (layer by layer), then one block of
    channel-value variables per input, then auxiliaries in creation order.
    Creating an auxiliary records its defining clauses, which the encoder
    drains with :meth:`take_definitions`.
    """

    def __init__(self, n: int, d: int):
        self.n, self.d = n, d
        self._named: dict[tuple, int] = {}
        self._next = 1
        self._pending: list[list[int]] = []
        self.blocks: list[_VBlock] = []
        for k in range(1, d + 1):
            for i in range(1, n + 1):
                for j in range(i + 1, n + 1):
                    self._named[("g", k, i, j)] = self._fresh()

    def _fresh(self) -> int:
        v = self._next
        self._next += 1
        return v

    @property
    def num_vars(self) -> int:
        return self._next - 1

    def g(self, k: int, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return self._named[("g", k, i, j)]

    def g_items(self) -> list[tuple[int, int, int, int]]:
        return [(key[1], key[2], key[3], v) for key, v in self._named.items() if key[0] == "g"]

    # -- channel values
    def add_block(self, word: int, lo: int, hi: int) -> int:
        block = _VBlock(word, lo, hi, self._next)
        self._next += max(self.d - 1, 0) * block.width
        self.blocks.append(block)
        return len(self.blocks) - 1

    def v(self, block_id: int, k: int, i: int):
        """Literal (or constant) for the value of channel ``i`` after layer ``k``."""
        b = self.blocks[block_id]
        if k == 0 or i < b.lo or i > b.hi or k == self.d:
            return self._v_const(b, k, i)
        return b.offset + (k - 1) * b.width + (i - b.lo)

    def _v_const(self, b: _VBlock, k: int, i: int):
        if k == 0:
            return TRUE if (b.word >> (i - 1)) & 1 else FALSE
        if k == self.d:
            ones = bin(b.word).count("1")
            return TRUE if i > self.n - ones else FALSE
        # outside the window: leading zero or trailing one at every layer
        return FALSE if i < b.lo else TRUE

    # -- auxiliaries
    def used(self, k: int, i: int) -> int:
        key = ("used", k, i)
        var = self._named.get(key)
        if var is None:
            var = self._named[key] = self._fresh()
            gs = [self.g(k, i, j) for j in range(1, self.n + 1) if j != i]
            self._pending.append([-var] + gs)
            self._pending.extend([-g, var] for g in gs)
        return var

    def one_down(self, k: int, i: int, j: int):
        """Some comparator ``(i, l)`` with ``i < l <= j`` in layer ``k``."""
        if j <= i:
            return FALSE
        return self._disjunction(("oneDown", k, i, j), [self.g(k, i, l) for l in range(i + 1, j + 1)])

    def one_up(self, k: int, i: int, j: int):
        """Some comparator ``(l, j)`` with ``i <= l < j`` in layer ``k``."""
        if j <= i:
            return FALSE
        return self._disjunction(("oneUp", k, i, j), [self.g(k, l, j) for l in range(i, j)])

    def _disjunction(self, key, gs):
        var = self._named.get(key)
        if var is None:
            var = self._named[key] = self._fresh()
            self._pending.append([-var] + gs)
            self._pending.extend([-g, var] for g in gs)
        return var

    def take_definitions(self) -> list[list[int]]:
        out, self._pending = self._pending, []
        return out

    def to_json(self, meta: Mapping | None = None) -> dict:
        aux = {}
        for key, var in self._named.items():
            if key[0] != "g":
                aux.setdefault(key[0], []).append(list(key[1:]) + [var])
        return {
            "g": [list(item) for item in self.g_items()],
            "aux": aux,
            "v_blocks": [[b.word, b.lo, b.hi, b.offset] for b in self.blocks],
            "meta": {"n": self.n, "d": self.d, "num_vars": self.num_vars, **(meta or {})},
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass
class CnfInstance:
    num_vars: int
    clauses: list[list[int]]
    meta: dict = field(default_factory=dict)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)


class _Sink:
    """Collects clauses, folding away constants."""

    def __init__(self):
        self.clauses: list[list[int]] = []

    def add(self, *lits):
        out = []
        for x in lits:
            if x is TRUE:
                return
            if x is FALSE:
                continue
            out.append(x)
        self.clauses.append(out)

    def extend(self, clauses):
        self.clauses.extend(clauses)


def _prepare_inputs(n: int, inputs) -> np.ndarray:
    if isinstance(inputs, OutputSet):
        if inputs.n != n:
            raise EncodingError(f"inputs are {inputs.n}-bit words, expected {n}")
        words = inputs.words
    else:
        words = np.unique(np.asarray(list(inputs) if not isinstance(inputs, np.ndarray) else inputs, dtype=np.uint64))
    if words.size and int(words.max()) >> n:
        raise EncodingError(f"input word wider than {n} bits")
    return words


def encode(n: int, d: int, inputs, opts: EncodeOptions = EncodeOptions(), meta: Mapping | None = None):
    """CNF satisfiable iff some standard network of depth ``d`` on ``n``
    channels sorts every word of ``inputs``.  Returns ``(instance, registry)``.

    Already sorted inputs add nothing.  Without ``improved_windows`` every
    channel of every layer strictly between input and output gets a variable;
    ``prune_inert_updates`` only takes effect together with it.
    """
    if n < 1:
        raise EncodingError("n must be positive")
    if d < 1:
        raise EncodingError("d must be at least 1")
    if d < 2 and opts.needs_two_layers:
        raise EncodingError("last-two-layer constraints need d >= 2")
    words = _prepare_inputs(n, inputs)
    if words.size == 0:
        log.warning("empty input set: the instance only constrains the layer shape")
    words = words[~is_sorted_word(words, n)] if words.size else words

    reg = VarRegistry(n, d)
    sink = _Sink()
    _emit_valid(reg, sink, n, d)

    zeros, ones = window_bounds(words, n) if words.size else (np.zeros(0, int), np.zeros(0, int))
    blocks = []
    for w, r, s in zip(words.tolist(), zeros.tolist(), ones.tolist()):
        lo, hi = r + 1, n - s
        if opts.improved_windows:
            blocks.append((reg.add_block(w, lo, hi), lo, hi))
        else:
            blocks.append((reg.add_block(w, 1, n), lo, hi))
    prune = opts.prune_inert_updates and opts.improved_windows
    for bid, lo, hi in blocks:
        _emit_input(reg, sink, bid, lo, hi, opts, prune)
        sink.extend(reg.take_definitions())

    formulas = last_layer_formulas(reg, n, d, opts)
    for clauses in formulas.values():
        sink.extend(clauses)
    sink.extend(reg.take_definitions())

    info = {
        "n": n, "d": d, "inputs": int(words.size), "options": opts.to_json(),
        "inputs_digest": hashlib.sha256(np.ascontiguousarray(words).tobytes()).hexdigest()[:16],
        "version": __version__,
    }
    info.update(meta or {})
    return CnfInstance(reg.num_vars, sink.clauses, info), reg


def _emit_valid(reg: VarRegistry, sink: _Sink, n: int, d: int):
    for k in range(1, d + 1):
        for i in range(1, n + 1):
            touching = [reg.g(k, i, j) for j in range(1, n + 1) if j != i]
            # each pair sharing channel i, emitted once from its shared channel
            for a in range(len(touching)):
                for b in range(a + 1, len(touching)):
                    sink.clauses.append([-touching[a], -touching[b]])


def _emit_input(reg: VarRegistry, sink: _Sink, bid: int, lo: int, hi: int, opts: EncodeOptions, prune: bool):
    n, d = reg.n, reg.d
    block = reg.blocks[bid]
    add = sink.add
    for k in range(1, d + 1):
        for i in range(block.lo, block.hi + 1):
            a = reg.v(bid, k - 1, i)
            w = reg.v(bid, k, i)
            na, nw = _neg(a), _neg(w)
            active = []
            for j in range(1, n + 1):
                if j == i:
                    continue
                if prune and not lo <= j <= hi:
                    continue
                g = reg.g(k, i, j)
                active.append(g)
                p = reg.v(bid, k - 1, j)
                if j < i:  # max lands on i
                    add(-g, nw, p, a)
                    add(-g, w, _neg(p))
                    add(-g, w, na)
                else:  # min lands on i
                    add(-g, w, na, _neg(p))
                    add(-g, nw, a)
                    add(-g, nw, p)
            in_window = lo <= i <= hi
            if opts.one_up_down_clauses and in_window:
                add(na, reg.one_down(k, i, hi), w)
                add(a, reg.one_up(k, lo, i), nw)
            if not prune:
                u = reg.used(k, i)
                add(u, nw, a)
                add(u, w, na)
            elif not opts.one_up_down_clauses:
                add(na, w, *active)
                add(a, nw, *active)


# ------------------------------------------------------------- last layers

def last_layer_formulas(reg: VarRegistry, n: int, d: int, opts: EncodeOptions) -> dict[str, list[list[int]]]:
    """The enabled last-layer formulas keyed by name (phi1 .. psi3b)."""
    if d < 2 and opts.needs_two_layers:
        raise EncodingError("last-two-layer constraints need d >= 2")
    out: dict[str, list[list[int]]] = {}
    g = reg.g
    if opts.last_layer_necessary:
        out["phi1"] = [[-g(d, i, j)] for i in range(1, n + 1) for j in range(i + 2, n + 1)]
        if d >= 2:
            out["phi2"] = [[-g(d - 1, i, j)] for i in range(1, n + 1) for j in range(i + 4, n + 1)]
    if opts.last_layer_implications:
        phi3 = []
        for i in range(1, n - 2):
            phi3.append([-g(d - 1, i, i + 3), g(d, i, i + 1)])
            phi3.append([-g(d - 1, i, i + 3), g(d, i + 2, i + 3)])
        out["phi3"] = phi3
        out["phi4"] = [[-g(d - 1, i, i + 2), g(d, i, i + 1), g(d, i + 1, i + 2)] for i in range(1, n - 1)]
    if opts.cosat_breaks:
        U = lambda i: reg.used(d, i)  # noqa: E731
        u = lambda i: reg.used(d - 1, i)  # noqa: E731
        out["psi1"] = [[U(i), U(i + 1)] for i in range(1, n)]
        psi2a = []
        for i in range(1, n - 2):
            A, B = g(d, i, i + 1), g(d, i + 2, i + 3)
            for x in (i, i + 1):
                for y in (i + 2, i + 3):
                    psi2a.append([-A, -B, u(x), u(y)])
        out["psi2a"] = psi2a
        psi2b, psi2c, psi3a = [], [], []
        for i in range(1, n - 1):
            A = g(d, i, i + 1)
            psi2b.append([-A, U(i + 2), u(i), u(i + 2)])
            psi2b.append([-A, U(i + 2), u(i + 1), u(i + 2)])
            B = g(d, i + 1, i + 2)
            psi2c.append([U(i), -B, u(i), u(i + 1)])
            psi2c.append([U(i), -B, u(i), u(i + 2)])
            psi3a.append([-A, U(i + 2), u(i), u(i + 1)])
        out["psi2b"], out["psi2c"], out["psi3a"] = psi2b, psi2c, psi3a
        out["psi3b"] = [[-g(d, i, i + 1), U(i - 1), u(i), u(i + 1)] for i in range(2, n)]
    if opts.generalized_phi1_per_layer:
        gen = []
        for ell in range(1, d):
            for i in range(1, n + 1):
                for j in range(i + 2, n + 1):
                    later = [reg.used(k, c) for k in range(ell + 1, d + 1) for c in (i, j)]
                    gen.append([-g(ell, i, j)] + later)
        out["phi1_layers"] = gen
    return out


def encode_last_layer_constraints(n: int, d: int, opts: EncodeOptions, registry: VarRegistry | None = None) -> list[list[int]]:
    """Last-layer clauses over a (fresh, unless given) registry.  Defining
    clauses of any ``used`` auxiliaries stay in the registry."""
    reg = registry or VarRegistry(n, d)
    return [c for clauses in last_layer_formulas(reg, n, d, opts).values() for c in clauses]


# ------------------------------------------------------------------- I/O

def emit_dimacs(instance: CnfInstance, registry: VarRegistry | None = None) -> str:
    lines = []
    for key in sorted(instance.meta):
        lines.append(f"c {key} {json.dumps(instance.meta[key], sort_keys=True)}")
    if registry is not None:
        lines.append(f"c registry {registry.digest()}")
    lines.append(f"p cnf {instance.num_vars} {len(instance.clauses)}")
    lines.extend(" ".join(map(str, c)) + " 0" if c else "0" for c in instance.clauses)
    return "\n".join(lines) + "\n"


def decode_model(model, registry: VarRegistry, n: int | None = None, d: int | None = None) -> ComparatorNetwork:
    """Network read off the comparator variables of a satisfying assignment.

    ``model`` is an iterable of signed literals or a mapping var -> bool.
    """
    n = registry.n if n is None else n
    d = registry.d if d is None else d
    if (n, d) != (registry.n, registry.d):
        raise EncodingError("registry does not match n and d")
    if isinstance(model, Mapping):
        truth = {int(k): bool(v) for k, v in model.items()}
    else:
        truth = {}
        for lit in model:
            lit = int(lit)
            if lit:
                truth[abs(lit)] = lit > 0
    layers = [[] for _ in range(d)]
    for k, i, j, var in registry.g_items():
        if var not in truth:
            raise EncodingError(f"model leaves comparator variable {var} unassigned")
        if truth[var]:
            layers[k - 1].append((i, j))
    try:
        return ComparatorNetwork.from_layers(n, layers)
    except NetworkError as exc:
        raise EncodingError(f"model violates the one-comparator-per-channel rule: {exc}") from exc


def registry_from_json(data: Mapping) -> VarRegistry:
    """Rebuild enough of a registry to decode comparator variables."""
    meta = data["meta"]
    reg = VarRegistry.__new__(VarRegistry)
    reg.n, reg.d = meta["n"], meta["d"]
    reg._named = {("g", k, i, j): v for k, i, j, v in data["g"]}
    reg._next = meta["num_vars"] + 1
    reg._pending = []
    reg.blocks = [_VBlock(*b) for b in data.get("v_blocks", [])]
    return reg


def free_channel_total(words: Iterable[int] | OutputSet, n: int) -> int:
    """Sum over unsorted inputs of the channels not fixed by the window."""
    arr = words.words if isinstance(words, OutputSet) else np.asarray(list(words), dtype=np.uint64)
    arr = arr[~is_sorted_word(arr, n)]
    zeros, ones = window_bounds(arr, n)
    return int((n - zeros - ones).sum())
