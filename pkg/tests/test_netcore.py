import itertools
import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import networks, odd_even_transposition, random_sorter
from sortnet.filters import first_layer_BZ, first_layer_P
from sortnet.netcore import (
    ChannelPermutation,
    ComparatorNetwork,
    NetworkError,
    OutputSet,
    all_words,
    apply_network,
    cosubsumes,
    enumerate_sorting_extensions,
    evaluate,
    find_set_embedding,
    is_redundant,
    is_sorted_word,
    is_sorting_network,
    monotone_check,
    outputs,
    parse_network,
    permute,
    popcount,
    remove_redundant,
    sorted_words,
    sorts_set,
    standardize_dual,
    standardize_forward,
    str_to_word,
    subsumes,
    trace,
    window_stats,
    window_sum,
    word_to_str,
)


def naive_eval(net: ComparatorNetwork, bits: list[int]) -> list[int]:
    """Element-by-element simulation, used as an oracle for the bit tricks."""
    v = list(bits)
    for layer in net.layers:
        for a, b in layer:
            lo, hi = min(v[a - 1], v[b - 1]), max(v[a - 1], v[b - 1])
            v[a - 1], v[b - 1] = lo, hi
    return v


# ------------------------------------------------------------- text forms

class TestParsing:
    def test_roundtrip_text_and_json(self, cat):
        for net in cat.values():
            assert parse_network(net.to_text(), net.n) == net
            assert parse_network(json.dumps(net.to_json())) == net

    @given(networks(standard=False))
    def test_roundtrip_random(self, net):
        if net.depth == 0:
            return
        assert parse_network(net.to_text(), net.n) == net

    def test_comments_and_directive(self):
        net = parse_network("# a comment\n# n=6\n1:2 3:4;\n2:3\n")
        assert net.n == 6 and net.depth == 2 and net.size == 3

    def test_empty_layer_token(self):
        net = parse_network("1:2; -; 2:3")
        assert net.depth == 3 and net.layers[1] == ()
        assert net.to_text() == "1:2; -; 2:3"

    def test_multiline_layers(self):
        assert parse_network("1:2; 3:4\n2:3").depth == 3

    def test_empty_is_error(self):
        with pytest.raises(NetworkError):
            parse_network("   \n")
        with pytest.raises(NetworkError):
            parse_network("# only a comment\n")

    def test_bad_token_reports_position(self):
        with pytest.raises(NetworkError, match=r"line 2, column 5"):
            parse_network("1:2\n3:4 x:5")

    def test_zero_channel_rejected(self):
        with pytest.raises(NetworkError, match="1-based"):
            parse_network("0:1")

    def test_overlap_and_range_rejected(self):
        with pytest.raises(NetworkError):
            parse_network("1:2 2:3")
        with pytest.raises(NetworkError):
            parse_network("1:5", 4)
        with pytest.raises(NetworkError):
            parse_network("1:1")


# ------------------------------------------------------------ evaluation

class TestEvaluation:
    def test_word_strings(self):
        assert word_to_str(str_to_word("0110"), 4) == "0110"
        assert str_to_word("1000") == 1  # channel 1 is the first character

    def test_sorted_words(self):
        for n in range(1, 8):
            ws = sorted_words(n)
            assert len(ws) == n + 1
            assert is_sorted_word(ws, n).all()
            brute = [w for w in range(1 << n) if naive_eval(ComparatorNetwork(n, ()), [(w >> i) & 1 for i in range(n)]) == sorted([(w >> i) & 1 for i in range(n)])]
            assert sorted(int(x) for x in ws) == brute

    @given(networks(max_n=6))
    @settings(max_examples=60)
    def test_bitparallel_matches_naive(self, net):
        for w in range(1 << net.n):
            bits = [(w >> i) & 1 for i in range(net.n)]
            out = naive_eval(net, bits)
            assert evaluate(net, w) == sum(b << i for i, b in enumerate(out))

    @given(networks(max_n=7, standard=False))
    @settings(max_examples=60)
    def test_bit_count_conservation(self, net):
        w = all_words(net.n)
        assert (popcount(apply_network(net, w)) == popcount(w)).all()

    def test_trace_and_length_checks(self, cat):
        net = cat["fig1"]
        steps = trace(net, "10101")
        assert len(steps) == net.depth + 1
        assert steps[-1] == evaluate(net, "10101") == str_to_word("00111")
        with pytest.raises(NetworkError):
            evaluate(net, "101")
        with pytest.raises(NetworkError):
            trace(net, "1010101")

    def test_catalog_sorters(self, cat):
        for name in ("fig1", "fig3a", "fig3b"):
            assert is_sorting_network(cat[name])
        assert not is_sorting_network(cat["fig4"])
        assert (cat["fig1"].depth, cat["fig1"].size) == (5, 9)

    def test_sorting_network_outputs(self, cat):
        out = outputs(cat["fig1"])
        assert len(out) == 6 and out.sorted_count == 6

    def test_non_sorter_detected(self):
        assert not is_sorting_network(parse_network("1:2 3:4; 2:3"))

    @pytest.mark.parametrize("n", range(2, 7))
    def test_sorts_set_of_sorter_is_cube(self, n):
        assert len(sorts_set(odd_even_transposition(n))) == 1 << n


# -------------------------------------------------- structural properties

class TestWindows:
    def test_window_stats(self):
        assert window_stats("010101") == window_stats(str_to_word("010101"), 6)
        st_ = window_stats("0010110111")
        assert (st_.leading_zeros, st_.trailing_ones, st_.window) == (2, 3, 5)
        assert window_stats("0011").window == 0
        with pytest.raises(TypeError):
            window_stats(5)

    @given(networks(max_n=7))
    @settings(max_examples=60)
    def test_leading_zeros_and_trailing_ones_survive(self, net):
        for w in range(1 << net.n):
            before = window_stats(w, net.n)
            for step in trace(net, w)[1:]:
                after = window_stats(step, net.n)
                assert after.leading_zeros >= before.leading_zeros
                assert after.trailing_ones >= before.trailing_ones

    def test_window_sum_of_sorted_set_is_zero(self):
        assert window_sum(OutputSet(5, sorted_words(5))) == 0


class TestMonotonicity:
    @given(networks(max_n=6, standard=False))
    @settings(max_examples=60)
    def test_monotone_exhaustive(self, net):
        assert monotone_check(net)

    @pytest.mark.parametrize("seed", range(5))
    def test_monotone_against_all_pairs(self, seed):
        rng = random.Random(seed)
        net = random_sorter(rng, 4, 3)
        out = [evaluate(net, w) for w in range(16)]
        for x, y in itertools.product(range(16), repeat=2):
            if x & ~y == 0:
                assert out[x] & ~out[y] == 0


# -------------------------------------------------------------- redundancy

class TestRedundancy:
    def test_repeated_comparator_is_redundant(self):
        net = parse_network("1:2; 1:2")
        assert is_redundant(net, 1, (1, 2))
        assert not is_redundant(net, 0, (1, 2))
        with pytest.raises(IndexError):
            is_redundant(net, 2, (1, 2))
        assert remove_redundant(net).size == 1

    @given(networks(max_n=6, max_depth=5))
    @settings(max_examples=60)
    def test_remove_redundant_preserves_function(self, net):
        slim = remove_redundant(net)
        w = all_words(net.n)
        assert np.array_equal(apply_network(net, w), apply_network(slim, w))
        for k, c in slim.comparators():
            assert not is_redundant(slim, k, c)
        assert remove_redundant(slim) == slim

    def test_keep_empty(self):
        net = parse_network("1:2; 1:2; 2:3")
        assert remove_redundant(net, keep_empty=True).depth == 3
        assert remove_redundant(net).depth == 2


# ---------------------------------------------------------- permutations

class TestPermutations:
    def test_algebra(self):
        p = ChannelPermutation([2, 3, 1])
        assert p.then(p.inverse()) == ChannelPermutation.identity(3)
        assert p(1) == 2
        with pytest.raises(NetworkError):
            ChannelPermutation([1, 1, 2])

    @given(networks(max_n=6, standard=False), st.randoms(use_true_random=False))
    @settings(max_examples=60)
    def test_permute_relabels_outputs(self, net, rnd):
        images = list(range(1, net.n + 1))
        rnd.shuffle(images)
        p = ChannelPermutation(images)
        assert outputs(permute(net, p)) == p.apply_set(outputs(net))

    @pytest.mark.parametrize("seed", range(20))
    def test_forward_untangling_of_relabeled_sorter(self, seed):
        # a relabeled sorter is not a generalized sorter, but untangling
        # front to back keeps the output count at n + 1, hence it sorts
        rng = random.Random(seed)
        n = rng.randint(3, 7)
        net = random_sorter(rng, n)
        images = list(range(1, n + 1))
        rng.shuffle(images)
        std = standardize_forward(permute(net, ChannelPermutation(images)))
        assert std.is_standard
        assert (std.depth, std.size) == (net.depth, net.size)
        assert is_sorting_network(std)

    def test_untangling_generalized_sorters(self):
        found = 0
        for seed in range(120):
            gen = generalized_sorter(random.Random(seed))
            if not is_sorting_network(gen):
                continue
            found += 1
            for untangle in (standardize_forward, standardize_dual):
                std = untangle(gen)
                assert std.is_standard
                assert is_sorting_network(std)
        assert found >= 30

    def test_dual_keeps_standard_tail(self):
        net = parse_network("2:1; 1:2 3:4; 2:3", 4)
        std = standardize_dual(net)
        assert std.layers[1:] == net.layers[1:]
        assert std.is_standard

    def test_forward_keeps_standard_head(self):
        net = parse_network("1:2 3:4; 4:1; 2:3", 4)
        std = standardize_forward(net)
        assert std.layers[0] == net.layers[0]


def generalized_sorter(rng: random.Random) -> ComparatorNetwork:
    """Undo dual untangling steps on a standard sorter: pick a comparator
    (a, b) in layer k and exchange a and b in layers 1..k, at non-increasing k.
    Not every result sorts; callers filter."""
    n = rng.randint(3, 7)
    layers = [tuple(tuple(c) for c in layer) for layer in random_sorter(rng, n).layers]
    k = len(layers) - 1
    for _ in range(3):
        k = rng.choice([i for i in range(k + 1) if layers[i]])
        a, b = rng.choice(layers[k])
        swap = {a: b, b: a}
        for m in range(k + 1):
            layers[m] = tuple((swap.get(x, x), swap.get(y, y)) for x, y in layers[m])
    return ComparatorNetwork(n, tuple(layers))


# ------------------------------------------------------------ subsumption

def brute_embedding_exists(a: OutputSet, b: OutputSet) -> bool:
    for images in itertools.permutations(range(1, a.n + 1)):
        if ChannelPermutation(images).apply_set(a).issubset(b):
            return True
    return False


class TestSubsumption:
    @given(networks(min_n=3, max_n=5, max_depth=2), networks(min_n=3, max_n=5, max_depth=2))
    @settings(max_examples=80, deadline=None)
    def test_witness_valid_and_complete(self, c, c2):
        if c.n != c2.n:
            return
        p = subsumes(c, c2)
        oa, ob = outputs(c), outputs(c2)
        if p is not None:
            assert p.apply_set(oa).issubset(ob)
        assert (p is not None) == brute_embedding_exists(oa, ob)

    @given(networks(min_n=3, max_n=5, max_depth=2), networks(min_n=3, max_n=5, max_depth=2))
    @settings(max_examples=40, deadline=None)
    def test_cosubsumption_witness(self, c, c2):
        if c.n != c2.n:
            return
        p = cosubsumes(c, c2)
        if p is not None:
            assert p.apply_set(sorts_set(c)).issubset(sorts_set(c2))

    def test_first_layers_equivalent_on_six(self):
        n = 6
        P = ComparatorNetwork(n, (first_layer_P(n),))
        BZ = ComparatorNetwork(n, (first_layer_BZ(n),))
        perm = ChannelPermutation([1, 6, 2, 5, 3, 4])
        assert permute(P, perm) == BZ
        assert perm.apply_set(outputs(P)) == outputs(BZ)
        assert subsumes(P, BZ) is not None and subsumes(BZ, P) is not None

    @pytest.mark.parametrize("n", [3, 4])
    def test_cosubsumption_complete_on_single_layers(self, n):
        from sortnet.filters import enumerate_layers

        P = ComparatorNetwork(n, (first_layer_P(n),))
        target = sorts_set(P)
        assert cosubsumes(P, P) is not None
        for layer in enumerate_layers(n):
            C = ComparatorNetwork(n, (layer,))
            src = sorts_set(C)
            exists = any(
                ChannelPermutation(list(p)).apply_set(src).issubset(target)
                for p in itertools.permutations(range(1, n + 1))
            )
            assert (cosubsumes(C, P) is not None) == exists

    def test_pair_map_fails_for_crossing_maximal_layer(self):
        # sending each comparator to the k-th adjacent pair is not enough in general
        n = 4
        P = ComparatorNetwork(n, (first_layer_P(n),))
        C = parse_network("1:3 2:4", n)
        assert len(sorts_set(C)) == 10 > len(sorts_set(P)) == 7
        assert cosubsumes(C, P) is None

    def test_non_maximal_layer_not_cosubsumed(self):
        # a single long comparator sorts more inputs than the pair layer on 3 channels
        n = 3
        P = ComparatorNetwork(n, (first_layer_P(n),))
        C = parse_network("1:3", 3)
        assert len(sorts_set(C)) > len(sorts_set(P))
        assert cosubsumes(C, P) is None

    def test_size_mismatch(self):
        small = OutputSet(3, [0, 7])
        big = OutputSet(3, range(8))
        assert find_set_embedding(big, small) is None
        assert find_set_embedding(small, big) is not None


# ------------------------------------------------------- brute-force depth

@pytest.mark.parametrize("n,depth", [(2, 1), (3, 3), (4, 3)])
def test_brute_force_depth(n, depth):
    assert enumerate_sorting_extensions(ComparatorNetwork(n, ()), 4) == depth


def test_brute_force_gives_up():
    assert enumerate_sorting_extensions(ComparatorNetwork(4, ()), 2) is None
