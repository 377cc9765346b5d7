import itertools
import random

import pytest

from conftest import EXAMPLE2
from multshift import (
    Carpet, EmptyOmega, ExplicitTree, Full, Sft, StaircasePrefix, SystemSpec, enumerate_prefixes,
    follower_key, followers, is_admissible,
)
from multshift.errors import ConfigError, DepthExceeded
from multshift.system import alphabet, compile_system

EX2 = SystemSpec(2, (3, 2), Sft(EXAMPLE2))


def word(x, y):
    return StaircasePrefix((tuple(x), tuple(y)))


@pytest.mark.parametrize("lengths,count", [((1, 1), 6), ((1, 2), 12), ((2, 3), 6 * 6 * 2), ((0, 3), 8)])
def test_full_shift_prefix_counts(full32, lengths, count):
    assert len(enumerate_prefixes(full32, lengths)) == count


def test_example_matrix_two_letter_prefixes():
    ones = sum(map(sum, EXAMPLE2))
    assert ones == 28
    assert len(enumerate_prefixes(EX2, (2, 2))) == ones


def test_prefixes_sorted_and_admissible():
    out = enumerate_prefixes(EX2, (1, 3))
    assert out == sorted(out, key=lambda u: u.words)
    assert all(is_admissible(EX2, u) for u in out)


def test_followers_of_first_tuple():
    assert followers(EX2, word([0], [0])) == [(0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]


def test_full_shift_followers(full32):
    assert len(followers(full32, word([1], [0]))) == 6


def test_carpet_followers_independent_of_prefix():
    spec = SystemSpec(2, (2, 2), Carpet({(0, 0), (1, 1)}))
    for u in enumerate_prefixes(spec, (2, 2)):
        assert followers(spec, u) == [(0, 0), (1, 1)]


def test_inadmissible_words():
    assert not is_admissible(EX2, word([0, 0], [0, 0]))
    carpet = SystemSpec(2, (2, 2), Carpet({(0, 0)}))
    assert not is_admissible(carpet, word([1], [0]))
    assert is_admissible(carpet, word([0, 0], [0, 0]))


def test_alphabet_row_major():
    assert alphabet((3, 2)) == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]


def test_all_ones_sft_matches_full(full32):
    ones = SystemSpec(2, (3, 2), Sft([[1] * 6 for _ in range(6)]))
    for lengths in [(1, 2), (2, 2), (2, 4)]:
        assert enumerate_prefixes(ones, lengths) == enumerate_prefixes(full32, lengths)


def test_pruning_and_empty_omega():
    # tuple (0,0) can only be followed by itself... which is forbidden: it dies
    M = [[1] * 4 for _ in range(4)]
    M[0] = [0, 0, 0, 0]
    spec = SystemSpec(2, (2, 2), Sft(M))
    assert not is_admissible(spec, word([0], [0]))
    dead = SystemSpec(2, (2, 2), Sft([[0] * 4 for _ in range(4)]))
    with pytest.raises(EmptyOmega):
        enumerate_prefixes(dead, (1, 1))


def test_spec_validation():
    with pytest.raises(ConfigError):
        SystemSpec(1, (3, 2))
    with pytest.raises(ConfigError):
        SystemSpec(2, (2, 3))
    with pytest.raises(ConfigError):
        SystemSpec(2, (3, 2), Carpet({(3, 0)}))
    with pytest.raises(ConfigError):
        SystemSpec(2, (3, 2), Sft([[1, 1], [1, 1]]))


def test_explicit_tree_truncation():
    words = {((0, 0), (1, 1)), ((1, 1), (0, 0)), ((1, 1), (1, 1))}
    spec = SystemSpec(2, (2, 2), ExplicitTree(frozenset(words), 2))
    assert len(enumerate_prefixes(spec, (2, 2))) == 3
    assert len(enumerate_prefixes(spec, (1, 2))) == 3
    with pytest.raises(DepthExceeded):
        enumerate_prefixes(spec, (3, 3))


def test_explicit_window_rule_matches_sft():
    rule = SystemSpec(2, (3, 2), ExplicitTree(frozenset(
        (a, b) for a, b in itertools.product(alphabet((3, 2)), repeat=2)
        if EXAMPLE2[alphabet((3, 2)).index(a)][alphabet((3, 2)).index(b)]), 2, "window"))
    for lengths in [(2, 2), (3, 4), (4, 4)]:
        assert enumerate_prefixes(rule, lengths) == enumerate_prefixes(EX2, lengths)


def _subtree(spec, u, depth):
    """Followers enumerated ``depth`` levels down, as digit sequences."""
    if depth == 0:
        return {()}
    out = set()
    for a in followers(spec, u):
        v = StaircasePrefix(tuple(w + (x,) for w, x in zip(u.words, a)))
        out.update((a,) + rest for rest in _subtree(spec, v, depth - 1))
    return out


def test_follower_key_soundness():
    rng = random.Random(7)
    prefixes = enumerate_prefixes(EX2, (3, 3))
    by_key = {}
    for u in prefixes:
        by_key.setdefault(follower_key(EX2, u), []).append(u)
    pairs = 0
    groups = [g for g in by_key.values() if len(g) > 1]
    for _ in range(1000):
        g = rng.choice(groups)
        u, v = rng.sample(g, 2)
        assert _subtree(EX2, u, 3) == _subtree(EX2, v, 3)
        pairs += 1
    assert pairs == 1000


def test_key_count_bound():
    sys_ = compile_system(EX2)
    keys = {sys_.key_of(u) for u in enumerate_prefixes(EX2, (4, 4))}
    assert len(keys) <= 3 * 2


def test_monotone_counts(full32):
    small = len(enumerate_prefixes(EX2, (1, 2)))
    big = len(enumerate_prefixes(EX2, (2, 3)))
    assert big <= small * 3 * 2
    assert small <= len(enumerate_prefixes(full32, (1, 2)))
