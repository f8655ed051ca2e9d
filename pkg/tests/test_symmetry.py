import itertools
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinbound.basis import build_1d
from spinbound.geometry import Lattice
from spinbound.pauli import PauliMonomial, signature
from spinbound.symmetry import GroupElement, MomentKey, SymmetryGroup, forced_zero, order_key

CHAIN10 = Lattice.chain(10)


def oracle_key(group: SymmetryGroup, m: PauliMonomial):
    """Orbit minimum by explicit enumeration of every group element."""
    return min(group.orbit(m), key=order_key)


def random_word(lat, draw_sites, draw_axes):
    return PauliMonomial.from_letters(lat, zip(draw_sites, draw_axes))


def test_apply_examples():
    g = SymmetryGroup(CHAIN10)
    m = PauliMonomial.parse("X1 X2", CHAIN10)
    assert str(g.translate(m, (2,))) == "X3 X4"
    assert str(g.apply(GroupElement((0,), point=1), m)) == "X8 X9"
    swap = GroupElement((0,), perm=(2, 1, 3))
    assert str(g.apply(swap, PauliMonomial.parse("X1 Z2", CHAIN10))) == "Y1 Z2"


def test_canonical_key_examples():
    g = SymmetryGroup(CHAIN10)
    assert g.canonical_key(PauliMonomial.parse("Y3 Y4", CHAIN10)) == MomentKey(PauliMonomial.parse("X1 X2", CHAIN10).letters)
    assert g.canonical_key(PauliMonomial.parse("X1 Y2", CHAIN10)).zero
    assert g.canonical_key(PauliMonomial.parse("X1", CHAIN10)).zero
    ident = g.canonical_key(PauliMonomial.identity(CHAIN10))
    assert ident == MomentKey(()) and not ident.zero


def test_group_order():
    assert SymmetryGroup(CHAIN10).order == 10 * 2 * 6
    assert SymmetryGroup(Lattice.square(4)).order == 16 * 8 * 6
    assert len(list(SymmetryGroup(Lattice.square(3)).elements())) == 9 * 8 * 6


def test_closure_under_composition():
    lat = Lattice.chain(6)
    g = SymmetryGroup(lat)
    m = PauliMonomial.parse("X1 Y2 Z4", lat)
    orbit = g.orbit(m)
    for e in g.elements():
        for w in list(orbit)[:10]:
            assert g.apply(e, PauliMonomial(w, lat)).letters in orbit


@pytest.mark.parametrize("lat", [Lattice.chain(7), Lattice.chain(10), Lattice.square(3), Lattice.square(4)])
@pytest.mark.parametrize("toggles", list(itertools.product([True, False], repeat=3)))
def test_canonical_key_matches_orbit_enumeration(lat, toggles, rng):
    t, pg, ap = toggles
    group = SymmetryGroup(lat, t, pg, ap)
    for _ in range(40):
        deg = int(rng.integers(1, 5))
        sites = rng.choice(lat.n_sites, size=deg, replace=False)
        axes = rng.integers(1, 4, size=deg)
        m = random_word(lat, sites.tolist(), axes.tolist())
        assert group.canonical_key(m).letters == oracle_key(group, m)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(1, 3)), min_size=1, max_size=6, unique_by=lambda x: x[0]),
       st.integers(0, 9), st.integers(0, 1), st.sampled_from(list(itertools.permutations((1, 2, 3)))))
def test_orbit_invariance(pairs, shift, point, perm):
    g = SymmetryGroup(CHAIN10)
    m = PauliMonomial.from_letters(CHAIN10, pairs)
    image = g.apply(GroupElement((shift,), point, perm), m)
    assert g.canonical_key(image) == g.canonical_key(m)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(1, 3)), max_size=6, unique_by=lambda x: x[0]))
def test_zero_rule_matches_signature(pairs):
    m = PauliMonomial.from_letters(CHAIN10, pairs)
    s = signature(m)
    expect = s.xi != (1, 1, 1) or s.eta != (1, 1, 1)
    assert SymmetryGroup(CHAIN10).canonical_key(m).zero == expect
    assert forced_zero(m.letters, sign_model=True, sign_hamiltonian=False) == (s.xi != (1, 1, 1))


def test_key_count_matches_brute_force_orbits():
    basis = build_1d(10, 2, 1)
    g = SymmetryGroup(CHAIN10)
    products = set()
    for a in basis:
        for b in basis:
            products.add((a * b).letters)
    keys = {g.key_of(w) for w in products}
    # brute force: partition the product set into orbits
    orbits = set()
    for w in products:
        orbits.add(frozenset(g.orbit(PauliMonomial(w, CHAIN10))))
    assert len(keys) == len(orbits)
    # and every orbit's minimum is its key
    assert {MomentKey(min(o, key=order_key), False).letters for o in orbits} == {k.letters for k in keys}


def test_memo_is_consistent_under_threads():
    lat = Lattice.chain(12)
    g = SymmetryGroup(lat)
    words = [PauliMonomial.from_letters(lat, [(s, 1 + s % 3), ((s + 3) % 12, 2)]).letters for s in range(12)]
    results = []

    def work():
        results.append([g.key_of(w) for w in words * 20])

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r == results[0] for r in results)
    fresh = SymmetryGroup(lat)
    assert results[0][:12] == [fresh.key_of(w) for w in words]
