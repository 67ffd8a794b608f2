import pytest

from bikripke.errors import BadWorldIndex, BudgetExceeded
from bikripke.formula import DOWN, UP, parse, substitute
from bikripke.frame import (PointedModel, chain, cluster, make_frame,
                            powerset_frame, single_point)
from bikripke.semantics import (
    definable_algebra,
    eval_formula,
    eval_mask,
    holds_at,
    ml_fragment,
    ml_member,
    ml_status,
    multiverse_truth,
    valid_on,
)
from .conftest import naive_truth, random_formula, random_model


def chain2_model(p_worlds=(1,)):
    return PointedModel(chain(2), {"p": sum(1 << w for w in p_worlds)}, 0)


class TestEval:
    def test_single_point_pl(self):
        m = PointedModel(single_point(), {"p": 1}, 0)
        assert valid_on(m, parse("[u]p <-> p"))
        assert valid_on(m, parse("[d]p <-> <d>p"))

    def test_chain_diamond(self):
        m = chain2_model()
        assert sorted(eval_formula(m, parse("<u>p"))) == [0, 1]

    def test_converse_axioms_forced(self, rng):
        for _ in range(40):
            m = random_model(rng)
            assert valid_on(m, parse("p0 -> [u]<d>p0"))
            assert valid_on(m, parse("p0 -> [d]<u>p0"))

    def test_holds_at(self):
        m = chain2_model()
        assert holds_at(m, 1, parse("<u>p"))
        assert holds_at(m, 0, parse("true"))
        with pytest.raises(BadWorldIndex):
            holds_at(m, 5, parse("p"))

    def test_cluster_diamond_stability(self, rng):
        for _ in range(10):
            val = {"p": rng.getrandbits(3)}
            m = PointedModel(cluster(3), val, 0)
            assert valid_on(m, parse("<u>p -> [u]<u>p"))

    def test_agrees_with_naive_oracle(self, rng):
        for _ in range(80):
            m = random_model(rng, max_n=7)
            for _ in range(6):
                f = random_formula(rng, rng.randint(1, 9))
                mask = eval_mask(m, f)
                for w in range(m.frame.n):
                    assert bool((mask >> w) & 1) == naive_truth(m, w, f)


def naive_closure(m, letters):
    """Reference least-fixpoint closure under complement, intersection and
    both box preimages, by plain worklist iteration."""
    n = m.frame.n
    full = (1 << n) - 1

    def box(dir_up: bool, x):
        out = 0
        for w in range(n):
            succs = [v for v in range(n)
                     if (dir_up and m.frame.up(w, v))
                     or (not dir_up and m.frame.up(v, w))]
            if all((x >> v) & 1 for v in succs):
                out |= 1 << w
        return out

    sets = {0, full}
    sets.update(m.valuation.get(l, 0) for l in letters)
    while True:
        new = set()
        for x in sets:
            new.add(full ^ x)
            new.add(box(True, x))
            new.add(box(False, x))
            for y in sets:
                new.add(x & y)
        if new <= sets:
            return sorted(sets)
        sets |= new


class TestDefinableAlgebra:
    def test_single_point(self):
        m = PointedModel(single_point(), {"p": 1}, 0)
        assert definable_algebra(m).masks() == [0, 1]

    def test_chain2(self):
        m = chain2_model()
        assert definable_algebra(m).masks() == [0, 1, 2, 3]

    def test_cluster2_no_letters(self):
        m = PointedModel(cluster(2), {}, 0)
        assert definable_algebra(m).masks() == [0, 3]

    def test_matches_naive_closure(self, rng):
        for _ in range(30):
            m = random_model(rng, max_n=5, letters=2)
            assert definable_algebra(m).masks() == naive_closure(m, m.letters())

    def test_budget(self):
        m = powerset_frame([0, 1], [[2, 3, 4], [5, 6, 7]], range(8))
        with pytest.raises(BudgetExceeded):
            definable_algebra(m)

    def test_contains_generators_and_bounds(self, rng):
        for _ in range(10):
            m = random_model(rng, max_n=5, letters=2)
            alg = definable_algebra(m)
            masks = set(alg.masks())
            assert 0 in masks and (1 << m.frame.n) - 1 in masks
            for l in m.letters():
                assert m.valuation[l] in masks


class TestMlMember:
    def test_single_point_pl(self):
        m = PointedModel(single_point(), {"p": 1}, 0)
        assert ml_member(m, parse("[d]p <-> p"))

    def test_pushed_below_button(self):
        m = powerset_frame([0], [], [0])
        assert not ml_member(m, parse("<d>[d]b0 -> b0"))

    def test_four_axiom_on_rt_models(self, rng):
        for _ in range(10):
            c = rng.randint(1, 3)
            m = PointedModel(cluster(c), {"p": rng.getrandbits(c)}, 0)
            assert ml_member(m, parse("[u]p -> [u][u]p"))

    def test_invariant_under_unused_quantified_letter(self):
        # Quantifying a letter that does not occur cannot change membership.
        m = chain2_model()
        alg = definable_algebra(m).masks()
        f = parse("[u]p -> p")
        expected = ml_member(m, f)
        swept = all(
            (eval_mask(m, f, env={"p": x, "zz": y}) >> m.point) & 1
            for x in alg for y in alg)
        assert swept == expected

    def test_closed_under_substitution(self):
        m = chain2_model()
        f = parse("[u]p -> p")
        assert ml_member(m, f)
        for text in ("[d]p", "<u>p & p", "~p", "true"):
            inst = substitute(f, {"p": parse(text)})
            assert ml_member(m, inst)

    def test_witness_is_verified(self):
        m = powerset_frame([0], [], [0])
        out = ml_status(m, parse("<d>[d]b0 -> b0"))
        assert out.status is False

    def test_letters_outside_valuation_are_quantified(self):
        # Quantification ranges over the algebra regardless of whether the
        # formula's letters appear in the valuation.
        m = chain2_model()
        assert ml_member(m, parse("[u]zz -> zz"))
        assert not ml_member(m, parse("zz -> [u]zz"))


class TestMlFragment:
    def test_single_point_down_is_pl(self):
        from bikripke.theories import PL, is_valid
        m = PointedModel(single_point(), {}, 0)
        frag = ml_fragment(m, 1, 5, {DOWN})
        assert not frag.unknown
        for f in frag.formulas:
            assert frag.status[f] == is_valid(PL, f)

    def test_cluster3_up_is_s5(self):
        # The letters must separate the cluster's worlds: the algebra of a
        # letterless cluster is {empty, full} and its fragment exceeds S5.
        from bikripke.theories import S5, is_valid
        m = PointedModel(cluster(3), {"q0": 0b001, "q1": 0b010}, 0)
        frag = ml_fragment(m, 1, 6, {UP})
        assert not frag.unknown
        for f in frag.formulas:
            assert frag.status[f] == is_valid(S5, f)

    def test_bs22_up_contains_s42_excludes_s5_axiom(self):
        from bikripke.frame import bs_model
        from bikripke.theories import S4_2, is_valid
        m = bs_model(2, 2)
        frag = ml_fragment(m, 1, 6, {UP})
        assert not frag.unknown
        for f in frag.formulas:
            if is_valid(S4_2, f):
                assert frag.status[f] is True
        assert frag.status[parse("<u>[u]p0 -> p0")] is False


class TestMultiverseTruth:
    def test_top_on_connected(self):
        m = chain2_model()
        assert sorted(multiverse_truth(m, parse("true"))) == [0, 1]

    def test_chain_p_empty(self):
        m = chain2_model()
        assert sorted(multiverse_truth(m, parse("p"))) == []

    def test_two_components(self):
        m = PointedModel(make_frame(2, [], {"reflexive"}), {"p": 0b01}, 0)
        assert sorted(multiverse_truth(m, parse("p"))) == [0]

    def test_constant_on_components(self, rng):
        for _ in range(25):
            m = random_model(rng, max_n=7)
            f = random_formula(rng, rng.randint(1, 7))
            mask = multiverse_truth(m, f).mask
            n = m.frame.n
            adj = [m.frame.up_masks[w] | m.frame.down_masks[w] | (1 << w)
                   for w in range(n)]
            for w in range(n):
                comp = 1 << w
                frontier = comp
                while frontier:
                    nxt = 0
                    mm = frontier
                    while mm:
                        low = mm & -mm
                        nxt |= adj[low.bit_length() - 1]
                        mm ^= low
                    frontier = nxt & ~comp
                    comp |= nxt
                inside = mask & comp
                assert inside == 0 or inside == comp
