import pytest

from bikripke.controls import (
    ControlFamily,
    FailureWitness,
    IndependenceCertificate,
    check_independent,
    find_family,
    is_button,
    is_pushed,
    is_switch,
    simulate_countermodel,
)
from bikripke.errors import InsufficientControls, VerificationFailed
from bikripke.formula import (
    DOWN,
    UP,
    Atom,
    Box,
    Dia,
    Imp,
    Not,
    Top,
    parse,
    substitute,
)
from bikripke.frame import PointedModel, bs_model, chain, cluster, powerset_frame
from bikripke.semantics import eval_mask, holds_at
from bikripke.theories import S4_2, S5, decide


def thm4_style_model():
    return powerset_frame([0, 1], [[2, 3, 4], [5, 6, 7]], range(8))


class TestPredicates:
    def test_powerset_down_button(self):
        m = powerset_frame([0], [[1, 2]], [0, 1, 2])
        b0 = Atom("b0")
        assert is_button(m, m.point, b0, DOWN)
        assert not is_pushed(m, m.point, b0, DOWN)
        # below the world where the factor is gone the button is pushed
        ground = m.point & ~1  # remove index 0 (bit position 0)
        assert is_pushed(m, ground, b0, DOWN)

    def test_top_is_pushed_button(self):
        m = bs_model(1, 1)
        assert is_button(m, 0, Top(), UP)
        assert is_pushed(m, 0, Top(), UP)

    def test_switch_on_cluster(self):
        m = PointedModel(cluster(3), {"p": 0b010}, 0)
        assert is_switch(m, 0, Atom("p"), UP)

    def test_parity_letter_not_strict_switch_on_lattice(self):
        # The subset lattice has a bottom world where nothing can change,
        # so no formula is a switch under the strict reading.
        m = thm4_style_model()
        assert not is_switch(m, m.point, Atom("s1"), DOWN)

    def test_bs_switch_bits_are_strict_switches(self):
        m = bs_model(1, 1)
        assert is_switch(m, 0, Atom("s1"), UP)
        assert is_button(m, 0, Atom("b1"), UP)
        assert not is_pushed(m, 0, Atom("b1"), UP)


class TestCertificates:
    @pytest.mark.parametrize("mb,ns", [(1, 1), (2, 1), (2, 2), (3, 2)])
    def test_bs_families_certify_strict(self, mb, ns):
        m = bs_model(mb, ns)
        fam = ControlFamily(UP,
                            tuple(Atom(f"b{i}") for i in range(1, mb + 1)),
                            tuple(Atom(f"s{j}") for j in range(1, ns + 1)),
                            m)
        cert = check_independent(m, fam)
        assert isinstance(cert, IndependenceCertificate)
        assert len(cert.table) == m.frame.n

    def test_chain_single_button(self):
        m = PointedModel(chain(2), {"p": 0b10}, 0)
        fam = ControlFamily(UP, (Atom("p"),), (), m)
        cert = check_independent(m, fam)
        assert isinstance(cert, IndependenceCertificate)

    def test_bs_button_is_not_switch(self):
        m = bs_model(1, 0)
        fam = ControlFamily(UP, (), (Atom("b1"),), m)
        witness = check_independent(m, fam)
        assert isinstance(witness, FailureWitness)
        assert "not a switch" in witness.reason

    def test_lattice_needs_horizon(self):
        m = thm4_style_model()
        fam = ControlFamily(DOWN, (Atom("b0"), Atom("b1")), (Atom("s1"),), m)
        strict = check_independent(m, fam)
        assert isinstance(strict, FailureWitness)
        cert = check_independent(m, fam, horizon=1)
        assert isinstance(cert, IndependenceCertificate)

    def test_certificate_entries_recheck(self):
        m = bs_model(2, 1)
        fam = ControlFamily(UP, (Atom("b1"), Atom("b2")), (Atom("s1"),), m)
        cert = check_independent(m, fam)
        assert isinstance(cert, IndependenceCertificate)
        pushed_sets = [eval_mask(m, Box(UP, b)) for b in fam.buttons]
        switch_sets = [eval_mask(m, s) for s in fam.switches]
        for u, row in cert.table.items():
            for (bt, t), w in row.items():
                assert m.frame.up(u, w)
                assert all(((pm >> w) & 1) == ((bt >> i) & 1)
                           for i, pm in enumerate(pushed_sets))
                assert all(((sm >> w) & 1) == ((t >> j) & 1)
                           for j, sm in enumerate(switch_sets))


class TestFindFamily:
    def test_powerset_letters_found(self):
        m = powerset_frame([0, 1], [[2, 3, 4]], range(5))
        fam = find_family(m, m.point, DOWN, 2, 1, horizon=1)
        assert fam is not None
        assert set(fam.buttons) == {Atom("b0"), Atom("b1")}
        assert fam.switches == (Atom("s1"),)

    def test_single_point_no_button(self):
        from bikripke.frame import single_point
        m = PointedModel(single_point(), {"p": 1}, 0)
        assert find_family(m, 0, UP, 1, 0) is None

    def test_cluster_switch_only(self):
        m = PointedModel(cluster(3), {"p": 0b010}, 0)
        fam = find_family(m, 0, UP, 0, 1)
        assert fam is not None
        assert fam.switches == (Atom("p"),)

    def test_persistence_downward_on_powersets(self):
        # An upward family certified at S stays certified at every subset of
        # S (upward S4.2 machinery is downwards necessary).
        m = powerset_frame([0, 1], [[2, 3]], [0, 1, 2, 3])
        fam = find_family(m, m.point, UP, 1, 1)
        assert fam is None  # the lattice top kills strict upward switches
        # switch-free upward button families do persist
        for point_mask in range(m.frame.n):
            sub = PointedModel(m.frame, m.valuation, point_mask)
            buttons = [Atom(l) for l in ("b0", "b1")
                       if is_button(sub, point_mask, Not(Atom(l)), UP)
                       and not is_pushed(sub, point_mask, Not(Atom(l)), UP)]
            fam2 = ControlFamily(UP, tuple(Not(b) for b in
                                           (Atom("b0"), Atom("b1"))
                                           if not is_pushed(sub, point_mask,
                                                            Not(b), UP)), (), sub)
            cert = check_independent(sub, fam2)
            assert isinstance(cert, IndependenceCertificate)


class TestSimulate:
    def _cert(self, m, dir, nb, ns, horizon=None):
        fam = find_family(m, m.point, dir, nb, ns, horizon=horizon)
        assert fam is not None
        cert = check_independent(m, fam, horizon=horizon)
        assert isinstance(cert, IndependenceCertificate)
        return cert

    def test_five_axiom_via_buttons(self):
        m = bs_model(1, 0)
        cert = self._cert(m, UP, 1, 0)
        f = parse("<u>[u]p -> p")
        cm = decide(S4_2, f).countermodel
        sigma = simulate_countermodel(cert, f, cm)
        inst = substitute(f, sigma)
        assert not holds_at(m, m.point, inst)

    def test_b_axiom_on_powerset_down(self):
        m = powerset_frame([0], [], [0])
        fam = ControlFamily(DOWN, (Atom("b0"),), (), m)
        cert = check_independent(m, fam)
        assert isinstance(cert, IndependenceCertificate)
        f = parse("<u>p -> [u]<u>p")
        cm = decide(S4_2, f).countermodel
        sigma = simulate_countermodel(cert, f, cm)
        inst = substitute(parse("<d>p -> [d]<d>p"), sigma)
        assert not holds_at(m, m.point, inst)

    def test_switch_only_covers_s5_refutations(self):
        m = PointedModel(cluster(4), {"q0": 0b0011, "q1": 0b0101}, 0)
        cert = self._cert(m, UP, 0, 2)
        for text in ("[u]p0 -> [u][u]p0 & p1", "<u>p0 -> p0",
                     "~[u]p0 -> [u]~[u]p0", "[u](p0 -> p1) -> ([u]p0 -> p1)"):
            f = parse(text)
            v = decide(S5, f)
            if not v.is_invalid:
                continue
            sigma = simulate_countermodel(cert, f, v.countermodel)
            assert not holds_at(m, m.point, substitute(f, sigma))

    def test_insufficient_controls(self):
        m = bs_model(1, 0)
        cert = self._cert(m, UP, 1, 0)
        # box p or box not-p fails only on a two-world cluster, which needs
        # a switch the family does not have
        f = parse("~[u]p -> [u]~p")
        v = decide(S5, f)
        assert v.is_invalid
        with pytest.raises(InsufficientControls):
            simulate_countermodel(cert, f, v.countermodel)

    def test_verification_failure_on_dead_end_artifact(self):
        # McKinsey-style formulas hold at every point of a finite lattice
        # under every substitution (the bottom world is a dead end), so the
        # simulation must refuse them rather than return an unsound witness.
        m = thm4_style_model()
        fam = find_family(m, m.point, DOWN, 2, 1, horizon=1)
        cert = check_independent(m, fam, horizon=1)
        f = parse("[u]<u>p -> <u>[u]p")
        cm = decide(S4_2, f).countermodel
        with pytest.raises(VerificationFailed):
            simulate_countermodel(cert, f, cm)


class TestMixedButtons:
    def test_factor_letters_yield_mixed_buttons(self):
        m = thm4_style_model()
        # At the full point every button letter is an unpushed down button
        # whose negation is a pushed up button; at the empty point the dual
        # holds.  At intermediate points the split drives the impossibility.
        mid = PointedModel(m.frame, m.valuation, 0b00000001)
        b0, b1 = Atom("b0"), Atom("b1")
        assert is_button(mid, mid.point, b0, DOWN)
        assert not is_pushed(mid, mid.point, b0, DOWN)
        assert is_button(mid, mid.point, Not(b1), UP)
        assert not is_pushed(mid, mid.point, Not(b1), UP)

    def test_no_point_has_both_five_instances(self):
        m = thm4_style_model()
        for w in range(m.frame.n):
            for l in ("b0", "b1"):
                f = Atom(l)
                down_ok = holds_at(m, w, Imp(Dia(DOWN, Box(DOWN, f)), f))
                up_ok = holds_at(m, w, Imp(Dia(UP, Box(UP, Not(f))), Not(f)))
                assert not (down_ok and up_ok)
