"""The shipped fixture catalog: files, generators, validation, worked demo."""
from fractions import Fraction

import pytest

from gvc.algebra import GvcError
from gvc.brst import brst_candidate, check_brst_nilpotent, check_gauge_symmetry
from gvc.noether import check_kt_nilpotent, verify_ni
from gvc.variational import euler_lagrange
from gvc import theories as T
from conftest import all_pass, cached


def test_files_match_their_generators():
    for name in T.BUILTINS:
        with open(T.builtin_path(name), encoding="utf-8") as fh:
            assert fh.read() == T.fixture_text(name), name
    with open(T.builtin_path("ym4_super"), encoding="utf-8") as fh:
        assert fh.read() == T.fixture_text("ym4", algebra="osp12")


def test_builtin_name_guards():
    with pytest.raises(GvcError, match="unknown fixture"):
        T.fixture_text("nosuch")
    with pytest.raises(GvcError, match="no shipped fixture"):
        T.builtin_path("nosuch")
    with pytest.raises(GvcError, match="unsupported BF split"):
        T.fixture_text("bf", n=5, p=2, q=2)


def test_structure_constant_validation():
    T.su2().validate()
    T.osp12().validate()

    bad = T.su2()
    bad.c[(0, 1, 2)] = Fraction(2)
    with pytest.raises(GvcError, match="not graded-antisymmetric"):
        bad.validate()

    bad = T.su2()
    # still antisymmetric, but closes wrong: [e0,e0] would have to be 2*e1
    bad.c[(0, 0, 1)] = Fraction(1)
    bad.c[(0, 1, 0)] = Fraction(-1)
    with pytest.raises(GvcError, match="Jacobi identity fails"):
        bad.validate()

    bad = T.su2()
    bad.casimir[(0, 1)] = Fraction(1)
    with pytest.raises(GvcError, match="not graded-symmetric"):
        bad.validate()

    with pytest.raises(GvcError, match="degenerate"):
        T.StructureConstants(2, (0, 0), {}, {(0, 0): 1}).validate()


def test_bracket_and_form_lookup():
    sc = T.su2()
    assert sc.bracket(2, 0, 1) == 1
    assert sc.bracket(2, 1, 0) == -1
    assert sc.bracket(0, 0, 0) == 0
    assert sc.form(1, 1) == 1
    assert sc.form(0, 1) == 0


def test_bf_splits():
    bf = cached("bf")
    assert bf.name == "bf"
    assert bf.stage_numbers() == []
    bf4 = cached("bf4")
    assert bf4.name == "bf4"
    assert bf4.stage_numbers() == [1]
    assert bf4.registry.symbols["B"].symmetry == "antisym"


def test_ym_su2_chain(ym4):
    all_pass(verify_ni(ym4))
    all_pass(check_kt_nilpotent(ym4))
    all_pass(check_gauge_symmetry(ym4, 0))
    all_pass(check_brst_nilpotent(brst_candidate(ym4)))


def test_super_instance_parities_and_density(ym4_super):
    sup = ym4_super
    reg = sup.registry
    sc = T.osp12()
    assert reg.symbols["a"].parities == (0, sc.parities)
    flipped = tuple((p + 1) % 2 for p in sc.parities)
    assert reg.symbols["c"].parities == (0, flipped)

    def a(r, lam, *jets):
        return reg.var("a", (r, lam), jets)

    G = [1, -1, -1, -1]

    def field_strength(i, lam, be):
        out = a(i, be, lam) - a(i, lam, be)
        for (r, p, q), v in sc.c.items():
            if r == i:
                out = out + (a(p, lam) * a(q, be)).scale(v)
        return out

    L = reg.zero
    for (i, j), h in sc.casimir.items():
        for lam in range(4):
            for be in range(4):
                L = L + (field_strength(i, lam, be)
                         * field_strength(j, lam, be)).scale(
                    Fraction(h * G[lam] * G[be], 4))
    assert sup.lagrangian == L
    assert sup.lagrangian.num_terms() == 414


def test_custom_algebra_must_validate():
    bad = T.su2()
    bad.c[(0, 1, 2)] = Fraction(2)
    with pytest.raises(GvcError, match="not graded-antisymmetric"):
        T.build_fixture("ym4", algebra=bad)


def test_cs_field_equation_is_the_dual_curvature(cs3):
    reg = cs3.registry
    sc = T.su2()

    def a(r, lam, *jets):
        return reg.var("a", (r, lam), jets)

    def curv(i, lam, mu):
        out = a(i, mu, lam) - a(i, lam, mu)
        for (r, p, q), v in sc.c.items():
            if r == i:
                out = out + (a(p, lam) * a(q, mu)).scale(v)
        return out

    eps = T._eps(3)
    el = euler_lagrange(cs3.lagrangian, wrt={"a"})
    for r in range(3):
        for lam in range(3):
            want = reg.zero
            for p in range(3):
                h = sc.casimir.get((r, p), 0)
                if not h:
                    continue
                for (l2, be, ga), s in eps.items():
                    if l2 == lam:
                        want = want + curv(p, be, ga).scale(s * h)
            assert el.get("a", (r, lam)) == want, (r, lam)


def _el_text(res):
    return {k: v.pretty() for k, v in res.components.items() if not v.is_zero()}


def test_cs_background_terms_do_not_reach_the_field_equation(cs3):
    el = euler_lagrange(cs3.lagrangian, wrt={"a"})
    free = T.build_fixture("cs3", background=None)
    assert cs3.lagrangian.num_terms() != free.lagrangian.num_terms()
    assert _el_text(euler_lagrange(free.lagrangian, wrt={"a"})) == _el_text(el)
    other = T.build_fixture("cs3",
                            background={(0, 0): Fraction(7, 3), (2, 1): -1})
    assert _el_text(euler_lagrange(other.lagrangian, wrt={"a"})) == _el_text(el)
    all_pass(verify_ni(free))


def test_grav_parse_pins():
    gt = cached("grav4")
    assert gt.registry.jet_order == 3
    assert gt.lagrangian.num_terms() == 6432
    assert len(gt.records) == 4
    assert gt.registry.symbols["sigma"].symmetry == "sym"
    assert set(gt.gamma) == {("cm", (l,)) for l in range(4)}


def test_triviality_demo_profile():
    rep = T.cs_triviality_demo()
    assert rep["theory"] == "cs3"
    assert rep["status"] == "pass"
    by = {}
    for e in rep["entries"]:
        by.setdefault((e["check"], e["status"]), []).append(e)
    assert len(by[("ni", "pass")]) == 6 + 3 + 5  # declared, curvature, dim-5
    assert len(by[("equivalence", "pass")]) == 3
    assert len(by[("triviality", "pass")]) == 3
    assert len(by[("triviality", "skipped")]) == 3 + 5
    assert len(by[("rewriting", "pass")]) == 2
    assert ("triviality", "fail") not in by
    assert not any(status == "fail" for (_c, status) in by)
    for e in by[("triviality", "pass")]:
        assert "boundary certificate" in e["note"]
    notes = [e.get("note", "") for e in rep["entries"]]
    assert any("curvature presentation" in n for n in notes)
    assert any("five-dimensional analogue" in n for n in notes)
