import numpy as np
import pytest

from polyharm import (
    BoundaryDistribution,
    audit_binomial_identities,
    binomial,
    boundary_kernel,
    build_tree,
    eval_polyharmonic,
    green,
    kernel_consistency_check,
    martin_kernel,
    restrict_to_section,
    section_kernel,
    sub_chain,
    tree_green,
)
from polyharm.errors import (
    AdditivityViolation,
    NonPositiveMass,
    NotASection,
    ZeroLambda,
)

from conftest import DEPTH2_SECTION, random_resolvent_point, random_section, random_tree


# ---------------------------------------------------------------- builds

def test_build_uniform_binary(binary_tree):
    assert binary_tree.root == "o"
    assert binary_tree.max_depth == 2
    assert binary_tree.forward_p["u1"] == pytest.approx(0.5)
    assert binary_tree.forward_p["v11"] == pytest.approx(0.5)


def test_build_from_forward_probs():
    t = build_tree({"o": ["a", "b"]}, forward_probs={"a": 0.3, "b": 0.7})
    assert t.measure["a"] == pytest.approx(0.3)
    assert t.measure["b"] == pytest.approx(0.7)


def test_additivity_violation():
    with pytest.raises(AdditivityViolation):
        build_tree({"o": ["a", "b"]}, measure={"o": 1.0, "a": 0.3, "b": 0.6})


def test_nonpositive_mass():
    with pytest.raises(NonPositiveMass):
        build_tree({"o": ["a", "b"]}, measure={"o": 1.0, "a": 1.0, "b": 0.0})


def test_root_mass_must_be_one():
    with pytest.raises(AdditivityViolation):
        build_tree({"o": ["a"]}, measure={"o": 0.9, "a": 0.9})


def test_interior_leaf_rejected():
    kids = {"o": ["a", "b"], "a": ["c"]}
    meas = {"o": 1.0, "a": 0.5, "b": 0.5, "c": 0.5}
    with pytest.raises(ValueError, match="no children"):
        build_tree(kids, measure=meas)


# -------------------------------------------------------------- sections

def test_restrict_depth2(binary_tree):
    c = restrict_to_section(binary_tree, DEPTH2_SECTION)
    assert set(c.interior_ids) == {"o", "u1", "u2"}
    assert set(c.boundary_ids) == set(DEPTH2_SECTION)
    view = sub_chain(c)
    assert np.all(view.p[view.p > 0] == 0.5)


def test_restrict_depth1(binary_tree):
    c = restrict_to_section(binary_tree, ["u1", "u2"])
    assert c.interior_ids == ("o",)


def test_mixed_depth_section(binary_tree):
    c = restrict_to_section(binary_tree, ["u1", "v21", "v22"])
    assert set(c.interior_ids) == {"o", "u2"}
    assert set(c.boundary_ids) == {"u1", "v21", "v22"}


def test_ancestor_descendant_not_a_section(binary_tree):
    with pytest.raises(NotASection):
        restrict_to_section(binary_tree, ["u1", "v11", "v21", "v22"])


def test_incomplete_section_rejected(binary_tree):
    with pytest.raises(NotASection):
        restrict_to_section(binary_tree, ["u1", "v21"])


def test_root_not_allowed_in_section(binary_tree):
    with pytest.raises(NotASection):
        restrict_to_section(binary_tree, ["o"])


def test_restriction_is_nilpotent():
    rng = np.random.default_rng(101)
    for _ in range(10):
        t = random_tree(rng)
        sec = random_section(rng, t)
        c = restrict_to_section(t, sec)
        p_int = sub_chain(c).p
        power = np.eye(p_int.shape[0])
        for _ in range(t.max_depth):
            power = power @ p_int
        assert np.array_equal(power, np.zeros_like(power))


# ---------------------------------------------------------- closed forms

def test_tree_green_values(binary_tree):
    s = DEPTH2_SECTION
    assert tree_green(binary_tree, s, 1.0, "o", "u1") == pytest.approx(0.5)
    assert tree_green(binary_tree, s, 1.0, "u1", "u2") == 0.0
    assert tree_green(binary_tree, s, 2.0, "o", "o") == pytest.approx(0.5)


def test_tree_green_zero_lambda(binary_tree):
    with pytest.raises(ZeroLambda):
        tree_green(binary_tree, DEPTH2_SECTION, 0.0, "o", "u1")


def test_section_kernel_values(binary_tree):
    s = DEPTH2_SECTION
    assert section_kernel(binary_tree, s, 1.0, 2, "o", "v11") == pytest.approx(2.0)
    assert section_kernel(binary_tree, s, 1.0, 1, "u1", "v11") == pytest.approx(2.0)
    assert section_kernel(binary_tree, s, 1.0, 1, "u2", "v11") == 0.0


def test_boundary_kernel_values(binary_tree):
    assert boundary_kernel(binary_tree, 1.0, 2, "o", "v11") == 0.0
    assert boundary_kernel(binary_tree, 1.0, 2, "v11", "v11") == pytest.approx(-8.0)
    assert boundary_kernel(binary_tree, 2.0, 1, "u1", "v11") == pytest.approx(4.0)


def test_boundary_kernel_ambiguous_arc(binary_tree):
    with pytest.raises(ValueError, match="constant"):
        boundary_kernel(binary_tree, 1.0, 1, "v11", "u1")


def test_closed_green_matches_general():
    rng = np.random.default_rng(103)
    for _ in range(15):
        t = random_tree(rng, max_depth=4)
        sec = random_section(rng, t)
        c = restrict_to_section(t, sec)
        lam = random_resolvent_point(rng, rho=0.3, margin=0.2, spread=1.2)
        gm = green(c, lam)
        ids = c.interior_ids
        for xi, x in enumerate(ids):
            for yi, y in enumerate(ids):
                closed = tree_green(t, sec, lam, x, y)
                general = gm.g[xi, yi]
                assert abs(closed - general) <= 1e-9 * (1 + abs(closed))


def test_closed_kernel_matches_general():
    rng = np.random.default_rng(107)
    for _ in range(15):
        t = random_tree(rng, max_depth=4)
        sec = random_section(rng, t)
        c = restrict_to_section(t, sec)
        lam = random_resolvent_point(rng, rho=0.3, margin=0.4, spread=1.2)
        r_max = 4
        mk = martin_kernel(c, lam, t.root, n=r_max)
        for r in range(1, r_max + 1):
            for xi, x in enumerate(c.interior_ids):
                for wj, w in enumerate(c.boundary_ids):
                    closed = section_kernel(t, sec, lam, r, x, w)
                    general = mk.higher[r - 1][xi, wj]
                    assert abs(closed - general) <= 1e-9 * (1 + abs(closed) + abs(general))


def test_hitting_from_origin_closed_form():
    rng = np.random.default_rng(109)
    for _ in range(15):
        t = random_tree(rng, max_depth=4)
        sec = random_section(rng, t)
        c = restrict_to_section(t, sec)
        lam = random_resolvent_point(rng, rho=0.3, margin=0.3, spread=1.5)
        gm = green(c, lam)
        o_pos = c.interior_ids.index(t.root)
        for wj, w in enumerate(c.boundary_ids):
            closed = lam ** (-t.depth[w]) * t.measure[w]
            assert abs(gm.f[o_pos, wj] - closed) <= 1e-12 * (1 + abs(closed))


def test_boundary_kernel_recursion():
    # (lam I - P) applied to the order-r kernel gives the order-(r-1) one
    rng = np.random.default_rng(113)
    for _ in range(10):
        t = random_tree(rng, max_depth=4)
        lam = random_resolvent_point(rng, rho=0.3, margin=0.4, spread=1.5)
        frontier = [v for v in t.vertices if t.depth[v] == t.max_depth]
        ray = t.path_from_root(frontier[0])
        for r in range(2, 6):
            for x in ray[:-1]:
                nxt = ray[ray.index(x) + 1]
                k_r_x = boundary_kernel(t, lam, r, x, frontier[0])
                k_r_child = boundary_kernel(t, lam, r, nxt, frontier[0])
                k_prev = boundary_kernel(t, lam, r - 1, x, frontier[0])
                lhs = lam * k_r_x - t.forward_p[nxt] * k_r_child
                assert abs(lhs - k_prev) <= 1e-10 * (1 + abs(k_prev))


def test_eval_polyharmonic_harmonic_cases(binary_tree):
    prob = BoundaryDistribution.from_measure(binary_tree)
    for v in binary_tree.vertices:
        assert eval_polyharmonic(binary_tree, 1.0, [prob], v) == pytest.approx(1.0)
        val = eval_polyharmonic(binary_tree, 3.0, [prob], v)
        assert val == pytest.approx(3.0 ** binary_tree.depth[v])


def test_eval_polyharmonic_forward_averaging():
    # f(x) = lam^|x| satisfies P f = lam f under forward averaging
    rng = np.random.default_rng(127)
    t = random_tree(rng, max_depth=4)
    prob = BoundaryDistribution.from_measure(t)
    lam = 1.7
    for v in t.vertices:
        if t.children[v]:
            avg = sum(t.forward_p[c] * eval_polyharmonic(t, lam, [prob], c)
                      for c in t.children[v])
            assert avg == pytest.approx(lam * eval_polyharmonic(t, lam, [prob], v))


def test_eval_polyharmonic_order2(binary_tree):
    zero = {v: 0.0 for v in binary_tree.vertices}
    prob = BoundaryDistribution.from_measure(binary_tree)
    for v in binary_tree.vertices:
        val = eval_polyharmonic(binary_tree, 1.0, [zero, prob], v)
        assert val == pytest.approx(-binary_tree.depth[v])


def test_eval_polyharmonic_additivity_guard(binary_tree):
    bad = {v: 1.0 for v in binary_tree.vertices}
    with pytest.raises(AdditivityViolation):
        eval_polyharmonic(binary_tree, 1.0, [bad], "o")


# --------------------------------------------------------------- binomial

def test_generalised_binomial():
    assert binomial(3, 2) == 3
    assert binomial(-1, 0) == 1
    assert binomial(-2, 1) == -2
    assert binomial(-2, 2) == 3
    assert binomial(0, 1) == 0
    assert binomial(5, -1) == 0


def test_binomial_identity_audit():
    derived_ok, alternate_ok, counter = audit_binomial_identities()
    assert derived_ok
    assert not alternate_ok
    assert counter is not None


def test_identity_spot_values():
    # a=1, b=3, n=2: derived form gives 1 = 3 - 2
    a, b, n = 1, 3, 2
    lhs = binomial(a, n - 1)
    rhs = sum(((-1) ** (r - 1)) * binomial(b - a + r - 2, r - 1) * binomial(b, n - r)
              for r in range(1, n + 1))
    assert lhs == rhs == 1
    # the rejected variant misses: 3 vs -5
    alt = sum(((-1) ** (n - r)) * binomial(b - a - r - 2, r - 1) * binomial(b, n - r)
              for r in range(1, n + 1))
    assert binomial(b, n - 1) == 3 and alt == -5


# ------------------------------------------------------------ consistency

def test_kernel_consistency_binary(binary_tree):
    rep = kernel_consistency_check(binary_tree, DEPTH2_SECTION, 1.0, 2, "v11")
    assert rep.max_deviation <= 1e-10
    assert rep.derived_identity_ok
    assert not rep.alternate_identity_ok
    assert rep.lhs["u1"] == pytest.approx(-2.0)
    assert rep.lhs["v11"] == pytest.approx(-8.0)


def test_kernel_consistency_order1_exact(binary_tree):
    rep = kernel_consistency_check(binary_tree, DEPTH2_SECTION, 1.3, 1, "v12")
    assert rep.max_deviation <= 1e-13


def test_kernel_consistency_random():
    rng = np.random.default_rng(131)
    for _ in range(10):
        t = random_tree(rng, max_depth=4)
        sec = random_section(rng, t)
        w = sorted(sec)[0]
        lam = random_resolvent_point(rng, rho=0.3, margin=0.4, spread=1.2)
        n = int(rng.integers(1, 5))
        rep = kernel_consistency_check(t, sec, lam, n, w)
        scale = 1 + max(abs(v) for v in rep.lhs.values())
        assert rep.max_deviation <= 1e-10 * scale


def test_tree_green_small_lambda(binary_tree):
    # nilpotent interior: every nonzero lam is usable, even tiny ones
    lam = 0.1 + 0.05j
    c = restrict_to_section(binary_tree, DEPTH2_SECTION)
    gm = green(c, lam)
    for xi, x in enumerate(c.interior_ids):
        for yi, y in enumerate(c.interior_ids):
            closed = tree_green(binary_tree, DEPTH2_SECTION, lam, x, y)
            assert abs(closed - gm.g[xi, yi]) <= 1e-9 * (1 + abs(closed))


def test_tree_doc_round_trip(binary_tree):
    from polyharm.formats import tree_from_doc, tree_to_doc

    doc = tree_to_doc(binary_tree, section=DEPTH2_SECTION)
    rebuilt, section = tree_from_doc(doc)
    assert rebuilt.vertices == binary_tree.vertices
    assert section == sorted(DEPTH2_SECTION)
    for v in binary_tree.vertices:
        assert rebuilt.measure[v] == binary_tree.measure[v]
