import math

import numpy as np
import pytest

from sbb import expr as ex
from sbb.box import Box
from sbb.expr import DomainError, ExprDag
from sbb.intervals import INF, Interval


def fig_expr(dag: ExprDag):
    # log(x)^2 + 2*log(x)*y + y^2 over variables x=0, y=1
    x = dag.var(0)
    y = dag.var(1)
    lx = dag.unary(ex.LOG, x)
    t1 = dag.pow(lx, 2.0)
    t2 = dag.prod(1.0, [lx, y])
    t3 = dag.pow(y, 2.0)
    return dag.sum(0.0, [(1.0, t1), (2.0, t2), (1.0, t3)])


def test_hash_consing_same_id():
    dag = ExprDag()
    a = fig_expr(dag)
    b = fig_expr(dag)
    assert a == b


def test_topological_numbering():
    dag = ExprDag()
    root = fig_expr(dag)
    for nid in dag.reachable(root):
        for c in dag.node(nid).children:
            assert c < nid


def test_eval_affine():
    dag = ExprDag()
    x = dag.var(0)
    s = dag.sum(1.0, [(2.0, x)])
    assert ex.eval_point(dag, s, {0: 3.0}) == 7.0


def test_eval_entropy_at_zero():
    dag = ExprDag()
    e = dag.unary(ex.ENTROPY, dag.var(0))
    assert ex.eval_point(dag, e, {0: 0.0}) == 0.0


def test_eval_signpower():
    dag = ExprDag()
    s = dag.signpower(dag.var(0), 2.0)
    assert ex.eval_point(dag, s, {0: -3.0}) == -9.0


def test_eval_domain_errors():
    dag = ExprDag()
    lg = dag.unary(ex.LOG, dag.var(0))
    with pytest.raises(DomainError):
        ex.eval_point(dag, lg, {0: -1.0})
    fr = dag.pow(dag.var(0), 0.5)
    with pytest.raises(DomainError):
        ex.eval_point(dag, fr, {0: -1.0})
    en = dag.unary(ex.ENTROPY, dag.var(0))
    with pytest.raises(DomainError):
        ex.eval_point(dag, en, {0: -0.5})


def test_grad_square():
    dag = ExprDag()
    sq = dag.pow(dag.var(0), 2.0)
    g = ex.gradient(dag, sq, {0: 3.0})
    assert g[0] == pytest.approx(6.0)


def test_grad_fig_expression():
    # d/dx of log(x)^2 + 2 log(x) y + y^2 at (1,1): 2(log 1 + 1)/1 = 2
    dag = ExprDag()
    root = fig_expr(dag)
    g = ex.gradient(dag, root, {0: 1.0, 1: 1.0})
    assert g[0] == pytest.approx(2.0)
    assert g[1] == pytest.approx(2.0)  # 2 log(1) + 2y


def _random_expr_cases():
    # one exercised expression per operator
    cases = []
    dag = ExprDag()
    x, y = dag.var(0), dag.var(1)
    cases.append((dag, dag.sum(0.5, [(2.0, x), (-1.5, y)]), (0.1, 3.0), (0.2, 2.0)))
    cases.append((dag, dag.prod(2.0, [x, y]), (0.1, 3.0), (0.2, 2.0)))
    cases.append((dag, dag.pow(x, 3.0), (-3.0, 3.0), None))
    cases.append((dag, dag.pow(x, 1.7), (0.1, 3.0), None))
    cases.append((dag, dag.pow(x, -2.0), (0.5, 3.0), None))
    cases.append((dag, dag.signpower(x, 2.5), (-3.0, 3.0), None))
    cases.append((dag, dag.unary(ex.EXP, x), (-2.0, 2.0), None))
    cases.append((dag, dag.unary(ex.LOG, x), (0.1, 5.0), None))
    cases.append((dag, dag.unary(ex.ENTROPY, x), (0.1, 5.0), None))
    cases.append((dag, dag.unary(ex.SIN, x), (-3.0, 3.0), None))
    cases.append((dag, dag.unary(ex.COS, x), (-3.0, 3.0), None))
    cases.append((dag, dag.unary(ex.ABS, x), (0.3, 3.0), None))
    comp = dag.sum(0.0, [(1.0, dag.pow(dag.unary(ex.LOG, x), 2.0)), (2.0, dag.prod(1.0, [dag.unary(ex.LOG, x), y]))])
    cases.append((dag, comp, (0.5, 4.0), (0.2, 2.0)))
    return cases


def test_grad_matches_finite_differences():
    rng = np.random.default_rng(7)
    h = 1e-6
    for dag, root, xr, yr in _random_expr_cases():
        for _ in range(20):
            pt = {0: rng.uniform(xr[0] + 1e-3, xr[1] - 1e-3)}
            if yr is not None:
                pt[1] = rng.uniform(yr[0] + 1e-3, yr[1] - 1e-3)
            else:
                pt[1] = 1.0
            g = ex.gradient(dag, root, pt)
            for j in pt:
                up = dict(pt)
                dn = dict(pt)
                up[j] += h
                dn[j] -= h
                fd = (ex.eval_point(dag, root, up) - ex.eval_point(dag, root, dn)) / (2 * h)
                assert abs(g.get(j, 0.0) - fd) <= 1e-5 * max(1.0, abs(fd))


def test_simplify_flatten_sum():
    dag = ExprDag()
    x, y = dag.var(0), dag.var(1)
    inner = dag.sum(0.0, [(1.0, x), (1.0, y)])
    outer = dag.sum(0.0, [(1.0, inner)])
    s = ex.simplify(dag, outer)
    n = dag.node(s)
    assert n.kind == ex.SUM and set(n.children) == {x, y}


def test_simplify_prod_constant_folding():
    dag = ExprDag()
    x = dag.var(0)
    p = dag.prod(2.0, [dag.val(3.0), x])
    s = ex.simplify(dag, p)
    n = dag.node(s)
    assert n.kind == ex.PROD and n.const == 6.0 and n.children == (x,)


def test_simplify_pow_composition():
    dag = ExprDag()
    x = dag.var(0)
    p = dag.pow(dag.pow(x, 2.0), 3.0)
    s = ex.simplify(dag, p)
    n = dag.node(s)
    assert n.kind == ex.POW and n.exponent == 6.0
    # fractional outer exponent must stay unexpanded
    q = dag.pow(dag.pow(x, 2.0), 0.5)
    s2 = ex.simplify(dag, q)
    n2 = dag.node(s2)
    assert n2.kind == ex.POW and n2.exponent == 0.5


def test_simplify_repeated_prod_child_becomes_pow():
    dag = ExprDag()
    x = dag.var(0)
    p = dag.prod(1.0, [x, x])
    s = ex.simplify(dag, p)
    n = dag.node(s)
    assert n.kind == ex.POW and n.exponent == 2.0


def test_simplify_preserves_value_sampling():
    rng = np.random.default_rng(3)
    dag = ExprDag()
    x, y = dag.var(0), dag.var(1)
    exprs = [
        dag.sum(1.0, [(2.0, dag.sum(0.0, [(1.0, x), (3.0, y)])), (1.0, dag.prod(2.0, [x, dag.val(0.5)]))]),
        dag.prod(1.0, [dag.prod(2.0, [x, y]), dag.val(3.0), x]),
        dag.pow(dag.pow(x, 3.0), 2.0),
        dag.sum(0.0, [(1.0, dag.pow(x, 1.0)), (-2.0, dag.prod(1.0, [y]))]),
    ]
    for root in exprs:
        simp = ex.simplify(dag, root)
        for _ in range(250):
            pt = {0: rng.uniform(0.1, 4.0), 1: rng.uniform(0.1, 4.0)}
            a = ex.eval_point(dag, root, pt)
            b = ex.eval_point(dag, simp, pt)
            assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_interval_eval_examples():
    dag = ExprDag()
    x = dag.var(0)
    sq = dag.pow(x, 2.0)
    box = Box(np.array([-1.0]), np.array([2.0]))
    out = ex.ieval(dag, sq, box)
    assert out.lo == pytest.approx(0.0, abs=1e-9) and out.hi == pytest.approx(4.0)
    lg = dag.unary(ex.LOG, x)
    box = Box(np.array([-1.0]), np.array([0.0]))
    assert ex.ieval(dag, lg, box).empty


def test_ieval_inclusion_monotonicity():
    rng = np.random.default_rng(11)
    dag = ExprDag()
    root = fig_expr(dag)
    for _ in range(50):
        lo = rng.uniform(0.1, 2.0, 2)
        wid = rng.uniform(0.1, 2.0, 2)
        big = Box(lo, lo + wid)
        small = Box(lo + 0.25 * wid, lo + 0.75 * wid)
        bi = ex.ieval(dag, root, big)
        si = ex.ieval(dag, root, small)
        assert bi.lo <= si.lo + 1e-9 and si.hi <= bi.hi + 1e-9


def test_curvature_examples():
    dag = ExprDag()
    root = fig_expr(dag)
    # x^2 + 2xy + y^2 over plain variables
    x, y = dag.var(0), dag.var(1)
    quad = dag.sum(0.0, [(1.0, dag.pow(x, 2.0)), (2.0, dag.prod(1.0, [x, y])), (1.0, dag.pow(y, 2.0))])
    box = Box(np.array([-10.0, -10.0]), np.array([10.0, 10.0]))
    assert ex.curvature(dag, quad, box) == ex.CONVEX
    lg = dag.unary(ex.LOG, x)
    box = Box(np.array([0.1, 0.0]), np.array([10.0, 1.0]))
    assert ex.curvature(dag, lg, box) == ex.CONCAVE
    bil = dag.prod(1.0, [x, y])
    box = Box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    assert ex.curvature(dag, bil, box) == ex.UNKNOWN


def test_curvature_soundness_segment_sampling():
    rng = np.random.default_rng(5)
    dag = ExprDag()
    x, y = dag.var(0), dag.var(1)
    candidates = [
        (dag.sum(0.0, [(1.0, dag.pow(x, 2.0)), (2.0, dag.prod(1.0, [x, y])), (1.0, dag.pow(y, 2.0))]), (-2, 2), (-2, 2)),
        (dag.unary(ex.EXP, dag.sum(0.0, [(1.0, x), (1.0, y)])), (-1, 1), (-1, 1)),
        (dag.pow(x, 2.0), (-2, 2), (0, 1)),
        (dag.pow(dag.unary(ex.EXP, x), 3.0), (-1, 1), (0, 1)),
    ]
    for root, xr, yr in candidates:
        box = Box(np.array([xr[0], yr[0]], dtype=float), np.array([xr[1], yr[1]], dtype=float))
        cv = ex.curvature(dag, root, box)
        if cv != ex.CONVEX:
            continue
        for _ in range(500):
            a = rng.uniform([xr[0], yr[0]], [xr[1], yr[1]])
            b = rng.uniform([xr[0], yr[0]], [xr[1], yr[1]])
            lam = rng.uniform()
            mid = lam * a + (1 - lam) * b
            fmid = ex.eval_point(dag, root, dict(enumerate(mid)))
            fa = ex.eval_point(dag, root, dict(enumerate(a)))
            fb = ex.eval_point(dag, root, dict(enumerate(b)))
            assert fmid <= lam * fa + (1 - lam) * fb + 1e-9


def test_monotonicity_examples():
    dag = ExprDag()
    x, y = dag.var(0), dag.var(1)
    s = dag.sum(0.0, [(2.0, x), (-1.0, y)])
    box = Box(np.array([-5.0, -5.0]), np.array([5.0, 5.0]))
    slot_x = dag.node(s).children.index(x)
    slot_y = dag.node(s).children.index(y)
    assert ex.monotonicity(dag, s, slot_x, box) == ex.INCREASING
    assert ex.monotonicity(dag, s, slot_y, box) == ex.DECREASING
    sq = dag.pow(x, 2.0)
    box = Box(np.array([-1.0, 0.0]), np.array([2.0, 1.0]))
    assert ex.monotonicity(dag, sq, 0, box) == ex.UNKNOWN
    p = dag.prod(1.0, [x, y])
    box = Box(np.array([-5.0, 1.0]), np.array([5.0, 3.0]))
    slot = dag.node(p).children.index(x)
    assert ex.monotonicity(dag, p, slot, box) == ex.INCREASING


def test_is_integral():
    dag = ExprDag()
    x, y = dag.var(0), dag.var(1)
    flags = {0: True, 1: True}
    s = dag.sum(0.0, [(2.0, x), (3.0, y)])
    assert ex.is_integral(dag, s, flags)
    s2 = dag.sum(0.0, [(0.5, x)])
    assert not ex.is_integral(dag, s2, flags)
    p = dag.prod(1.0, [x, y])
    assert ex.is_integral(dag, p, flags)
    assert not ex.is_integral(dag, p, {0: True, 1: False})
