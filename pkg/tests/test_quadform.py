import math

import numpy as np
import pytest

from sbb import expr as ex
from sbb import intervals as iv
from sbb import quadform as qf
from sbb.expr import ExprDag
from sbb.intervals import INF, Interval


def fig_root(dag):
    x, y = dag.var(0), dag.var(1)
    lx = dag.unary(ex.LOG, x)
    return dag.sum(
        0.0,
        [(1.0, dag.pow(lx, 2.0)), (2.0, dag.prod(1.0, [lx, y])), (1.0, dag.pow(y, 2.0))],
    ), lx, y


def test_detect_fig_expression():
    dag = ExprDag()
    root, lx, y = fig_root(dag)
    q = qf.detect_quadratic(dag, root)
    assert q is not None
    i_lx = q.base_index[lx]
    i_y = q.base_index[y]
    assert q.a[i_lx] == 1.0 and q.a[i_y] == 1.0
    lo, hi = min(i_lx, i_y), max(i_lx, i_y)
    assert q.partners[lo][hi] == 2.0


def test_detect_rejects_cubic():
    dag = ExprDag()
    x = dag.var(0)
    root = dag.sum(0.0, [(1.0, dag.pow(x, 3.0)), (1.0, x)])
    assert qf.detect_quadratic(dag, root) is None


def test_detect_square_plus_linear():
    dag = ExprDag()
    x = dag.var(0)
    root = dag.sum(0.0, [(1.0, dag.pow(x, 2.0)), (1.0, x)])
    q = qf.detect_quadratic(dag, root)
    assert q is not None and q.k == 1
    assert q.a[0] == 1.0 and q.c[0] == 1.0


def test_quad_range_examples():
    out = qf.quad_range(1.0, Interval(1.0, 1.0), Interval(-1.0, 1.0))
    assert out == Interval(-0.25, 2.0)
    out = qf.quad_range(1.0, Interval(0.0, 0.0), Interval(-2.0, 3.0))
    assert out == Interval(0.0, 9.0)
    out = qf.quad_range(0.0, Interval(1.0, 2.0), Interval(1.0, 2.0))
    assert out == Interval(1.0, 4.0)


def test_quad_range_within_termwise():
    rng = np.random.default_rng(2)
    for _ in range(300):
        a = rng.uniform(-2, 2)
        b = sorted(rng.uniform(-2, 2, 2))
        y = sorted(rng.uniform(-3, 3, 2))
        hullq = qf.quad_range(a, Interval(*b), Interval(*y))
        termwise = iv.add(iv.scale(iv.pow_(Interval(*y), 2.0), a), iv.mul(Interval(*b), Interval(*y)))
        assert hullq.lo >= termwise.lo - 1e-9
        assert hullq.hi <= termwise.hi + 1e-9
        # and contains all sampled values
        for _ in range(30):
            yv = rng.uniform(y[0], y[1])
            bv = rng.uniform(b[0], b[1])
            assert hullq.contains(a * yv * yv + bv * yv, tol=1e-9)


def test_quad_prop_root_example():
    dag = ExprDag()
    x = dag.var(0)
    root = dag.sum(0.0, [(1.0, dag.pow(x, 2.0)), (1.0, x)])
    q = qf.detect_quadratic(dag, root)
    out = qf.quad_prop(q, [Interval(-1.0, 1.0)], Interval(-INF, -0.2))
    assert out is not None
    r = out[0]
    lo_expect = (-1 - math.sqrt(1 - 0.8)) / 2
    hi_expect = (-1 + math.sqrt(1 - 0.8)) / 2
    assert r.lo == pytest.approx(lo_expect, abs=1e-6)
    assert r.hi == pytest.approx(hi_expect, abs=1e-6)


def test_quad_prop_unconstrained_unchanged():
    dag = ExprDag()
    x = dag.var(0)
    root = dag.sum(0.0, [(1.0, dag.pow(x, 2.0)), (1.0, x)])
    q = qf.detect_quadratic(dag, root)
    out = qf.quad_prop(q, [Interval(-1.0, 1.0)], iv.FULL)
    assert out is not None and out[0] == Interval(-1.0, 1.0)


def test_quad_prop_partner_bound():
    dag = ExprDag()
    y1, y2 = dag.var(0), dag.var(1)
    root = dag.sum(0.0, [(1.0, dag.prod(1.0, [y1, y2])), (1.0, dag.pow(y1, 2.0))])
    q = qf.detect_quadratic(dag, root)
    i1 = q.base_index[y1]
    out = qf.quad_prop(q, _ordered([Interval(1.0, 2.0), Interval(0.0, 5.0)], q, dag), Interval(0.0, 2.0))
    assert out is not None
    i2 = q.base_index[y2]
    assert out[i2].hi <= 1.0 + 1e-9
    assert out[i1].lo >= 1.0 - 1e-9


def _ordered(ivs, q, dag):
    # map [y1 interval, y2 interval] onto base order
    out = [None] * q.k
    for b, idx in q.base_index.items():
        out[idx] = ivs[dag.node(b).var]
    return out


def test_quad_prop_infeasible():
    dag = ExprDag()
    x, y = dag.var(0), dag.var(1)
    root = dag.sum(0.0, [(1.0, dag.pow(x, 2.0)), (1.0, dag.pow(y, 2.0))])
    q = qf.detect_quadratic(dag, root)
    assert qf.quad_prop(q, [Interval(-1, 1), Interval(-1, 1)], Interval(-INF, -1.0)) is None


def test_quad_prop_soundness_sampling():
    rng = np.random.default_rng(9)
    dag = ExprDag()
    x, y = dag.var(0), dag.var(1)
    root = dag.sum(
        0.0,
        [(1.0, dag.pow(x, 2.0)), (-1.5, dag.prod(1.0, [x, y])), (0.5, dag.pow(y, 2.0)), (1.0, x)],
    )
    q = qf.detect_quadratic(dag, root)
    for _ in range(50):
        xb = sorted(rng.uniform(-3, 3, 2))
        yb = sorted(rng.uniform(-3, 3, 2))
        qlo, qhi = sorted(rng.uniform(-5, 5, 2))
        bounds = _ordered([Interval(*xb), Interval(*yb)], q, dag)
        out = qf.quad_prop(q, bounds, Interval(qlo, qhi))
        f = lambda a, b: a * a - 1.5 * a * b + 0.5 * b * b + a
        pts = rng.uniform([xb[0], yb[0]], [xb[1], yb[1]], size=(2000, 2))
        vals = f(pts[:, 0], pts[:, 1])
        inside = (vals >= qlo) & (vals <= qhi)
        if out is None:
            assert not inside.any()
            continue
        ix, iy = q.base_index[x], q.base_index[y]
        for p in pts[inside]:
            assert out[ix].contains(p[0], tol=1e-7)
            assert out[iy].contains(p[1], tol=1e-7)


def test_quad_curvature():
    dag = ExprDag()
    x, y = dag.var(0), dag.var(1)
    root = dag.sum(0.0, [(1.0, dag.pow(x, 2.0)), (2.0, dag.prod(1.0, [x, y])), (1.0, dag.pow(y, 2.0))])
    q = qf.detect_quadratic(dag, root)
    assert qf.quad_curvature(q) == ex.CONVEX
    root2 = dag.sum(0.0, [(1.0, dag.prod(1.0, [x, y]))])
    q2 = qf.detect_quadratic(dag, root2)
    assert qf.quad_curvature(q2) == ex.UNKNOWN
