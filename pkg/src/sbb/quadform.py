"""Quadratic structure detection and dependency-aware propagation.

A quadratic sum is rewritten over base entities (variables or non-quadratic
subexpressions) so that each base's square, linear, and bilinear terms are
grouped; grouping lets the univariate quadratic hull replace term-wise
interval arithmetic, which suffers from the dependency problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from . import intervals as iv
from .intervals import INF, Interval
from .linalg import eig_sym


@dataclass
class QuadForm:
    """q(y) = sum_i a_i*y_i^2 + c_i*y_i + sum_{j in P_i} b_ij*y_i*y_j + const.

    ``bases[i]`` is a dag node id (a variable node or a non-quadratic
    subexpression). Bilinear coefficients are stored on the smaller index
    only, so j in partners[i] implies i not in partners[j].
    """

    bases: list[int]
    a: list[float]
    c: list[float]
    partners: list[dict[int, float]]  # i -> {j: b_ij} with i < j
    const: float = 0.0
    base_index: dict[int, int] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.bases)

    def pairs(self) -> list[tuple[int, int, float]]:
        out = []
        for i, pm in enumerate(self.partners):
            for j, b in pm.items():
                out.append((i, j, b))
        return out


def detect_quadratic(dag: ex.ExprDag, node_id: int) -> QuadForm | None:
    """Write a sum as a quadratic over bases, or return None.

    Bases are registered from square and two-factor product terms; remaining
    terms must be constants, variables, or linear in a registered base. At
    least one square/bilinear term is required.
    """
    n = dag.node(node_id)
    if n.kind != ex.SUM:
        return None

    def square_base(cid: int) -> int | None:
        c = dag.node(cid)
        if c.kind == ex.POW and c.exponent == 2.0:
            return c.children[0]
        return None

    def bilinear_bases(cid: int) -> tuple[int, int, float] | None:
        c = dag.node(cid)
        if c.kind == ex.PROD and len(c.children) == 2:
            return c.children[0], c.children[1], c.const
        return None

    # first pass: register bases appearing squared or in products
    base_ids: dict[int, int] = {}

    def register(b: int) -> int:
        if b not in base_ids:
            base_ids[b] = len(base_ids)
        return base_ids[b]

    any_quad = False
    for coef, cid in zip(n.coeffs, n.children):
        b = square_base(cid)
        if b is not None:
            register(b)
            any_quad = True
            continue
        bl = bilinear_bases(cid)
        if bl is not None:
            register(bl[0])
            register(bl[1])
            any_quad = True
    if not any_quad:
        return None

    k = len(base_ids)
    a = [0.0] * k
    c = [0.0] * k
    partners: list[dict[int, float]] = [dict() for _ in range(k)]

    # second pass: classify every term
    for coef, cid in zip(n.coeffs, n.children):
        b = square_base(cid)
        if b is not None:
            a[base_ids[b]] += coef
            continue
        bl = bilinear_bases(cid)
        if bl is not None:
            i, j, factor = base_ids[bl[0]], base_ids[bl[1]], bl[2]
            if i == j:
                a[i] += coef * factor
                continue
            lo, hi = (i, j) if i < j else (j, i)
            partners[lo][hi] = partners[lo].get(hi, 0.0) + coef * factor
            continue
        if cid in base_ids:
            c[base_ids[cid]] += coef
            continue
        if dag.node(cid).kind == ex.VAR:
            # a lone variable joins as a linear-only base
            register(cid)
            a.append(0.0)
            c.append(coef)
            partners.append(dict())
            continue
        # compound term that is neither square, bilinear, nor a known base
        return None

    partners = [{j: b for j, b in pm.items() if b != 0.0} for pm in partners]
    bases = [None] * len(base_ids)
    for nid, idx in base_ids.items():
        bases[idx] = nid
    qf = QuadForm(bases=list(bases), a=a, c=c, partners=partners, const=n.const)
    qf.base_index = dict(base_ids)
    return qf


def quad_range(a: float, b: Interval, ybounds: Interval) -> Interval:
    """Exact hull of {a*y^2 + beta*y : y in ybounds, beta in b}."""
    if ybounds.empty or b.empty:
        return iv.EMPTY
    if b.lo == -INF or b.hi == INF:
        if ybounds.lo == 0.0 and ybounds.hi == 0.0:
            return iv.point(0.0)
        return iv.FULL
    lo, hi = INF, -INF
    for y in (ybounds.lo, ybounds.hi):
        if not math.isfinite(y):
            continue
        t = a * y * y
        lo = min(lo, t + min(b.lo * y, b.hi * y))
        hi = max(hi, t + max(b.lo * y, b.hi * y))
    # interior critical points y* = -beta/(2a) contribute -beta^2/(4a)
    if a != 0.0:
        for beta in (b.lo, b.hi):
            ystar = -beta / (2.0 * a)
            if ybounds.lo <= ystar <= ybounds.hi:
                v = -beta * beta / (4.0 * a)
                lo = min(lo, v)
                hi = max(hi, v)
    # contributions of unbounded ends
    for yend, toward_pos in ((ybounds.lo, False), (ybounds.hi, True)):
        if math.isfinite(yend):
            continue
        if a > 0.0:
            hi = INF
        elif a < 0.0:
            lo = -INF
        else:
            big = b.hi if toward_pos else -b.lo
            small = b.lo if toward_pos else -b.hi
            if big > 0.0:
                hi = INF
            if small < 0.0:
                lo = -INF
    if lo > hi:
        # q is identically zero on an unbounded domain (a == 0, b == [0, 0])
        return iv.point(0.0)
    return Interval(lo, hi)


def _quad_leq(alpha: float, beta: Interval, gamma: float, region: Interval) -> Interval:
    """Hull of {y in region : alpha*y^2 + min_{b in beta}(b*y) <= gamma}.

    ``region`` is sign-definite (used per half-line), so min over beta is a
    fixed endpoint of beta.
    """
    if region.empty:
        return iv.EMPTY
    b = beta.lo if region.lo >= 0.0 else beta.hi
    b = b * 1.0
    # solve alpha*y^2 + b*y - gamma <= 0 over region
    if alpha == 0.0:
        if b == 0.0:
            return region if gamma >= 0.0 else iv.EMPTY
        if not math.isfinite(b):
            return region
        bound = gamma / b
        half = Interval(-INF, bound) if b > 0.0 else Interval(bound, INF)
        return iv.intersect(region, half)
    if not math.isfinite(b):
        return region
    disc = b * b + 4.0 * alpha * gamma
    if alpha > 0.0:
        if disc < 0.0:
            return iv.EMPTY
        r = math.sqrt(disc)
        lo = (-b - r) / (2.0 * alpha)
        hi = (-b + r) / (2.0 * alpha)
        return iv.intersect(region, Interval(lo, hi))
    # alpha < 0: solution is outside the roots (or everything)
    if disc < 0.0:
        return region
    r = math.sqrt(disc)
    hi_root = (-b - r) / (2.0 * alpha)
    lo_root = (-b + r) / (2.0 * alpha)
    left = iv.intersect(region, Interval(-INF, lo_root))
    right = iv.intersect(region, Interval(hi_root, INF))
    return iv.hull(left, right)


def quad_reverse(a: float, b: Interval, ybounds: Interval, target: Interval) -> Interval:
    """Hull of {y in ybounds : exists beta in b with a*y^2 + beta*y in target}."""
    if ybounds.empty or target.empty or b.empty:
        return iv.EMPTY
    out = iv.EMPTY
    for region in (iv.intersect(ybounds, Interval(-INF, 0.0)), iv.intersect(ybounds, Interval(0.0, INF))):
        if region.empty:
            continue
        piece = region
        if target.hi < INF:
            piece = _quad_leq(a, b, target.hi, piece)
        if target.lo > -INF and not piece.empty:
            # a*y^2 + max(b*y) >= target.lo  <=>  -a*y^2 + min(-b*y) <= -target.lo
            piece = _quad_leq(-a, iv.neg(b), -target.lo, piece)
        out = iv.hull(out, piece)
    return out


def _term_range(q: QuadForm, i: int, box_of) -> Interval:
    """Range of q_i(y) = a_i y_i^2 + (c_i + sum_j b_ij [y_j]) y_i."""
    b = iv.point(q.c[i])
    for j, bij in q.partners[i].items():
        b = iv.add(b, iv.scale(box_of(j), bij))
    return quad_range(q.a[i], b, box_of(i))


def quad_forward(q: QuadForm, box_of) -> Interval:
    """Interval enclosure of q(y) as the sum of per-base quadratic hulls."""
    out = iv.point(q.const)
    for i in range(q.k):
        if q.a[i] == 0.0 and q.c[i] == 0.0 and not q.partners[i]:
            continue
        out = iv.add(out, _term_range(q, i, box_of))
        if out.empty:
            return out
    return out


def quad_prop(q: QuadForm, ybounds: list[Interval], qrange: Interval) -> list[Interval] | None:
    """Tighten base bounds from q(y) in qrange; None signals infeasibility.

    Forward: per-base hulls summed and intersected with qrange. Reverse: for
    each base i the admissible range of its own quadratic term and, through
    interval division by y_i, of its partner combination.
    """
    bounds = list(ybounds)
    box_of = lambda j: bounds[j]
    terms = [_term_range(q, i, box_of) for i in range(q.k)]
    total = iv.point(q.const)
    for t in terms:
        total = iv.add(total, t)
    if iv.intersect(total, qrange).empty:
        return None

    for i in range(q.k):
        rest = iv.point(q.const)
        for i2 in range(q.k):
            if i2 != i:
                rest = iv.add(rest, terms[i2])
        ti = iv.sub(iv.intersect(qrange, total), rest)
        if ti.empty:
            return None
        # own-range inversion: a_i y^2 + B y in ti
        b = iv.point(q.c[i])
        for j, bij in q.partners[i].items():
            b = iv.add(b, iv.scale(bounds[j], bij))
        newi = quad_reverse(q.a[i], b, bounds[i], ti)
        if newi.empty:
            return None
        bounds[i] = iv.intersect(bounds[i], newi)
        if bounds[i].empty:
            return None
        # partner bounds: sum_j b_ij y_j in ti/y_i - a_i y_i - c_i
        if q.partners[i]:
            rhs = iv.div(ti, bounds[i])
            rhs = iv.sub(rhs, iv.scale(bounds[i], q.a[i]))
            rhs = iv.shift(rhs, -q.c[i])
            for j in q.partners[i]:
                other = iv.point(0.0)
                for j2, b2 in q.partners[i].items():
                    if j2 != j:
                        other = iv.add(other, iv.scale(bounds[j2], b2))
                tj = iv.div(iv.sub(rhs, other), iv.point(q.partners[i][j]))
                newj = iv.intersect(bounds[j], tj)
                if newj.empty:
                    return None
                bounds[j] = newj
    return bounds


def hessian(q: QuadForm) -> np.ndarray:
    h = np.zeros((q.k, q.k))
    for i in range(q.k):
        h[i, i] = 2.0 * q.a[i]
        for j, b in q.partners[i].items():
            h[i, j] += b
            h[j, i] += b
    return h


def quad_curvature(q: QuadForm, tol: float = 1e-9) -> str:
    """Convexity of the quadratic via the eigenvalues of its Hessian."""
    if q.k > 16:
        return ex.UNKNOWN
    w, _ = eig_sym(hessian(q))
    if len(w) == 0:
        return ex.LINEAR
    if w[0] >= -tol and w[-1] <= tol:
        return ex.LINEAR
    if w[0] >= -tol:
        return ex.CONVEX
    if w[-1] <= tol:
        return ex.CONCAVE
    return ex.UNKNOWN


def quadratic_node_curvature(dag: ex.ExprDag, node_id: int, is_atom) -> str:
    """Curvature of a sum node via the quadratic eigenvalue check.

    Sound only when every base is an atom (variable or aux-replaced leaf):
    a quadratic convex in its bases need not be convex in deeper variables.
    """
    q = detect_quadratic(dag, node_id)
    if q is None:
        return ex.UNKNOWN
    for b in q.bases:
        if not is_atom(b):
            return ex.UNKNOWN
    return quad_curvature(q)
