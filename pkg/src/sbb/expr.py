"""Hash-consed expression DAG with evaluation, derivatives, and analysis.

Nodes live in an append-only arena; child ids are always smaller than parent
ids, so iterating the arena in index order is a topological walk. Structurally
identical subexpressions share a node id (hash consing), which is what makes
common-subexpression elimination and shared auxiliary variables work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from . import intervals as iv
from .intervals import Interval

VAL = "val"
VAR = "var"
SUM = "sum"
PROD = "prod"
POW = "pow"
SIGNPOWER = "signpower"
EXP = "exp"
LOG = "log"
ENTROPY = "entropy"
SIN = "sin"
COS = "cos"
ABS = "abs"

UNARY_KINDS = frozenset({POW, SIGNPOWER, EXP, LOG, ENTROPY, SIN, COS, ABS})

CONVEX = "convex"
CONCAVE = "concave"
LINEAR = "linear"
UNKNOWN = "unknown"

INCREASING = "increasing"
DECREASING = "decreasing"


class DomainError(ValueError):
    """Evaluation left the operator's domain (log of a negative, etc.)."""


@dataclass(frozen=True, slots=True)
class ExprNode:
    kind: str
    children: tuple[int, ...] = ()
    coeffs: tuple[float, ...] = ()  # sum only, aligned with children
    const: float = 0.0  # sum offset / product factor
    exponent: float = 0.0  # pow / signpower
    value: float = 0.0  # val
    var: int = -1  # var index

    def fingerprint(self) -> tuple:
        return (self.kind, self.children, self.coeffs, self.const, self.exponent, self.value, self.var)


class ExprDag:
    """Append-only arena of expression nodes with hash consing."""

    def __init__(self) -> None:
        self.nodes: list[ExprNode] = []
        self._index: dict[tuple, int] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, nid: int) -> ExprNode:
        return self.nodes[nid]

    def _insert(self, node: ExprNode) -> int:
        key = node.fingerprint()
        hit = self._index.get(key)
        if hit is not None:
            return hit
        nid = len(self.nodes)
        self.nodes.append(node)
        self._index[key] = nid
        return nid

    # -- constructors ------------------------------------------------------

    def val(self, value: float) -> int:
        return self._insert(ExprNode(VAL, value=float(value)))

    def var(self, index: int) -> int:
        return self._insert(ExprNode(VAR, var=int(index)))

    def sum(self, const: float, terms: Iterable[tuple[float, int]]) -> int:
        # canonical order for commutative children: by (child id, coefficient)
        pairs = sorted(((int(c), float(a)) for a, c in terms), key=lambda t: (t[0], t[1]))
        if not pairs:
            return self.val(const)
        children = tuple(c for c, _ in pairs)
        coeffs = tuple(a for _, a in pairs)
        return self._insert(ExprNode(SUM, children=children, coeffs=coeffs, const=float(const)))

    def prod(self, const: float, children: Iterable[int]) -> int:
        kids = tuple(sorted(int(c) for c in children))
        if not kids:
            return self.val(const)
        return self._insert(ExprNode(PROD, children=kids, const=float(const)))

    def pow(self, child: int, exponent: float) -> int:
        return self._insert(ExprNode(POW, children=(child,), exponent=float(exponent)))

    def signpower(self, child: int, exponent: float) -> int:
        if exponent <= 1.0:
            raise ValueError("signpower exponent must be > 1")
        return self._insert(ExprNode(SIGNPOWER, children=(child,), exponent=float(exponent)))

    def unary(self, kind: str, child: int) -> int:
        if kind not in (EXP, LOG, ENTROPY, SIN, COS, ABS):
            raise ValueError(f"not a unary operator: {kind}")
        return self._insert(ExprNode(kind, children=(child,)))

    # -- traversal ---------------------------------------------------------

    def reachable(self, root: int) -> list[int]:
        """Node ids reachable from root, ascending (= topological) order."""
        seen = {root}
        stack = [root]
        while stack:
            nid = stack.pop()
            for c in self.nodes[nid].children:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return sorted(seen)

    def variables(self, root: int) -> list[int]:
        """Sorted variable indices occurring under root."""
        out = set()
        for nid in self.reachable(root):
            n = self.nodes[nid]
            if n.kind == VAR:
                out.add(n.var)
        return sorted(out)


# ---------------------------------------------------------------------------
# evaluation


def _eval_node(n: ExprNode, vals: Callable[[int], float]) -> float:
    if n.kind == VAL:
        return n.value
    if n.kind == SUM:
        return n.const + sum(a * vals(c) for a, c in zip(n.coeffs, n.children))
    if n.kind == PROD:
        out = n.const
        for c in n.children:
            out *= vals(c)
        return out
    y = vals(n.children[0])
    if n.kind == POW:
        p = n.exponent
        if float(p).is_integer():
            if y == 0.0 and p < 0:
                raise DomainError("zero base with negative exponent")
            return float(y) ** int(p)
        if y < 0.0:
            raise DomainError(f"negative base {y} with fractional exponent {p}")
        if y == 0.0 and p < 0:
            raise DomainError("zero base with negative exponent")
        return float(y) ** p
    if n.kind == SIGNPOWER:
        return iv._signpow_scalar(y, n.exponent)
    if n.kind == EXP:
        return math.exp(min(y, 709.0))
    if n.kind == LOG:
        if y <= 0.0:
            raise DomainError(f"log of nonpositive value {y}")
        return math.log(y)
    if n.kind == ENTROPY:
        if y < 0.0:
            raise DomainError(f"entropy of negative value {y}")
        return 0.0 if y == 0.0 else -y * math.log(y)
    if n.kind == SIN:
        return math.sin(y)
    if n.kind == COS:
        return math.cos(y)
    if n.kind == ABS:
        return abs(y)
    raise AssertionError(n.kind)


def eval_point(
    dag: ExprDag,
    root: int,
    point: Mapping[int, float],
    leaf_values: Mapping[int, float] | None = None,
) -> float:
    """Evaluate the subexpression at a point (variable index -> value).

    ``leaf_values`` optionally overrides whole subexpressions by node id;
    overridden nodes are treated as leaves (used by the extended formulation,
    where annotated nodes stand for auxiliary variables).
    """
    cache: dict[int, float] = {}

    def value(nid: int) -> float:
        hit = cache.get(nid)
        if hit is not None:
            return hit
        if leaf_values is not None and nid != root and nid in leaf_values:
            v = leaf_values[nid]
        else:
            n = dag.nodes[nid]
            v = point[n.var] if n.kind == VAR else _eval_node(n, value)
        cache[nid] = v
        return v

    return value(root)


def _dpow(y: float, p: float) -> float:
    # derivative of y**p; fractional p below 1 at y = 0 is pinned to 0
    if float(p).is_integer():
        ip = int(p)
        if y == 0.0 and ip - 1 < 0:
            raise DomainError("zero base with negative exponent")
        return p * float(y) ** (ip - 1)
    if y == 0.0:
        return 0.0
    return p * y ** (p - 1.0)


def _unary_derivative(n: ExprNode, y: float) -> float:
    if n.kind == POW:
        return _dpow(y, n.exponent)
    if n.kind == SIGNPOWER:
        return n.exponent * abs(y) ** (n.exponent - 1.0)
    if n.kind == EXP:
        return math.exp(min(y, 709.0))
    if n.kind == LOG:
        if y <= 0.0:
            raise DomainError(f"log of nonpositive value {y}")
        return 1.0 / y
    if n.kind == ENTROPY:
        # defined as 0 at y = 0 so heuristic gradient steps stay finite
        return 0.0 if y == 0.0 else -(math.log(y) + 1.0)
    if n.kind == SIN:
        return math.cos(y)
    if n.kind == COS:
        return -math.sin(y)
    if n.kind == ABS:
        # subgradient 0 at the kink
        return 0.0 if y == 0.0 else math.copysign(1.0, y)
    raise AssertionError(n.kind)


def gradient(
    dag: ExprDag,
    root: int,
    point: Mapping[int, float],
    leaf_values: Mapping[int, float] | None = None,
) -> dict[int | tuple[str, int], float]:
    """Sparse gradient by forward accumulation.

    Keys are variable indices; when ``leaf_values`` marks nodes as leaves,
    their partials are reported under ``("node", nid)`` keys.
    """
    order = dag.reachable(root)
    vals: dict[int, float] = {}
    grads: dict[int, dict] = {}
    is_leaf = lambda nid: leaf_values is not None and nid != root and nid in leaf_values

    for nid in order:
        n = dag.nodes[nid]
        if is_leaf(nid):
            vals[nid] = leaf_values[nid]
            grads[nid] = {("node", nid): 1.0}
            continue
        if n.kind == VAL:
            vals[nid] = n.value
            grads[nid] = {}
        elif n.kind == VAR:
            vals[nid] = point[n.var]
            grads[nid] = {n.var: 1.0}
        elif n.kind == SUM:
            v = n.const
            g: dict = {}
            for a, c in zip(n.coeffs, n.children):
                v += a * vals[c]
                for k, d in grads[c].items():
                    g[k] = g.get(k, 0.0) + a * d
            vals[nid] = v
            grads[nid] = g
        elif n.kind == PROD:
            kids = n.children
            cv = [vals[c] for c in kids]
            # prefix/suffix products avoid dividing by zero factors
            pref = [1.0] * (len(kids) + 1)
            for i, v in enumerate(cv):
                pref[i + 1] = pref[i] * v
            suf = [1.0] * (len(kids) + 1)
            for i in range(len(kids) - 1, -1, -1):
                suf[i] = suf[i + 1] * cv[i]
            g = {}
            for i, c in enumerate(kids):
                partial = n.const * pref[i] * suf[i + 1]
                if partial != 0.0:
                    for k, d in grads[c].items():
                        g[k] = g.get(k, 0.0) + partial * d
            vals[nid] = n.const * pref[len(kids)]
            grads[nid] = g
        else:
            c = n.children[0]
            y = vals[c]
            vals[nid] = _eval_node(n, lambda cc: vals[cc])
            dy = _unary_derivative(n, y)
            grads[nid] = {k: dy * d for k, d in grads[c].items()} if dy != 0.0 else {}
    return grads[root]


# ---------------------------------------------------------------------------
# simplification


def simplify(dag: ExprDag, root: int, _memo: dict[int, int] | None = None) -> int:
    """Canonical form: flatten sums/products, fold constants, drop identities."""
    memo = _memo if _memo is not None else {}

    def rec(nid: int) -> int:
        hit = memo.get(nid)
        if hit is not None:
            return hit
        n = dag.nodes[nid]
        kids = [rec(c) for c in n.children]
        out = _rebuild(dag, n, kids, rec)
        memo[nid] = out
        return out

    return rec(root)


def _rebuild(dag: ExprDag, n: ExprNode, kids: list[int], rec) -> int:
    if n.kind in (VAL, VAR):
        return dag._insert(n)
    if n.kind == SUM:
        const = n.const
        terms: dict[int, float] = {}

        def absorb(coef: float, cid: int) -> None:
            nonlocal const
            c = dag.nodes[cid]
            if c.kind == VAL:
                const += coef * c.value
            elif c.kind == SUM:
                const += coef * c.const
                for a2, c2 in zip(c.coeffs, c.children):
                    absorb(coef * a2, c2)
            elif c.kind == PROD and len(c.children) == 1:
                absorb(coef * c.const, c.children[0])
            else:
                terms[cid] = terms.get(cid, 0.0) + coef

        for a, c in zip(n.coeffs, kids):
            absorb(a, c)
        pairs = [(a, c) for c, a in terms.items() if a != 0.0]
        if not pairs:
            return dag.val(const)
        if len(pairs) == 1 and const == 0.0 and pairs[0][0] == 1.0:
            return pairs[0][1]
        return dag.sum(const, pairs)
    if n.kind == PROD:
        factor = n.const
        flat: list[int] = []

        def absorb_p(cid: int) -> None:
            nonlocal factor
            c = dag.nodes[cid]
            if c.kind == VAL:
                factor *= c.value
            elif c.kind == PROD:
                factor *= c.const
                for c2 in c.children:
                    absorb_p(c2)
            else:
                flat.append(cid)

        for c in kids:
            absorb_p(c)
        if factor == 0.0 or not flat:
            return dag.val(factor)
        # group repeated factors into integer powers
        counts: dict[int, int] = {}
        for c in flat:
            counts[c] = counts.get(c, 0) + 1
        parts = [c if k == 1 else rec(dag.pow(c, float(k))) for c, k in sorted(counts.items())]
        if len(parts) == 1 and factor == 1.0:
            return parts[0]
        return dag.prod(factor, parts)
    if n.kind == POW:
        (c,) = kids
        p = n.exponent
        cn = dag.nodes[c]
        if p == 1.0:
            return c
        if p == 0.0:
            return dag.val(1.0)
        if cn.kind == VAL:
            try:
                return dag.val(_eval_node(ExprNode(POW, children=(c,), exponent=p), lambda _: cn.value))
            except DomainError:
                pass
        if cn.kind == POW and float(p).is_integer() and float(cn.exponent).is_integer():
            return rec(dag.pow(cn.children[0], cn.exponent * p))
        return dag.pow(c, p)
    if n.kind == SIGNPOWER:
        (c,) = kids
        p = n.exponent
        cn = dag.nodes[c]
        if cn.kind == VAL:
            return dag.val(iv._signpow_scalar(cn.value, p))
        if float(p).is_integer() and int(p) % 2 == 1:
            # odd integer: sign(y)|y|^p == y^p
            return rec(dag.pow(c, p))
        return dag.signpower(c, p)
    # remaining unaries
    (c,) = kids
    cn = dag.nodes[c]
    if cn.kind == VAL:
        try:
            return dag.val(_eval_node(ExprNode(n.kind, children=(c,)), lambda _: cn.value))
        except DomainError:
            pass
    return dag._insert(ExprNode(n.kind, children=(c,)))


# ---------------------------------------------------------------------------
# interval evaluation (forward activity)

_ROUND_SLACK = 1e-12


def _round_out(a: Interval) -> Interval:
    if a.empty:
        return a
    lo, hi = a.lo, a.hi
    if math.isfinite(lo):
        lo -= _ROUND_SLACK * max(1.0, abs(lo))
    if math.isfinite(hi):
        hi += _ROUND_SLACK * max(1.0, abs(hi))
    return Interval(lo, hi)


def node_interval(n: ExprNode, child_ivs: list[Interval]) -> Interval:
    if n.kind == VAL:
        return iv.point(n.value)
    if n.kind == SUM:
        out = iv.point(n.const)
        for a, ci in zip(n.coeffs, child_ivs):
            out = iv.add(out, iv.scale(ci, a))
        return out
    if n.kind == PROD:
        out = iv.point(n.const)
        for ci in child_ivs:
            out = iv.mul(out, ci)
        return out
    (y,) = child_ivs
    if n.kind == POW:
        return iv.pow_(y, n.exponent)
    if n.kind == SIGNPOWER:
        return iv.signpower(y, n.exponent)
    if n.kind == EXP:
        return iv.exp(y)
    if n.kind == LOG:
        return iv.log(y)
    if n.kind == ENTROPY:
        return iv.entropy(y)
    if n.kind == SIN:
        return iv.sin(y)
    if n.kind == COS:
        return iv.cos(y)
    if n.kind == ABS:
        return iv.absval(y)
    raise AssertionError(n.kind)


def interval_eval(
    dag: ExprDag,
    root: int,
    box,
    leaf_ivs: Mapping[int, Interval] | None = None,
) -> dict[int, Interval]:
    """Activity intervals for every node reachable from root.

    ``box`` maps variable index -> Interval (anything with __getitem__).
    Each node's interval is outward-rounded by a relative slack. An empty
    interval marks an empty domain intersection.
    """
    acts: dict[int, Interval] = {}
    for nid in dag.reachable(root):
        if leaf_ivs is not None and nid != root and nid in leaf_ivs:
            acts[nid] = leaf_ivs[nid]
            continue
        n = dag.nodes[nid]
        if n.kind == VAR:
            acts[nid] = box[n.var]
            continue
        kid_ivs = [acts[c] for c in n.children]
        if any(k.empty for k in kid_ivs):
            acts[nid] = iv.EMPTY
        else:
            acts[nid] = _round_out(node_interval(n, kid_ivs))
    return acts


def ieval(dag: ExprDag, root: int, box, leaf_ivs=None) -> Interval:
    return interval_eval(dag, root, box, leaf_ivs)[root]


# ---------------------------------------------------------------------------
# curvature and monotonicity


def _flip(c: str) -> str:
    if c == CONVEX:
        return CONCAVE
    if c == CONCAVE:
        return CONVEX
    return c


def _compose(outer_cvx: str, outer_mono: str | None, inner: str) -> str:
    """Curvature of f(g) from f's curvature/monotonicity on g's range."""
    if inner == LINEAR:
        return outer_cvx
    if outer_cvx == LINEAR:
        if outer_mono == INCREASING:
            return inner
        if outer_mono == DECREASING:
            return _flip(inner)
        return UNKNOWN
    if outer_cvx == CONVEX:
        if outer_mono == INCREASING and inner == CONVEX:
            return CONVEX
        if outer_mono == DECREASING and inner == CONCAVE:
            return CONVEX
        return UNKNOWN
    if outer_cvx == CONCAVE:
        if outer_mono == INCREASING and inner == CONCAVE:
            return CONCAVE
        if outer_mono == DECREASING and inner == CONVEX:
            return CONCAVE
        return UNKNOWN
    return UNKNOWN


def _unary_shape(n: ExprNode, y: Interval) -> tuple[str, str | None]:
    """(curvature, monotonicity) of the operator itself on child range y."""
    k = n.kind
    if k == POW:
        p = n.exponent
        if p == 0.0:
            return LINEAR, INCREASING
        if p == 1.0:
            return LINEAR, INCREASING
        p_int = float(p).is_integer()
        nonneg = y.lo >= 0.0
        nonpos = y.hi <= 0.0
        if p_int and p > 0 and int(p) % 2 == 0:
            mono = INCREASING if nonneg else (DECREASING if nonpos else None)
            return CONVEX, mono
        if p_int and p > 1 and int(p) % 2 == 1:
            if nonneg:
                return CONVEX, INCREASING
            if nonpos:
                return CONCAVE, INCREASING
            return UNKNOWN, INCREASING
        if not p_int and p > 1:
            return CONVEX, INCREASING
        if not p_int and 0 < p < 1:
            return CONCAVE, INCREASING
        # negative exponents need a sign-definite domain
        if p < 0:
            if y.lo > 0.0:
                return CONVEX, DECREASING
            if y.hi < 0.0:
                if p_int and int(p) % 2 == 1:
                    return CONCAVE, DECREASING
                return CONVEX, INCREASING  # even negative power on y < 0
            return UNKNOWN, None
        return UNKNOWN, None
    if k == SIGNPOWER:
        if y.lo >= 0.0:
            return CONVEX, INCREASING
        if y.hi <= 0.0:
            return CONCAVE, INCREASING
        return UNKNOWN, INCREASING
    if k == EXP:
        return CONVEX, INCREASING
    if k == LOG:
        return CONCAVE, INCREASING
    if k == ENTROPY:
        if y.hi <= 1.0 / math.e:
            mono = INCREASING
        elif y.lo >= 1.0 / math.e:
            mono = DECREASING
        else:
            mono = None
        return CONCAVE, mono
    if k == ABS:
        if y.lo >= 0.0:
            return LINEAR, INCREASING
        if y.hi <= 0.0:
            return LINEAR, DECREASING
        return CONVEX, None
    if k in (SIN, COS):
        # trig estimators are interval constants; stay out of convexity claims
        return UNKNOWN, None
    raise AssertionError(k)


def curvature(dag: ExprDag, root: int, box, leaf_ivs=None, acts=None) -> str:
    """Sound curvature of the subexpression on the box.

    Composition rules per operator, plus an eigenvalue check for quadratic
    forms handled separately in the quadratic module. ``unknown`` is the safe
    fallback.
    """
    if acts is None:
        acts = interval_eval(dag, root, box, leaf_ivs)
    memo: dict[int, str] = {}

    def rec(nid: int) -> str:
        hit = memo.get(nid)
        if hit is not None:
            return hit
        if leaf_ivs is not None and nid != root and nid in leaf_ivs:
            memo[nid] = LINEAR
            return LINEAR
        n = dag.nodes[nid]
        out: str
        if n.kind in (VAL, VAR):
            out = LINEAR
        elif n.kind == SUM:
            out = LINEAR
            for a, c in zip(n.coeffs, n.children):
                cc = rec(c)
                if a < 0.0:
                    cc = _flip(cc)
                if out == LINEAR:
                    out = cc
                elif cc == LINEAR or cc == out:
                    pass
                else:
                    out = UNKNOWN
                if out == UNKNOWN:
                    break
            if out == UNKNOWN:
                # pure quadratic sums get a Hessian eigenvalue check
                from .quadform import quadratic_node_curvature

                is_atom = lambda b: dag.nodes[b].kind == VAR or (
                    leaf_ivs is not None and b in leaf_ivs
                )
                out = quadratic_node_curvature(dag, nid, is_atom)
        elif n.kind == PROD:
            if len(n.children) == 1:
                cc = rec(n.children[0])
                out = cc if n.const > 0.0 else _flip(cc) if n.const < 0.0 else LINEAR
            else:
                out = UNKNOWN
        else:
            c = n.children[0]
            y = acts.get(c, iv.FULL)
            shape, mono = _unary_shape(n, y)
            out = _compose(shape, mono, rec(c))
        memo[nid] = out
        return out

    return rec(root)


def partial_interval(dag: ExprDag, parent: int, child_slot: int, acts) -> Interval:
    """Interval enclosure of d(parent)/d(child at slot) given node activities."""
    n = dag.nodes[parent]
    if n.kind == SUM:
        return iv.point(n.coeffs[child_slot])
    if n.kind == PROD:
        out = iv.point(n.const)
        for i, c in enumerate(n.children):
            if i != child_slot:
                out = iv.mul(out, acts[c])
        return out
    y = acts[n.children[0]]
    if n.kind == POW:
        return iv.scale(iv.pow_(y, n.exponent - 1.0), n.exponent)
    if n.kind == SIGNPOWER:
        return iv.scale(iv.pow_(iv.absval(y), n.exponent - 1.0), n.exponent)
    if n.kind == EXP:
        return iv.exp(y)
    if n.kind == LOG:
        return iv.div(iv.point(1.0), y)
    if n.kind == ENTROPY:
        lg = iv.log(intersect_pos(y))
        return iv.neg(iv.shift(lg, 1.0))
    if n.kind == SIN:
        return iv.cos(y)
    if n.kind == COS:
        return iv.neg(iv.sin(y))
    if n.kind == ABS:
        if y.lo >= 0.0:
            return iv.point(1.0)
        if y.hi <= 0.0:
            return iv.point(-1.0)
        return Interval(-1.0, 1.0)
    raise AssertionError(n.kind)


def intersect_pos(y: Interval) -> Interval:
    out = iv.intersect(y, Interval(1e-300, iv.INF))
    return out if not out.empty else Interval(1e-300, 1e-300)


def monotonicity(dag: ExprDag, parent: int, child_slot: int, box, leaf_ivs=None, acts=None) -> str:
    """Sound direction of the parent in its child over the box."""
    if acts is None:
        acts = interval_eval(dag, parent, box, leaf_ivs)
    d = partial_interval(dag, parent, child_slot, acts)
    if d.empty:
        return UNKNOWN
    if d.lo >= 0.0:
        return INCREASING
    if d.hi <= 0.0:
        return DECREASING
    return UNKNOWN


def is_integral(dag: ExprDag, root: int, integrality: Mapping[int, bool]) -> bool:
    """True only if the expression provably takes integer values whenever
    integer-flagged variables do."""
    memo: dict[int, bool] = {}

    def rec(nid: int) -> bool:
        hit = memo.get(nid)
        if hit is not None:
            return hit
        n = dag.nodes[nid]
        if n.kind == VAL:
            out = float(n.value).is_integer()
        elif n.kind == VAR:
            out = bool(integrality.get(n.var, False))
        elif n.kind == SUM:
            out = float(n.const).is_integer() and all(
                float(a).is_integer() and rec(c) for a, c in zip(n.coeffs, n.children)
            )
        elif n.kind == PROD:
            out = float(n.const).is_integer() and all(rec(c) for c in n.children)
        elif n.kind == POW:
            out = float(n.exponent).is_integer() and n.exponent >= 0.0 and rec(n.children[0])
        elif n.kind == SIGNPOWER:
            out = float(n.exponent).is_integer() and rec(n.children[0])
        elif n.kind == ABS:
            out = rec(n.children[0])
        else:
            out = False
        memo[nid] = out
        return out

    return rec(root)
