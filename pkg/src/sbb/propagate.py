"""Interval constraint propagation: forward activity plus reverse tightening.

Forward evaluation overestimates the range of a constraint function on the
current box; reverse propagation overestimates the preimage of the admissible
range and intersects it with the box. Tightenings are only committed when the
relative width reduction passes a threshold (or an infinite bound becomes
finite), which keeps fixpoint loops from churning on marginal changes.
"""

from __future__ import annotations

import math

from . import expr as ex
from . import intervals as iv
from . import quadform as qf
from .box import Box, apply_ceiling, round_integer
from .expr import ExprDag
from .intervals import INF, Interval
from .problem import LinCons, Problem

# relative width reduction needed before a bound change is applied
TIGHTEN_THRESHOLD = 0.05
MAX_FBBT_ROUNDS = 10

INFEASIBLE = "infeasible"


def accept_tightening(old: Interval, new: Interval) -> bool:
    """Apply a change only if it shrinks width by >= 5% or makes a bound finite."""
    if new.empty:
        return True
    if (old.lo == -INF and new.lo != -INF) or (old.hi == INF and new.hi != INF):
        return True
    if not old.is_finite():
        return False
    if old.width() <= 0.0:
        return False
    return (old.width() - new.width()) / old.width() >= TIGHTEN_THRESHOLD


def _reverse_node(dag: ExprDag, nid: int, target: Interval, acts: dict[int, Interval]) -> list[tuple[int, Interval]]:
    """Admissible child intervals for a node value restricted to target."""
    n = dag.node(nid)
    out: list[tuple[int, Interval]] = []
    if n.kind in (ex.VAL, ex.VAR):
        return out
    if n.kind == ex.SUM:
        # child_j subseteq (target - const - sum_{k != j} a_k I_k) / a_j
        rest = [iv.scale(acts[c], a) for a, c in zip(n.coeffs, n.children)]
        others = _leave_one_out_sums(rest, iv.point(n.const))
        for idx, (a, c) in enumerate(zip(n.coeffs, n.children)):
            if a == 0.0:
                continue
            tc = iv.scale(iv.sub(target, others[idx]), 1.0 / a)
            out.append((c, tc))
        return out
    if n.kind == ex.PROD:
        all_prod = iv.point(n.const)
        for c in n.children:
            all_prod = iv.mul(all_prod, acts[c])
        for idx, c in enumerate(n.children):
            others = iv.point(n.const)
            for k, c2 in enumerate(n.children):
                if k != idx:
                    others = iv.mul(others, acts[c2])
            out.append((c, iv.div(target, others)))
        return out
    c = n.children[0]
    y = acts[c]
    if n.kind == ex.POW:
        p = n.exponent
        t = target
        if float(p).is_integer():
            ip = int(p)
            if ip % 2 == 0:
                # |y| in t^(1/p)
                mag = iv.pow_(iv.intersect(t, Interval(0.0, INF)), 1.0 / p)
                if mag.empty:
                    out.append((c, iv.EMPTY))
                    return out
                sym = Interval(-mag.hi, mag.hi)
                if y.lo >= 0.0:
                    sym = Interval(mag.lo, mag.hi)
                elif y.hi <= 0.0:
                    sym = Interval(-mag.hi, -mag.lo)
                out.append((c, sym))
                return out
            # odd: monotone; handle sign branches for negative p
            if p > 0:
                lo = _odd_root(t.lo, p)
                hi = _odd_root(t.hi, p)
                out.append((c, Interval(lo, hi)))
                return out
            inv = iv.EMPTY
            if t.hi > 0.0 or t.lo > 0.0:
                pos = iv.intersect(t, Interval(1e-300, INF))
                if not pos.empty:
                    inv = iv.hull(inv, iv.pow_(pos, 1.0 / p))
            if t.lo < 0.0:
                negpart = iv.intersect(t, Interval(-INF, -1e-300))
                if not negpart.empty:
                    inv = iv.hull(inv, iv.neg(iv.pow_(iv.neg(negpart), 1.0 / p)))
            out.append((c, inv if not inv.empty else iv.EMPTY))
            return out
        # fractional p: domain y >= 0, monotone
        t = iv.intersect(t, iv.pow_(Interval(0.0, INF), p))
        if t.empty:
            out.append((c, iv.EMPTY))
            return out
        out.append((c, iv.pow_(t, 1.0 / p)))
        return out
    if n.kind == ex.SIGNPOWER:
        p = n.exponent
        lo = iv._signpow_scalar(target.lo, 1.0 / p)
        hi = iv._signpow_scalar(target.hi, 1.0 / p)
        out.append((c, Interval(lo, hi)))
        return out
    if n.kind == ex.EXP:
        t = iv.intersect(target, Interval(0.0, INF))
        if t.empty or t.hi <= 0.0:
            out.append((c, iv.EMPTY))
            return out
        out.append((c, iv.log(t)))
        return out
    if n.kind == ex.LOG:
        out.append((c, iv.exp(target)))
        return out
    if n.kind == ex.ENTROPY:
        out.append((c, _entropy_reverse(target, y)))
        return out
    if n.kind == ex.ABS:
        t = iv.intersect(target, Interval(0.0, INF))
        if t.empty:
            out.append((c, iv.EMPTY))
            return out
        sym = Interval(-t.hi, t.hi)
        if y.lo >= 0.0:
            sym = Interval(t.lo, t.hi)
        elif y.hi <= 0.0:
            sym = Interval(-t.hi, -t.lo)
        out.append((c, sym))
        return out
    # sin/cos: multi-branch inverse; fall back to no tightening (sound)
    return out


def _leave_one_out_sums(parts: list[Interval], base: Interval) -> list[Interval]:
    """others[i] = base + sum of parts except parts[i] (prefix/suffix sums)."""
    k = len(parts)
    pref = [base] * (k + 1)
    for i, p in enumerate(parts):
        pref[i + 1] = iv.add(pref[i], p)
    suf = [iv.point(0.0)] * (k + 1)
    for i in range(k - 1, -1, -1):
        suf[i] = iv.add(suf[i + 1], parts[i])
    return [iv.add(pref[i], suf[i + 1]) for i in range(k)]


def _odd_root(v: float, p: float) -> float:
    if v == INF:
        return INF
    if v == -INF:
        return -INF
    return math.copysign(abs(v) ** (1.0 / p), v)


def _invert_entropy_dec(v: float) -> float:
    """The y >= 1/e with -y*log(y) = v, for v <= 1/e."""
    emax = 1.0 / math.e
    if v >= emax:
        return emax
    ub = 2.0
    while iv._entropy_scalar(ub) > v:
        ub *= 2.0
        if ub > 1e300:
            return INF
    return iv.invert_monotone(iv._entropy_scalar, emax, ub, v, increasing=False)


def _entropy_reverse(target: Interval, y: Interval) -> Interval:
    """Hull of the preimage of -y*log(y) on target, intersected with y >= 0.

    Bisection endpoints get a small outward buffer so the result stays sound.
    """
    dom = iv.intersect(y, Interval(0.0, INF))
    if dom.empty:
        return iv.EMPTY
    emax = 1.0 / math.e
    t = iv.intersect(target, Interval(-INF, emax))
    if t.empty:
        return iv.EMPTY
    hi_y = INF if t.lo == -INF else _invert_entropy_dec(t.lo)
    if t.hi >= 0.0:
        lo_y = 0.0
        if t.lo > 0.0:
            lo_y = iv.invert_monotone(iv._entropy_scalar, 0.0, emax, t.lo, increasing=True)
    else:
        lo_y = _invert_entropy_dec(t.hi)
    buf = 1e-9
    lo_y = max(0.0, lo_y - buf * max(1.0, abs(lo_y)))
    if hi_y != INF:
        hi_y = hi_y + buf * max(1.0, abs(hi_y))
    return iv.intersect(dom, Interval(lo_y, hi_y))


def reverse_prop(
    dag: ExprDag,
    root: int,
    target: Interval,
    box: Box,
    integrality: dict[int, bool] | None = None,
    leaf_ivs=None,
) -> Box | str:
    """Tighten box to an enclosure of {x in box : f(x) in target}.

    Returns INFEASIBLE only when no such x exists. Shared nodes accumulate
    intersected targets in one reverse sweep (descending id order).
    """
    acts = ex.interval_eval(dag, root, box, leaf_ivs)
    if acts[root].empty:
        return INFEASIBLE
    rt = iv.intersect(acts[root], target)
    if rt.empty:
        return INFEASIBLE
    targets: dict[int, Interval] = {root: rt}
    newbox = box.copy()
    for nid in sorted(acts.keys(), reverse=True):
        t = targets.get(nid)
        if t is None:
            continue
        if t.empty:
            return INFEASIBLE
        if leaf_ivs is not None and nid != root and nid in leaf_ivs:
            continue
        n = dag.node(nid)
        if n.kind == ex.VAR:
            cur = newbox[n.var]
            tightened = iv.intersect(cur, apply_ceiling(t))
            if integrality and integrality.get(n.var, False):
                tightened = round_integer(tightened)
            if tightened.empty:
                return INFEASIBLE
            newbox.set(n.var, tightened)
            continue
        for child, ct in _reverse_node(dag, nid, t, acts):
            ct = iv.intersect(ct, acts[child])
            prev = targets.get(child)
            targets[child] = ct if prev is None else iv.intersect(prev, ct)
    return newbox


def propagate_linear(cons: LinCons, box: Box, integrality=None) -> Box | str:
    """One forward/reverse pass on a linear row."""
    items = list(cons.coefs.items())
    parts = [iv.scale(box[j], a) for j, a in items]
    total = iv.point(0.0)
    for p in parts:
        total = iv.add(total, p)
    rng = Interval(cons.lb, cons.ub)
    if iv.intersect(total, rng).empty:
        return INFEASIBLE
    others = _leave_one_out_sums(parts, iv.point(0.0))
    newbox = box.copy()
    for idx, (j, a) in enumerate(items):
        if a == 0.0:
            continue
        tj = iv.scale(iv.sub(rng, others[idx]), 1.0 / a)
        cur = newbox[j]
        cand = iv.intersect(cur, apply_ceiling(tj))
        if integrality and integrality.get(j, False):
            cand = round_integer(cand)
        if cand.empty:
            return INFEASIBLE
        if accept_tightening(cur, cand):
            newbox.set(j, cand)
    return newbox


def fbbt_constraint(problem: Problem, cons, box: Box) -> Box | str:
    """One forward + one reverse pass for a single constraint.

    Variable tightenings pass through the acceptance threshold; integer
    variables are rounded inward.
    """
    integrality = problem.integrality()
    if isinstance(cons, LinCons):
        return propagate_linear(cons, box, integrality)
    q = qf.detect_quadratic(problem.dag, cons.root)
    if q is not None and all(problem.dag.node(b).kind == ex.VAR for b in q.bases):
        return _fbbt_quadratic(problem, q, cons, box, integrality)
    result = reverse_prop(problem.dag, cons.root, Interval(cons.lb, cons.ub), box, integrality)
    if result == INFEASIBLE:
        return INFEASIBLE
    return _thresholded(box, result, integrality)


def _thresholded(old: Box, new: Box, integrality) -> Box:
    out = old.copy()
    for j in range(len(old)):
        cur = old[j]
        cand = new[j]
        if integrality.get(j, False):
            cand = round_integer(cand)
        if cand.empty or accept_tightening(cur, cand):
            out.set(j, cand)
    return out


def _fbbt_quadratic(problem: Problem, q, cons, box: Box, integrality) -> Box | str:
    ybounds = [box[problem.dag.node(b).var] for b in q.bases]
    res = qf.quad_prop(q, ybounds, Interval(cons.lb, cons.ub))
    if res is None:
        return INFEASIBLE
    newbox = box.copy()
    for i, b in enumerate(q.bases):
        j = problem.dag.node(b).var
        cur = newbox[j]
        cand = iv.intersect(cur, apply_ceiling(res[i]))
        if integrality.get(j, False):
            cand = round_integer(cand)
        if cand.empty:
            return INFEASIBLE
        if accept_tightening(cur, cand):
            newbox.set(j, cand)
    return newbox


def fbbt_sweep(problem: Problem, box: Box, max_rounds: int = MAX_FBBT_ROUNDS) -> Box | str:
    """Fixpoint loop over all constraints, capped at max_rounds."""
    cur = box
    for _ in range(max_rounds):
        changed = False
        for cons in list(problem.lincons) + list(problem.nlcons):
            res = fbbt_constraint(problem, cons, cur)
            if res == INFEASIBLE:
                return INFEASIBLE
            assert isinstance(res, Box)
            if not (res.lo == cur.lo).all() or not (res.hi == cur.hi).all():
                changed = True
            cur = res
        if not changed:
            break
    return cur
