"""Problem representation: variables, linear rows, nonlinear constraints.

The objective is linear by construction; a nonlinear objective is moved into
a constraint at load time (min f(x) becomes min t with f(x) - t <= 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .box import Box
from .expr import ExprDag
from .intervals import INF, Interval

DEFAULT_INF_BOUND = 1e12


@dataclass
class Variable:
    name: str
    lb: float = -INF
    ub: float = INF
    is_int: bool = False
    synthetic_lb: bool = False  # bound substituted for a missing one at load
    synthetic_ub: bool = False


@dataclass
class LinCons:
    name: str
    coefs: dict[int, float]
    lb: float = -INF
    ub: float = INF


@dataclass
class NlCons:
    name: str
    root: int
    lb: float = -INF
    ub: float = INF


@dataclass
class Problem:
    dag: ExprDag = field(default_factory=ExprDag)
    variables: list[Variable] = field(default_factory=list)
    obj: dict[int, float] = field(default_factory=dict)
    obj_const: float = 0.0
    obj_sense: str = "min"  # results reported in this sense; solver minimizes
    lincons: list[LinCons] = field(default_factory=list)
    nlcons: list[NlCons] = field(default_factory=list)
    name: str = "problem"

    @property
    def n(self) -> int:
        return len(self.variables)

    def add_var(self, name: str, lb: float = -INF, ub: float = INF, is_int: bool = False) -> int:
        self.variables.append(Variable(name, lb, ub, is_int))
        return len(self.variables) - 1

    def var_index(self, name: str) -> int:
        for j, v in enumerate(self.variables):
            if v.name == name:
                return j
        raise KeyError(name)

    def integrality(self) -> dict[int, bool]:
        return {j: v.is_int for j, v in enumerate(self.variables)}

    def root_box(self) -> Box:
        lo = np.array([v.lb for v in self.variables], dtype=float)
        hi = np.array([v.ub for v in self.variables], dtype=float)
        return Box(lo, hi)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n)
        for j, cj in self.obj.items():
            c[j] = cj
        return c

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(cj * x[j] for j, cj in self.obj.items()) + self.obj_const)

    def replace_missing_bounds(self, inf_bound: float = DEFAULT_INF_BOUND) -> int:
        """Substitute +-inf_bound for missing variable bounds; returns count."""
        count = 0
        for v in self.variables:
            if v.lb == -INF:
                v.lb = -inf_bound
                v.synthetic_lb = True
                count += 1
            if v.ub == INF:
                v.ub = inf_bound
                v.synthetic_ub = True
                count += 1
        return count

    def validate(self) -> None:
        for v in self.variables:
            if v.lb > v.ub:
                raise ModelError(f"variable {v.name} has crossed bounds")
        for c in self.lincons + self.nlcons:
            if c.lb > c.ub:
                raise ModelError(f"constraint {c.name} has crossed sides")
        for c in self.nlcons:
            for j in self.dag.variables(c.root):
                if j >= self.n:
                    raise ModelError(f"constraint {c.name} uses unknown variable {j}")
        self._check_fractional_powers()

    def _check_fractional_powers(self) -> None:
        """Fractional powers require a provably nonnegative argument."""
        box = self.root_box()
        for c in self.nlcons:
            acts = ex.interval_eval(self.dag, c.root, box)
            for nid in self.dag.reachable(c.root):
                n = self.dag.node(nid)
                if n.kind == ex.POW and not float(n.exponent).is_integer():
                    child = acts[n.children[0]]
                    if not child.empty and child.lo < 0.0:
                        raise ModelError(
                            f"constraint {c.name}: fractional power of a possibly negative "
                            f"argument (range [{child.lo:g}, {child.hi:g}])"
                        )


class ModelError(ValueError):
    """The model violates a structural requirement."""


def move_nonlinear_objective(problem: Problem, root: int, sense: str) -> None:
    """Install min/max of a nonlinear expression as min t, f(x) <= t."""
    dag = problem.dag
    if sense == "max":
        root = dag.sum(0.0, [(-1.0, root)])
    t = problem.add_var("_obj", -INF, INF)
    shifted = dag.sum(0.0, [(1.0, root), (-1.0, dag.var(t))])
    problem.nlcons.append(NlCons("_objcons", shifted, -INF, 0.0))
    problem.obj = {t: 1.0}
    problem.obj_sense = sense


def linear_expr_coefs(dag: ExprDag, root: int) -> tuple[dict[int, float], float] | None:
    """Affine decomposition (coefs, const) of an expression, or None."""
    n = dag.node(root)
    if n.kind == ex.VAL:
        return {}, n.value
    if n.kind == ex.VAR:
        return {n.var: 1.0}, 0.0
    if n.kind == ex.SUM:
        coefs: dict[int, float] = {}
        const = n.const
        for a, c in zip(n.coeffs, n.children):
            sub = linear_expr_coefs(dag, c)
            if sub is None:
                return None
            sc, scst = sub
            const += a * scst
            for j, v in sc.items():
                coefs[j] = coefs.get(j, 0.0) + a * v
        return coefs, const
    if n.kind == ex.PROD and len(n.children) == 1:
        sub = linear_expr_coefs(dag, n.children[0])
        if sub is None:
            return None
        sc, scst = sub
        return {j: n.const * v for j, v in sc.items()}, n.const * scst
    return None


def constraint_violation(problem: Problem, cons, x: np.ndarray) -> float:
    """Absolute violation of one constraint at x; inf outside the domain."""
    if isinstance(cons, LinCons):
        val = sum(a * x[j] for j, a in cons.coefs.items())
    else:
        try:
            val = ex.eval_point(problem.dag, cons.root, x)
        except ex.DomainError:
            return INF
    viol = 0.0
    if cons.lb != -INF:
        viol = max(viol, cons.lb - val)
    if cons.ub != INF:
        viol = max(viol, val - cons.ub)
    return viol


def max_violation(problem: Problem, x: np.ndarray) -> float:
    out = 0.0
    for c in problem.lincons:
        out = max(out, constraint_violation(problem, c, x))
    for c in problem.nlcons:
        out = max(out, constraint_violation(problem, c, x))
    if math.isinf(out):
        return out
    for j, v in enumerate(problem.variables):
        out = max(out, v.lb - x[j], x[j] - v.ub)
    return out
