"""Evaluation of rule conditions over ground bindings.

Shared by the runtime stepper and the brute-force ground-instance checker.
"""

from __future__ import annotations

from decimal import Decimal
from typing import Optional

from .errors import ArithmeticOnNonNumber
from .terms import (Atom, Num, Struct, Substitution, Term, Var, is_ground,
                    list_items, list_term, substitute)


def eval_expr(t: Term, theta: Substitution) -> Term:
    """Evaluate an arithmetic expression to a ground term.

    Non-arithmetic terms evaluate to themselves (after substitution); the
    operators +, -, * require numeric operands.
    """
    t = substitute(t, theta)
    return _eval(t)


def _eval(t: Term) -> Term:
    if isinstance(t, Struct) and t.functor in ("+", "-", "*") and len(t.args) == 2:
        a, b = _eval(t.args[0]), _eval(t.args[1])
        if not (isinstance(a, Num) and isinstance(b, Num)):
            raise ArithmeticOnNonNumber(f"{t.functor} applied to non-numbers")
        if t.functor == "+":
            return Num(a.value + b.value)
        if t.functor == "-":
            return Num(a.value - b.value)
        return Num(a.value * b.value)
    return t


def _as_num(t: Term) -> Decimal:
    if not isinstance(t, Num):
        raise ArithmeticOnNonNumber(f"expected a number, got {t!r}")
    return t.value


def eval_compare(op: str, lhs: Term, rhs: Term) -> bool:
    if op == "=":
        return lhs == rhs
    if op == "=\\=":
        return lhs != rhs
    a, b = _as_num(lhs), _as_num(rhs)
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "<":
        return a < b
    if op == "=<":
        return a <= b
    raise ValueError(f"unknown comparison {op!r}")


def apply_list_op(op: str, elem: Term, lst: Term) -> Optional[Term]:
    """append_elem adds at the end; remove_elem drops the first occurrence.
    Returns None when the operation does not apply (improper list, absent
    element)."""
    items, tail = list_items(lst)
    if tail != Atom("[]"):
        return None
    if op == "append_elem":
        return list_term(items + [elem])
    if op == "remove_elem":
        if elem not in items:
            return None
        items = list(items)
        items.remove(elem)
        return list_term(items)
    raise ValueError(f"unknown list operation {op!r}")


def eval_ground_conditions(conditions, theta: Substitution) -> list[Substitution]:
    """Evaluate a condition list under ground bindings, left to right.

    Returns the list of extended substitutions that satisfy all conditions
    (several when AssignChoice branches); empty when unsatisfied. Raises
    ArithmeticOnNonNumber for genuinely ill-typed arithmetic.
    """
    from .parser import Assign, AssignChoice, Compare, ListOp

    branches = [dict(theta)]
    for cond in conditions:
        new_branches = []
        for th in branches:
            if isinstance(cond, Assign):
                value = eval_expr(cond.expr, th)
                if not is_ground(value):
                    continue
                prior = th.get(cond.var)
                if prior is not None and prior != value:
                    continue
                th2 = dict(th)
                th2[cond.var] = value
                new_branches.append(th2)
            elif isinstance(cond, AssignChoice):
                chosen = th.get(cond.var)
                for opt in cond.options:
                    value = eval_expr(opt, th)
                    if not is_ground(value):
                        continue
                    if chosen is not None and chosen != value:
                        continue
                    th2 = dict(th)
                    th2[cond.var] = value
                    new_branches.append(th2)
            elif isinstance(cond, Compare):
                lhs = eval_expr(cond.lhs, th)
                rhs = eval_expr(cond.rhs, th)
                if not (is_ground(lhs) and is_ground(rhs)):
                    continue
                if eval_compare(cond.op, lhs, rhs):
                    new_branches.append(th)
            elif isinstance(cond, ListOp):
                lst = substitute(cond.lst, th)
                elem = substitute(cond.elem, th)
                if not (is_ground(lst) and is_ground(elem)):
                    continue
                result = apply_list_op(cond.op, elem, lst)
                if result is None:
                    continue
                prior = th.get(cond.result)
                if prior is not None and prior != result:
                    continue
                th2 = dict(th)
                th2[cond.result] = result
                new_branches.append(th2)
            else:
                raise TypeError(f"unknown condition {cond!r}")
        branches = new_branches
        if not branches:
            break
    # deduplicate choice branches that converged
    unique = []
    for th in branches:
        if th not in unique:
            unique.append(th)
    return unique


def condition_variables(cond) -> list[str]:
    from .parser import Assign, AssignChoice, Compare, ListOp
    from .terms import variables

    if isinstance(cond, Assign):
        return variables(cond.expr)
    if isinstance(cond, AssignChoice):
        out = []
        for opt in cond.options:
            for v in variables(opt):
                if v not in out:
                    out.append(v)
        return out
    if isinstance(cond, Compare):
        out = variables(cond.lhs)
        for v in variables(cond.rhs):
            if v not in out:
                out.append(v)
        return out
    if isinstance(cond, ListOp):
        out = variables(cond.elem)
        for v in variables(cond.lst):
            if v not in out:
                out.append(v)
        return out
    raise TypeError(f"unknown condition {cond!r}")


def condition_target(cond) -> Optional[str]:
    from .parser import Assign, AssignChoice, ListOp

    if isinstance(cond, (Assign, AssignChoice)):
        return cond.var
    if isinstance(cond, ListOp):
        return cond.result
    return None
