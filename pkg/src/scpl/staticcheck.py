"""Compiler passes over parsed programs.

Order: role validation, combined-rule desugaring, signature insertion,
explicit-nondeterminism check. The output is a CheckedProgram whose rule
set contains no combined rules and whose output acts are Self-signed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Optional

from .conditions import (condition_target, condition_variables, eval_compare,
                         eval_ground_conditions)
from .errors import ArithmeticOnNonNumber, UniverseTooLarge
from .parser import (Assign, AssignChoice, Compare, Condition, ListOp,
                     Program, RoleProgram, Rule, Span, SpawnSpec)
from .terms import (ActPattern, Atom, FreshNames, Num, Struct, Substitution,
                    Term, Var, act_variables, render, substitute,
                    substitute_act, unify, variables)

SELF = "Self"
SELF_CONST = Atom("$self")
NO_ACT = Atom("$noact")


@dataclass
class Violation:
    kind: str  # ExplicitND | MissingInitRule | UnknownRole | UnboundConditionVar
    message: str
    spans: tuple[Span, ...] = ()
    witness: Optional[dict] = None  # unifier + differing posts for ExplicitND

    def render(self, source: str = "<string>") -> str:
        span = self.spans[0] if self.spans else Span(0, 0)
        return f"{source}:{span.line}:{span.col}: {self.kind}: {self.message}"

    def to_json(self, source: str = "<string>") -> str:
        return json.dumps({
            "kind": self.kind,
            "message": self.message,
            "spans": [[s.line, s.col] for s in self.spans],
            "witness": self.witness,
            "source": source,
        })


@dataclass
class CheckedProgram:
    program: Program
    diagnostics: list[Violation] = field(default_factory=list)

    @property
    def rules(self) -> list[Rule]:
        return self.program.rules

    @property
    def ok(self) -> bool:
        return not self.diagnostics


# --- desugaring -------------------------------------------------------------

def _program_names(rules) -> set[str]:
    names = set()
    for rule in rules:
        for t in (rule.pre, rule.post):
            names.update(_names_in(t))
        if rule.input:
            names.update(_names_in(rule.input.payload))
        if rule.output:
            names.update(_names_in(rule.output.payload))
    return names


def _names_in(t: Term) -> set[str]:
    from .terms import subterms
    out = set()
    for s in subterms(t):
        if isinstance(s, Atom):
            out.add(s.name)
        elif isinstance(s, Struct):
            out.add(s.functor)
    return out


class FreshFunctors:
    """Fresh constant names not occurring anywhere in the program."""

    def __init__(self, taken: set[str]):
        self.taken = set(taken)
        self.counter = 0

    def next(self) -> str:
        while True:
            self.counter += 1
            name = f"x{self.counter}"
            if name not in self.taken:
                self.taken.add(name)
                return name


def desugar_rule(rule: Rule, fresh: FreshFunctors) -> list[Rule]:
    if rule.kind != "combined":
        return [rule]
    left_vars = variables(rule.pre)
    for v in act_variables(rule.input):
        if v not in left_vars:
            left_vars.append(v)

    # comparisons decidable from the left-hand side guard the input half;
    # everything else travels with the output half
    guards, rest = [], []
    for cond in rule.conditions:
        used = condition_variables(cond)
        if isinstance(cond, Compare) and all(v in left_vars or v == SELF for v in used):
            guards.append(cond)
        else:
            rest.append(cond)

    right_vars: list[str] = []
    if rule.output is not None:
        right_vars.extend(act_variables(rule.output))
    if rule.spawn is not None:
        right_vars.extend(variables(rule.spawn.agent) + variables(rule.spawn.state))
    right_vars.extend(variables(rule.post))
    for cond in rest:
        right_vars.extend(condition_variables(cond))

    shared = [v for v in left_vars if v in right_vars and v != SELF]
    x = fresh.next()
    mid: Term = Atom(x) if not shared else Struct(x, tuple(Var(v) for v in shared))
    input_half = Rule(pre=rule.pre, input=rule.input, output=None, spawn=None,
                      post=mid, conditions=tuple(guards), origin=rule.origin,
                      from_combined=True)
    output_half = Rule(pre=mid, input=None, output=rule.output, spawn=rule.spawn,
                       post=rule.post, conditions=tuple(rest), origin=rule.origin,
                       auto_continue=True, from_combined=True)
    return [input_half, output_half]


def desugar_combined(role: RoleProgram, fresh: FreshFunctors) -> RoleProgram:
    out = []
    for rule in role.rules:
        out.extend(desugar_rule(rule, fresh))
    return RoleProgram(role.role_name, out)


def insert_signatures(role: RoleProgram) -> RoleProgram:
    out = []
    for rule in role.rules:
        if rule.output is not None and rule.output.signer is None:
            signed = ActPattern(Var(SELF), rule.output.payload)
            rule = Rule(pre=rule.pre, input=rule.input, output=signed,
                        spawn=rule.spawn, post=rule.post,
                        conditions=rule.conditions, origin=rule.origin,
                        auto_continue=rule.auto_continue,
                        from_combined=rule.from_combined)
        out.append(rule)
    return RoleProgram(role.role_name, out)


# --- explicit nondeterminism ------------------------------------------------

def _inline_conditions(rule: Rule, copy_id: int) -> tuple[Substitution, list[Compare]]:
    """Symbolic closure of derived variables: Assign/ListOp targets become
    their defining expressions, AssignChoice targets become per-copy opaque
    constants. Returns the inlining substitution and the residual
    comparisons (with inlining applied)."""
    theta: Substitution = {}
    compares: list[Compare] = []
    for cond in rule.conditions:
        if isinstance(cond, Assign):
            theta[cond.var] = substitute(cond.expr, theta)
        elif isinstance(cond, AssignChoice):
            theta[cond.var] = Atom(f"$choice_{copy_id}_{cond.var}")
        elif isinstance(cond, ListOp):
            theta[cond.result] = Struct(f"${cond.op}",
                                        (substitute(cond.elem, theta),
                                         substitute(cond.lst, theta)))
        elif isinstance(cond, Compare):
            compares.append(Compare(cond.op, substitute(cond.lhs, theta),
                                    substitute(cond.rhs, theta)))
    return theta, compares


def _act_term(rule: Rule, inline: Substitution,
              fresh: FreshNames) -> tuple[Term, list[Compare]]:
    """Encode a rule's act for pairwise unification. Silent rules carry a
    marker unifiable only with itself. Input signers come with the
    constraint that they differ from Self: agents never receive their own
    broadcasts."""
    parts: list[Term] = []
    constraints: list[Compare] = []
    if rule.output is not None:
        signer = rule.output.signer or Var(fresh.next())
        parts.append(Struct("$act", (signer, substitute(rule.output.payload, inline))))
    if rule.spawn is not None:
        parts.append(Struct("$spawn", (substitute(rule.spawn.agent, inline),
                                       substitute(rule.spawn.state, inline))))
    if rule.input is not None:
        signer = rule.input.signer or Var(fresh.next())
        parts.append(Struct("$act", (signer, rule.input.payload)))
        constraints.append(Compare("=\\=", signer, Var(SELF)))
    if not parts:
        return NO_ACT, constraints
    if len(parts) == 1:
        return parts[0], constraints
    return Struct("$both", tuple(parts)), constraints


@dataclass
class _RuleCopy:
    rule: Rule
    pre: Term
    act: Term
    post: Term
    compares: list[Compare]
    silent: bool


def _prepare_copy(rule: Rule, copy_id: int, fresh: FreshNames) -> _RuleCopy:
    inline, compares = _inline_conditions(rule, copy_id)
    self_sub = {SELF: SELF_CONST}

    act, constraints = _act_term(rule, inline, fresh)
    compares = compares + constraints
    post = substitute(substitute(rule.post, inline), self_sub)
    pre = substitute(rule.pre, self_sub)
    act = substitute(act, self_sub)
    compares = [Compare(c.op, substitute(c.lhs, self_sub), substitute(c.rhs, self_sub))
                for c in compares]

    mapping: dict[str, str] = {}
    from .terms import rename_fresh
    pre = rename_fresh(pre, fresh, mapping)
    act = rename_fresh(act, fresh, mapping)
    post = rename_fresh(post, fresh, mapping)
    compares = [Compare(c.op, rename_fresh(c.lhs, fresh, mapping),
                        rename_fresh(c.rhs, fresh, mapping)) for c in compares]
    return _RuleCopy(rule, pre, act, post, compares, act == NO_ACT)


def _normalize_compare(c: Compare) -> tuple[Term, str, Term]:
    if c.op == "<":
        return (c.rhs, ">", c.lhs)
    if c.op == "=<":
        return (c.rhs, ">=", c.lhs)
    return (c.lhs, c.op, c.rhs)


def _contradictory(c1: Compare, c2: Compare) -> bool:
    l1, op1, r1 = _normalize_compare(c1)
    l2, op2, r2 = _normalize_compare(c2)
    same = (l1, r1) == (l2, r2)
    swapped = (l1, r1) == (r2, l2)
    if not (same or swapped):
        return False
    if same:
        pairs = {(">", "="), ("=", ">"), ("=", "=\\="), ("=\\=", "=")}
        if (op1, op2) in pairs:
            return True
        return False
    # swapped operands: l1 ? r1 vs r1 ? l1
    bad = {(">", ">"), (">", ">="), (">=", ">"), (">", "="), ("=", ">")}
    return (op1, op2) in bad


def _condition_unsat(c: Compare) -> bool:
    if isinstance(c.lhs, Num) and isinstance(c.rhs, Num):
        return not eval_compare(c.op, c.lhs, c.rhs)
    if c.lhs == c.rhs:
        return c.op in (">", "<", "=\\=")
    return False


def _conditions_jointly_unsat(theta: Substitution, c1s: list[Compare],
                              c2s: list[Compare]) -> bool:
    a = [Compare(c.op, substitute(c.lhs, theta), substitute(c.rhs, theta)) for c in c1s]
    b = [Compare(c.op, substitute(c.lhs, theta), substitute(c.rhs, theta)) for c in c2s]
    if any(_condition_unsat(c) for c in a + b):
        return True
    return any(_contradictory(x, y) for x in a for y in b)


def check_explicit_nd(rules: list[Rule]) -> list[Violation]:
    """Pairwise (including self-overlap) unification check per the
    effective-checkability observation, with derived variables inlined and
    jointly-unsatisfiable comparison guards pruned."""
    fresh = FreshNames(prefix="_N")
    violations = []
    n = len(rules)
    for i in range(n):
        for j in range(i, n):
            r1 = _prepare_copy(rules[i], 2 * (i * n + j), fresh)
            r2 = _prepare_copy(rules[j], 2 * (i * n + j) + 1, fresh)
            if r1.silent or r2.silent:
                theta = unify(r1.pre, r2.pre)
            else:
                theta = unify(Struct("$p", (r1.pre, r1.act)),
                              Struct("$p", (r2.pre, r2.act)))
            if theta is None:
                continue
            p1 = substitute(r1.post, theta)
            p2 = substitute(r2.post, theta)
            if p1 == p2:
                continue
            if _conditions_jointly_unsat(theta, r1.compares, r2.compares):
                continue
            witness = {
                "unifier": {k: render(v) for k, v in theta.items()},
                "posts": [render(p1), render(p2)],
            }
            violations.append(Violation(
                kind="ExplicitND",
                message=(f"rules at {rules[i].origin} and {rules[j].origin} "
                         f"overlap but lead to different states "
                         f"({render(p1)} vs {render(p2)})"),
                spans=(rules[i].origin, rules[j].origin),
                witness=witness,
            ))
    return violations


# --- role validation --------------------------------------------------------

def _state_functor(t: Term) -> str:
    return t.name if isinstance(t, Atom) else t.functor


def validate_roles(program: Program) -> list[Violation]:
    violations = []
    spawn_states = [r.spawn.state for r in program.rules if r.spawn is not None]
    referenced = [(name, state) for name, state in program.activation]

    for role_name, role in program.roles.items():
        if role_name == "_orphan":
            continue
        if not role.rules:
            violations.append(Violation(
                kind="UnknownRole",
                message=f"role {role_name!r} is referenced but has no rules"))
            continue
        has_silent_init = any(
            r.kind == "silent" and r.pre == Atom(role_name) for r in role.rules)
        has_bare_operating = any(
            r.pre == Atom(role_name) for r in role.rules)
        spawn_parameterized = any(
            isinstance(s, Struct) and s.functor == role_name for s in spawn_states)
        activation_parameterized = any(
            isinstance(s, Struct) and _state_functor(s) == role_name
            for _, s in referenced)
        if not (has_silent_init or has_bare_operating or spawn_parameterized
                or activation_parameterized):
            violations.append(Violation(
                kind="MissingInitRule",
                message=f"role {role_name!r} has no init rule and is never "
                        f"spawned with a parameterized state"))

    for name, state in referenced:
        f = _state_functor(state)
        if f not in program.roles or not program.roles[f].rules:
            violations.append(Violation(
                kind="UnknownRole",
                message=f"activation of {name!r} names unknown role {f!r}"))
    for state in spawn_states:
        f = _state_functor(state)
        if f not in program.roles or not program.roles[f].rules:
            violations.append(Violation(
                kind="UnknownRole",
                message=f"spawn names unknown role {f!r}"))

    for rule in program.rules:
        bound = set(variables(rule.pre)) | {SELF}
        if rule.input is not None:
            bound |= set(act_variables(rule.input))
        if rule.output is not None:
            bound |= set(act_variables(rule.output))
        if rule.spawn is not None:
            bound |= set(variables(rule.spawn.agent))
        for cond in rule.conditions:
            unbound = [v for v in condition_variables(cond) if v not in bound]
            if unbound:
                violations.append(Violation(
                    kind="UnboundConditionVar",
                    message=f"condition reads unbound variable(s) "
                            f"{', '.join(unbound)}",
                    spans=(rule.origin,)))
            target = condition_target(cond)
            if target is not None:
                bound.add(target)
    return violations


# --- ground instances and the brute-force checker ---------------------------

def ground_instances(rule: Rule, universe: list[Term], cap: int = 20000) -> list[Rule]:
    """All ground instances of a rule over a finite universe, derived
    variables excluded (they are computed by conditions, not enumerated)."""
    derived = {condition_target(c) for c in rule.conditions} - {None}
    names = []
    for t in [rule.pre] + ([rule.input.payload] if rule.input else []) \
            + ([Var(v) for v in act_variables(rule.input)] if rule.input else []) \
            + ([rule.output.payload] if rule.output else []) \
            + ([Var(v) for v in act_variables(rule.output)] if rule.output else []) \
            + ([rule.spawn.agent, rule.spawn.state] if rule.spawn else []) \
            + [rule.post]:
        for v in variables(t):
            if v not in names and v not in derived and v != SELF:
                names.append(v)
    for cond in rule.conditions:
        for v in condition_variables(cond):
            if v not in names and v not in derived and v != SELF:
                names.append(v)
    if len(universe) ** len(names) > cap:
        raise UniverseTooLarge(
            f"{len(universe)}^{len(names)} instances exceed the cap of {cap}")
    out = []
    seen = set()
    for combo in itertools.product(universe, repeat=len(names)):
        theta = dict(zip(names, combo))
        inst = _substitute_rule(rule, theta)
        key = repr(inst)
        if key not in seen:
            seen.add(key)
            out.append(inst)
    return out


def _substitute_rule(rule: Rule, theta: Substitution) -> Rule:
    def sub_cond(c: Condition) -> Condition:
        if isinstance(c, Assign):
            return Assign(c.var, substitute(c.expr, theta))
        if isinstance(c, AssignChoice):
            return AssignChoice(c.var, tuple(substitute(o, theta) for o in c.options))
        if isinstance(c, Compare):
            return Compare(c.op, substitute(c.lhs, theta), substitute(c.rhs, theta))
        return ListOp(c.op, substitute(c.elem, theta), substitute(c.lst, theta), c.result)

    return Rule(
        pre=substitute(rule.pre, theta),
        input=substitute_act(rule.input, theta) if rule.input else None,
        output=substitute_act(rule.output, theta) if rule.output else None,
        spawn=SpawnSpec(substitute(rule.spawn.agent, theta),
                        substitute(rule.spawn.state, theta)) if rule.spawn else None,
        post=substitute(rule.post, theta),
        conditions=tuple(sub_cond(c) for c in rule.conditions),
        origin=rule.origin,
        auto_continue=rule.auto_continue,
        from_combined=rule.from_combined,
    )


def brute_force_explicit_nd(rules: list[Rule], universe: list[Term],
                            cap: int = 20000) -> list[tuple[int, int]]:
    """Enumerate ground instances over a finite universe and report pairs of
    rule indices with a shared (pre, act) but differing posts. The oracle
    the unification-based check is tested against."""
    self_sub = {SELF: SELF_CONST}
    expanded: list[tuple[int, Term, Term, Term]] = []  # (rule idx, pre, act, post)
    for idx, rule in enumerate(rules):
        if rule.input is not None and rule.input.signer is None:
            # name the wildcard signer so it gets enumerated too
            rule = Rule(pre=rule.pre,
                        input=ActPattern(Var("_WSig"), rule.input.payload),
                        output=rule.output, spawn=rule.spawn, post=rule.post,
                        conditions=rule.conditions, origin=rule.origin,
                        auto_continue=rule.auto_continue,
                        from_combined=rule.from_combined)
        base = _substitute_rule(rule, self_sub)
        for inst in ground_instances(base, universe, cap):
            try:
                branches = eval_ground_conditions(inst.conditions, {})
            except ArithmeticOnNonNumber:
                continue
            for th in branches:
                final = _substitute_rule(inst, th)
                fresh = FreshNames(prefix="_B")
                act, _ = _act_term(final, {}, fresh)
                expanded.append((idx, final.pre, act, substitute(final.post, th)))
    hits = set()
    by_key: dict[tuple, list[tuple[int, Term, Term]]] = {}
    for idx, pre, act, post in expanded:
        silent = act == NO_ACT
        key = (render(pre),) if silent else (render(pre), render(act))
        by_key.setdefault(key, []).append((idx, act, post))
        # degenerate rules also clash with any act at the same pre-state
        if silent:
            for other_key, entries in by_key.items():
                if other_key[0] == render(pre) and len(other_key) > 1:
                    for oidx, _, opost in entries:
                        if opost != post:
                            hits.add(tuple(sorted((idx, oidx))))
    for key, entries in by_key.items():
        if len(key) == 1:
            # silent group: compare against every group at the same pre-state
            for other_key, others in by_key.items():
                if other_key[0] != key[0]:
                    continue
                for idx, _, post in entries:
                    for oidx, _, opost in others:
                        if (idx, post) != (oidx, opost) and post != opost:
                            hits.add(tuple(sorted((idx, oidx))))
        else:
            for (i1, _, p1), (i2, _, p2) in itertools.combinations(entries, 2):
                if p1 != p2:
                    hits.add(tuple(sorted((i1, i2))))
            for idx, _, post in entries:
                for i2, _, p2 in entries:
                    if idx == i2 and post != p2:
                        hits.add((idx, idx))
    return sorted(hits)


# --- pipeline ---------------------------------------------------------------

def check(program: Program) -> CheckedProgram:
    diagnostics = validate_roles(program)
    fresh = FreshFunctors(_program_names(program.rules))
    roles = {}
    all_rules = []
    for name, role in program.roles.items():
        role = insert_signatures(desugar_combined(role, fresh))
        roles[name] = role
        all_rules.extend(role.rules)
    checked = Program(activation=program.activation, roles=roles,
                      rules=all_rules, source=program.source)
    diagnostics.extend(check_explicit_nd(all_rules))
    return CheckedProgram(program=checked, diagnostics=diagnostics)
