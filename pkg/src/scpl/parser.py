"""Recursive-descent parser for `.scpl` contract files.

Clause-per-`.`, newline-insensitive, `%` comments. `-->` and `:-` are
synonyms. Conditions use the formal forms only (`append_elem`,
`remove_elem`, `:=`, comparison operators); prose conditions are not a
thing at this level.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional, Union

from .errors import DuplicateAgent, ScplSyntaxError
from .terms import (ActPattern, Atom, FreshNames, Num, Struct, Term, Var,
                    list_term)

# --- Conditions -------------------------------------------------------------

COMPARE_OPS = (">", ">=", "<", "=<", "=", "=\\=")


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Term


@dataclass(frozen=True)
class AssignChoice:
    var: str
    options: tuple[Term, ...]


@dataclass(frozen=True)
class Compare:
    op: str
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class ListOp:
    op: str  # append_elem | remove_elem
    elem: Term
    lst: Term
    result: str  # result variable name


Condition = Union[Assign, AssignChoice, Compare, ListOp]


@dataclass(frozen=True)
class SpawnSpec:
    agent: Term  # Var, Atom, or the reserved Atom("autonomous")
    state: Term


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Rule:
    pre: Term
    input: Optional[ActPattern]
    output: Optional[ActPattern]  # parser leaves signer None; staticcheck signs
    spawn: Optional[SpawnSpec]
    post: Term
    conditions: tuple[Condition, ...]
    origin: Span
    auto_continue: bool = False  # set on the output half of a desugared rule
    from_combined: bool = False  # set on both halves of a desugared rule

    @property
    def kind(self) -> str:
        if self.input is not None and (self.output is not None or self.spawn is not None):
            return "combined"
        if self.input is not None:
            return "input"
        if self.output is not None or self.spawn is not None:
            return "output"
        return "silent"


@dataclass
class RoleProgram:
    role_name: str
    rules: list[Rule]


@dataclass
class Program:
    activation: list[tuple[str, Term]]
    roles: dict[str, RoleProgram]
    rules: list[Rule] = field(default_factory=list)  # all rules, source order
    source: str = "<string>"


# --- Tokenizer --------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<name>[a-z][A-Za-z0-9_']*)
  | (?P<var>[A-Z_][A-Za-z0-9_']*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<op>-->|:-|:=|=\\=|>=|=<|>|<|=|\#|&|\||\(|\)|\[|\]|,|\.|\+|-|\*)
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # number | name | var | string | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            col = pos - line_start + 1
            raise ScplSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok_text = m.group()
        col = pos - line_start + 1
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, tok_text, line, col))
        nl = tok_text.count("\n")
        if nl:
            line += nl
            line_start = pos + tok_text.rfind("\n") + 1
        pos = m.end()
    last_line = line
    tokens.append(Token("eof", "", last_line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, fresh: Optional[FreshNames] = None):
        self.tokens = tokenize(text)
        self.i = 0
        self.fresh = fresh or FreshNames(prefix="_G")

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, message, expected=()):
        t = self.peek()
        raise ScplSyntaxError(message, t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text or t.kind == "eof":
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}", (text,))
        return self.next()

    def at(self, text: str, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.text == text and t.kind != "eof"

    # --- terms ---

    def parse_term(self) -> Term:
        t = self.peek()
        if t.kind == "number":
            self.next()
            return Num(Decimal(t.text))
        if t.text == "-" and self.peek(1).kind == "number":
            self.next()
            n = self.next()
            return Num(-Decimal(n.text))
        if t.kind == "string":
            self.next()
            return Atom(t.text[1:-1].replace('\\"', '"'))
        if t.kind == "var":
            self.next()
            if t.text == "_":
                return Var(self.fresh.next())
            return Var(t.text)
        if t.kind == "name":
            self.next()
            if self.at("("):
                self.next()
                args = [self.parse_term()]
                while self.at(","):
                    self.next()
                    args.append(self.parse_term())
                self.expect(")")
                return Struct(t.text, tuple(args))
            return Atom(t.text)
        if t.text == "[":
            return self.parse_list()
        if t.text == "(":
            self.next()
            inner = self.parse_term()
            self.expect(")")
            return inner
        self.error(f"expected a term, found {t.text or 'end of input'!r}",
                   ("name", "variable", "number", "["))

    def parse_list(self) -> Term:
        self.expect("[")
        if self.at("]"):
            self.next()
            return Atom("[]")
        items = [self.parse_term()]
        while self.at(","):
            self.next()
            items.append(self.parse_term())
        tail: Term = Atom("[]")
        if self.at("|"):
            self.next()
            tail = self.parse_term()
        self.expect("]")
        return list_term(items, tail)

    # --- act patterns ---

    def parse_act_pattern(self) -> ActPattern:
        t = self.peek()
        if t.kind == "var" and self.at("(", 1):
            self.next()
            self.expect("(")
            payload = self.parse_term()
            self.expect(")")
            signer = None if t.text == "_" else Var(t.text)
            return ActPattern(signer, payload)
        term = self.parse_term()
        # A unary name-functor term in input position reads as signer(payload);
        # a genuinely unary payload needs an explicit `_(...)` wrapper.
        if isinstance(term, Struct) and len(term.args) == 1 and term.functor != ".":
            return ActPattern(Atom(term.functor), term.args[0])
        return ActPattern(None, term)

    # --- arithmetic expressions (over +, -, * with usual precedence) ---

    def parse_expr(self) -> Term:
        left = self.parse_mul()
        while self.at("+") or self.at("-"):
            op = self.next().text
            right = self.parse_mul()
            left = Struct(op, (left, right))
        return left

    def parse_mul(self) -> Term:
        left = self.parse_expr_atom()
        while self.at("*"):
            self.next()
            right = self.parse_expr_atom()
            left = Struct("*", (left, right))
        return left

    def parse_expr_atom(self) -> Term:
        if self.at("("):
            self.next()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        return self.parse_term()

    # --- conditions ---

    def parse_conditions(self) -> list[Condition]:
        conditions = [self.parse_condition()]
        while self.at("&") or self.at(","):
            self.next()
            conditions.append(self.parse_condition())
        return conditions

    def parse_condition(self) -> Condition:
        t = self.peek()
        if t.kind == "var" and self.at(":=", 1):
            var = self.next().text
            self.next()
            return self.parse_assign_rhs(var)
        if t.kind == "name" and t.text in ("append_elem", "remove_elem") and self.at("(", 1):
            op = self.next().text
            self.expect("(")
            elem = self.parse_term()
            self.expect(",")
            lst = self.parse_term()
            self.expect(",")
            result = self.peek()
            if result.kind != "var":
                self.error("list-operation result must be a variable")
            self.next()
            self.expect(")")
            return ListOp(op, elem, lst, result.text)
        lhs = self.parse_expr()
        op = self.peek()
        if op.text not in COMPARE_OPS:
            self.error(f"expected a comparison operator, found {op.text!r}", COMPARE_OPS)
        self.next()
        rhs = self.parse_expr()
        return Compare(op.text, lhs, rhs)

    def parse_assign_rhs(self, var: str) -> Condition:
        first = self.parse_expr()
        if not self._choice_ahead():
            return Assign(var, first)
        options = [first]
        while True:
            if self.at(","):
                self.next()
            elif self.at("or") or (self.peek().kind == "name" and self.peek().text == "or"):
                self.next()
                options.append(self.parse_expr())
                break
            else:
                break
            if self.peek().kind == "name" and self.peek().text == "or":
                self.next()
                options.append(self.parse_expr())
                break
            options.append(self.parse_expr())
        return AssignChoice(var, tuple(options))

    def _choice_ahead(self) -> bool:
        """After an assignment's first expression: does an `or` item follow
        before any other condition kind starts? Distinguishes
        `X := A, B, or C` from `X := A, Y > 0`."""
        depth = 0
        j = self.i
        while j < len(self.tokens):
            tok = self.tokens[j]
            if tok.kind == "eof" or tok.text in (".", "-->", ":-"):
                return False
            if tok.text in ("(", "["):
                depth += 1
            elif tok.text in (")", "]"):
                depth -= 1
            elif depth == 0:
                if tok.kind == "name" and tok.text == "or":
                    return True
                if tok.text in COMPARE_OPS or tok.text in (":=", "&"):
                    return False
            j += 1
        return False

    # --- rules and programs ---

    def parse_rule(self) -> Rule:
        start = self.peek()
        pre = self.parse_term()
        input_act = None
        if self.at(","):
            self.next()
            input_act = self.parse_act_pattern()
        if self.at("-->") or self.at(":-"):
            self.next()
        else:
            self.error("expected '-->' or ':-'", ("-->", ":-"))
        items: list[tuple[str, object]] = []
        while True:
            item = self.parse_rhs_item()
            items.append(item)
            if self.at(","):
                self.next()
                continue
            break
        conditions: tuple[Condition, ...] = ()
        if self.peek().kind == "name" and self.peek().text == "where":
            self.next()
            conditions = tuple(self.parse_conditions())
        self.expect(".")

        kind, post = items[-1]
        if kind != "term":
            self.error("a rule must end with a post-state term")
        output = None
        spawn = None
        for kind, value in items[:-1]:
            if kind == "spawn":
                if spawn is not None:
                    self.error("at most one spawn per rule")
                spawn = value
            else:
                if output is not None:
                    self.error("at most one output act per rule")
                output = ActPattern(None, value)
        return Rule(pre=pre, input=input_act, output=output, spawn=spawn,
                    post=post, conditions=conditions,
                    origin=Span(start.line, start.col))

    def parse_rhs_item(self):
        t = self.peek()
        if (t.kind in ("var", "name")) and self.at("#", 1):
            agent = self.parse_term()
            self.expect("#")
            state = self.parse_term()
            return ("spawn", SpawnSpec(agent, state))
        return ("term", self.parse_term())

    def parse_activation_list(self) -> list[tuple[str, Term]]:
        self.expect("[")
        pairs: list[tuple[str, Term]] = []
        if not self.at("]"):
            while True:
                agent = self.peek()
                if agent.kind != "name":
                    self.error("activation entries are name#state pairs")
                if agent.text == "autonomous":
                    self.error("'autonomous' is reserved and not allowed in the activation")
                self.next()
                self.expect("#")
                state = self.parse_term()
                pairs.append((agent.text, state))
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect("]")
        seen = set()
        for name, _ in pairs:
            if name in seen:
                raise DuplicateAgent(f"agent {name!r} activated twice")
            seen.add(name)
        return pairs

    def parse_program(self, source: str = "<string>") -> Program:
        activation: list[tuple[str, Term]] = []
        rules: list[Rule] = []
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "name" and t.text == "activation":
                self.next()
                activation = self.parse_activation_list()
                self.expect(".")
            else:
                rules.append(self.parse_rule())
        roles = group_roles(rules, activation)
        return Program(activation=activation, roles=roles, rules=rules, source=source)


def _functor_of(t: Term) -> str:
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Struct):
        return t.functor
    raise ScplSyntaxError(f"state term must be a name or compound: {t!r}", 0, 0)


def group_roles(rules: list[Rule], activation: list[tuple[str, Term]]) -> dict[str, RoleProgram]:
    """Group rules into role programs.

    Role names come from activation states, spawn states, and 0-ary silent
    init rules. Auxiliary functors (post-state functors reachable from a
    role's rules) attach to that role.
    """
    role_names: dict[str, None] = {}
    for rule in rules:
        if rule.kind == "silent" and isinstance(rule.pre, Atom):
            role_names.setdefault(rule.pre.name)
    for _, state in activation:
        role_names.setdefault(_functor_of(state))
    for rule in rules:
        if rule.spawn is not None:
            role_names.setdefault(_functor_of(rule.spawn.state))

    by_functor: dict[str, list[Rule]] = {}
    for rule in rules:
        by_functor.setdefault(_functor_of(rule.pre), []).append(rule)

    # functor reachability: pre functor -> post functor
    edges: dict[str, set[str]] = {}
    for rule in rules:
        edges.setdefault(_functor_of(rule.pre), set()).add(_functor_of(rule.post))

    owner: dict[str, str] = {}
    for role in role_names:
        stack = [role]
        while stack:
            f = stack.pop()
            if f in owner or (f != role and f in role_names):
                continue
            owner[f] = role
            stack.extend(edges.get(f, ()))

    roles: dict[str, RoleProgram] = {r: RoleProgram(r, []) for r in role_names}
    orphans: list[Rule] = []
    for rule in rules:
        f = _functor_of(rule.pre)
        if f in owner:
            roles[owner[f]].rules.append(rule)
        else:
            orphans.append(rule)
    if orphans:
        # keep them parseable; staticcheck reports UnknownRole-ish problems
        roles.setdefault("_orphan", RoleProgram("_orphan", [])).rules.extend(orphans)
    return roles


# --- public entry points ----------------------------------------------------

def parse_term(text: str, fresh: Optional[FreshNames] = None) -> Term:
    p = _Parser(text, fresh)
    t = p.parse_term()
    if p.peek().kind != "eof":
        p.error("trailing input after term")
    return t


def parse_program(text: str, source: str = "<string>") -> Program:
    return _Parser(text).parse_program(source)


def parse_activation(text: str) -> list[tuple[str, Term]]:
    p = _Parser(text)
    pairs = p.parse_activation_list()
    if p.at("."):
        p.next()
    if p.peek().kind != "eof":
        p.error("trailing input after activation")
    return pairs
