"""Logic terms: data model, substitution, one-way matching and full unification.

Terms are immutable values; every operation here is a pure function, so the
rest of the package can share them freely across runs and threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterator, Optional, Union

LIST_FUNCTOR = "."
NIL = None  # assigned below once Atom exists


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return f"Var({self.name})"


@dataclass(frozen=True)
class Atom:
    name: str

    def __repr__(self):
        return f"Atom({self.name})"


@dataclass(frozen=True)
class Num:
    value: Decimal

    def __post_init__(self):
        # Exact decimal arithmetic only; floats would break replay determinism.
        assert isinstance(self.value, Decimal)

    def __repr__(self):
        return f"Num({render(self)})"


@dataclass(frozen=True)
class Struct:
    functor: str
    args: tuple["Term", ...]

    def __post_init__(self):
        assert len(self.args) >= 1

    def __repr__(self):
        return f"Struct({render(self)})"


Term = Union[Var, Atom, Num, Struct]
Substitution = dict[str, Term]

NIL = Atom("[]")


def num(value) -> Num:
    return Num(Decimal(str(value)))


def struct(functor: str, *args: Term) -> Term:
    if not args:
        return Atom(functor)
    return Struct(functor, tuple(args))


def list_term(items, tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = Struct(LIST_FUNCTOR, (item, out))
    return out


def list_items(t: Term) -> tuple[list[Term], Term]:
    """Decompose list cells into (elements, tail); tail is NIL for proper lists."""
    items = []
    while isinstance(t, Struct) and t.functor == LIST_FUNCTOR and len(t.args) == 2:
        items.append(t.args[0])
        t = t.args[1]
    return items, t


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Struct):
        for a in t.args:
            yield from subterms(a)


def variables(t: Term) -> list[str]:
    """Variable names in first-occurrence order."""
    seen: dict[str, None] = {}
    for s in subterms(t):
        if isinstance(s, Var):
            seen.setdefault(s.name)
    return list(seen)


def is_ground(t: Term) -> bool:
    return not any(isinstance(s, Var) for s in subterms(t))


def substitute(t: Term, theta: Substitution) -> Term:
    """Replace each bound variable once; no recursive resolution within one pass."""
    if isinstance(t, Var):
        return theta.get(t.name, t)
    if isinstance(t, Struct):
        return Struct(t.functor, tuple(substitute(a, theta) for a in t.args))
    return t


def compose(theta: Substitution, sigma: Substitution) -> Substitution:
    """Substitution equivalent to applying theta, then sigma. Normalized so
    that applying the result twice equals applying it once."""
    out: Substitution = {}
    for x, t in theta.items():
        t2 = substitute(t, sigma)
        if not (isinstance(t2, Var) and t2.name == x):
            out[x] = t2
    for x, t in sigma.items():
        if x not in theta and not (isinstance(t, Var) and t.name == x):
            out[x] = t
    return out


def match(pattern: Term, value: Term, bindings: Optional[Substitution] = None) -> Optional[Substitution]:
    """One-way matching: bind pattern variables so the pattern equals value.

    Returns None (no match) rather than raising; an inapplicable rule is not
    a fault. The caller normally passes a ground value.
    """
    theta = dict(bindings) if bindings else {}
    stack = [(pattern, value)]
    while stack:
        p, v = stack.pop()
        if isinstance(p, Var):
            bound = theta.get(p.name)
            if bound is None:
                theta[p.name] = v
            elif bound != v:
                return None
        elif isinstance(p, Struct):
            if not (isinstance(v, Struct) and v.functor == p.functor and len(v.args) == len(p.args)):
                return None
            stack.extend(zip(p.args, v.args))
        else:
            if p != v:
                return None
    return theta


def occurs(name: str, t: Term, theta: Substitution) -> bool:
    for s in subterms(t):
        if isinstance(s, Var):
            if s.name == name:
                return True
            if s.name in theta and occurs(name, theta[s.name], theta):
                return True
    return False


def resolve(t: Term, theta: Substitution) -> Term:
    """Apply theta repeatedly until no bound variable remains reachable."""
    if isinstance(t, Var):
        seen = set()
        while isinstance(t, Var) and t.name in theta:
            if t.name in seen:
                break
            seen.add(t.name)
            t = theta[t.name]
        if isinstance(t, Struct):
            return resolve(t, theta)
        return t
    if isinstance(t, Struct):
        return Struct(t.functor, tuple(resolve(a, theta) for a in t.args))
    return t


def unify(t1: Term, t2: Term, bindings: Optional[Substitution] = None) -> Optional[Substitution]:
    """Most general unifier with the occurs-check, or None.

    The result is normalized (idempotent): no bound variable occurs in any
    binding's right-hand side.
    """
    theta: Substitution = dict(bindings) if bindings else {}

    def walk(t: Term) -> Term:
        while isinstance(t, Var) and t.name in theta:
            t = theta[t.name]
        return t

    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a, b = walk(a), walk(b)
        if a == b:
            continue
        if isinstance(a, Var):
            if occurs(a.name, b, theta):
                return None
            theta[a.name] = b
        elif isinstance(b, Var):
            if occurs(b.name, a, theta):
                return None
            theta[b.name] = a
        elif isinstance(a, Struct) and isinstance(b, Struct):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return None
            stack.extend(zip(a.args, b.args))
        else:
            return None
    return {x: resolve(t, theta) for x, t in theta.items()}


class FreshNames:
    """Source of globally fresh variable names."""

    def __init__(self, prefix: str = "_V"):
        self.prefix = prefix
        self.counter = 0

    def next(self) -> str:
        self.counter += 1
        return f"{self.prefix}{self.counter}"


def rename_fresh(t: Term, fresh: FreshNames, mapping: Optional[dict[str, str]] = None) -> Term:
    """Consistently rename all variables in t to names never produced before."""
    if mapping is None:
        mapping = {}

    def go(t: Term) -> Term:
        if isinstance(t, Var):
            if t.name not in mapping:
                mapping[t.name] = fresh.next()
            return Var(mapping[t.name])
        if isinstance(t, Struct):
            return Struct(t.functor, tuple(go(a) for a in t.args))
        return t

    return go(t)


# --- Act patterns -----------------------------------------------------------

@dataclass(frozen=True)
class ActPattern:
    """A signed-utterance pattern: signer position is the only place a
    variable may act as a functor. signer None means wildcard."""

    signer: Optional[Term]  # Var | Atom | None
    payload: Term

    def __repr__(self):
        return f"ActPattern({render_act(self)})"


def act_variables(p: ActPattern) -> list[str]:
    out = []
    if isinstance(p.signer, Var):
        out.append(p.signer.name)
    for v in variables(p.payload):
        if v not in out:
            out.append(v)
    return out


def substitute_act(p: ActPattern, theta: Substitution) -> ActPattern:
    signer = p.signer
    if isinstance(signer, Var):
        signer = theta.get(signer.name, signer)
    return ActPattern(signer, substitute(p.payload, theta))


def match_act(pattern: ActPattern, signer: str, payload: Term,
              bindings: Optional[Substitution] = None) -> Optional[Substitution]:
    """Match an act pattern against a concrete signed act."""
    theta = dict(bindings) if bindings else {}
    if isinstance(pattern.signer, Atom):
        if pattern.signer.name != signer:
            return None
    elif isinstance(pattern.signer, Var):
        theta = match(pattern.signer, Atom(signer), theta)
        if theta is None:
            return None
    return match(pattern.payload, payload, theta)


# --- Canonical text rendering ----------------------------------------------

_PLAIN_NAME = re.compile(r"[a-z][A-Za-z0-9_']*$")


def _render_name(name: str) -> str:
    if name == "[]" or _PLAIN_NAME.match(name):
        return name
    return '"' + name.replace('"', '\\"') + '"'


def _render_num(d: Decimal) -> str:
    s = format(d, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    if s in ("", "-"):
        s = "0"
    return s


_INFIX = {"+", "-", "*"}


def render(t: Term) -> str:
    """Canonical text form: names verbatim, lists sugared, numbers minimal."""
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Atom):
        return _render_name(t.name)
    if isinstance(t, Num):
        return _render_num(t.value)
    if t.functor == LIST_FUNCTOR and len(t.args) == 2:
        items, tail = list_items(t)
        inner = ",".join(render(i) for i in items)
        if tail == NIL:
            return f"[{inner}]"
        return f"[{inner}|{render(tail)}]"
    if t.functor in _INFIX and len(t.args) == 2:
        return f"({render(t.args[0])}{t.functor}{render(t.args[1])})"
    return f"{_render_name(t.functor)}({','.join(render(a) for a in t.args)})"


def render_act(p: ActPattern) -> str:
    if p.signer is None:
        return render(p.payload)
    return f"{render(p.signer)}({render(p.payload)})"
