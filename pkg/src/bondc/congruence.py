"""Structural congruence via canonical forms, and prime decomposition.

normalize() quotients the standard congruence axioms: associativity and
commutativity of | and +, Nil identity, scope extrusion/minimization,
garbage collection of unused binders, and alpha-renaming.  Named invocations
are opaque: they are never unfolded here, only in the transition system.

Canonical bound locations are written ℓ0, ℓ1, ... (non-ASCII on purpose:
the parser cannot produce them, so they never collide with user names).
The number of a binder equals the count of enclosing bound locations, so
structurally identical subterms serialize identically wherever they occur.
"""

from __future__ import annotations

import itertools
from collections import Counter

from .terms import (
    NIL,
    Call,
    New,
    Nil,
    Par,
    Prefix,
    Species,
    Sum,
    free_locations,
)

_MAX_ROUNDS = 32


# --- serialization -----------------------------------------------------------


def serialize(t: Species) -> str:
    """Deterministic serialization; the canonical-form total-order key."""
    return _ser(t, mask=False, bound=frozenset())


def _ser(t: Species, mask: bool, bound: frozenset[str]) -> str:
    def loc(name: str) -> str:
        if mask and name in bound:
            return "?"
        return name

    if isinstance(t, Nil):
        return "0"
    if isinstance(t, Call):
        if t.args:
            return f"{t.name}({','.join(loc(a) for a in t.args)})"
        return t.name
    if isinstance(t, Sum):
        return " + ".join(_ser_prefix(g, mask, bound) for g in t.guards)
    if isinstance(t, Par):
        return "(" + " | ".join(_ser(p, mask, bound) for p in t.parts) + ")"
    if isinstance(t, New):
        inner = _ser(t.body, mask, bound | set(t.binders))
        names = ",".join("?" if mask else b for b in t.binders)
        return f"(new {names} in {inner})"
    raise TypeError(t)


def _ser_prefix(g: Prefix, mask: bool, bound: frozenset[str]) -> str:
    s = g.site
    if g.location is not None:
        s += "@" + ("?" if mask and g.location in bound else g.location)
    if g.receives:
        s += "(" + ",".join("?" if mask else r for r in g.receives) + ")"
    body_bound = bound | set(g.receives)
    body = _ser(g.body, mask, body_bound)
    if isinstance(g.body, (Nil, Call)) or (
        isinstance(g.body, Sum) and len(g.body.guards) == 1
    ):
        return f"{s}.{body}"
    return f"{s}.({body})" if not body.startswith("(") else f"{s}.{body}"


# --- normalization -----------------------------------------------------------


def normalize(t: Species) -> Species:
    """Canonical representative of t's structural-congruence class."""
    t = _freshen(t)
    t = _snf(t)
    t = _renumber(_sort(t, masked=True))
    seen: dict[str, int] = {}
    states: list[Species] = []
    for _ in range(_MAX_ROUNDS):
        key = serialize(t)
        if key in seen:
            cycle = states[seen[key]:]
            return min(cycle, key=serialize)
        seen[key] = len(states)
        states.append(t)
        t2 = _renumber(_sort(t, masked=False))
        if serialize(t2) == key:
            return t
        t = t2
    return min(states, key=serialize)


def primes(t: Species) -> list[Species]:
    """The unique bag of prime factors, each in canonical form, sorted."""
    n = normalize(t)
    if isinstance(n, Nil):
        return []
    if isinstance(n, Par):
        return sorted((normalize(p) for p in n.parts), key=serialize)
    return [n]


def embed(t: Species) -> Counter:
    """Unit-concentration mixture over the primes of t (with multiplicity)."""
    return Counter(primes(t))


def is_prime(t: Species) -> bool:
    return len(primes(t)) == 1 and not isinstance(normalize(t), Nil)


# --- binder freshening -------------------------------------------------------


def _freshen(t: Species) -> Species:
    """Rename every binder to a globally unique name ('#n': unparseable)."""
    counter = itertools.count()

    def go(t: Species, env: dict[str, str]) -> Species:
        if isinstance(t, (Nil, )):
            return t
        if isinstance(t, Call):
            return Call(t.name, tuple(env.get(a, a) for a in t.args))
        if isinstance(t, Sum):
            return Sum(tuple(go_prefix(g, env) for g in t.guards))
        if isinstance(t, Par):
            return Par(tuple(go(p, env) for p in t.parts))
        if isinstance(t, New):
            fresh = tuple(f"#{next(counter)}" for _ in t.binders)
            env2 = {**env, **dict(zip(t.binders, fresh))}
            return New(fresh, go(t.body, env2))
        raise TypeError(t)

    def go_prefix(g: Prefix, env: dict[str, str]) -> Prefix:
        loc = g.location if g.location is None else env.get(g.location, g.location)
        fresh = tuple(f"#{next(counter)}" for _ in g.receives)
        env2 = {**env, **dict(zip(g.receives, fresh))}
        return Prefix(g.site, loc, fresh, go(g.body, env2))

    return go(t, {})


# --- structural rules: flattening, Nil identity, scope minimization ----------


def _snf(t: Species) -> Species:
    if isinstance(t, (Nil, Call)):
        return t
    if isinstance(t, Sum):
        guards = tuple(
            Prefix(g.site, g.location, g.receives, _snf(g.body)) for g in t.guards
        )
        return Sum(guards) if guards else NIL
    if isinstance(t, Par):
        parts: list[Species] = []
        for p in t.parts:
            q = _snf(p)
            if isinstance(q, Nil):
                continue
            if isinstance(q, Par):
                parts.extend(q.parts)
            else:
                parts.append(q)
        if not parts:
            return NIL
        if len(parts) == 1:
            return parts[0]
        return Par(tuple(parts))
    if isinstance(t, New):
        body = _snf(t.body)
        binders = t.binders
        while isinstance(body, New):  # collapse nested restrictions
            binders = binders + body.binders
            body = body.body
        free = free_locations(body)
        kept = tuple(b for b in binders if b in free)
        if not kept:
            return body
        return _distribute_new(kept, body)
    raise TypeError(t)


def _distribute_new(binders: tuple[str, ...], body: Species) -> Species:
    """Minimize restriction scope over the parallel components of body.

    Components are grouped by the connected components of the graph linking
    parts that share a restricted location; this grouping is what makes the
    prime decomposition fall out of the canonical form.
    """
    if not isinstance(body, Par):
        return New(binders, body)
    parts = body.parts
    uses = [free_locations(p) & set(binders) for p in parts]
    parent = list(range(len(parts)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[str, int] = {}
    for i, used in enumerate(uses):
        for b in used:
            if b in owner:
                ri, rj = find(i), find(owner[b])
                if ri != rj:
                    parent[ri] = rj
            else:
                owner[b] = i

    groups: dict[int, list[int]] = {}
    for i in range(len(parts)):
        groups.setdefault(find(i), []).append(i)

    out: list[Species] = []
    for members in groups.values():
        used = set().union(*(uses[i] for i in members))
        ordered = tuple(b for b in binders if b in used)
        if len(members) == 1:
            inner: Species = parts[members[0]]
        else:
            inner = Par(tuple(parts[i] for i in members))
        if ordered:
            # re-run _snf in case the group is a single part that is
            # itself a restriction (collapses into one binder list)
            out.append(_snf(New(ordered, inner)) if isinstance(inner, New) else New(ordered, inner))
        else:
            out.append(inner)
    if len(out) == 1:
        return out[0]
    flat: list[Species] = []
    for p in out:
        if isinstance(p, Par):
            flat.extend(p.parts)
        else:
            flat.append(p)
    return Par(tuple(flat))


# --- ordering and binder numbering -------------------------------------------


def _bound_names(t: Species) -> set[str]:
    out: set[str] = set()

    def go(t: Species) -> None:
        if isinstance(t, Sum):
            for g in t.guards:
                out.update(g.receives)
                go(g.body)
        elif isinstance(t, Par):
            for p in t.parts:
                go(p)
        elif isinstance(t, New):
            out.update(t.binders)
            go(t.body)

    go(t)
    return out


def _sort(t: Species, masked: bool) -> Species:
    bound = frozenset(_bound_names(t)) if masked else frozenset()

    def key(x: Species) -> str:
        return _ser(x, mask=masked, bound=bound)

    def go(t: Species) -> Species:
        if isinstance(t, (Nil, Call)):
            return t
        if isinstance(t, Sum):
            guards = [Prefix(g.site, g.location, g.receives, go(g.body)) for g in t.guards]
            guards.sort(key=lambda g: _ser_prefix(g, masked, bound))
            return Sum(tuple(guards))
        if isinstance(t, Par):
            parts = sorted((go(p) for p in t.parts), key=key)
            return Par(tuple(parts))
        if isinstance(t, New):
            return New(t.binders, go(t.body))
        raise TypeError(t)

    return go(t)


def _first_uses(t: Species, targets: set[str], shadow: set[str], acc: list[str]) -> None:
    """Collect targets in order of first free occurrence (serialization order)."""

    def hit(name: str) -> None:
        if name in targets and name not in shadow and name not in acc:
            acc.append(name)

    if isinstance(t, Call):
        for a in t.args:
            hit(a)
    elif isinstance(t, Sum):
        for g in t.guards:
            if g.location is not None:
                hit(g.location)
            _first_uses(g.body, targets, shadow | set(g.receives), acc)
    elif isinstance(t, Par):
        for p in t.parts:
            _first_uses(p, targets, shadow, acc)
    elif isinstance(t, New):
        _first_uses(t.body, targets, shadow | set(t.binders), acc)


def _renumber(t: Species) -> Species:
    """Assign canonical names ℓ<d> to binders, d = enclosing binder count."""

    def go(t: Species, env: dict[str, str], depth: int) -> Species:
        if isinstance(t, Nil):
            return t
        if isinstance(t, Call):
            return Call(t.name, tuple(env.get(a, a) for a in t.args))
        if isinstance(t, Sum):
            return Sum(tuple(go_prefix(g, env, depth) for g in t.guards))
        if isinstance(t, Par):
            return Par(tuple(go(p, env, depth) for p in t.parts))
        if isinstance(t, New):
            order: list[str] = []
            _first_uses(t.body, set(t.binders), set(), order)
            for b in t.binders:  # defensive: unused binders keep binder order
                if b not in order:
                    order.append(b)
            names = tuple(f"ℓ{depth + i}" for i in range(len(order)))
            env2 = {**env, **dict(zip(order, names))}
            return New(names, go(t.body, env2, depth + len(order)))
        raise TypeError(t)

    def go_prefix(g: Prefix, env: dict[str, str], depth: int) -> Prefix:
        loc = g.location if g.location is None else env.get(g.location, g.location)
        names = tuple(f"ℓ{depth + i}" for i in range(len(g.receives)))
        env2 = {**env, **dict(zip(g.receives, names))}
        return Prefix(g.site, loc, names, go(g.body, env2, depth + len(names)))

    return go(t, {}, 0)
