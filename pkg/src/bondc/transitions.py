"""The species-level labelled multi-transition system.

A transition says: this species can take part in a reaction by consuming a
cluster of sites at some location, becoming an abstraction (a species with
not-yet-created bound locations).  Transitions at the same named location
combine across parallel components; a restriction turns internal multi-site
combinations at its location into ambient transitions, and discards the
single-site ones (a bound site cannot react with the outside on its own).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional

from .congruence import normalize, serialize
from .terms import (
    AMBIENT,
    Abstraction,
    Call,
    Cluster,
    ModelError,
    New,
    Nil,
    Par,
    Species,
    SpeciesDef,
    Sum,
    rename_locations,
)


class UnguardedRecursionError(ModelError):
    def __init__(self, name: str):
        super().__init__(
            f"unfold depth exceeded at species '{name}': "
            "definitions appear to recurse without a guard",
            code="UNBOUNDED",
        )


@dataclass(frozen=True)
class Transition:
    cluster: Cluster
    location: Optional[str]  # None = ambient
    target: Abstraction  # always canonical (placeholder binders)


def _placeholders(n: int) -> tuple[str, ...]:
    return tuple(f"?a{i}" for i in range(n))


def canonical_abstraction(f: Abstraction) -> Abstraction:
    """Positional alpha-normal form: binders become ?a0, ?a1, ..."""
    ph = _placeholders(f.arity)
    body = rename_locations(f.body, dict(zip(f.binders, ph)))
    return Abstraction(ph, normalize(body))


def colocate(f: Abstraction, g: Abstraction) -> Abstraction:
    """Join two open reaction products, sharing bound locations by position."""
    n = max(f.arity, g.arity)
    ph = _placeholders(n)
    fb = rename_locations(f.body, dict(zip(f.binders, ph)))
    gb = rename_locations(g.body, dict(zip(g.binders, ph)))
    return canonical_abstraction(Abstraction(ph, Par((fb, gb))))


def restrict_abstraction(names: tuple[str, ...], f: Abstraction) -> Abstraction:
    """Push a restriction through an abstraction: (nu l)(m)A = (m)(nu l)A."""
    if not names:
        return canonical_abstraction(f)
    return canonical_abstraction(Abstraction(f.binders, New(names, f.body)))


def commit(f: Abstraction) -> Species:
    """Close an abstraction by restricting its bound locations."""
    if not f.binders:
        return normalize(f.body)
    return normalize(New(f.binders, f.body))


class TransitionSystem:
    """Memoized transition computation over a fixed set of definitions."""

    def __init__(self, defs: Mapping[str, SpeciesDef], depth_limit: int = 64):
        self.defs = defs
        self.depth_limit = depth_limit
        self._cache: dict[str, Counter] = {}

    def transitions(self, t: Species) -> Counter:
        key = serialize(t)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._transitions(t, self.depth_limit)
            self._cache[key] = hit
        return hit

    def ambient(self, t: Species) -> Counter:
        return Counter(
            {tr: m for tr, m in self.transitions(t).items() if tr.location is AMBIENT}
        )

    def _transitions(self, t: Species, depth: int) -> Counter:
        out: Counter = Counter()
        if isinstance(t, Nil):
            return out
        if isinstance(t, Sum):
            for g in t.guards:
                target = canonical_abstraction(Abstraction(g.receives, g.body))
                out[Transition((g.site,), g.location, target)] += 1
            return out
        if isinstance(t, Call):
            if depth <= 0:
                raise UnguardedRecursionError(t.name)
            sd = self.defs[t.name]
            body = rename_locations(sd.body, dict(zip(sd.params, t.args)))
            return self._transitions(body, depth - 1)
        if isinstance(t, Par):
            return self._par_transitions(t.parts, depth)
        if isinstance(t, New):
            inner = self._transitions(t.body, depth)
            bound = set(t.binders)
            for tr, m in inner.items():
                if tr.location not in bound:
                    tgt = restrict_abstraction(t.binders, tr.target)
                    out[Transition(tr.cluster, tr.location, tgt)] += m
                elif len(tr.cluster) >= 2:
                    # completed internal combination: surface at ambient
                    tgt = restrict_abstraction(t.binders, tr.target)
                    out[Transition(tr.cluster, AMBIENT, tgt)] += m
                # single bound site: dropped, it cannot react on its own
            return out
        raise TypeError(t)

    def _par_transitions(self, parts: tuple[Species, ...], depth: int) -> Counter:
        sub = [self._transitions(p, depth) for p in parts]
        out: Counter = Counter()
        n = len(parts)

        def with_rest(target: Abstraction, used: set[int]) -> Abstraction:
            rest = tuple(parts[j] for j in range(n) if j not in used)
            if not rest:
                return target
            rest_abs = Abstraction((), rest[0] if len(rest) == 1 else Par(rest))
            return colocate(target, rest_abs)

        for i, trs in enumerate(sub):
            for tr, m in trs.items():
                out[Transition(tr.cluster, tr.location, with_rest(tr.target, {i}))] += m

        # Com: combine one transition each from >= 2 parts at a shared
        # named location (never at ambient, never twice from one part)
        locs = sorted(
            {tr.location for trs in sub for tr in trs if tr.location is not None}
        )
        for loc in locs:
            per_part = [
                [(tr, m) for tr, m in trs.items() if tr.location == loc] for trs in sub
            ]
            for combo in itertools.product(*[[None, *pp] for pp in per_part]):
                chosen = [(i, tr, m) for i, pair in enumerate(combo) if pair for tr, m in [pair]]
                if len(chosen) < 2:
                    continue
                sites: list[str] = []
                mult = 1
                target: Optional[Abstraction] = None
                for _, tr, m in chosen:
                    sites.extend(tr.cluster)
                    mult *= m
                    target = tr.target if target is None else colocate(target, tr.target)
                target = with_rest(target, {i for i, _, _ in chosen})
                out[Transition(tuple(sorted(sites)), loc, target)] += mult
        return out


def transitions(
    t: Species, defs: Mapping[str, SpeciesDef], depth_limit: int = 64
) -> Counter:
    return TransitionSystem(defs, depth_limit).transitions(t)


def format_transition(source: Species, tr: Transition, mult: int) -> str:
    cluster = "|".join(tr.cluster)
    loc = tr.location if tr.location is not None else "⊤"
    binders = f"({','.join(tr.target.binders)})" if tr.target.binders else "()"
    return (
        f"{serialize(source)}  --[{cluster}]@{loc}-->  "
        f"{binders}{serialize(tr.target.body)}  x{mult}"
    )
