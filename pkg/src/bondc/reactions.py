"""Mixture-level semantics: reachable primes and reaction extraction.

Reactions are found by matching each affinity pattern's clusters against the
ambient transitions of the reachable primes, slot by slot.  The rate of a
matched tuple is the kinetic law applied to the total cluster concentrations,
divided by those concentrations and multiplied back by each participant's own
contribution; a slot whose cluster is matched by a single (prime, transition)
pair cancels exactly.  Repeated clusters in a pattern contribute the standard
1/multiplicity! symmetry correction, so e.g. a homodimerization under
mass-action k fires at (1/2) k [A]^2.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import expr as ex
from .congruence import primes, serialize
from .terms import AffinityEntry, Call, Cluster, Model, Species
from .transitions import Transition, TransitionSystem, colocate, commit


class UnboundedError(RuntimeError):
    code = "UNBOUNDED"

    def __init__(self, cap: int):
        super().__init__(
            f"more than {cap} reachable prime species; the model may generate "
            "an unbounded species set (polymerisation-like behaviour)"
        )


@dataclass
class PrimeIndex:
    """Reachable canonical primes in deterministic discovery order."""

    primes: list[Species] = field(default_factory=list)
    names: list[str] = field(default_factory=list)
    by_name: dict[str, int] = field(default_factory=dict)

    def add(self, p: Species) -> tuple[int, bool]:
        key = serialize(p)
        idx = self.by_name.get(key)
        if idx is not None:
            return idx, False
        idx = len(self.primes)
        self.primes.append(p)
        self.names.append(key)
        self.by_name[key] = idx
        return idx, True

    def index_of(self, p: Species) -> int:
        return self.by_name[serialize(p)]

    def __len__(self) -> int:
        return len(self.primes)


# one matched slot: (prime index, its transition, multiplicity of that entry)
Match = tuple[int, Transition, int]


@dataclass(frozen=True)
class Reaction:
    reactants: tuple[int, ...]  # sorted prime indices, with repetition
    products: tuple[int, ...]
    rate: ex.Expr
    provenance: str

    def stoichiometry(self, n_primes: int) -> list[int]:
        nu = [0] * n_primes
        for i in self.reactants:
            nu[i] -= 1
        for i in self.products:
            nu[i] += 1
        return nu


@dataclass
class ReactionSystem:
    index: PrimeIndex
    reactions: list[Reaction]
    model: Model

    @property
    def prime_names(self) -> list[str]:
        return self.index.names


def initial_mixture(model: Model, index: PrimeIndex) -> list[float]:
    """Initial concentration vector over the prime index."""
    x = [0.0] * len(index)
    for conc, name in model.mixture:
        for p in primes(Call(name, ())):
            x[index.index_of(p)] += conc
    return x


def _slot_matches(
    ts: TransitionSystem, index: PrimeIndex, cluster: Cluster
) -> list[Match]:
    out: list[Match] = []
    for i, p in enumerate(index.primes):
        for tr, m in sorted(ts.ambient(p).items(), key=lambda kv: repr(kv[0])):
            if tr.cluster == cluster:
                out.append((i, tr, m))
    return out


def _tuple_products(matches: tuple[Match, ...]) -> list[Species]:
    target = None
    for _, tr, _ in matches:
        target = tr.target if target is None else colocate(target, tr.target)
    return primes(commit(target))


def reachable_primes(
    model: Model, cap: int = 512, ts: Optional[TransitionSystem] = None
) -> PrimeIndex:
    """Least fixpoint of the initial primes under all affinity reactions."""
    ts = ts or TransitionSystem(model.species)
    index = PrimeIndex()
    for conc, name in model.mixture:
        for p in primes(Call(name, ())):
            index.add(p)
    if len(index) > cap:
        raise UnboundedError(cap)

    changed = True
    while changed:
        changed = False
        for entry in model.affinity:
            slot_lists = [_slot_matches(ts, index, c) for c in entry.pattern]
            if any(not ms for ms in slot_lists):
                continue
            for combo in itertools.product(*slot_lists):
                for p in _tuple_products(combo):
                    _, new = index.add(p)
                    if new:
                        changed = True
                        if len(index) > cap:
                            raise UnboundedError(cap)
    return index


def cluster_concentrations(
    ts: TransitionSystem, index: PrimeIndex
) -> dict[Cluster, ex.Expr]:
    """Per-cluster total concentration as a linear form over prime variables."""
    acc: dict[Cluster, Counter] = {}
    for i, p in enumerate(index.primes):
        for tr, m in ts.ambient(p).items():
            acc.setdefault(tr.cluster, Counter())[i] += m
    out: dict[Cluster, ex.Expr] = {}
    for cluster, coeffs in acc.items():
        out[cluster] = ex.total(
            ex.mul(ex.const(mult), ex.Var(index.names[i]))
            for i, mult in sorted(coeffs.items())
        )
    return out


def _entry_provenance(entry: AffinityEntry) -> str:
    pat = " || ".join("&".join(c) for c in entry.pattern)
    params = ",".join(ex._fmt_num(v) for v in entry.law_params)
    return f"{pat} at {entry.law_name}({params})"


def extract_reactions(
    model: Model,
    index: PrimeIndex,
    ts: Optional[TransitionSystem] = None,
) -> ReactionSystem:
    ts = ts or TransitionSystem(model.species)
    conc = cluster_concentrations(ts, index)
    reactions: list[Reaction] = []
    merged: dict[tuple[tuple[int, ...], tuple[int, ...], str], int] = {}

    for entry in model.affinity:
        law = model.laws[entry.law_name]
        prov = _entry_provenance(entry)
        slot_lists = [_slot_matches(ts, index, c) for c in entry.pattern]
        if any(not ms for ms in slot_lists):
            model.warnings.append(f"affinity entry '{prov}' matches no species")
            continue
        sym = 1
        for _, count in Counter(entry.pattern).items():
            sym *= math.factorial(count)
        a_exprs = [conc[c] for c in entry.pattern]

        for combo in itertools.product(*slot_lists):
            reactants = tuple(sorted(i for i, _, _ in combo))
            products = tuple(
                sorted(index.index_of(p) for p in _tuple_products(combo))
            )
            rate = _tuple_rate(law, entry.law_params, combo, slot_lists, a_exprs, index)
            if sym != 1:
                rate = ex.mul(ex.const(1.0 / sym), rate)
            key = (reactants, products, prov)
            if key in merged:
                r = reactions[merged[key]]
                reactions[merged[key]] = Reaction(
                    r.reactants, r.products, ex.add(r.rate, rate), r.provenance
                )
            else:
                merged[key] = len(reactions)
                reactions.append(Reaction(reactants, products, rate, prov))

    return ReactionSystem(index, reactions, model)


def _tuple_rate(
    law,
    params: tuple[float, ...],
    combo: tuple[Match, ...],
    slot_lists: list[list[Match]],
    a_exprs: list[ex.Expr],
    index: PrimeIndex,
) -> ex.Expr:
    if law.variadic:
        # mass action: f(a_1..a_m)/prod(a_j) == k, so every slot reduces to
        # its own participant's contribution and the rate is a monomial
        factors: list[ex.Expr] = [ex.const(params[0])]
        for i, _, mult in combo:
            factors.append(ex.mul(ex.const(mult), ex.Var(index.names[i])))
        return ex.prod(factors)
    rate = law.apply(params, a_exprs)
    for j, (i, _, mult) in enumerate(combo):
        if len(slot_lists[j]) == 1:
            continue  # sole match: (mult * x_i) / a_j == 1 exactly
        share = ex.mul(ex.const(mult), ex.Var(index.names[i]))
        rate = ex.mul(rate, ex.div(share, a_exprs[j]))
    return rate


def build_reaction_system(model: Model, cap: int = 512) -> ReactionSystem:
    ts = TransitionSystem(model.species)
    index = reachable_primes(model, cap=cap, ts=ts)
    return extract_reactions(model, index, ts=ts)


def reaction_system_json(rs: ReactionSystem) -> dict:
    return {
        "primes": rs.prime_names,
        "reactions": [
            {
                "reactants": list(r.reactants),
                "products": list(r.products),
                "rate": ex.to_json(r.rate),
                "provenance": r.provenance,
            }
            for r in rs.reactions
        ],
    }
