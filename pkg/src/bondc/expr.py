"""Symbolic rate expressions.

Reaction rates and ODE right hand sides are built from a tiny expression
language with node kinds const/var/add/sub/mul/div.  The smart constructors
fold constants eagerly so that e.g. mass-action rates come out as plain
monomials.  Division follows the continuous extension 0/0 = 0 used by the
rate semantics; x/0 with x != 0 is a domain error at evaluation time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union


class DomainError(ValueError):
    """A rate expression left its domain (division blow-up)."""

    code = "DOMAIN"


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Bin:
    op: str  # "add" | "sub" | "mul" | "div"
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Bin]

ZERO = Const(0.0)
ONE = Const(1.0)


def const(v: float) -> Const:
    return Const(float(v))


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if isinstance(a, Const) and a.value == 0.0:
        return b
    if isinstance(b, Const) and b.value == 0.0:
        return a
    return Bin("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if isinstance(b, Const) and b.value == 0.0:
        return a
    return Bin("sub", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if isinstance(b, Const):
        # keep constants on the left for readable renderings
        a, b = b, a
    if isinstance(a, Const):
        if a.value == 0.0:
            return ZERO
        if a.value == 1.0:
            return b
        # pull the constant through nested products so adjacent constants
        # fold: c * (l * r) -> (c * l) * r
        if isinstance(b, Bin) and b.op == "mul":
            return mul(mul(a, b.left), b.right)
        if isinstance(b, Bin) and b.op == "div":
            return div(mul(a, b.left), b.right)
    return Bin("mul", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if b.value == 1.0:
            return a
        if isinstance(a, Const):
            if a.value == 0.0 and b.value == 0.0:
                return ZERO
            if b.value == 0.0:
                raise DomainError("constant division by zero")
            return Const(a.value / b.value)
    if isinstance(a, Const) and a.value == 0.0:
        return ZERO
    if a == b:
        # x/x is only used for cancellation factors, where 0/0 := 0 would
        # apply anyway on the support boundary; folding to 1 matches the
        # continuous extension on the interior and keeps rates tidy.
        return ONE
    return Bin("div", a, b)


def prod(factors: Iterable[Expr]) -> Expr:
    out: Expr = ONE
    for f in factors:
        out = mul(out, f)
    return out


def total(terms: Iterable[Expr]) -> Expr:
    out: Expr = ZERO
    for t in terms:
        out = add(out, t)
    return out


def _guarded_div(num: float, den: float) -> float:
    if den == 0.0:
        if num == 0.0:
            return 0.0
        raise DomainError("division by zero")
    return num / den


def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    a = evaluate(e.left, env)
    b = evaluate(e.right, env)
    if e.op == "add":
        return a + b
    if e.op == "sub":
        return a - b
    if e.op == "mul":
        return a * b
    return _guarded_div(a, b)


def substitute(e: Expr, env: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions, refolding along the way."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return env.get(e.name, e)
    a = substitute(e.left, env)
    b = substitute(e.right, env)
    return {"add": add, "sub": sub, "mul": mul, "div": div}[e.op](a, b)


def variables(e: Expr) -> set[str]:
    if isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {e.name}
    return variables(e.left) | variables(e.right)


def compile_exprs(
    exprs: list[Expr], var_index: Mapping[str, int] | Iterable[str]
) -> Callable[[list[float]], list[float]]:
    """Compile expressions into a single fast function of a value vector.

    Used by the simulation inner loops; semantics identical to evaluate().
    ``var_index`` maps variable names to positions in the value vector and
    may be given as a mapping or as an ordered sequence of names.
    """
    if not isinstance(var_index, Mapping):
        var_index = {n: i for i, n in enumerate(var_index)}

    def emit(e: Expr) -> str:
        if isinstance(e, Const):
            return repr(e.value)
        if isinstance(e, Var):
            return f"c[{var_index[e.name]}]"
        a, b = emit(e.left), emit(e.right)
        op = {"add": "+", "sub": "-", "mul": "*"}.get(e.op)
        if op is not None:
            return f"({a}{op}{b})"
        return f"_gdiv({a},{b})"

    body = ",".join(emit(e) for e in exprs) or ""
    src = f"lambda c: [{body}]"
    return eval(src, {"_gdiv": _guarded_div})  # noqa: S307 - generated source


def render(e: Expr, var_fmt: Callable[[str], str] = lambda n: n) -> str:
    """Render with minimal parentheses, deterministic."""

    def prec(x: Expr) -> int:
        if isinstance(x, (Const, Var)):
            return 3
        return {"add": 1, "sub": 1, "mul": 2, "div": 2}[x.op]

    def go(x: Expr) -> str:
        if isinstance(x, Const):
            return _fmt_num(x.value)
        if isinstance(x, Var):
            return var_fmt(x.name)
        sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[x.op]
        lp, rp = prec(x.left), prec(x.right)
        ls = go(x.left)
        rs = go(x.right)
        if lp < prec(x):
            ls = f"({ls})"
        # right operand needs parens on ties for the non-associative ops
        if rp < prec(x) or (rp == prec(x) and x.op in ("sub", "div")):
            rs = f"({rs})"
        return f"{ls}{sym}{rs}"

    return go(e)


def render_latex(e: Expr, var_fmt: Callable[[str], str] = lambda n: n) -> str:
    def go(x: Expr, ctx: str) -> str:
        # ctx "sum": sums may appear bare; ctx "prod": sums need parentheses
        if isinstance(x, Const):
            return _fmt_num(x.value)
        if isinstance(x, Var):
            return var_fmt(x.name)
        if x.op == "div":
            return r"\frac{%s}{%s}" % (go(x.left, "sum"), go(x.right, "sum"))
        if x.op == "mul":
            return r"%s \cdot %s" % (go(x.left, "prod"), go(x.right, "prod"))
        sym = "+" if x.op == "add" else "-"
        # the right operand of "-" must bind at least as tightly as a product
        s = "%s %s %s" % (go(x.left, "sum"), sym, go(x.right, "prod" if x.op == "sub" else "sum"))
        return r"\left(%s\right)" % s if ctx == "prod" else s

    return go(e, "sum")


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16 and not math.isinf(v):
        return str(int(v))
    return repr(v)


def to_json(e: Expr) -> dict:
    if isinstance(e, Const):
        return {"kind": "const", "value": e.value}
    if isinstance(e, Var):
        return {"kind": "var", "name": e.name}
    return {"kind": e.op, "left": to_json(e.left), "right": to_json(e.right)}


def from_json(d: dict) -> Expr:
    kind = d["kind"]
    if kind == "const":
        return Const(float(d["value"]))
    if kind == "var":
        return Var(d["name"])
    return Bin(kind, from_json(d["left"]), from_json(d["right"]))


def dumps(e: Expr) -> str:
    return json.dumps(to_json(e), sort_keys=True)
