"""Random expression trees for soundness checks of the band arithmetic.

A tree is a nested tuple: ``("var", k)``, ``("num", v)``, ``("const", lo, hi)``
or ``(op, left, right)`` with op in ``+ - * /``.  Leaves use short dyadic
numbers so that exact rational evaluation is cheap.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, Iterator, Sequence, Tuple

import numpy as np

from ivalkit import fbia as fb
from ivalkit.classical import Interval, IntervalError

try:  # exact rationals; gmpy2 is much faster when present
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction

OPS = ("+", "-", "*", "/")
GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)


def random_tree(gen: np.random.Generator, nparams: int, depth: int):
    if depth == 0 or gen.random() < 0.3:
        kind = gen.random()
        if kind < 0.6:
            return ("var", int(gen.integers(nparams)))
        if kind < 0.85:
            return ("num", int(gen.integers(-8, 9)) / 4)
        lo = int(gen.integers(-8, 8)) / 4
        return ("const", lo, lo + int(gen.integers(1, 5)) / 4)
    op = OPS[int(gen.integers(4))]
    return (op, random_tree(gen, nparams, depth - 1), random_tree(gen, nparams, depth - 1))


def constants(tree) -> list:
    if tree[0] == "const":
        return [tree]
    if tree[0] in OPS:
        return constants(tree[1]) + constants(tree[2])
    return []


def fb_eval(tree):
    tag = tree[0]
    if tag == "var":
        return fb.embed_param(tree[1])
    if tag == "num":
        return fb.constant(tree[1])
    if tag == "const":
        return fb.embed_classical(Interval(tree[1], tree[2]))
    left, right = fb_eval(tree[1]), fb_eval(tree[2])
    return {"+": fb.add, "-": fb.sub, "*": fb.mul, "/": fb.div}[tag](left, right)


def exact_eval(tree, point: Sequence, picks: Dict[int, object]):
    """Exact value, or ``None`` where a divisor vanishes."""
    tag = tree[0]
    if tag == "var":
        return point[tree[1]]
    if tag == "num":
        return Q(tree[1])
    if tag == "const":
        lo, hi = Q(tree[1]), Q(tree[2])
        return picks.get(id(tree), (lo + hi) / 2)
    left = exact_eval(tree[1], point, picks)
    right = exact_eval(tree[2], point, picks)
    if left is None or right is None:
        return None
    if tag == "+":
        return left + right
    if tag == "-":
        return left - right
    if tag == "*":
        return left * right
    return None if right == 0 else left / right


def realizations(tree) -> Iterator[Dict[int, object]]:
    """Endpoint and midpoint choices for every interval constant (capped)."""
    leaves = constants(tree)[:4]
    choices = [
        (Q(c[1]), Q(c[2]), (Q(c[1]) + Q(c[2])) / 2)
        for c in leaves
    ]
    for combo in itertools.product(*choices):
        yield {id(c): v for c, v in zip(leaves, combo)}


def violations(tree, nparams: int) -> Tuple[bool, int]:
    """Evaluate ``tree`` as a band and count grid points it fails to enclose.

    Returns ``(evaluated, count)``; ``evaluated`` is false when the band
    arithmetic rejected the tree (a divisor range containing zero).
    """
    try:
        band = fb_eval(tree)
    except (IntervalError, ZeroDivisionError):
        return False, 0
    bad = 0
    for raw in itertools.product(GRID, repeat=nparams):
        point = [Q(v) for v in raw]
        where = {k: v for k, v in enumerate(raw)}
        lo, hi = (Q(v) for v in band.exact_at(where))
        for picks in realizations(tree):
            value = exact_eval(tree, point, picks)
            if value is not None and not (lo <= value <= hi):
                bad += 1
    return True, bad
