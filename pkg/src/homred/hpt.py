"""The two homological perturbation lemmas as reusable operator machinery.

A Contraction is five maps (small/big differentials, inject, project,
homotopy) with the identities p i = id and d h + h d = id - i p.  Operators
are plain callables on elements supporting +, -, .scale and .is_zero; all
verification is probe-based on finite slice bases, exactly over Q.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, List, Optional, Sequence

Op = Callable


class ContractViolation(Exception):
    """A contraction identity failed on a probe element."""


class DivergenceError(Exception):
    """A perturbation series failed to terminate."""

    def __init__(self, message: str, element=None):
        super().__init__(message)
        self.element = element


@dataclass
class Complex:
    """A cochain complex probed through finite slice bases."""

    tag: str
    differential: Op
    degree: int = 1
    slice_basis: Optional[Callable[..., Sequence]] = None

    def basis(self, **caps) -> Sequence:
        if self.slice_basis is None:
            return ()
        return self.slice_basis(**caps)


@dataclass
class Contraction:
    small: Complex
    big: Complex
    inject: Op
    project: Op
    homotopy: Op
    sc1: bool = False  # h h = 0
    sc2: bool = False  # h i = 0
    sc3: bool = False  # p h = 0

    def side_conditions(self):
        return (self.sc1, self.sc2, self.sc3)


def _is_zero(x) -> bool:
    return x.is_zero() if hasattr(x, "is_zero") else not x


def verify_contraction(c: Contraction, big_basis: Iterable,
                       small_basis: Iterable = (),
                       check_flags: bool = True) -> List[str]:
    """All contraction identities on the given probe bases; returns failures."""
    bad: List[str] = []
    dY, dX = c.big.differential, c.small.differential
    i, p, h = c.inject, c.project, c.homotopy
    for x in small_basis:
        if not _is_zero(dX(dX(x))):
            bad.append(f"d_X^2 != 0 on {x!r}")
        if not _is_zero(p(i(x)) - x):
            bad.append(f"p i != id on {x!r}")
        if not _is_zero(dY(i(x)) - i(dX(x))):
            bad.append(f"i not a chain map on {x!r}")
    for y in big_basis:
        if not _is_zero(dY(dY(y))):
            bad.append(f"d_Y^2 != 0 on {y!r}")
        if not _is_zero(dY(h(y)) + h(dY(y)) + i(p(y)) - y):
            bad.append(f"homotopy identity fails on {y!r}")
        if not _is_zero(dX(p(y)) - p(dY(y))):
            bad.append(f"p not a chain map on {y!r}")
        if check_flags:
            if c.sc1 and not _is_zero(h(h(y))):
                bad.append(f"sc1 (h h = 0) fails on {y!r}")
            if c.sc3 and not _is_zero(p(h(y))):
                bad.append(f"sc3 (p h = 0) fails on {y!r}")
    if check_flags and c.sc2:
        for x in small_basis:
            if not _is_zero(h(i(x))):
                bad.append(f"sc2 (h i = 0) fails on {x!r}")
    return bad


def normalize_side_conditions(c: Contraction,
                              probe_big: Iterable = (),
                              probe_small: Iterable = ()) -> Contraction:
    """Replace h so that all three side conditions hold.

    First h' = (dh+hd) h (dh+hd) enforces h i = 0 and p h = 0, then
    h'' = h' d h' kills the square.  The input must already be a contraction;
    that is checked on the probe slices.
    """
    bad = verify_contraction(c, probe_big, probe_small, check_flags=False)
    if bad:
        raise ContractViolation("; ".join(bad))
    dY, h = c.big.differential, c.homotopy

    def hprime(y):
        z = y - c.inject(c.project(y))  # dh+hd = id - ip
        z = h(z)
        return z - c.inject(c.project(z))

    def hsecond(y):
        return hprime(dY(hprime(y)))

    return replace(c, homotopy=hsecond, sc1=True, sc2=True, sc3=True)


def _geometric(t: Op, h: Op, y, max_iters: int):
    """Sum_k (-1)^k (t h + h t)^k y, stopping when the term dies."""
    total = y
    term = y
    for k in range(1, max_iters + 1):
        term = t(h(term)) + h(t(term))
        if _is_zero(term):
            return total
        total = total + term.scale((-1) ** k)
    raise DivergenceError(
        f"perturbation series did not terminate within {max_iters} steps",
        element=y)


def perturb_keep_p(c: Contraction, t: Op, t_small: Optional[Op] = None,
                   max_iters: int = 64) -> Contraction:
    """Perturbation lemma, version keeping the projection.

    Needs sc3 (p h = 0).  The perturbed data are
    H = h (id + t h + h t)^{-1} and I x = i x - H(t i x - i t_X x), with the
    small differential perturbed by t_X = p t i.
    """
    if not c.sc3:
        raise ContractViolation("perturb_keep_p requires side condition p h = 0")
    i, p, h = c.inject, c.project, c.homotopy
    tX = t_small if t_small is not None else (lambda x: p(t(i(x))))

    def H(y):
        return h(_geometric(t, h, y, max_iters))

    def I(x):
        ix = i(x)
        return ix - H(t(ix) - i(tX(x)))

    dY, dX = c.big.differential, c.small.differential
    big = replace(c.big, differential=lambda y: dY(y) + t(y))
    small = replace(c.small, differential=lambda x: dX(x) + tX(x))
    all_sc = c.sc1 and c.sc2 and c.sc3
    return Contraction(small, big, inject=I, project=p, homotopy=H,
                       sc1=all_sc, sc2=all_sc, sc3=True)


def perturb_keep_i(c: Contraction, t: Op, t_small: Optional[Op] = None,
                   max_iters: int = 64) -> Contraction:
    """Perturbation lemma, version keeping the injection.

    Needs sc2 (h i = 0) and t i = i t_X.  The perturbed data are
    H' = h (id + t h + h t)^{-1} and P = p (id + t h + h t)^{-1}.
    """
    if not c.sc2:
        raise ContractViolation("perturb_keep_i requires side condition h i = 0")
    i, p, h = c.inject, c.project, c.homotopy
    tX = t_small if t_small is not None else (lambda x: p(t(i(x))))

    def H(y):
        return h(_geometric(t, h, y, max_iters))

    def P(y):
        return p(_geometric(t, h, y, max_iters))

    dY, dX = c.big.differential, c.small.differential
    big = replace(c.big, differential=lambda y: dY(y) + t(y))
    small = replace(c.small, differential=lambda x: dX(x) + tX(x))
    all_sc = c.sc1 and c.sc2 and c.sc3
    return Contraction(small, big, inject=i, project=P, homotopy=H,
                       sc1=all_sc, sc2=True, sc3=all_sc)
