"""Multidegrees, parities and Koszul signs.

Every other module delegates its sign bookkeeping to this one: the sign of a
permutation of graded factors is computed here and nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple


def parity(degree: int) -> int:
    """Parity bit of an integer degree (0 = even, 1 = odd)."""
    return degree & 1


@dataclass(frozen=True)
class Multidegree:
    """An ordered tuple of integer degrees, one per graded factor."""

    degrees: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.degrees)

    def shifted(self, j: int = 1) -> "Multidegree":
        """Add j to every entry (degree shift of each factor)."""
        return Multidegree(tuple(d + j for d in self.degrees))

    def permuted(self, perm: Sequence[int]) -> "Multidegree":
        """Right action: entry i of the result is degrees[perm[i]]."""
        return Multidegree(tuple(self.degrees[p] for p in perm))


def koszul_sign(perm: Sequence[int], degrees) -> int:
    """Sign picked up when x_0 ... x_{n-1} is reordered to x_{perm[0]} ...

    ``perm`` is a permutation of range(n) in one-line notation: slot i of the
    output holds factor perm[i].  An adjacent transposition of factors with
    degrees d, e contributes (-1)**(d*e); the general sign is accumulated by
    bubble-sorting perm back to the identity, which is O(n^2) and fine at the
    sizes we use (n <= ~12).
    """
    if isinstance(degrees, Multidegree):
        degrees = degrees.degrees
    degrees = tuple(degrees)
    perm = list(perm)
    if sorted(perm) != list(range(len(degrees))):
        raise ValueError(
            f"permutation {perm!r} does not act on {len(degrees)} slots"
        )
    sign = 1
    # bubble sort; each swap of adjacent slots i, i+1 exchanges the factors
    # currently sitting there, whose degrees are degrees[perm[i]] etc.
    n = len(perm)
    for top in range(n):
        for i in range(n - 1):
            if perm[i] > perm[i + 1]:
                if (degrees[perm[i]] & 1) and (degrees[perm[i + 1]] & 1):
                    sign = -sign
                perm[i], perm[i + 1] = perm[i + 1], perm[i]
    return sign


@dataclass(frozen=True)
class SignedPermutation:
    """A permutation together with the Koszul sign it carries."""

    permutation: Tuple[int, ...]
    sign: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @classmethod
    def from_degrees(cls, perm: Sequence[int], degrees) -> "SignedPermutation":
        return cls(tuple(perm), koszul_sign(perm, degrees))

    def compose(self, other: "SignedPermutation") -> "SignedPermutation":
        """(self o other), signs multiplying per the composition rule."""
        perm = tuple(other.permutation[p] for p in self.permutation)
        return SignedPermutation(perm, self.sign * other.sign)


def merge_sign(
    left_exps: Sequence[int],
    right_exps: Sequence[int],
    parities: Sequence[int],
) -> int:
    """Sign for merging two canonically ordered monomials into one.

    Slot j of the right monomial must move left past every odd factor of the
    left monomial sitting in a slot strictly greater than j.  Exponents are
    aligned with canonical slot order; ``parities[k]`` is the parity of the
    generator in slot k.
    """
    sign = 1
    # odd_above[j] = number of odd left factors in slots > j, taken mod 2
    odd_above = 0
    for j in range(len(left_exps) - 1, -1, -1):
        r = right_exps[j] * parities[j]
        if (r & 1) and (odd_above & 1):
            sign = -sign
        odd_above += left_exps[j] * parities[j]
    return sign
