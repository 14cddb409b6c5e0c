"""The example catalog: named reduction problems with expected verdicts.

Complex coordinates z_j = x_j + i y_j are represented by interleaved real
pairs; quadratic moment maps of unitary actions are entered through their
real quadratic forms.  Every entry validates its structure constants at
construction and carries rational sample points on the zero fibre.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .enveloping import LieData
from .koszul import Setup, SetupError

Half = Fraction(1, 2)


def _zero_f(n: int):
    return [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]


def _kahler_poisson(npairs: int):
    """{x_j, y_j} = 1 on interleaved pairs."""
    m = 2 * npairs
    pi = [[Fraction(0)] * m for _ in range(m)]
    for j in range(npairs):
        pi[2 * j][2 * j + 1] = Fraction(1)
        pi[2 * j + 1][2 * j] = Fraction(-1)
    return pi


def _cotangent_poisson(n: int):
    """{p_i, q_i} = 1 with coordinates (q_1..q_n, p_1..p_n)."""
    m = 2 * n
    pi = [[Fraction(0)] * m for _ in range(m)]
    for i in range(n):
        pi[n + i][i] = Fraction(1)
        pi[i][n + i] = Fraction(-1)
    return pi


def _pair_names(npairs: int):
    out = []
    for j in range(npairs):
        out += [f"x{j+1}", f"y{j+1}"]
    return out


def _circle_moment(npairs: int, coeffs: Sequence[Fraction]):
    """(1/2) sum c_j (x_j^2 + y_j^2) as an exponent dict."""
    m = 2 * npairs
    p = {}
    for j, c in enumerate(coeffs):
        if not c:
            continue
        for slot in (2 * j, 2 * j + 1):
            k = tuple(2 if i == slot else 0 for i in range(m))
            p[k] = Half * Fraction(c)
    return p


def harmonic_oscillator() -> Setup:
    return Setup(
        name="harmonic-oscillator",
        base_dim=2,
        poisson=_kahler_poisson(1),
        lie=LieData(_zero_f(1)),
        moment=[_circle_moment(1, [Fraction(1)])],
        weights=[[1]],
        points=[(0, 0)],
        expected={"equivariant": True, "cone_test": False,
                  "generating_hypothesis": False, "complete_intersection": True,
                  "full_rank_attained": False, "regular_stratum_empty": True},
        base_names=_pair_names(1),
    )


def free_particle() -> Setup:
    # J = p^2 / 2 on T*R with coordinates (q, p)
    return Setup(
        name="free-particle",
        base_dim=2,
        poisson=_cotangent_poisson(1),
        lie=LieData(_zero_f(1)),
        moment=[{(0, 2): Half}],
        weights=None,
        points=[(1, 0), (-3, 0)],
        expected={"equivariant": True, "cone_test": None,
                  "generating_hypothesis": False, "complete_intersection": True,
                  "full_rank_attained": False, "regular_stratum_empty": True},
        base_names=["q1", "p1"],
    )


def standard_example(A: Optional[Sequence[Sequence]] = None,
                     S: Optional[Sequence[Sequence]] = None) -> Setup:
    """Moment map of a one-parameter unitary subgroup on C^n.

    J = -(1/2) [sum A_ij (x_i y_j - y_i x_j) + S_ij (x_i x_j + y_i y_j)] for
    skew-hermitian A + iS; the default is S = diag(1, -1), the (1,-1)
    resonance on C^2.
    """
    if S is None:
        S = [[1, 0], [0, -1]]
    n = len(S)
    if A is None:
        A = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if Fraction(A[i][j]) != -Fraction(A[j][i]):
                raise SetupError("A must be antisymmetric")
            if Fraction(S[i][j]) != Fraction(S[j][i]):
                raise SetupError("S must be symmetric")
    m = 2 * n
    p: Dict[tuple, Fraction] = {}

    def add(slots: Sequence[int], c: Fraction):
        if not c:
            return
        k = [0] * m
        for s in slots:
            k[s] += 1
        k = tuple(k)
        v = p.get(k, Fraction(0)) + c
        if v:
            p[k] = v
        else:
            p.pop(k, None)

    for i in range(n):
        for j in range(n):
            a = Fraction(A[i][j])
            s = Fraction(S[i][j])
            if a:
                add([2 * i, 2 * j + 1], -Half * a)   # x_i y_j
                add([2 * i + 1, 2 * j], Half * a)    # -(-1/2) y_i x_j
            if s:
                add([2 * i, 2 * j], -Half * s)       # x_i x_j
                add([2 * i + 1, 2 * j + 1], -Half * s)
    weights = None
    if not any(any(r) for r in A) and all(
            S[i][j] == 0 for i in range(n) for j in range(n) if i != j):
        weights = [[-int(S[j][j]) for j in range(n)]]
    return Setup(
        name="standard-example",
        base_dim=m,
        poisson=_kahler_poisson(n),
        lie=LieData(_zero_f(1)),
        moment=[p],
        weights=weights,
        points=[(0,) * m, (1, 0, 1, 0) if n == 2 else (0,) * m],
        expected={"equivariant": True, "cone_test": True,
                  "generating_hypothesis": True, "complete_intersection": True,
                  "full_rank_attained": True, "regular_stratum_empty": False},
        base_names=_pair_names(n),
    )


def _so_n_basis(n: int) -> List[Tuple[int, int]]:
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def _so_n_structure(n: int):
    """[L_ab, L_cd] = d_bc L_ad - d_ac L_bd - d_bd L_ac + d_ad L_bc."""
    basis = _so_n_basis(n)
    index = {}
    for i, (a, b) in enumerate(basis):
        index[(a, b)] = (i, 1)
        index[(b, a)] = (i, -1)
    ell = len(basis)
    f = _zero_f(ell)

    def add(i, j, pair, sign):
        a, b = pair
        if a == b:
            return
        k, s = index[(a, b)]
        f[i][j][k] += Fraction(sign * s)

    for i, (a, b) in enumerate(basis):
        for j, (c, d) in enumerate(basis):
            if b == c:
                add(i, j, (a, d), 1)
            if a == c:
                add(i, j, (b, d), -1)
            if b == d:
                add(i, j, (a, c), -1)
            if a == d:
                add(i, j, (b, c), 1)
    return f, basis


def angular_momentum(n: int = 3) -> Setup:
    """One particle in dimension n with zero angular momentum."""
    f, basis = _so_n_structure(n)
    m = 2 * n
    moment = []
    for (a, b) in basis:
        moment.append({
            tuple(1 if i in (a, n + b) else 0 for i in range(m)): Fraction(1),
            tuple(1 if i in (b, n + a) else 0 for i in range(m)): Fraction(-1),
        })
    pts = []
    if n == 3:
        pts = [(1, 2, 3, 2, 4, 6), (1, 0, 0, 3, 0, 0),
               (0, 1, -1, 0, Fraction(1, 2), Fraction(-1, 2)),
               (0, 0, 0, 0, 0, 0)]
    return Setup(
        name="angular-momentum",
        base_dim=m,
        poisson=_cotangent_poisson(n),
        lie=LieData(f),
        moment=moment,
        weights=None,
        points=pts,
        expected={"equivariant": True, "cone_test": None,
                  "generating_hypothesis": True,
                  "complete_intersection": False,
                  "full_rank_attained": False, "regular_stratum_empty": True},
        base_names=[f"q{i+1}" for i in range(n)] + [f"p{i+1}" for i in range(n)],
    )


def m_particles(m: int = 2) -> Setup:
    """m particles in the plane with zero total angular momentum.

    Coordinates (q^1_i, q^2_i | p_1^i, p_2^i) per particle, cotangent blocks
    stacked; the torus weights (1, -1) per particle refer to the symplectic
    normal form of the lifted rotation.
    """
    dim = 4 * m
    moment: Dict[tuple, Fraction] = {}
    for i in range(m):
        q1, q2, p1, p2 = 4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3
        moment[tuple(1 if s in (q1, p2) else 0 for s in range(dim))] = Fraction(1)
        moment[tuple(1 if s in (q2, p1) else 0 for s in range(dim))] = Fraction(-1)
    pi = [[Fraction(0)] * dim for _ in range(dim)]
    for i in range(m):
        for k in range(2):
            q, p = 4 * i + k, 4 * i + 2 + k
            pi[p][q] = Fraction(1)
            pi[q][p] = Fraction(-1)
    pts = [tuple([1, 0, 1, 0] * m), tuple([0] * dim)]
    return Setup(
        name="m-particles",
        base_dim=dim,
        poisson=pi,
        lie=LieData(_zero_f(1)),
        moment=[moment],
        weights=[[1, -1] * m],
        points=pts,
        expected={"equivariant": True, "cone_test": True,
                  "generating_hypothesis": True, "complete_intersection": True,
                  "full_rank_attained": True, "regular_stratum_empty": False},
        base_names=[f"{nm}{i+1}" for i in range(m)
                    for nm in ("qa", "qb", "pa", "pb")],
    )


def resonance() -> Setup:
    """The (1,1,-1,-1)-resonance on C^4."""
    coeffs = [Fraction(1), Fraction(1), Fraction(-1), Fraction(-1)]
    return Setup(
        name="resonance",
        base_dim=8,
        poisson=_kahler_poisson(4),
        lie=LieData(_zero_f(1)),
        moment=[_circle_moment(4, coeffs)],
        weights=[[1, 1, -1, -1]],
        points=[(1, 0, 0, 0, 1, 0, 0, 0), (0, 1, 0, 1, 0, 0, 1, 1),
                (0,) * 8],
        expected={"equivariant": True, "cone_test": True,
                  "generating_hypothesis": True, "complete_intersection": True,
                  "full_rank_attained": True, "regular_stratum_empty": False},
        base_names=_pair_names(4),
    )


def t2_action(alpha: int = -1, beta: int = 1) -> Setup:
    """The T^2-action on C^4; the nonpositivity condition holds iff alpha < 0."""
    m = 8
    j1 = {}
    j2 = {}
    for slot, c in ((0, alpha), (4, 1)):
        for s in (slot, slot + 1):
            j1[tuple(2 if i == s else 0 for i in range(m))] = -Half * Fraction(c)
    for slot, c in ((0, beta), (2, -1), (6, 1)):
        for s in (slot, slot + 1):
            j2[tuple(2 if i == s else 0 for i in range(m))] = -Half * Fraction(c)
    pts: List[tuple] = [(0,) * 8]
    if alpha == -1 and beta == 1:
        # |z1| = |z3|, |z2|^2 = |z1|^2 + |z4|^2
        pts.append((1, 0, 1, 0, 1, 0, 0, 0))
        pts.append((0, 2, 2, 1, 0, 2, 1, 0))
    return Setup(
        name="t2",
        base_dim=m,
        poisson=_kahler_poisson(4),
        lie=LieData(_zero_f(2)),
        moment=[j1, j2],
        weights=[[alpha, 0, 1, 0], [beta, -1, 0, 1]],
        points=pts,
        expected={"equivariant": True, "cone_test": alpha < 0,
                  "generating_hypothesis": alpha < 0,
                  "complete_intersection": alpha < 0,
                  "full_rank_attained": True, "regular_stratum_empty": False},
        base_names=_pair_names(4),
    )


def commuting_variety(n: int = 2) -> Setup:
    """Pairs of commuting symmetric matrices, J(Q, P) = [Q, P]."""
    sym = [(i, j) for i in range(n) for j in range(i, n)]
    sindex = {p: k for k, p in enumerate(sym)}
    nsym = len(sym)
    dim = 2 * nsym

    def q_entry(i, j):
        return sindex[(min(i, j), max(i, j))]

    f, basis = _so_n_structure(n)
    moment = []
    for (a, b) in basis:
        p: Dict[tuple, Fraction] = {}
        for k in range(n):
            # [Q, P]_ab = sum_k Q_ak P_kb - P_ak Q_kb
            for (qi, pj, sign) in (((a, k), (k, b), 1), ((b, k), (k, a), -1)):
                key = [0] * dim
                key[q_entry(*qi)] += 1
                key[nsym + q_entry(*pj)] += 1
                key = tuple(key)
                v = p.get(key, Fraction(0)) + Fraction(sign)
                if v:
                    p[key] = v
                else:
                    p.pop(key, None)
        moment.append(p)
    pts = []
    if n == 2:
        # (q11, q12, q22, p11, p12, p22)
        pts = [(1, 0, -1, 2, 0, 3), (1, 0, 1, 5, 0, 5), (0,) * 6]
    return Setup(
        name="commuting-variety",
        base_dim=dim,
        poisson=_cotangent_poisson(nsym),
        lie=LieData(f),
        moment=moment,
        weights=None,
        points=pts,
        expected={"equivariant": True, "cone_test": None,
                  "generating_hypothesis": True, "complete_intersection": True,
                  "full_rank_attained": True, "regular_stratum_empty": False},
        base_names=[f"q{i+1}{j+1}" for (i, j) in sym]
        + [f"p{i+1}{j+1}" for (i, j) in sym],
    )


_HEISENBERG = [[[0, 0, 0], [0, 0, 1], [0, 0, 0]],
               [[0, 0, -1], [0, 0, 0], [0, 0, 0]],
               [[0, 0, 0], [0, 0, 0], [0, 0, 0]]]

_SO3 = [[[0, 0, 0], [0, 0, 1], [0, -1, 0]],
        [[0, 0, -1], [0, 0, 0], [1, 0, 0]],
        [[0, 1, 0], [-1, 0, 0], [0, 0, 0]]]


def heisenberg_lie() -> LieData:
    return LieData(_HEISENBERG)


def so3_lie() -> LieData:
    return LieData(_SO3)


def linear_poisson(algebra: str = "heisenberg", ell: int = 1) -> Setup:
    """Dual of a Lie algebra with J the projection onto a subalgebra."""
    h = {"heisenberg": _HEISENBERG, "so3": _SO3,
         "abelian": _zero_f(3)}[algebra]
    n = len(h)
    if ell > n:
        raise SetupError("subalgebra dimension exceeds the algebra")
    sub = [[[Fraction(h[a][b][c]) for c in range(ell)] for b in range(ell)]
           for a in range(ell)]
    for a in range(ell):
        for b in range(ell):
            for c in range(ell, n):
                if h[a][b][c]:
                    raise SetupError("the chosen span is not a subalgebra")
    pi = [[{tuple(1 if i == k else 0 for i in range(n)): Fraction(h[a][b][k])
            for k in range(n) if h[a][b][k]}
           for b in range(n)] for a in range(n)]
    moment = [{tuple(1 if i == a else 0 for i in range(n)): Fraction(1)}
              for a in range(ell)]
    return Setup(
        name="linear-poisson",
        base_dim=n,
        poisson=pi,
        lie=LieData(sub),
        moment=moment,
        weights=None,
        points=[tuple(0 if i < ell else i + 1 for i in range(n)), (0,) * n],
        expected={"equivariant": True, "cone_test": None,
                  "generating_hypothesis": True, "complete_intersection": True,
                  "full_rank_attained": True, "regular_stratum_empty": False},
    )


CATALOG = {
    "harmonic-oscillator": harmonic_oscillator,
    "free-particle": free_particle,
    "standard-example": standard_example,
    "angular-momentum": angular_momentum,
    "m-particles": m_particles,
    "resonance": resonance,
    "t2": t2_action,
    "commuting-variety": commuting_variety,
    "linear-poisson": linear_poisson,
}


def catalog_names() -> List[str]:
    return list(CATALOG)


def build(name: str, **params) -> Setup:
    if name not in CATALOG:
        raise KeyError(f"unknown catalog example {name!r}")
    return CATALOG[name](**params)
