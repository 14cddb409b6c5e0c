"""Reduced star products and classical reduced brackets on the zero fibre.

The quantum route follows the deformed Koszul contraction: the restriction
map acquires nu-corrections through the geometric series of the perturbation
lemma, and for invariant functions the reduced product is
f * g = qres(prol(f) * prol(g)).  Torus invariants are enumerated exactly by
weight-zero complex monomials expanded back into real coordinates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import hpt
from .algebra import (GradedElement, TruncationPolicy, mul, star,
                      super_poisson)
from .brst import make_classical_delta, make_quantum_operators
from .koszul import (NormalForms, Setup, SetupError, base_monomials,
                     compositions, ghost_nu_extend, koszul_differential)
from .linalg import EchelonSolver, Row, nullspace, row_echelon


# -- equivariant normal forms for a nondegenerate quadratic constraint ------------


class EquivariantNormalForms:
    """Fischer decomposition A_d = J A_{d-2} (+) ker(Laplacian of the dual form).

    The harmonic complement is canonical, so the restriction map and homotopy
    commute with every linear symplectomorphism preserving J; in particular
    the torus action.  Needs a single nondegenerate quadratic moment component.
    """

    def __init__(self, setup: Setup):
        if setup.ell != 1 or setup.homogeneity() != 2:
            raise SetupError("equivariant normal forms need a single "
                             "homogeneous quadratic moment component")
        self.setup = setup
        m = setup.base_dim
        S = [[Fraction(0)] * m for _ in range(m)]
        for k, c in setup.moment[0].items():
            idx = [i for i, e in enumerate(k) for _ in range(e)]
            i, j = idx
            if i == j:
                S[i][i] += 2 * c
            else:
                S[i][j] += c
                S[j][i] += c
        self.dual = _invert_matrix(S)
        if self.dual is None:
            raise SetupError("moment quadratic form is degenerate")
        self._cache: Dict[int, tuple] = {}

    def _laplacian(self, poly, m):
        out: Dict[tuple, Fraction] = {}
        for k, c in poly.items():
            for i in range(m):
                if not k[i]:
                    continue
                for j in range(m):
                    g = self.dual[i][j]
                    if not g:
                        continue
                    kk = list(k)
                    kk[i] -= 1
                    if not kk[j]:
                        continue
                    coeff = c * g * k[i] * kk[j]
                    kk[j] -= 1
                    key = tuple(kk)
                    v = out.get(key, Fraction(0)) + coeff
                    if v:
                        out[key] = v
                    else:
                        out.pop(key, None)
        return out

    def _slice(self, d: int):
        if d in self._cache:
            return self._cache[d]
        m = self.setup.base_dim
        monos = base_monomials(m, d)
        index = {k: i for i, k in enumerate(monos)}
        J = self.setup.moment[0]
        cols: List[Row] = []
        meta: List[Optional[tuple]] = []
        if d >= 2:
            for g in base_monomials(m, d - 2):
                col: Row = {}
                for jk, jv in J.items():
                    key = tuple(x + y for x, y in zip(jk, g))
                    col[index[key]] = col.get(index[key], Fraction(0)) + jv
                cols.append(col)
                meta.append(g)
        # harmonic basis: kernel of the dual Laplacian A_d -> A_{d-2}
        lower = base_monomials(m, d - 2) if d >= 2 else []
        lindex = {k: i for i, k in enumerate(lower)}
        rows = [{} for _ in lower]
        for jcol, k in enumerate(monos):
            for kk, v in self._laplacian({k: Fraction(1)}, m).items():
                rows[lindex[kk]][jcol] = v
        harmonics = nullspace(rows, len(monos)) if lower else \
            [{i: Fraction(1)} for i in range(len(monos))]
        for h in harmonics:
            cols.append(h)
            meta.append(None)
        solver = EchelonSolver(cols, len(monos))
        if solver.rank != len(monos):
            raise SetupError(
                f"Fischer decomposition is not direct on degree {d}")
        data = (monos, index, solver, meta, harmonics)
        self._cache[d] = data
        return data

    def split(self, poly) -> Tuple[Dict[tuple, Fraction], Dict[tuple, Fraction]]:
        """(normal form, J-quotient) with poly = nf + J * quotient."""
        nf: Dict[tuple, Fraction] = {}
        quot: Dict[tuple, Fraction] = {}
        by_deg: Dict[int, Dict[tuple, Fraction]] = {}
        for k, v in poly.items():
            by_deg.setdefault(sum(k), {})[k] = v
        for d, part in by_deg.items():
            monos, index, solver, meta, harmonics = self._slice(d)
            vec = {index[k]: v for k, v in part.items()}
            sol = solver.solve(vec)
            assert sol is not None
            for ci, v in sol.items():
                g = meta[ci]
                if g is None:
                    for ri, hv in harmonics[ci - (len(meta) - len(harmonics))].items():
                        kk = monos[ri]
                        w = nf.get(kk, Fraction(0)) + v * hv
                        if w:
                            nf[kk] = w
                        else:
                            nf.pop(kk, None)
                else:
                    w = quot.get(g, Fraction(0)) + v
                    if w:
                        quot[g] = w
                    else:
                        quot.pop(g, None)
        return nf, quot

    def normal_form(self, poly):
        return self.split(poly)[0]

    def normal_basis(self, d: int) -> List[Dict[tuple, Fraction]]:
        monos, _index, _solver, _meta, harmonics = self._slice(d)
        return [{monos[i]: v for i, v in h.items()} for h in harmonics]


def _invert_matrix(S):
    m = len(S)
    aug = [{j: S[i][j] for j in range(m) if S[i][j]} for i in range(m)]
    for i in range(m):
        aug[i][m + i] = Fraction(1)
    rref, pivots = row_echelon(aug, 2 * m)
    if pivots != list(range(m)):
        return None
    inv = [[Fraction(0)] * m for _ in range(m)]
    for row, p in zip(rref, pivots):
        for j in range(m):
            inv[p][j] = row.get(m + j, Fraction(0))
    return inv


def equivariant_contraction(setup: Setup,
                            policy: TruncationPolicy) -> hpt.Contraction:
    """Koszul contraction with the canonical harmonic complement.

    res projects onto harmonics, h divides by J through the Fischer split;
    both commute with the torus action, which is what the reduced product
    needs.  Single quadratic moment component only.
    """
    nf = EquivariantNormalForms(setup)
    t = setup.table()
    slot = t.antighost_slots(1)[0]
    zg = (0,) * t.ngen

    def res_core(elem: GradedElement) -> GradedElement:
        out: Dict[tuple, Fraction] = {}
        for (b, g, nu), c in elem.terms.items():
            if any(g):
                continue
            for k, v in nf.normal_form({b: c}).items():
                key = (k, zg, 0)
                w = out.get(key, Fraction(0)) + v
                if w:
                    out[key] = w
                else:
                    out.pop(key, None)
        return GradedElement(t, out)

    def h_core(elem: GradedElement) -> GradedElement:
        out: Dict[tuple, Fraction] = {}
        for (b, g, nu), c in elem.terms.items():
            if g[slot]:
                continue  # K_1 part: homotopy vanishes there (ell = 1)
            _nf_part, quot = nf.split({b: c})
            for k, v in quot.items():
                gx = [0] * t.ngen
                gx[slot] = 1
                key = (k, tuple(gx), 0)
                w = out.get(key, Fraction(0)) + v
                if w:
                    out[key] = w
                else:
                    out.pop(key, None)
        return GradedElement(t, out)

    res = ghost_nu_extend(t, res_core, odd=False)
    prol = ghost_nu_extend(t, lambda e: e, odd=False)
    h = ghost_nu_extend(t, h_core, odd=True)

    gw = {s: 2 for s in t.antighost_slots()}

    def big_basis(weight: int = 4, max_k: Optional[int] = None):
        from .koszul import k_slice_monomials
        kk = max_k if max_k is not None else 1
        return [GradedElement(t, {mm: Fraction(1)})
                for d in range(weight + 1)
                for k in range(kk + 1)
                for mm in k_slice_monomials(t, gw, d, k)]

    def small_basis(weight: int = 4, **_):
        out = []
        for d in range(weight + 1):
            for hb in nf.normal_basis(d):
                out.append(GradedElement(
                    t, {(k, zg, 0): v for k, v in hb.items()}))
        return out

    big = hpt.Complex("koszul", lambda a: koszul_differential(a, setup),
                      degree=-1, slice_basis=big_basis)
    small = hpt.Complex("functions-on-Z", lambda a: t.zero(), degree=0,
                        slice_basis=small_basis)
    return hpt.Contraction(small, big, inject=prol, project=res, homotopy=h,
                           sc1=True, sc2=True, sc3=True)


class InvarianceError(ValueError):
    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


# -- Gaussian-rational expansion of complex monomials -----------------------------


def _gauss_mul(a: Tuple[Fraction, Fraction], b: Tuple[Fraction, Fraction]):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _pair_power(alpha: int, beta: int) -> Dict[Tuple[int, int],
                                               Tuple[Fraction, Fraction]]:
    """(x + i y)^alpha (x - i y)^beta as {(ex, ey): re + i im}."""
    out = {(0, 0): (Fraction(1), Fraction(0))}
    for conj in (False, True):
        n = beta if conj else alpha
        for _ in range(n):
            nxt: Dict[Tuple[int, int], Tuple[Fraction, Fraction]] = {}
            for (ex, ey), c in out.items():
                for de, factor in (((1, 0), (Fraction(1), Fraction(0))),
                                   ((0, 1), (Fraction(0),
                                             Fraction(-1 if conj else 1)))):
                    k = (ex + de[0], ey + de[1])
                    v = _gauss_mul(c, factor)
                    old = nxt.get(k, (Fraction(0), Fraction(0)))
                    nxt[k] = (old[0] + v[0], old[1] + v[1])
            out = {k: v for k, v in nxt.items() if v != (0, 0)}
    return out


def _complex_monomial(setup: Setup, alpha: Sequence[int], beta: Sequence[int]):
    """Real and imaginary parts of z^alpha zbar^beta as exponent dicts."""
    m = setup.base_dim
    acc: Dict[Tuple[int, ...], Tuple[Fraction, Fraction]] = {
        (0,) * m: (Fraction(1), Fraction(0))}
    for j, (a, b) in enumerate(zip(alpha, beta)):
        if a == 0 and b == 0:
            continue
        pair = _pair_power(a, b)
        nxt: Dict[Tuple[int, ...], Tuple[Fraction, Fraction]] = {}
        for k, c in acc.items():
            for (ex, ey), v in pair.items():
                kk = list(k)
                kk[2 * j] += ex
                kk[2 * j + 1] += ey
                kk = tuple(kk)
                w = _gauss_mul(c, v)
                old = nxt.get(kk, (Fraction(0), Fraction(0)))
                nxt[kk] = (old[0] + w[0], old[1] + w[1])
        acc = {k: v for k, v in nxt.items() if v != (0, 0)}
    re = {k: v[0] for k, v in acc.items() if v[0]}
    im = {k: v[1] for k, v in acc.items() if v[1]}
    return re, im


def offending_weights(setup: Setup, f: GradedElement) -> List[Tuple[int, ...]]:
    """Nonzero torus weights occurring in f (empty iff f is invariant).

    Substitutes x_j = (z_j + zbar_j)/2 and y_j = -i (z_j - zbar_j)/2 and
    collects the weight vectors W (alpha - beta) of the complex monomials.
    """
    if setup.weights is None:
        raise SetupError("setup carries no torus weights")
    W = setup.weights
    npairs = setup.base_dim // 2
    half = Fraction(1, 2)
    x_factor = {(1, 0): (half, Fraction(0)), (0, 1): (half, Fraction(0))}
    y_factor = {(1, 0): (Fraction(0), -half), (0, 1): (Fraction(0), half)}
    seen: Dict[Tuple[int, ...], bool] = {}
    for (b, g, nu), c in f.terms.items():
        if any(g) or nu:
            raise SetupError("weight decomposition expects ghost-free, "
                             "nu-free polynomials")
        acc: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]],
                  Tuple[Fraction, Fraction]] = {
            ((0,) * npairs, (0,) * npairs): (Fraction(c), Fraction(0))}
        for j in range(npairs):
            for factor, e in ((x_factor, b[2 * j]), (y_factor, b[2 * j + 1])):
                for _ in range(e):
                    nxt: Dict[tuple, Tuple[Fraction, Fraction]] = {}
                    for (al, be), cc in acc.items():
                        for (dz, dzb), fv in factor.items():
                            na = list(al)
                            nb = list(be)
                            na[j] += dz
                            nb[j] += dzb
                            key = (tuple(na), tuple(nb))
                            v = _gauss_mul(cc, fv)
                            old = nxt.get(key, (Fraction(0), Fraction(0)))
                            nxt[key] = (old[0] + v[0], old[1] + v[1])
                    acc = {k: v for k, v in nxt.items() if v != (0, 0)}
        for (al, be), _cc in acc.items():
            wt = tuple(sum(W[r][j] * (al[j] - be[j]) for j in range(npairs))
                       for r in range(len(W)))
            if any(wt):
                seen[wt] = True
    return sorted(seen)


# -- torus invariants ---------------------------------------------------------------


def torus_invariants(setup: Setup, degree: int,
                     nf=None) -> List[GradedElement]:
    """Basis of weight-zero polynomials of the given degree, in normal form.

    ``nf`` is any normal-form provider (echelon complement by default; pass
    the harmonic one when feeding the reduced product).
    """
    if setup.weights is None:
        raise SetupError(
            "torus_invariants needs a torus weight matrix (abelian setups only)")
    t = setup.table()
    npairs = setup.base_dim // 2
    W = setup.weights
    nf = nf or NormalForms(setup, t)
    zg = (0,) * t.ngen
    cands: List[GradedElement] = []
    for da in range(degree + 1):
        db = degree - da
        for alpha in compositions(da, npairs):
            for beta in compositions(db, npairs):
                if (alpha, beta) < (beta, alpha):
                    continue  # conjugate pair already handled
                wt = tuple(sum(W[r][j] * (alpha[j] - beta[j])
                               for j in range(npairs))
                           for r in range(len(W)))
                if any(wt):
                    continue
                re, im = _complex_monomial(setup, alpha, beta)
                for poly in (re, im):
                    if not poly:
                        continue
                    p = nf.normal_form(poly)
                    if p:
                        cands.append(GradedElement(
                            t, {(k, zg, 0): v for k, v in p.items()}))
    # echelon the candidates to a deterministic basis
    monos = sorted({m for e in cands for m in e.terms})
    index = {m: i for i, m in enumerate(monos)}
    rows = [{index[m]: c for m, c in e.terms.items()} for e in cands]
    rref, _pivots = row_echelon(rows, len(monos))
    return [GradedElement(t, {monos[i]: v for i, v in row.items()})
            for row in rref]


def check_invariant(setup: Setup, f: GradedElement) -> None:
    """Refuse non-invariant input, naming the offending weight if possible."""
    t = f.table
    J = setup.moment_elements(t)
    for k in range(f.nu_degree() + 1):
        fk = f.nu_coefficient(k)
        if fk.is_zero():
            continue
        for a in range(setup.ell):
            r = super_poisson(J[a], fk, setup)
            if not r.is_zero():
                wts = offending_weights(setup, fk) if setup.weights else None
                raise InvarianceError(
                    f"input is not invariant: {{J_{a+1}, f}} != 0 "
                    f"(nu^{k} coefficient); offending weights {wts}",
                    offending=wts if wts else (a, r))


# -- quantum contraction --------------------------------------------------------------


def quantum_contraction(setup: Setup, kos_contr: hpt.Contraction,
                        policy: TruncationPolicy,
                        qmoment: Optional[Sequence[GradedElement]] = None
                        ) -> hpt.Contraction:
    """Perturb the Koszul contraction by Delta - d (an O(nu) initiator).

    Keeps the prolongation; the deformed restriction is
    qres = res (id + (Delta_1 - d_1) h_0)^{-1}, its geometric series
    terminating at the nu cap.
    """
    if not kos_contr.sc2:
        raise hpt.ContractViolation(
            "quantum contraction needs the side condition h prol = 0")
    qm = list(qmoment) if qmoment is not None else setup.moment_elements()
    ops = make_quantum_operators(setup, qm, policy)
    dk = lambda a: koszul_differential(a, setup)

    def t_op(a: GradedElement) -> GradedElement:
        return (ops.koszul_q(a) - dk(a)).truncate(policy)

    zero_small = lambda x: x.table.zero()
    pert = hpt.perturb_keep_i(kos_contr, t_op, t_small=zero_small,
                              max_iters=policy.nu_order + 2)
    big = replace(pert.big, tag="koszul-quantum")
    return replace(pert, big=big)


def deformed_representation(setup: Setup, qc: hpt.Contraction,
                            policy: TruncationPolicy,
                            qmoment: Optional[Sequence[GradedElement]] = None
                            ) -> Callable[[int], Callable]:
    """rho^z_X = qres rho_X prol on functions on Z."""
    qm = list(qmoment) if qmoment is not None else setup.moment_elements()
    ops = make_quantum_operators(setup, qm, policy)

    def rep(a: int):
        ra = ops.rho(a)
        return lambda f: qc.project(ra(qc.inject(f))).truncate(policy)

    return rep


# -- reduced products -----------------------------------------------------------------


def reduced_star(setup: Setup, f: GradedElement, g: GradedElement,
                 policy: TruncationPolicy, qc: hpt.Contraction) -> GradedElement:
    """f * g := qres(prol(f) * prol(g)) for invariant elements on Z."""
    check_invariant(setup, f)
    check_invariant(setup, g)
    prod = star(qc.inject(f), qc.inject(g), setup, policy)
    return qc.project(prod).truncate(policy)


def classical_reduced_bracket(setup: Setup, a: GradedElement, b: GradedElement,
                              kos_contr: hpt.Contraction,
                              max_iters: int = 32) -> GradedElement:
    """{[a],[b]} = res{Phi(a), Phi(b)} through the BRST contraction.

    Inputs are cocycles of the vertical differential; in degree zero this is
    the Dirac bracket res{prol a, prol b}.
    """
    t = a.table
    delta = make_classical_delta(setup)
    h = kos_contr.homotopy
    res_map, prol = kos_contr.project, kos_contr.inject

    def half_h(y):
        return h(y).scale(Fraction(1, 2))

    big = hpt.Complex("brst", lambda y: koszul_differential(y, setup).scale(2),
                      degree=1)
    small = hpt.Complex("vertical", lambda x: t.zero(), degree=1)
    base = hpt.Contraction(small, big, inject=prol, project=res_map,
                           homotopy=half_h, sc1=kos_contr.sc1,
                           sc2=kos_contr.sc2, sc3=kos_contr.sc3)
    pert = hpt.perturb_keep_p(base, delta, max_iters=max_iters)
    d_vert = pert.small.differential
    for x, nm in ((a, "first"), (b, "second")):
        r = d_vert(x)
        if not r.is_zero():
            raise InvarianceError(
                f"{nm} argument is not a vertical cocycle", offending=r)
    phi_a, phi_b = pert.inject(a), pert.inject(b)
    return res_map(super_poisson(phi_a, phi_b, setup))


@dataclass
class ReducedProductTable:
    """Invariant generators with their reduced products and residuals."""

    generators: List[GradedElement]
    products: Dict[Tuple[int, int], GradedElement]
    assoc_residuals: Dict[Tuple[int, int, int], GradedElement]

    def associative(self) -> bool:
        return all(r.is_zero() for r in self.assoc_residuals.values())


def build_reduced_product_table(setup: Setup, policy: TruncationPolicy,
                                kos_contr: Optional[hpt.Contraction] = None,
                                degree: int = 2,
                                triples: bool = True) -> ReducedProductTable:
    if kos_contr is None:
        kos_contr = equivariant_contraction(setup, policy)
    qc = quantum_contraction(setup, kos_contr, policy)
    gens = torus_invariants(setup, degree, nf=EquivariantNormalForms(setup))
    n = len(gens)
    prods: Dict[Tuple[int, int], GradedElement] = {}
    for i in range(n):
        for j in range(n):
            prods[(i, j)] = reduced_star(setup, gens[i], gens[j], policy, qc)
    residuals: Dict[Tuple[int, int, int], GradedElement] = {}
    if triples:
        for i in range(n):
            for j in range(n):
                ij = prods[(i, j)]
                for k in range(n):
                    left = reduced_star(setup, ij, gens[k], policy, qc)
                    right = reduced_star(setup, gens[i], prods[(j, k)],
                                         policy, qc)
                    residuals[(i, j, k)] = left - right
    return ReducedProductTable(gens, prods, residuals)
