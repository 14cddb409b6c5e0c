"""Koszul complex on the moment map components.

The complex K_k = (polynomials) (x) Lambda^k(antighosts) with the insertion
differential d = Sum_a J_a d/dxi_a.  For homogeneous moment maps it splits
into finite weighted slices (weight of an antighost = deg J), so homology is
computed by exact rank arithmetic and contracting homotopies by exact linear
solves, slice by slice.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import hpt
from .algebra import (ANTIGHOST, GHOST, GradedElement, GeneratorTable,
                      TruncationPolicy, level_one_table, mul)
from .enveloping import LieData
from .linalg import EchelonSolver, Row, nullspace, row_echelon

Poly = Dict[Tuple[int, ...], Fraction]  # base exponent tuple -> coefficient


class SetupError(ValueError):
    pass


def _as_poly(entry) -> Poly:
    if isinstance(entry, dict):
        return {tuple(k): Fraction(v) for k, v in entry.items() if Fraction(v)}
    c = Fraction(entry)
    return {(): c} if c else {}


def _poly_neg(p: Poly) -> Poly:
    return {k: -v for k, v in p.items()}


def _pad(exps: Tuple[int, ...], m: int) -> Tuple[int, ...]:
    return tuple(exps) + (0,) * (m - len(exps))


@dataclass
class Setup:
    """A reduction problem: Poisson structure, Lie data, moment map.

    ``poisson`` and ``moment`` entries are polynomials stored as sparse
    exponent dictionaries; constants may be given as plain numbers.  The
    optional ``weights`` matrix gives the torus weights of the complex
    coordinate pairs (x_j, y_j) = (x_{2j-1}, x_{2j}).
    """

    name: str
    base_dim: int
    poisson: Sequence[Sequence[object]]
    lie: LieData
    moment: Sequence[object]
    weights: Optional[Sequence[Sequence[int]]] = None
    points: Sequence[Sequence[object]] = ()
    expected: Dict[str, object] = field(default_factory=dict)
    base_names: Sequence[str] = ()

    def __post_init__(self):
        m = self.base_dim
        self.poisson = tuple(
            tuple(_as_poly(e) for e in row) for row in self.poisson)
        if len(self.poisson) != m or any(len(r) != m for r in self.poisson):
            raise SetupError("poisson matrix must be base_dim x base_dim")
        for i in range(m):
            for j in range(m):
                pij = {_pad(k, m): v for k, v in self.poisson[i][j].items()}
                pji = {_pad(k, m): v for k, v in self.poisson[j][i].items()}
                if pij != _poly_neg(pji):
                    raise SetupError(f"poisson matrix not antisymmetric at ({i},{j})")
        self.moment = tuple(
            {_pad(k, m): Fraction(v) for k, v in _as_poly(p).items()}
            for p in self.moment)
        if not self.moment or any(not p for p in self.moment):
            raise SetupError("moment components must be nonzero polynomials")
        if self.lie.n != len(self.moment):
            raise SetupError("lie dimension must match the moment component count")
        if self.weights is not None:
            self.weights = tuple(tuple(int(w) for w in row) for row in self.weights)
            if any(len(row) * 2 != m for row in self.weights):
                raise SetupError("weight matrix needs one column per coordinate pair")
        self.points = tuple(tuple(Fraction(x) for x in p) for p in self.points)
        if not self.base_names:
            self.base_names = tuple(f"x{i+1}" for i in range(m))
        self._table = None

    # -- derived data --------------------------------------------------------

    @property
    def ell(self) -> int:
        return len(self.moment)

    def table(self) -> GeneratorTable:
        if self._table is None:
            self._table = level_one_table(self.base_dim, self.ell,
                                          self.base_names)
        return self._table

    def poly_element(self, table: GeneratorTable, p: Poly) -> GradedElement:
        zero_g = (0,) * table.ngen
        return GradedElement(table, {(_pad(k, self.base_dim), zero_g, 0): v
                                     for k, v in p.items()})

    def moment_elements(self, table: Optional[GeneratorTable] = None
                        ) -> List[GradedElement]:
        t = table or self.table()
        return [self.poly_element(t, p) for p in self.moment]

    def poisson_elements(self, table: GeneratorTable):
        return [[self.poly_element(table, self.poisson[i][j])
                 for j in range(self.base_dim)] for i in range(self.base_dim)]

    def poisson_constants(self):
        out = []
        for row in self.poisson:
            r = []
            for p in row:
                if any(sum(k) for k in p):
                    raise SetupError(
                        "this operation needs a constant Poisson matrix")
                r.append(p.get((), p.get((0,) * self.base_dim, Fraction(0))))
            out.append(r)
        return out

    def homogeneity(self) -> Optional[int]:
        degs = {sum(k) for p in self.moment for k in p}
        return degs.pop() if len(degs) == 1 else None

    def moment_values(self, point) -> List[Fraction]:
        vals = []
        for p in self.moment:
            s = Fraction(0)
            for k, c in p.items():
                v = c
                for e, x in zip(k, point):
                    if e:
                        v *= Fraction(x) ** e
                s += v
            vals.append(s)
        return vals


# -- differentials -------------------------------------------------------------


def koszul_differential(a: GradedElement, setup: Setup) -> GradedElement:
    """d = Sum_a J_a d/dxi_a on level-1 antighosts (trivial on ghosts)."""
    t = a.table
    out = t.zero()
    J = setup.moment_elements(t)
    for slot in t.antighost_slots(1):
        g = t.generators[slot]
        da = a.d(g.name)
        if not da.is_zero():
            out = out + mul(J[g.index], da)
    return out


# -- slice enumeration ----------------------------------------------------------


def compositions(total: int, nvars: int) -> Iterable[Tuple[int, ...]]:
    """All exponent tuples of the given total degree, lexicographically."""
    if nvars == 0:
        if total == 0:
            yield ()
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, nvars - 1):
            yield (first,) + rest


def base_monomials(m: int, d: int) -> List[Tuple[int, ...]]:
    return list(compositions(d, m))


def antighost_words(table: GeneratorTable, gen_weights: Dict[int, int],
                    kdeg: int, wmax: int) -> List[Tuple[Tuple[int, ...], int]]:
    """(generator exponent tuple, weight) with total antighost degree kdeg.

    Only antighost slots may be populated; odd slots carry exponent <= 1.
    """
    slots = table.antighost_slots()
    out: List[Tuple[Tuple[int, ...], int]] = []

    def rec(i: int, remaining: int, weight: int, acc):
        if weight > wmax:
            return
        if remaining == 0:
            g = [0] * table.ngen
            for s, e in acc:
                g[s] = e
            out.append((tuple(g), weight))
            return
        if i == len(slots):
            return
        s = slots[i]
        gen = table.generators[s]
        emax = remaining // gen.level
        if gen.parity:
            emax = min(emax, 1)
        for e in range(emax, -1, -1):
            rec(i + 1, remaining - e * gen.level, weight + e * gen_weights[s],
                acc + [(s, e)] if e else acc)

    rec(0, kdeg, 0, [])
    return out


def k_slice_monomials(table: GeneratorTable, gen_weights: Dict[int, int],
                      d: int, k: int) -> List[tuple]:
    """Monomials of antighost degree k and total weight d (no ghosts, no nu)."""
    out = []
    for g, w in antighost_words(table, gen_weights, k, d):
        for b in base_monomials(table.base_dim, d - w):
            out.append((b, g, 0))
    return out


def slice_elements(table: GeneratorTable, monos: Sequence[tuple]
                   ) -> List[GradedElement]:
    return [GradedElement(table, {m: Fraction(1)}) for m in monos]


# -- homology by exact rank arithmetic ------------------------------------------


@dataclass
class HomologyEntry:
    weight: int
    k: int
    dim_chain: int
    dim_homology: int


@dataclass
class HomologyTable:
    setup_name: str
    max_weight: int
    entries: List[HomologyEntry]
    cycle_bases: Dict[Tuple[int, int], List[GradedElement]] = field(
        default_factory=dict)

    def dim(self, weight: int, k: int) -> int:
        for e in self.entries:
            if e.weight == weight and e.k == k:
                return e.dim_homology
        return 0

    def acyclic_positive(self) -> bool:
        return all(e.dim_homology == 0 for e in self.entries if e.k >= 1)

    def euler_consistent(self) -> bool:
        weights = {e.weight for e in self.entries}
        for d in weights:
            lhs = sum((-1) ** e.k * e.dim_chain
                      for e in self.entries if e.weight == d)
            rhs = sum((-1) ** e.k * e.dim_homology
                      for e in self.entries if e.weight == d)
            if lhs != rhs:
                return False
        return True


def _diff_matrix_columns(setup: Setup, table: GeneratorTable,
                         gen_weights: Dict[int, int], d: int, k: int,
                         target_index: Dict[tuple, int]) -> List[Row]:
    """Columns of d: K_k^{(d)} -> K_{k-1}^{(d)} over the given target basis."""
    cols = []
    for m in k_slice_monomials(table, gen_weights, d, k):
        elem = koszul_differential(GradedElement(table, {m: Fraction(1)}), setup)
        col: Row = {}
        for mono, c in elem.terms.items():
            col[target_index[mono]] = c
        cols.append(col)
    return cols


def homology_ranks(setup: Setup, policy: TruncationPolicy,
                   keep_cycles: Iterable[Tuple[int, int]] = ()) -> HomologyTable:
    """dim H_k per weighted slice, by exact kernel/image rank arithmetic.

    Requires a homogeneous moment map so the differential preserves slices.
    ``keep_cycles`` slices additionally get a homology representative basis.
    """
    r = setup.homogeneity()
    if r is None:
        raise SetupError(
            "homology_ranks needs a homogeneous moment map; filtered slices "
            "are not implemented")
    D = policy.poly_degree if policy.poly_degree is not None else 6
    t = setup.table()
    gw = {s: r for s in t.antighost_slots()}
    keep = set(keep_cycles)
    entries: List[HomologyEntry] = []
    cycles: Dict[Tuple[int, int], List[GradedElement]] = {}
    for d in range(D + 1):
        kmax = min(setup.ell, d // r if r else setup.ell)
        slices = {k: k_slice_monomials(t, gw, d, k) for k in range(kmax + 2)}
        indexes = {k: {m: i for i, m in enumerate(monos)}
                   for k, monos in slices.items()}
        ranks: Dict[int, int] = {}
        kernels: Dict[int, List[Row]] = {}
        for k in range(1, kmax + 2):
            if not slices[k]:
                ranks[k] = 0
                continue
            cols = _diff_matrix_columns(setup, t, gw, d, k, indexes[k - 1])
            rows = [{} for _ in slices[k - 1]]
            for j, col in enumerate(cols):
                for i, v in col.items():
                    rows[i][j] = v
            ranks[k] = len(row_echelon(rows, len(cols))[1])
            if (d, k) in keep or k <= kmax:
                kernels[k] = nullspace(rows, len(cols))
        for k in range(kmax + 1):
            dim_k = len(slices[k])
            if k == 0:
                dim_h = dim_k - ranks.get(1, 0)
            else:
                dim_ker = len(kernels.get(k, [])) if slices[k] else 0
                dim_h = dim_ker - ranks.get(k + 1, 0)
            entries.append(HomologyEntry(d, k, dim_k, dim_h))
            if (d, k) in keep and k >= 1:
                # homology representatives: kernel vectors reduced modulo the
                # boundary columns, deterministically
                bcols = _diff_matrix_columns(setup, t, gw, d, k + 1, indexes[k])
                solver = EchelonSolver(bcols, len(slices[k]))
                reps = []
                chosen: List[Row] = []
                for vec in kernels.get(k, []):
                    resid = _reduce_mod(vec, bcols, solver, chosen)
                    if resid:
                        chosen.append(resid)
                        reps.append(_row_to_element(t, resid, slices[k]))
                cycles[(d, k)] = reps
    return HomologyTable(setup.name, D, entries, cycles)


def _reduce_mod(vec: Row, bcols: Sequence[Row], solver: EchelonSolver,
                chosen: Sequence[Row]) -> Optional[Row]:
    """Reduce vec modulo the span of bcols and the already chosen rows."""
    span = list(bcols) + list(chosen)
    s = EchelonSolver(span, 0)
    # EchelonSolver reduces arbitrary vectors through solve(); reuse its
    # elimination data by asking whether vec is in the span and, if not,
    # returning the residual of the elimination.
    resid = dict(vec)
    for red, _comb in s._elim:
        lead = min(red)
        f = resid.get(lead)
        if f:
            for c, v in red.items():
                val = resid.get(c, Fraction(0)) - f * v
                if val:
                    resid[c] = val
                else:
                    resid.pop(c, None)
    return resid or None


def _row_to_element(table: GeneratorTable, row: Row,
                    monos: Sequence[tuple]) -> GradedElement:
    return GradedElement(table, {monos[i]: v for i, v in row.items()})


# -- normal forms modulo the ideal slice ----------------------------------------


class NormalForms:
    """res / prol / h_0 data for the ideal generated by the moment map.

    For a single homogeneous component the reduction is polynomial division
    by J with the graded-lex leading term (the echelon answer for a principal
    ideal); for several components each weighted slice is row-reduced, with
    the generator combination tracked so h_0 lands in K_1.
    """

    def __init__(self, setup: Setup, table: Optional[GeneratorTable] = None):
        self.setup = setup
        self.table = table or setup.table()
        self.r = setup.homogeneity()
        if self.r is None:
            raise SetupError("normal forms need a homogeneous moment map")
        self.J = setup.moment_elements(self.table)
        self._slice_cache: Dict[int, tuple] = {}
        if setup.ell == 1:
            p = setup.moment[0]
            self._lead = max(p)
            self._lead_c = p[self._lead]

    # division path (principal ideal) ---------------------------------------

    def _divide(self, poly: Poly) -> Tuple[Poly, Poly]:
        """poly = q * J + r with no monomial of r divisible by lead(J)."""
        J = self.setup.moment[0]
        lead, lc = self._lead, self._lead_c
        p = dict(poly)
        q: Poly = {}
        while True:
            cand = [k for k in p if all(a >= b for a, b in zip(k, lead))]
            if not cand:
                return q, p
            k = max(cand)
            c = p[k] / lc
            qk = tuple(a - b for a, b in zip(k, lead))
            q[qk] = q.get(qk, Fraction(0)) + c
            for jk, jv in J.items():
                nk = tuple(a + b for a, b in zip(qk, jk))
                v = p.get(nk, Fraction(0)) - c * jv
                if v:
                    p[nk] = v
                else:
                    p.pop(nk, None)

    # echelon path ------------------------------------------------------------

    def _slice_data(self, d: int):
        """(monomial index of A_d, rref rows, pivots, transforms, column meta)."""
        if d in self._slice_cache:
            return self._slice_cache[d]
        m = self.setup.base_dim
        monos = base_monomials(m, d)
        index = {k: i for i, k in enumerate(monos)}
        rows: List[Row] = []
        meta: List[Tuple[int, Tuple[int, ...]]] = []
        if d >= self.r:
            for a, J in enumerate(self.setup.moment):
                for g in base_monomials(m, d - self.r):
                    row: Row = {}
                    for jk, jv in J.items():
                        key = tuple(x + y for x, y in zip(jk, g))
                        row[index[key]] = row.get(index[key], Fraction(0)) + jv
                    rows.append(row)
                    meta.append((a, g))
        rref, pivots, transforms = _row_echelon_tracked(rows, len(monos))
        data = (monos, index, rref, pivots, transforms, meta)
        self._slice_cache[d] = data
        return data

    # public API ---------------------------------------------------------------

    def normal_form(self, poly: Poly) -> Poly:
        if self.setup.ell == 1:
            return self._divide(poly)[1]
        out: Poly = {}
        for d, part in _split_by_degree(poly).items():
            monos, index, rref, pivots, _tf, _meta = self._slice_data(d)
            vec = {index[k]: v for k, v in part.items()}
            for row, pc in zip(rref, pivots):
                f = vec.get(pc)
                if f:
                    for c, v in row.items():
                        val = vec.get(c, Fraction(0)) - f * v
                        if val:
                            vec[c] = val
                        else:
                            vec.pop(c, None)
            for i, v in vec.items():
                out[monos[i]] = v
        return out

    def is_normal_mono(self, exps: Tuple[int, ...]) -> bool:
        if self.setup.ell == 1:
            return not all(a >= b for a, b in zip(exps, self._lead))
        d = sum(exps)
        monos, index, rref, pivots, _tf, _meta = self._slice_data(d)
        return index[exps] not in pivots

    def normal_basis(self, d: int) -> List[Tuple[int, ...]]:
        return [k for k in base_monomials(self.setup.base_dim, d)
                if self.is_normal_mono(k)]

    def homotopy0(self, poly: Poly) -> GradedElement:
        """h_0: K_0 -> K_1 with d h_0 = id - prol res on functions."""
        t = self.table
        slots = t.antighost_slots(1)
        terms: Dict[tuple, Fraction] = {}
        if self.setup.ell == 1:
            q, _r = self._divide(poly)
            g = [0] * t.ngen
            g[slots[0]] = 1
            for k, v in q.items():
                terms[(k, tuple(g), 0)] = v
            return GradedElement(t, terms)
        for d, part in _split_by_degree(poly).items():
            monos, index, rref, pivots, transforms, meta = self._slice_data(d)
            vec = {index[k]: v for k, v in part.items()}
            for row, pc, tf in zip(rref, pivots, transforms):
                f = vec.get(pc)
                if not f:
                    continue
                for c, v in row.items():
                    val = vec.get(c, Fraction(0)) - f * v
                    if val:
                        vec[c] = val
                    else:
                        vec.pop(c, None)
                for src, w in tf.items():
                    a, gexp = meta[src]
                    g = [0] * t.ngen
                    g[slots[a]] = 1
                    key = (gexp, tuple(g), 0)
                    val = terms.get(key, Fraction(0)) + f * w
                    if val:
                        terms[key] = val
                    else:
                        terms.pop(key, None)
        return GradedElement(t, terms)


def _split_by_degree(poly: Poly) -> Dict[int, Poly]:
    out: Dict[int, Poly] = {}
    for k, v in poly.items():
        out.setdefault(sum(k), {})[k] = v
    return out


def _row_echelon_tracked(rows: Sequence[Row], ncols: int):
    """RREF with the row-combination matrix tracked."""
    work = [(dict(r), {i: Fraction(1)}) for i, r in enumerate(rows) if r]
    pivot_rows: List[Row] = []
    pivots: List[int] = []
    transforms: List[Row] = []
    for col in range(ncols):
        hit = None
        for idx, (r, _t) in enumerate(work):
            if r.get(col):
                hit = idx
                break
        if hit is None:
            continue
        piv, ptf = work.pop(hit)
        inv = 1 / piv[col]
        piv = {c: v * inv for c, v in piv.items()}
        ptf = {c: v * inv for c, v in ptf.items()}

        def _elim(r, t):
            f = r.get(col)
            if not f:
                return r, t
            nr, nt = dict(r), dict(t)
            for c, v in piv.items():
                val = nr.get(c, Fraction(0)) - f * v
                if val:
                    nr[c] = val
                else:
                    nr.pop(c, None)
            for c, v in ptf.items():
                val = nt.get(c, Fraction(0)) - f * v
                if val:
                    nt[c] = val
                else:
                    nt.pop(c, None)
            return nr, nt

        for k in range(len(pivot_rows)):
            pivot_rows[k], transforms[k] = _elim(pivot_rows[k], transforms[k])
        work = [_elim(r, t) for r, t in work]
        work = [(r, t) for r, t in work if r]
        pivot_rows.append(piv)
        pivots.append(col)
        transforms.append(ptf)
    return pivot_rows, pivots, transforms


# -- operator extension helpers --------------------------------------------------


def split_ghost_part(table: GeneratorTable, mono):
    """(ghost-only exponents, rest-of-monomial with nu stripped, nu power)."""
    b, g, nu = mono
    ghost = [0] * table.ngen
    rest = [0] * table.ngen
    for i, e in enumerate(g):
        (ghost if table.generators[i].kind == GHOST else rest)[i] = e
    return tuple(ghost), (b, tuple(rest), 0), nu


def ghost_nu_extend(table: GeneratorTable, core, odd: bool):
    """Extend an operator on ghost-free, nu-free elements to the full algebra.

    An odd operator passing a ghost word picks up the word's parity sign.
    """

    def wrapped(elem: GradedElement) -> GradedElement:
        out = table.zero()
        for mono, c in elem.terms.items():
            ghost, rest, nu = split_ghost_part(table, mono)
            r = core(GradedElement(table, {rest: c}))
            if r.is_zero():
                continue
            if odd:
                gdeg = sum(e * table.generators[i].degree
                           for i, e in enumerate(ghost))
                if gdeg & 1:
                    r = r.scale(-1)
            gmono = GradedElement(table, {((0,) * table.base_dim, ghost, nu):
                                          Fraction(1)})
            out = out + mul(gmono, r)
        return out

    return wrapped


# -- the two contraction builders -------------------------------------------------


def linear_contraction(setup: Setup) -> hpt.Contraction:
    """Explicit contraction when the moment map is the coordinate projection.

    res evaluates the leading variables at zero, prol is the inclusion of
    polynomials in the trailing variables, and h integrates back one moment
    component with the exact rational weight 1/(k+m) on monomials.
    """
    m = setup.base_dim
    ell = setup.ell
    for a, p in enumerate(setup.moment):
        want = tuple(1 if i == a else 0 for i in range(m))
        if p != {want: Fraction(1)}:
            raise SetupError(
                "linear_contraction needs J_a = x_a (coordinate projection)")
    t = setup.table()
    slots = t.antighost_slots(1)

    def res_core(elem: GradedElement) -> GradedElement:
        terms = {}
        for (b, g, nu), c in elem.terms.items():
            if any(g[s] for s in slots):
                continue
            if any(b[:ell]):
                continue
            terms[(b, g, nu)] = c
        return GradedElement(t, terms)

    def prol_core(elem: GradedElement) -> GradedElement:
        return elem

    def h_core(elem: GradedElement) -> GradedElement:
        out = t.zero()
        for (b, g, nu), c in elem.terms.items():
            k = sum(g[s] for s in slots)
            mdeg = sum(b[:ell])
            if mdeg == 0:
                continue
            for a in range(ell):
                if not b[a]:
                    continue
                nb = list(b)
                nb[a] -= 1
                gx = [0] * t.ngen
                gx[slots[a]] = 1
                xi = GradedElement(t, {((0,) * m, tuple(gx), 0): Fraction(1)})
                tail = GradedElement(t, {(tuple(nb), g, nu): c * Fraction(b[a], k + mdeg)})
                out = out + mul(xi, tail)
        return out

    h = ghost_nu_extend(t, h_core, odd=True)
    # res and prol commute with ghosts; extension is sign-free
    res = ghost_nu_extend(t, res_core, odd=False)
    prol = ghost_nu_extend(t, prol_core, odd=False)

    gw = {s: 1 for s in t.antighost_slots()}

    def big_basis(weight: int = 4, max_k: Optional[int] = None):
        kk = max_k if max_k is not None else ell
        return [GradedElement(t, {mm: Fraction(1)})
                for d in range(weight + 1)
                for k in range(kk + 1)
                for mm in k_slice_monomials(t, gw, d, k)]

    def small_basis(weight: int = 4, **_):
        return [GradedElement(t, {(b, (0,) * t.ngen, 0): Fraction(1)})
                for d in range(weight + 1)
                for b in base_monomials(m, d) if not any(b[:ell])]

    big = hpt.Complex("koszul", lambda a: koszul_differential(a, setup),
                      degree=-1, slice_basis=big_basis)
    small = hpt.Complex("functions-on-Z", lambda a: t.zero(), degree=0,
                        slice_basis=small_basis)
    return hpt.Contraction(small, big, inject=prol, project=res, homotopy=h,
                           sc1=True, sc2=True, sc3=True)


class AcyclicityError(SetupError):
    def __init__(self, weight, k, dim):
        super().__init__(
            f"Koszul homology nonzero on slice weight={weight}, k={k} "
            f"(dim {dim}); switch to a Tate resolution")
        self.weight = weight
        self.k = k


def slice_contraction(setup: Setup, policy: TruncationPolicy) -> hpt.Contraction:
    """Slice-solved contraction for a homogeneous quadratic moment map.

    res projects onto the echelon complement of the ideal slice, prol is the
    corresponding section and h solves d h + h d = id - prol res degreewise
    by exact linear algebra; side conditions are enforced afterwards.
    """
    r = setup.homogeneity()
    if r != 2:
        raise SetupError("slice_contraction expects a homogeneous quadratic "
                         "moment map; use linear_contraction for projections")
    D = policy.poly_degree if policy.poly_degree is not None else 6
    table = homology_ranks(setup, TruncationPolicy(nu_order=policy.nu_order,
                                                   poly_degree=D))
    for e in table.entries:
        if e.k >= 1 and e.dim_homology:
            raise AcyclicityError(e.weight, e.k, e.dim_homology)
    t = setup.table()
    nf = NormalForms(setup, t)
    gw = {s: r for s in t.antighost_slots()}
    slots = t.antighost_slots(1)

    def _elem_poly(elem: GradedElement) -> Poly:
        return {b: c for (b, g, nu), c in elem.terms.items()}

    def res_core(elem: GradedElement) -> GradedElement:
        out: Dict[tuple, Fraction] = {}
        zg = (0,) * t.ngen
        for (b, g, nu), c in elem.terms.items():
            if any(g):
                continue
            for k, v in nf.normal_form({b: c}).items():
                key = (k, zg, 0)
                val = out.get(key, Fraction(0)) + v
                if val:
                    out[key] = val
                else:
                    out.pop(key, None)
        return GradedElement(t, out)

    prol_core = lambda elem: elem

    solver_cache: Dict[Tuple[int, int], EchelonSolver] = {}
    hmap_cache: Dict[Tuple[int, int], Dict[tuple, GradedElement]] = {}

    def _solver(d: int, k: int) -> Tuple[EchelonSolver, List[tuple]]:
        key = (d, k)
        if key not in solver_cache:
            source = k_slice_monomials(t, gw, d, k)
            target = k_slice_monomials(t, gw, d, k - 1)
            tindex = {mm: i for i, mm in enumerate(target)}
            cols = _diff_matrix_columns(setup, t, gw, d, k, tindex)
            solver_cache[key] = (EchelonSolver(cols, len(target)), source, tindex)
        return solver_cache[key]

    def _h_mono(d: int, k: int, mono) -> GradedElement:
        cache = hmap_cache.setdefault((d, k), {})
        if mono in cache:
            return cache[mono]
        e = GradedElement(t, {mono: Fraction(1)})
        if k == 0:
            out = nf.homotopy0(_elem_poly(e))
        else:
            de = koszul_differential(e, setup)
            rhs = e - _h_apply(de, k - 1)
            solver, source, tindex = _solver(d, k + 1)
            vec: Row = {}
            for mm, c in rhs.terms.items():
                vec[tindex[mm]] = c
            sol = solver.solve(vec)
            if sol is None:
                raise AcyclicityError(d, k, -1)
            out = GradedElement(t, {source[i]: v for i, v in sol.items()})
        cache[mono] = out
        return out

    def _h_apply(elem: GradedElement, k: int) -> GradedElement:
        out = t.zero()
        for mono, c in elem.terms.items():
            b, g, nu = mono
            d = sum(b) + sum(g[s] * gw[s] for s in t.antighost_slots() if g[s])
            out = out + _h_mono(d, k, mono).scale(c)
        return out

    def h_core(elem: GradedElement) -> GradedElement:
        out = t.zero()
        for mono, c in elem.terms.items():
            b, g, nu = mono
            k = sum(g[s] for s in slots)
            d = sum(b) + 2 * k
            out = out + _h_mono(d, k, mono).scale(c)
        return out

    res = ghost_nu_extend(t, res_core, odd=False)
    prol = ghost_nu_extend(t, prol_core, odd=False)
    h = ghost_nu_extend(t, h_core, odd=True)

    def big_basis(weight: int = 4, max_k: Optional[int] = None):
        kk = max_k if max_k is not None else setup.ell
        return [GradedElement(t, {mm: Fraction(1)})
                for d in range(weight + 1)
                for k in range(kk + 1)
                for mm in k_slice_monomials(t, gw, d, k)]

    def small_basis(weight: int = 4, **_):
        zg = (0,) * t.ngen
        return [GradedElement(t, {(b, zg, 0): Fraction(1)})
                for d in range(weight + 1) for b in nf.normal_basis(d)]

    big = hpt.Complex("koszul", lambda a: koszul_differential(a, setup),
                      degree=-1, slice_basis=big_basis)
    small = hpt.Complex("functions-on-Z", lambda a: t.zero(), degree=0,
                        slice_basis=small_basis)
    raw = hpt.Contraction(small, big, inject=prol, project=res, homotopy=h)
    if setup.ell == 1:
        # the division homotopy already satisfies h prol = 0 and h h = 0
        raw.sc1 = raw.sc2 = raw.sc3 = True
        return raw
    return hpt.normalize_side_conditions(
        raw, probe_big=big_basis(weight=min(D, 4)),
        probe_small=small_basis(weight=min(D, 4)))
