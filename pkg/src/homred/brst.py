"""Classical and quantum BRST charges and their differentials.

The classical charge of a complete-intersection moment map is
theta = -1/4 f_ab^c xi^a xi^b xi_c + J_a xi^a with the factor-2 bracket; the
quantum charge adds the trace term (nu/2) f_ab^b xi^a and squares to zero
for the antistandard-ordered Clifford star product.  The general charge is
built level by level over a Tate resolution with the flat Rothstein bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .algebra import (ANTIGHOST, GHOST, GradedElement, GeneratorTable,
                      TruncationPolicy, filtration_degree, hamiltonian_operator,
                      mul, rothstein_flat, star, super_poisson)
from .koszul import Setup, SetupError, base_monomials, koszul_differential
from .tate import TateResolution, tate_contraction


class ChargeError(ValueError):
    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass
class Charge:
    element: GradedElement
    kind: str  # "classical" | "quantum"
    parts: Dict[int, GradedElement] = field(default_factory=dict)
    residual: Optional[GradedElement] = None

    def residual_filtration(self):
        if self.residual is None:
            return math.inf
        return filtration_degree(self.residual)


# -- equivariance -----------------------------------------------------------------


def equivariance_residuals(setup: Setup) -> Dict[Tuple[int, int], GradedElement]:
    """{J_a, J_b} - f_ab^c J_c for a < b (all zero iff J is equivariant)."""
    t = setup.table()
    J = setup.moment_elements(t)
    out = {}
    for a in range(setup.ell):
        for b in range(a + 1, setup.ell):
            r = super_poisson(J[a], J[b], setup)
            for c, v in setup.lie.bracket_coeffs(a, b):
                r = r - J[c].scale(v)
            out[(a, b)] = r
    return out


def _ghost(t: GeneratorTable, level: int, index: int) -> GradedElement:
    for s in t.ghost_slots(level):
        if t.generators[s].index == index:
            g = [0] * t.ngen
            g[s] = 1
            return GradedElement(t, {((0,) * t.base_dim, tuple(g), 0): Fraction(1)})
    raise KeyError((level, index))


def _antighost(t: GeneratorTable, level: int, index: int) -> GradedElement:
    for s in t.antighost_slots(level):
        if t.generators[s].index == index:
            g = [0] * t.ngen
            g[s] = 1
            return GradedElement(t, {((0,) * t.base_dim, tuple(g), 0): Fraction(1)})
    raise KeyError((level, index))


def _cubic_ghost_term(setup: Setup, t: GeneratorTable,
                      coeff: Fraction) -> GradedElement:
    """coeff * Sum f_ab^c xi^a xi^b xi_c over level-1 generators."""
    out = t.zero()
    for a in range(setup.ell):
        for b in range(setup.ell):
            for c, v in setup.lie.bracket_coeffs(a, b):
                term = mul(mul(_ghost(t, 1, a), _ghost(t, 1, b)),
                           _antighost(t, 1, c))
                out = out + term.scale(v * coeff)
    return out


def moment_ghost_term(setup: Setup,
                      t: Optional[GeneratorTable] = None) -> GradedElement:
    t = t or setup.table()
    J = setup.moment_elements(t)
    out = t.zero()
    for a in range(setup.ell):
        out = out + mul(J[a], _ghost(t, 1, a))
    return out


def classical_charge_ci(setup: Setup) -> Charge:
    """theta = -1/4 f xi xi xi + J xi, verified nilpotent for the factor-2 bracket."""
    res = equivariance_residuals(setup)
    bad = {k: v for k, v in res.items() if not v.is_zero()}
    if bad:
        raise ChargeError("moment map is not equivariant", residuals=bad)
    t = setup.table()
    theta = _cubic_ghost_term(setup, t, Fraction(-1, 4)) + moment_ghost_term(setup, t)
    sq = super_poisson(theta, theta, setup)
    if not sq.is_zero():
        raise ChargeError("{theta, theta} != 0", residuals=sq)
    return Charge(theta, "classical", {1: theta})


# -- classical differentials ------------------------------------------------------


def make_classical_delta(setup: Setup) -> Callable[[GradedElement], GradedElement]:
    """The Lie-algebra cochain differential as a super-differential operator.

    All coefficient elements are precomputed: delta applies one partial
    derivative per declared variable and multiplies from the left.
    """
    t = setup.table()
    J = setup.moment_elements(t)
    pi = setup.poisson_elements(t)
    names = t.base_names
    ghost_name = {t.generators[s].index: t.generators[s].name
                  for s in t.ghost_slots(1)}
    anti_name = {t.generators[s].index: t.generators[s].name
                 for s in t.antighost_slots(1)}
    coeffs: Dict[str, GradedElement] = {}

    def _acc(name: str, elem: GradedElement):
        coeffs[name] = coeffs.get(name, t.zero()) + elem

    for a in range(setup.ell):
        for b in range(setup.ell):
            for c, v in setup.lie.bracket_coeffs(a, b):
                _acc(ghost_name[c],
                     mul(_ghost(t, 1, a), _ghost(t, 1, b)).scale(
                         Fraction(-1, 2) * v))
                _acc(anti_name[b],
                     mul(_ghost(t, 1, a), _antighost(t, 1, c)).scale(v))
    for j in range(t.base_dim):
        e = t.zero()
        for a in range(setup.ell):
            for i in range(t.base_dim):
                dj = J[a].d(names[i])
                if dj.is_zero() or pi[i][j].is_zero():
                    continue
                e = e + mul(_ghost(t, 1, a), mul(pi[i][j], dj))
        if not e.is_zero():
            _acc(names[j], e)
    terms = [(n, e) for n, e in coeffs.items() if not e.is_zero()]

    def delta(alpha: GradedElement) -> GradedElement:
        out = t.zero()
        for n, e in terms:
            da = alpha.d(n)
            if not da.is_zero():
                out = out + mul(e, da)
        return out

    return delta


@dataclass
class ClassicalDifferentials:
    koszul: Callable
    delta: Callable
    brst: Callable
    failures: List[str] = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return not self.failures


def _level_one_words(t: GeneratorTable) -> List[tuple]:
    """All square-free generator exponent tuples (level-1 tables)."""
    words = [(0,) * t.ngen]
    for s in range(t.ngen):
        words = [w for w in words] + [w[:s] + (1,) + w[s + 1:] for w in words]
    return words


def algebra_slice_basis(t: GeneratorTable, max_base_degree: int
                        ) -> List[GradedElement]:
    out = []
    for w in _level_one_words(t):
        for d in range(max_base_degree + 1):
            for b in base_monomials(t.base_dim, d):
                out.append(GradedElement(t, {(b, w, 0): Fraction(1)}))
    return out


def classical_differential(setup: Setup, charge: Charge,
                           check_degree: int = 2) -> ClassicalDifferentials:
    """Operator bundle (koszul, delta, brst) with D = 2 d + delta asserted.

    The identities D = 2 d_koszul + delta, d^2 = 0, delta^2 = 0 and
    d delta + delta d = 0 are verified exactly on the slice basis of base
    degree <= check_degree.
    """
    t = setup.table()
    delta = make_classical_delta(setup)
    kos = lambda a: koszul_differential(a, setup)
    brst_op = hamiltonian_operator(charge.element, setup)
    failures: List[str] = []
    for e in algebra_slice_basis(t, check_degree):
        lhs = brst_op(e)
        rhs = kos(e).scale(2) + delta(e)
        if lhs != rhs:
            failures.append(f"D != 2 d + delta on {e!r}")
        if not kos(kos(e)).is_zero():
            failures.append(f"d^2 != 0 on {e!r}")
        if not delta(delta(e)).is_zero():
            failures.append(f"delta^2 != 0 on {e!r}")
        if not (kos(delta(e)) + delta(kos(e))).is_zero():
            failures.append(f"d delta + delta d != 0 on {e!r}")
    if failures:
        raise ChargeError("; ".join(failures[:5]))
    return ClassicalDifferentials(kos, delta, brst_op, failures)


# -- the general charge recursion ---------------------------------------------------


def _lowest_ghost_component(a: GradedElement) -> Tuple[int, GradedElement]:
    if a.is_zero():
        return -1, a
    by_deg: Dict[int, Dict[tuple, Fraction]] = {}
    for m, c in a.terms.items():
        by_deg.setdefault(a.mono_ghost_degree(m), {})[m] = c
    g = min(by_deg)
    return g, GradedElement(a.table, by_deg[g])


def charge_recursion(setup: Setup, resolution: TateResolution,
                     policy: TruncationPolicy) -> Charge:
    """Level-by-level BRST charge over a free Tate resolution.

    theta_j = J^(j)_a xi^a_(j) + Q_(j), where Q_(j) kills the lowest-order
    residual of the previous bracket via the slice homotopy.  After level j
    the self-bracket lies in ghost filtration j+1 (verified exactly).
    """
    res_eq = equivariance_residuals(setup)
    bad = {k: v for k, v in res_eq.items() if not v.is_zero()}
    if bad:
        raise ChargeError("constraint ideal not verified first class",
                          residuals=bad)
    t = resolution.table
    contraction = tate_contraction(resolution, policy)
    h = contraction.homotopy
    parts: Dict[int, GradedElement] = {}
    theta = t.zero()
    for level in range(1, resolution.max_level + 1):
        lead = t.zero()
        for s in t.antighost_slots(level):
            g = t.generators[s]
            lead = lead + mul(resolution.differentials[s],
                              _ghost(t, level, g.index))
        if level == 1:
            br = rothstein_flat(lead, lead, setup).scale(Fraction(1, 2))
        else:
            br = rothstein_flat(theta, theta, setup).scale(Fraction(1, 2))
        _g, r = _lowest_ghost_component(br)
        if r.is_zero():
            Q = t.zero()
        else:
            dr = resolution.differential(r)
            if not dr.is_zero():
                raise ChargeError(
                    "internal consistency error: residual is not a cycle",
                    residuals=dr)
            Q = h(r).scale(-1)
            if resolution.differential(Q) + r != t.zero():
                raise ChargeError(
                    "internal consistency error: homotopy did not solve d Q = -r",
                    residuals=resolution.differential(Q) + r)
        parts[level] = lead + Q
        theta = theta + parts[level]
        sq = rothstein_flat(theta, theta, setup)
        if filtration_degree(sq) < level + 1:
            raise ChargeError(
                f"filtration property fails after level {level}: "
                f"bracket has ghost degree {filtration_degree(sq)}",
                residuals=sq)
    final = rothstein_flat(theta, theta, setup)
    return Charge(theta, "classical", parts, residual=final)


# -- quantum side ---------------------------------------------------------------------


@dataclass
class QuantumOperators:
    """The operators of the quantum BRST double complex."""

    brst: Callable  # (1/nu) ad_*(Theta)
    delta_q: Callable
    koszul_q: Callable  # Delta = R + nu (u/2 - q)
    right_mult: Callable
    quadratic: Callable
    unimodular: Callable
    rho: Callable  # index -> operator
    policy: TruncationPolicy


def _split_mono(t: GeneratorTable, mono, c):
    b, g, nu = mono
    fb = GradedElement(t, {(b, (0,) * t.ngen, nu): c})
    v = GradedElement(t, {((0,) * t.base_dim, g, 0): Fraction(1)})
    return fb, v


def make_quantum_operators(setup: Setup, qmoment: Sequence[GradedElement],
                           policy: TruncationPolicy,
                           charge: Optional[Charge] = None) -> QuantumOperators:
    t = setup.table()
    N = policy.nu_order
    hi = replace(policy, nu_order=N + 1)
    trace = setup.lie.trace_form()
    ghost_names = {a: t.generators[s].name
                   for s in t.ghost_slots(1)
                   for a in [t.generators[s].index]}
    anti_names = {a: t.generators[s].name
                  for s in t.antighost_slots(1)
                  for a in [t.generators[s].index]}

    comm_cache: Dict[Tuple[int, tuple], GradedElement] = {}
    rmul_cache: Dict[Tuple[int, tuple], GradedElement] = {}

    def _comm_with_moment(a: int, fb: GradedElement) -> GradedElement:
        """(1/nu)[Theta_a, f] for a base-nu monomial f, cached per monomial."""
        ((mono, c),) = fb.terms.items()
        key = (a, mono[:2] + (0,))
        if key not in comm_cache:
            unit = GradedElement(t, {mono[:2] + (0,): Fraction(1)})
            d = star(qmoment[a], unit, setup, hi) - star(unit, qmoment[a], setup, hi)
            comm_cache[key] = d.divide_nu()
        base = comm_cache[key]
        shift = GradedElement(t, {((0,) * t.base_dim, (0,) * t.ngen, mono[2]): c})
        return mul(shift, base).truncate(policy)

    def _right_mult_moment(a: int, fb: GradedElement) -> GradedElement:
        ((mono, c),) = fb.terms.items()
        key = (a, mono[:2] + (0,))
        if key not in rmul_cache:
            unit = GradedElement(t, {mono[:2] + (0,): Fraction(1)})
            rmul_cache[key] = star(unit, qmoment[a], setup, hi)
        base = rmul_cache[key]
        shift = GradedElement(t, {((0,) * t.base_dim, (0,) * t.ngen, mono[2]): c})
        return mul(shift, base).truncate(policy)

    def right_mult(alpha: GradedElement) -> GradedElement:
        out = t.zero()
        for mono, c in alpha.terms.items():
            fb, v = _split_mono(t, mono, c)
            for a in range(setup.ell):
                dv = v.d(anti_names[a])
                if dv.is_zero():
                    continue
                out = out + mul(_right_mult_moment(a, fb), dv)
        return out.truncate(policy)

    def quadratic(alpha: GradedElement) -> GradedElement:
        # remaining antighost times two antighost insertions: bidegree (0,-1)
        out = t.zero()
        for mono, c in alpha.terms.items():
            fb, v = _split_mono(t, mono, c)
            for a in range(setup.ell):
                for b in range(setup.ell):
                    w = v.d(anti_names[b]).d(anti_names[a])
                    if w.is_zero():
                        continue
                    for cc, fv in setup.lie.bracket_coeffs(a, b):
                        term = mul(fb, mul(_antighost(t, 1, cc), w))
                        out = out + term.scale(Fraction(-1, 2) * fv)
        return out.truncate(policy)

    def unimodular(alpha: GradedElement) -> GradedElement:
        out = t.zero()
        for a in range(setup.ell):
            if trace[a]:
                out = out + alpha.d(anti_names[a]).scale(trace[a])
        return out.truncate(policy)

    def koszul_q(alpha: GradedElement) -> GradedElement:
        nu = GradedElement(t, {((0,) * t.base_dim, (0,) * t.ngen, 1): Fraction(1)})
        extra = unimodular(alpha).scale(Fraction(1, 2)) - quadratic(alpha)
        return (right_mult(alpha) + mul(nu, extra)).truncate(policy)

    def delta_q(alpha: GradedElement) -> GradedElement:
        # the classical Lie-algebra cochain terms, with the deformed module term
        out = t.zero()
        for a in range(setup.ell):
            for b in range(setup.ell):
                for cc, fv in setup.lie.bracket_coeffs(a, b):
                    term = mul(mul(_ghost(t, 1, a), _ghost(t, 1, b)),
                               alpha.d(ghost_names[cc]))
                    out = out + term.scale(Fraction(-1, 2) * fv)
                    term = mul(mul(_ghost(t, 1, a), _antighost(t, 1, cc)),
                               alpha.d(anti_names[b]))
                    out = out + term.scale(fv)
        for mono, c in alpha.terms.items():
            fb, v = _split_mono(t, mono, c)
            for a in range(setup.ell):
                br = _comm_with_moment(a, fb)
                if br.is_zero():
                    continue
                out = out + mul(br, mul(_ghost(t, 1, a), v))
        return out.truncate(policy)

    def brst_op(alpha: GradedElement) -> GradedElement:
        if charge is None:
            raise ChargeError("no quantum charge attached to this bundle")
        th = charge.element
        ev, od = alpha.parity_split()
        total = t.zero()
        for part, p in ((ev, 0), (od, 1)):
            if part.is_zero():
                continue
            c = star(th, part, setup, hi) - star(part, th, setup, hi).scale(
                -1 if p else 1)
            total = total + c
        return total.divide_nu().truncate(policy)

    def rho(a: int) -> Callable:
        def op(alpha: GradedElement) -> GradedElement:
            out = t.zero()
            for mono, c in alpha.terms.items():
                fb, v = _split_mono(t, mono, c)
                # adjoint action on the antighost word
                for b in range(setup.ell):
                    dv = v.d(anti_names[b])
                    if dv.is_zero():
                        continue
                    for cc, fv in setup.lie.bracket_coeffs(a, b):
                        out = out + mul(fb, mul(_antighost(t, 1, cc),
                                                dv)).scale(fv)
                br = _comm_with_moment(a, fb)
                if not br.is_zero():
                    out = out + mul(br, v)
            return out.truncate(policy)
        return op

    return QuantumOperators(brst_op, delta_q, koszul_q, right_mult, quadratic,
                            unimodular, rho, policy)


def quantum_charge(setup: Setup, qmoment: Sequence[GradedElement],
                   policy: TruncationPolicy) -> Charge:
    """Theta = -1/4 f xixixi + Theta_a xi^a + (nu/2) f_ab^b xi^a, with
    Theta * Theta = 0 verified modulo nu^{N+1}."""
    t = setup.table()
    hi = replace(policy, nu_order=policy.nu_order + 1)
    for a in range(setup.ell):
        for b in range(a + 1, setup.ell):
            r = star(qmoment[a], qmoment[b], setup, hi) \
                - star(qmoment[b], qmoment[a], setup, hi)
            for c, v in setup.lie.bracket_coeffs(a, b):
                nu_jc = GradedElement(t, {
                    m[:2] + (m[2] + 1,): cv for m, cv in qmoment[c].terms.items()})
                r = r - nu_jc.scale(v)
            r = r.truncate(policy)
            if not r.is_zero():
                raise ChargeError(
                    f"quantum moment map property fails for pair ({a},{b})",
                    residuals=r)
    theta = _cubic_ghost_term(setup, t, Fraction(-1, 4))
    for a in range(setup.ell):
        theta = theta + mul(qmoment[a], _ghost(t, 1, a))
    trace = setup.lie.trace_form()
    for a in range(setup.ell):
        if trace[a]:
            nu_ghost = GradedElement(t, {
                m[:2] + (m[2] + 1,): c for m, c in _ghost(t, 1, a).terms.items()})
            theta = theta + nu_ghost.scale(Fraction(1, 2) * trace[a])
    sq = star(theta, theta, setup, hi).truncate(policy)
    if not sq.is_zero():
        raise ChargeError("Theta * Theta != 0", residuals=sq)
    return Charge(theta, "quantum", {1: theta})


@dataclass
class QuantumDifferentials:
    ops: QuantumOperators
    failures: List[str] = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return not self.failures


def quantum_differentials(setup: Setup, charge: Charge,
                          policy: TruncationPolicy,
                          check_degree: int = 2,
                          qmoment: Optional[Sequence[GradedElement]] = None
                          ) -> QuantumDifferentials:
    """Build (brst, delta_q, Delta, R, q, u, rho) and verify the identities.

    Checks, exactly modulo nu^{N+1} on the slice basis of base degree
    <= check_degree: brst = delta_q + 2 Delta, Delta^2 = 0,
    delta_q Delta + Delta delta_q = 0, delta_q^2 = 0 and [rho_X, Delta] = 0.
    """
    qm = list(qmoment) if qmoment is not None else setup.moment_elements()
    ops = make_quantum_operators(setup, qm, policy, charge)
    t = setup.table()
    failures: List[str] = []
    basis = algebra_slice_basis(t, check_degree)
    for e in basis:
        lhs = ops.brst(e)
        rhs = (ops.delta_q(e) + ops.koszul_q(e).scale(2)).truncate(policy)
        if lhs != rhs:
            failures.append(f"brst != delta_q + 2 Delta on {e!r}")
        if not ops.koszul_q(ops.koszul_q(e)).truncate(policy).is_zero():
            failures.append(f"Delta^2 != 0 on {e!r}")
        anti = ops.delta_q(ops.koszul_q(e)) + ops.koszul_q(ops.delta_q(e))
        if not anti.truncate(policy).is_zero():
            failures.append(f"delta_q Delta + Delta delta_q != 0 on {e!r}")
        if not ops.delta_q(ops.delta_q(e)).truncate(policy).is_zero():
            failures.append(f"delta_q^2 != 0 on {e!r}")
    kbasis = [e for e in basis if e.ghost_free()]
    for a in range(setup.ell):
        ra = ops.rho(a)
        for e in kbasis:
            c = ra(ops.koszul_q(e)) - ops.koszul_q(ra(e))
            if not c.truncate(policy).is_zero():
                failures.append(f"[rho_{a}, Delta] != 0 on {e!r}")
    if failures:
        raise ChargeError("; ".join(failures[:5]))
    return QuantumDifferentials(ops, failures)
