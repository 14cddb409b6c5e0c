"""Exact symbolic engine for BFV/BRST homological reduction.

Graded ghost/antighost algebras over the rationals, Koszul and Koszul-Tate
complexes, classical and quantum BRST charges, and reduced star products,
with every algebraic identity verified exactly.
"""

from .algebra import (ANTIGHOST, GHOST, Generator, GeneratorTable,
                      GradedElement, TruncationPolicy, filtration_degree,
                      level_one_table, mul, rothstein_flat, star,
                      star_commutator, super_poisson)
from .enveloping import LieData, bch_star, linear_poisson_bracket
from .grading import Multidegree, SignedPermutation, koszul_sign, parity
from .hpt import (Complex, ContractViolation, Contraction, DivergenceError,
                  normalize_side_conditions, perturb_keep_i, perturb_keep_p,
                  verify_contraction)
from .koszul import (NormalForms, Setup, SetupError, homology_ranks,
                     koszul_differential, linear_contraction,
                     slice_contraction)
from .schouten import (arity, check_poisson_tensor, derived_bracket,
                       lichnerowicz, polyvector_table, schouten_bracket)
from .tate import TateResolution, build_resolution, extend_level, poincare_check

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
