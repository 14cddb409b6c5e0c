"""Batch front-end: load setups, run pipelines, emit machine-readable reports.

Exit codes: 0 all selected assertions pass (expected failures count as
passes), 1 assertion failure, 2 parse/usage error, 3 cap exhaustion with a
partial report.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from . import brst, hypotheses, reduction, tate
from .algebra import TruncationPolicy
from .catalog import CATALOG, build
from .enveloping import LieData
from .hpt import ContractViolation, DivergenceError, verify_contraction
from .koszul import (AcyclicityError, Setup, SetupError, homology_ranks,
                     linear_contraction, slice_contraction)
from .polyparse import PolyParseError, parse_polynomial

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_CAP = 3

PIPELINES = ("hypotheses", "koszul", "tate", "charge", "reduce", "all")


class Report:
    def __init__(self, setup: Setup, policy: TruncationPolicy,
                 stages: Sequence[str], seed: int, timings: bool):
        self.doc: Dict = {
            "schema": 1,
            "setup": {
                "name": setup.name,
                "base_dim": setup.base_dim,
                "ell": setup.ell,
                "hash": setup_hash(setup),
            },
            "policy": {
                "nu_order": policy.nu_order,
                "degree": policy.poly_degree,
                "level": policy.antighost_level,
            },
            "pipeline": list(stages),
            "seed": seed,
            "checks": [],
            "ok": True,
            "partial": False,
        }
        self.timings = timings
        self.expected = setup.expected

    def check(self, name: str, verdict: bool, data: Optional[Dict] = None,
              expected_key: Optional[str] = None):
        rec: Dict = {"name": name, "verdict": "pass" if verdict else "fail"}
        if data:
            rec["data"] = data
        expected = None
        if expected_key is not None:
            expected = self.expected.get(expected_key)
        if expected is not None:
            rec["expected"] = bool(expected)
            rec["expected_fail"] = not expected
            ok = verdict == bool(expected)
        else:
            ok = verdict
        rec["ok"] = ok
        if not ok:
            self.doc["ok"] = False
        self.doc["checks"].append(rec)
        return ok

    def cap(self, name: str, message: str):
        self.doc["checks"].append(
            {"name": name, "verdict": "cap", "ok": False, "data":
             {"message": message}})
        self.doc["partial"] = True

    def dump(self) -> str:
        return json.dumps(self.doc, indent=2, sort_keys=True) + "\n"


def setup_hash(setup: Setup) -> str:
    blob = repr((setup.name, setup.base_dim,
                 tuple(tuple(sorted((k, str(v)) for k, v in e.items())
                             for e in row) for row in setup.poisson),
                 tuple(tuple(sorted((k, str(v)) for k, v in p.items()))
                       for p in setup.moment),
                 setup.weights)).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# -- pipeline stages --------------------------------------------------------------


def run_hypotheses(setup: Setup, policy: TruncationPolicy, report: Report):
    eq = hypotheses.equivariance_first_class(setup)
    report.check("equivariance_first_class", eq.ok,
                 {"nonzero_residuals": sum(1 for v in eq.residuals.values()
                                           if not v.is_zero())},
                 expected_key="equivariant")
    if setup.weights is not None:
        cone = hypotheses.cone_test(setup.weights)
        data = {}
        if cone.witness:
            data["witness"] = [str(x) for x in cone.witness]
        report.check("cone_test", cone.ok, data, expected_key="cone_test")
    if setup.points:
        probe = hypotheses.rank_probe(setup)
        report.check("rank_probe_full_rank", probe.full_rank_attained,
                     {"ranks": [p.rank for p in probe.probes],
                      "ell": probe.ell},
                     expected_key="full_rank_attained")
        report.check("regular_stratum_evidence_empty",
                     probe.regular_stratum_evidence_empty,
                     expected_key="regular_stratum_empty")


def _build_contraction(setup: Setup, policy: TruncationPolicy):
    r = setup.homogeneity()
    if r == 1:
        try:
            return linear_contraction(setup)
        except SetupError:
            return None
    if r == 2:
        return slice_contraction(setup, policy)
    return None


def run_koszul(setup: Setup, policy: TruncationPolicy, report: Report):
    if setup.homogeneity() is None:
        report.cap("koszul_homology", "inhomogeneous moment map")
        return None
    table = homology_ranks(setup, policy)
    report.check("koszul_acyclic_positive_degrees", table.acyclic_positive(),
                 {"entries": [[e.weight, e.k, e.dim_homology]
                              for e in table.entries if e.dim_homology and e.k]},
                 expected_key="complete_intersection")
    report.check("koszul_euler_consistency", table.euler_consistent())
    try:
        contr = _build_contraction(setup, policy)
    except AcyclicityError as exc:
        report.cap("koszul_contraction", str(exc))
        return None
    if contr is None:
        return None
    probe_cap = min(policy.poly_degree or 4, 4)
    failures = verify_contraction(
        contr, contr.big.basis(weight=probe_cap),
        contr.small.basis(weight=probe_cap))
    report.check("koszul_contraction_identities", not failures,
                 {"failures": failures[:3]})
    return contr


def run_tate(setup: Setup, policy: TruncationPolicy, report: Report):
    level = policy.antighost_level or 2
    try:
        res = tate.build_resolution(setup, level, policy)
    except SetupError as exc:
        report.cap("tate_resolution", str(exc))
        return None
    counts = res.level_counts()
    report.check("tate_differential_squares_to_zero",
                 res.check_differential_squares_to_zero(
                     min(policy.poly_degree or 6, 6), level + 1),
                 {"level_counts": {str(k): v for k, v in counts.items()}})
    ok, lhs, rhs = tate.poincare_check(res, policy)
    report.check("tate_poincare_series", ok, {"lhs": lhs, "rhs": rhs})
    return res


def run_charge(setup: Setup, policy: TruncationPolicy, report: Report,
               resolution=None):
    eq = hypotheses.equivariance_first_class(setup)
    if not eq.ok:
        report.cap("classical_charge", "moment map not equivariant")
        return
    charge = brst.classical_charge_ci(setup)
    report.check("classical_charge_nilpotent", True,
                 {"terms": len(charge.element.terms)})
    try:
        brst.classical_differential(setup, charge,
                                    check_degree=min(policy.poly_degree or 2, 2))
        report.check("classical_differential_identities", True)
    except brst.ChargeError as exc:
        report.check("classical_differential_identities", False,
                     {"message": str(exc)})
    if resolution is not None and resolution.max_level >= 2:
        try:
            rec = brst.charge_recursion(setup, resolution, policy)
            fdeg = rec.residual_filtration()
            report.check(
                "charge_recursion_filtration",
                fdeg >= resolution.max_level + 1,
                {"residual_filtration": None if fdeg == float("inf")
                 else int(fdeg)})
        except brst.ChargeError as exc:
            report.check("charge_recursion_filtration", False,
                         {"message": str(exc)})
    if setup.homogeneity() == 2:
        try:
            setup.poisson_constants()
        except SetupError:
            return
        qcharge = brst.quantum_charge(setup, setup.moment_elements(), policy)
        report.check("quantum_charge_squares_to_zero", True,
                     {"terms": len(qcharge.element.terms)})
        try:
            brst.quantum_differentials(
                setup, qcharge, policy,
                check_degree=min(policy.poly_degree or 2, 2))
            report.check("quantum_differential_identities", True)
        except brst.ChargeError as exc:
            report.check("quantum_differential_identities", False,
                         {"message": str(exc)})


def run_reduce(setup: Setup, policy: TruncationPolicy, report: Report,
               contraction=None):
    if setup.weights is None or setup.homogeneity() != 2 or setup.ell != 1:
        report.cap("reduction", "reduction pipeline needs a single quadratic "
                                "torus moment component")
        return
    try:
        contraction = reduction.equivariant_contraction(setup, policy)
    except SetupError as exc:
        report.cap("reduction", str(exc))
        return
    table = reduction.build_reduced_product_table(
        setup, policy, contraction, degree=2)
    nonzero = sum(1 for r in table.assoc_residuals.values() if not r.is_zero())
    report.check("reduced_star_associativity", table.associative(),
                 {"generators": len(table.generators),
                  "nonzero_residuals": nonzero})
    # semiclassical comparison on the first few pairs
    qc = reduction.quantum_contraction(setup, contraction, policy)
    bad = 0
    gens = table.generators[:4]
    for i, f in enumerate(gens):
        for j, g in enumerate(gens):
            fg = table.products.get((i, j))
            gf = table.products.get((j, i))
            if fg is None or gf is None:
                continue
            lhs = (fg - gf).nu_coefficient(1)
            rhs = reduction.classical_reduced_bracket(setup, f, g, contraction)
            if lhs != rhs:
                bad += 1
    report.check("reduced_star_semiclassical_limit", bad == 0,
                 {"pairs_checked": len(gens) ** 2, "mismatches": bad})


def run_pipeline(setup: Setup, policy: TruncationPolicy,
                 stages: Sequence[str], seed: int, timings: bool) -> Report:
    report = Report(setup, policy, stages, seed, timings)
    todo = set(stages)
    if "all" in todo:
        todo = {"hypotheses", "koszul", "tate", "charge", "reduce"}
    t0 = time.monotonic()
    contraction = None
    resolution = None
    try:
        if "hypotheses" in todo:
            run_hypotheses(setup, policy, report)
        if "koszul" in todo or "reduce" in todo:
            contraction = run_koszul(setup, policy, report)
        if "tate" in todo or "charge" in todo:
            resolution = run_tate(setup, policy, report) \
                if "tate" in todo else None
        if "charge" in todo:
            run_charge(setup, policy, report, resolution)
        if "reduce" in todo:
            run_reduce(setup, policy, report, contraction)
    except (DivergenceError, ContractViolation, AcyclicityError,
            tate.CapError) as exc:
        report.cap("pipeline", str(exc))
    if timings:
        report.doc["timings"] = {"total_s": round(time.monotonic() - t0, 3)}
    return report


# -- setup files --------------------------------------------------------------------


def _frac(v) -> Fraction:
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (int,)):
        return Fraction(v)
    raise SetupError(f"expected an integer or a 'p/q' string, got {v!r}")


def load_setup_file(path: str) -> tuple:
    import tomli
    with open(path, "rb") as fh:
        try:
            doc = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise PolyParseError(f"TOML error: {exc}", 0)
    if doc.get("schema") != 1:
        raise SetupError("setup file must declare schema = 1")
    base_dim = doc["base_dim"]
    names = doc.get("base_names", [f"x{i+1}" for i in range(base_dim)])
    if len(names) != base_dim:
        raise SetupError("base_names length must equal base_dim")

    def entry(e, where):
        if isinstance(e, str):
            try:
                return parse_polynomial(e, names)
            except PolyParseError as exc:
                raise PolyParseError(f"{where}: {exc}", exc.position)
        return _frac(e)

    poisson = [[entry(e, f"poisson[{i}][{j}]") for j, e in enumerate(row)]
               for i, row in enumerate(doc["poisson"])]
    moment = [entry(e, f"moment[{a}]") for a, e in enumerate(doc["moment"])]
    f = doc.get("lie", {}).get("f")
    if f is None:
        ell = len(moment)
        f = [[[0] * ell for _ in range(ell)] for _ in range(ell)]
    lie = LieData([[[_frac(x) for x in row] for row in plane] for plane in f])
    weights = doc.get("torus", {}).get("weights")
    points = [tuple(_frac(x) for x in p["coords"])
              for p in doc.get("points", [])]
    setup = Setup(name=doc.get("name", "custom"), base_dim=base_dim,
                  poisson=poisson, lie=lie, moment=moment, weights=weights,
                  points=points, base_names=names)
    pol = doc.get("policy", {})
    policy = TruncationPolicy(
        nu_order=pol.get("nu_order", 3),
        poly_degree=pol.get("degree", 6),
        antighost_level=pol.get("level", 2))
    stages = doc.get("pipeline", {}).get("stages", ["hypotheses"])
    for s in stages:
        if s not in PIPELINES:
            raise SetupError(f"unknown pipeline stage {s!r}")
    return setup, policy, stages


# -- entry points --------------------------------------------------------------------


def list_examples(as_json: Optional[str], flt: Optional[str]) -> int:
    rows = []
    for name in CATALOG:
        if flt and flt not in name:
            continue
        setup = build(name)
        rows.append({
            "name": name,
            "base_dim": setup.base_dim,
            "ell": setup.ell,
            "expected": {k: v for k, v in sorted(setup.expected.items())},
        })
    doc = {"schema": 1, "examples": rows}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if as_json:
        with open(as_json, "w") as fh:
            fh.write(text)
    else:
        for row in rows:
            sys.stdout.write(f"{row['name']}  (base_dim={row['base_dim']}, "
                             f"ell={row['ell']})\n")
        if not rows:
            sys.stdout.write("(no matching examples)\n")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(
        prog="homred",
        description="exact homological reduction pipelines")
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a pipeline on a setup")
    src = runp.add_mutually_exclusive_group(required=True)
    src.add_argument("--example", choices=sorted(CATALOG))
    src.add_argument("--setup", metavar="PATH")
    runp.add_argument("--pipeline", choices=PIPELINES, default="hypotheses")
    runp.add_argument("--nu-order", type=int, default=3)
    runp.add_argument("--degree", type=int, default=6)
    runp.add_argument("--level", type=int, default=2)
    runp.add_argument("--json", metavar="OUT")
    runp.add_argument("--seed", type=int, default=0)
    runp.add_argument("--timings", action="store_true")
    runp.add_argument("--n", type=int, help="parameter for parametric examples")
    runp.add_argument("--m", type=int)
    runp.add_argument("--alpha", type=int)
    runp.add_argument("--beta", type=int)
    runp.add_argument("--algebra", type=str)
    runp.add_argument("--ell", type=int)

    lsp = sub.add_parser("list-examples", help="list the catalog")
    lsp.add_argument("--json", metavar="OUT")
    lsp.add_argument("--filter")

    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK

    if args.command == "list-examples":
        return list_examples(args.json, args.filter)

    try:
        if args.example:
            params = {}
            for key in ("n", "m", "alpha", "beta", "algebra", "ell"):
                v = getattr(args, key)
                if v is not None:
                    params[key] = v
            setup = build(args.example, **params)
            policy = TruncationPolicy(nu_order=args.nu_order,
                                      poly_degree=args.degree,
                                      antighost_level=args.level)
            stages = [args.pipeline]
        else:
            setup, policy, stages = load_setup_file(args.setup)
            if args.pipeline != "hypotheses":
                stages = [args.pipeline]
    except (PolyParseError, SetupError, FileNotFoundError, KeyError,
            TypeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE

    report = run_pipeline(setup, policy, stages, args.seed, args.timings)
    text = report.dump()
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if report.doc["partial"]:
        return EXIT_CAP
    return EXIT_OK if report.doc["ok"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
