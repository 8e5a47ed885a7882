"""The acceptance battery, report records and deterministic merging of check results."""

import hashlib
import json
import logging
import math
import random
import time
from collections.abc import Callable, Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Any, NamedTuple

from .errors import InvalidStructureError, LabError
from .frame_logic import check_loeb, check_wellpointed_lex, downset_frame, loop_frame
from .generators import (
    compatible_precs,
    naturally_labelled_posets,
    random_clockless_presheaf,
    random_multipresheaf,
    random_natural_step,
    random_staged_set,
)
from .multiclock import (
    EMPTY_CONTEXT,
    LAW_CLOCKS,
    LAW_DEPTH,
    ClockContext,
    KCategory,
    MultiPresheaf,
    along_clock,
    alternating,
    check_clk_subcategory,
    check_clock_irrelevance,
    check_fiber_fixpoints,
    check_force_iso,
    check_fp_op_iso,
    check_kcat_laws,
    check_later_commute,
    check_semidirect_equivalence,
    check_wellpointed_k,
    clock_product,
    co_head,
    co_tail,
    co_take,
    cons_literal_k,
    fp_terminal_hom_counts,
    naturals,
    zeros,
)
from .order_core import (
    AxiomReport,
    FinitePreorder,
    PosetReflection,
    WfRelation,
    antichain,
    check_global_adequacy,
    is_compatible_wf,
    is_connected,
    omega,
)
from .theory_kit import (
    bag_theory,
    cartesian_simplify,
    chain_filt_theory,
    enumerate_bag_models,
    enumerate_models,
    filt_theory,
    filters_as_models,
    ibag_theory,
)
from .tree_semantics import (
    GuardedStream,
    StagedMap,
    alternating_step,
    check_fix_unique,
    cons_literal_step,
    cycle_step,
    gfix,
    map_successor_step,
    satisfies_fixed_point,
)
from .wtypes import WTree, binary_polynomial, build_wtrees, plump_order, plump_poset, unary_polynomial

logger = logging.getLogger(__name__)

GENERATED_STEPS = 20
GENERATED_PRESHEAVES = 10
MAX_BAG_POSET_SIZE = 4
PLUMP_CHAIN_DEPTH = 6
PLUMP_BINARY_DEPTH = 3
STREAM_MODULUS = 10
ADEQUACY_VALUES = (0, 1, 2)


class CheckResult(NamedTuple):
    """One named check: pass/fail, a JSON-safe witness when it fails, and a short detail line."""

    name: str
    passed: bool
    witness: Any = None
    detail: str = ""

    def to_json(self) -> dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "witness": jsonable(self.witness), "detail": self.detail}


class RunReport(NamedTuple):
    command: str
    inputs: str
    results: tuple[CheckResult, ...]
    elapsed: float

    @property
    def ok(self) -> bool:
        return all(result.passed for result in self.results)

    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(result for result in self.results if not result.passed)

    def to_json(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "results": [result.to_json() for result in self.results],
            "elapsed": round(self.elapsed, 3),
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "RunReport":
        results = tuple(CheckResult(r["name"], r["passed"], r.get("witness"), r.get("detail", "")) for r in doc["results"])
        return cls(doc["command"], doc["inputs"], results, doc.get("elapsed", 0.0))


class SuiteOptions(NamedTuple):
    """Scale and seed of the acceptance battery."""

    stages: int = 8
    bound: int = 3
    max_k: int = 3
    seed: int = 0
    max_poset_size: int = 5
    workers: int = 1

    def params(self) -> dict[str, int]:
        """Everything that influences results (the worker count does not)."""
        return {"stages": self.stages, "bound": self.bound, "max_k": self.max_k, "seed": self.seed, "max_poset_size": self.max_poset_size}


def jsonable(value: Any) -> Any:
    """Convert a witness into plain JSON values with a stable order."""
    if value is None or isinstance(value, bool | int | float | str):
        return value
    if isinstance(value, WTree):
        return str(value)
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, set | frozenset):
        return sorted((jsonable(v) for v in value), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(value, tuple | list):
        return [jsonable(v) for v in value]
    return str(value)


def digest_files(paths: Iterable[Path]) -> str:
    """SHA-256 over the bytes of the input files, in the given order."""
    h = hashlib.sha256()
    for path in paths:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(8192), b""):
                h.update(chunk)
    return h.hexdigest()


def digest_params(params: Mapping[str, Any]) -> str:
    return hashlib.sha256(json.dumps(jsonable(params), sort_keys=True).encode("utf-8")).hexdigest()


def report_check(name: str, report: AxiomReport, detail: str = "") -> CheckResult:
    """Fold an axiom report into one check result naming the first failed axiom."""
    failures = report.failures()
    if not failures:
        return CheckResult(name, True, None, detail)
    first = failures[0]
    return CheckResult(name, False, {"axiom": first.axiom, "witness": jsonable(first.witness)}, detail)


def _poset_witness(P: FinitePreorder) -> dict[str, Any]:
    return {"elements": list(P.elements), "leq": jsonable(sorted(P.leq, key=repr))}


def _is_total(P: FinitePreorder) -> bool:
    return all(P.le(u, v) or P.le(v, u) for u in P.elements for v in P.elements)


def _multisets(size: int, m: int) -> int:
    """Number of multisets of m items drawn from `size` kinds."""
    return math.comb(size + m - 1, m) if size else int(m == 0)


def _matches_chain(reflection: PosetReflection, n: int) -> bool:
    """Is the reflected order isomorphic to the n-point chain with its strict order?"""
    Q = reflection.quotient
    if len(Q) != n or not _is_total(Q):
        return False
    ranked = sorted(Q.elements, key=lambda q: len(Q.down(q)))
    strict = {(ranked[i], ranked[j]) for i in range(n) for j in range(i + 1, n)}
    return set(reflection.reflected_prec) == strict


def check_loeb_soundness(options: SuiteOptions) -> CheckResult:
    """Loeb induction on the downset frame of every small poset under every compatible relation."""
    name = "loeb_soundness"
    frames = 0
    for n in range(options.max_poset_size + 1):
        for P in naturally_labelled_posets(n):
            base = downset_frame(WfRelation(P))
            for prec in compatible_precs(P):
                frames += 1
                BF = base.with_prec(prec)
                result = check_loeb(BF)
                if not result.passed:
                    witness = _poset_witness(P) | {"prec": jsonable(sorted(prec)), "phi": BF.frame.label(result.counterexample)}
                    return CheckResult(name, False, witness, f"failed after {frames} frames")
                lex = check_wellpointed_lex(BF)
                if not lex.ok:
                    witness = _poset_witness(P) | {"prec": jsonable(sorted(prec)), "axiom": lex.failures()[0].axiom}
                    return CheckResult(name, False, witness, f"failed after {frames} frames")
    return CheckResult(name, True, None, f"{frames} frames on posets of size <= {options.max_poset_size}")


def check_loeb_necessity(options: SuiteOptions) -> CheckResult:
    """The loop frame refutes Loeb induction at the bottom open."""
    BF = loop_frame()
    result = check_loeb(BF)
    passed = not result.passed and result.counterexample == BF.frame.bottom and not BF.wf_report().ok
    witness = None if passed else {"loeb_passed": result.passed, "counterexample": jsonable(result.counterexample)}
    return CheckResult("loeb_necessity", passed, witness, "loop frame refuted at bot")


def _builtin_steps() -> list[StagedMap]:
    letters = GuardedStream(("a", "b", "c"))
    binary = GuardedStream((0, 1))
    counting = GuardedStream(range(STREAM_MODULUS))
    return [
        cycle_step(letters, ("a", "c")),
        cons_literal_step(letters, "b"),
        map_successor_step(counting),
        alternating_step(binary),
    ]


def check_guarded_fixpoints(options: SuiteOptions) -> CheckResult:
    """Random natural steps later(A) -> A and the built-in stream steps have unique guarded fixed points."""
    name = "guarded_fixpoints"
    stages = options.stages
    rng = random.Random(options.seed)
    steps = []
    for i in range(GENERATED_STEPS):
        A = random_staged_set(rng, stages, name=f"A{i}")
        steps.append(random_natural_step(rng, A, stages))
    steps.extend(_builtin_steps())

    for f in steps:
        fixed = gfix(f)
        family = fixed.prefix(stages)
        if fixed.compatibility_failure(stages) is not None or not satisfies_fixed_point(f, family):
            return CheckResult(name, False, {"step": f.name, "family": jsonable(family)}, "fixed-point equation fails")
        if not check_fix_unique(f, stages):
            return CheckResult(name, False, {"step": f.name}, "fixed point is not unique")
    return CheckResult(name, True, None, f"{len(steps)} steps on {stages} stages")


def check_stream_programs(options: SuiteOptions) -> CheckResult:
    """take/head/tail on the coinductive naturals, zeros and alternating streams."""
    name = "stream_programs"
    s = naturals(STREAM_MODULUS)
    for n in range(options.stages + 1):
        taken = co_take(n, s)
        expected = [i % STREAM_MODULUS for i in range(n)]
        if taken != expected:
            return CheckResult(name, False, {"n": n, "take": taken, "expected": expected}, "take naturals")
        if n and taken != [co_head(s)] + co_take(n - 1, co_tail(s)):
            return CheckResult(name, False, {"n": n}, "take (n+1) u = head u :: take n (tail u)")
    if co_take(0, s) != []:
        return CheckResult(name, False, {"n": 0}, "take 0 u = []")

    n = options.stages
    if co_take(n, zeros()) != [0] * n:
        return CheckResult(name, False, {"stream": "zeros", "take": co_take(n, zeros())}, "take zeros")
    if co_take(n, alternating()) != [i % 2 for i in range(n)]:
        return CheckResult(name, False, {"stream": "alternating", "take": co_take(n, alternating())}, "take alternating")
    return CheckResult(name, True, None, f"take 0..{options.stages} on naturals mod {STREAM_MODULUS}")


def _contexts_for(X: MultiPresheaf, other: str = "l", depth: int = 2) -> list[ClockContext]:
    if other in X.free_clocks:
        return [ClockContext.of({other: d}) for d in range(depth + 1)]
    return [EMPTY_CONTEXT, ClockContext.of({other: 0})]


def check_force(options: SuiteOptions) -> CheckResult:
    """force and next under the quantifier are mutually inverse on generated presheaves."""
    name = "force_iso"
    rng = random.Random(options.seed)
    for i in range(GENERATED_PRESHEAVES):
        X = random_multipresheaf(rng, options.stages + 2)
        for ctx in _contexts_for(X):
            result = report_check(name, check_force_iso(X, "k", ctx, options.stages))
            if not result.passed:
                return result._replace(detail=f"presheaf #{i} {X.name} at {ctx.label()}")
    return CheckResult(name, True, None, f"{GENERATED_PRESHEAVES} presheaves up to depth {options.stages}")


def check_irrelevance(options: SuiteOptions) -> CheckResult:
    """Quantifying a clock a presheaf does not mention changes nothing."""
    name = "clock_irrelevance"
    rng = random.Random(options.seed)
    for i in range(GENERATED_PRESHEAVES):
        X = random_clockless_presheaf(rng, options.stages + 2)
        for ctx in _contexts_for(X):
            check = check_clock_irrelevance(X, "k", ctx, options.stages)
            if not check.passed:
                return CheckResult(name, False, jsonable(check.witness), f"presheaf #{i} {X.name} at {ctx.label()}")
    return CheckResult(name, True, None, f"{GENERATED_PRESHEAVES} presheaves up to depth {options.stages}")


def check_classifying_filters(options: SuiteOptions) -> CheckResult:
    """Models of the filter theory are the filters, in every available presentation."""
    name = "classifying_filters"
    posets = 0
    for n in range(options.max_poset_size + 1):
        for P in naturally_labelled_posets(n):
            posets += 1
            oracle = filters_as_models(P)
            presentations = [("filt", filt_theory(P))]
            if _is_total(P):
                presentations.append(("chain", chain_filt_theory(P)))
            try:
                presentations.append(("cartesian", cartesian_simplify(P)))
            except InvalidStructureError:
                pass
            for label, theory in presentations:
                if set(enumerate_models(theory)) != oracle:
                    return CheckResult(name, False, _poset_witness(P) | {"presentation": label}, "model set differs from filters")
    return CheckResult(name, True, None, f"{posets} posets of size <= {options.max_poset_size}")


def check_bag_counts(options: SuiteOptions) -> CheckResult:
    """Bag and IBag model counts are sums of powers of the number of filters."""
    name = "bag_counts"
    posets = 0
    for n in range(min(MAX_BAG_POSET_SIZE, options.max_poset_size) + 1):
        for P in naturally_labelled_posets(n):
            posets += 1
            T = filt_theory(P)
            f = len(filters_as_models(P))
            bag = enumerate_bag_models(bag_theory(T), options.max_k)
            ibag = enumerate_bag_models(ibag_theory(T), options.max_k)
            expected = {m: f**m for m in range(options.max_k + 1)}
            expected_iso = {m: _multisets(f, m) for m in range(options.max_k + 1)}
            inhabited = {m: c for m, c in expected.items() if m > 0}
            if bag.raw_counts != expected or bag.iso_counts != expected_iso or ibag.raw_counts != inhabited:
                witness = _poset_witness(P) | {"filters": f, "bag": jsonable(bag.raw_counts), "ibag": jsonable(ibag.raw_counts)}
                return CheckResult(name, False, witness, "counts differ")
            if bag.raw_total - ibag.raw_total != 1:
                return CheckResult(name, False, _poset_witness(P), "IBag must drop exactly the empty index set")
    return CheckResult(name, True, None, f"{posets} posets, index sets of size <= {options.max_k}")


def check_clock_categories(options: SuiteOptions) -> CheckResult:
    """The clock category against FP(omega)^op, CLK, the semidirect construction and the category laws."""
    name = "clock_categories"
    clocks, depth = options.bound, options.bound + 1
    for label, report in (
        ("fp_op_iso", check_fp_op_iso(clocks, depth)),
        ("semidirect", check_semidirect_equivalence(clocks, depth)),
        ("kcat_laws", check_kcat_laws(LAW_CLOCKS, LAW_DEPTH)),
    ):
        result = report_check(name, report)
        if not result.passed:
            return result._replace(detail=label)
    clk = check_clk_subcategory(clocks, depth)
    if not clk.passed:
        return CheckResult(name, False, jsonable(clk.witness), clk.axiom)
    counts = fp_terminal_hom_counts(clocks)
    wrong = next(((m, n) for (m, n), count in counts.items() if count != m**n), None)
    if wrong is not None:
        return CheckResult(name, False, {"sizes": list(wrong), "count": counts[wrong]}, "hom-set sizes of FP(1)")
    return CheckResult(name, True, None, f"{clocks} clocks, depths <= {depth}; composition laws on {LAW_CLOCKS} clocks, depths <= {LAW_DEPTH}")


def check_presheaf_laws(options: SuiteOptions) -> CheckResult:
    """Functoriality, commuting laters, well-pointedness and fiberwise fixed points for two clocks."""
    name = "clock_presheaf_laws"
    rng = random.Random(options.seed)
    depth = options.bound
    A = random_staged_set(rng, depth + 2, name="A")
    B = random_staged_set(rng, depth + 2, name="B")
    X = clock_product(along_clock(A, "k0"), along_clock(B, "k1"))
    category = KCategory(("k0", "k1"), depth, fixing=("k0", "k1"))
    for check in (
        X.check_functoriality(category),
        check_later_commute(X, "k0", "k1", category),
        check_wellpointed_k(X, "k0", category.objects),
        check_fiber_fixpoints(
            cons_literal_k(GuardedStream((0, 1)), 0, "k"),
            "k",
            [EMPTY_CONTEXT] + [ClockContext.of({"l": d}) for d in range(depth + 1)],
            options.stages,
        ),
    ):
        if not check.passed:
            return CheckResult(name, False, jsonable(check.witness), check.axiom)
    return CheckResult(name, True, None, f"{len(category.objects)} two-clock contexts")


def check_plump_ordering(options: SuiteOptions) -> CheckResult:
    """The unary plump order is a chain; the binary one is a compatible well-founded preorder."""
    name = "plump_ordering"
    reflection = plump_poset(unary_polynomial(), PLUMP_CHAIN_DEPTH)
    if not _matches_chain(reflection, PLUMP_CHAIN_DEPTH):
        return CheckResult(name, False, {"points": jsonable(reflection.quotient.elements)}, f"unary depth {PLUMP_CHAIN_DEPTH} is not a chain")
    order = plump_order(build_wtrees(binary_polynomial(), PLUMP_BINARY_DEPTH))
    report = is_compatible_wf(order.as_wf())
    if not report.ok:
        return report_check(name, report, f"binary depth {PLUMP_BINARY_DEPTH}")
    return CheckResult(name, True, None, f"unary depth {PLUMP_CHAIN_DEPTH}, binary depth {PLUMP_BINARY_DEPTH}")


def _diamond() -> WfRelation:
    P, _ = FinitePreorder.closure(("bot", "a", "b", "top"), (("bot", "a"), ("bot", "b"), ("a", "top"), ("b", "top")))
    return WfRelation(P, P.strict_pairs())


def check_adequacy(options: SuiteOptions) -> CheckResult:
    """Global adequacy holds on connected instances with connected strict part and fails on an antichain."""
    name = "global_adequacy"
    positive: list[tuple[str, WfRelation]] = [(f"omega{n}", omega(n)) for n in range(2, 6)]
    positive.append(("diamond", _diamond()))
    for label, w in positive:
        strict_part = w.base.restrict(w.strict_domain())
        if not (is_connected(w.base) and strict_part.elements and is_connected(strict_part)):
            return CheckResult(name, False, {"instance": label}, "instance is not connected")
        if not check_global_adequacy(w, ADEQUACY_VALUES):
            return CheckResult(name, False, {"instance": label}, "comparison map is not a bijection")

    negative = WfRelation(antichain(("a", "b")))
    if check_global_adequacy(negative, ADEQUACY_VALUES):
        return CheckResult(name, False, {"instance": "antichain2"}, "disconnected instance passed")
    return CheckResult(name, True, None, f"{len(positive)} connected instances, antichain refuted")


SUITE_CHECKS: dict[str, Callable[[SuiteOptions], CheckResult]] = {
    "loeb_soundness": check_loeb_soundness,
    "loeb_necessity": check_loeb_necessity,
    "guarded_fixpoints": check_guarded_fixpoints,
    "stream_programs": check_stream_programs,
    "force_iso": check_force,
    "clock_irrelevance": check_irrelevance,
    "classifying_filters": check_classifying_filters,
    "bag_counts": check_bag_counts,
    "clock_categories": check_clock_categories,
    "clock_presheaf_laws": check_presheaf_laws,
    "plump_ordering": check_plump_ordering,
    "global_adequacy": check_adequacy,
}


def run_suite(options: SuiteOptions, names: Iterable[str] | None = None) -> RunReport:
    """
    Run the selected checks (all by default) on a thread pool of `options.workers`.

    A check that raises a LabError is recorded as failed with the error message; results
    are merged in name order whatever order they finish in.

    Raises:
        KeyError: if a name is not a known check
    """
    selected = sorted(SUITE_CHECKS) if names is None else sorted(set(names))
    for check_name in selected:
        if check_name not in SUITE_CHECKS:
            raise KeyError(check_name)

    start = time.perf_counter()
    results: list[CheckResult] = []
    errors: list[tuple[str, Exception]] = []
    with ThreadPoolExecutor(max_workers=max(1, options.workers)) as pool:
        futures = {pool.submit(SUITE_CHECKS[check_name], options): check_name for check_name in selected}
        for future in as_completed(futures):
            check_name = futures[future]
            try:
                result = future.result()
            except LabError as e:
                errors.append((check_name, e))
                result = CheckResult(check_name, False, {"error": type(e).__name__}, str(e))
            logger.debug("%s: %s", check_name, "passed" if result.passed else "FAILED")
            results.append(result)

    for check_name, error in errors:
        logger.warning("%s raised %s: %s", check_name, type(error).__name__, error)

    elapsed = time.perf_counter() - start
    return RunReport("suite", digest_params(options.params()), tuple(sorted(results, key=lambda r: r.name)), elapsed)
