"""JSON input files: posets, frames, polynomials, theories and fixpoint programs."""

import json
import logging
from collections.abc import Hashable, Mapping
from pathlib import Path
from typing import Any, NamedTuple

from .errors import FormatError
from .frame_logic import BasedFrame, FiniteFrame, downset_frame
from .order_core import FinitePreorder, Pair, PosetReflection, WfRelation
from .theory_kit import BOTTOM, TOP, Conj, Disj, Formula, GeometricTheory, Sequent, Symbol
from .tree_semantics import GuardedStream, StagedMap, alternating_step, cons_literal_step, cycle_step, map_successor_step
from .wtypes import Polynomial

logger = logging.getLogger(__name__)

FIXPOINT_FAMILIES = ("constant", "cons-literal", "map-successor", "alternating")


class FixpointProgram(NamedTuple):
    """A built-in step family instantiated from a fixpoint file."""

    family: str
    stream: GuardedStream
    step: StagedMap


def read_json(path: Path) -> Any:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise FormatError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e


def _object(doc: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(doc, dict):
        raise FormatError("expected an object", path)
    return doc


def _list(doc: Mapping[str, Any], key: str, path: str, required: bool = True) -> list[Any]:
    if key not in doc:
        if required:
            raise FormatError(f"missing key {key!r}", path)
        return []
    value = doc[key]
    if not isinstance(value, list):
        raise FormatError("expected a list", f"{path}.{key}")
    return value


def _element(value: Any, path: str) -> Hashable:
    if isinstance(value, bool) or not isinstance(value, str | int):
        raise FormatError("elements must be strings or integers", path)
    return value


def _int(doc: Mapping[str, Any], key: str, path: str, default: int | None = None) -> int:
    if key not in doc:
        if default is None:
            raise FormatError(f"missing key {key!r}", path)
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError("expected an integer", f"{path}.{key}")
    return value


def _pairs(doc: Mapping[str, Any], key: str, carrier: set[Hashable], path: str) -> list[Pair]:
    pairs = []
    for i, item in enumerate(_list(doc, key, path, required=False)):
        where = f"{path}.{key}[{i}]"
        if not isinstance(item, list) or len(item) != 2:
            raise FormatError("expected a pair [u, v]", where)
        u, v = (_element(x, f"{where}[{j}]") for j, x in enumerate(item))
        for j, x in enumerate((u, v)):
            if x not in carrier:
                raise FormatError(f"{x!r} is not an element", f"{where}[{j}]")
        pairs.append((u, v))
    return pairs


def _carrier(doc: Mapping[str, Any], key: str, path: str) -> list[Hashable]:
    elements = [_element(x, f"{path}.{key}[{i}]") for i, x in enumerate(_list(doc, key, path))]
    seen: set[Hashable] = set()
    for i, x in enumerate(elements):
        if x in seen:
            raise FormatError(f"duplicate element {x!r}", f"{path}.{key}[{i}]")
        seen.add(x)
    return elements


def parse_poset(doc: Any, path: str = "$") -> WfRelation:
    """
    Parse {"elements": [...], "leq": [[u, v], ...], "prec": [[u, v], ...]}.

    leq is closed reflexively and transitively, with a warning when pairs had to be added.
    """
    obj = _object(doc, path)
    elements = _carrier(obj, "elements", path)
    carrier = set(elements)
    leq = _pairs(obj, "leq", carrier, path)
    prec = _pairs(obj, "prec", carrier, path)
    preorder, added = FinitePreorder.closure(elements, leq)
    if added:
        logger.warning("%s: closed leq reflexively and transitively (%d pairs added)", path, added)
    return WfRelation(preorder, prec)


def load_poset(path: Path) -> WfRelation:
    return parse_poset(read_json(path))


def dump_poset(reflection: PosetReflection) -> dict[str, Any]:
    """A poset document for a reflected order, naming each class by its printed representative."""
    name = {q: str(q) for q in reflection.quotient.elements}
    quotient = reflection.quotient
    return {
        "elements": [name[q] for q in quotient.elements],
        "leq": [[name[u], name[v]] for u in quotient.elements for v in quotient.elements if quotient.le(u, v)],
        "prec": [[name[u], name[v]] for u in quotient.elements for v in quotient.elements if (u, v) in reflection.reflected_prec],
    }


def parse_frame(doc: Any, base_dir: Path, path: str = "$") -> BasedFrame:
    """
    Parse a frame document.

    Either {"downsets_of": <poset file relative to the frame file, or an inline poset>},
    {"opens": [...], "leq": [...], "basis": [...], "basis_prec": [...]}, or a bare poset
    document, read as its downset frame.
    """
    obj = _object(doc, path)
    if "elements" in obj:
        return downset_frame(parse_poset(obj, path))
    if "downsets_of" in obj:
        source = obj["downsets_of"]
        if isinstance(source, str):
            return downset_frame(parse_poset(read_json(base_dir / source), f"{path}.downsets_of"))
        return downset_frame(parse_poset(source, f"{path}.downsets_of"))

    opens = _carrier(obj, "opens", path)
    carrier = set(opens)
    leq = _pairs(obj, "leq", carrier, path)
    closed, added = FinitePreorder.closure(opens, leq)
    if added:
        logger.warning("%s: closed leq reflexively and transitively (%d pairs added)", path, added)
    basis = [_element(x, f"{path}.basis[{i}]") for i, x in enumerate(_list(obj, "basis", path))]
    for i, k in enumerate(basis):
        if k not in carrier:
            raise FormatError(f"{k!r} is not an open", f"{path}.basis[{i}]")
    basis_prec = _pairs(obj, "basis_prec", set(basis), path)
    return BasedFrame(FiniteFrame(opens, closed.leq), basis, basis_prec)


def load_frame(path: Path) -> BasedFrame:
    return parse_frame(read_json(path), path.parent)


def parse_polynomial(doc: Any, path: str = "$") -> Polynomial:
    obj = _object(doc, path)
    shapes = []
    for i, item in enumerate(_list(obj, "shapes", path)):
        where = f"{path}.shapes[{i}]"
        shape = _object(item, where)
        name = shape.get("name")
        if not isinstance(name, str):
            raise FormatError("expected a string", f"{where}.name")
        size = _int(shape, "fiber_size", where)
        if size < 0:
            raise FormatError("fiber_size must be non-negative", f"{where}.fiber_size")
        shapes.append((name, size))
    return Polynomial(shapes)


def load_polynomial(path: Path) -> Polynomial:
    return parse_polynomial(read_json(path))


def parse_formula(doc: Any, symbols: set[str], path: str) -> Formula:
    """A symbol name, "top", "bottom", {"and": [...]} or {"or": [...]}."""
    if isinstance(doc, str):
        if doc == "top":
            return TOP
        if doc == "bottom":
            return BOTTOM
        if doc not in symbols:
            raise FormatError(f"undeclared symbol {doc!r}", path)
        return Symbol(doc)
    if isinstance(doc, dict) and len(doc) == 1:
        ((key, parts),) = doc.items()
        if key in ("and", "or") and isinstance(parts, list):
            parsed = tuple(parse_formula(p, symbols, f"{path}.{key}[{i}]") for i, p in enumerate(parts))
            return Conj(parsed) if key == "and" else Disj(parsed)
    raise FormatError('expected a symbol, "top", {"and": [...]} or {"or": [...]}', path)


def parse_theory(doc: Any, path: str = "$") -> GeometricTheory:
    obj = _object(doc, path)
    symbols = []
    for i, x in enumerate(_list(obj, "symbols", path)):
        if not isinstance(x, str):
            raise FormatError("symbols must be strings", f"{path}.symbols[{i}]")
        if x in ("top", "bottom"):
            raise FormatError(f"{x!r} is reserved", f"{path}.symbols[{i}]")
        symbols.append(x)
    declared = set(symbols)
    sequents = []
    for i, item in enumerate(_list(obj, "sequents", path, required=False)):
        where = f"{path}.sequents[{i}]"
        sequent = _object(item, where)
        for side in ("lhs", "rhs"):
            if side not in sequent:
                raise FormatError(f"missing key {side!r}", where)
        sequents.append(Sequent(parse_formula(sequent["lhs"], declared, f"{where}.lhs"), parse_formula(sequent["rhs"], declared, f"{where}.rhs")))
    return GeometricTheory(tuple(symbols), tuple(sequents))


def load_theory(path: Path) -> GeometricTheory:
    return parse_theory(read_json(path))


def _alphabet(obj: Mapping[str, Any], path: str, default: list[Hashable] | None = None) -> list[Hashable]:
    if "alphabet" not in obj and default is not None:
        return default
    letters = _carrier(obj, "alphabet", path)
    if not letters:
        raise FormatError("alphabet must be nonempty", f"{path}.alphabet")
    return letters


def parse_fixpoint(doc: Any, path: str = "$") -> FixpointProgram:
    """
    Parse {"family": ..., parameters} into a guarded stream and a step on it.

    Families: constant (alphabet, values), cons-literal (alphabet, value),
    map-successor (modulus, start) and alternating (optional two-letter alphabet).
    """
    obj = _object(doc, path)
    family = obj.get("family")
    if family not in FIXPOINT_FAMILIES:
        raise FormatError(f"family must be one of {list(FIXPOINT_FAMILIES)}", f"{path}.family")

    if family == "map-successor":
        modulus = _int(obj, "modulus", path)
        start = _int(obj, "start", path, default=0)
        if modulus < 1:
            raise FormatError("modulus must be positive", f"{path}.modulus")
        if not 0 <= start < modulus:
            raise FormatError("start must lie in 0..modulus-1", f"{path}.start")
        stream = GuardedStream(range(modulus))
        return FixpointProgram(family, stream, map_successor_step(stream, start))

    if family == "alternating":
        letters = _alphabet(obj, path, default=[0, 1])
        if len(letters) != 2:
            raise FormatError("alternating needs exactly two letters", f"{path}.alphabet")
        stream = GuardedStream(letters)
        return FixpointProgram(family, stream, alternating_step(stream))

    stream = GuardedStream(_alphabet(obj, path))
    if family == "cons-literal":
        if "value" not in obj:
            raise FormatError("missing key 'value'", path)
        value = _element(obj["value"], f"{path}.value")
        if value not in stream.alphabet:
            raise FormatError(f"{value!r} is not in the alphabet", f"{path}.value")
        return FixpointProgram(family, stream, cons_literal_step(stream, value))

    values = [_element(x, f"{path}.values[{i}]") for i, x in enumerate(_list(obj, "values", path))]
    if not values:
        raise FormatError("values must be nonempty", f"{path}.values")
    for i, x in enumerate(values):
        if x not in stream.alphabet:
            raise FormatError(f"{x!r} is not in the alphabet", f"{path}.values[{i}]")
    return FixpointProgram(family, stream, cycle_step(stream, values))


def load_fixpoint(path: Path) -> FixpointProgram:
    return parse_fixpoint(read_json(path))
