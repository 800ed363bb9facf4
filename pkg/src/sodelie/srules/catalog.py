"""Loading and lookup of catalog entries.

Built-in entries and user files share one schema (see ``docs/entry-schema.md``).
User files are JSON documents holding either one entry or a list of them.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Sequence

from ..expr import TIME, Expr, ExprError, parse, split_copy
from ..sode import Constraint, HodeSystem, SodeSystem
from ..vfield import VectorField
from .rule import RuleError, SuperpositionRule

CATALOG_ENV = "SODELIE_CATALOG_DIR"
DEFAULT_SAMPLING = (0.5, 1.5)


class CatalogError(ValueError):
    pass


class _Names:
    """Declared names plus every ``level_(a)`` copy of a state name."""

    def __init__(self, plain: set[str], state: set[str]):
        self.plain = set(plain)
        self.state = set(state)

    def __contains__(self, name: str) -> bool:
        if name in self.plain or name in self.state:
            return True
        base, idx = split_copy(name)
        return idx is not None and base in self.state

    def with_(self, *names: str) -> "_Names":
        return _Names(self.plain | set(names), self.state)


@dataclass(eq=False)
class Integral:
    name: str
    expr: Expr  # fully expanded
    copies: tuple[int, ...]
    valid_when: tuple[Expr, ...] = ()
    note: str = ""

    @property
    def time_dependent(self) -> bool:
        return TIME in self.expr.free_symbols


@dataclass(eq=False)
class CatalogEntry:
    name: str
    system: HodeSystem
    title: str = ""
    sampling: dict[str, tuple[float, float]] = field(default_factory=dict)
    box: dict[str, tuple[float, float]] = field(default_factory=dict)
    t_span: tuple[float, float] = (0.0, 1.0)
    basis: list[VectorField] = field(default_factory=list)
    extra_fields: dict[str, VectorField] = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    definitions: dict[str, Expr] = field(default_factory=dict)
    integrals: dict[str, Integral] = field(default_factory=dict)
    rules: dict[str, SuperpositionRule] = field(default_factory=dict)
    provenance: str = ""
    source: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.system.n

    def sampling_for(self, level_name: str) -> tuple[float, float]:
        return tuple(self.sampling.get(level_name, DEFAULT_SAMPLING))

    def rule(self, name: str | None = None) -> SuperpositionRule:
        if not self.rules:
            raise CatalogError(f"entry {self.name!r} has no superposition rule")
        if name is None:
            return next(iter(self.rules.values()))
        try:
            return self.rules[name]
        except KeyError:
            raise CatalogError(f"entry {self.name!r} has no rule {name!r}; known: {sorted(self.rules)}") from None

    def field(self, name: str) -> VectorField:
        for X in self.basis:
            if X.name == name:
                return X
        if name in self.extra_fields:
            return self.extra_fields[name]
        raise CatalogError(f"entry {self.name!r} has no field {name!r}")

    def all_fields(self) -> list[VectorField]:
        return list(self.basis) + list(self.extra_fields.values())

    def summary(self) -> dict:
        return {
            "name": self.name,
            "title": self.title,
            "order": self.system.order,
            "n": self.n,
            "rhs": [str(e) for e in self.system.rhs],
            "rules": {k: r.kind for k, r in self.rules.items()},
            "integrals": sorted(self.integrals),
            "basis": [X.name for X in self.basis],
            "provenance": self.provenance,
        }


# -- parsing helpers ---------------------------------------------------------


def _number(value: Any) -> Expr:
    if isinstance(value, bool):
        raise CatalogError("booleans are not parameter values")
    if isinstance(value, int):
        return parse(str(value))
    if isinstance(value, float):
        return parse(repr(value))
    if isinstance(value, str):
        return parse(value, ())
    raise CatalogError(f"bad numeric value {value!r}")


def _interval(v, what: str) -> tuple[float, float]:
    try:
        lo, hi = float(v[0]), float(v[1])
    except (TypeError, ValueError, IndexError):
        raise CatalogError(f"{what}: expected [lo, hi], got {v!r}") from None
    if not lo < hi:
        raise CatalogError(f"{what}: empty interval [{lo}, {hi}]")
    return lo, hi


def _copies(e: Expr, state: set[str]) -> tuple[int, ...]:
    out = set()
    for s in e.free_symbols:
        base, idx = split_copy(s)
        if idx is not None and base in state:
            out.add(idx)
    return tuple(sorted(out))


class _Builder:
    def __init__(self, data: Mapping[str, Any]):
        self.data = data
        self.name = data.get("name")
        if not isinstance(self.name, str) or not self.name:
            raise CatalogError("entry needs a non-empty 'name'")

    def err(self, msg: str) -> CatalogError:
        return CatalogError(f"entry {self.name!r}: {msg}")

    def parse(self, src: Any, names, what: str) -> Expr:
        if isinstance(src, (int, float)) and not isinstance(src, bool):
            src = repr(src) if isinstance(src, float) else str(src)
        if not isinstance(src, str):
            raise self.err(f"{what}: expected an expression string, got {src!r}")
        try:
            return parse(src, names)
        except ExprError as exc:
            raise self.err(f"{what}: {exc}") from None

    def build(self) -> CatalogEntry:
        d = self.data
        known = {
            "name", "title", "kind", "levels", "parameters", "functions", "rhs", "constraints", "sampling", "box",
            "t_span", "basis", "decomposition", "extra_fields", "expected", "definitions", "integrals", "rules",
            "provenance",
        }
        unknown = set(d) - known
        if unknown:
            raise self.err(f"unknown keys {sorted(unknown)}")
        levels = d.get("levels")
        if not levels or not all(isinstance(lv, list) and lv for lv in levels):
            raise self.err("'levels' must be a non-empty list of name lists")
        levels = tuple(tuple(lv) for lv in levels)
        kind = d.get("kind", "sode" if len(levels) == 2 else "hode")
        state = {x for lv in levels for x in lv}

        params = {}
        for k, v in (d.get("parameters") or {}).items():
            try:
                params[k] = _number(v)
            except (ExprError, CatalogError) as exc:
                raise self.err(f"parameter {k}: {exc}") from None
        base_names = _Names({TIME, *params}, state)
        functions = {}
        for k, v in (d.get("functions") or {}).items():
            e = self.parse(v, base_names.with_(*functions), f"function {k}")
            if e.free_symbols - {TIME} - set(params) - set(functions):
                raise self.err(f"function {k} may depend only on t and parameters")
            functions[k] = e.subs(functions) if functions else e
        sys_names = base_names.with_(*functions)

        rhs = d.get("rhs")
        if not isinstance(rhs, list) or len(rhs) != len(levels[0]):
            raise self.err("'rhs' must list one expression per position")
        rhs_e = tuple(self.parse(r, _Names(sys_names.plain | state, set()), f"rhs[{i}]") for i, r in enumerate(rhs))
        cons = []
        for i, c in enumerate(d.get("constraints") or []):
            src = c["expr"] if isinstance(c, dict) else c
            label = c.get("label", "") if isinstance(c, dict) else ""
            cons.append(Constraint(self.parse(src, _Names(sys_names.plain | state, set()), f"constraint {i}"), label))
        cls = SodeSystem if len(levels) == 2 and kind == "sode" else HodeSystem
        if kind == "sode" and len(levels) != 2:
            raise self.err("a 'sode' entry has exactly two levels")
        plain_state = _Names(sys_names.plain | state, set())

        # basis and decomposition live on the lifted state space
        coords = tuple(x for lv in levels for x in lv)

        def field_from(spec, what):
            fname = spec.get("name", "")
            comps = spec.get("components")
            if not isinstance(comps, list) or len(comps) != len(coords):
                raise self.err(f"{what}: needs {len(coords)} components")
            exprs = [self.parse(c, plain_state, f"{what} component {j}") for j, c in enumerate(comps)]
            exprs = [e.subs(params) for e in exprs]
            return VectorField(coords, tuple(exprs), name=fname)

        basis = [field_from(s, f"basis[{i}]") for i, s in enumerate(d.get("basis") or [])]
        extra = {}
        for i, s in enumerate(d.get("extra_fields") or []):
            X = field_from(s, f"extra_fields[{i}]")
            extra[X.name] = X
        decomposition = None
        if d.get("decomposition"):
            by_name = {X.name: X for X in basis + list(extra.values())}
            decomposition = []
            for coeff, fname in d["decomposition"]:
                if fname not in by_name:
                    raise self.err(f"decomposition refers to unknown field {fname!r}")
                decomposition.append((self.parse(coeff, sys_names, "decomposition coefficient"), by_name[fname]))
            decomposition = tuple(decomposition)
        system = cls(levels, rhs_e, parameters=params, functions=functions, constraints=tuple(cons),
                     name=self.name, decomposition=decomposition)

        # definitions, in order; each may use earlier ones
        raw_defs: dict[str, Expr] = {}
        names = sys_names
        rule_symbols = set()
        for spec in d.get("rules") or []:
            rule_symbols |= set(spec.get("constants") or []) | set(spec.get("branches") or [])
        for item in d.get("definitions") or []:
            try:
                dname, src = item
            except (TypeError, ValueError):
                raise self.err(f"definition {item!r} must be [name, expression]") from None
            if dname in names:
                raise self.err(f"definition {dname!r} shadows an existing name")
            raw_defs[dname] = self.parse(src, names.with_(*rule_symbols), f"definition {dname}")
            names = names.with_(dname)

        def expand(e: Expr, keep: set[str] = frozenset()) -> Expr:
            for nm in reversed(list(raw_defs)):
                if nm not in keep and nm in e.free_symbols:
                    e = e.subs({nm: raw_defs[nm]})
            return e

        def resolve(e: Expr, keep: set[str] = frozenset()) -> Expr:
            e = expand(e, keep)
            return system.resolve(e)

        definitions = {k: resolve(v) for k, v in raw_defs.items()}

        integrals = {}
        for i, spec in enumerate(d.get("integrals") or []):
            iname = spec.get("name")
            if not iname:
                raise self.err(f"integrals[{i}] needs a name")
            e = resolve(self.parse(spec.get("expr"), names, f"integral {iname}"))
            valid = tuple(resolve(self.parse(v, names, f"integral {iname} valid_when")) for v in spec.get("valid_when", []))
            copies = _copies(e, state)
            if not copies:
                raise self.err(f"integral {iname} mentions no copy of the state")
            integrals[iname] = Integral(iname, e, copies, valid, spec.get("note", ""))

        rules = {}
        for i, spec in enumerate(d.get("rules") or []):
            rules_name = spec.get("name") or f"rule{i + 1}"
            consts = tuple(spec.get("constants") or [])
            branches = tuple(spec.get("branches") or [])
            rnames = names.with_(*consts, *branches, *integrals)
            integral_defs = {k: v.expr for k, v in integrals.items()}
            comps_raw = [self.parse(c, rnames, f"rule {rules_name} component {j}")
                         for j, c in enumerate(spec.get("components") or [])]
            aux_names = list(spec.get("aux") or [])
            for a in aux_names:
                if a not in raw_defs and a not in integrals:
                    raise self.err(f"rule {rules_name}: unknown auxiliary {a!r}")

            def full(e):
                return resolve(e.subs(integral_defs) if integral_defs else e)

            comps = tuple(full(c) for c in comps_raw)
            aux = {a: (integrals[a].expr if a in integrals else definitions[a]) for a in aux_names}
            aux_form = None
            if aux_names:
                keep = set(aux_names)
                aux_form = tuple(system.resolve(expand(c, keep)) for c in comps_raw)
            constraints = tuple(full(self.parse(c, rnames, f"rule {rules_name} constraint"))
                                for c in spec.get("constraints") or [])
            hints = {k: full(self.parse(v, rnames, f"rule {rules_name} hint {k}"))
                     for k, v in (spec.get("hints") or {}).items()}
            k_box = tuple(_interval(b, f"rule {rules_name} k_box") for b in spec.get("k_box") or [])
            char_box = {k: _interval(v, f"rule {rules_name} char_box") for k, v in (spec.get("char_box") or {}).items()}
            try:
                rules[rules_name] = SuperpositionRule(
                    name=rules_name, kind=spec.get("kind", "general"), levels=levels, m=int(spec.get("m", 1)),
                    constants=consts, components=comps, branches=branches, aux=aux, constraints=constraints,
                    k_box=k_box, hints=hints, char_box=char_box, aux_form=aux_form, note=spec.get("note", ""),
                )
            except RuleError as exc:
                raise self.err(str(exc)) from None

        sampling = {k: _interval(v, f"sampling[{k}]") for k, v in (d.get("sampling") or {}).items()}
        box = {k: _interval(v, f"box[{k}]") for k, v in (d.get("box") or {}).items()}
        t_span = _interval(d.get("t_span", [0.0, 1.0]), "t_span")
        return CatalogEntry(
            name=self.name, system=system, title=d.get("title", ""), sampling=sampling, box=box, t_span=t_span,
            basis=basis, extra_fields=extra, expected=dict(d.get("expected") or {}), definitions=definitions,
            integrals=integrals, rules=rules, provenance=d.get("provenance", ""), source=dict(d),
        )


def entry_from_dict(data: Mapping[str, Any]) -> CatalogEntry:
    if not isinstance(data, Mapping):
        raise CatalogError("an entry must be a key/value mapping")
    return _Builder(data).build()


def load_entry_file(path: str | os.PathLike) -> list[CatalogEntry]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise CatalogError(f"cannot read {p}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{p}: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    items = data if isinstance(data, list) else [data]
    return [entry_from_dict(it) for it in items]


_BUILTIN: list[CatalogEntry] | None = None


def builtin_catalog() -> list[CatalogEntry]:
    global _BUILTIN
    if _BUILTIN is None:
        from .builtin import BUILTIN_ENTRIES

        _BUILTIN = [entry_from_dict(d) for d in BUILTIN_ENTRIES]
    return list(_BUILTIN)


def catalog_dir_entries(directory: str | os.PathLike | None = None) -> list[CatalogEntry]:
    directory = directory or os.environ.get(CATALOG_ENV)
    if not directory:
        return []
    out = []
    for p in sorted(Path(directory).glob("*.json")):
        out.extend(load_entry_file(p))
    return out


def full_catalog(directory: str | os.PathLike | None = None) -> list[CatalogEntry]:
    entries = {e.name: e for e in builtin_catalog()}
    for e in catalog_dir_entries(directory):
        entries[e.name] = e
    return list(entries.values())


def find_entry(name_or_path: str, directory: str | os.PathLike | None = None) -> CatalogEntry:
    """Entry by name (built-in or from the catalog directory) or by file path."""
    p = Path(name_or_path)
    if p.suffix == ".json" or p.exists():
        entries = load_entry_file(p)
        if len(entries) != 1:
            raise CatalogError(f"{p} holds {len(entries)} entries; name one with --entry")
        return entries[0]
    for e in full_catalog(directory):
        if e.name == name_or_path:
            return e
    known = ", ".join(sorted(e.name for e in full_catalog(directory)))
    raise CatalogError(f"unknown entry {name_or_path!r}; known entries: {known}")
