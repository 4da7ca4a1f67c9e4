"""Conjunctive filter predicates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from vizbench.errors import SchemaError
from vizbench.model.schema import BinningSpec, ColumnSchema, DatasetSchema, bin_bounds

NOMINAL_OPS = ("=", "!=")
QUANTITATIVE_OPS = ("<", "<=", ">", ">=", "range")


@dataclass(frozen=True)
class Atom:
    """``column op value``; ``range`` takes a half-open (a, b) pair."""

    column: str
    op: str
    value: object

    def __post_init__(self):
        if self.op not in NOMINAL_OPS + QUANTITATIVE_OPS:
            raise SchemaError(f"Unknown filter operator {self.op!r}")
        if self.op == "range":
            a, b = self.value
            if a > b:
                raise SchemaError(f"Range on '{self.column}' has a > b ({a} > {b})")

    def validate(self, schema: DatasetSchema) -> None:
        col = schema.column(self.column)
        if col.is_nominal:
            if self.op not in NOMINAL_OPS:
                raise SchemaError(f"Operator {self.op!r} not allowed on nominal '{self.column}'")
            col.code_of(self.value)
        elif self.op not in QUANTITATIVE_OPS:
            raise SchemaError(f"Operator {self.op!r} not allowed on quantitative '{self.column}'")

    def to_dict(self) -> dict:
        value = list(self.value) if self.op == "range" else self.value
        return {"column": self.column, "op": self.op, "value": value}

    @classmethod
    def from_dict(cls, d) -> "Atom":
        op = d["op"]
        value = d["value"]
        if op == "range":
            value = (float(value[0]), float(value[1]))
        elif op in QUANTITATIVE_OPS:
            value = float(value)
        else:
            value = str(value)
        return cls(d["column"], op, value)


@dataclass(frozen=True)
class FilterPredicate:
    """Conjunction of atoms. The empty predicate matches every row."""

    atoms: tuple[Atom, ...] = ()

    @classmethod
    def of(cls, *atoms: Atom) -> "FilterPredicate":
        return cls(tuple(atoms))

    def __bool__(self) -> bool:
        return bool(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def columns(self) -> set[str]:
        return {a.column for a in self.atoms}

    def and_(self, other: "FilterPredicate | None") -> "FilterPredicate":
        if not other:
            return self
        return FilterPredicate(self.atoms + other.atoms)

    def validate(self, schema: DatasetSchema) -> None:
        for atom in self.atoms:
            atom.validate(schema)

    def to_list(self) -> list[dict]:
        return [a.to_dict() for a in self.atoms]

    @classmethod
    def from_list(cls, items: Iterable | None) -> "FilterPredicate":
        return cls(tuple(Atom.from_dict(d) for d in (items or ())))


def conjoin(predicates: Sequence[FilterPredicate]) -> FilterPredicate:
    """AND a sequence of predicates, dropping repeated atoms."""
    seen: set[Atom] = set()
    atoms: list[Atom] = []
    for pred in predicates:
        for atom in pred.atoms:
            if atom not in seen:
                seen.add(atom)
                atoms.append(atom)
    return FilterPredicate(tuple(atoms))


def bin_range_predicate(
    spec: BinningSpec, column: ColumnSchema, first: object, last: object | None = None
) -> FilterPredicate:
    """Predicate selecting the brushed bins ``first..last`` of one dimension.

    Nominal selections pick a single category (multi-select disjunctions
    are not supported), so ``last`` is ignored for them.
    """
    if column.is_nominal:
        return FilterPredicate.of(Atom(column.name, "=", str(first)))
    last = first if last is None else last
    lo, _, _ = bin_bounds(spec, column, int(first))
    _, hi, closed = bin_bounds(spec, column, int(last))
    if closed:
        return FilterPredicate.of(Atom(column.name, ">=", lo), Atom(column.name, "<=", hi))
    return FilterPredicate.of(Atom(column.name, "range", (lo, hi)))
