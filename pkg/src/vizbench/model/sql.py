"""Translate viz specs into SQL aggregate queries."""

from __future__ import annotations

import re
from typing import TYPE_CHECKING

from vizbench.model.filters import Atom, FilterPredicate
from vizbench.model.schema import FIXED_COUNT, BinningSpec, ColumnSchema, DatasetSchema
from vizbench.model.viz import VizSpec

if TYPE_CHECKING:
    from vizbench.datagen.normalize import StarSchemaSpec

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _ident(name: str) -> str:
    if _IDENT_RE.fullmatch(name):
        return name
    return '"' + name.replace('"', '""') + '"'


def _lit(value: object) -> str:
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    x = float(value)
    text = str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)
    return f"({text})" if x < 0 else text


def bin_expression(spec: BinningSpec, column: ColumnSchema) -> str:
    """SQL expression with the same result as :func:`bin_of`."""
    col = _ident(column.name)
    if column.is_nominal:
        return col
    if spec.method == FIXED_COUNT:
        span = column.max - column.min
        if span == 0:
            return f"FLOOR(0 * {col})"
        raw = f"FLOOR({spec.k} * ({col} - {_lit(column.min)}) / {_lit(span)})"
        return f"LEAST(GREATEST({raw}, 0), {spec.k - 1})"
    if spec.reference == 0:
        return f"FLOOR({col} / {_lit(spec.width)})"
    return f"FLOOR(({col} - {_lit(spec.reference)}) / {_lit(spec.width)})"


def _condition(atom: Atom) -> str:
    col = _ident(atom.column)
    if atom.op == "range":
        a, b = atom.value
        return f"{col} >= {_lit(a)} AND {col} < {_lit(b)}"
    op = "<>" if atom.op == "!=" else atom.op
    return f"{col} {op} {_lit(atom.value)}"


def _from_clause(table: str, columns: set[str], star: "StarSchemaSpec | None") -> str:
    text = _ident(table)
    if star is None:
        return text
    for dim in star.dimensions:
        if columns & set(dim.attributes):
            text += f" JOIN {_ident(dim.name)} USING ({_ident(dim.key)})"
    return text


def render_sql(
    viz: VizSpec,
    effective: FilterPredicate,
    table: str,
    schema: DatasetSchema,
    star: "StarSchemaSpec | None" = None,
) -> str:
    """Single ``SELECT ... GROUP BY`` for ``viz`` under ``effective``.

    With a star schema, dimension tables holding referenced attributes are
    joined on their surrogate key.
    """
    groups = [bin_expression(b, schema.column(b.column)) for b in viz.binning]
    agg = viz.aggregate
    agg_sql = "COUNT(*)" if agg.function == "COUNT" else f"{agg.function}({_ident(agg.column)})"

    referenced = {b.column for b in viz.binning} | effective.columns
    if agg.column:
        referenced.add(agg.column)

    sql = f"SELECT {', '.join(groups)}, {agg_sql} FROM {_from_clause(table, referenced, star)}"
    if effective:
        sql += " WHERE " + " AND ".join(_condition(a) for a in effective.atoms)
    sql += f" GROUP BY {', '.join(groups)}"
    return sql
