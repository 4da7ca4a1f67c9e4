"""Domain types shared by every vizbench module."""

from vizbench.model.filters import Atom, FilterPredicate, bin_range_predicate, conjoin
from vizbench.model.results import BinKey, BinValue, ResultTable
from vizbench.model.schema import (
    AggregateSpec,
    BinningSpec,
    ColumnSchema,
    ColumnStats,
    DatasetSchema,
    bin_of,
)
from vizbench.model.sql import render_sql
from vizbench.model.viz import (
    CreateViz,
    Discard,
    Interaction,
    Link,
    Select,
    SetFilter,
    VizGraph,
    VizSpec,
    Workflow,
    dirty_set,
    effective_filter,
)
