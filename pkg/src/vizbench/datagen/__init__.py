"""Seed-based scaling of datasets and star-schema normalization."""

from vizbench.datagen.copula import CopulaModel, cholesky, fit, iter_synthesize, regularize, synthesize
from vizbench.datagen.normalize import (
    DimensionSpec,
    StarSchemaSpec,
    denormalize,
    normalize,
    read_star,
    write_star,
)
from vizbench.datagen.seed import flights_star_spec, make_flights_seed
