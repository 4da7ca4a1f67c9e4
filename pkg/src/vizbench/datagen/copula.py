"""Gaussian-copula scaling of a seed dataset.

The seed sample is rank-transformed to normal scores, their correlation
matrix R is factorized as R = L Lᵀ, and new rows are drawn as
X̃ = L X with X ~ N(0, I). Each component of X̃ is pushed through Φ to a
uniform and then through the inverse empirical CDF of its column.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import pandas as pd
from scipy.linalg import lapack
from scipy.stats import norm, rankdata

from vizbench.errors import CholeskyError, SchemaError
from vizbench.model.schema import is_nominal_dtype

logger = logging.getLogger(__name__)

MIN_SAMPLE_ROWS = 100
DEFAULT_SAMPLE_SIZE = 100_000
JITTER_START = 1e-10
JITTER_MAX = 1e-4
PARTITION_ROWS = 100_000


# ---------------------------------------------------------------------------
# Cholesky with jitter
# ---------------------------------------------------------------------------


def cholesky(matrix: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L Lᵀ = ``matrix``.

    Raises
    ------
    CholeskyError
        If the matrix is not positive definite; ``minor`` is the 1-based
        index of the first failing leading minor.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-12):
        raise ValueError("Matrix is not symmetric")
    c, info = lapack.dpotrf(a, lower=1)
    if info > 0:
        raise CholeskyError(int(info))
    if info < 0:
        raise ValueError(f"dpotrf: illegal value in argument {-info}")
    return np.tril(c)


def regularize(corr: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Factorize a correlation matrix, adding jitter until it succeeds.

    The jitter ε starts at 1e-10 and doubles up to 1e-4. The matrix is
    rescaled as (R + εI) / (1 + ε) so the diagonal stays at one.

    Returns
    -------
    (R, L, ε)
        The possibly regularized matrix, its factor and the jitter used
        (0.0 when none was needed).
    """
    if corr.shape[0] == 0:
        return corr, corr.copy(), 0.0
    try:
        return corr, cholesky(corr), 0.0
    except CholeskyError as err:
        last = err

    eye = np.eye(corr.shape[0])
    eps = JITTER_START
    while eps <= JITTER_MAX:
        reg = (corr + eps * eye) / (1.0 + eps)
        try:
            factor = cholesky(reg)
        except CholeskyError as err:
            last = err
            eps *= 2
            continue
        logger.info("Correlation matrix regularized with jitter %.3g", eps)
        return reg, factor, eps
    raise CholeskyError(last.minor, jitter=eps / 2)


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NominalEncoding:
    """Categories ordered by descending frequency, with their probabilities."""

    categories: tuple[str, ...]
    probabilities: np.ndarray

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.probabilities)

    def codes(self, values: pd.Series) -> np.ndarray:
        rank = {c: i for i, c in enumerate(self.categories)}
        return values.map(rank).to_numpy(dtype=float)


@dataclass(eq=False)
class CopulaModel:
    """Fitted dependence structure plus per-column empirical CDFs."""

    columns: list[str]
    correlated: list[str]
    correlation: np.ndarray
    factor: np.ndarray
    quantitative: dict[str, np.ndarray] = field(default_factory=dict)
    nominal: dict[str, NominalEncoding] = field(default_factory=dict)
    integer_columns: set[str] = field(default_factory=set)
    independent: list[str] = field(default_factory=list)
    jitter: float = 0.0

    def inverse_cdf(self, column: str, u: np.ndarray) -> np.ndarray:
        """Map uniforms to column values through the sample CDF."""
        if column in self.nominal:
            enc = self.nominal[column]
            idx = np.searchsorted(enc.cumulative, u, side="right")
            idx = np.minimum(idx, len(enc.categories) - 1)
            return np.asarray(enc.categories, dtype=object)[idx]
        values = self.quantitative[column]
        positions = np.linspace(0.0, 1.0, len(values))
        out = np.interp(u, positions, values)
        if column in self.integer_columns:
            return np.rint(out).astype(np.int64)
        return out

    def resample(self, column: str, n: int, rng: np.random.Generator) -> np.ndarray:
        if column in self.nominal:
            enc = self.nominal[column]
            idx = rng.choice(len(enc.categories), size=n, p=enc.probabilities)
            return np.asarray(enc.categories, dtype=object)[idx]
        values = self.quantitative[column]
        out = rng.choice(values, size=n)
        if column in self.integer_columns:
            return out.astype(np.int64)
        return out


def _encode_nominal(values: pd.Series) -> NominalEncoding:
    counts = values.value_counts()
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    total = float(counts.sum())
    return NominalEncoding(
        tuple(c for c, _ in ordered),
        np.array([n / total for _, n in ordered]),
    )


def fit(
    seed_rows: pd.DataFrame,
    sample_size: int | None = None,
    rng_seed: int = 0,
) -> CopulaModel:
    """Fit a :class:`CopulaModel` on a random sample of ``seed_rows``.

    Rows with nulls are dropped. Constant columns are left out of the
    correlation structure and later resampled independently.
    """
    df = seed_rows.dropna()
    if df.shape[1] < 2:
        raise SchemaError("Seed dataset needs at least 2 columns")
    if len(df) == 0:
        raise SchemaError("Seed dataset has no complete rows")

    size = sample_size if sample_size is not None else min(DEFAULT_SAMPLE_SIZE, len(df))
    if size < MIN_SAMPLE_ROWS:
        raise SchemaError(f"Sample needs at least {MIN_SAMPLE_ROWS} rows, got {size}")
    rng = np.random.default_rng(rng_seed)
    idx = rng.choice(len(df), size=size, replace=size > len(df))
    sample = df.iloc[np.sort(idx)].reset_index(drop=True)

    model = CopulaModel(
        columns=list(df.columns),
        correlated=[],
        correlation=np.empty((0, 0)),
        factor=np.empty((0, 0)),
    )
    scores: list[np.ndarray] = []
    for name in df.columns:
        series = sample[name]
        if is_nominal_dtype(series):
            enc = _encode_nominal(series.astype(str))
            model.nominal[name] = enc
            codes = enc.codes(series.astype(str))
            constant = len(enc.categories) == 1
        else:
            values = series.to_numpy(dtype=float)
            model.quantitative[name] = np.sort(values)
            if pd.api.types.is_integer_dtype(series):
                model.integer_columns.add(name)
            codes = values
            constant = values.min() == values.max()

        if constant:
            model.independent.append(name)
            continue
        model.correlated.append(name)
        scores.append(norm.ppf(rankdata(codes) / (len(codes) + 1)))

    if model.independent:
        logger.warning(
            "Constant columns dropped from the correlation structure: %s",
            ", ".join(model.independent),
        )

    if len(scores) >= 2:
        corr = np.corrcoef(np.column_stack(scores), rowvar=False)
        corr = (corr + corr.T) / 2.0
        np.fill_diagonal(corr, 1.0)
    else:
        corr = np.eye(len(scores))
    model.correlation, model.factor, model.jitter = regularize(corr)
    return model


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------


def _partition(model: CopulaModel, rows: int, rng_seed: int, index: int) -> pd.DataFrame:
    rng = np.random.default_rng([rng_seed, index])
    out: dict[str, np.ndarray] = {}
    if model.correlated:
        x = rng.standard_normal((rows, len(model.correlated)))
        u = norm.cdf(x @ model.factor.T)
        for j, name in enumerate(model.correlated):
            out[name] = model.inverse_cdf(name, u[:, j])
    for name in model.independent:
        out[name] = model.resample(name, rows, rng)
    return pd.DataFrame({c: out[c] for c in model.columns})


def iter_synthesize(
    model: CopulaModel,
    n: int,
    rng_seed: int = 0,
    partition_rows: int = PARTITION_ROWS,
    workers: int = 1,
) -> Iterator[pd.DataFrame]:
    """Yield ``n`` synthetic rows in partitions.

    Partition ``i`` draws from its own generator seeded with
    ``(rng_seed, i)``, so the output is the same for any ``workers``.
    """
    if n < 0:
        raise ValueError(f"Row count must be non-negative, got {n}")
    sizes = [min(partition_rows, n - start) for start in range(0, n, partition_rows)]
    if workers <= 1:
        for i, rows in enumerate(sizes):
            yield _partition(model, rows, rng_seed, i)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(lambda job: _partition(model, job[1], rng_seed, job[0]), enumerate(sizes))


def synthesize(
    model: CopulaModel,
    n: int,
    rng_seed: int = 0,
    partition_rows: int = PARTITION_ROWS,
    workers: int = 1,
) -> pd.DataFrame:
    """Exactly ``n`` synthetic rows as one frame."""
    parts = list(iter_synthesize(model, n, rng_seed, partition_rows, workers))
    if not parts:
        return pd.DataFrame({c: pd.Series(dtype=object) for c in model.columns})
    return pd.concat(parts, ignore_index=True)
