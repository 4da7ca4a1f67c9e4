"""Built-in stand-in for the U.S. domestic flights seed dataset.

The real on-time performance data needs a separate download, so the
default pipeline scales this synthetic seed instead. Columns follow the
flights schema (carrier, airports, calendar, delays, distance) and carry
the usual dependencies: arrival delay tracks departure delay, air time
tracks distance, late departures are delayed more.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np
import pandas as pd

from vizbench.datagen.normalize import StarSchemaSpec

DEFAULT_SEED_ROWS = 50_000

CARRIERS = {
    "WN": "Southwest Airlines",
    "DL": "Delta Air Lines",
    "AA": "American Airlines",
    "UA": "United Airlines",
    "OO": "SkyWest Airlines",
    "B6": "JetBlue Airways",
    "AS": "Alaska Airlines",
    "NK": "Spirit Airlines",
    "MQ": "Envoy Air",
    "YX": "Republic Airways",
    "F9": "Frontier Airlines",
    "HA": "Hawaiian Airlines",
}
_CARRIER_WEIGHTS = np.array([18, 15, 14, 11, 10, 5, 5, 4, 5, 5, 3, 1], dtype=float)
_CARRIER_DELAY = np.array([2, -2, 1, 3, 0, 5, -1, 6, 2, 1, 4, -3], dtype=float)

# (code, state, latitude, longitude, traffic weight)
AIRPORTS = [
    ("ATL", "GA", 33.64, -84.43, 10),
    ("ORD", "IL", 41.98, -87.90, 9),
    ("DFW", "TX", 32.90, -97.04, 9),
    ("DEN", "CO", 39.86, -104.67, 8),
    ("LAX", "CA", 33.94, -118.41, 8),
    ("SFO", "CA", 37.62, -122.38, 6),
    ("SEA", "WA", 47.45, -122.31, 6),
    ("LAS", "NV", 36.08, -115.15, 6),
    ("PHX", "AZ", 33.43, -112.01, 5),
    ("MCO", "FL", 28.43, -81.31, 5),
    ("CLT", "NC", 35.21, -80.94, 6),
    ("MIA", "FL", 25.79, -80.29, 4),
    ("JFK", "NY", 40.64, -73.78, 5),
    ("LGA", "NY", 40.78, -73.87, 5),
    ("BOS", "MA", 42.36, -71.01, 5),
    ("MSP", "MN", 44.88, -93.22, 5),
    ("DTW", "MI", 42.21, -83.35, 5),
    ("PHL", "PA", 39.87, -75.24, 4),
    ("IAH", "TX", 29.98, -95.34, 5),
    ("SLC", "UT", 40.79, -111.98, 4),
    ("BWI", "MD", 39.18, -76.67, 3),
    ("DCA", "VA", 38.85, -77.04, 3),
    ("SAN", "CA", 32.73, -117.19, 3),
    ("TPA", "FL", 27.98, -82.53, 3),
    ("PDX", "OR", 45.59, -122.60, 2),
    ("HNL", "HI", 21.32, -157.92, 2),
    ("AUS", "TX", 30.19, -97.67, 2),
    ("BNA", "TN", 36.12, -86.68, 2),
    ("STL", "MO", 38.75, -90.37, 2),
    ("MDW", "IL", 41.79, -87.75, 2),
]


def _distance_miles(lat1, lon1, lat2, lon2):
    lat1, lon1, lat2, lon2 = map(np.radians, (lat1, lon1, lat2, lon2))
    a = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 3958.8 * 2 * np.arcsin(np.sqrt(a))


def make_flights_seed(n: int = DEFAULT_SEED_ROWS, rng_seed: int = 0) -> pd.DataFrame:
    """Synthesize ``n`` flight records."""
    rng = np.random.default_rng(rng_seed)

    carrier_codes = np.array(list(CARRIERS))
    c_idx = rng.choice(len(carrier_codes), size=n, p=_CARRIER_WEIGHTS / _CARRIER_WEIGHTS.sum())

    codes = np.array([a[0] for a in AIRPORTS])
    states = np.array([a[1] for a in AIRPORTS])
    lat = np.array([a[2] for a in AIRPORTS])
    lon = np.array([a[3] for a in AIRPORTS])
    weights = np.array([a[4] for a in AIRPORTS], dtype=float)
    p = weights / weights.sum()
    o_idx = rng.choice(len(codes), size=n, p=p)
    d_idx = rng.choice(len(codes), size=n, p=p)
    same = o_idx == d_idx
    d_idx[same] = (d_idx[same] + 1 + rng.integers(0, len(codes) - 1, same.sum())) % len(codes)

    distance = _distance_miles(lat[o_idx], lon[o_idx], lat[d_idx], lon[d_idx])
    distance = np.maximum(np.rint(distance * rng.normal(1.05, 0.02, n)), 50)
    air_time = np.maximum(np.rint(distance / 7.8 + 18 + rng.normal(0, 6, n)), 20)

    month = rng.integers(1, 13, n)
    day_of_week = rng.integers(1, 8, n)
    dep_hour = np.clip(np.rint(rng.normal(13.5, 4.5, n)), 5, 23)

    on_time = rng.random(n) < 0.62
    base = np.where(on_time, rng.normal(-4, 4, n), rng.exponential(32, n))
    summer = np.isin(month, [6, 7, 12]) * 4.0
    dep_delay = np.rint(base + _CARRIER_DELAY[c_idx] + 0.9 * (dep_hour - 13.5) + summer)
    taxi_out = np.rint(rng.gamma(4.0, 3.5, n) + weights[o_idx] * 0.6)
    arr_delay = np.rint(dep_delay + 0.35 * (taxi_out - 16) + rng.normal(-5, 9, n))

    return pd.DataFrame(
        {
            "carrier": carrier_codes[c_idx],
            "carrier_name": np.array(list(CARRIERS.values()))[c_idx],
            "origin": codes[o_idx],
            "origin_state": states[o_idx],
            "dest": codes[d_idx],
            "dest_state": states[d_idx],
            "month": month.astype(np.int64),
            "day_of_week": day_of_week.astype(np.int64),
            "dep_hour": dep_hour.astype(np.int64),
            "dep_delay": dep_delay.astype(np.int64),
            "arr_delay": arr_delay.astype(np.int64),
            "taxi_out": taxi_out.astype(np.int64),
            "air_time": air_time.astype(np.int64),
            "distance": distance.astype(np.int64),
        }
    )


def flights_star_spec() -> StarSchemaSpec:
    """Default normalization of the flights table: carriers and airports dimensions."""
    text = resources.files("vizbench.data").joinpath("flights_star.json").read_text(encoding="utf-8")
    return StarSchemaSpec.from_dict(json.loads(text))
