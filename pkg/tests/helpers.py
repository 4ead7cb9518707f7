"""Fixture builders shared by the test modules."""

from datetime import datetime, timedelta
from importlib import resources

import numpy as np

from idprice.market_data import COLUMNS

# 2020-03-28 in SE2: near-flat DA around 5 EUR, choppy ID prices.
CHOPPY_DATE = "2020-03-28"
CHOPPY_DAY = {
    "id_high": [4.01, 0, 0, 0, 7, 0, 0, 0, 0, 5.48, 0, 0, 21.26, 0, 4.6, 4.55, 0, 0, 0, 6, 6.9, 6.9, 6.13, 8.01],
    "id_low": [4, 0, 0, 0, 4.01, 0, 0, 0, 0, 3, 0, 0, -12.5, 0, -12.5, -0.45, 0, 0, 0, 0.5, 2.5, 1.71, 2, 1.9],
    "id_avg": [4, 0, 0, 0, 5.6, 0, 0, 0, 0, 4.41, 0, 0, 0.01, 0, 2.46, 3.96, 0, 0, 0, 2.92, 4.76, 3.72, 4.75, 4.36],
    "da_price": [5.46, 5.37, 5.3, 5.3, 5.36, 5.38, 5.47, 5.49, 5.53, 5.48, 5.44, 5.31, 4.99, 4.1, 3.97, 4.22, 5.05, 5.55, 5.82, 5.76, 5.45, 5.2, 5.06, 4.91],
}


def data_file(name):
    return resources.files("idprice") / "data" / name


def load_fixture_prices(name):
    return np.loadtxt(str(data_file(name)), delimiter=",", skiprows=1)


def market_csv(rows):
    """CSV text from dicts keyed by column name; absent keys are empty cells."""
    lines = [",".join(COLUMNS)]
    for r in rows:
        cells = []
        for c in COLUMNS:
            v = r.get(c)
            cells.append("" if v is None else str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def hourly_rows(zone, start, values, field="id_avg", **const):
    """One row per hour from ``start`` with ``field`` taken from ``values``.

    High and low bracket the value so that every row is well formed.
    """
    t0 = datetime.fromisoformat(start)
    rows = []
    for k, v in enumerate(values):
        row = {"timestamp": (t0 + timedelta(hours=k)).isoformat(), "zone": zone, field: v}
        if field == "id_avg" and v is not None:
            row.setdefault("id_high", round(v + 1.0, 6))
            row.setdefault("id_low", round(v - 1.0, 6))
            row.setdefault("id_last", v)
        row.update(const)
        rows.append(row)
    return rows


def choppy_day_rows():
    t0 = datetime.fromisoformat(CHOPPY_DATE)
    rows = []
    for h in range(24):
        row = {"timestamp": (t0 + timedelta(hours=h)).isoformat(), "zone": "SE2"}
        for k, vals in CHOPPY_DAY.items():
            row[k] = vals[h]
        rows.append(row)
    return rows


def sine_values(n_cycles=10, period=24, level=50.0, amp=30.0):
    t = np.arange(n_cycles * period)
    return level + amp * np.sin(2 * np.pi * t / period)
