from datetime import date, datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idprice.errors import (
    DomainError,
    DuplicateError,
    EmptyOverlapError,
    FormatError,
    UndefinedVariationError,
    UnknownZoneError,
)
from idprice.market_data import (
    DayProfile,
    MarketSeries,
    PriceRecord,
    day_profile,
    day_profiles,
    field_sequence,
    parse_market_csv,
    price_variation,
    series_to_csv,
    similar_price_fraction,
    sliding_windows,
    volume_share,
    windows_to_arrays,
)

from .helpers import CHOPPY_DAY, CHOPPY_DATE, choppy_day_rows, hourly_rows, market_csv

HEADER = "timestamp,zone,da_price,id_high,id_low,id_last,id_avg,buy_volume,sell_volume"


def _brute_windows(values, w):
    """Every (i, i+w) span with no missing value inside, enumerated directly."""
    out = []
    for i in range(len(values) - w):
        span = values[i : i + w + 1]
        if all(v is not None for v in span):
            out.append((tuple(float(v) for v in span[:-1]), float(span[-1])))
    return out


class TestParse:
    def test_two_rows(self):
        text = HEADER + "\n2020-01-01T00:00,SE1,10,12,8,9,10,1,2\n2020-01-01T01:00,SE1,11,13,9,10,11,1,2\n"
        s = parse_market_csv(text)
        assert len(s) == 2
        assert s.warnings == ()
        assert s.records[1].id_avg == 11.0

    def test_low_above_high_is_rejected_with_warning(self):
        text = HEADER + "\n2020-01-01T00:00,SE1,10,12,8,9,10,1,2\n2020-01-01T01:00,SE1,10,5,8,6,6,1,2\n"
        s = parse_market_csv(text)
        assert len(s) == 1
        assert len(s.warnings) == 1
        assert s.warnings[0].line == 3

    def test_missing_header(self):
        with pytest.raises(FormatError):
            parse_market_csv("2020-01-01T00:00,SE1,10,12,8,9,10,1,2\n")

    def test_empty_document(self):
        with pytest.raises(FormatError):
            parse_market_csv("")

    def test_duplicate_key_names_it(self):
        row = "2020-01-01T00:00,SE1,10,12,8,9,10,1,2\n"
        with pytest.raises(DuplicateError) as ei:
            parse_market_csv(HEADER + "\n" + row + row)
        assert ei.value.key == ("SE1", "2020-01-01T00:00:00")
        assert ei.value.line == 3

    def test_empty_cells_are_missing_not_zero(self):
        s = parse_market_csv(HEADER + "\n2020-01-01T00:00,SE1,10,,,,,,\n")
        r = s.records[0]
        assert r.id_avg is None and r.id_high is None
        assert r.da_price == 10.0

    def test_legitimate_zero_price_kept(self):
        s = parse_market_csv(HEADER + "\n2020-01-01T00:00,SE1,0,0,0,0,0,0,0\n")
        assert s.records[0].id_avg == 0.0

    @pytest.mark.parametrize("bad", ["1,234.5", "12,5", "abc", "inf"])
    def test_bad_numbers_become_warnings(self, bad):
        text = HEADER + f'\n2020-01-01T00:00,SE1,"{bad}",12,8,9,10,1,2\n'
        s = parse_market_csv(text)
        assert len(s) == 0 and len(s.warnings) == 1

    def test_off_hour_timestamp_warns(self):
        s = parse_market_csv(HEADER + "\n2020-01-01T00:30,SE1,10,12,8,9,10,1,2\n")
        assert len(s.warnings) == 1

    def test_wrong_column_count_warns(self):
        s = parse_market_csv(HEADER + "\n2020-01-01T00:00,SE1,10\n")
        assert "columns" in s.warnings[0].message

    def test_bom_tolerated(self):
        s = parse_market_csv("﻿" + HEADER + "\n2020-01-01T00:00,SE1,10,12,8,9,10,1,2\n")
        assert len(s) == 1

    def test_unsorted_input_is_ordered(self):
        rows = hourly_rows("SE1", "2020-01-01T00:00", [1.0, 2.0, 3.0])
        s = parse_market_csv(market_csv(rows[::-1]))
        assert [r.id_avg for r in s.records] == [1.0, 2.0, 3.0]

    def test_round_trip(self, rng):
        vals = list(np.round(rng.normal(30, 10, size=30), 2))
        vals[5] = None
        rows = hourly_rows("SE1", "2020-01-01T00:00", vals, da_price=12.5) + hourly_rows("SE3", "2020-01-01T00:00", vals[:10])
        s = parse_market_csv(market_csv(rows))
        again = parse_market_csv(series_to_csv(s))
        assert again.records == s.records

    def test_dst_repeated_hour_accepted_with_offsets(self):
        text = HEADER + "\n2020-10-25T02:00+02:00,SE1,1,,,,,,\n2020-10-25T02:00+01:00,SE1,2,,,,,,\n"
        s = parse_market_csv(text)
        assert len(s) == 2
        p = day_profile(s, "SE1", date(2020, 10, 25), "da")
        assert p.values[2] == 1.0


class TestSeries:
    def test_invariants_enforced(self):
        t = datetime(2020, 1, 1)
        with pytest.raises(DuplicateError):
            MarketSeries.from_records([PriceRecord(t, "SE1"), PriceRecord(t, "SE1")])
        with pytest.raises(FormatError):
            MarketSeries((PriceRecord(t + timedelta(hours=1), "SE1"), PriceRecord(t, "SE1")))

    def test_unknown_zone(self):
        s = parse_market_csv(market_csv(hourly_rows("SE1", "2020-01-01T00:00", [1.0])))
        with pytest.raises(UnknownZoneError, match="no data for zone"):
            s.zone_records("SE9")
        assert isinstance(UnknownZoneError("x"), LookupError)

    def test_filter_by_date_inclusive(self):
        s = parse_market_csv(market_csv(hourly_rows("SE1", "2020-01-01T00:00", list(range(72)))))
        sub = s.filter(start=date(2020, 1, 2), end=date(2020, 1, 2))
        assert len(sub) == 24


class TestPriceVariation:
    def test_one_hour_example(self):
        assert price_variation(57.40, 39.12, 43.67) == pytest.approx(41.86, abs=0.01)

    def test_flat_hour(self):
        assert price_variation(12.0, 12.0, 3.0) == 0.0

    def test_direct(self):
        assert price_variation(20, 10, 10) == 100.0

    def test_zero_average_undefined(self):
        with pytest.raises(UndefinedVariationError):
            price_variation(1.0, -1.0, 0.0)

    def test_high_below_low(self):
        with pytest.raises(DomainError):
            price_variation(1.0, 2.0, 1.5)

    @given(st.floats(0.01, 500), st.floats(0, 100), st.floats(0.1, 100), st.floats(1e-3, 1e3))
    def test_scale_invariant(self, low, spread, avg, k):
        hi = low + spread
        assert price_variation(k * hi, k * low, k * avg) == pytest.approx(price_variation(hi, low, avg), rel=1e-9, abs=1e-9)


def _zones_series(table, field="da_price", start="2020-01-01T00:00"):
    rows = []
    for zone, vals in table.items():
        rows += hourly_rows(zone, start, vals, field=field)
    return parse_market_csv(market_csv(rows))


class TestSimilarPrices:
    def test_identical_series(self):
        v = [10.0, 20.5, 30.0, 5.0]
        s = _zones_series({z: v for z in ("SE1", "SE2", "SE3", "SE4")})
        assert similar_price_fraction(s, ["SE1", "SE2", "SE3", "SE4"], "da").percent == 100.0

    def test_two_of_five(self):
        s = _zones_series({"SE1": [1, 2, 3, 4, 5], "SE2": [1, 2, 9, 9, 9]})
        r = similar_price_fraction(s, ["SE1", "SE2"], "da")
        assert r.percent == 40.0 and r.count == 2 and r.total == 5

    def test_tolerance_is_half_cent(self):
        s = _zones_series({"SE1": [10.0, 10.0], "SE2": [10.005, 10.011]})
        assert similar_price_fraction(s, ["SE1", "SE2"], "da").count == 1

    def test_week_matches_hand_count(self):
        g = np.random.default_rng(3)
        base = np.round(g.uniform(20, 40, size=168), 2)
        other = base.copy()
        differ = g.choice(168, size=37, replace=False)
        other[differ] += np.round(g.uniform(0.5, 3, size=37), 2)
        s = _zones_series({"SE1": list(base), "SE2": list(other)})
        r = similar_price_fraction(s, ["SE1", "SE2"], "da")
        hand = sum(1 for a, b in zip(base, other) if abs(a - b) <= 0.005)
        assert r.count == hand == 131
        assert r.percent == pytest.approx(100 * 131 / 168)

    def test_only_common_hours_count(self):
        s = _zones_series({"SE1": [1, 2, None, 4], "SE2": [1, 5, 3, 4]})
        r = similar_price_fraction(s, ["SE1", "SE2"], "da")
        assert r.total == 3 and r.count == 2

    def test_no_overlap(self):
        rows = hourly_rows("SE1", "2020-01-01T00:00", [1.0], field="da_price") + hourly_rows("SE2", "2020-01-02T00:00", [1.0], field="da_price")
        with pytest.raises(EmptyOverlapError):
            similar_price_fraction(parse_market_csv(market_csv(rows)), ["SE1", "SE2"], "da")

    def test_needs_two_zones(self):
        s = _zones_series({"SE1": [1.0]})
        with pytest.raises(DomainError):
            similar_price_fraction(s, ["SE1"], "da")

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.lists(st.sampled_from([1.0, 2.0, 3.0]), min_size=6, max_size=6), min_size=4, max_size=4), st.permutations(range(4)))
    def test_permutation_invariant_and_monotone(self, cols, perm):
        zones = ["SE1", "SE2", "SE3", "SE4"]
        s = _zones_series(dict(zip(zones, cols)))
        base = similar_price_fraction(s, zones, "da")
        permuted = similar_price_fraction(s, [zones[i] for i in perm], "da")
        assert permuted == base
        counts = [similar_price_fraction(s, zones[:k], "da").count for k in (2, 3, 4)]
        assert counts[0] >= counts[1] >= counts[2]
        # full coverage: the base is the same for every zone set, so the percentage is monotone too
        pcts = [similar_price_fraction(s, zones[:k], "da").percent for k in (2, 3, 4)]
        assert pcts[0] >= pcts[1] >= pcts[2]


class TestVolumeShare:
    def test_se1_buy(self):
        v = volume_share(18832.4, 865237.5)
        assert v == pytest.approx(2.18, abs=0.03)
        assert round(v, 1) == 2.2

    def test_se4_sell(self):
        v = volume_share(11692.8, 280141.5)
        assert v == pytest.approx(4.17, abs=0.05)
        assert round(v, 1) == 4.2

    def test_zero_intraday(self):
        assert volume_share(0.0, 10.0) == 0.0

    @pytest.mark.parametrize("da", [0.0, -1.0])
    def test_nonpositive_da(self, da):
        with pytest.raises(DomainError):
            volume_share(1.0, da)


class TestDayProfile:
    def test_full_day_in_order(self):
        vals = [float(h) * 1.5 for h in range(24)]
        s = parse_market_csv(market_csv(hourly_rows("SE2", "2020-03-28T00:00", vals)))
        p = day_profile(s, "SE2", date(2020, 3, 28), "avg")
        assert p.values == tuple(vals)
        assert p.complete

    def test_absent_hour_is_missing(self):
        rows = hourly_rows("SE2", "2020-03-28T00:00", [float(h) for h in range(24)])
        del rows[4]
        p = day_profile(parse_market_csv(market_csv(rows)), "SE2", date(2020, 3, 28), "avg")
        assert p.missing == (4,)
        assert np.isnan(p.as_array()[4])
        assert p.values[0] == 0.0

    def test_choppy_day_extremes(self):
        s = parse_market_csv(market_csv(choppy_day_rows()))
        d = date.fromisoformat(CHOPPY_DATE)
        hi = day_profile(s, "SE2", d, "high")
        lo = day_profile(s, "SE2", d, "low")
        da = day_profile(s, "SE2", d, "da")
        assert max(hi.values) == 21.26
        assert min(lo.values) == -12.5
        assert max(da.values) - min(da.values) < 2.0
        assert list(day_profile(s, "SE2", d, "avg").values) == CHOPPY_DAY["id_avg"]

    def test_unknown_zone(self):
        s = parse_market_csv(market_csv(choppy_day_rows()))
        with pytest.raises(LookupError):
            day_profile(s, "NO1", date(2020, 3, 28), "avg")

    def test_exactly_24_slots(self):
        with pytest.raises(DomainError):
            DayProfile(None, None, (1.0,) * 23)

    def test_complete_only_filter(self):
        rows = hourly_rows("SE1", "2020-01-01T00:00", [1.0] * 47)
        ps = day_profiles(parse_market_csv(market_csv(rows)), "SE1", "avg")
        assert len(ps) == 1


class TestSlidingWindows:
    def test_basic(self):
        assert sliding_windows([1, 2, 3, 4], 2) == [((1.0, 2.0), 3.0), ((2.0, 3.0), 4.0)]

    def test_length_equal_window(self):
        assert sliding_windows([1, 2, 3], 3) == []

    def test_gap_never_straddled(self):
        vals = [0, 1, 2, 3, None, 5, 6, 7, 8, 9]
        pairs = sliding_windows(vals, 2)
        assert pairs == _brute_windows(vals, 2)
        assert len(pairs) == 2 + 3

    def test_nan_is_a_gap(self):
        assert len(sliding_windows([1.0, np.nan, 2.0, 3.0], 1)) == 1

    def test_rejects_zero_window(self):
        with pytest.raises(DomainError):
            sliding_windows([1, 2], 0)

    @settings(max_examples=100)
    @given(st.lists(st.one_of(st.none(), st.floats(-100, 100)), max_size=100), st.integers(1, 12))
    def test_count_matches_brute_force(self, vals, w):
        assert sliding_windows(vals, w) == _brute_windows(vals, w)

    def test_time_gap_inserts_break(self):
        rows = hourly_rows("SE1", "2020-01-01T00:00", [1.0, 2.0, 3.0]) + hourly_rows("SE1", "2020-01-01T05:00", [4.0, 5.0])
        seq = field_sequence(parse_market_csv(market_csv(rows)), "SE1", "avg")
        assert seq == [1.0, 2.0, 3.0, None, 4.0, 5.0]
        assert len(sliding_windows(seq, 2)) == 1

    def test_arrays(self):
        X, y = windows_to_arrays(sliding_windows(range(6), 3))
        assert X.shape == (3, 3)
        np.testing.assert_array_equal(y, [3, 4, 5])
