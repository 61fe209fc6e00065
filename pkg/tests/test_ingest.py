import io
from datetime import datetime, timedelta

import numpy as np
import pytest

from windcompare.dataset import Dataset, Period, PeriodPartition
from windcompare.ingest import (
    aggregate_high_frequency,
    parse_scada,
    partition,
    read_dataset,
    write_dataset,
)

from conftest import make_dataset

SCHEMA = {
    "time": "timestamp",
    "ws": "W",
    "temp": "T",
    "dir": "D",
    "ti": "TI",
    "sdd": "sdD",
    "power": "y",
}

CSV_OK = """time,ws,temp,dir,ti,sdd,power
2016-01-01T00:00:00,7.0,10.0,90.0,0.08,5.0,500.0
2016-01-01T00:10:00,8.0,10.5,91.0,0.07,4.0,610.0
2016-01-01T00:20:00,9.0,11.0,92.0,0.06,3.0,720.0
"""


class TestParseScada:
    def test_all_rows_valid(self):
        result = parse_scada(io.StringIO(CSV_OK), SCHEMA, turbine_id="T01")
        assert result.dataset.n == 3
        assert result.dropped_rows == 0
        assert result.dataset.turbine_id == "T01"

    def test_missing_wind_speed_row_dropped(self):
        csv = CSV_OK.replace("2016-01-01T00:10:00,8.0", "2016-01-01T00:10:00,")
        result = parse_scada(io.StringIO(csv), SCHEMA, turbine_id="T01")
        assert result.dataset.n == 2
        assert result.dropped_rows == 1

    def test_schema_maps_power_column(self):
        csv = CSV_OK.replace("power", "ActivePower_kW")
        schema = dict(SCHEMA)
        del schema["power"]
        schema["ActivePower_kW"] = "y"
        result = parse_scada(io.StringIO(csv), schema, turbine_id="T01")
        np.testing.assert_allclose(result.dataset.y, [500.0, 610.0, 720.0])

    def test_tab_delimited_autodetected(self):
        result = parse_scada(io.StringIO(CSV_OK.replace(",", "\t")), SCHEMA, turbine_id="T01")
        assert result.dataset.n == 3

    def test_schema_column_absent(self):
        schema = dict(SCHEMA)
        schema["nonexistent"] = "W"
        with pytest.raises(ValueError, match="absent"):
            parse_scada(io.StringIO(CSV_OK), schema, turbine_id="T01")

    def test_zero_valid_rows(self):
        csv = "time,ws,temp,dir,ti,sdd,power\nnot-a-date,a,b,c,d,e,f\n"
        with pytest.raises(ValueError, match="zero valid rows"):
            parse_scada(io.StringIO(csv), SCHEMA, turbine_id="T01")

    def test_turbine_id_from_column(self):
        csv = "time,ws,temp,dir,ti,sdd,power,unit\n" + "\n".join(
            f"2016-01-01T0{i}:00:00,7,10,90,0.08,5,500,T07" for i in range(3)
        )
        schema = dict(SCHEMA)
        schema["unit"] = "turbine_id"
        result = parse_scada(io.StringIO(csv), schema)
        assert result.dataset.turbine_id == "T07"


class TestAggregate:
    def _window(self, values, t0=datetime(2016, 1, 1)):
        return [(t0 + timedelta(seconds=i), w, d, t) for i, (w, d, t) in enumerate(values)]

    def test_constant_window(self):
        records = aggregate_high_frequency(self._window([(8.0, 90.0, 20.0)] * 6))
        assert len(records) == 1
        rec = records[0]
        assert rec.W == pytest.approx(8.0)
        assert rec.TI == pytest.approx(0.0)
        assert rec.D == pytest.approx(90.0)
        assert rec.sdD == pytest.approx(0.0)
        assert rec.T == pytest.approx(20.0)

    def test_ti_uses_sample_standard_deviation(self):
        records = aggregate_high_frequency(self._window([(7.0, 90.0, 20.0), (9.0, 90.0, 20.0)]))
        # sd({7, 9}) with n-1 = sqrt(2); TI = sqrt(2) / 8
        assert records[0].TI == pytest.approx(np.sqrt(2.0) / 8.0, abs=1e-12)

    def test_direction_wraps(self):
        records = aggregate_high_frequency(self._window([(5.0, 350.0, 20.0), (5.0, 10.0, 20.0)]))
        d = records[0].D
        assert min(d, 360.0 - d) < 1e-10

    def test_zero_mean_wind_flags_ti(self):
        records = aggregate_high_frequency(self._window([(0.0, 90.0, 20.0)] * 4))
        assert records[0].TI is None

    def test_single_sample_window_omitted(self):
        t0 = datetime(2016, 1, 1)
        samples = [(t0, 8.0, 90.0, 20.0)]  # lone sample: no spread estimate
        assert aggregate_high_frequency(samples) == []

    def test_windows_split_on_boundary(self):
        t0 = datetime(2016, 1, 1)
        samples = [(t0 + timedelta(minutes=m), 8.0 + m, 90.0, 20.0) for m in (0, 5, 10, 15)]
        records = aggregate_high_frequency(samples)
        assert len(records) == 2
        assert records[0].W == pytest.approx(10.5)  # mean of 8, 13

    def test_rotation_equivariance_of_direction(self, rng):
        base = rng.uniform(80, 100, 12)
        shift = 247.0
        recs = aggregate_high_frequency(self._window([(8.0, d, 20.0) for d in base]))
        recs_shifted = aggregate_high_frequency(
            self._window([(8.0, (d + shift) % 360.0, 20.0) for d in base])
        )
        assert recs_shifted[0].D == pytest.approx((recs[0].D + shift) % 360.0, abs=1e-8)
        assert recs_shifted[0].sdD == pytest.approx(recs[0].sdD, abs=1e-10)


def paper_style_partition() -> PeriodPartition:
    return PeriodPartition(
        [
            Period("V0", datetime(2015, 7, 1), datetime(2016, 8, 1), "V0"),
            Period("V0+P1", datetime(2016, 8, 1), datetime(2017, 11, 1), "V0+P1"),
            Period("V1+P1", datetime(2017, 12, 1), datetime(2018, 6, 1), "V1+P1"),
            Period("V1+P2", datetime(2018, 7, 1), datetime(2019, 6, 1), "V1+P2"),
        ]
    )


class TestPartition:
    def test_record_in_first_period(self):
        ds = make_dataset(start=datetime(2016, 1, 15), W=[8.0], y=[500.0])
        parts = partition(ds, paper_style_partition())
        assert parts["V0"].n == 1
        assert parts["V0"].period_label == "V0"

    def test_record_in_gap_excluded(self):
        ds = make_dataset(start=datetime(2017, 11, 15), W=[8.0], y=[500.0])
        parts = partition(ds, paper_style_partition())
        assert all(d.n == 0 for d in parts.values())

    def test_empty_dataset(self):
        ds = Dataset("T01", np.array([], dtype="datetime64[s]"), {"W": [], "y": []})
        parts = partition(ds, paper_style_partition())
        assert len(parts) == 4
        assert all(d.n == 0 for d in parts.values())

    def test_counts_add_up(self, rng):
        n = 500
        start = np.datetime64("2015-01-01", "s")
        stamps = start + np.sort(
            rng.choice(5 * 365 * 24 * 360, size=n, replace=False)
        ) * np.timedelta64(10, "s")
        ds = Dataset("T01", stamps, {"W": rng.uniform(0, 20, n), "y": rng.uniform(0, 1500, n)})
        parts = partition(ds, paper_style_partition())
        inside = sum(d.n for d in parts.values())
        bounds = paper_style_partition()
        excluded = sum(
            1
            for t in stamps
            if not any(
                np.datetime64(p.start, "s") <= t < np.datetime64(p.end, "s") for p in bounds
            )
        )
        assert inside + excluded == n

    def test_half_open_boundary(self):
        ds = make_dataset(start=datetime(2016, 8, 1), W=[8.0], y=[500.0])
        parts = partition(ds, paper_style_partition())
        assert parts["V0"].n == 0
        assert parts["V0+P1"].n == 1


class TestDatasetRoundTrip:
    def test_write_read_exact(self, tmp_path, rng):
        cols = {
            "W": rng.uniform(0, 20, 7),
            "T": rng.normal(15, 5, 7),
            "D": rng.uniform(0, 360, 7),
            "TI": rng.uniform(0.01, 0.2, 7),
            "sdD": rng.uniform(0.5, 9, 7),
            "y": rng.uniform(-10, 1500, 7),
        }
        ds = make_dataset(**cols)
        path = tmp_path / "t01.csv"
        write_dataset(ds, path)
        back = read_dataset(path)
        assert back.turbine_id == ds.turbine_id
        assert (back.timestamps == ds.timestamps).all()
        for name, values in cols.items():
            np.testing.assert_array_equal(back.columns[name], values)


class TestDatasetInvariants:
    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="NaN"):
            make_dataset(W=[1.0, np.nan])

    def test_rejects_negative_wind(self):
        with pytest.raises(ValueError, match="W"):
            make_dataset(W=[-1.0])

    def test_rejects_direction_360(self):
        with pytest.raises(ValueError, match="D"):
            make_dataset(W=[5.0], D=[360.0])

    def test_rejects_nonincreasing_timestamps(self):
        with pytest.raises(ValueError, match="increasing"):
            Dataset("T01", np.array(["2016-01-01", "2016-01-01"], dtype="datetime64[s]"), {"W": [1.0, 2.0]})
