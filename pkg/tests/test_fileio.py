"""Round-trip and validation tests for the CSV file formats."""

import numpy as np
import pytest

from socmarket.bidding import BidCurve
from socmarket.fileio import (
    read_bids,
    read_fleet,
    read_prices,
    read_scenarios,
    read_storage_spec,
    write_bids,
    write_fleet,
    write_prices,
    write_scenarios,
    write_storage_spec,
)
from socmarket.gridsim import GeneratorSpec, ScenarioData
from socmarket.storage import SegmentSpec, StorageSpec
from socmarket.valuation import PriceSeries


def two_segment_spec():
    return StorageSpec(
        e_min=0.5,
        segments=(
            SegmentSpec(e_end=2.0, cost=12.0, d_rating=0.3, p_rating=0.25,
                        eta_d=0.92, eta_p=0.9),
            SegmentSpec(e_end=4.0, cost=15.0, d_rating=0.2, p_rating=0.3,
                        eta_d=0.95, eta_p=0.88),
        ),
        step_minutes=5.0,
    )


def test_storage_spec_round_trip(tmp_path):
    spec = two_segment_spec()
    path = tmp_path / "spec.csv"
    write_storage_spec(spec, path)
    assert read_storage_spec(path) == spec


def test_storage_spec_ratings_are_mw_in_file(tmp_path):
    # 0.3 MWh per 5-minute step is 3.6 MW
    path = tmp_path / "spec.csv"
    write_storage_spec(two_segment_spec(), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# e_min_mwh=0.5,step_minutes=5.0"
    first_seg = lines[2].split(",")
    assert float(first_seg[3]) == pytest.approx(3.6)
    assert float(first_seg[4]) == pytest.approx(3.0)


def test_storage_spec_missing_metadata(tmp_path):
    path = tmp_path / "spec.csv"
    path.write_text(
        "segment,e_end_mwh,cost_usd_per_mwh,d_rating_mw,p_rating_mw,"
        "eta_d,eta_p\n1,1.0,10,1,1,0.9,0.9\n"
    )
    with pytest.raises(ValueError, match="metadata"):
        read_storage_spec(path)


def test_storage_spec_bad_segment_order(tmp_path):
    path = tmp_path / "spec.csv"
    path.write_text(
        "# e_min_mwh=0.0,step_minutes=60.0\n"
        "segment,e_end_mwh,cost_usd_per_mwh,d_rating_mw,p_rating_mw,"
        "eta_d,eta_p\n"
        "2,1.0,10,1,1,0.9,0.9\n"
    )
    with pytest.raises(ValueError, match="segment ids"):
        read_storage_spec(path)


def test_storage_spec_header_mismatch(tmp_path):
    path = tmp_path / "spec.csv"
    path.write_text(
        "# e_min_mwh=0.0,step_minutes=60.0\nsegment,e_end\n1,1.0\n"
    )
    with pytest.raises(ValueError, match="expected header"):
        read_storage_spec(path)


def test_prices_round_trip(tmp_path):
    series = PriceSeries(
        step_minutes=5.0, prices=np.array([20.0, -3.5, 41.25, 20.0])
    )
    path = tmp_path / "prices.csv"
    write_prices(series, path)
    got = read_prices(path)
    assert got.step_minutes == 5.0
    np.testing.assert_array_equal(got.prices, series.prices)


def test_prices_nonuniform_step_rejected(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text(
        "timestamp_iso8601,price_usd_per_mwh\n"
        "2016-01-01T00:00:00,20.0\n"
        "2016-01-01T00:05:00,21.0\n"
        "2016-01-01T00:15:00,22.0\n"
    )
    with pytest.raises(ValueError, match="uniformly spaced"):
        read_prices(path)


def test_prices_decreasing_timestamps_rejected(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text(
        "timestamp_iso8601,price_usd_per_mwh\n"
        "2016-01-01T01:00:00,20.0\n"
        "2016-01-01T00:00:00,21.0\n"
    )
    with pytest.raises(ValueError):
        read_prices(path)


def test_prices_single_row_rejected(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("timestamp_iso8601,price_usd_per_mwh\n2016-01-01T00:00:00,20.0\n")
    with pytest.raises(ValueError, match="at least two rows"):
        read_prices(path)


def test_bids_round_trip(tmp_path):
    curves = [
        BidCurve(hour=0, e_edges=(0.0, 1.0, 2.0), g=(50.0, 45.0),
                 b=(30.0, 25.0)),
        BidCurve(hour=1, e_edges=(0.0, 1.0, 2.0), g=(52.0, 47.0),
                 b=(31.0, 26.0)),
    ]
    path = tmp_path / "bids.csv"
    write_bids(curves, path)
    got = read_bids(path)
    assert sorted(got) == [0, 1]
    assert got[0] == curves[0]
    assert got[1] == curves[1]


def test_bids_dict_input_written_in_hour_order(tmp_path):
    curves = {
        1: BidCurve(hour=1, e_edges=(0.0, 1.0), g=(40.0,), b=(20.0,)),
        0: BidCurve(hour=0, e_edges=(0.0, 1.0), g=(41.0,), b=(21.0,)),
    }
    path = tmp_path / "bids.csv"
    write_bids(curves, path)
    rows = path.read_text().splitlines()
    assert rows[1].startswith("0,")
    assert rows[2].startswith("1,")


def test_bids_non_contiguous_ranges_rejected(tmp_path):
    path = tmp_path / "bids.csv"
    path.write_text(
        "hour,segment,e_lo_mwh,e_hi_mwh,discharge_bid,charge_bid\n"
        "0,1,0.0,1.0,50.0,30.0\n"
        "0,2,1.5,2.0,45.0,25.0\n"
    )
    with pytest.raises(ValueError, match="contiguous"):
        read_bids(path)


def test_bids_missing_segment_rejected(tmp_path):
    path = tmp_path / "bids.csv"
    path.write_text(
        "hour,segment,e_lo_mwh,e_hi_mwh,discharge_bid,charge_bid\n"
        "0,1,0.0,1.0,50.0,30.0\n"
        "0,3,1.0,2.0,45.0,25.0\n"
    )
    with pytest.raises(ValueError, match="segments must run"):
        read_bids(path)


def test_fleet_round_trip(tmp_path):
    fleet = (
        GeneratorSpec(c_lin=20.0, c_quad=0.004, c_noload=100.0, c_start=400.0,
                      g_min=50.0, g_max=200.0, t_up=4, t_dn=4),
        GeneratorSpec(c_lin=35.0, c_quad=0.0, c_noload=20.0, c_start=50.0,
                      g_min=10.0, g_max=80.0, t_up=1, t_dn=1),
    )
    path = tmp_path / "fleet.csv"
    write_fleet(fleet, path)
    assert read_fleet(path) == fleet


def test_fleet_empty_rejected(tmp_path):
    path = tmp_path / "fleet.csv"
    path.write_text(
        "gen_id,c_lin,c_quad,c_noload,c_start,g_min_mw,g_max_mw,t_up_h,t_dn_h\n"
    )
    with pytest.raises(ValueError, match="no generator rows"):
        read_fleet(path)


def test_scenarios_round_trip(tmp_path):
    scenarios = (
        ScenarioData(demand=(100.0, 120.0), wind=(10.0, 0.0)),
        ScenarioData(demand=(90.0, 95.0), wind=(5.0, 25.0)),
    )
    path = tmp_path / "scen.csv"
    write_scenarios(scenarios, path)
    assert read_scenarios(path) == scenarios


def test_scenarios_hour_gap_rejected(tmp_path):
    path = tmp_path / "scen.csv"
    path.write_text(
        "scenario_id,hour,demand_mw,wind_mw\n"
        "1,0,100.0,0.0\n"
        "1,2,110.0,0.0\n"
    )
    with pytest.raises(ValueError, match="hours must run"):
        read_scenarios(path)
