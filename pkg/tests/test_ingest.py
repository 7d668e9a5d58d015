import math

import numpy as np
import pytest

from ageincome.errors import ConfigError, DataError, SchemaError
from ageincome.ingest import (
    DeflatorSeries,
    IngestConfig,
    LogIncomePanel,
    load_panel,
    make_transitions,
)
from conftest import build_panel

CONFIG = IngestConfig(
    id_col="pid",
    year_col="yr",
    age_col="age",
    income_col="inc",
    weight_col="wgt",
    floor_wage=1.0,
    sentinel_codes=(-9.0,),
    age_topcodes=(99,),
    age_min=15,
    age_max=100,
)


def write_csv(tmp_path, rows, header="pid,yr,age,inc,wgt"):
    path = tmp_path / "raw.csv"
    path.write_text("\n".join([header] + rows) + "\n")
    return path


def deflator(index, base_year):
    return DeflatorSeries(index=index, base_year=base_year)


def test_deflation_arithmetic(tmp_path):
    # index 50 in the record year, 100 in the base year: income doubles
    src = write_csv(tmp_path, ["1,2000,30,100,1.0"])
    panel, drops = load_panel(src, CONFIG, deflator({2000: 50.0, 2010: 100.0}, 2010))
    assert len(panel) == 1
    assert panel.log_income[0] == pytest.approx(math.log(200.0), abs=1e-12)
    assert drops.n_dropped == 0
    assert panel.base_year == 2010


def test_below_floor_dropped(tmp_path):
    src = write_csv(tmp_path, ["1,2000,30,0,1.0"])
    panel, drops = load_panel(src, CONFIG, deflator({2000: 100.0, 2010: 100.0}, 2010))
    assert len(panel) == 0
    assert drops.counts["below_floor"] == 1


def test_sentinel_fixture(tmp_path):
    src = write_csv(tmp_path, ["1,2000,30,5000,1.0", "2,2000,35,-9,1.0", "3,2000,40,7000,2.0"])
    panel, drops = load_panel(src, CONFIG, deflator({2000: 100.0, 2010: 100.0}, 2010))
    assert len(panel) == 2
    assert drops.counts["sentinel_income"] == 1
    assert drops.n_dropped == 1


def test_missing_mapped_column_is_schema_error(tmp_path):
    src = write_csv(tmp_path, ["1,2000,30,100"], header="pid,yr,age,income_wrong")
    with pytest.raises(SchemaError):
        load_panel(src, CONFIG, deflator({2000: 100.0, 2010: 100.0}, 2010))


def test_missing_deflator_year_drops_record(tmp_path):
    src = write_csv(tmp_path, ["1,1999,30,5000,1.0", "2,2000,30,5000,1.0"])
    panel, drops = load_panel(src, CONFIG, deflator({2000: 100.0, 2010: 100.0}, 2010))
    assert len(panel) == 1
    assert drops.counts["missing_deflator_year"] == 1


def test_age_filters(tmp_path):
    src = write_csv(
        tmp_path,
        ["1,2000,99,5000,1.0", "2,2000,105,5000,1.0", "3,2000,14,5000,1.0", "4,2000,50,5000,1.0"],
    )
    panel, drops = load_panel(src, CONFIG, deflator({2000: 100.0, 2010: 100.0}, 2010))
    assert len(panel) == 1
    assert drops.counts["topcoded_age"] == 1
    assert drops.counts["out_of_range_age"] == 2


def test_duplicate_keeps_first(tmp_path):
    src = write_csv(tmp_path, ["1,2000,30,5000,1.0", "1,2000,30,6000,1.0"])
    panel, drops = load_panel(src, CONFIG, deflator({2000: 100.0, 2010: 100.0}, 2010))
    assert len(panel) == 1
    assert drops.counts["duplicate"] == 1
    assert panel.log_income[0] == pytest.approx(math.log(5000.0))


def test_negative_weight_dropped(tmp_path):
    src = write_csv(tmp_path, ["1,2000,30,5000,-2.0"])
    _, drops = load_panel(src, CONFIG, deflator({2000: 100.0, 2010: 100.0}, 2010))
    assert drops.counts["bad_weight"] == 1


def test_weight_column_optional(tmp_path):
    cfg = IngestConfig(id_col="pid", year_col="yr", age_col="age", income_col="inc", floor_wage=1.0)
    src = write_csv(tmp_path, ["1,2000,30,5000"], header="pid,yr,age,inc")
    panel, _ = load_panel(src, cfg, deflator({2000: 100.0, 2010: 100.0}, 2010))
    assert panel.weights[0] == 1.0


def test_deflation_idempotence(tmp_path):
    # constant index series: deflation is the identity on incomes
    src = write_csv(tmp_path, ["1,2000,30,5000,1.0", "2,2001,31,7000,1.0"])
    panel, _ = load_panel(src, CONFIG, deflator({2000: 77.0, 2001: 77.0, 2010: 77.0}, 2010))
    np.testing.assert_allclose(panel.log_income, [math.log(5000.0), math.log(7000.0)], rtol=1e-15)


def test_ingest_config_validation():
    with pytest.raises(ConfigError):
        IngestConfig(id_col="a", year_col="a", age_col="c", income_col="d")
    with pytest.raises(ConfigError):
        IngestConfig(id_col="a", year_col="b", age_col="c", income_col="d", floor_wage=-1.0)
    with pytest.raises(ConfigError):
        DeflatorSeries(index={2000: 1.0}, base_year=1999)
    with pytest.raises(ConfigError):
        DeflatorSeries(index={2000: -1.0}, base_year=2000)


def test_panel_rejects_duplicates_and_bad_values():
    with pytest.raises(DataError):
        build_panel([("a", 1991, 30, 9.0), ("a", 1991, 30, 9.1)]).validate_unique()
    with pytest.raises(DataError):
        build_panel([("a", 1991, 30, float("inf"))])


def test_make_transitions_simple_pair():
    panel = build_panel([("x", 1991, 30, 9.0), ("x", 1992, 31, 9.2)])
    tr = make_transitions(panel)
    assert tr.ages == [30]
    np.testing.assert_allclose(tr.pairs(30), [[9.0, 9.2]])


def test_make_transitions_gap_excluded():
    panel = build_panel([("x", 1991, 30, 9.0), ("x", 1993, 32, 9.2)])
    assert make_transitions(panel).total == 0


def test_make_transitions_age_mismatch_excluded():
    # consecutive years but age jumps by 2: not a valid transition
    panel = build_panel([("x", 1991, 30, 9.0), ("x", 1992, 32, 9.2)])
    assert make_transitions(panel).total == 0


def test_make_transitions_immortal_agent():
    rows = [("solo", 1991 + w, 30 + w, 9.0 + 0.01 * w) for w in range(18)]
    tr = make_transitions(build_panel(rows))
    assert tr.total == 17
    assert tr.ages == list(range(30, 47))


def test_make_transitions_endpoints_exist(tiny_panel):
    tr = make_transitions(tiny_panel)
    assert tr.total <= len(tiny_panel)
    frame = tiny_panel.to_frame()
    for a in tr.ages:
        for y, y_next in tr.pairs(a):
            assert ((frame["age"] == a) & (frame["log_income"] == y)).any()
            assert ((frame["age"] == a + 1) & (frame["log_income"] == y_next)).any()


def test_panel_csv_round_trip(tmp_path, tiny_panel):
    path = tmp_path / "panel.csv"
    tiny_panel.write_csv(path)
    back = LogIncomePanel.read_csv(path)
    np.testing.assert_array_equal(back.log_income, tiny_panel.log_income)
    np.testing.assert_array_equal(back.years, tiny_panel.years)
    np.testing.assert_array_equal(back.ages, tiny_panel.ages)
    assert list(back.ids) == list(tiny_panel.ids)
