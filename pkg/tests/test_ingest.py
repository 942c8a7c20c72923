import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wifimob import ingest
from wifimob.ingest import ColumnMapping, FilterConfig, IngestError, apply_filters
from wifimob.trace import Activity, ActivitySample, ApObservation, GpsFix, Provider, WifiScan, build_timeline


def src(text):
    return io.StringIO(text)


def test_wifi_rows_group_by_timestamp():
    res = ingest.parse_wifi(src("timestamp,ap_id,rssi\n10,A,-70\n10,B,-60\n"))
    assert len(res) == 1
    assert res.records[0].ap_ids == {"A", "B"}


def test_wifi_duplicate_ap_keeps_strongest():
    res = ingest.parse_wifi(src("timestamp,ap_id,rssi\n10,A,-70\n10,A,-60\n"))
    (scan,) = res.records
    assert [(o.ap_id, o.rssi) for o in scan.observations] == [("A", -60)]


def test_wifi_bad_rssi_skips_row():
    res = ingest.parse_wifi(src("timestamp,ap_id,rssi\n10,A,abc\n10,B,-50\n"))
    assert res.skipped == 1
    assert res.rows_parsed == 1
    assert "rssi" in res.diagnostics[0]


def test_gps_empty_speed_is_absent():
    (fix,) = ingest.parse_gps(src("timestamp,latitude,longitude,speed\n5,43.7,-72.3,\n")).records
    assert fix.reported_speed is None
    assert fix.accuracy is None


def test_gps_latitude_out_of_range_skipped():
    res = ingest.parse_gps(src("timestamp,latitude,longitude\n5,91.0,0\n"))
    assert res.records == []
    assert res.skipped == 1
    assert "latitude" in res.diagnostics[0]


def test_gps_well_formed_row():
    text = "timestamp,latitude,longitude,speed,accuracy,provider\n7,1.5,-2.25,1.25,12.0,network\n"
    (fix,) = ingest.parse_gps(src(text)).records
    assert fix == GpsFix(7, 1.5, -2.25, 1.25, 12.0, Provider.NETWORK)


def test_gps_unrecognised_provider_maps_to_other():
    (fix,) = ingest.parse_gps(src("timestamp,latitude,longitude,provider\n7,1,2,fused\n")).records
    assert fix.provider is Provider.OTHER


def test_activity_code_lookup():
    (s,) = ingest.parse_activity(src("timestamp,label_code\n3,1\n")).records
    assert s.label is Activity.WALKING


def test_activity_unknown_code_skipped():
    res = ingest.parse_activity(src("timestamp,label_code\n3,7\n"))
    assert res.records == [] and res.skipped == 1


def test_activity_empty_file():
    assert ingest.parse_activity(src("")).records == []


def test_custom_mapping_by_name_and_index():
    m = ColumnMapping("wifi", {"timestamp": "time", "ap_id": "bssid", "rssi": 2})
    res = ingest.parse_wifi(src("time;bssid;level;ssid\n1;aa;-40;home\n"), m, delimiter=";")
    assert res.records == [WifiScan(1, (ApObservation("aa", -40),))]


def test_missing_mapped_column_names_it():
    m = ColumnMapping("wifi", {"timestamp": "ts", "ap_id": "ap_id", "rssi": "rssi"})
    with pytest.raises(IngestError, match="'ts'"):
        ingest.parse_wifi(src("timestamp,ap_id,rssi\n1,a,-50\n"), m)


@pytest.mark.parametrize(
    "cols",
    [
        {"timestamp": "t", "ap_id": "a"},
        {"timestamp": "t", "ap_id": "a", "rssi": "r", "bogus": "b"},
        {"timestamp": "t", "ap_id": "t", "rssi": "r"},
    ],
)
def test_mapping_validation(cols):
    with pytest.raises(ValueError):
        ColumnMapping("wifi", cols)


def test_metadata_comment_lines_are_decoded():
    res = ingest.parse_activity(src('# format_version: 1\n# seed: 42\ntimestamp,label_code\n1,0\n'))
    assert res.metadata == {"format_version": 1, "seed": 42}
    assert len(res) == 1


def test_filters_drop_cell_fixes():
    fixes = [GpsFix(i, 0, 0, provider=p) for i, p in enumerate(["gps", "cell", "network"])]
    tl, removed = apply_filters(build_timeline("u", fixes=fixes))
    assert [f.provider for f in tl.fixes] == [Provider.GPS, Provider.NETWORK]
    assert removed["cell_provider"] == 1


def test_filters_drop_unknown_activity():
    labels = ["walking", "unknown", "running", "stationary"]
    tl, removed = apply_filters(build_timeline("u", activities=[ActivitySample(i, lab) for i, lab in enumerate(labels)]))
    assert len(tl.activities) == 3
    assert removed["unknown_activity"] == 1


def test_filters_accuracy_threshold():
    fixes = [GpsFix(0, 0, 0, accuracy=5.0), GpsFix(1, 0, 0, accuracy=50.0), GpsFix(2, 0, 0)]
    tl, removed = apply_filters(build_timeline("u", fixes=fixes), FilterConfig(max_accuracy_m=10))
    assert [f.timestamp for f in tl.fixes] == [0, 2]
    assert removed["accuracy"] == 1


def test_filters_all_off_is_identity():
    tl = build_timeline(
        "u",
        fixes=[GpsFix(0, 0, 0, provider="cell")],
        activities=[ActivitySample(0, "unknown")],
    )
    out, removed = apply_filters(tl, FilterConfig(False, None, False))
    assert out == tl and sum(removed.values()) == 0


def test_filter_config_rejects_nonpositive_accuracy():
    with pytest.raises(ValueError):
        FilterConfig(max_accuracy_m=0)


obs_st = st.lists(
    st.tuples(st.sampled_from(["a", "b", "c", "d"]), st.integers(-120, 0), st.one_of(st.none(), st.integers(2400, 5900))),
    unique_by=lambda o: o[0],
    min_size=1,
)
scans_st = st.lists(
    st.builds(lambda t, obs: WifiScan(t, tuple(ApObservation(*o) for o in obs)), st.integers(0, 10**6), obs_st),
    unique_by=lambda s: s.timestamp,
    max_size=8,
)
fix_st = st.builds(
    GpsFix,
    st.integers(0, 10**6),
    st.floats(-90, 90),
    st.floats(-180, 180),
    st.one_of(st.none(), st.floats(0, 50)),
    st.one_of(st.none(), st.floats(0, 500)),
    st.sampled_from(list(Provider)),
)


@given(scans_st)
def test_wifi_round_trip(scans):
    scans = sorted(scans, key=lambda s: s.timestamp)
    res = ingest.parse_wifi(src(ingest.dumps(ingest.write_wifi, scans)))
    assert res.records == scans and res.skipped == 0


@given(st.lists(fix_st, max_size=8))
def test_gps_round_trip(fixes):
    fixes = sorted(fixes, key=lambda f: f.timestamp)
    res = ingest.parse_gps(src(ingest.dumps(ingest.write_gps, fixes)))
    assert res.records == fixes


@given(st.lists(st.builds(ActivitySample, st.integers(0, 10**6), st.sampled_from(list(Activity))), max_size=8))
def test_activity_round_trip(samples):
    samples = sorted(samples, key=lambda a: a.timestamp)
    res = ingest.parse_activity(src(ingest.dumps(ingest.write_activity, samples)))
    assert res.records == samples


@given(st.lists(st.sampled_from(["1,a,-50", "2,b,x", "3,,-40", "4,c,-130", "x,d,-20", "5,e,-1.5"]), max_size=20))
def test_row_accounting_is_exact(rows):
    res = ingest.parse_wifi(src("timestamp,ap_id,rssi\n" + "\n".join(rows) + "\n"))
    assert res.rows_parsed + res.skipped == len(rows)
    assert res.skipped == sum(r != "1,a,-50" for r in rows)
