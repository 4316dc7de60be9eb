"""End-to-end run on the bundled three-district city; checks the qualitative results hold."""
import json

import numpy as np
import pandas as pd
import pytest

from mdcsim.services.edgesim.raw_io import read_raw_results
from mdcsim.services.pipeline import layout
from mdcsim.services.pipeline import run_pipeline
from mdcsim.services.run_config import load_run_config
from mdcsim.test.conftest import DESK_CONFIG

pytestmark = [pytest.mark.slow, pytest.mark.integration]


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    config = load_run_config(DESK_CONFIG, out_dir=str(tmp_path_factory.mktemp("desk")))
    run_pipeline(config)
    paths = layout(config)
    summary = json.loads((paths.report / "summary.json").read_text(encoding="utf-8"))
    return config, paths, summary


def test_single_hospital_saturates_early(desk):
    config, paths, summary = desk
    rejections = pd.read_csv(paths.report / "H1" / "rejections.csv")
    values = rejections["mdc_0"].to_numpy()
    assert values[-1] > 0
    assert np.all(np.diff(values) >= 0)
    first = rejections.loc[values > 0, "t"].iloc[0]
    assert first < config.mobility.duration / 3
    for tag in ("C3", "H3", "H9"):
        assert summary["scenarios"][tag]["rejections"] == 0, tag


def test_clustered_and_snapped_placements_load_alike(desk):
    _, _, summary = desk
    c3 = summary["scenarios"]["C3"]["mean_utilization"]
    h3 = summary["scenarios"]["H3"]["mean_utilization"]
    assert summary["scenarios"]["H3"]["n_mdcs"] == 3
    assert abs(c3 - h3) <= 0.15 * max(c3, h3)


def test_three_mdcs_share_the_work(desk):
    _, paths, summary = desk
    for tag in ("C3", "H3"):
        shares = pd.read_csv(paths.report / tag / "shares.csv")["share_pct"]
        assert shares.sum() == pytest.approx(100.0)
        assert shares.between(100 / 3 - 10, 100 / 3 + 10).all(), tag
    assert summary["scenarios"]["H9"]["share_dispersion_pct"] > summary["scenarios"]["H3"]["share_dispersion_pct"]


def test_power_ratios(desk):
    _, _, summary = desk
    ratios = summary["ratios"]
    assert 2.0 <= ratios["H9_over_H3_power"] <= 3.0
    assert 0.33 <= ratios["H1_over_H3_power"] <= 0.55
    assert ratios["H9_over_H3_dynamic_power"] > 1.0
    for tag in ("C3", "H1", "H3", "H9"):
        share = summary["scenarios"][tag]["dynamic_share"]
        assert 0.0 < share < 0.5, tag


def test_raw_results_obey_the_power_law(desk):
    _, paths, _ = desk
    from mdcsim.services.edgesim.audit import audit_power_law
    from mdcsim.services.edgesim.audit import audit_traffic
    for tag in ("C3", "H1", "H3", "H9"):
        raw = read_raw_results(paths.raw(tag))
        assert audit_power_law(raw) == [], tag
        assert audit_traffic(raw) == [], tag


def test_rerun_is_byte_identical(desk, tmp_path):
    config, paths, _ = desk
    again = config.model_copy(update={"out_dir": str(tmp_path)})
    run_pipeline(again)
    for tag in ("C3", "H1", "H3", "H9"):
        for name in ("series.csv", "power_steps.csv", "totals.csv"):
            assert (paths.raw(tag) / name).read_bytes() == (layout(again).raw(tag) / name).read_bytes()
    assert (paths.report / "summary.json").read_bytes() == (layout(again).report / "summary.json").read_bytes()
