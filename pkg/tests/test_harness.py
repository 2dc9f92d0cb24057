import csv
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from irsched import GaParams, ScenarioConfig
from irsched.cli import main, parse_sweep
from irsched.harness import MetricsReport, SchedulerMetrics, emit_csv, emit_plots, run_experiment

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def small_cfg():
    return ScenarioConfig.desk(K=12, F=3, Z=2, n_drops=3, irs_rows=4, irs_cols=4, b_codebook=4,
                               ga=GaParams(population=8, generations=5))


@pytest.fixture(scope="module")
def reports(small_cfg):
    return run_experiment(small_cfg, ["gmax", "da"], {"Z": [1, 2]})


def test_report_structure(reports, small_cfg):
    assert [r.params for r in reports] == [{"Z": 1}, {"Z": 2}]
    for rep in reports:
        for m in rep.schedulers.values():
            assert len(m.sum_rates) == small_cfg.n_drops
            assert len(m.ecdf_samples) == small_cfg.K * small_cfg.n_drops
            assert m.mean == pytest.approx(np.mean(m.sum_rates))
            assert not m.violations
            assert all(b <= 4 * rep.cfg.Z for b in m.reconfig_bits)


def test_run_reproducible(small_cfg, reports):
    again = run_experiment(small_cfg, ["gmax", "da"], {"Z": [1, 2]})
    for a, b in zip(reports, again):
        for name in a.schedulers:
            assert a.schedulers[name].sum_rates == b.schedulers[name].sum_rates


def test_invalid_sweep_point_skipped(small_cfg, caplog):
    reps = run_experiment(small_cfg.replace(n_drops=1), ["gmax"], {"Z": [2, 99]})
    assert [r.params for r in reps] == [{"Z": 2}]
    assert "skipping" in caplog.text


def test_projected_mode_runs(small_cfg):
    reps = run_experiment(small_cfg.replace(n_drops=2), ["gmax", "uoscbc"], mode="projected")
    assert all(not m.violations for m in reps[0].schedulers.values())


def test_all_schedulers_run(small_cfg):
    cfg = ScenarioConfig.desk(K=4, F=2, Z=2, n_drops=2, irs_rows=1, irs_cols=8, b_codebook=2,
                              ga=GaParams(population=6, generations=5))
    reps = run_experiment(cfg, ["gmax", "da", "uoscbc", "ga", "exhaustive"])
    m = reps[0].schedulers
    for d in range(2):
        assert m["gmax"].sum_rates[d] <= m["exhaustive"].sum_rates[d] + 1e-12
        assert m["ga"].sum_rates[d] >= m["gmax"].sum_rates[d]


def test_csv_empty_report(tmp_path):
    s, d = emit_csv([], tmp_path / "s.csv")
    assert s.read_text().count("\n") == 1 and d.read_text().count("\n") == 1


def test_csv_rows_and_reaggregation(reports, tmp_path):
    s, d = emit_csv(reports, tmp_path / "s.csv")
    summary = list(csv.DictReader(open(s)))
    assert len(summary) == 4
    drops = list(csv.DictReader(open(d)))
    for row in summary:
        vals = [float(r["sum_rate"]) for r in drops if r["point"] == row["point"] and r["scheduler"] == row["scheduler"]]
        assert float(row["mean_sum_rate"]) == pytest.approx(np.mean(vals), rel=1e-15)


def test_csv_unwritable(reports, tmp_path):
    with pytest.raises(OSError, match="cannot write"):
        emit_csv(reports, tmp_path / "missing" / "s.csv")


def _series(svg_path, gid):
    root = ET.parse(svg_path).getroot()
    for g in root.iter(SVG + "g"):
        if g.get("id") == gid:
            d = next(g.iter(SVG + "path")).get("d")
            nums = [float(v) for v in re.findall(r"-?\d+(?:\.\d+)?", d)]
            return list(zip(nums[0::2], nums[1::2]))
    raise KeyError(gid)


def test_plots_single_point_ecdf_only(reports, tmp_path, caplog):
    import logging
    caplog.set_level(logging.INFO)
    files = emit_plots(reports[:1], tmp_path)
    assert [f.name for f in files] == ["ecdf_0.svg"]
    assert "skipping the sum-rate curve" in caplog.text


def _fake(values):
    reps = []
    for z, (g, d) in enumerate(values, start=1):
        ms = {}
        for name, v in (("gmax", g), ("da", d)):
            ms[name] = SchedulerMetrics(sum_rates=[v], ue_rates=[np.array([v / 2, v / 2])], reconfig_bits=[1])
        reps.append(MetricsReport({"Z": z}, ScenarioConfig.desk(), ms))
    return reps


def test_plots_two_series_monotone(tmp_path):
    files = emit_plots(_fake([(1.0, 0.5), (2.0, 0.7), (3.5, 0.8)]), tmp_path)
    curve = tmp_path / "sum_rate.svg"
    assert curve in files
    for gid in ("curve_gmax", "curve_da"):
        pts = _series(curve, gid)
        assert len(pts) == 3
        xs, ys = zip(*pts)
        assert list(xs) == sorted(xs)
        # SVG y grows downward, so increasing data means decreasing y
        assert list(ys) == sorted(ys, reverse=True)


def test_cli_run(tmp_path):
    out = tmp_path / "run"
    code = main(["run", "--out", str(out), "--sweep", "Z=1,2", "--schedulers", "gmax,da", "--seed", "3",
                 "--config", str(_write_cfg(tmp_path))])
    assert code == 0
    assert (out / "summary.csv").exists() and (out / "summary_drops.csv").exists()
    assert (out / "sum_rate.svg").exists() and (out / "timing.json").exists()


def test_cli_codebook_reuse(tmp_path):
    cfgp = _write_cfg(tmp_path)
    assert main(["codebook", "--config", str(cfgp), "--out", str(tmp_path / "cb.json")]) == 0
    assert main(["run", "--config", str(cfgp), "--codebook", str(tmp_path / "cb.json"), "--out",
                 str(tmp_path / "o"), "--schedulers", "gmax", "--no-plots"]) == 0


def test_cli_unknown_scheduler(tmp_path):
    assert main(["run", "--out", str(tmp_path), "--schedulers", "bogus"]) == 2


def test_parse_sweep():
    assert parse_sweep(["Z=1,2", "irs_shape=4x8,8x8", "tx_power_dbm=30.5"]) == {
        "Z": [1, 2], "irs_shape": ["4x8", "8x8"], "tx_power_dbm": [30.5]}


def _write_cfg(tmp_path):
    p = tmp_path / "cfg.json"
    ScenarioConfig.desk(K=6, F=3, Z=1, n_drops=2, irs_rows=2, irs_cols=4, b_codebook=3).to_json(p)
    return p


def test_cli_nonzero_on_violation(tmp_path, monkeypatch):
    from irsched import sched

    monkeypatch.setattr(sched, "gmax", lambda table, cfg, seeds=None: sched.AssignmentGrid.empty(cfg.K, cfg.Z))
    code = main(["run", "--config", str(_write_cfg(tmp_path)), "--out", str(tmp_path / "o"),
                 "--schedulers", "gmax", "--no-plots"])
    assert code == 1
