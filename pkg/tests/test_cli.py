import json
import math
import os

import numpy as np
import pytest

from sqnz.cli import main
from sqnz.config import format_float, load_config, resolve_threads

BASE_TOML = """\
[oscillator]
mass = 1.0
omega0 = 1.0
gamma_ratio = 0.004

[[band]]
xi_ratio = 1.0
delta_ratio = 0.015
weight = 1.0
r = 1.0
theta = 0.0

[grid]
t_min = 0.05
t_max = 50.0
points_per_decade = 8

[run]
method = "closed_form"
output = "csv"
seed = 7
"""

MC_TOML = """\
[oscillator]
gamma_ratio = 0.02

[[band]]
xi_ratio = 1.0
delta_ratio = 0.075
r = 1.0
theta = 0.8

[run]
method = "closed_form"
seed = 4242

[montecarlo]
duration = 60.0
dt = 0.2
n_modes = 64
n_samples = 400
n_output = 8
"""


@pytest.fixture
def base_cfg(tmp_path):
    p = tmp_path / "base.toml"
    p.write_text(BASE_TOML)
    return p


def read_table(path):
    comments, header, rows = [], None, []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            comments.append(line)
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return comments, header, rows


def test_dispersion_csv_shape(base_cfg, tmp_path):
    out = tmp_path / "d.csv"
    assert main(["dispersion", "--config", str(base_cfg), "--out", str(out)]) == 0
    comments, header, rows = read_table(out)
    assert header == ["t", "st", "ns", "vac", "total", "method"]
    assert all(row[5] == "closed_form" for row in rows)
    # 17 significant digits: text -> float -> text round trip is stable
    for cell in rows[3][:5]:
        assert format_float(float(cell)) == cell
    t, st, ns, vac, total = (float(x) for x in rows[3][:5])
    assert total == pytest.approx(st + ns + vac, rel=1e-15)


def test_dispersion_vacuum_band_zero_columns(base_cfg, tmp_path):
    text = BASE_TOML.replace("r = 1.0", "r = 0.0")
    cfg = tmp_path / "vac.toml"
    cfg.write_text(text)
    out = tmp_path / "v.csv"
    assert main(["dispersion", "--config", str(cfg), "--out", str(out)]) == 0
    _, _, rows = read_table(out)
    assert all(float(r[1]) == 0.0 and float(r[2]) == 0.0 for r in rows)
    assert all(float(r[3]) > 0.0 for r in rows)


def test_json_round_trip_reproduces_csv_bytes(base_cfg, tmp_path):
    a_csv, a_json, b_csv = (tmp_path / n for n in ("a.csv", "a.json", "b.csv"))
    assert main(["dispersion", "--config", str(base_cfg), "--out", str(a_csv)]) == 0
    assert main(["dispersion", "--config", str(base_cfg), "--out", str(a_json)]) == 0
    payload = json.loads(a_json.read_text())
    assert payload["columns"][0] == "t" and "config" in payload
    assert main(["dispersion", "--config", str(a_json), "--out", str(b_csv)]) == 0
    assert a_csv.read_bytes() == b_csv.read_bytes()


def test_invalid_config_exits_nonzero_and_leaves_nothing(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text(BASE_TOML.replace("delta_ratio = 0.015", "delta_ratio = -1.0"))
    out = tmp_path / "never.csv"
    code = main(["dispersion", "--config", str(bad), "--out", str(out)])
    assert code != 0
    assert not out.exists()
    assert not list(tmp_path.glob("never.csv.tmp-*"))


def test_invalid_config_message_names_key(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(BASE_TOML.replace('method = "closed_form"', 'method = "magic"'))
    code = main(["dispersion", "--config", str(bad), "--out", str(tmp_path / "x.csv")])
    assert code == 2
    err = capsys.readouterr().err
    assert "[run] method" in err


def test_rmap_reports_minimum_and_shrinking_negative_interval(tmp_path):
    out = tmp_path / "rmap.csv"
    assert main(["rmap", "--out", str(out), "--r-max", "0.5", "--n-r", "6", "--n-theta", "720"]) == 0
    comments, header, rows = read_table(out)
    assert header == ["r", "theta", "R"]
    assert any("minimum: R=-0.133974596" in c for c in comments)
    # R(0, theta) = 0 identically
    zero_rows = [r for r in rows if float(r[0]) == 0.0]
    assert zero_rows and all(float(r[2]) == 0.0 for r in zero_rows)
    widths = []
    for c in comments:
        if "neg_width=" in c:
            widths.append(float(c.split("neg_width=")[1]))
    # for growing r > 0 the negative-theta interval narrows monotonically
    positive_r = widths[1:]
    assert all(a >= b for a, b in zip(positive_r, positive_r[1:]))
    assert positive_r[0] > positive_r[-1]


def test_regimes_table(base_cfg, tmp_path):
    out = tmp_path / "regimes.csv"
    assert main(["regimes", "--config", str(base_cfg), "--out", str(out)]) == 0
    _, header, rows = read_table(out)
    assert header[:5] == ["band", "regime", "t_lo", "t_hi", "t_eval"]
    names = {r[1] for r in rows}
    assert "onres_late" in names


def test_energy_report(base_cfg, tmp_path):
    out = tmp_path / "energy.csv"
    assert main(["energy", "--config", str(base_cfg), "--out", str(out)]) == 0
    comments, header, rows = read_table(out)
    assert header == ["t", "rho"]
    stats = next(c for c in comments if "negative_fraction=" in c)
    frac = float(stats.split("negative_fraction=")[1])
    assert 0.0 < frac < 0.5
    rho = np.array([float(r[1]) for r in rows])
    assert rho.min() < 0.0 < rho.max()


def test_fdr_command_passes(base_cfg, capsys):
    assert main(["fdr", "--config", str(base_cfg)]) == 0
    out = capsys.readouterr().out
    assert "pass" in out and "FAIL" not in out


def test_simulate_with_validation(tmp_path):
    cfg = tmp_path / "mc.toml"
    cfg.write_text(MC_TOML)
    out = tmp_path / "mc.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--validate"]) == 0
    _, header, rows = read_table(out)
    assert header == ["t", "mean_v2", "stderr", "n_samples"]
    assert all(int(r[3]) == 400 for r in rows)
    assert all(float(r[1]) >= 0.0 and float(r[2]) > 0.0 for r in rows)


def test_simulate_requires_montecarlo_block(base_cfg, tmp_path):
    code = main(["simulate", "--config", str(base_cfg), "--out", str(tmp_path / "x.csv")])
    assert code == 2


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("SQNZ_THREADS", "5")
    assert resolve_threads(None, None) == 5
    assert resolve_threads(2, None) == 2
    monkeypatch.delenv("SQNZ_THREADS")
    assert resolve_threads(None, None) == 1


def test_config_loader_validates_bands(tmp_path):
    p = tmp_path / "nb.toml"
    p.write_text("[oscillator]\ngamma_ratio = 0.01\n")
    from sqnz.errors import ConfigError

    with pytest.raises(ConfigError, match=r"\[band\]"):
        load_config(p)


def test_quadrature_method_file_matches_closed_form(tmp_path):
    text = BASE_TOML.replace("t_max = 50.0", "t_max = 5.0").replace(
        'method = "closed_form"', 'method = "quadrature"'
    )
    cfg_q = tmp_path / "q.toml"
    cfg_q.write_text(text)
    cfg_c = tmp_path / "c.toml"
    cfg_c.write_text(text.replace('method = "quadrature"', 'method = "closed_form"'))
    out_q, out_c = tmp_path / "q.csv", tmp_path / "c.csv"
    assert main(["dispersion", "--config", str(cfg_q), "--out", str(out_q)]) == 0
    assert main(["dispersion", "--config", str(cfg_c), "--out", str(out_c)]) == 0
    _, _, rows_q = read_table(out_q)
    _, _, rows_c = read_table(out_c)
    for rq, rc in zip(rows_q, rows_c):
        for k in (1, 2):  # st, ns
            q, c = float(rq[k]), float(rc[k])
            assert abs(q - c) <= max(1e-5 * abs(c), 1e-10)


def test_simulate_is_deterministic(tmp_path):
    cfg = tmp_path / "mc.toml"
    cfg.write_text(MC_TOML)
    out1, out2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(out2), "--threads", "3"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_multi_band_config(tmp_path):
    text = BASE_TOML + "\n[[band]]\nxi_ratio = 3.0\ndelta_ratio = 0.1\nr = 0.5\ntheta = 1.0\n"
    p = tmp_path / "two.toml"
    p.write_text(text)
    cfg = load_config(p)
    assert len(cfg.bands) == 2
    out = p.parent / "two.csv"
    assert main(["dispersion", "--config", str(p), "--out", str(out)]) == 0


def test_asymptotic_method_marks_crossover_as_nan(tmp_path):
    text = BASE_TOML.replace('method = "closed_form"', 'method = "asymptotic"').replace(
        "t_max = 50.0", "t_max = 5000.0"
    )
    p = tmp_path / "asym.toml"
    p.write_text(text)
    out = tmp_path / "asym.csv"
    assert main(["dispersion", "--config", str(p), "--out", str(out)]) == 0
    _, _, rows = read_table(out)
    st = np.array([float(r[1]) for r in rows])
    vac = np.array([float(r[3]) for r in rows])
    assert np.any(np.isnan(st)) and np.any(np.isfinite(st))  # crossovers and windows
    assert np.all(np.isfinite(vac))
    late = [float(r[1]) for r in rows if float(r[0]) > 2600.0]
    assert late and all(np.isfinite(v) for v in late)  # saturation window is classified


def test_simulate_rejects_multiple_bands(tmp_path):
    text = MC_TOML + "\n[[band]]\nxi_ratio = 3.0\ndelta_ratio = 0.1\n"
    p = tmp_path / "twomc.toml"
    p.write_text(text)
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "x.csv")]) == 2
