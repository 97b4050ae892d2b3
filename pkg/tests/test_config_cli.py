import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polariton2d.cli import main
from polariton2d.config import RunConfig, dumps, loads
from polariton2d.errors import ConfigError
from polariton2d.io import read_binary, read_text, sha256
from polariton2d.params import ModelParams
from polariton2d.runner import validate

SMALL = """\
[model]
n_emitters = 1
[run]
tasks = eig, linear, twod, trace
output_dir = {out}
formats = text, binary
[grids]
omega_tau = 1.85 2.15 32
omega_t = 1.85 2.15 32
[twod]
waiting_times = 0, 0.5TR
[trace]
samples = 11
"""


def test_time_suffixes():
    cfg = loads("[twod]\nwaiting_times = 0, 5TR, 12.5fs\n")
    tr = cfg.model.rabi_period
    assert cfg.waiting_times == (0.0, 5 * tr, 12.5)


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as info:
        loads("[model]\nn_emitters = 2\n\nomega = 3\n")
    assert info.value.line == 4
    assert "omega" in str(info.value)


@pytest.mark.parametrize(
    "text",
    [
        "[nonsense]\nx = 1\n",
        "[model]\nn_emitters = two\n",
        "[model]\nrabi_splitting = -1\n",
        "[run]\ntasks = eig, dance\n",
        "[grids]\nomega_t = 2.1 1.9 10\n",
        "[twod]\nwaiting_times = -3\n",
        "[twod]\ncomponent = imaginary\n",
    ],
)
def test_rejected_configs(text):
    with pytest.raises(ConfigError):
        loads(text)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 6),
    st.floats(1.5, 2.5),
    st.floats(0.05, 0.5),
    st.floats(1.0, 500.0),
    st.lists(st.floats(0, 1000), min_size=1, max_size=4),
)
def test_dump_load_round_trip(n, w0, split, tau, times):
    m = ModelParams(n_emitters=n, omega_c=w0, omega_0=w0, rabi_splitting=split, kappa_lifetime=tau)
    cfg = RunConfig(model=m, tasks=("eig", "twod"), waiting_times=tuple(times), grids={"omega_t": (1.0, 3.0, 17)})
    assert loads(dumps(cfg)) == cfg


def test_infinite_lifetime_round_trip():
    cfg = RunConfig(model=ModelParams(kappa_lifetime=math.inf))
    assert loads(dumps(cfg)).model.kappa == 0.0


def test_validate_messages():
    cfg = loads("[model]\nn_emitters = 10\n[run]\ntasks = twod\n[grids]\nomega_t = 1.8 2.2 5\n")
    text = "\n".join(map(str, validate(cfg)))
    assert "43.88 meV" in text
    assert "dim^2 = 4624" in text
    assert "warning: grid omega_t step" in text


def test_cli_run_is_deterministic(tmp_path, capsys):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        cfg = tmp_path / f"c{k}.ini"
        cfg.write_text(SMALL.format(out=out))
        assert main(["run", str(cfg)]) == 0
        outs.append(out)
    m0 = json.loads((outs[0] / "manifest.json").read_text())
    m1 = json.loads((outs[1] / "manifest.json").read_text())
    assert m0["files"] == m1["files"]
    for name, digest in m0["files"].items():
        assert sha256(outs[0] / name) == digest
    assert "L-L" in m0["tasks"]["twod"]["retained_labels"]


def test_text_and_binary_agree(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL.format(out=tmp_path / "o"))
    assert main(["twod", str(cfg)]) == 0
    head, rows = read_text(tmp_path / "o" / "twod_absorptive_T00.txt")
    bhead, data = read_binary(tmp_path / "o" / "twod_absorptive_T00.bin")
    assert data.shape == (32 * 32, 4)
    assert bhead.startswith("POLARITON2D-BIN 1 rows=1024 cols=4")
    assert np.allclose(np.array(rows, dtype=float), data, rtol=1e-11)
    assert head["component"] == "absorptive"


def test_empty_task_list_writes_manifest_only(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[run]\ntasks =\noutput_dir = {tmp_path / 'o'}\n")
    assert main(["run", str(cfg)]) == 0
    assert [p.name for p in (tmp_path / "o").iterdir()] == ["manifest.json"]


def test_exit_code_for_config_error(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[model]\nbogus = 1\n")
    assert main(["run", str(cfg)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.ini")]) == 2


def test_exit_code_for_numerical_failure(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(
        f"[model]\nkappa_lifetime = inf\ngamma_lifetime = inf\n[run]\noutput_dir = {tmp_path / 'o'}\n"
        "[grids]\nexcitation = 1.9 2.1 3\nemission = 1.9 2.1 11\n"
    )
    assert main(["emission", str(cfg)]) == 3
    assert "emission" in capsys.readouterr().err


def test_thread_limit_env(tmp_path, monkeypatch):
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[run]\ntasks = eig\noutput_dir = {tmp_path / 'o'}\n")
    monkeypatch.setenv("POLARITON2D_THREADS", "1")
    assert main(["run", str(cfg)]) == 0
    monkeypatch.setenv("POLARITON2D_THREADS", "zero")
    assert main(["run", str(cfg)]) == 2


def test_template_parses(capsys):
    assert main(["template"]) == 0
    cfg = loads(capsys.readouterr().out)
    assert cfg.tasks == ("eig", "linear", "twod")


def test_fit_task_output(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[run]\ntasks = fit\noutput_dir = {tmp_path / 'o'}\n")
    assert main(["run", str(cfg)]) == 0
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert m["tasks"]["fit"]["fit"]["kappa_lifetime"] == pytest.approx(15.0, abs=1.0)
