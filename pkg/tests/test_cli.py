import io
import json

import pandas as pd
import pytest

from src.core.states import CertStatus, ExitCode
from src.run_qes import catalog_lines, main, scan_point

SEXTIC = {"model": "sextic", "p1": "0", "p2": "1", "kappa0": "1", "m": 2, "eps": "0"}
LAME = {"model": "lame", "case": 1, "m": 0, "delta": "1", "ksq": "1/2", "space": "V1"}


def _run(tmp_path, command, config_path=None, *extra, name="out.json"):
    out = tmp_path / name
    argv = [command] + (["--config", config_path] if config_path else []) + ["--out", str(out), *extra]
    return main(argv), out


def test_verify_sextic(tmp_path, write_config):
    code, out = _run(tmp_path, "verify", write_config(SEXTIC))
    assert code == ExitCode.OK
    report = json.loads(out.read_text())
    assert report["status"] == "certified"
    assert report["dim"] == 4
    assert report["recheck"] is True
    assert report["charpoly"] == ["1", "0", "-640", "0", "81920"]
    assert report["model"]["model"] == "sextic"


def test_verify_counterexample_exit_code(tmp_path, write_config):
    code, out = _run(tmp_path, "verify", write_config({**SEXTIC, "kappa1": "1"}))
    assert code == ExitCode.COUNTEREXAMPLE
    report = json.loads(out.read_text())
    assert report["status"] == "counterexample"
    assert report["locator"].startswith("basis #")


def test_usage_errors(tmp_path, write_config):
    assert main(["verify", "--config", write_config("{not json")]) == ExitCode.USAGE
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == ExitCode.USAGE
    assert main(["verify"]) == ExitCode.USAGE
    assert main(["certify-everything"]) == ExitCode.USAGE
    assert main(["verify", "--config", write_config({**SEXTIC, "m": 1})]) == ExitCode.USAGE
    assert main(["crosscheck", "--config", write_config({"model": "goldstone", "coupling": 4,
                                                         "numeric": {"npoints": 10}})]) == ExitCode.USAGE


def test_yaml_config(tmp_path, write_config):
    path = write_config("model:\n  model: goldstone\n  coupling: 4\n", name="goldstone.yaml")
    code, out = _run(tmp_path, "spectrum", path)
    assert code == ExitCode.OK
    report = json.loads(out.read_text())
    assert [ev["re"] for ev in report["eigenvalues"]] == pytest.approx([1.0, 5.0])


def test_spectrum_lame(tmp_path, write_config):
    code, out = _run(tmp_path, "spectrum", write_config(LAME))
    assert code == ExitCode.OK
    report = json.loads(out.read_text())
    assert report["matrix"] == [["3/4", "1"], ["2", "3/4"]]
    assert report["field_plan"]["rational"] is True
    assert report["decoupled"] is False
    values = sorted(ev["re"] for ev in report["eigenvalues"])
    assert values == pytest.approx([0.75 - 2 ** 0.5, 0.75 + 2 ** 0.5])


def test_crosscheck_exit_codes(tmp_path, write_config):
    config = {"model": LAME, "numeric": {"npoints": 1024, "count": 10}}
    code, out = _run(tmp_path, "crosscheck", write_config(config))
    assert code == ExitCode.OK
    report = json.loads(out.read_text())
    assert report["match"]["all_confirmed"] is True
    strict = {"model": LAME, "numeric": {"npoints": 1024, "count": 10, "rel_tol": 1e-12}}
    code, _ = _run(tmp_path, "crosscheck", write_config(strict, name="strict.json"))
    assert code == ExitCode.UNCONFIRMED


def test_crosscheck_goldstone(tmp_path, write_config):
    config = {"model": {"model": "goldstone", "coupling": "4"}, "numeric": {"npoints": 1024, "count": 10}}
    code, out = _run(tmp_path, "crosscheck", write_config(config))
    assert code == ExitCode.OK
    report = json.loads(out.read_text())
    assert report["match"]["all_confirmed"] is True
    matched = sorted(row["numeric"] for row in report["match"]["rows"])
    assert matched == pytest.approx([1.0, 5.0], rel=1e-4)


def test_crosscheck_csv(tmp_path, write_config):
    config = {"model": LAME, "numeric": {"npoints": 1024, "count": 10}}
    code, out = _run(tmp_path, "crosscheck", write_config(config), "--format", "csv", name="out.csv")
    assert code == ExitCode.OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["model", "space", "algebraic", "numeric", "rel_err", "confirmed", "note"]
    assert len(frame) == 2
    assert frame["confirmed"].all()


def test_catalog_text(capsys):
    assert main(["catalog"]) == ExitCode.OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8
    v4 = next(line for line in lines if line.startswith("V4"))
    v8 = next(line for line in lines if line.startswith("V8"))
    assert "kappa^2 = R1/k^2" in v4
    assert "kappa^2 = k^2/R2" in v8
    assert catalog_lines() == lines


def test_catalog_with_m(tmp_path, write_config):
    code, out = _run(tmp_path, "catalog", write_config({"m": 0}), "--format", "json")
    assert code == ExitCode.OK
    rows = {row["name"]: row for row in json.loads(out.read_text())}
    assert rows["V1"]["dimension_at_m"] == 2
    assert rows["V8"]["dimension_at_m"] is None
    assert main(["catalog", "--config", write_config({"m": -1}, name="neg.json")]) == ExitCode.USAGE


def test_scan_delta_flags_decoupled_rows(tmp_path, write_config):
    config = {"model": {**LAME, "delta": "0"}, "scan": {"axis": "delta", "start": "0", "stop": "3", "steps": 13}}
    code, out = _run(tmp_path, "scan", write_config(config), name="scan.csv")
    assert code == ExitCode.OK
    frame = pd.read_csv(out, dtype={"delta": str})
    assert len(frame) == 13
    assert list(frame["index"]) == list(range(13))
    statuses = list(frame["status"])
    assert statuses[-1] == CertStatus.DECOUPLED.value
    assert statuses[:-1] == [CertStatus.CERTIFIED.value] * 12
    assert frame["delta"].iloc[1] == "1/4"


def test_scan_over_m(tmp_path, write_config):
    config = {"model": SEXTIC, "scan": {"axis": "m", "start": 2, "stop": 6, "steps": 5}}
    code, out = _run(tmp_path, "scan", write_config(config), name="scan.csv")
    assert code == ExitCode.OK
    frame = pd.read_csv(out)
    assert list(frame["dim"]) == [4, 6, 8, 10, 12]
    assert list(frame["m"]) == [2, 3, 4, 5, 6]


def test_scan_rejects_foreign_axis(write_config):
    config = {"model": SEXTIC, "scan": {"axis": "ksq", "start": "0", "stop": "1/2", "steps": 3}}
    assert main(["scan", "--config", write_config(config)]) == ExitCode.USAGE


def test_scan_point_records_failures():
    row = scan_point(SEXTIC, "m", 1, 0)
    assert row["status"] == CertStatus.FAILED.value
    assert "m >= 2" in row["message"]


def test_output_is_deterministic(tmp_path, write_config):
    path = write_config(SEXTIC)
    _, first = _run(tmp_path, "spectrum", path, name="first.json")
    _, second = _run(tmp_path, "spectrum", path, name="second.json")
    assert first.read_bytes() == second.read_bytes()


def test_stdout_when_no_out_path(write_config, capsys):
    assert main(["verify", "--config", write_config(SEXTIC)]) == ExitCode.OK
    report = json.load(io.StringIO(capsys.readouterr().out))
    assert report["dim"] == 4
