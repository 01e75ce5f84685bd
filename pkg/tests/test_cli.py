import json
from pathlib import Path

import pandas as pd

from bslab import __version__, cli
from bslab.cli import build_parser, main


def _run(tmp_path: Path, *args: str, out: str = "out") -> int:
    out_dir = tmp_path / out
    out_dir.mkdir(exist_ok=True)
    return main(
        [
            "--log-dir",
            str(tmp_path / "logs"),
            "--no-log-file",
            "--set",
            f"output.directory={out_dir}",
            *args,
        ]
    )


def _audit_entries(tmp_path: Path) -> list[dict]:
    files = sorted((tmp_path / "logs" / "audit").glob("audit_*.jsonl"))
    assert files, "expected an audit ledger"
    return [json.loads(line) for line in files[0].read_text(encoding="utf-8").splitlines() if line]


def test_scan_of_zero_potential_writes_unit_determinant(tmp_path: Path):
    code = _run(tmp_path, "--set", "grid.k_list=1i, 2+1i, -0.5+3i", "scan")

    assert code == 0
    path = tmp_path / "out" / "scan.csv"
    assert path.read_text(encoding="utf-8").startswith("# params_hash=")
    frame = pd.read_csv(path, comment="#")
    assert frame["psi_re"].tolist() == [1.0, 1.0, 1.0]
    assert frame["k_im"].tolist() == [1.0, 1.0, 3.0]
    assert [entry["action"] for entry in _audit_entries(tmp_path)] == ["scan"]


def test_scan_output_is_reproducible(tmp_path: Path):
    args = (
        "--set", "potential.g_re=0.5",
        "--set", "numerics.quad_n=32",
        "--set", "grid.k_re=-1, 1, 3",
        "--set", "grid.k_im=0.5, 1.5, 2",
        "scan",
    )

    assert _run(tmp_path, *args, out="first") == 0
    assert _run(tmp_path, "--set", "numerics.threads=1", *args, out="second") == 0

    first = (tmp_path / "first" / "scan.csv").read_bytes()
    second = (tmp_path / "second" / "scan.csv").read_bytes()
    assert first == second


def test_eigs_of_zero_potential_finds_nothing(tmp_path: Path):
    assert _run(tmp_path, "eigs") == 0

    payload = json.loads((tmp_path / "out" / "zeros.json").read_text(encoding="utf-8"))
    assert payload["zeros"] == []
    assert payload["unresolved"] == []
    assert payload["coefficient_bound_ratio"] == 0.0


def test_verify_tr12_of_zero_potential_passes(tmp_path: Path):
    assert _run(tmp_path, "--set", "task.identities=tr12, trj:1", "verify") == 0

    reports = json.loads((tmp_path / "out" / "report.json").read_text(encoding="utf-8"))
    assert [r["identity"] for r in reports] == ["tr12", "trj:1"]
    assert all(r["verdict"] == "pass" for r in reports)
    assert reports[0]["params"]["params_hash"]
    ledger = _audit_entries(tmp_path)
    assert [(e["action"], e["level_name"]) for e in ledger] == [("verify", "SUCCESS")] * 2


def test_unsupported_identity_exits_with_config_code(tmp_path: Path):
    assert _run(tmp_path, "--set", "task.identities=trj:3", "verify") == 2

    payload = json.loads((tmp_path / "out" / "report.json").read_text(encoding="utf-8"))
    assert payload["error"]["type"] == "UnsupportedError"


def test_bad_configuration_exits_with_code_two(tmp_path: Path, capsys):
    assert _run(tmp_path, "--set", "numerics.quad_n=many", "scan") == 2
    assert main(["--config", str(tmp_path / "missing.ini"), "info"]) == 2

    assert "configuration error" in capsys.readouterr().err


def test_info_prints_norms(tmp_path: Path, capsys):
    config = tmp_path / "run.ini"
    config.write_text("[potential]\nprofile = gaussian\ng_re = 2.0\n", encoding="utf-8")

    assert main(["--config", str(config), "--log-dir", str(tmp_path / "logs"), "--no-log-file", "info"]) == 0

    info = json.loads(capsys.readouterr().out)
    assert info["version"] == __version__
    assert info["norm_1"] > 0
    assert info["Q2"] is not None


def test_parser_lists_every_subcommand():
    help_text = build_parser().format_help()

    for name in ("scan", "eigs", "verify", "factorize", "info"):
        assert name in help_text


def test_unexpected_exception_exits_with_numeric_code(tmp_path: Path, monkeypatch):
    def broken(config):
        raise ZeroDivisionError("division by zero")

    monkeypatch.setitem(cli.COMMANDS, "info", broken)

    assert _run(tmp_path, "info") == 3

    ledger = _audit_entries(tmp_path)
    assert [(e["action"], e["level_name"]) for e in ledger] == [("error", "ERROR")]
    assert ledger[0]["data"]["error"] == "ZeroDivisionError"
