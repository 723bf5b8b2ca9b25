import filecmp
from pathlib import Path

import pytest
import sympy as sp

from corrmax.cli import main
from corrmax.config import ConfigError, load_config, parse_seed
from corrmax.tables import read_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
GOLDEN = Path(__file__).parent / "golden"


def test_list_examples(capsys):
    assert main(["--list-examples"]) == 0
    out = capsys.readouterr().out
    for key in ("ex-3-4", "ex-3-6", "ex-3-10", "ex-3-14", "ex-4-2", "custom"):
        assert key in out
    assert "16/17" in out


def test_piling_law_run(tmp_path, capsys):
    assert main([str(CONFIGS / "piling-law_ex-3-4.ini"), "--out", str(tmp_path),
                 "--budget", "samples=2000"]) == 0
    rows = read_csv(tmp_path / "piling-law_ex-3-4.csv")
    branches = {(r["anchor"], r["branch"]): r["probability"] for r in rows}
    assert len(branches) == 3 and set(branches.values()) == {"1/3"}
    summary = read_csv(tmp_path / "summary.csv")
    assert all(r["pass"] == "pass" for r in summary)
    assert "PASS" in capsys.readouterr().out


@pytest.mark.parametrize("key", ["ex-3-4", "ex-3-6", "ex-3-10", "ex-3-14", "ex-4-2"])
def test_config_round_trips_to_golden(key, tmp_path):
    assert main([str(CONFIGS / f"piling-law_{key}.ini"), "--out", str(tmp_path),
                 "--budget", "samples=1000"]) == 0
    produced = tmp_path / f"piling-law_{key}.csv"
    assert produced.read_bytes() == (GOLDEN / f"piling-law_{key}.csv").read_bytes()


def test_extremal_index_run(tmp_path):
    code = main([str(CONFIGS / "extremal-index_ex-3-10.ini"), "--out", str(tmp_path),
                 "--budget", "trials=2e6"])
    rows = {r["quantity"]: r["value"] for r in read_csv(tmp_path / "extremal-index_ex-3-10.csv")}
    assert rows["closed form"] == "16/17"
    summary = {r["quantity"]: r for r in read_csv(tmp_path / "summary.csv")}
    assert summary["closed form vs quoted"]["pass"] == "pass"
    assert code in (0, 1)


def test_same_seed_gives_identical_files(tmp_path):
    cfg = str(CONFIGS / "empirical-piling_ex-3-4.ini")
    for name in ("a", "b"):
        main([cfg, "--out", str(tmp_path / name), "--budget", "n=10000",
              "--budget", "clusters=2000"])
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", files, shallow=False)
    assert not mismatch and not errors


def test_seed_override_changes_the_draws(tmp_path):
    cfg = str(CONFIGS / "empirical-piling_ex-3-4.ini")
    for name, seed in (("a", "1"), ("b", "2")):
        main([cfg, "--out", str(tmp_path / name), "--seed", seed, "--budget", "n=10000",
              "--budget", "clusters=2000"])
    assert (tmp_path / "a" / "summary.csv").read_bytes() != \
        (tmp_path / "b" / "summary.csv").read_bytes()


def test_mixed_alpha_is_rejected(tmp_path, capsys):
    assert main([str(CONFIGS / "custom_mixed_alpha.ini"), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "alpha" in err and "degenerate" in err


def test_interleaving_violation_is_reported(tmp_path, capsys):
    assert main([str(CONFIGS / "custom_interleaving.ini"), "--out", str(tmp_path)]) == 2
    assert "inapplicable" in capsys.readouterr().err


def test_bad_configs(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nkind = nonsense\nexample = ex-3-4\nseed = 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("[experiment]\nkind = tail\nexample = ex-9-9\nseed = 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    assert main([str(bad), "--out", str(tmp_path)]) == 2


def test_budget_overrides(tmp_path):
    cfg = load_config(CONFIGS / "extremal-index_ex-3-4.ini", budget_overrides=["trials=1e6"])
    assert cfg.budget["trials"] == 10 ** 6 and cfg.budget["n"] == 10 ** 4
    with pytest.raises(ConfigError):
        load_config(CONFIGS / "extremal-index_ex-3-4.ini", budget_overrides=["trials"])


def test_seed_syntax():
    assert parse_seed("sqrt2/16").value() == sp.sqrt(2) / 16
    assert parse_seed("3*sqrt5/7").value() == 3 * sp.sqrt(5) / 7
    assert parse_seed("2/3").value() == sp.Rational(2, 3)
    with pytest.raises(ConfigError):
        parse_seed("pi/4")
