import json
import logging
import subprocess
import sys

import pytest

from congruent_eta.cache import ResultCache, cache_key
from congruent_eta.cli import main
from congruent_eta.curve import EtaResult, EtaStatus
from congruent_eta.descent import quadruples_from_csv
from congruent_eta.reports import parse_csv, parse_jsonl, strip_timestamp
from congruent_eta.sieve import DensityReport


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_theorem_check(capsys):
    code, out, _ = _run(capsys, "theorem-check", "--theta", "0.30996", "--alpha", "0.72")
    assert code == 0
    obj = json.loads(out)
    assert obj["exponent"] == 0.845 and obj["exponent_exact"] == "169/200"
    assert obj["exponent_is_0_845"] and obj["constraint_below_7_8"] and obj["proportion_sum_above_1"]
    assert obj["metadata"]["height_convention"] == "half-x-height"


def test_tset_count_only(capsys):
    assert _run(capsys, "tset", "--theta", "0.3", "--limit", "100", "--count-only")[:2] == (0, "7\n")


def test_tset_rows(capsys):
    code, out, _ = _run(capsys, "tset", "--theta", "0.3", "--limit", "100")
    meta, rows = parse_csv(out)
    assert code == 0 and meta["kind"] == "tset"
    assert [int(r["n"]) for r in rows] == [21, 29, 37, 53, 61, 69, 93]


def test_eta_found(capsys, tmp_path):
    code, out, _ = _run(capsys, "eta", "--d", "5", "--bound", "1000", "--cache-dir", str(tmp_path))
    obj = json.loads(out)
    assert code == 0 and obj["status"] == "FOUND" and obj["convention"] == "half-x-height"
    assert EtaResult.from_json(obj).witness is not None


@pytest.mark.parametrize(
    "argv",
    [
        ("tset", "--theta", "0.6", "--limit", "100"),
        ("eta", "--d", "4", "--bound", "100"),
        ("eta", "--d", "5", "--bound", "1"),
        ("lemma-e", "--alpha", "0.8", "--theta", "0.3"),
        ("tset", "--theta", "0.3", "--limit", "100", "--workers", "0"),
        ("frobnicate",),
        ("tset", "--theta", "abc", "--limit", "100"),
    ],
)
def test_validation_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(list(argv)))
    assert exc.value.code == 1


def test_budget_and_depth_exit_2(capsys, tmp_path):
    assert _run(capsys, "tset", "--theta", "0.3", "--limit", "1e11", "--count-only")[0] == 2
    argv = ("eta", "--d", "5", "--bound", "1000", "--tol", "1e-20", "--max-depth", "4", "--cache-dir", str(tmp_path))
    assert _run(capsys, *argv)[0] == 2


def test_unwritable_output(capsys, tmp_path):
    target = tmp_path / "missing" / "out.csv"
    assert _run(capsys, "tset", "--theta", "0.3", "--limit", "100", "--output", str(target))[0] == 1


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "congruent_eta", "tset", "--theta", "0.3", "--limit", "10", "--count-only"],
        capture_output=True, text=True,
    )
    assert res.returncode == 0 and res.stdout == "1\n"
    bad = subprocess.run([sys.executable, "-m", "congruent_eta", "nope"], capture_output=True, text=True)
    assert bad.returncode == 1


def test_report_writes_output_and_figure(tmp_path, capsys):
    out = tmp_path / "lemma_t.csv"
    code, _, _ = _run(capsys, "lemma-t", "--theta", "0.3", "--grid", "1e3,1e4", "--output", str(out))
    assert code == 0
    rep = DensityReport.from_csv(out.read_text())
    assert [r.X for r in rep.rows] == [1000, 10000]
    assert "generated_at" in rep.metadata
    png = tmp_path / "lemma_t.png"
    assert png.exists() and png.read_bytes()[:4] == b"\x89PNG"
    assert not list(tmp_path.glob(".tmp-*"))


def test_outputs_identical_modulo_timestamp(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path, w in ((a, "1"), (b, "2")):
        assert _run(capsys, "lemma-t", "--grid", "1e4,1e5", "--output", str(path), "--workers", w, "--no-figure")[0] == 0
    assert a.read_text() != "" and strip_timestamp(a.read_text()) == strip_timestamp(b.read_text())
    _, x, _ = _run(capsys, "descent", "--bound", "500", "--d-max", "30", "--no-timestamp")
    _, y, _ = _run(capsys, "descent", "--bound", "500", "--d-max", "30", "--no-timestamp", "--workers", "3")
    assert x == y and quadruples_from_csv(x)


def test_json_and_csv_formats(capsys):
    _, out, _ = _run(capsys, "lemma-t", "--grid", "1e3", "--format", "json", "--no-timestamp")
    meta, recs = parse_jsonl(out)
    assert meta["kind"] == "lemma-t" and int(recs[0]["X"]) == 1000
    assert DensityReport.from_jsonl(out).rows[0].observed == recs[0]["observed"]
    _, out, _ = _run(capsys, "proportion", "--limit", "100", "--format", "csv")
    meta, recs = parse_csv(out)
    assert recs[0]["proportion"] == "1"


@pytest.mark.parametrize(
    "argv",
    [
        ("sieve", "--lo", "1", "--hi", "30"),
        ("sieve", "--kind", "primes", "--lo", "10", "--hi", "20"),
        ("sieve", "--kind", "squarefree", "--hi", "100"),
        ("sieve", "--kind", "mertens", "--hi", "1e4"),
        ("lemma-e", "--alpha", "0.3", "--theta", "0.3", "--grid", "100,300"),
        ("count-n", "--alpha", "0.3", "--theta", "0.2", "--limit", "300"),
        ("descent", "--bound", "100", "--d", "5"),
        ("eta-table", "--d-max", "20", "--bound", "500"),
        ("tunnell", "--d", "5"),
        ("tunnell", "--limit", "50"),
        ("proportion", "--limit", "1e4"),
    ],
)
def test_every_subcommand_runs(argv, capsys, tmp_path):
    code, out, err = _run(capsys, *argv, "--cache-dir", str(tmp_path))
    assert code == 0, err
    assert out


def test_sieve_values(capsys):
    _, out, _ = _run(capsys, "sieve", "--lo", "28", "--hi", "30")
    assert [(int(r["n"]), int(r["mu"])) for r in parse_csv(out)[1]] == [(28, 0), (29, -1), (30, -1)]
    _, out, _ = _run(capsys, "sieve", "--kind", "squarefree", "--hi", "100")
    assert json.loads(out)["count"] == 11


# -- cache -----------------------------------------------------------------


def test_cache_hit_identical(tmp_path, capsys):
    argv = ("eta", "--d", "6", "--bound", "1000", "--cache-dir", str(tmp_path), "--no-timestamp")
    _, first, _ = _run(capsys, *argv)
    _, second, _ = _run(capsys, *argv)
    assert first == second
    cache = ResultCache(tmp_path)
    cache.eta(6, 1000, 1e-10)
    assert (cache.hits, cache.misses) == (1, 0)


def test_cache_tampered_witness_recomputed(tmp_path, caplog):
    cache = ResultCache(tmp_path)
    good = cache.eta(5, 1000, 1e-10)
    (entry,) = (tmp_path / "eta").glob("*.json")
    obj = json.loads(entry.read_text())
    obj["witness_y"] = "7/25"
    entry.write_text(json.dumps(obj))
    fresh = ResultCache(tmp_path)
    with caplog.at_level(logging.WARNING):
        again = fresh.eta(5, 1000, 1e-10)
    assert again == good and fresh.misses == 1
    assert "discarding" in caplog.text
    entry.write_text("{not json")
    assert ResultCache(tmp_path).eta(5, 1000, 1e-10) == good


def test_cache_keys_distinguish_parameters():
    k = cache_key("eta", d=5, B=1000, tol=repr(1e-10), max_depth=64)
    assert k != cache_key("eta", d=5, B=1000, tol=repr(1e-8), max_depth=64)
    assert k != cache_key("eta", d=5, B=1001, tol=repr(1e-10), max_depth=64)
    assert k == cache_key("eta", d=5, B=1000, tol=repr(1e-10), max_depth=64)


def test_cache_distinct_tolerances_stored_separately(tmp_path):
    cache = ResultCache(tmp_path)
    cache.eta(5, 500, 1e-10)
    cache.eta(5, 500, 1e-8)
    assert len(list((tmp_path / "eta").glob("*.json"))) == 2 and cache.misses == 2


def test_cache_mobius_segment_checksum(tmp_path, caplog):
    cache = ResultCache(tmp_path)
    seg = cache.mobius_segment(1, 1000)
    (entry,) = (tmp_path / "mobius").glob("*.json")
    obj = json.loads(entry.read_text())
    obj["values"][11] = 1  # mu(12) is 0
    entry.write_text(json.dumps(obj))
    with caplog.at_level(logging.WARNING):
        again = ResultCache(tmp_path).mobius_segment(1, 1000)
    assert again.checksum() == seg.checksum() and again[12] == 0
    assert "discarding" in caplog.text


def test_cache_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CONGRUENT_ETA_CACHE", str(tmp_path / "envcache"))
    res = ResultCache().eta(1, 100, 1e-10)
    assert res.status is EtaStatus.NOT_FOUND_BELOW_BOUND
    assert list((tmp_path / "envcache" / "eta").glob("*.json"))
