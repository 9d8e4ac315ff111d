import json

from click.testing import CliRunner

from conftest import GAZETTEER, KEYWORDS_EN, KEYWORDS_ES, QUERIES, build_fixture_corpus
from policygraph.cli import main


def _setup(tmp_path):
    (tmp_path / "keywords_en.txt").write_text(KEYWORDS_EN, encoding="utf-8")
    (tmp_path / "keywords_es.txt").write_text(KEYWORDS_ES, encoding="utf-8")
    (tmp_path / "queries.txt").write_text(QUERIES, encoding="utf-8")
    (tmp_path / "gazetteer.tsv").write_text(GAZETTEER, encoding="utf-8")
    docs = build_fixture_corpus(tmp_path)
    return [
        "--store", str(tmp_path / "store"),
        "--keywords", str(tmp_path / "keywords_en.txt"),
        "--keywords", str(tmp_path / "keywords_es.txt"),
        "--queries", str(tmp_path / "queries.txt"),
        "--gazetteer", str(tmp_path / "gazetteer.tsv"),
    ], docs


def test_cli_register_run_and_query(tmp_path):
    runner = CliRunner()
    base, docs = _setup(tmp_path)

    result = runner.invoke(main, base + [
        "ingest", "register", "--source-id", "fix", "--country", "US",
        "--level", "state", "--region", "WI", "--locator", str(docs),
        "--interval", "60",
    ])
    assert result.exit_code == 0, result.output

    result = runner.invoke(main, base + ["pipeline", "run"])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert [s["stage"] for s in report["stages"]][-1] == "link"

    result = runner.invoke(main, base + ["kg", "query", "-p", "targets"])
    assert result.exit_code == 0, result.output
    assert "private forest land-owners" in result.output

    result = runner.invoke(main, base + ["search", "pagos directos", "--top-k", "2"])
    assert result.exit_code == 0, result.output
    assert "score" in result.output


def test_cli_review_cycle(tmp_path):
    runner = CliRunner()
    base, docs = _setup(tmp_path)
    runner.invoke(main, base + [
        "ingest", "register", "--source-id", "fix", "--country", "US",
        "--level", "state", "--region", "WI", "--locator", str(docs),
        "--interval", "60",
    ])
    runner.invoke(main, base + ["pipeline", "run"])

    result = runner.invoke(main, base + ["review", "next", "--rater", "alice"])
    assert result.exit_code == 0, result.output
    item = json.loads(result.output)
    assert item and item.get("item_id")

    result = runner.invoke(main, base + [
        "review", "decide", item["item_id"], "--decision", "confirm",
        "--rater", "alice"])
    assert result.exit_code == 0, result.output

    result = runner.invoke(main, base + ["review", "progress"])
    assert result.exit_code == 0, result.output
    assert "confirmed" in result.output


def test_cli_error_is_clean(tmp_path):
    runner = CliRunner()
    base, _ = _setup(tmp_path)
    result = runner.invoke(main, base + ["summarize", "run", "--doc", "no-such-doc"])
    assert result.exit_code != 0
    assert "not_found" in result.output
    assert "Traceback" not in result.output
