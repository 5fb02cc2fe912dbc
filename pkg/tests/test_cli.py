from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from artsearch.cli import main
from artsearch.plugins import encode_text_image


@pytest.fixture
def fixture_dir(tmp_path):
    img_dir = tmp_path / "images"
    img_dir.mkdir()
    lines = []
    for doc_id, text in [("cli-1", "saint sebastian fixture-term"),
                         ("cli-2", "windmill landscape"),
                         ("cli-3", "harbor ships")]:
        (img_dir / f"{doc_id}.png").write_bytes(encode_text_image(text))
        lines.append(json.dumps({
            "id": doc_id, "image": f"images/{doc_id}.png",
            "metadata": {"title": [text], "artist": ["tester"]}}))
    (tmp_path / "manifest.jsonl").write_text("\n".join(lines))
    (tmp_path / "facets.json").write_text(json.dumps(
        {"facets": [{"field": "artist"}]}))
    return tmp_path


def test_index_then_search_rank_one(fixture_dir):
    runner = CliRunner()
    data_dir = str(fixture_dir / "data")
    result = runner.invoke(main, [
        "index", "--manifest", str(fixture_dir / "manifest.jsonl"),
        "--data-dir", data_dir, "--facets-config", str(fixture_dir / "facets.json")])
    assert result.exit_code == 0, result.output
    assert "completed" in result.output

    result = runner.invoke(main, [
        "search", "--text", "fixture-term sebastian", "--data-dir", data_dir])
    assert result.exit_code == 0, result.output
    first_row = [line for line in result.output.splitlines() if line.strip().startswith("1")][0]
    assert "cli-1" in first_row


def test_search_without_terms_exits_one(fixture_dir):
    runner = CliRunner()
    result = runner.invoke(main, ["search", "--data-dir", str(fixture_dir / "data")])
    assert result.exit_code == 1
    assert "no query terms" in result.output or "no query terms" in (result.stderr or "")


def test_index_missing_manifest_exits_two(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, [
        "index", "--manifest", str(tmp_path / "nope.jsonl"),
        "--data-dir", str(tmp_path / "d")])
    assert result.exit_code == 2


def test_search_filters_and_weights(fixture_dir):
    runner = CliRunner()
    data_dir = str(fixture_dir / "data2")
    runner.invoke(main, [
        "index", "--manifest", str(fixture_dir / "manifest.jsonl"),
        "--data-dir", data_dir, "--facets-config", str(fixture_dir / "facets.json")])
    result = runner.invoke(main, [
        "search", "--text", "harbor", "--data-dir", data_dir,
        "--weights", "hashproj=2.0", "--filter", "artist=tester"])
    assert result.exit_code == 0, result.output
    assert "cli-3" in result.output

    result = runner.invoke(main, [
        "search", "--text", "harbor", "--data-dir", data_dir,
        "--weights", "hashproj=not-a-number"])
    assert result.exit_code == 1


def test_bench_reports_recall(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["bench", "--n", "400", "--dim", "16",
                                  "--queries", "10", "--ef", "64"])
    assert result.exit_code == 0, result.output
    assert "recall@10=" in result.output
    recall = float(result.output.split("recall@10=")[1].split()[0])
    assert recall >= 0.95
