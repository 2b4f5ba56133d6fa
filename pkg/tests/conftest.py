import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from a3.ingestion import load_corpus
from a3.synth import SynthSpec, generate_corpus

FIXTURES = Path(__file__).resolve().parent / "fixtures"
STUB_PLUGIN = FIXTURES / "stub_plugin.py"


def write_corpus_files(directory, calendar, news=(), reports=(), price_targets=(), trades=()):
    """Write a corpus directory from plain dicts (tests hand-build these)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "calendar.txt").write_text(
        "".join(d + "\n" for d in calendar), encoding="utf-8"
    )
    for name, rows in (
        ("news", news),
        ("reports", reports),
        ("price_targets", price_targets),
        ("trades", trades),
    ):
        (directory / f"{name}.jsonl").write_text(
            "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows),
            encoding="utf-8",
        )
    return directory


WEEK1 = ["2020-01-02", "2020-01-03", "2020-01-06", "2020-01-07", "2020-01-08",
         "2020-01-09", "2020-01-10"]


def news_row(news_id, stock, date, headline="h", body="b"):
    return {"id": news_id, "stock": stock, "date": date, "headline": headline, "body": body}


@pytest.fixture()
def mini_corpus_dir(tmp_path):
    """One stock week: a report, a price-target move, and trades."""
    return write_corpus_files(
        tmp_path / "corpus",
        calendar=WEEK1,
        news=[
            news_row("n1", "2330", "2020-01-02", headline="guidance cut", body="body one"),
            news_row("n2", "2330", "2020-01-06", body="body two"),
            news_row("n3", "2330", "2020-01-08", body="body three"),
            news_row("m1", "AAA", "2020-01-06", body="other stock"),
        ],
        reports=[
            {"stock": "2330", "date": "2020-01-03", "analyst_id": "an1"},
            {"stock": "AAA", "date": "2020-01-08", "analyst_id": "an2"},
        ],
        price_targets=[
            {"stock": "2330", "date": "2020-01-02", "avg_price_target": "100.0000"},
            {"stock": "2330", "date": "2020-01-03", "avg_price_target": "102.5000"},
            {"stock": "2330", "date": "2020-01-06", "avg_price_target": "102.5000"},
            {"stock": "2330", "date": "2020-01-07", "avg_price_target": "102.5000"},
        ],
        trades=[
            {"stock": "2330", "date": "2020-01-03", "institution_id": "i1",
             "buy_amount": "10.0000", "sell_amount": "0.0000"},
            {"stock": "2330", "date": "2020-01-03", "institution_id": "i2",
             "buy_amount": "0.0000", "sell_amount": "3.0000"},
            {"stock": "2330", "date": "2020-01-09", "institution_id": "i1",
             "buy_amount": "5.0000", "sell_amount": "0.0000"},
            {"stock": "2330", "date": "2020-01-09", "institution_id": "i2",
             "buy_amount": "0.0000", "sell_amount": "5.0000"},
        ],
    )


@pytest.fixture()
def mini_corpus(mini_corpus_dir):
    corpus, report = load_corpus(mini_corpus_dir)
    assert corpus is not None, report.errors
    return corpus


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth") / "corpus"
    generate_corpus(SynthSpec(), out)
    return out


@pytest.fixture(scope="session")
def synth_corpus(synth_dir):
    corpus, report = load_corpus(synth_dir)
    assert corpus is not None, report.errors
    return corpus


@pytest.fixture(scope="session")
def synth_truth(synth_dir):
    rows = {}
    for line in (synth_dir / "ground_truth.jsonl").read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        rows[(rec["stock"], rec["date"])] = rec
    return rows
