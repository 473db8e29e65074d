from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicefix.corpus import (
    BugInstance,
    ingest,
    split_by_repo,
    split_report,
    write_corpus,
)

from tests.oracles import oracle_greedy_split

FIXTURES = Path(__file__).parent / "fixtures"


def _record(
    id="bug1",
    repo="r1",
    method="void f ( ) {\nint a = 1 ;\nreturn ;\n}",
    buggy_line=1,
    fixed="int a = 2 ;",
) -> dict:
    return {
        "id": id,
        "repo": repo,
        "class_source": None,
        "method_source": method,
        "buggy_line": buggy_line,
        "fixed_line": fixed,
        "benchmark": "user",
    }


def _write(tmp_path: Path, records: list[dict]) -> Path:
    path = tmp_path / "corpus.jsonl"
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


def _make_instance(id: str, repo: str) -> BugInstance:
    return BugInstance(
        id=id,
        repo=repo,
        class_source=None,
        method_source="void f ( ) {\nint a = 1 ;\n}",
        buggy_line=1,
        fixed_line="int a = 2 ;",
    )


class TestIngest:
    def test_valid_record_accepted(self, tmp_path):
        result = ingest(_write(tmp_path, [_record()]))
        assert len(result.instances) == 1 and not result.rejected

    def test_unchanged_line_rejected(self, tmp_path):
        rec = _record(fixed="int a = 1 ;")
        result = ingest(_write(tmp_path, [rec]))
        assert not result.instances
        assert "identical" in result.rejected[0].reason

    def test_whitespace_only_difference_rejected(self, tmp_path):
        rec = _record(fixed="int  a =  1 ;")
        result = ingest(_write(tmp_path, [rec]))
        assert not result.instances

    def test_out_of_range_line_rejected(self, tmp_path):
        rec = _record(buggy_line=99)
        result = ingest(_write(tmp_path, [rec]))
        assert not result.instances
        assert "out of range" in result.rejected[0].reason

    def test_worked_example_fixture_accepted(self):
        result = ingest(FIXTURES / "worked_example.jsonl")
        assert len(result.instances) == 1
        inst = result.instances[0]
        assert inst.buggy_line == 2
        assert "argsTokenizer" in inst.buggy_text()

    def test_malformed_json_is_nonfatal(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps(_record()) + "\n{oops\n")
        result = ingest(path)
        assert len(result.instances) == 1 and len(result.rejected) == 1

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(OSError):
            ingest(tmp_path / "nope.jsonl")

    def test_unsupported_format(self, tmp_path):
        with pytest.raises(ValueError):
            ingest(_write(tmp_path, [_record()]), format="csv")

    def test_idempotent_roundtrip(self, tmp_path):
        messy = _record(method="void f() { int a = 1; return; }")
        first = ingest(_write(tmp_path, [messy]))
        out = tmp_path / "canonical.jsonl"
        write_corpus(first.instances, out)
        second = ingest(out)
        assert second.instances == first.instances
        out2 = tmp_path / "canonical2.jsonl"
        write_corpus(second.instances, out2)
        assert out.read_text() == out2.read_text()


class TestSplit:
    def _uniform_corpus(self) -> list[BugInstance]:
        return [
            _make_instance(f"bug-{r}-{i}", f"repo{r}")
            for r in range(10)
            for i in range(10)
        ]

    def test_uniform_10x10_exact(self):
        corpus = self._uniform_corpus()
        split = split_by_repo(corpus, (0.8, 0.1, 0.1), seed=7)
        assert len(split.train) == 80
        assert len(split.valid) == 10
        assert len(split.test) == 10

    def test_no_repo_overlap(self):
        corpus = self._uniform_corpus()
        split = split_by_repo(corpus, (0.8, 0.1, 0.1), seed=7)
        by_id = {inst.id: inst.repo for inst in corpus}
        repo_sets = {
            name: {by_id[i] for i in ids} for name, ids in split.sets().items()
        }
        assert not (repo_sets["train"] & repo_sets["valid"])
        assert not (repo_sets["train"] & repo_sets["test"])
        assert not (repo_sets["valid"] & repo_sets["test"])

    def test_deterministic(self):
        corpus = self._uniform_corpus()
        a = split_by_repo(corpus, (0.8, 0.1, 0.1), seed=7)
        b = split_by_repo(corpus, (0.8, 0.1, 0.1), seed=7)
        assert a == b

    def test_moderately_skewed_corpus_still_balances(self):
        # one repo holding 50% fits inside the 80% train target, so the
        # greedy fill absorbs it and the shares stay exact
        corpus = [_make_instance(f"big-{i}", "bigrepo") for i in range(50)]
        corpus += [_make_instance(f"s{r}-{i}", f"small{r}") for r in range(10) for i in range(5)]
        split = split_by_repo(corpus, (0.8, 0.1, 0.1), seed=3)
        big_ids = {f"big-{i}" for i in range(50)}
        containing = [name for name, ids in split.sets().items() if big_ids <= ids]
        assert len(containing) == 1
        assert split_report(corpus, split)["within_tolerance"] is True

    def test_extreme_skew_reports_tolerance_violation(self):
        # a repo holding 95% of instances overflows every target
        corpus = [_make_instance(f"big-{i}", "bigrepo") for i in range(95)]
        corpus += [_make_instance(f"s{r}", f"small{r}") for r in range(5)]
        split = split_by_repo(corpus, (0.8, 0.1, 0.1), seed=3)
        big_ids = {f"big-{i}" for i in range(95)}
        containing = [name for name, ids in split.sets().items() if big_ids <= ids]
        assert len(containing) == 1
        report = split_report(corpus, split)
        assert report["within_tolerance"] is False

    def test_matches_greedy_oracle(self):
        corpus = [_make_instance(f"s{r}-{i}", f"repo{r}") for r in range(7) for i in range(r + 1)]
        split = split_by_repo(corpus, (0.8, 0.1, 0.1), seed=11)
        sizes = [(f"repo{r}", r + 1) for r in range(7)]
        expected = oracle_greedy_split(sizes, (0.8, 0.1, 0.1), seed=11)
        by_id = {inst.id: inst.repo for inst in corpus}
        for name, ids in split.sets().items():
            for i in ids:
                assert expected[by_id[i]] == name

    def test_single_repo_three_ratios_errors(self):
        corpus = [_make_instance(f"bug{i}", "only") for i in range(10)]
        with pytest.raises(ValueError):
            split_by_repo(corpus, (0.8, 0.1, 0.1), seed=0)

    def test_bad_ratios(self):
        with pytest.raises(ValueError):
            split_by_repo([_make_instance("a", "r")], (0.5, 0.2, 0.2), seed=0)

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            split_by_repo([], (0.8, 0.1, 0.1), seed=0)


@settings(max_examples=40, deadline=None)
@given(
    n_repos=st.integers(min_value=3, max_value=25),
    seed=st.integers(min_value=0, max_value=9999),
)
def test_split_disjointness_property(n_repos, seed):
    corpus = [
        _make_instance(f"b{r}-{i}", f"repo{r}")
        for r in range(n_repos)
        for i in range((r % 4) + 1)
    ]
    split = split_by_repo(corpus, (0.8, 0.1, 0.1), seed=seed)
    ids = [i for ids in split.sets().values() for i in ids]
    assert len(ids) == len(set(ids)) == len(corpus)
    by_id = {inst.id: inst.repo for inst in corpus}
    repo_home: dict[str, str] = {}
    for name, id_set in split.sets().items():
        for i in id_set:
            repo = by_id[i]
            assert repo_home.setdefault(repo, name) == name
