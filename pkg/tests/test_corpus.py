import json

import pytest

from pseudoref import corpus
from pseudoref.corpus import (
    DuplicateCell,
    DuplicateId,
    EmptyText,
    LanguagePair,
    MalformedLine,
    MissingField,
    NonFiniteScore,
    UnknownStatistic,
    ValueOutOfRange,
    load_evaluation_set,
    load_metric_scores,
)

from conftest import DATA


def write_jsonl(path, records):
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


class TestLanguagePair:
    def test_parse_and_renderings(self):
        lp = LanguagePair.parse("ne-en")
        assert lp.file_key == "ne-en"
        assert lp.report_key == "NE-EN"

    def test_parse_normalizes_case(self):
        assert LanguagePair.parse("NE-EN") == LanguagePair("ne", "en")

    @pytest.mark.parametrize("bad", ["n-en", "neee-en", "ne_en", "ne-e1", "ne"])
    def test_rejects_bad_codes(self, bad):
        with pytest.raises(ValueError):
            LanguagePair.parse(bad)


class TestLoadEvaluationSet:
    def test_basic_jsonl_record(self, tmp_path):
        path = tmp_path / "set.jsonl"
        write_jsonl(path, [{"id": "s1", "lp": "ne-en", "src": "नमस्ते", "mt": "Hello", "human_score": 72.0}])
        loaded = load_evaluation_set(path)
        seg = loaded.segments[0]
        assert seg.lp.report_key == "NE-EN"
        assert seg.src == "नमस्ते"
        assert seg.human_score == 72.0

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "set.jsonl"
        write_jsonl(path, [{"id": "s1", "lp": "ne-en", "src": "x", "human_score": 1.0}])
        with pytest.raises(MissingField, match="line 1"):
            load_evaluation_set(path)

    def test_empty_text_rejected(self, tmp_path):
        path = tmp_path / "set.jsonl"
        write_jsonl(path, [{"id": "s1", "lp": "ne-en", "src": "x", "mt": "  ", "human_score": 1.0}])
        with pytest.raises(EmptyText, match="line 1"):
            load_evaluation_set(path)

    def test_non_finite_score_rejected(self, tmp_path):
        path = tmp_path / "set.jsonl"
        write_jsonl(path, [{"id": "s1", "lp": "ne-en", "src": "x", "mt": "y", "human_score": float("nan")}])
        with pytest.raises(NonFiniteScore):
            load_evaluation_set(path)

    def test_duplicate_id_is_hard_error(self, tmp_path):
        path = tmp_path / "set.jsonl"
        record = {"id": "s1", "lp": "ne-en", "src": "x", "mt": "y", "human_score": 1.0}
        write_jsonl(path, [record, record])
        with pytest.raises(DuplicateId, match="line 2"):
            load_evaluation_set(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "set.jsonl"
        path.write_text('{"id": "s1"\nnot json\n', encoding="utf-8")
        with pytest.raises(MalformedLine, match="line 1"):
            load_evaluation_set(path)

    def test_tsv_round_trips_through_loader(self, tmp_path):
        path = tmp_path / "set.tsv"
        path.write_text(
            "id\tlp\tsrc\tmt\thuman_score\tsystem\n"
            "a\tde-en\tHallo\tHello\t88.5\tsysA\n"
            "b\tde-en\tWelt\tWorld\t40\t\n",
            encoding="utf-8",
        )
        loaded = load_evaluation_set(path, format="tsv")
        assert [seg.id for seg in loaded] == ["a", "b"]
        assert loaded.segments[0].system == "sysA"
        assert loaded.segments[1].system is None

    def test_roen867_size_and_order(self, roen_set):
        assert len(roen_set) == 867
        assert roen_set.segments[0].id == "roen-0001"
        assert roen_set.segments[-1].id == "roen-0867"
        assert roen_set.language_pairs() == [LanguagePair("ro", "en")]

    def test_jsonl_round_trip_identical(self, tmp_path, demo_set):
        out = tmp_path / "out.jsonl"
        corpus.dump_evaluation_set(demo_set, out)
        reloaded = load_evaluation_set(out, name=demo_set.name)
        assert reloaded == demo_set

    def test_order_preservation(self, demo_set):
        raw_ids = [
            json.loads(line)["id"]
            for line in (DATA / "demo20.jsonl").read_text(encoding="utf-8").splitlines()
        ]
        assert [seg.id for seg in demo_set] == raw_ids


class TestLoadMetricScores:
    def test_bundled_csv(self):
        sets = load_metric_scores(DATA / "external_metrics_noref.csv")
        names = [ms.metric_name for ms in sets]
        assert names == ["HWTSC-Teacher-Sim", "COMETKiwi", "UniTE-src", "REUSE", "COMET-QE"]
        uk = LanguagePair("uk", "en")
        values = [ms.get(uk, "rho") for ms in sets]
        assert values == [0.011, 0.005, 0.005, 0.000, -0.003]
        assert all(ms.reference_free for ms in sets)

    def test_single_cell(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(
            "metric,ref_mode,lp,stat,value\nCOMETKiwi,noref,uk-en,rho,0.005\n", encoding="utf-8"
        )
        (ms,) = load_metric_scores(path)
        assert ms.get(LanguagePair("uk", "en"), "rho") == 0.005

    def test_value_out_of_range(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("metric,ref_mode,lp,stat,value\nm,noref,uk-en,rho,1.5\n", encoding="utf-8")
        with pytest.raises(ValueOutOfRange, match="line 2"):
            load_metric_scores(path)

    def test_unknown_statistic(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("metric,ref_mode,lp,stat,value\nm,noref,uk-en,phi,0.1\n", encoding="utf-8")
        with pytest.raises(UnknownStatistic):
            load_metric_scores(path)

    def test_duplicate_cell(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(
            "metric,ref_mode,lp,stat,value\nm,noref,uk-en,rho,0.1\nm,noref,uk-en,rho,0.2\n",
            encoding="utf-8",
        )
        with pytest.raises(DuplicateCell, match="line 3"):
            load_metric_scores(path)
