"""Command line surface"""

import argparse
import json
import shutil

import pytest

import rewriter
from dlgp_io import parse
from utils import make_cq, same_queries

R1 = "[r1] [(diabetic(Y), sibling(Y,X)), (diabetic(Z), parent(Z,X))] :- diabetesRisk(X).\n"


def run(capsys, *argv):
    code = rewriter.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_rewrite_diabetes(capsys, samples):
    code, out, _ = run(capsys, "rewrite", "--kb", str(samples / "diabetes.dlgp"),
                       "--query", "diabetic_parent")
    assert code == rewriter.EXIT_CONVERGED
    queries = parse(out).queries
    assert same_queries(queries, [
        make_cq("diabetic(Y2), parent(Y2,X2)"),
        make_cq("singleChild(X1), sibling(Y1,X1)"),
        make_cq("diabetesRisk(X), singleChild(X)"),
    ])
    assert "% inconsistency-witness" in out


def test_rewrite_single_atom_query(capsys, tmp_path):
    kb = write(tmp_path / "kb.dlgp", R1 + "[d] ? :- diabetic(X1).\n")
    code, out, _ = run(capsys, "rewrite", "--kb", kb)
    assert code == rewriter.EXIT_CONVERGED
    assert same_queries(parse(out).queries,
                        [make_cq("diabetic(X1)"), make_cq("diabetesRisk(X)")])


def test_rewrite_with_query_file(capsys, tmp_path, samples):
    queries = write(tmp_path / "q.dlgp", "? :- diabetic(X1).\n")
    code, out, _ = run(capsys, "rewrite", "--kb", str(samples / "diabetes.dlgp"),
                       "--query", queries)
    assert code == rewriter.EXIT_CONVERGED
    assert len(parse(out).queries) == 3


def test_rewrite_json_output(capsys, samples):
    code, out, _ = run(capsys, "rewrite", "--kb", str(samples / "diabetes.dlgp"),
                       "--query", "diabetic_parent", "--format", "json")
    assert code == rewriter.EXIT_CONVERGED
    body = json.loads(out)
    assert len(body["cqs"]) == 3
    assert {cq["origin"] for cq in body["cqs"]} == {"query", "inconsistency-witness"}
    assert all(cq["answer_vars"] == [] for cq in body["cqs"])


def test_rewrite_stats_file(capsys, tmp_path, samples):
    stats_path = tmp_path / "stats.json"
    code, _, _ = run(capsys, "rewrite", "--kb", str(samples / "diabetes.dlgp"),
                     "--query", "diabetic_parent", "--stats-out", str(stats_path))
    assert code == rewriter.EXIT_CONVERGED
    stats = json.loads(stats_path.read_text(encoding="utf-8"))
    assert stats["converged"] is True
    assert stats["memory_estimate_kind"] == "tracemalloc"
    assert stats["cq_kept_after_prune"] == 3
    assert stats["runtime_ms"] >= 0


def test_rewrite_without_rules_echoes_query(capsys, tmp_path):
    kb = write(tmp_path / "kb.dlgp", "? :- p(X).\n")
    code, out, _ = run(capsys, "rewrite", "--kb", kb)
    assert code == rewriter.EXIT_CONVERGED
    assert out.strip() == "? :- p(X)."


def test_rewrite_answer_variables(capsys, tmp_path):
    kb = write(tmp_path / "kb.dlgp", "p(X) :- q(X).\n?(A) :- p(A).\n")
    code, out, _ = run(capsys, "rewrite", "--kb", kb)
    assert code == rewriter.EXIT_CONVERGED
    lines = out.splitlines()
    assert lines[0] == "?(A) :- p(A)."
    assert lines[1].endswith("?(A) :- q(A).")
    assert all(q.answer_vars == ("A",) for q in parse(out).queries)


def test_partial_rewriting_exit_code(capsys, samples):
    code, out, err = run(capsys, "rewrite", "--kb", str(samples / "grower.dlgp"),
                         "--max-iterations", "2")
    assert code == rewriter.EXIT_PARTIAL
    assert "? :- q(a)." in out
    assert "[PARTIAL]" in err


def test_timeout_exit_code(capsys, samples):
    code, out, _ = run(capsys, "rewrite", "--kb", str(samples / "grower.dlgp"),
                       "--timeout-secs=-1")
    assert code == rewriter.EXIT_TIMEOUT
    assert out == ""


def test_parse_error_exit_code(capsys, tmp_path):
    kb = write(tmp_path / "kb.dlgp", "p(a\n")
    code, out, err = run(capsys, "rewrite", "--kb", kb)
    assert code == rewriter.EXIT_INPUT_ERROR
    assert out == ""
    assert "[ERROR]" in err


def test_unknown_query_label(capsys, samples):
    code, _, err = run(capsys, "rewrite", "--kb", str(samples / "diabetes.dlgp"),
                       "--query", "nope")
    assert code == rewriter.EXIT_INPUT_ERROR
    assert "nope" in err


def test_missing_kb_file(capsys, tmp_path):
    code, _, _ = run(capsys, "rewrite", "--kb", str(tmp_path / "missing.dlgp"))
    assert code == rewriter.EXIT_INPUT_ERROR


def test_classify(capsys, samples):
    code, out, _ = run(capsys, "classify", "--kb", str(samples / "ancestors.dlgp"))
    assert code == rewriter.EXIT_CONVERGED
    report = json.loads(out)
    assert report["verdict"] == "guaranteed-fus"
    assert report["fus_class"] == "cdr"


def test_classify_unknown(capsys, samples):
    code, out, _ = run(capsys, "classify", "--kb", str(samples / "not_cdr.dlgp"))
    assert code == rewriter.EXIT_CONVERGED
    assert json.loads(out)["verdict"] == "unknown"


def test_oracle(capsys, samples):
    code, out, _ = run(capsys, "oracle", "--kb", str(samples / "diabetes.dlgp"),
                       "--facts", str(samples / "diabetes_facts.dlgp"),
                       "--query", "diabetic_parent")
    assert code == rewriter.EXIT_CONVERGED
    assert out.strip() == "true"


def test_oracle_unknown(capsys, tmp_path, samples):
    facts = write(tmp_path / "facts.dlgp", "diabetesRisk(bob).\n")
    code, out, _ = run(capsys, "oracle", "--kb", str(samples / "diabetes.dlgp"),
                       "--facts", facts, "--query", "diabetic_parent")
    assert code == rewriter.EXIT_CONVERGED
    assert out.strip() == "unknown"


def test_batch(capsys, tmp_path, samples):
    kb = shutil.copy(samples / "diabetes.dlgp", tmp_path / "kb.dlgp")
    folder = tmp_path / "queries"
    folder.mkdir()
    write(folder / "family.dlgp", "[dp] ? :- diabetic(Y2), parent(Y2,X2).\n? :- diabetic(X1).\n")
    code, out, _ = run(capsys, "batch", "--kb", str(kb), "--queries", str(folder))
    assert code == rewriter.EXIT_CONVERGED
    assert "[1/2] [OK] family.dp" in out
    assert "[2/2] [OK] family.q2" in out
    assert "SUMMARY" in out
    written = folder / rewriter.OUTPUT_DIR_NAME / "family.dp.dlgp"
    assert len(parse(written.read_text(encoding="utf-8")).queries) == 3
    assert (folder / rewriter.OUTPUT_DIR_NAME / "family.q2.dlgp").exists()


def test_batch_reports_partial(capsys, tmp_path, samples):
    output = tmp_path / "out"
    code, out, _ = run(capsys, "batch", "--kb", str(samples / "grower.dlgp"),
                       "--queries", str(samples / "grower.dlgp"), "-o", str(output),
                       "--max-iterations", "1")
    assert code == rewriter.EXIT_PARTIAL
    assert "[PARTIAL] grower.q_a" in out
    assert (output / "grower.q_a.dlgp").exists()


def test_output_is_deterministic(capsys, samples):
    argv = ("rewrite", "--kb", str(samples / "diabetes.dlgp"), "--query", "diabetic_parent")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv(rewriter.SEED_ENV, "100")
    assert rewriter.name_seed() == 100
    monkeypatch.setenv(rewriter.SEED_ENV, "abc")
    assert rewriter.name_seed() == 0
    monkeypatch.delenv(rewriter.SEED_ENV)
    assert rewriter.name_seed() == 0


@pytest.mark.parametrize("text, expected", [("inf", None), ("0", 0), ("3", 3)])
def test_parse_k(text, expected):
    assert rewriter.parse_k(text) == expected


@pytest.mark.parametrize("text", ["-1", "two"])
def test_parse_k_rejects(text):
    with pytest.raises(argparse.ArgumentTypeError):
        rewriter.parse_k(text)


def test_summarize():
    summary = rewriter.summarize([1.0, 2.0, 3.0, 4.0])
    assert summary["count"] == 4
    assert summary["mean"] == 2.5
    assert summary["50%"] == 2.5
    assert summary["max"] == 4.0
    assert rewriter.summarize([]) == {"count": 0}
