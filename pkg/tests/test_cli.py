import json
import random

import pytest

from slicecount.cli import main
from slicecount.generators import sum_of_products

PARENS = "S -> '(' S ')' S | ''\n"
RANDOM_FLAGS = ["--override-threshold", "4", "--override-ns", "20", "--override-nt", "3", "--override-m", "3"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture
def files(tmp_path, fig1):
    paths = {
        "ab": tmp_path / "ab.cfg",
        "parens": tmp_path / "parens.cfg",
        "lit": tmp_path / "lit.nnf",
        "nondec": tmp_path / "bad.nnf",
        "fig1": tmp_path / "fig1.pt",
        "plusplus": tmp_path / "bad.pt",
        "sop": tmp_path / "sop.pt",
    }
    paths["ab"].write_text("S -> a | b\n")
    paths["parens"].write_text(PARENS)
    paths["lit"].write_text("nnf 1 0 1\nL 1\n")
    paths["nondec"].write_text("nnf 4 3 2\nL 1\nL 2\nO 0 2 0 1\nA 2 0 2\n")
    paths["fig1"].write_text(fig1[0].to_text())
    paths["plusplus"].write_text("input a\ninput b\nplus 0 1\nplus 2\n")
    paths["sop"].write_text(sum_of_products(random.Random(3), 4, 2, (2, 4), 20).to_text())
    return paths


def test_count_cfg(capsys, files):
    code, doc, _ = run_json(capsys, "count-cfg", files["ab"], "--n", 1, "--epsilon", 0.5, "--delta", 0.1)
    assert code == 0
    assert doc["count_estimate"] == 2 and doc["exact_path"] is True
    assert doc["schema"] == "slicecount/1" and doc["command"] == "count-cfg"


def test_count_cfg_parens(capsys, files):
    code, doc, _ = run_json(capsys, "count-cfg", files["parens"], "--n", 6)
    assert code == 0 and doc["count_estimate"] == 5


def test_count_cfg_empty_slice(capsys, files):
    code, doc, _ = run_json(capsys, "count-cfg", files["ab"], "--n", 2)
    assert code == 0 and doc["count_estimate"] == 0


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "count-cfg", tmp_path / "nope.cfg", "--n", 1)
    assert code == 2 and "cannot read" in err


def test_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("S a b\n")
    assert run(capsys, "count-cfg", bad, "--n", 1)[0] == 2


def test_count_dnnf(capsys, files):
    code, doc, _ = run_json(capsys, "count-dnnf", files["lit"])
    assert code == 0 and doc["count_estimate"] == 1


def test_count_dnnf_non_decomposable(capsys, files):
    code, _, err = run(capsys, "count-dnnf", files["nondec"])
    assert code == 4 and "node 3" in err


def test_exact_fig1(capsys, files):
    code, doc, _ = run_json(capsys, "exact", files["fig1"])
    assert code == 0 and doc["count"] == 8


def test_validate(capsys, files):
    code, doc, _ = run_json(capsys, "validate", files["fig1"])
    assert code == 0 and doc["valid"]
    code, doc, _ = run_json(capsys, "validate", files["plusplus"])
    assert code == 4 and not doc["valid"]
    assert "plus-child" in json.dumps(doc)


def test_count_program_randomized(capsys, files):
    code, doc, _ = run_json(capsys, "count-program", files["sop"], *RANDOM_FLAGS, "--seed", 3)
    assert code == 0
    assert doc["exact_path"] is False and doc["seed"] == 3
    assert doc["params"]["n_s"] == 20 and doc["params"]["support_threshold"] == 4


def test_text_and_json_agree(capsys, files):
    _, doc, _ = run_json(capsys, "count-program", files["sop"], *RANDOM_FLAGS)
    _, text, _ = run(capsys, "count-program", files["sop"], *RANDOM_FLAGS)
    lines = dict(line.split(": ", 1) for line in text.splitlines())
    assert json.loads(lines["count_estimate"]) == doc["count_estimate"]
    assert json.loads(lines["params.n_t"]) == doc["params"]["n_t"]


def test_strict_with_overrides_is_rejected(capsys, files):
    code, _, err = run(capsys, "count-program", files["sop"], "--paper-strict", "--override-ns", 5)
    assert code == 3 and "warning" in err


def test_bad_params(capsys, files):
    assert run(capsys, "count-program", files["fig1"], "--delta", 2)[0] == 3
    assert run(capsys, "count-cfg", files["ab"], "--n", 0)[0] == 3


def test_oracle_refusal(capsys, tmp_path):
    g = tmp_path / "big.cfg"
    g.write_text("S -> a | b | c | S S\n")
    code, _, err = run(capsys, "stats", g, "--n", 14, "--trials", 1)
    assert code == 5 and "refused" in err


def test_convert(capsys, files, tmp_path):
    out = tmp_path / "parens.pt"
    assert run(capsys, "convert", files["parens"], "--to", "program", "--n", 6, "--out", out)[0] == 0
    code, doc, _ = run_json(capsys, "exact", out)
    assert doc["count"] == 5
    code, text, _ = run(capsys, "convert", files["parens"], "--to", "cnf")
    assert code == 0 and "->" in text
    assert run(capsys, "convert", files["lit"], "--to", "smooth-nnf")[1].startswith("nnf")
    assert run(capsys, "convert", files["fig1"], "--to", "cnf")[0] == 3


def test_stats(capsys, files):
    code, doc, _ = run_json(capsys, "stats", files["sop"], "--trials", 4, *RANDOM_FLAGS)
    assert code == 0
    rep = doc["report"]
    assert rep["trials"] == 4 and rep["invariant_violations"] == 0
    assert 0 <= rep["wilson_lower_bound"] <= rep["empirical_coverage"] <= 1


def test_generate(capsys, tmp_path):
    for shape in ("program", "chain", "comb", "sop", "grammar", "dnnf"):
        out = tmp_path / f"g.{ 'cfg' if shape == 'grammar' else 'nnf' if shape == 'dnnf' else 'pt'}"
        assert run(capsys, "generate", shape, "--seed", 1, "--out", out)[0] == 0
        fmt_args = ["--n", 3] if shape == "grammar" else []
        code, _, err = run(capsys, "validate", out, *fmt_args)
        assert code == 0, err


def test_replay_is_byte_identical(capsys, files):
    a = run(capsys, "count-program", files["sop"], *RANDOM_FLAGS, "--seed", 9, "--jobs", 1, "--json")[1]
    b = run(capsys, "count-program", files["sop"], *RANDOM_FLAGS, "--seed", 9, "--jobs", 3, "--json")[1]
    assert a == b
