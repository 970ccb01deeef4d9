import json

import pytest

from metabench import cli
from metabench.cli import (
    DiskBasisCache,
    ParseError,
    Settings,
    bundled_corpus,
    main,
    parse_input,
    parse_structured,
    run_command,
)

H_TEXT = """
# the polycyclic example
name: H
coefficients: Z
group { free_rank: 1 torsion: [] }
module {
  kind: matrix_action
  rank: 2
  matrices: [[[0, 1], [1, 3]]]
}
"""


def test_structured_grammar():
    doc = parse_structured('a: 1\nb { c: [1, "x y", z] d: true }\n')
    assert doc == {"a": 1, "b": {"c": [1, "x y", "z"], "d": True}}


@pytest.mark.parametrize(
    "text,line,field",
    [
        ("a: 1\na: 2\n", 2, "a"),
        ("a {\n b: 1\n", 2, None),
        ("a 1\n", 1, "a"),
    ],
)
def test_structured_errors_carry_positions(text, line, field):
    with pytest.raises(ParseError) as exc:
        parse_structured(text)
    assert exc.value.line == line and exc.value.field == field


def test_parse_records_determinants():
    inp = parse_input(H_TEXT)
    assert inp.determinants == [-1]
    assert inp.group.free_rank == 1


@pytest.mark.parametrize(
    "replace,field",
    [
        ("[[[0, 1], [1, 3]]]", "module.matrices"),
        ("torsion: []", "group.torsion"),
    ],
)
def test_validation_errors(replace, field):
    if field == "module.matrices":
        bad = H_TEXT.replace(replace, "[[[2, 0], [0, 1]]]")
    else:
        bad = H_TEXT.replace(replace, "torsion: [2, 3]")
    with pytest.raises(ParseError) as exc:
        parse_input(bad)
    assert exc.value.field == field and exc.value.line is not None


def test_noncommuting_and_wrong_count_rejected():
    two = H_TEXT.replace("free_rank: 1", "free_rank: 2")
    with pytest.raises(ParseError, match="need 2 matrices"):
        parse_input(two)
    bad = two.replace("[[[0, 1], [1, 3]]]", "[[[0, 1], [1, 3]], [[1, 1], [0, 1]]]")
    with pytest.raises(ParseError, match="do not commute"):
        parse_input(bad)


def test_torsion_matrix_order_checked():
    text = H_TEXT.replace("free_rank: 1 torsion: []", "free_rank: 0 torsion: [2]")
    with pytest.raises(ParseError, match="order dividing 2"):
        parse_input(text)


def test_rays_validated():
    text = H_TEXT + "params { rays: [[1, 0]] }\n"
    with pytest.raises(ParseError, match="length 1"):
        parse_input(text)
    torsion_only = H_TEXT.replace("free_rank: 1 torsion: []", "free_rank: 0 torsion: [2]").replace(
        "[[[0, 1], [1, 3]]]", "[[[1, 0], [0, 1]]]"
    )
    with pytest.raises(ParseError, match="no free part"):
        parse_input(torsion_only + "params { rays: [[1]] }\n")


def test_polynomial_and_word_parsers():
    text = """
coefficients: Z
group { free_rank: 2 torsion: [] }
module { kind: relations n_gens: 1 rows: [["a1^2*a2^-1 - 3 + a2"]] }
presentation { generators: [b, x, y] relators: ["x^-1 b x b^-2", "y b y^-1 b^-1"] }
"""
    inp = parse_input(text)
    alg = inp.algebra()
    f = alg.deserialize(inp.rows[0][0])
    assert alg.to_laurent(f) == {(2, -1): 1, (0, 0): -3, (0, 1): 1}
    assert inp.datum().relators[0] == [(1, -1), (0, 1), (1, 1), (0, -2)]
    with pytest.raises(ParseError, match="unknown letter"):
        parse_input(text.replace("y b y^-1", "z b"))
    with pytest.raises(ParseError, match="cannot read"):
        parse_input(text.replace("a1^2", "q^2"))


@pytest.mark.parametrize("name", ["klein", "H", "bs12", "lamplighter"])
def test_round_trip_is_idempotent(name):
    first = parse_input(bundled_corpus()[name]).serialize()
    second = parse_input(first).serialize()
    assert first == second
    assert parse_input(first).content_hash() == parse_input(second).content_hash()


def test_recorded_determinants_must_match():
    text = parse_input(H_TEXT).serialize().replace("determinants: [-1]", "determinants: [1]")
    with pytest.raises(ParseError, match="determinants"):
        parse_input(text)


def test_power_congruence_command(capsys):
    assert main(["power-congruence", "--n", "2", "--i", "3", "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["status"] == "Pass"
    assert [w[1] for w in rep["results"]["cases"][0]["witnesses"]] == [128, 8128]


def test_tame_cert_lamplighter(capsys):
    assert main(["tame-cert", "--corpus", "lamplighter", "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["results"]["overall"] == "NotTame"
    assert rep["results"]["witness"]["both_rays"] == "NotCertified"


def test_pq_check_command(capsys):
    code = main(["pq-check", "--corpus", "klein", "--p", "2", "--q", "3", "--depth", "3", "--format", "json"])
    rep = json.loads(capsys.readouterr().out)
    assert code == 0
    assert all(r["zero"] for r in rep["results"]["table"])


def test_input_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.mb"
    bad.write_text(H_TEXT.replace("[[[0, 1], [1, 3]]]", "[[[2, 0], [0, 1]]]"))
    assert main(["sigma", str(bad)]) == 2
    assert "line" in capsys.readouterr().err
    assert main(["sigma"]) == 2


def test_inconclusive_exit_code(capsys):
    # over Z the Klein module is outside the certified regime of the wedge model
    assert main(["wedge-stabilize", "--corpus", "klein"]) == 2


def test_results_are_reproducible_and_threads_preserve_order():
    inp = parse_input(bundled_corpus()["H"])
    a = run_command("tame-cert", inp)
    b = run_command("tame-cert", inp, Settings(threads=4))
    assert json.dumps(a["results"]) == json.dumps(b["results"])
    one = run_command("power-congruence", None, Settings(threads=1))
    many = run_command("power-congruence", None, Settings(threads=4))
    assert json.dumps(one["results"]) == json.dumps(many["results"])


def test_disk_cache(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.CACHE_ENV, str(tmp_path))
    assert main(["wedge-stabilize", "--corpus", "H", "--format", "json"]) == 0
    first = json.loads(capsys.readouterr().out)
    files = list(tmp_path.glob("*.basis"))
    assert files and all(f.read_text().startswith(cli.CACHE_HEADER + "\n") for f in files)
    assert main(["wedge-stabilize", "--corpus", "H", "--format", "json"]) == 0
    second = json.loads(capsys.readouterr().out)
    assert second["cache"]["hits"] > 0 and second["cache"]["misses"] == 0
    assert json.dumps(first["results"]) == json.dumps(second["results"])


def test_disk_cache_ignores_wrong_version(tmp_path):
    cache = DiskBasisCache(str(tmp_path))
    cache.put("k", [{(0, (1, 0)): 1}])
    assert cache.get("k") == [{(0, (1, 0)): 1}]
    path = tmp_path / "k.basis"
    path.write_text("other-version\n[]")
    assert cache.get("k") is None


@pytest.mark.parametrize("fmt", ["table", "text", "json"])
def test_formats(fmt, capsys):
    assert main(["limits-selftest", "--format", fmt]) == 0
    out = capsys.readouterr().out
    assert "limits-selftest" in out


def test_canonical_output(capsys):
    assert main(["sigma", "--corpus", "bs12", "--canonical"]) == 0
    assert "rows: [[\"-2 + t\"]]" in capsys.readouterr().out
