import csv
import dataclasses
import io
import json

import pytest

from cyheight import cli, heights

CURVE7 = "p=7\nvars=3\nf=y^2*z-x^3-x*z^2\nmmax=2\n"
SMALL_CORPUS = """# two curves and one rejected job
p = 5
vars = 3
f = y^2*z - x^3 - x*z^2
mmax = 2

p = 7
vars = 3
f = x^3 + y^3 + z^3
mmax = 1

p = 3
vars = 3
f = x^3 + y^3 + z^3
"""


def test_parse_job_defaults():
    job = cli.parse_job("p = 5\nvars = 3\nf = x^3+y^3+z^3  # Fermat\n")
    assert (job.p, job.nvars, job.mmax, job.command) == (5, 3, 3, "verify")
    assert job.effective_schedule() == (4, 8, 12, 16)
    assert cli.parse_job(job.to_text()).to_text() == job.to_text()


@pytest.mark.parametrize("text,line,fragment", [
    ("p=6\nvars=3\nf=x^3\n", 1, "not prime"),
    ("p=5\nvars=3\nf=x^3+y^2\n", 3, "offending term 'y^2'"),
    ("p=5\nvars=3\nf=x^3+y^3+z^3\nfoo=1\n", 4, "unknown key"),
    ("p=5\np=7\nvars=3\nf=x^3\n", 2, "duplicate"),
    ("p=5\nvars=3\nf=x^3+y^3+z^3\nmmax=9\n", 4, "mmax"),
    ("p=5\nvars=3\nf=x^4+y^4+z^4\n", 3, "degree"),
    ("p=5\nvars=3\nf=x^3+y^3+z^3\nschedule=8,4\n", 4, "schedule"),
    ("p=5\nvars=3\nf=x^3+y^3+z^3\ncmd=survey\n", 4, "cmd"),
    ("p=5\nvars=3\n", None, "f"),
])
def test_parse_job_errors(text, line, fragment):
    with pytest.raises(cli.JobError) as exc:
        cli.parse_job(text)
    assert exc.value.line == line
    assert fragment in str(exc.value)


def test_split_corpus_line_numbers():
    blocks = cli.split_corpus(SMALL_CORPUS)
    assert [start for start, _ in blocks] == [2, 7, 12]


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exit_invalid(tmp_path, capsys):
    job = tmp_path / "bad.txt"
    job.write_text("p=5\nvars=3\nf=x^3+y^3+z^3\nbogus=1\n")
    code, _, err = _run(["verify", str(job)], capsys)
    assert code == cli.EXIT_INVALID and "line 4" in err
    job.write_text("p=3\nvars=3\nf=x^3+y^3+z^3\n")
    code, _, err = _run(["height", str(job)], capsys)
    assert code == cli.EXIT_INVALID and "singular" in err


def test_verify_record(tmp_path, capsys):
    job = tmp_path / "c7.txt"
    job.write_text(CURVE7)
    out = tmp_path / "rec.txt"
    code, _, _ = _run(["verify", str(job), "--out", str(out)], capsys)
    assert code == cli.EXIT_OK
    rec = dict(ln.split("=", 1) for ln in out.read_text().splitlines())
    assert rec["artin_mazur"] == rec["qfs_height"] == "2"
    assert rec["theorem_check"] == "agree" and rec["hasse"] == "0"


def test_strict_inconclusive(tmp_path, capsys):
    job = tmp_path / "c7.txt"
    job.write_text(CURVE7)
    code, out, _ = _run(["qfs", str(job), "--schedule", "4", "--mmax", "1"], capsys)
    assert code == cli.EXIT_OK and "qfs_height=inconclusive" in out
    code, _, _ = _run(["qfs", str(job), "--schedule", "4", "--mmax", "1", "--strict"], capsys)
    assert code == cli.EXIT_INCONCLUSIVE


def test_disagreement_exit(tmp_path, capsys, monkeypatch):
    real = heights.verify_main_theorem

    def broken(*args, **kwargs):
        return dataclasses.replace(real(*args, **kwargs), theorem_check="disagree")

    monkeypatch.setattr(heights, "verify_main_theorem", broken)
    job = tmp_path / "c7.txt"
    job.write_text(CURVE7)
    code, _, _ = _run(["verify", str(job), "--mmax", "1", "--schedule", "4,8"], capsys)
    assert code == cli.EXIT_DISAGREE


def test_dump_cech(tmp_path, capsys):
    job = tmp_path / "c7.txt"
    job.write_text(CURVE7)
    dump = tmp_path / "cech.txt"
    code, _, _ = _run(["profile", str(job), "--mmax", "1", "--dump-cech", str(dump)], capsys)
    assert code == cli.EXIT_OK
    text = dump.read_text()
    assert text.startswith("complex ") and "cohomology q=1 dim=1" in text


def test_survey_outputs(tmp_path):
    out1, rec1 = io.StringIO(), io.StringIO()
    s = cli.run_survey(SMALL_CORPUS, out1, rec1, jobs=1)
    assert s["rows"] == 3 and s["agree"] == 2 and s["rejected"] == 1
    rows = list(csv.DictReader(io.StringIO(out1.getvalue())))
    assert [r["ht"] for r in rows[:2]] == ["1", "1"]
    assert rows[2]["status"] == "rejected-singular"
    assert "wall_time" not in rows[0]
    recs = [json.loads(ln) for ln in rec1.getvalue().splitlines()]
    assert len(recs) == 3 and recs[0]["qfs_height"] == "1"
    out2 = io.StringIO()
    cli.run_survey(SMALL_CORPUS, out2, None, jobs=2)
    assert out1.getvalue() == out2.getvalue()


def test_survey_cli_writes_records(tmp_path, capsys):
    corpus = tmp_path / "c.txt"
    corpus.write_text(SMALL_CORPUS)
    out = tmp_path / "s.csv"
    code, _, err = _run(["survey", str(corpus), "--out", str(out)], capsys)
    assert code == cli.EXIT_OK and "agree=2" in err
    assert (tmp_path / "s.jsonl").exists()


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == cli.EXIT_OK
    assert "selftest passed" in capsys.readouterr().out
