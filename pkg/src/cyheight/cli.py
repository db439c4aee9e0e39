"""Command-line interface: job parsing, single-variety commands, surveys, self-test.

Job format (one ``key = value`` per line, ``#`` starts a comment)::

    p = 5
    vars = 3
    f = y^2*z - x^3 - x*z^2
    mmax = 3
    schedule = 4,8,12,16
    cmd = verify

A corpus is a sequence of such blocks separated by blank lines.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .exactalg.fp import check_prime
from .exactalg.mpoly import MPoly, PolyParseError, format_poly, parse_poly

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_DISAGREE = 3
EXIT_INCONCLUSIVE = 4

COMMANDS = ("height", "qfs", "profile", "verify", "survey", "selftest")
JOB_COMMANDS = COMMANDS[:4]
KEYS = ("p", "vars", "f", "mmax", "schedule", "cmd", "out")


class JobError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class JobSpec:
    p: int
    nvars: int
    f: str
    mmax: int = 3
    schedule: tuple | None = None
    command: str = "verify"
    out: str | None = None

    def polynomial(self) -> MPoly:
        return parse_poly(self.f, self.nvars, self.p)

    def effective_schedule(self) -> tuple:
        if self.schedule:
            return self.schedule
        from .cech import CURVE_SCHEDULE, SURFACE_SCHEDULE
        return CURVE_SCHEDULE if self.nvars == 3 else SURFACE_SCHEDULE

    def to_text(self) -> str:
        """Canonical echo with all defaults filled in."""
        rows = [("p", self.p), ("vars", self.nvars), ("f", self.f), ("mmax", self.mmax),
                ("schedule", ",".join(map(str, self.effective_schedule()))), ("cmd", self.command)]
        if self.out:
            rows.append(("out", self.out))
        return "".join(f"{k}={v}\n" for k, v in rows)


def _parse_schedule(text: str, line=None) -> tuple:
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise JobError(f"schedule must be a comma-separated list of integers, got {text!r}", line) from None
    if not vals or any(v < 1 for v in vals) or list(vals) != sorted(set(vals)):
        raise JobError("schedule must be a strictly increasing list of positive integers", line)
    return vals


def _offending_term(f: MPoly, want: int | None) -> str:
    degs = {e: sum(e) for e in f.terms}
    ref = want if want is not None else max(degs.values())
    for e, c in f.sorted_terms():
        if degs[e] != ref:
            return format_poly(MPoly({e: c}, f.nvars, f.modulus))
    return ""


def parse_job(text: str, first_line: int = 1) -> JobSpec:
    """Parse and validate one job block."""
    seen: dict = {}
    lines: dict = {}
    for k, raw in enumerate(text.splitlines(), start=first_line):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise JobError(f"expected key = value, got {body!r}", k)
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in KEYS:
            raise JobError(f"unknown key {key!r}", k)
        if key in seen:
            raise JobError(f"duplicate key {key!r}", k)
        seen[key] = value
        lines[key] = k
    for key in ("p", "vars", "f"):
        if key not in seen:
            raise JobError(f"missing required key {key!r}")

    def as_int(key):
        try:
            return int(seen[key])
        except ValueError:
            raise JobError(f"{key} must be an integer, got {seen[key]!r}", lines[key]) from None

    p = as_int("p")
    try:
        check_prime(p)
    except ValueError as exc:
        raise JobError(str(exc), lines["p"]) from None
    nvars = as_int("vars")
    if not 3 <= nvars <= 10:
        raise JobError("vars must be between 3 and 10", lines["vars"])
    try:
        f = parse_poly(seen["f"], nvars, p)
    except PolyParseError as exc:
        raise JobError(f"cannot parse f: {exc}", lines["f"]) from None
    if not f.terms:
        raise JobError("f is zero modulo p", lines["f"])
    if not f.is_homogeneous():
        raise JobError(f"f is not homogeneous: offending term {_offending_term(f, None)!r}", lines["f"])
    if f.total_degree() != nvars:
        raise JobError(f"f has degree {f.total_degree()} but a hypersurface in {nvars} variables "
                       f"needs degree {nvars}: offending term {_offending_term(f, nvars)!r}", lines["f"])
    mmax = as_int("mmax") if "mmax" in seen else 3
    if not 1 <= mmax <= 4:
        raise JobError("mmax must be between 1 and 4", lines.get("mmax"))
    schedule = _parse_schedule(seen["schedule"], lines["schedule"]) if "schedule" in seen else None
    cmd = seen.get("cmd", "verify")
    if cmd not in JOB_COMMANDS:
        raise JobError(f"unknown cmd {cmd!r} (expected one of {', '.join(JOB_COMMANDS)})", lines["cmd"])
    return JobSpec(p, nvars, seen["f"], mmax, schedule, cmd, seen.get("out"))


def split_corpus(text: str) -> list:
    """Blank-line separated blocks with their starting line numbers."""
    blocks, cur, start = [], [], None
    for k, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not raw.strip():
            if cur:
                blocks.append((start, "\n".join(cur)))
                cur, start = [], None
            continue
        if not body and not cur:
            continue
        if start is None:
            start = k
        cur.append(raw)
    if cur:
        blocks.append((start, "\n".join(cur)))
    return blocks


# ---------------------------------------------------------------------------
# single-variety commands


def _model(job: JobSpec):
    from .cech import HypersurfaceModel
    return HypersurfaceModel(job.polynomial())


def run_job(job: JobSpec, command: str | None = None, samples: int = 20):
    """Returns (text record, exit status, model)."""
    from . import heights
    from .cech import NonStabilized, cohomology_profile
    command = command or job.command
    X = _model(job)
    sched = job.effective_schedule()
    head = job.to_text().replace(f"cmd={job.command}", f"cmd={command}")
    if command == "verify":
        rep = heights.verify_main_theorem(X, job.mmax, sched, samples=samples)
        status = EXIT_DISAGREE if rep.theorem_check == "disagree" else EXIT_OK
        if status == EXIT_OK and rep.checks and not all(rep.checks.values()):
            status = EXIT_DISAGREE
        inconclusive = rep.theorem_check == "inconclusive"
        body = rep.record()
        return head + _strip_job_keys(body), (status, inconclusive), X
    if command == "height":
        hv, prof = heights.artin_mazur_height(X, job.mmax, sched)
        hasse = int(heights.hasse_coefficient(X))
        lines = [("artin_mazur", hv), ("hasse", hasse)]
        if prof:
            lines += [("profile_top", ",".join(map(str, prof.top))),
                      ("profile_D", ",".join(map(str, prof.D_final)))]
        if hv.reason:
            lines.append(("note", hv.reason))
        return head + _kv(lines), (EXIT_OK, not hv.finite), X
    if command == "qfs":
        hv, attempts, cert = heights.qfs_height(X, job.mmax, sched, samples=samples)
        lines = [("qfs_height", hv),
                 ("splitting", ";".join(f"m{a.m}@D{a.D}:{'feasible' if a.feasible else 'infeasible'}"
                                        for a in attempts))]
        if cert is not None:
            lines.append(("certificate", ",".join(f"{k}:{'ok' if v else 'FAIL'}"
                                                  for k, v in sorted(cert.checks.items()))))
        if hv.reason:
            lines.append(("note", hv.reason))
        return head + _kv(lines), (EXIT_OK, not hv.finite), X
    if command == "profile":
        try:
            prof = cohomology_profile(X, job.mmax, sched)
        except NonStabilized as exc:
            return head + _kv([("status", "inconclusive"), ("note", str(exc))]), (EXIT_OK, True), X
        lines = [("profile_top", ",".join(map(str, prof.top))),
                 ("profile_lower", ",".join(map(str, prof.lower))),
                 ("profile_D", ",".join(map(str, prof.D_final))),
                 ("profile_method", prof.method)]
        return head + _kv(lines), (EXIT_OK, False), X
    raise JobError(f"command {command!r} does not run on a single job")


def _kv(rows) -> str:
    return "".join(f"{k}={v}\n" for k, v in rows)


def _strip_job_keys(record: str) -> str:
    skip = ("p=", "vars=", "f=", "mmax=", "schedule=")
    return "".join(line + "\n" for line in record.splitlines() if not line.startswith(skip))


def dump_cech(model) -> str:
    from .cech import dump_complex
    out = []
    keys = sorted((k for k in model._cache if k[0] == "complex"), key=lambda k: (str(k[1]), k[2]))
    for key in keys:
        out.append(dump_complex(model, model._cache[key]))
    return "".join(out)


# ---------------------------------------------------------------------------
# survey


def _survey_row(args):
    index, start, block, samples = args
    from . import heights
    from .cech import ModelError
    t0 = time.perf_counter()
    try:
        job = parse_job(block, start)
    except JobError as exc:
        return {"index": index, "status": "rejected-invalid", "error": str(exc), "p": "", "f": "",
                "mmax": 0, "report": None, "wall_time": time.perf_counter() - t0}
    base = {"index": index, "p": job.p, "f": job.f, "mmax": job.mmax}
    try:
        X = _model(job)
        rep = heights.verify_main_theorem(X, job.mmax, job.effective_schedule(), samples=samples)
        if rep.theorem_check != "disagree" and rep.checks and not all(rep.checks.values()):
            rep.theorem_check = "disagree"
        base.update(status="ok", report=rep.as_dict(), csv=rep.csv_row(job.mmax))
    except ModelError as exc:
        base.update(status=f"rejected-{exc.kind}", error=str(exc), report=None)
    except Exception as exc:  # recorded per row, never aborts the batch
        base.update(status="error", error=f"{type(exc).__name__}: {exc}", report=None)
    base["wall_time"] = time.perf_counter() - t0
    return base


def _csv_header(mmax: int, timing: bool) -> list:
    cols = ["index", "p", "f", "ht", "ht_s", "hasse"] + [f"d{m}" for m in range(1, mmax + 1)]
    cols += ["D_final", "theorem_check", "status"]
    return cols + (["wall_time"] if timing else [])


def _csv_line(row: dict, mmax: int, timing: bool) -> list:
    if row.get("report"):
        rep = row["report"]
        top = rep["profile_top"] or []
        ds = [str(top[k]) if k < len(top) else "" for k in range(mmax)]
        vals = [row["index"], rep["p"], rep["f"], rep["artin_mazur"], rep["qfs_height"],
                "" if rep["hasse"] is None else rep["hasse"], *ds, rep["D_final"],
                rep["theorem_check"], row["status"]]
    else:
        vals = [row["index"], row["p"], row["f"], "", "", "", *([""] * mmax), "", "", row["status"]]
    return vals + ([f"{row['wall_time']:.3f}"] if timing else [])


def run_survey(corpus_text: str, csv_out, records_out=None, jobs: int = 1, timing: bool = False,
               samples: int = 20) -> dict:
    """Evaluate every block; rows are written in corpus order.

    Returns a summary with counts of each theorem verdict and status.
    """
    blocks = split_corpus(corpus_text)
    mmax = 1
    for start, block in blocks:
        try:
            mmax = max(mmax, parse_job(block, start).mmax)
        except JobError:
            pass
    writer = csv.writer(csv_out, lineterminator="\n")
    writer.writerow(_csv_header(mmax, timing))
    tasks = [(k, start, block, samples) for k, (start, block) in enumerate(blocks, start=1)]
    summary = {"rows": 0, "agree": 0, "disagree": 0, "inconclusive": 0, "rejected": 0, "error": 0}

    def consume(row):
        summary["rows"] += 1
        if row.get("report"):
            summary[row["report"]["theorem_check"]] += 1
        elif row["status"].startswith("rejected"):
            summary["rejected"] += 1
        else:
            summary["error"] += 1
        writer.writerow(_csv_line(row, mmax, timing))
        csv_out.flush()
        if records_out is not None:
            rec = {"index": row["index"], "status": row["status"]}
            if row.get("report"):
                rec.update(row["report"])
            else:
                rec.update(p=row["p"], f=row["f"], error=row.get("error", ""))
            if not timing:
                rec.pop("wall_time", None)
            records_out.write(json.dumps(rec, sort_keys=True) + "\n")
            records_out.flush()

    if jobs <= 1 or len(tasks) <= 1:
        for t in tasks:
            consume(_survey_row(t))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map yields results in submission order: a single ordered writer
            for row in pool.map(_survey_row, tasks):
                consume(row)
    return summary


# ---------------------------------------------------------------------------
# self-test


def selftest(stream=None) -> bool:
    stream = stream or sys.stdout
    results = []

    def suite(name, fn):
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # reported as a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        dt = time.perf_counter() - t0
        results.append(ok)
        stream.write(f"{'PASS' if ok else 'FAIL'} {name} ({dt:.1f}s) {detail}\n")
        stream.flush()

    def witt():
        from .wittcore import witt_structural_polys, verify_ghost_identities, WittVector
        from .exactalg.fp import FpScalar
        for p in (2, 3, 5):
            for m in (1, 2, 3):
                if not verify_ghost_identities(witt_structural_polys(p, m)):
                    return False, f"ghost identity failed for p={p} m={m}"
        one = FpScalar(1, 2)
        zero = FpScalar(0, 2)
        w = WittVector([one, zero], 2)
        if w + w != WittVector([zero, one], 2):
            return False, "(1,0)+(1,0) != (0,1) in W_2(F_2)"
        return True, "structural polynomials ghost-verified for p in 2,3,5 and m <= 3"

    def calc():
        from .cech import HypersurfaceModel
        from .diffcalc import serre_kernel_check
        for p in (5, 7):
            X = HypersurfaceModel.from_string("y^2*z - x^3 - x*z^2", p, 3)
            for S in X.charts(0):
                if not serre_kernel_check(X.ring, S, 2 * p)["exact"]:
                    return False, f"ker d != image of F on chart {S} at p={p}"
        return True, "ker d = F(O) on every chart of the reference curves"

    def smoke():
        from .cech import HypersurfaceModel
        from .heights import verify_main_theorem
        got = []
        for p, want in ((5, 1), (7, 2)):
            X = HypersurfaceModel.from_string("y^2*z - x^3 - x*z^2", p, 3)
            rep = verify_main_theorem(X, 2, samples=5)
            got.append((str(rep.artin_mazur), str(rep.qfs)))
            if rep.theorem_check != "agree" or rep.artin_mazur.value != want or rep.qfs.value != want:
                return False, f"p={p}: ht={rep.artin_mazur} ht_s={rep.qfs} ({rep.theorem_check})"
        return True, f"(ht, ht_s) = {got[0]} at p=5 and {got[1]} at p=7"

    suite("wittcore", witt)
    suite("diffcalc", calc)
    suite("heights", smoke)
    ok = all(results)
    stream.write(f"selftest {'passed' if ok else 'FAILED'}\n")
    return ok


# ---------------------------------------------------------------------------
# entry point


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cyheight", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_text in (("height", "Artin-Mazur height from the B_m cohomology profile"),
                            ("qfs", "quasi-F-split height from the splitting solver"),
                            ("profile", "dimensions of H^n and H^(n-1) of B_m for m <= mmax"),
                            ("verify", "both heights, the Hasse oracle and the comparison")):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("job", help="job file ('-' for stdin)")
        sp.add_argument("--mmax", type=int, help="override the job's mmax")
        sp.add_argument("--schedule", help="override the truncation schedule, e.g. 4,8,12,16")
        sp.add_argument("--dump-cech", nargs="?", const="-", metavar="PATH",
                        help="write the Cech complex dump (stdout when no path)")
        sp.add_argument("--out", help="write the record here instead of stdout")
        sp.add_argument("--strict", action="store_true", help="exit 4 when the result is inconclusive")
        sp.add_argument("--samples", type=int, default=20, help="certificate spot checks")
    sv = sub.add_parser("survey", help="run every job of a corpus file")
    sv.add_argument("corpus", help="corpus file: job blocks separated by blank lines")
    sv.add_argument("--out", help="CSV output path (stdout when omitted)")
    sv.add_argument("--records", help="line-delimited JSON records (default: next to --out)")
    sv.add_argument("--jobs", type=int, default=1, help="worker processes")
    sv.add_argument("--strict", action="store_true", help="exit 4 when any row is inconclusive")
    sv.add_argument("--timing", action="store_true", help="add a wall_time column")
    sv.add_argument("--samples", type=int, default=20, help="certificate spot checks")
    sub.add_parser("selftest", help="ghost identities, exactness checks and a two-curve smoke test")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return EXIT_OK if selftest() else EXIT_FAIL
    if args.command == "survey":
        return _main_survey(args)
    from .cech import ModelError
    try:
        text = _read_text(args.job)
        job = parse_job(text)
        overrides = {}
        if args.mmax is not None:
            if not 1 <= args.mmax <= 4:
                raise JobError("--mmax must be between 1 and 4")
            overrides["mmax"] = args.mmax
        if args.schedule:
            overrides["schedule"] = _parse_schedule(args.schedule)
        if overrides:
            job = JobSpec(**{**job.__dict__, **overrides})
        record, (status, inconclusive), X = run_job(job, args.command, samples=args.samples)
    except (JobError, ModelError, OSError) as exc:
        sys.stderr.write(f"cyheight: {exc}\n")
        return EXIT_INVALID
    out_path = args.out or job.out
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(record)
    else:
        sys.stdout.write(record)
    if args.dump_cech:
        dump = dump_cech(X)
        if args.dump_cech == "-":
            sys.stdout.write(dump)
        else:
            with open(args.dump_cech, "w", encoding="utf-8") as fh:
                fh.write(dump)
    if status != EXIT_OK:
        return status
    if args.strict and inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _main_survey(args) -> int:
    try:
        text = _read_text(args.corpus)
    except OSError as exc:
        sys.stderr.write(f"cyheight: {exc}\n")
        return EXIT_INVALID
    records_path = args.records
    if records_path is None and args.out:
        records_path = (args.out[:-4] if args.out.endswith(".csv") else args.out) + ".jsonl"
    csv_fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    rec_fh = open(records_path, "w", encoding="utf-8") if records_path else None
    try:
        summary = run_survey(text, csv_fh, rec_fh, jobs=args.jobs, timing=args.timing,
                             samples=args.samples)
    finally:
        if args.out:
            csv_fh.close()
        if rec_fh:
            rec_fh.close()
    sys.stderr.write(" ".join(f"{k}={v}" for k, v in summary.items()) + "\n")
    if summary["disagree"]:
        return EXIT_DISAGREE
    if args.strict and summary["inconclusive"]:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
