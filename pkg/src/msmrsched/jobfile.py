"""JobSet files: a line-oriented text format and a JSON format.

Text format (``#`` starts a comment, blank lines are ignored, stages are
numbered from 0)::

    stages 3
    pool 0 ap0 ap1
    pool 1 srv0
    pool 2 ap0 ap1
    # job <id> <arrival> <deadline> <P_0 .. P_N-1> <R_0 .. R_N-1>
    job 0 0 35 10 1 10 ap0 srv0 ap1

``stages`` comes first, every stage needs exactly one ``pool`` line, and jobs
are listed by id from 0. JSON format::

    {"format": "msmrsched-jobset", "version": 1,
     "pipeline": [["ap0", "ap1"], ["srv0"], ["ap0", "ap1"]],
     "jobs": [{"id": 0, "arrival": 0, "deadline": 35,
               "proc": [10, 1, 10], "mapping": ["ap0", "srv0", "ap1"]}]}

Both writers are canonical, so ``dumps(loads(dumps(js))) == dumps(js)`` and
``loads(dumps(js)) == js``.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .model import Job, JobSet, Pipeline

FORMAT_TAG = "msmrsched-jobset"
_TOKEN = re.compile(r"\S+")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


def _int(tok: str, line: int, col: int, what: str) -> int:
    if not re.fullmatch(r"[0-9]+", tok):
        raise ParseError(f"expected a non-negative integer for {what}, got {tok!r}", line, col)
    return int(tok)


def parse_text(text: str) -> JobSet:
    num_stages: int | None = None
    pools: dict[int, tuple[str, ...]] = {}
    pipeline: Pipeline | None = None
    jobs: list[Job] = []
    last = (1, 1)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        toks = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(body)]
        if not toks:
            continue
        last = (lineno, 1)
        key, col = toks[0]
        if key == "stages":
            if num_stages is not None:
                raise ParseError("duplicate 'stages' line", lineno, col)
            if len(toks) != 2:
                raise ParseError("'stages' takes one count", lineno, col)
            num_stages = _int(toks[1][0], lineno, toks[1][1], "stage count")
            if num_stages < 1:
                raise ParseError("need at least one stage", lineno, toks[1][1])
        elif key == "pool":
            if num_stages is None:
                raise ParseError("'pool' before 'stages'", lineno, col)
            if jobs or pipeline is not None:
                raise ParseError("'pool' after the first job", lineno, col)
            if len(toks) < 3:
                raise ParseError("'pool' needs a stage and at least one resource", lineno, col)
            j = _int(toks[1][0], lineno, toks[1][1], "stage")
            if j >= num_stages:
                raise ParseError(f"stage {j} out of range", lineno, toks[1][1])
            if j in pools:
                raise ParseError(f"duplicate pool for stage {j}", lineno, toks[1][1])
            names = [t for t, _ in toks[2:]]
            seen = set()
            for name, c in toks[2:]:
                if name in seen:
                    raise ParseError(f"duplicate resource {name!r}", lineno, c)
                seen.add(name)
            pools[j] = tuple(names)
        elif key == "job":
            if num_stages is None:
                raise ParseError("'job' before 'stages'", lineno, col)
            if pipeline is None:
                missing = [j for j in range(num_stages) if j not in pools]
                if missing:
                    raise ParseError(f"no pool for stage {missing[0]}", lineno, col)
                pipeline = Pipeline(tuple(pools[j] for j in range(num_stages)))
            want = 4 + 2 * num_stages
            if len(toks) != want:
                raise ParseError(f"'job' needs {want - 1} fields, got {len(toks) - 1}", lineno, col)
            nums = [_int(t, lineno, c, "job field") for t, c in toks[1:4 + num_stages]]
            jid, arrival, deadline = nums[:3]
            if jid != len(jobs):
                raise ParseError(f"expected job id {len(jobs)}, got {jid}", lineno, toks[1][1])
            mapping = []
            for j, (name, c) in enumerate(toks[4 + num_stages:]):
                if name not in pipeline.pools[j]:
                    raise ParseError(f"resource {name!r} not in stage {j} pool", lineno, c)
                mapping.append(name)
            try:
                jobs.append(Job(jid, arrival, tuple(nums[3:]), deadline, tuple(mapping)))
            except ValueError as e:
                raise ParseError(str(e), lineno, col) from None
        else:
            raise ParseError(f"unknown directive {key!r}", lineno, col)
    if num_stages is None:
        raise ParseError("missing 'stages' line", *last)
    if pipeline is None:
        missing = [j for j in range(num_stages) if j not in pools]
        if missing:
            raise ParseError(f"no pool for stage {missing[0]}", *last)
        pipeline = Pipeline(tuple(pools[j] for j in range(num_stages)))
    return JobSet(pipeline, tuple(jobs))


def dump_text(jobset: JobSet) -> str:
    N = jobset.num_stages
    for pool in jobset.pipeline.pools:
        for name in pool:
            if not name or "#" in name or _TOKEN.fullmatch(name) is None:
                raise ValueError(f"resource id {name!r} cannot be written in the text format")
    lines = [f"stages {N}"]
    lines += [f"pool {j} " + " ".join(pool) for j, pool in enumerate(jobset.pipeline.pools)]
    if jobset.jobs:
        lines.append("# job <id> <arrival> <deadline> " + " ".join(f"P{j}" for j in range(N))
                     + " " + " ".join(f"R{j}" for j in range(N)))
    for job in jobset.jobs:
        fields = [job.id, job.arrival, job.deadline, *job.proc, *job.mapping]
        lines.append("job " + " ".join(str(f) for f in fields))
    return "\n".join(lines) + "\n"


def to_dict(jobset: JobSet) -> dict:
    return {
        "format": FORMAT_TAG,
        "version": 1,
        "pipeline": [list(pool) for pool in jobset.pipeline.pools],
        "jobs": [
            {"id": j.id, "arrival": j.arrival, "deadline": j.deadline,
             "proc": list(j.proc), "mapping": list(j.mapping)}
            for j in jobset.jobs
        ],
    }


def _check_int(v, what: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{what} must be an integer, got {v!r}")
    return v


def from_dict(d: dict) -> JobSet:
    if not isinstance(d, dict) or d.get("format") != FORMAT_TAG:
        raise ParseError(f"not a {FORMAT_TAG} document")
    if d.get("version") != 1:
        raise ParseError(f"unsupported version {d.get('version')!r}")
    pools = d.get("pipeline")
    if not isinstance(pools, list) or not all(
            isinstance(p, list) and all(isinstance(r, str) for r in p) for p in pools):
        raise ParseError("'pipeline' must be a list of resource-name lists")
    records = d.get("jobs")
    if not isinstance(records, list):
        raise ParseError("'jobs' must be a list")
    try:
        pipeline = Pipeline(tuple(tuple(p) for p in pools))
        jobs = []
        for idx, r in enumerate(records):
            if not isinstance(r, dict) or set(r) != {"id", "arrival", "deadline", "proc", "mapping"}:
                raise ParseError(f"job record {idx} needs exactly id, arrival, deadline, proc, mapping")
            if not isinstance(r["proc"], list) or not isinstance(r["mapping"], list):
                raise ParseError(f"job record {idx}: proc and mapping must be lists")
            if not all(isinstance(x, str) for x in r["mapping"]):
                raise ParseError(f"job record {idx}: resource ids must be strings")
            jobs.append(Job(_check_int(r["id"], "id"), _check_int(r["arrival"], "arrival"),
                            tuple(_check_int(p, "processing time") for p in r["proc"]),
                            _check_int(r["deadline"], "deadline"), tuple(r["mapping"])))
        return JobSet(pipeline, tuple(jobs))
    except ParseError:
        raise
    except ValueError as e:
        raise ParseError(str(e)) from None


def parse_json(text: str) -> JobSet:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    return from_dict(d)


def dump_json(jobset: JobSet) -> str:
    return json.dumps(to_dict(jobset), indent=2) + "\n"


def loads(text: str) -> JobSet:
    """Parse either format; JSON is recognised by a leading ``{``."""
    return parse_json(text) if text.lstrip().startswith("{") else parse_text(text)


def load(path: str | Path) -> JobSet:
    return loads(Path(path).read_text())


def dumps(jobset: JobSet, fmt: str = "text") -> str:
    if fmt == "text":
        return dump_text(jobset)
    if fmt == "json":
        return dump_json(jobset)
    raise ValueError(f"unknown format {fmt!r}")


def save(jobset: JobSet, path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix == ".json" else "text"
    path.write_text(dumps(jobset, fmt))
