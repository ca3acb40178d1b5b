#!/usr/bin/env python3
"""generate -> ingest -> analyze with the built binary, then validate the
report with the reference jsonschema implementation."""

import json
import pathlib
import shutil
import subprocess
import sys

import jsonschema


def run(*args):
    proc = subprocess.run(args, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(map(str, args))} exited {proc.returncode}\n{proc.stderr}")
    return proc.stdout


def main():
    exe, schema_path, work = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)

    schema = json.loads(schema_path.read_text())
    jsonschema.Draft7Validator.check_schema(schema)
    validator = jsonschema.Draft7Validator(schema)

    cases = {
        "full": "job_count = 3000\nseed = 17\n",
        "single": "job_count = 1\n",
        "zipf": "job_count = 800\nseed = 4\nresource.model = zipf\ntasks.model = geometric\n",
    }
    for name, spec in cases.items():
        case = work / name
        case.mkdir()
        (case / "spec.conf").write_text(spec)
        run(exe, "generate", "--spec", case / "spec.conf", "--out-dir", case / "trace")
        run(exe, "ingest", "--trace-root", case / "trace", "--out", case / "ingested")
        out = run(exe, "analyze", "--jobs", case / "ingested" / "jobs.csv",
                  "--out-dir", case / "report", "--seed", "3")
        report = json.loads(pathlib.Path(out.strip()).read_text())
        errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
        for e in errors:
            print(f"{name}: {list(e.path)}: {e.message}")
        if errors:
            sys.exit(1)
        print(f"{name}: report valid")


if __name__ == "__main__":
    main()
