"""Validate config files against schema/experiment.schema.json.

usage: check_schema.py SCHEMA VALID_DIR INVALID_DIR
Every *.json in VALID_DIR must pass, every one in INVALID_DIR must fail.
"""
import json
import pathlib
import sys

import jsonschema


def main() -> int:
    schema = json.loads(pathlib.Path(sys.argv[1]).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    v = jsonschema.Draft202012Validator(schema)
    bad = 0
    for p in sorted(pathlib.Path(sys.argv[2]).glob("*.json")):
        errs = list(v.iter_errors(json.loads(p.read_text())))
        if errs:
            bad += 1
            print(f"{p}: unexpected schema error: {errs[0].message}")
    for p in sorted(pathlib.Path(sys.argv[3]).glob("*.json")):
        if v.is_valid(json.loads(p.read_text())):
            bad += 1
            print(f"{p}: expected a schema error")
    print("schema check:", "ok" if bad == 0 else f"{bad} problem(s)")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
