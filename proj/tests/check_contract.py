"""Validate dumped service payloads against the shared session API schema."""

import json
import pathlib
import sys

import jsonschema

KINDS = {"round": "round", "state": "state", "final": "final", "error": "error", "health": "health"}


def main(schema_path: str, payload_dir: str) -> int:
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    files = sorted(pathlib.Path(payload_dir).glob("*.json"))
    if not files:
        print(f"no payloads in {payload_dir}")
        return 1
    bad = 0
    for f in files:
        kind = KINDS[f.stem.split("_")[0]]
        validator = jsonschema.Draft202012Validator(
            {"$schema": schema["$schema"], "$defs": schema["$defs"], "$ref": f"#/$defs/{kind}"})
        errors = list(validator.iter_errors(json.loads(f.read_text())))
        for e in errors[:5]:
            print(f"{f.name}: {'/'.join(map(str, e.absolute_path))}: {e.message}")
        bad += bool(errors)
        print(f"{f.name}: {'FAIL' if errors else 'ok'} ({kind})")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
