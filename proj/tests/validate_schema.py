"""Validates a JSON document against one of the schemas in docs/.

usage: validate_schema.py <schema> <document>
"""

import json
import pathlib
import sys

from jsonschema import Draft202012Validator
from referencing import Registry, Resource


def main():
    schema_path, doc_path = map(pathlib.Path, sys.argv[1:3])
    registry = Registry()
    for p in schema_path.parent.glob("*.schema.json"):
        registry = registry.with_resource(p.name, Resource.from_contents(json.loads(p.read_text())))
    schema = json.loads(schema_path.read_text())
    Draft202012Validator.check_schema(schema)
    errors = list(Draft202012Validator(schema, registry=registry).iter_errors(json.loads(doc_path.read_text())))
    for e in errors[:10]:
        print(f"{doc_path}: {'/'.join(map(str, e.absolute_path))}: {e.message}", file=sys.stderr)
    if errors:
        sys.exit(1)
    print(f"{doc_path.name} conforms to {schema_path.name}")


if __name__ == "__main__":
    main()
