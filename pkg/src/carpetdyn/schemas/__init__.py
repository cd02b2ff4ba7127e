"""JSON schemas shipped with the package."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema


class SchemaError(ValueError):
    pass


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    return json.loads(resources.files(__name__).joinpath(f"{name}.json").read_text())


def validate_document(doc, name: str) -> None:
    try:
        jsonschema.validate(doc, load_schema(name))
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{name} document invalid: {exc.message}") from exc
