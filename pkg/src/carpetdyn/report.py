"""Seeding, blocked Monte Carlo, experiment records and CSV/JSON emission."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

SCHEMA_VERSION = 1
BLOCK_SIZE = 512
WORKERS_ENV = "CARPETDYN_WORKERS"


def library_version() -> str:
    from carpetdyn import __version__

    return __version__


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Generator for sub-stream ``stream`` of the master ``seed``.

    Derivation is counter based (the stream index is the spawn key), so a
    block's randomness does not depend on which worker draws it or when.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def block_ranges(n: int, block: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """(block_index, start, stop) triples covering ``range(n)``."""
    return [(i, s, min(s + block, n)) for i, s in enumerate(range(0, n, block))]


def blocked_map(fn: Callable[[int, int, int], Any], n: int, *, block: int = BLOCK_SIZE,
                workers: int | None = None) -> list[Any]:
    """Apply ``fn(block_index, start, stop)`` over all blocks, results in block order."""
    blocks = block_ranges(n, block)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(blocks) <= 1:
        return [fn(*b) for b in blocks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *b) for b in blocks]
        return [f.result() for f in futures]


def clt_bar(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return math.inf
    return float(values.std(ddof=1) / math.sqrt(values.size))


def bernoulli_bar(frac: float, n: int) -> float:
    return math.sqrt(max(frac * (1 - frac), 0.0) / n) if n else math.inf


def config_hash(config: dict) -> str:
    text = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class ExperimentReport:
    """A Monte Carlo estimate together with its provenance.

    ``wall_time`` is kept on the object but left out of emitted files unless
    asked for, so that reruns produce byte-identical output.
    """

    name: str
    estimate: float
    clt_bar: float
    n_samples: int
    seed: int
    config_hash: str
    extra: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        d = asdict(self)
        if not include_timing:
            d.pop("wall_time")
        return d


def _jsonable(obj):
    if isinstance(obj, Fraction) or type(obj).__name__ == "mpq":
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def fmt_float(x: float) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(x, ".17g")


def dumps_json(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _dump(_jsonable(obj), 0, indent) + "\n"


def _dump(obj, level: int, indent: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_dump(v, level + 1, indent)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump(v, level + 1, indent) for v in obj) + "]"
        items = [inner + _dump(v, level + 1, indent) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def meta_block(config: dict, seed: int | None) -> dict:
    return {"config_hash": config_hash(config), "seed": seed, "version": library_version()}


def emit_json(payload: dict, path: str | Path | None = None, meta: dict | None = None) -> str:
    doc = {"schema_version": SCHEMA_VERSION}
    if meta is not None:
        doc["meta"] = meta
    doc.update(payload)
    text = dumps_json(doc)
    if path is not None:
        Path(path).write_text(text)
    return text


def emit_csv(header: Sequence[str], rows: Sequence[Sequence[Any]], path: str | Path | None = None,
             meta: dict | None = None) -> str:
    """CSV text; ``meta`` entries go first as ``# key=value`` comment lines."""
    buf = io.StringIO()
    if meta:
        for k, v in meta.items():
            buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool)
                    else ("exact" if v is None else v) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
