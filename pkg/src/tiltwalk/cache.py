"""On-disk cache of exact tables in a versioned decimal text format.

An entry holds a ``HeightResolvedTable`` and its ``BridgeTables``.  The key
is a sha256 over (model, weight, n_max, format version), so any parameter
change misses.  Writes go to a temporary file in the cache directory and
are moved into place with ``os.replace``.  A corrupt or truncated entry is
reported with a warning and treated as a miss.

Layout (see FORMATS.md)::

    tiltwalk-table <FORMAT_VERSION>
    model <descriptor>
    weight <descriptor>
    n_max <int>
    base <int>
    t0_units <int>
    indicator <0|1>
    tags <int>
    array <name> <dim0> <dim1> <dim2>
    <dim1 * dim2 space-separated decimal integers>   # one line per index of dim0
    ...
    end <sha256 of everything above>
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .tables import BridgeTables, HeightResolvedTable, _zeros, bin_weight_matrix

FORMAT_VERSION = 1
MAGIC = "tiltwalk-table"
ENV_CACHE_DIR = "TILTWALK_CACHE_DIR"
ARRAYS = ("counts", "a", "d", "h", "r", "b")


class CacheCorruptWarning(UserWarning):
    pass


class CacheFormatError(ValueError):
    pass


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_CACHE_DIR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "tiltwalk"


def cache_key(model: str, weight: str, n_max: int) -> str:
    text = f"{MAGIC}\n{FORMAT_VERSION}\n{model}\n{weight}\n{int(n_max)}\n"
    return hashlib.sha256(text.encode()).hexdigest()


def dumps(table: HeightResolvedTable, bridges: BridgeTables) -> str:
    lines = [
        f"{MAGIC} {FORMAT_VERSION}",
        f"model {table.model}",
        f"weight {table.weight}",
        f"n_max {table.n_max}",
        f"base {table.base}",
        f"t0_units {table.t0_units}",
        f"indicator {int(table.indicator)}",
        f"tags {table.tags}",
    ]
    for name in ARRAYS:
        arr = table.counts if name == "counts" else getattr(bridges, name)
        d0, d1, d2 = arr.shape
        lines.append(f"array {name} {d0} {d1} {d2}")
        for row in arr.reshape(d0, d1 * d2):
            lines.append(" ".join(str(int(x)) for x in row))
    body = "\n".join(lines) + "\n"
    return body + f"end {hashlib.sha256(body.encode()).hexdigest()}\n"


def loads(text: str) -> tuple[HeightResolvedTable, BridgeTables]:
    """Parse an entry; raises ``CacheFormatError`` on any inconsistency."""
    idx = text.rfind("end ")
    if idx < 0 or not text.endswith("\n"):
        raise CacheFormatError("missing end line")
    body, digest = text[:idx], text[idx + 4 :].strip()
    if hashlib.sha256(body.encode()).hexdigest() != digest:
        raise CacheFormatError("checksum mismatch")
    lines = body.splitlines()
    try:
        magic, version = lines[0].split()
        if magic != MAGIC or int(version) != FORMAT_VERSION:
            raise CacheFormatError(f"unsupported header {lines[0]!r}")
        head = {}
        for ln in lines[1:8]:
            key, _, val = ln.partition(" ")
            head[key] = val
        meta = dict(model=head["model"], weight=head["weight"], n_max=int(head["n_max"]),
                    base=int(head["base"]), t0_units=int(head["t0_units"]), indicator=head["indicator"] == "1")
        tags = int(head["tags"])
        arrays = {}
        pos = 8
        for name in ARRAYS:
            kw, got, *dims = lines[pos].split()
            if kw != "array" or got != name:
                raise CacheFormatError(f"expected array {name} at line {pos + 1}")
            d0, d1, d2 = map(int, dims)
            arr = _zeros((d0, d1 * d2))
            for i in range(d0):
                vals = lines[pos + 1 + i].split()
                if len(vals) != d1 * d2:
                    raise CacheFormatError(f"row {i} of {name} has {len(vals)} entries")
                arr[i, :] = [int(v) for v in vals]
            arrays[name] = arr.reshape(d0, d1, d2)
            pos += 1 + d0
        if pos != len(lines):
            raise CacheFormatError("trailing content")
    except (IndexError, KeyError, ValueError) as exc:
        if isinstance(exc, CacheFormatError):
            raise
        raise CacheFormatError(str(exc)) from exc
    meta["bin_weights"] = bin_weight_matrix(meta["weight"], meta["n_max"], tags)
    table = HeightResolvedTable(counts=arrays.pop("counts"), **meta)
    bridges = BridgeTables(**arrays, **meta)
    return table, bridges


class TableCache:
    def __init__(self, directory: str | os.PathLike | None = None):
        self.directory = Path(directory) if directory is not None else default_cache_dir()

    def path(self, model: str, weight: str, n_max: int) -> Path:
        return self.directory / f"{cache_key(model, weight, n_max)}.tbl"

    def lookup(self, model: str, weight: str, n_max: int):
        """Return ``(table, bridges)`` or ``None`` on a miss or a corrupt entry."""
        p = self.path(model, weight, n_max)
        if not p.exists():
            return None
        try:
            table, bridges = loads(p.read_text())
        except (CacheFormatError, UnicodeDecodeError) as exc:
            warnings.warn(f"ignoring corrupt cache entry {p}: {exc}", CacheCorruptWarning, stacklevel=2)
            return None
        if (table.model, table.weight, table.n_max) != (model, weight, n_max):
            warnings.warn(f"ignoring cache entry {p} with mismatched header", CacheCorruptWarning, stacklevel=2)
            return None
        return table, bridges

    def store(self, table: HeightResolvedTable, bridges: BridgeTables) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        p = self.path(table.model, table.weight, table.n_max)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".tbl")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(dumps(table, bridges))
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, p)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return p

    def get_or_compute(self, model: str, weight: str, n_max: int, compute):
        """Return cached tables, or call ``compute()`` and store its result.  Second item: hit flag."""
        hit = self.lookup(model, weight, n_max)
        if hit is not None:
            return hit, True
        table, bridges = compute()
        self.store(table, bridges)
        return (table, bridges), False


def tables_equal(x: tuple, y: tuple) -> bool:
    """Bit-exact comparison of two ``(table, bridges)`` pairs."""
    (t1, b1), (t2, b2) = x, y
    meta = ("model", "weight", "n_max", "base", "t0_units", "indicator")
    if any(getattr(t1, k) != getattr(t2, k) for k in meta):
        return False
    if not np.array_equal(t1.bin_weights, t2.bin_weights):
        return False
    pairs = [(t1.counts, t2.counts)] + [(getattr(b1, n), getattr(b2, n)) for n in ARRAYS[1:]]
    return all(p.shape == q.shape and all(int(u) == int(v) for u, v in zip(p.ravel(), q.ravel())) for p, q in pairs)


def cache_lookup(model: str, weight: str, n_max: int, directory=None):
    """``(table, bridges)`` for the key, or ``None`` on a miss or a corrupt entry."""
    return TableCache(directory).lookup(model, weight, n_max)


def cache_store(table: HeightResolvedTable, bridges: BridgeTables, directory=None) -> Path:
    return TableCache(directory).store(table, bridges)
