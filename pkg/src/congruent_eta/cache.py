"""On-disk cache for Mobius segments and eta results.

Entries are keyed by the full parameter tuple plus the height convention.
Every hit is re-verified cheaply (segment checksum, on-curve witness) and a
bad entry is dropped, logged, and recomputed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path

import numpy as np

from .curve import DEFAULT_MAX_DEPTH, EtaResult, EtaStatus, eta, is_torsion, on_curve
from .reports import HEIGHT_CONVENTION, atomic_write
from .sieve import MobiusSegment, mobius_segment

log = logging.getLogger(__name__)

CACHE_ENV = "CONGRUENT_ETA_CACHE"


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "congruent_eta"))


def cache_key(kind: str, **params) -> str:
    blob = json.dumps({"kind": kind, "convention": HEIGHT_CONVENTION, **params}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


class ResultCache:
    def __init__(self, root: str | os.PathLike | None = None):
        self.root = Path(root) if root is not None else default_cache_dir()
        self.hits = 0
        self.misses = 0

    def _path(self, kind: str, key: str, suffix: str) -> Path:
        d = self.root / kind
        d.mkdir(parents=True, exist_ok=True)
        return d / f"{key}{suffix}"

    def _discard(self, path: Path, why: str) -> None:
        log.warning("discarding corrupt cache entry %s: %s", path, why)
        path.unlink(missing_ok=True)

    # -- Mobius segments --------------------------------------------------

    def mobius_segment(self, lo: int, hi: int) -> MobiusSegment:
        key = cache_key("mobius", lo=lo, hi=hi)
        path = self._path("mobius", key, ".json")
        if path.exists():
            try:
                obj = json.loads(path.read_text())
                seg = MobiusSegment(lo, hi, np.array(obj["values"], dtype=np.int8))
                if len(seg.values) != hi - lo + 1 or seg.checksum() != obj["checksum"]:
                    raise ValueError("checksum mismatch")
                self.hits += 1
                return seg
            except (ValueError, KeyError, TypeError) as exc:
                self._discard(path, str(exc))
        self.misses += 1
        seg = mobius_segment(lo, hi)
        atomic_write(path, json.dumps({"values": seg.values.tolist(), "checksum": seg.checksum()}))
        return seg

    # -- eta results ------------------------------------------------------

    def eta(self, d: int, B: int, tol: float, max_depth: int = DEFAULT_MAX_DEPTH) -> EtaResult:
        key = cache_key("eta", d=d, B=B, tol=repr(float(tol)), max_depth=max_depth)
        path = self._path("eta", key, ".json")
        if path.exists():
            try:
                res = EtaResult.from_json(json.loads(path.read_text()))
                if res.d != d or res.search_bound != B:
                    raise ValueError("parameters do not match key")
                if res.status is EtaStatus.FOUND:
                    w = res.witness
                    if w is None or not on_curve(d, w) or is_torsion(d, w):
                        raise ValueError("witness fails the on-curve check")
                self.hits += 1
                return res
            except (ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
                self._discard(path, str(exc))
        self.misses += 1
        res = eta(d, B, tol, max_depth)
        atomic_write(path, json.dumps(res.to_json(), sort_keys=True))
        return res
