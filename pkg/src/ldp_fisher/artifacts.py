"""Deterministic JSON/CSV writers and readers for everything the CLI emits.

Every JSON artifact carries a ``kind`` tag so :func:`read_artifact` can
rebuild the matching object. Non-finite floats are written as the strings
``"inf"``, ``"-inf"`` and ``"nan"`` to keep the files strict JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from .channel import LdpCertificate
from .factorize import ExtremalFactorization
from .finite_fisher import MaxInfoResult
from .uniform_sim import UniformSimReport

KINDS = ("ldp_certificate", "factorization", "fisher_max", "bounds", "uniform_sim")


def _clean(obj: Any) -> Any:
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _revive(obj: Any) -> Any:
    if obj in ("nan", "inf", "-inf"):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _revive(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_revive(v) for v in obj]
    return obj


def dumps(kind: str, payload: dict) -> str:
    if kind not in KINDS:
        raise ValueError(f"unknown artifact kind {kind!r}")
    body = {"kind": kind, **payload}
    return json.dumps(_clean(body), indent=2, sort_keys=True, allow_nan=False) + "\n"


def loads(text: str) -> tuple[str, dict]:
    obj = json.loads(text)
    if not isinstance(obj, dict) or obj.get("kind") not in KINDS:
        raise ValueError("not a recognised artifact: missing or unknown 'kind'")
    obj = dict(obj)
    kind = obj.pop("kind")
    if kind != "ldp_certificate":  # the certificate keeps its own "inf" marker
        obj = _revive(obj)
    return kind, obj


def to_csv(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if row.get(c) is None else _cell(row[c]) for c in columns])
    return buf.getvalue()


def _cell(v: Any) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def read_artifact(source: str | Path) -> Any:
    """Rebuild the object behind a JSON artifact given as text or a path."""
    text = str(source)
    if not text.lstrip().startswith("{"):
        text = Path(source).read_text()
    kind, obj = loads(text)
    if kind == "ldp_certificate":
        return LdpCertificate.from_dict(obj)
    if kind == "factorization":
        return ExtremalFactorization.from_dict(obj)
    if kind == "fisher_max":
        return MaxInfoResult.from_dict(obj)
    if kind == "uniform_sim":
        return UniformSimReport.from_dict(obj)
    return obj["rows"]
