"""Experiment reports: rows of theory vs empirical values, CSV and JSON output."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

PASS, FAIL, THEORY, INFO = "pass", "fail", "theory-only", "info"


def fmt(x) -> str:
    """Round-trip float formatting; ``nan``, ``inf`` and ``-inf`` spelled as such."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


@dataclass
class Row:
    quantity: str
    grid: tuple[float, ...]
    theory: float
    empirical: float = math.nan
    spread: float = math.nan
    n: int = 0
    trials: int = 0
    verdict: str = THEORY

    def cells(self) -> list[str]:
        return [
            self.quantity,
            ";".join(fmt(g) for g in self.grid),
            fmt(self.theory),
            fmt(self.empirical),
            fmt(self.spread),
            str(self.n),
            str(self.trials),
            self.verdict,
        ]


def verdict(ok: bool) -> str:
    return PASS if ok else FAIL


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if isinstance(o, float) and not math.isfinite(o):
        return fmt(o)
    try:
        return o.tolist()
    except AttributeError:
        return str(o)


def _clean(obj):
    """Replace non-finite floats by their string spelling so JSON stays strict."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return fmt(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(_clean(config)).encode()).hexdigest()


@dataclass
class ExperimentReport:
    experiment: str
    law: dict
    rows: list[Row] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    HEADER = ["quantity", "grid", "theory", "empirical", "spread", "n", "trials", "verdict"]

    @property
    def pass_count(self) -> int:
        return sum(r.verdict == PASS for r in self.rows)

    @property
    def fail_count(self) -> int:
        return sum(r.verdict == FAIL for r in self.rows)

    @property
    def ok(self) -> bool:
        return self.fail_count == 0

    def rows_for(self, quantity: str) -> list[Row]:
        return [r for r in self.rows if r.quantity == quantity]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for r in self.rows:
            w.writerow(r.cells())
        return buf.getvalue()

    def summary(self) -> dict:
        out = {
            "experiment": self.experiment,
            "law": self.law,
            "pass_count": self.pass_count,
            "fail_count": self.fail_count,
            "config_hash": config_hash(self.config),
            "config": self.config,
        }
        if self.extra:
            out["extra"] = self.extra
        return _clean(out)

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2) + "\n"
