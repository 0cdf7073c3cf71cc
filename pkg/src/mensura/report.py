"""Conversion reports: warnings, errors, dropped features and counts per file."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional

COUNT_KEYS = ("events", "notes", "measures", "tuplets", "ties")


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    location: str = ""

    def to_dict(self) -> dict:
        return {"code": self.code, "location": self.location, "message": self.message}


@dataclass
class ConversionReport:
    """Structured record of everything a conversion noticed.

    Reports are mutable accumulators while a file is being converted; use
    :meth:`merge` (or :func:`aggregate`) to fold several of them together.
    """

    file: str = ""
    counts: Counter = field(default_factory=Counter)
    warnings: List[Issue] = field(default_factory=list)
    errors: List[Issue] = field(default_factory=list)
    dropped: List[str] = field(default_factory=list)
    notes: List[Issue] = field(default_factory=list)
    timing: float = 0.0

    def warn(self, code: str, message: str, location: str = "") -> None:
        self.warnings.append(Issue(code, message, location))

    def error(self, code: str, message: str, location: str = "") -> None:
        self.errors.append(Issue(code, message, location))

    def note(self, code: str, message: str, location: str = "") -> None:
        self.notes.append(Issue(code, message, location))

    def drop(self, feature: str) -> None:
        if feature not in self.dropped:
            self.dropped.append(feature)

    def extend(self, other: "ConversionReport") -> None:
        """Absorb another report about the same file."""
        self.counts.update(other.counts)
        self.warnings.extend(other.warnings)
        self.errors.extend(other.errors)
        self.notes.extend(other.notes)
        for d in other.dropped:
            self.drop(d)
        self.timing += other.timing

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self, kind: str = "warnings") -> List[str]:
        return [i.code for i in getattr(self, kind)]

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "counts": {k: int(self.counts.get(k, 0)) for k in sorted(set(COUNT_KEYS) | set(self.counts))},
            "warnings": [i.to_dict() for i in self.warnings],
            "errors": [i.to_dict() for i in self.errors],
            "notes": [i.to_dict() for i in self.notes],
            "dropped": sorted(self.dropped),
            "timing": round(self.timing, 6),
        }


@dataclass
class AggregateReport:
    files: Dict[str, ConversionReport] = field(default_factory=dict)

    def add(self, report: ConversionReport) -> None:
        self.files[report.file] = report

    @property
    def totals(self) -> Counter:
        out = Counter({k: 0 for k in COUNT_KEYS})
        for r in self.files.values():
            out.update(r.counts)
        return out

    @property
    def error_count(self) -> int:
        return sum(len(r.errors) for r in self.files.values())

    @property
    def warning_count(self) -> int:
        return sum(len(r.warnings) for r in self.files.values())

    def merge(self, other: "AggregateReport") -> "AggregateReport":
        out = AggregateReport(dict(self.files))
        out.files.update(other.files)
        return out

    def to_dict(self, timing: bool = True) -> dict:
        files = []
        for name in sorted(self.files):
            d = self.files[name].to_dict()
            if not timing:
                d.pop("timing")
            files.append(d)
        return {
            "files": files,
            "totals": {
                **{k: int(v) for k, v in sorted(self.totals.items())},
                "errors": self.error_count,
                "warnings": self.warning_count,
                "files": len(self.files),
            },
        }

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True, ensure_ascii=False)

    def to_text(self) -> str:
        lines = []
        for name in sorted(self.files):
            r = self.files[name]
            status = "ok" if r.ok else "FAILED"
            c = r.counts
            lines.append(
                f"{name}: {status} notes={c['notes']} measures={c['measures']} "
                f"tuplets={c['tuplets']} ties={c['ties']} warnings={len(r.warnings)} errors={len(r.errors)}"
            )
            for e in r.errors:
                lines.append(f"  error [{e.code}] {e.location} {e.message}".rstrip())
        t = self.totals
        lines.append(
            f"total: {len(self.files)} files, {t['notes']} notes, "
            f"{self.warning_count} warnings, {self.error_count} errors"
        )
        return "\n".join(lines)


def aggregate(reports, into: Optional[AggregateReport] = None) -> AggregateReport:
    out = into if into is not None else AggregateReport()
    for r in reports:
        out.add(r)
    return out
