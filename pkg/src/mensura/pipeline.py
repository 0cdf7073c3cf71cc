"""File-level conversion: parse, build, transform and serialize, with per-file reports."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

from . import cmme
from .cmn import Unrepresentable, to_measured
from .cmn_writer import CmnWriteOptions, write_cmn
from .mensural import MensuralWriteOptions, write_mensural
from .model import EmptyScore, NegativeState, VariantSelector, build_score
from .report import AggregateReport, ConversionReport
from .xmlnode import SerializationFailure, serialize

log = logging.getLogger("mensura")

CMME_SUFFIX = ".cmme.xml"
TARGETS = ("mensural", "cmn")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CliConfig:
    inputs: Tuple[str, ...] = ()
    output_dir: Optional[str] = None
    target: str = "cmn"
    mei_basic: bool = False
    reading: str = "default"
    report_format: str = "json"
    fail_fast: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ConfigError(f"unknown target {self.target!r}")
        if self.target == "mensural" and self.mei_basic:
            raise ConfigError("--mei-basic only applies to --to cmn")
        if self.report_format not in ("text", "json"):
            raise ConfigError(f"unknown report format {self.report_format!r}")

    @property
    def selector(self) -> VariantSelector:
        return VariantSelector.parse(self.reading)


def output_name(path: Path, target: str) -> str:
    name = path.name
    if name.endswith(CMME_SUFFIX):
        stem = name[: -len(CMME_SUFFIX)]
    else:
        stem = path.stem
    return f"{stem}.{target}.mei"


def convert_bytes(data: bytes, cfg: CliConfig, name: str = "") -> Tuple[Optional[bytes], ConversionReport]:
    """Convert CMME-XML bytes; errors end up in the report, never as exceptions."""
    report = ConversionReport(file=name)
    started = time.perf_counter()
    try:
        doc = cmme.parse_document(data)
        ir, built = build_score(doc, cfg.selector)
        report.extend(built)
        if cfg.target == "mensural":
            root, wrote = write_mensural(ir, MensuralWriteOptions())
        else:
            ms = to_measured(ir, cfg.selector, report)
            root, wrote = write_cmn(ms, CmnWriteOptions(mei_basic=cfg.mei_basic))
        report.extend(wrote)
        out = serialize(root) if report.ok else None
    except cmme.CmmeError as e:
        report.error(e.code, str(e))
        out = None
    except (EmptyScore, NegativeState, Unrepresentable, SerializationFailure) as e:
        report.error(getattr(e, "code", type(e).__name__), str(e))
        out = None
    except Exception as e:  # a bug should cost one file, not the batch
        log.exception("internal error converting %s", name)
        report.error("InternalError", f"{type(e).__name__}: {e}")
        out = None
    report.timing = time.perf_counter() - started
    return out, report


def convert_file(path, cfg: CliConfig, name: Optional[str] = None) -> Tuple[Optional[bytes], ConversionReport]:
    path = Path(path)
    name = name or path.name
    try:
        data = path.read_bytes()
    except OSError as e:
        report = ConversionReport(file=name)
        report.error("ReadError", str(e))
        return None, report
    log.debug("converting %s", path)
    return convert_bytes(data, cfg, name)


def _sniff(path: Path) -> bool:
    try:
        with open(path, "rb") as fh:
            head = fh.read(4096)
    except OSError:
        return False
    return b"<Piece" in head


def discover(root) -> List[Path]:
    """``*.cmme.xml`` files under ``root``, plus other ``.xml`` files whose root is ``<Piece>``."""
    root = Path(root)
    if root.is_file():
        return [root]
    found = []
    for p in sorted(root.rglob("*")):
        if not p.is_file():
            continue
        if p.name.endswith(CMME_SUFFIX) or (p.suffix == ".xml" and _sniff(p)):
            found.append(p)
    return found


@dataclass
class BatchResult:
    report: AggregateReport = field(default_factory=AggregateReport)
    written: List[Path] = field(default_factory=list)
    aborted: bool = False


def _jobs(items: Sequence[Tuple[Path, str]], cfg: CliConfig) -> Iterable:
    if cfg.jobs > 1 and not cfg.fail_fast:
        with ThreadPoolExecutor(cfg.jobs) as pool:
            yield from pool.map(lambda it: (it, convert_file(it[0], cfg, it[1])), items)
    else:
        for it in items:
            yield it, convert_file(it[0], cfg, it[1])


def batch(directory, cfg: CliConfig, output_dir=None) -> BatchResult:
    """Convert every CMME file below ``directory``; outputs mirror its subdirectories."""
    directory = Path(directory)
    files = discover(directory)
    base = directory if directory.is_dir() else directory.parent
    items = [(p, p.relative_to(base).as_posix()) for p in files]
    return convert_many(items, cfg, output_dir)


def convert_many(items: Sequence[Tuple[Path, str]], cfg: CliConfig, output_dir=None) -> BatchResult:
    out_dir = Path(output_dir or cfg.output_dir or ".")
    result = BatchResult()
    for (path, name), (data, report) in _jobs(items, cfg):
        result.report.add(report)
        if data is not None:
            target = out_dir / Path(name).parent / output_name(path, cfg.target)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
            result.written.append(target)
        if report.errors:
            log.warning("%s: %d error(s)", name, len(report.errors))
            if cfg.fail_fast:
                result.aborted = True
                break
    return result


def log_level_from_env() -> int:
    value = os.environ.get("MENSURA_LOG", "WARNING").upper()
    if value.isdigit():
        return int(value)
    return getattr(logging, value, logging.WARNING) if isinstance(getattr(logging, value, None), int) else logging.WARNING
