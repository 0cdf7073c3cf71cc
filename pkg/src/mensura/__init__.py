"""Conversion of CMME-XML mensural encodings to MEI (mensural and barred CMN)."""

from .cmme import (
    CmmeDocument, CmmeError, MalformedXml, NotCmme, SchemaViolation, collect_warnings, parse_document,
    parse_event,
)
from .cmn import (
    MeasuredScore, MeterMap, MeterSig, Unrepresentable, bar_voice, decompose_duration, flatten_editorial,
    infer_meter_map, mensur_to_meter, normalize_clef, proportions_to_tuplets, to_measured,
)
from .cmn_writer import CmnWriteOptions, validate_basic_subset, write_cmn
from .mensural import MensuralWriteOptions, duration_attributes, write_mensural
from .model import (
    EmptyScore, Mensuration, NegativeState, ScoreIR, VariantSelector, build_score, nominal_minima,
    select_reading, sounding_minima, written_minima,
)
from .pipeline import CliConfig, batch, convert_bytes, convert_file
from .primitives import NoteShape, Pitch, RationalDuration
from .report import AggregateReport, ConversionReport, aggregate
from .xmlnode import SerializationFailure, XmlNode, serialize

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
