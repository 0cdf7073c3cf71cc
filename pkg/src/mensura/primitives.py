"""Pitch and note-shape primitives shared by the reader, model and writers."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Optional

# Exact duration currency. Minima on the mensural side, half notes on the CMN side.
RationalDuration = Fraction

STEPS = "CDEFGAB"
_SEMITONES = (0, 2, 4, 5, 7, 9, 11)
ACCIDENTALS = ("flat", "natural", "sharp")
_ALTER = {"flat": -1, "natural": 0, "sharp": 1, None: 0}
MEI_ACCID = {"flat": "f", "natural": "n", "sharp": "s"}


class NoteShape(IntEnum):
    """Mensural note shapes, ordered by nominal size."""

    SEMIFUSA = 0
    FUSA = 1
    SEMIMINIMA = 2
    MINIMA = 3
    SEMIBREVIS = 4
    BREVIS = 5
    LONGA = 6
    MAXIMA = 7

    @property
    def mei_name(self) -> str:
        return self.name.lower()

    @classmethod
    def from_name(cls, text: str) -> "NoteShape":
        """Look a shape up by its CMME/MEI name, case-insensitively.

        Raises ``KeyError`` for anything that is not one of the eight shapes.
        """
        return cls[text.strip().upper()]


@dataclass(frozen=True)
class Pitch:
    step: str
    octave: int
    accidental: Optional[str] = None

    def __post_init__(self):
        if self.step not in STEPS:
            raise ValueError(f"invalid pitch step {self.step!r}")
        if self.accidental not in (None,) + ACCIDENTALS:
            raise ValueError(f"invalid accidental {self.accidental!r}")

    @property
    def diatonic(self) -> int:
        return self.octave * 7 + STEPS.index(self.step)

    @property
    def midi(self) -> int:
        """Semitone number with C4 = 60, accidental included."""
        return 12 * (self.octave + 1) + _SEMITONES[STEPS.index(self.step)] + _ALTER[self.accidental]

    @property
    def pname(self) -> str:
        return self.step.lower()

    def __str__(self):
        acc = {"flat": "b", "sharp": "#", "natural": "n", None: ""}[self.accidental]
        return f"{self.step}{acc}{self.octave}"
