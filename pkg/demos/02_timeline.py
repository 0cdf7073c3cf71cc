# %% [markdown]
# # From notation to time
#
# `build_score` resolves mensuration, perfection, dots and proportions into
# onsets and lengths measured in minims (one minim = one half note).

# %%
from mensura import VariantSelector, build_score, parse_document
from _paths import fixture

doc = parse_document(fixture("nested_proportions").read_bytes())
ir, report = build_score(doc)
for n in ir.voices[0].notes:
    print(f"{str(n.onset):>6}  written {str(n.written):>4}  sounding {str(n.sounding):>5}  ratio {n.ratio}")

# %% [markdown]
# The same shape lasts different lengths under different signs.

# %%
from mensura import NoteShape, nominal_minima
from mensura import cmme
from mensura.model import mensuration_from_cmme

for sign, dot in (("C", False), ("O", False), ("C", True), ("O", True)):
    m = mensuration_from_cmme(cmme.Mensuration(sign=sign, dot=dot))
    print(m.sign_text, {s.name.lower(): str(nominal_minima(s, m)) for s in (NoteShape.SEMIBREVIS, NoteShape.BREVIS)})

# %% [markdown]
# Variant readings: the default reading is inlined, others can be chosen.

# %%
for sel in (VariantSelector.default(), VariantSelector.by_source("B"), VariantSelector.by_source("C")):
    ir, _ = build_score(parse_document(fixture("variants").read_bytes()), sel)
    print(sel, [n.pitch.step for n in ir.voices[0].notes], "ends at", ir.voices[0].end)
