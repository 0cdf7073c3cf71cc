# %% [markdown]
# # Barred transcription
#
# `to_measured` chooses a meter from the mensuration signs, bars every voice,
# splits notes across barlines with ties and turns proportions into tuplets.

# %%
from mensura import build_score, decompose_duration, infer_meter_map, parse_document, to_measured
from _paths import fixture

ir, _ = build_score(parse_document(fixture("cross_bar_tuplet").read_bytes()))
print(infer_meter_map(ir).entries)

ms = to_measured(ir)
for m in ms.voices[0]:
    print(f"bar {m.index}:", [(n.dur, n.dots, n.tie, str(n.ratio)) for n in m.notes])

# %% [markdown]
# Lengths that need more than one symbol are split into the fewest possible
# tied values, longest first.

# %%
for d in (3, 5, 7, 8, 11):
    print(d, decompose_duration(d))

# %% [markdown]
# Signs in a subset of the voices do not change the meter; the report says so.

# %%
from mensura import ConversionReport

report = ConversionReport()
ir, _ = build_score(parse_document(fixture("conflicting_mensurations").read_bytes()))
print(infer_meter_map(ir, report).entries, report.codes("notes"))
