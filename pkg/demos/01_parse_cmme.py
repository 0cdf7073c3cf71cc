# %% [markdown]
# # Reading a CMME file
#
# `parse_document` turns CMME-XML bytes into plain dataclasses: voices,
# sections and one event list per voice. Nothing is interpreted yet.

# %%
from mensura import collect_warnings, parse_document
from _paths import fixture

doc = parse_document(fixture("tempus_perfectum").read_bytes())
print(doc.title, "/", doc.composer)
print([v.name for v in doc.voices])

# %%
for event in doc.sections[0].voice_event_lists[1][:6]:
    print(event)

# %% [markdown]
# Elements the reader does not know are kept as `Unsupported` placeholders
# so the rest of the voice still converts; each one becomes a warning.

# %%
odd = parse_document(fixture("unsupported_element").read_bytes())
for w in collect_warnings(odd):
    print(w.code, w.section, w.voice, w.ordinal, w.message)
