# %% [markdown]
# # Mensural MEI
#
# The mensural writer keeps the original notation: note shapes, ligatures,
# coloration and the variant apparatus. Features with no MEI element are kept
# with a typed element so nothing is silently lost.

# %%
from mensura import build_score, parse_document, serialize, write_mensural
from _paths import fixture

ir, _ = build_score(parse_document(fixture("ligatures").read_bytes()))
root, report = write_mensural(ir)
print(serialize(root).decode()[:1200])
print([w.code for w in report.warnings])

# %%
ir, _ = build_score(parse_document(fixture("variants").read_bytes()))
root, _ = write_mensural(ir)
app = root.find("app")
for reading in app.elements():
    print(reading.name, reading.get("source"), reading.get("type"), [n.get("pname") for n in reading.iter("note")])
