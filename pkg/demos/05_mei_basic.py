# %% [markdown]
# # MEI-Basic output
#
# With `mei_basic=True` the CMN writer stays inside the MEI-Basic subset and
# the result is checked against the bundled whitelist.

# %%
from mensura import CmnWriteOptions, build_score, parse_document, to_measured, validate_basic_subset, write_cmn
from _paths import fixture

ir, _ = build_score(parse_document(fixture("coloration").read_bytes()))
ms = to_measured(ir)
full, _ = write_cmn(ms)
basic, report = write_cmn(ms, CmnWriteOptions(mei_basic=True))
print("full:", len(validate_basic_subset(full)), "violations")
for v in validate_basic_subset(full):
    print("  ", v)
print("basic:", validate_basic_subset(basic), report.dropped)
