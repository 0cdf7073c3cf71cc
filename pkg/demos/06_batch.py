# %% [markdown]
# # Converting a folder
#
# `batch` walks a directory, converts every CMME file and collects one report
# per file. A broken file costs only itself. The `mensura convert` command
# is a thin wrapper around this.

# %%
import tempfile
from pathlib import Path

from mensura import CliConfig, batch
from _paths import FIXTURES

with tempfile.TemporaryDirectory() as out:
    result = batch(FIXTURES, CliConfig(target="cmn", mei_basic=True), out)
    print(result.report.to_text())
    print(sorted(p.name for p in Path(out).iterdir())[:5])
