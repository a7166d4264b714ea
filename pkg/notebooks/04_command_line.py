# %% [markdown]
# # The command-line workflow
#
# The same pipeline from the shell, driven here through `main` so the
# notebook stays self-contained. Every command also runs as
# `ginidebias <subcommand> ...`.

# %%
import json
import tempfile
from pathlib import Path

from ginidebias.cli import main

work = Path(tempfile.mkdtemp())

# %%
main(["synth", "--classes", "4", "--counts", "150", "--head-bias", "2.5",
      "--head-classes", "0", "--seed", "1", "--out", str(work)])

# %%
main(["optimize", "--input", str(work / "synthetic.csv"), "--seed", "1",
      "--out", str(work / "run")])

# %% [markdown]
# The artifact carries the map, the learned selection, and a manifest with
# the resolved configuration and input hashes.

# %%
artifact = json.loads((work / "run" / "correction.json").read_text())
print(artifact["xi"], artifact["manifest"]["config"]["anneal"])

# %%
main(["apply", "--input", str(work / "run" / "test_split.csv"),
      "--artifact", str(work / "run" / "correction.json"), "--out", str(work / "applied")])

# %%
main(["report", "--before", str(work / "run" / "original_report.json"),
      "--after", str(work / "applied" / "apply_report.json")])
