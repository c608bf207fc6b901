"""
End-to-end experiment runs
==========================

The same pipeline the command line uses: sample a medium, learn it from
probes, design gates on the estimate, then simulate and analyse photon
counts. Runs are cached and deterministic.
"""

# %%
import json
import tempfile
from pathlib import Path

from mmfnet.experiments import run

out = Path(tempfile.mkdtemp())
manifest = run({"experiment": "routing-single-channel", "N": 16, "M": 36, "out": str(out)})
for rec in manifest.records:
    print(rec["gate"], rec["users"], "F = %.3f +- %.3f" % (rec["F"], rec["F_err"]))

# %%
# Stage timings live only in the manifest; results.json is byte-reproducible.
print(json.dumps(manifest.timings, indent=1))

# %%
# Drift of the fibre after the gates were programmed degrades the routed states.
run({"experiment": "stability", "N": 16, "M": 36, "exact": True, "out": str(out / "drift")})
print((out / "drift" / "stability.csv").read_text().splitlines()[:3])
