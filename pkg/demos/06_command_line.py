"""
The command-line front end
==========================

Runs the ``pcrit`` commands in-process. The same calls work from a shell,
for example ``pcrit capacity --family z --p 2 --radii 1,3,7,15 --format csv``.
"""

import json
import tempfile
from pathlib import Path

from pcrit import ExhaustionSpec, build_family
from pcrit.cli import main
from pcrit.jsonio import save_graph

print("exit", main(["capacity", "--family", "z", "--p", "2", "--radii", "1,3,7,15", "--format", "csv"]))

with tempfile.TemporaryDirectory() as tmp:
    g, _ = build_family(ExhaustionSpec("z", [3]), 0)
    graph = Path(tmp) / "path.json"
    save_graph(g, graph)
    interior = Path(tmp) / "K.json"
    interior.write_text(json.dumps([0, 1, 2]))
    out = Path(tmp) / "eigen.json"
    code = main(["eigen", "--graph", str(graph), "--interior", str(interior), "--p", "2.5", "--out", str(out)])
    print("eigen exit", code, "lambda0 =", json.loads(out.read_text())["lambda0"])

# a refusal is a JSON report with exit status 1
print("exit", main(["green", "--family", "z", "--p", "2", "--radii", "1,3,7,15"]))
