#!/usr/bin/env python3
"""Independent check of exported LP files against a general-purpose solver.

Usage: solve_lp.py <path-to-netsens-binary>

Generates a few workloads with the CLI, exports each one's linear program,
solves it with scipy.optimize.linprog, and compares the optimum against the
CLI's own prediction.  Exits 77 (skip) when scipy is unavailable.
"""

import json
import re
import subprocess
import sys
import tempfile
from pathlib import Path

try:
    import numpy as np
    from scipy.optimize import linprog
except ImportError:
    print("scipy not available; skipping external solver check")
    sys.exit(77)

REL_TOL = 1e-6


def parse_lp(text):
    """Parse the exported LP subset: Minimize t, rows `lhs - ... >= c0`, Bounds."""
    lines = [ln for ln in text.splitlines() if ln and not ln.lstrip().startswith("\\")]
    body = " ".join(lines)
    m = re.search(r"Subject To(.*?)Bounds(.*?)End", body, re.S)
    if not m:
        raise ValueError("missing LP sections")
    subject, bounds = m.group(1), m.group(2)

    names = []          # variable order: discovered
    index = {}

    def var(name):
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    var("t")
    rows = []           # (coeff dict, rhs) meaning sum coeff*x >= rhs
    for row in re.finditer(r"c\d+:\s*([^:]*?)(>=|<=)\s*(-?\d[\d.eE+-]*)", subject):
        expr, sense, rhs = row.group(1), row.group(2), float(row.group(3))
        coeffs = {}
        for term in re.finditer(r"([+-]?)\s*(?:(\d[\d.eE+-]*)\s+)?([A-Za-z_]\w*)", expr):
            sign = -1.0 if term.group(1) == "-" else 1.0
            mag = float(term.group(2)) if term.group(2) else 1.0
            idx = var(term.group(3))
            coeffs[idx] = coeffs.get(idx, 0.0) + sign * mag
        if sense == "<=":
            coeffs = {k: -v for k, v in coeffs.items()}
            rhs = -rhs
        rows.append((coeffs, rhs))

    lb = {}
    for b in re.finditer(r"([A-Za-z_]\w*)\s*>=\s*(-?\d[\d.eE+-]*)", bounds):
        lb[var(b.group(1))] = float(b.group(2))
    return names, rows, lb


def solve_min_t(names, rows, lb):
    n = len(names)
    # linprog minimizes c@x subject to A_ub@x <= b_ub; our rows are >=.
    A, b = [], []
    for coeffs, rhs in rows:
        r = np.zeros(n)
        for k, v in coeffs.items():
            r[k] = -v
        A.append(r)
        b.append(-rhs)
    c = np.zeros(n)
    c[0] = 1.0  # minimize t
    bounds = [(lb.get(i, 0.0), None) for i in range(n)]
    bounds[0] = (None, None)  # t is free
    res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"linprog failed: {res.message}")
    return res.fun


def run(binary, args):
    p = subprocess.run([binary] + args, capture_output=True, text=True)
    if p.returncode != 0:
        raise RuntimeError(f"{' '.join(args)} failed ({p.returncode}): {p.stderr}")
    return p.stdout


def main():
    if len(sys.argv) != 2:
        print("usage: solve_lp.py <binary>")
        return 1
    binary = sys.argv[1]
    work = Path(tempfile.mkdtemp(prefix="netsens_lp_"))
    cfg = work / "model.json"
    cfg.write_text(json.dumps({"L": 1500, "o": 120, "G": {"value": 2, "unit": "ns_per_byte"},
                               "P": 8, "S": 64}))
    cases = [
        ["gen", "--pattern", "pipeline", "--ranks", "4", "--iterations", "3",
         "--msg-size", "32"],
        ["gen", "--pattern", "allreduce_loop", "--ranks", "8", "--iterations", "2",
         "--msg-size", "128"],
        ["gen", "--pattern", "halo2d", "--ranks", "6", "--iterations", "2",
         "--msg-size", "256"],
        ["gen", "--pattern", "random_dag", "--ranks", "5", "--iterations", "3",
         "--seed", "11"],
    ]
    failures = 0
    for i, gen_args in enumerate(cases):
        goal = work / f"case{i}.goal"
        run(binary, gen_args + ["-o", str(goal)])
        lp_text = run(binary, ["export-lp", str(goal), "--config", str(cfg)])
        predicted = json.loads(run(binary, ["predict", str(goal), "--config", str(cfg)]))
        t_cli = predicted["record"]["T_us"] * 1e3  # ns
        t_ext = solve_min_t(*parse_lp(lp_text))
        rel = abs(t_cli - t_ext) / max(1.0, abs(t_cli), abs(t_ext))
        status = "ok" if rel <= REL_TOL else "MISMATCH"
        print(f"case {i}: cli={t_cli:.6f} ns  external={t_ext:.6f} ns  rel={rel:.2e}  {status}")
        if rel > REL_TOL:
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
