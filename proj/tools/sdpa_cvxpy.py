#!/usr/bin/env python3
"""Solve a sparse SDPA (.dat-s) problem through cvxpy and write SDPA-style output.

Usage: sdpa_cvxpy.py problem.dat-s result.out

Problem: minimize c.x subject to sum_i F_i x_i - F_0 >= 0 (block diagonal).
Output keys: phase.value, objValPrimal, objValDual, xVec, yMat.
"""

import re
import sys
import warnings

import cvxpy as cp
import numpy as np


def read_dats(path):
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip() and ln.strip()[0] not in '"*']
    tokens = lambda s: [t for t in re.split(r"[\s,{}()]+", s) if t]
    m = int(tokens(lines[0])[0])
    nblocks = int(tokens(lines[1])[0])
    sizes = [int(t) for t in tokens(lines[2])[:nblocks]]
    c = np.array([float(t) for t in tokens(lines[3])[:m]])
    mats = [[np.zeros((abs(s), abs(s))) for s in sizes] for _ in range(m + 1)]
    for ln in lines[4:]:
        t = tokens(ln)
        k, b, i, j, v = int(t[0]), int(t[1]) - 1, int(t[2]) - 1, int(t[3]) - 1, float(t[4])
        mats[k][b][i, j] = v
        mats[k][b][j, i] = v
    return m, sizes, c, mats


def fmt_list(values):
    return "{" + ",".join(repr(float(v)) for v in values) + "}"


def main(argv):
    warnings.filterwarnings("ignore", category=UserWarning)
    if len(argv) != 3:
        sys.stderr.write("usage: sdpa_cvxpy.py problem.dat-s result.out\n")
        return 2
    m, sizes, c, mats = read_dats(argv[1])
    x = cp.Variable(m)
    constraints = []
    # Diagonal entries that come in opposite pairs encode equalities; solving
    # them as such avoids a degenerate cone.
    pairs = []
    for b, size in enumerate(sizes):
        if size < 0:
            rows = np.array([np.diag(mats[k][b]) for k in range(m + 1)]).T
            paired, free = [], []
            i = 0
            while i < len(rows):
                if i + 1 < len(rows) and np.any(rows[i]) and np.array_equal(rows[i], -rows[i + 1]):
                    paired.append(i)
                    i += 2
                else:
                    free.append(i)
                    i += 1
            expr = lambda idx: rows[idx, 1:] @ x - rows[idx, 0]
            ineq = expr(free) >= 0 if free else None
            eq = expr(paired) == 0 if paired else None
            pairs.append((free, ineq, paired, eq))
            constraints += [con for con in (ineq, eq) if con is not None]
        else:
            expr = sum(x[i] * mats[i + 1][b] for i in range(m) if np.any(mats[i + 1][b])) - mats[0][b]
            con = expr >> 0
            pairs.append(con)
            constraints.append(con)
    prob = cp.Problem(cp.Minimize(c @ x), constraints)
    # CVXOPT is the more accurate interior-point code but occasionally breaks
    # down; fall back through looser settings to Clarabel.
    attempts = [
        (cp.CVXOPT, dict(abstol=1e-10, reltol=1e-10, feastol=1e-10, kktsolver="robust")),
        (cp.CVXOPT, dict(abstol=1e-9, reltol=1e-9, feastol=1e-9, kktsolver="robust")),
        (cp.CVXOPT, {}),
        (cp.CLARABEL, dict(tol_feas=1e-10, tol_gap_abs=1e-10, tol_gap_rel=1e-10, max_iter=500)),
    ]
    for solver, options in attempts:
        if solver not in cp.installed_solvers():
            continue
        try:
            prob.solve(solver=solver, **options)
        except (cp.error.SolverError, ArithmeticError, ValueError) as e:
            sys.stderr.write(f"{solver}: {e}\n")
            continue
        if prob.status == cp.OPTIMAL:
            break
    if prob.status is None:
        sys.stderr.write("no solver succeeded\n")
        return 1

    phase = {
        cp.OPTIMAL: "pdOPT",
        cp.OPTIMAL_INACCURATE: "pdFEAS",
        cp.INFEASIBLE: "pINF",
        cp.INFEASIBLE_INACCURATE: "pINF",
        cp.UNBOUNDED: "pUNBD",
        cp.UNBOUNDED_INACCURATE: "pUNBD",
    }.get(prob.status, "noINFO")

    with open(argv[2], "w") as out:
        out.write(f"phase.value = {phase}\n")
        if phase not in ("pdOPT", "pdFEAS"):
            return 0
        ys = []
        for b, size in enumerate(sizes):
            if size >= 0:
                ys.append(np.asarray(pairs[b].dual_value))
                continue
            free, ineq, paired, eq = pairs[b]
            y = np.zeros(-size)
            if ineq is not None:
                y[free] = np.asarray(ineq.dual_value).reshape(-1)
            if eq is not None:
                mu = np.asarray(eq.dual_value).reshape(-1)
                # cvxpy's equality dual enters with the opposite sign.
                y[paired] = np.maximum(-mu, 0.0)
                y[np.array(paired) + 1] = np.maximum(mu, 0.0)
            ys.append(y)
        dual_obj = 0.0
        for b, size in enumerate(sizes):
            y = ys[b]
            dual_obj += float(np.dot(np.diag(mats[0][b]), y)) if size < 0 else float(np.sum(mats[0][b] * y))
        out.write(f"objValPrimal = {float(c @ x.value)!r}\n")
        out.write(f"objValDual = {dual_obj!r}\n")
        out.write("xVec = \n" + fmt_list(x.value) + "\n")
        out.write("yMat = \n{\n")
        blocks = []
        for b, size in enumerate(sizes):
            y = ys[b]
            if size < 0:
                blocks.append(fmt_list(y.reshape(-1)))
            else:
                y = 0.5 * (y + y.T)
                blocks.append("{" + ",".join(fmt_list(row) for row in y) + "}")
        out.write(",\n".join(blocks) + "\n}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
