"""Batch driver: convergence and iteration-count tables, invariant checks,
and the nested-versus-monolithic comparison."""

import argparse
import os
import sys

import numpy as np

from . import verify
from .solver import (INNER_KINDS, OUTER_KINDS, Problem, SolveConfig,
                     canonical_pair, combo_label, parse_combo,
                     solve_coupled, solve_monolithic_oracle)

ENV_OUTDIR = "STOKESDARCY_OUTDIR"
DEFAULT_NS = (8, 16, 32, 64, 128)
DIRECT_CAP = 64  # memory guard for combos with direct factorizations


def read_config(path):
    """Plain-text 'key = value' configuration; 'combo' lines accumulate."""
    values = {}
    combos = []
    with open(path) as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("bad config line %r" % raw.strip())
            key, val = (part.strip() for part in line.split("=", 1))
            if key == "combo":
                combos.append(val)
            else:
                values[key] = val
    if combos:
        values["combo"] = combos
    return values


def _parse_args(argv):
    ap = argparse.ArgumentParser(
        prog="stokesdarcy",
        description="Coupled free-flow/porous solver experiment driver")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--pair", default=None,
                       help="element pair (mini-bdm1, p2isop1-bdm1, "
                            "taylorhood-rt1); default mini-bdm1")
        p.add_argument("--nmin", type=int, default=None)
        p.add_argument("--nmax", type=int, default=None)
        p.add_argument("--combo", action="append", default=None,
                       metavar="OUTER:INNER",
                       help="repeatable; outer in %s, inner in %s"
                            % (OUTER_KINDS, INNER_KINDS))
        p.add_argument("--outer-rtol", type=float, default=None)
        p.add_argument("--inner-rtol", type=float, default=None)
        p.add_argument("--format", choices=("csv", "markdown"), default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None)

    for name in ("converge", "iterations", "check", "oracle"):
        common(sub.add_parser(name))
    return ap.parse_args(argv)


class ExperimentSpec:
    """Resolved experiment parameters (defaults, config file, flags)."""

    def __init__(self, args):
        cfg = read_config(args.config) if args.config else {}

        def pick(flag, key, cast, default):
            if flag is not None:
                return flag
            if key in cfg:
                return cast(cfg[key])
            return default

        self.pair = canonical_pair(pick(args.pair, "pair", str,
                                        "mini-bdm1"))
        self.nmin = pick(args.nmin, "nmin", int, DEFAULT_NS[0])
        nmax_given = args.nmax is not None or "nmax" in cfg
        self.nmax = pick(args.nmax, "nmax", int, DEFAULT_NS[-1])
        self.nmax_explicit = nmax_given
        self.outer_rtol = pick(args.outer_rtol, "outer_rtol", float, 1e-6)
        self.inner_rtol = pick(args.inner_rtol, "inner_rtol", float, 1e-2)
        self.format = pick(args.format, "format", str, "csv")
        self.out = pick(args.out, "out", str, None)
        self.seed = pick(args.seed, "seed", int, 0)
        combos = args.combo if args.combo else cfg.get("combo")
        if combos is None:
            combos = ["direct:pd0"]
        if isinstance(combos, str):
            combos = [combos]
        self.combos = [parse_combo(c) for c in combos]

    def n_values(self):
        ns = [n for n in DEFAULT_NS if self.nmin <= n <= self.nmax]
        if not ns:
            raise ValueError("empty mesh-size range [%d, %d]"
                             % (self.nmin, self.nmax))
        has_direct = any("direct" in c or "pd0" in c or "hx" == c[1]
                         for c in self.combos)
        if has_direct and not self.nmax_explicit:
            capped = [n for n in ns if n <= DIRECT_CAP]
            if capped != ns:
                sys.stderr.write(
                    "warning: capping the mesh range at n=%d for combos "
                    "with direct factorizations (pass --nmax to "
                    "override)\n" % DIRECT_CAP)
                ns = capped
        return ns

    def out_path(self, default_name):
        outdir = os.environ.get(ENV_OUTDIR, ".")
        if self.out:
            return self.out if os.path.isabs(self.out) \
                else os.path.join(outdir, self.out)
        return os.path.join(outdir, default_name)


def _fmt(x):
    return "%.3e" % x


def _fmt_rate(r):
    return "-" if r is None or np.isnan(r) else "%.2f" % r


def write_table(path, header, rows, fmt):
    """CSV (comma, LF, header) or markdown table."""
    with open(path, "w", newline="") as f:
        if fmt == "csv":
            f.write(",".join(header) + "\n")
            for row in rows:
                f.write(",".join(row) + "\n")
        else:
            f.write("| " + " | ".join(header) + " |\n")
            f.write("|" + "|".join("---" for _ in header) + "|\n")
            for row in rows:
                f.write("| " + " | ".join(row) + " |\n")


def run_convergence(spec):
    """Error/rate table over the mesh family; returns (path, all_converged)."""
    header = ["DOF", "h", "e(u_S)", "r(u_S)", "e(p_S)", "r(p_S)",
              "e(u_D)", "r(u_D)", "e(p_D)", "r(p_D)"]
    rows = []
    ok = True
    prev = None
    for n in spec.n_values():
        problem = Problem(spec.pair, n)
        config = SolveConfig(spec.pair, n, outer_rtol=spec.outer_rtol,
                             inner_rtol=spec.inner_rtol,
                             combo=spec.combos[0], seed=spec.seed)
        report = solve_coupled(problem, config)
        if not report.converged:
            ok = False
            rows.append([str(problem.dof_total), "1/%d" % n, "FAILED"]
                        + [""] * 7)
            prev = None
            continue
        rec = verify.compute_errors(report)
        rates = verify.compute_rates(prev, rec) if prev is not None else None
        rr = rates.as_tuple() if rates else (None,) * 4
        rows.append([str(rec.dof), "1/%d" % n,
                     _fmt(rec.e_uS), _fmt_rate(rr[0]),
                     _fmt(rec.e_pS), _fmt_rate(rr[1]),
                     _fmt(rec.e_uD), _fmt_rate(rr[2]),
                     _fmt(rec.e_pD), _fmt_rate(rr[3])])
        prev = rec
    path = spec.out_path("convergence_%s.%s"
                         % (spec.pair, "csv" if spec.format == "csv" else "md"))
    write_table(path, header, rows, spec.format)
    return path, ok


def run_iterations(spec):
    """Iteration-count table: one column per preconditioner combo."""
    header = ["DOF", "h"] + [combo_label(c) for c in spec.combos]
    rows = []
    ok = True
    for n in spec.n_values():
        problem = Problem(spec.pair, n)
        cells = []
        for combo in spec.combos:
            config = SolveConfig(spec.pair, n, outer_rtol=spec.outer_rtol,
                                 inner_rtol=spec.inner_rtol, combo=combo,
                                 seed=spec.seed)
            report = solve_coupled(problem, config)
            if not report.converged:
                ok = False
                cells.append('"FAILED"')
            else:
                cells.append('"%d(%d)"' % (report.outer_iterations,
                                           int(round(report.mean_inner))))
        rows.append([str(problem.dof_total), "1/%d" % n] + cells)
    path = spec.out_path("iterations_%s.%s"
                         % (spec.pair, "csv" if spec.format == "csv" else "md"))
    write_table(path, header, rows, spec.format)
    return path, ok


def run_check(spec):
    """Quick invariant battery; prints one line per check."""
    from . import checks
    results = checks.run_all(seed=spec.seed)
    ok = True
    for name, passed, detail in results:
        print("%-52s %s  %s" % (name, "PASS" if passed else "FAIL", detail))
        ok = ok and passed
    return ok


def run_oracle(spec):
    """Nested solve with tightened tolerances against the factorized
    monolithic solve, per element pair."""
    n = max(spec.nmin, 8)
    problem = Problem(spec.pair, n)
    config = SolveConfig(spec.pair, n, outer_rtol=1e-10, inner_rtol=1e-12,
                         recovery_rtol=1e-12, combo=spec.combos[0],
                         maxit_inner=5000)
    nested = solve_coupled(problem, config)
    mono = solve_monolithic_oracle(problem)

    def rel(a, b):
        return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)

    diffs = {"u_S": rel(nested.u_S, mono.u_S),
             "p_S": rel(nested.p_S, mono.p_S),
             "u_D": rel(nested.u_D, mono.u_D),
             "p_D": rel(nested.p_D, mono.p_D)}
    worst = max(diffs.values())
    for k, v in diffs.items():
        print("%s: relative difference %.3e" % (k, v))
    print("oracle comparison %s (worst %.3e, tolerance 1e-6)"
          % ("PASS" if worst <= 1e-6 else "FAIL", worst))
    return worst <= 1e-6


def main(argv=None):
    args = _parse_args(argv if argv is not None else sys.argv[1:])
    spec = ExperimentSpec(args)
    if args.command == "converge":
        path, ok = run_convergence(spec)
        print("wrote", path)
    elif args.command == "iterations":
        path, ok = run_iterations(spec)
        print("wrote", path)
    elif args.command == "check":
        ok = run_check(spec)
    else:
        ok = run_oracle(spec)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
