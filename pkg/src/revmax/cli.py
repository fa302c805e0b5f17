"""Command-line interface. Every command writes tab-separated rows with a one-line
header; failures print ``error<TAB>kind<TAB>message`` to stderr and exit non-zero."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

from . import baselines, datagen, greedy, pricing, relaxed
from .greedy import SolveReport
from .model import Instance, Strategy, Triple, fingerprint, instance_from_text, instance_to_text

log = logging.getLogger("revmax")

ALGORITHMS = ("gg", "slg", "rlg", "topra", "topre", "ggno", "rrevmax-ls", "opt", "dcs")
REPORT_COLUMNS = ("name", "expected_revenue", "runtime_ms", "selections", "recomputations")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error\tUsageError\t{message}", file=sys.stderr)
        sys.exit(2)


# -- helpers -----------------------------------------------------------------


def _parse_int_list(text: Optional[str]) -> List[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"expected comma-separated integers, got {text!r}") from None


def read_ratings(path: str) -> Dict[Tuple[int, int], float]:
    """``user<TAB>item<TAB>rating`` rows; a non-numeric first row is a header."""
    out: Dict[Tuple[int, int], float] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or row[0].startswith("#"):
                continue
            try:
                u, i, r = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError):
                if lineno == 1:
                    continue
                raise CliError(f"{path}:{lineno}: expected user, item, rating") from None
            out[(u, i)] = r
    return out


def read_prices(path: str) -> List[float]:
    """One price per line (first comma-separated field); a non-numeric first line is a header."""
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip().split(",")[0].strip()
            if not text or text.startswith("#"):
                continue
            try:
                vals.append(float(text))
            except ValueError:
                if lineno == 1:
                    continue
                raise CliError(f"{path}:{lineno}: not a number: {text!r}") from None
    return vals


def read_strategy(inst: Instance, path: str) -> Strategy:
    triples = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row:
                continue
            try:
                triples.append(Triple(int(row[0]), int(row[1]), int(row[2])))
            except (ValueError, IndexError):
                if lineno == 1:
                    continue
                raise CliError(f"{path}:{lineno}: expected user, item, time") from None
    return Strategy(inst, triples)


def write_table(out: TextIO, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    out.write("\t".join(header) + "\n")
    for row in rows:
        out.write("\t".join(_fmt(v) for v in row) + "\n")


def _fmt(v: object) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def histogram_rows(report: SolveReport) -> List[Tuple[int, float]]:
    """Share (in percent) of recommended (user, item) pairs per repeat count."""
    hist = report.repeat_histogram
    total = sum(hist.values())
    return [(b, 100.0 * hist[b] / total) for b in sorted(hist)] if total else []


def run_algorithm(
    inst: Instance,
    name: str,
    *,
    perms: int = 20,
    seed: int = 0,
    cutoffs: Sequence[int] = (),
    ratings: Optional[Dict[Tuple[int, int], float]] = None,
) -> SolveReport:
    if name not in ALGORITHMS:
        raise CliError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    if cutoffs:
        if name not in ("gg", "slg", "rlg"):
            raise CliError(f"--cutoffs only applies to gg, slg and rlg, not {name}")
        return greedy.staged_solve(inst, cutoffs, name, n_perms=perms, seed=seed)
    if name == "gg":
        return greedy.g_greedy(inst)
    if name == "slg":
        return greedy.sl_greedy(inst)
    if name == "rlg":
        return greedy.rl_greedy(inst, n_perms=perms, seed=seed)
    if name == "topra":
        if ratings is None:
            raise CliError("topra needs --ratings")
        return baselines.top_ra(inst, ratings)
    if name == "topre":
        return baselines.top_re(inst)
    if name == "ggno":
        return baselines.global_no(inst)
    if name == "rrevmax-ls":
        return relaxed.local_search_rrevmax(inst, seed=seed)
    if name == "opt":
        return baselines.brute_force_opt(inst)
    return baselines.dcs_optimal_t1(inst)


@dataclass
class CompareTable:
    fingerprint: str
    rows: List[SolveReport] = field(default_factory=list)

    def add(self, inst: Instance, report: SolveReport) -> None:
        if fingerprint(inst) != self.fingerprint:
            raise CliError("all algorithms must run on the same instance")
        self.rows.append(report)

    def write(self, out: TextIO) -> None:
        write_table(
            out,
            REPORT_COLUMNS + ("fingerprint",),
            [
                (r.algo, r.expected_revenue, round(r.runtime_ms, 3), r.selections, r.recomputations, self.fingerprint)
                for r in self.rows
            ],
        )


def _load(path: Optional[str]) -> Instance:
    if not path:
        raise CliError("--instance is required")
    with open(path) as fh:
        return instance_from_text(fh.read())


# -- commands ----------------------------------------------------------------


def cmd_solve(args, out: TextIO) -> int:
    inst = _load(args.instance)
    ratings = read_ratings(args.ratings) if args.ratings else None
    report = run_algorithm(
        inst, args.algo, perms=args.perms, seed=args.seed, cutoffs=_parse_int_list(args.cutoffs), ratings=ratings
    )
    write_table(
        out,
        REPORT_COLUMNS,
        [(report.algo, report.expected_revenue, round(report.runtime_ms, 3), report.selections, report.recomputations)],
    )
    if args.emit_histogram:
        out.write("\n")
        write_table(out, ("repeats", "percent"), histogram_rows(report))
    if args.strategy_out:
        with open(args.strategy_out, "w") as fh:
            write_table(fh, ("user", "item", "time"), report.triples)
    return 0


def cmd_compare(args, out: TextIO) -> int:
    inst = _load(args.instance)
    names = [n.strip() for n in args.algos.split(",") if n.strip()]
    for n in names:
        if n not in ALGORITHMS:
            raise CliError(f"unknown algorithm {n!r}; choose from {', '.join(ALGORITHMS)}")
    ratings = read_ratings(args.ratings) if args.ratings else None
    cutoffs = _parse_int_list(args.cutoffs)
    table = CompareTable(fingerprint(inst))

    def run(name: str) -> SolveReport:
        return run_algorithm(inst, name, perms=args.perms, seed=args.seed, cutoffs=cutoffs, ratings=ratings)

    if args.parallel and len(names) > 1:
        with ThreadPoolExecutor(max_workers=len(names)) as pool:
            reports = list(pool.map(run, names))
    else:
        reports = [run(n) for n in names]
    for r in reports:
        table.add(inst, r)
    table.write(out)
    if args.emit_histogram:
        rows = [(r.algo, b, pct) for r in reports for b, pct in histogram_rows(r)]
        out.write("\n")
        write_table(out, ("name", "repeats", "percent"), rows)
    return 0


def _synth_config(args, num_users: Optional[int] = None) -> datagen.SynthConfig:
    sat = args.saturation
    return datagen.SynthConfig(
        num_users=num_users if num_users is not None else args.users,
        num_items=args.items,
        horizon=args.horizon,
        items_per_user=args.per_user,
        num_classes=args.classes,
        display_k=args.k,
        capacity_dist=args.cap,
        saturation=sat if sat == "uniform" else float(sat),
        seed=args.seed,
    )


def cmd_gen_synth(args, out: TextIO) -> int:
    inst = datagen.generate(_synth_config(args))
    text = instance_to_text(inst)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        write_table(out, ("users", "items", "triples", "fingerprint"),
                    [(inst.num_users, inst.num_items, inst.num_positive(), fingerprint(inst))])
    else:
        out.write(text)
    return 0


def cmd_kde_fit(args, out: TextIO) -> int:
    mode = pricing.PAPER if args.mode == "paper" else pricing.MIXTURE
    model = pricing.fit_kde(read_prices(args.prices), mode=mode)
    write_table(out, ("n", "bandwidth", "mu", "sigma", "mode"),
                [(len(model.samples), model.bandwidth, model.mu, model.sigma, model.mode)])
    return 0


def cmd_adoption_build(args, out: TextIO) -> int:
    inst = _load(args.instance)
    mode = pricing.PAPER if args.mode == "paper" else pricing.MIXTURE
    samples: Dict[int, List[float]] = {}
    with open(args.price_samples, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row:
                continue
            try:
                samples.setdefault(int(row[0]), []).append(float(row[1]))
            except (ValueError, IndexError):
                if lineno == 1:
                    continue
                raise CliError(f"{args.price_samples}:{lineno}: expected item, price") from None
    models = {i: pricing.fit_kde(v, mode=mode) for i, v in samples.items()}
    built = pricing.build_adoption(inst, read_ratings(args.ratings), models, args.r_max)
    text = instance_to_text(built)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        write_table(out, ("pairs", "triples", "fingerprint"),
                    [(len(built.adoption), built.num_positive(), fingerprint(built))])
    else:
        out.write(text)
    return 0


def cmd_scaling(args, out: TextIO) -> int:
    sizes = _parse_int_list(args.sizes)
    if not sizes:
        raise CliError("--sizes needs at least one value")
    rows = []
    for size in sizes:
        users = max(1, round(size / (args.per_user * args.horizon)))
        inst = datagen.generate(_synth_config(args, num_users=users))
        started = time.perf_counter()
        report = greedy.g_greedy(inst)
        rows.append((inst.num_positive(), round(time.perf_counter() - started, 4), report.expected_revenue))
        log.info("scaling: %d triples in %.2fs", rows[-1][0], rows[-1][1])
    write_table(out, ("triples", "seconds", "expected_revenue"), rows)
    return 0


def cmd_tail(args, out: TextIO) -> int:
    inst = _load(args.instance)
    s = read_strategy(inst, args.strategy)
    exact = relaxed.capacity_tail_exact(s, args.item, args.time, args.user)
    rows = [(exact.method, exact.value, 0, 0.0)]
    if args.samples:
        mc = relaxed.capacity_tail_mc(s, args.item, args.time, args.user, args.samples, args.seed)
        rows.append((mc.method, mc.value, mc.samples, mc.std_error))
    write_table(out, ("method", "value", "samples", "std_error"), rows)
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="instance file")
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0, echoed to stderr)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--emit-histogram", action="store_true", help="also emit repeat-count percentages")
    common.add_argument("--parallel", action="store_true", help="run compared algorithms concurrently")

    p = _Parser(prog="revmax", description="Revenue-maximizing recommendation planner.")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--perms", type=int, default=20, help="RL-Greedy permutations")
        sp.add_argument("--cutoffs", help="comma-separated sub-horizon cutoffs, e.g. 2,4")
        sp.add_argument("--ratings", help="user/item/rating TSV (needed by topra)")

    sp = sub.add_parser("solve", parents=[common], help="run one algorithm")
    sp.add_argument("--algo", required=True, choices=ALGORITHMS)
    sp.add_argument("--strategy-out", help="write the chosen triples here")
    solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("compare", parents=[common], help="run several algorithms on one instance")
    sp.add_argument("--algos", default="gg,slg,rlg,topre,ggno")
    solver_flags(sp)
    sp.set_defaults(func=cmd_compare)

    def synth_flags(sp):
        sp.add_argument("--items", type=int, default=200)
        sp.add_argument("--per-user", type=int, default=100)
        sp.add_argument("--horizon", type=int, default=5)
        sp.add_argument("--classes", type=int, default=50)
        sp.add_argument("--k", type=int, default=5)
        sp.add_argument("--cap", default="gaussian:5000,300")
        sp.add_argument("--saturation", default="uniform", help="'uniform' or a fixed value in [0, 1]")

    sp = sub.add_parser("gen-synth", parents=[common], help="generate a synthetic instance")
    sp.add_argument("--users", type=int, default=100)
    synth_flags(sp)
    sp.set_defaults(func=cmd_gen_synth)

    sp = sub.add_parser("scaling", parents=[common], help="time g_greedy on synthetic instances of given sizes")
    sp.add_argument("--sizes", required=True, help="comma-separated triple counts")
    synth_flags(sp)
    sp.set_defaults(func=cmd_scaling)

    sp = sub.add_parser("kde-fit", parents=[common], help="fit a price distribution")
    sp.add_argument("--prices", required=True)
    sp.add_argument("--mode", choices=("paper", "mixture"), default="mixture")
    sp.set_defaults(func=cmd_kde_fit)

    sp = sub.add_parser("adoption-build", parents=[common], help="rebuild adoption probabilities from ratings")
    sp.add_argument("--ratings", required=True)
    sp.add_argument("--price-samples", required=True, help="item/price TSV of observed prices")
    sp.add_argument("--r-max", type=float, default=5.0)
    sp.add_argument("--mode", choices=("paper", "mixture"), default="mixture")
    sp.set_defaults(func=cmd_adoption_build)

    sp = sub.add_parser("tail", parents=[common], help="capacity-tail probability for one triple")
    sp.add_argument("--strategy", required=True, help="user/item/time TSV")
    sp.add_argument("--user", type=int, required=True)
    sp.add_argument("--item", type=int, required=True)
    sp.add_argument("--time", type=int, required=True)
    sp.add_argument("--samples", type=int, default=0, help="also run Monte-Carlo with this many samples")
    sp.set_defaults(func=cmd_tail)
    return p


def _configure_logging() -> None:
    level = os.environ.get("REVMAX_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = 0
        print("seed\t0", file=sys.stderr)
    try:
        # solve/compare write their strategy elsewhere; --out redirects the table
        if args.out and args.command not in ("gen-synth", "adoption-build"):
            with open(args.out, "w") as fh:
                return args.func(args, fh)
        return args.func(args, sys.stdout)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one parseable line
        log.debug("command failed", exc_info=True)
        msg = str(exc).replace("\t", " ").replace("\n", " ")
        print(f"error\t{type(exc).__name__}\t{msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
