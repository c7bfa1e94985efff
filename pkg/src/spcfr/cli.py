"""Experiment runner: solver dispatch, CSV trace persistence, summaries.

Verbs: ``solve`` (one run, one CSV), ``sweep`` (algorithms x update modes on
one game), ``export-game`` (write a builder to the game file format), and
``check`` (fast invariant suites). ``SPCFR_SEED`` overrides the configured
seed. Exit codes: 2 bad configuration, 3 game-file parse error, 4 size guard.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import cfr, games, metrics

CSV_HEADER = "t,residual,residual_mbbg,regret_x,regret_y,max_stability_violation,wall_ms"
SUMMARY_PREFIX = "# summary"

EXIT_BAD_CONFIG = 2
EXIT_PARSE_ERROR = 3
EXIT_SIZE_GUARD = 4


@dataclass
class RunConfig:
    game: str = "kuhn"  # kuhn | leduc | random | file:<path>
    algorithm: str = "oftrl_theory"
    scale_exp: int = 1  # d for oftrl_scaled
    updates: str = "simultaneous"
    regularizer: str = "entropy"
    iterations: int = 1024
    kappa_constant: float = 1.0
    seed: int = 0
    depth: int = 3
    branching: int = 3
    record_every: int | None = None
    output: str | None = None
    timing: bool = False

    def validate(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.algorithm not in cfr.ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm == "oftrl_scaled" and self.scale_exp not in (1, 2, 3):
            raise ValueError("oftrl_scaled expects d in {1, 2, 3}")
        if self.updates not in cfr.UPDATE_MODES:
            raise ValueError(f"unknown update mode {self.updates!r}")
        if self.record_every is not None and self.record_every < 1:
            raise ValueError("record_every must be at least 1")

    def effective_seed(self) -> int:
        env = os.environ.get("SPCFR_SEED")
        return int(env) if env else self.seed

    def label(self) -> str:
        algo = self.algorithm
        if algo == "oftrl_scaled":
            algo = f"oftrl_scaled{self.scale_exp}"
        game = self.game.replace("file:", "file-").replace("/", "_")
        if self.game == "random":
            game = f"random-s{self.effective_seed()}-d{self.depth}-b{self.branching}"
        return f"{game}_{algo}_{self.updates}"


def load_game(config: RunConfig) -> games.GameInstance:
    if config.game == "kuhn":
        return games.build_kuhn()
    if config.game == "leduc":
        return games.build_leduc()
    if config.game == "random":
        return games.build_random_game(config.effective_seed(), config.depth, config.branching)
    if config.game.startswith("file:"):
        path = Path(config.game[len("file:") :])
        try:
            text = path.read_text()
        except OSError as exc:
            raise games.GameFormatError(f"cannot read game file {path}: {exc}") from exc
        efg = games.parse_game_file(text)
        return games.to_sequence_form_game(efg, name=path.stem)
    raise ValueError(f"unknown game {config.game!r}")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _row_line(r: metrics.TraceRow) -> str:
    return ",".join(
        [
            str(r.t),
            _fmt(r.residual),
            _fmt(r.residual_mbbg),
            _fmt(r.regret_x),
            _fmt(r.regret_y),
            _fmt(r.max_stability_violation),
            _fmt(r.wall_ms),
        ]
    )


def _summary_sentinel(trace: metrics.SolveTrace) -> str:
    exponent = float("nan")
    try:
        exponent, _ = metrics.fit_convergence_rate(trace)
    except ValueError:
        pass
    final = trace.rows[-1]
    return (
        f"{SUMMARY_PREFIX} rows={len(trace.rows)} final_residual={_fmt(final.residual)} "
        f"fitted_exponent={_fmt(exponent)}"
    )


def write_trace_csv(trace: metrics.SolveTrace, path: Path):
    """Header first (bit-exact), one config comment, data rows, and a summary
    sentinel marking the file complete."""
    cfg = " ".join(f"{k}={v}" for k, v in trace.config.items())
    lines = [CSV_HEADER, f"# config {cfg}"]
    lines.extend(_row_line(r) for r in trace.rows)
    lines.append(_summary_sentinel(trace))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def csv_is_complete(path: Path) -> bool:
    if not path.exists():
        return False
    text = path.read_text().rstrip("\n")
    return text.rsplit("\n", 1)[-1].startswith(SUMMARY_PREFIX)


def run(config: RunConfig) -> metrics.SolveTrace:
    """Solve one configuration, streaming rows into the CSV artifact.

    The file carries the header, one config comment, then rows appended and
    flushed as they are recorded; the summary sentinel lands only when the
    run finishes, so an interrupted run is detectable."""
    config.validate()
    game = load_game(config)
    T = config.iterations
    opts = cfr.SolveOptions(
        algorithm=config.algorithm,
        regularizer=config.regularizer,
        scale_exp=config.scale_exp if config.algorithm == "oftrl_scaled" else 0,
        kappa_constant=config.kappa_constant,
        record_every=config.record_every or cfr.default_record_every(T),
        timing=config.timing,
    )
    solve = cfr.run_alternating if config.updates == "alternating" else cfr.run_simultaneous
    out = Path(config.output) if config.output else Path(f"{config.label()}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    updates = config.updates
    echo = cfr.config_echo(game, T, opts, updates)
    with out.open("w") as fh:
        fh.write(CSV_HEADER + "\n")
        fh.write("# config " + " ".join(f"{k}={v}" for k, v in echo.items()) + "\n")
        fh.flush()

        def emit(row):
            fh.write(_row_line(row) + "\n")
            fh.flush()

        opts.on_row = emit
        trace = solve(game, T, opts)
        fh.write(_summary_sentinel(trace) + "\n")
    return trace


def _summary_line(trace: metrics.SolveTrace, wall_s: float) -> str:
    final = trace.rows[-1]
    try:
        exponent, _ = metrics.fit_convergence_rate(trace)
        exp_str = f"{exponent:.4f}"
    except ValueError:
        exp_str = "n/a"
    return (
        f"[{trace.config['game']}/{trace.config['algorithm']}/{trace.config['updates']}] "
        f"T={final.t} final_residual={final.residual:.6e} fitted_exponent={exp_str} "
        f"wall_time={wall_s:.2f}s"
    )


# --------------------------------------------------------------------------
# Verbs
# --------------------------------------------------------------------------


def _cmd_solve(args) -> int:
    config = _config_from_args(args)
    started = time.perf_counter()
    trace = run(config)
    print(_summary_line(trace, time.perf_counter() - started))
    return 0


def _sweep_one(payload):
    config, out_dir = payload
    path = Path(out_dir) / f"{config.label()}.csv"
    if csv_is_complete(path):
        return config.label(), "skipped", path
    config.output = str(path)
    try:
        run(config)
    except Exception as exc:  # noqa: BLE001 - a sweep aggregates failures
        return config.label(), f"failed: {exc}", path
    return config.label(), "done", path


def _cmd_sweep(args) -> int:
    base = _config_from_args(args)
    combos = []
    for algo in ("oftrl_theory", "oftrl_scaled", "cfr_rm"):
        for updates in cfr.UPDATE_MODES:
            cfg = dataclasses.replace(base, algorithm=algo, updates=updates, output=None)
            combos.append((cfg, args.out_dir))
    results = []
    if args.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_one, combos))
    else:
        results = [_sweep_one(c) for c in combos]

    failures = [r for r in results if r[1].startswith("failed")]
    rows = []
    for label, status, path in results:
        if status.startswith("failed") or not csv_is_complete(Path(path)):
            print(f"{label}: {status}")
            continue
        final_res, exponent = _read_summary(Path(path))
        rows.append((final_res, label, exponent, path))
        print(f"{label}: {status}")
    rows.sort()
    summary_path = Path(args.out_dir) / "summary.csv"
    with summary_path.open("w") as fh:
        fh.write("label,final_residual,fitted_exponent,csv\n")
        for final_res, label, exponent, path in rows:
            fh.write(f"{label},{_fmt(final_res)},{_fmt(exponent)},{Path(path).name}\n")
    print(f"summary: {summary_path}")
    return 1 if failures else 0


def _read_summary(path: Path) -> tuple[float, float]:
    last = path.read_text().rstrip("\n").rsplit("\n", 1)[-1]
    fields = dict(tok.split("=", 1) for tok in last.split()[2:])
    return float(fields["final_residual"]), float(fields["fitted_exponent"])


def _cmd_export(args) -> int:
    config = _config_from_args(args)
    if config.game == "kuhn":
        efg = games.build_kuhn_efg()
    elif config.game == "leduc":
        efg = games.build_leduc_efg()
    elif config.game == "random":
        efg = games.build_random_efg(config.effective_seed(), config.depth, config.branching)
    else:
        raise ValueError("export-game expects one of the built-in games")
    Path(args.out).write_text(games.export_game_file(efg))
    print(f"wrote {args.out}")
    return 0


def _cmd_check(args) -> int:
    from . import checks

    return checks.run_all(verbose=True)


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        game=args.game,
        algorithm=getattr(args, "algo", "oftrl_theory"),
        scale_exp=getattr(args, "d", 1),
        updates=getattr(args, "updates", "simultaneous"),
        regularizer=getattr(args, "reg", "entropy"),
        iterations=getattr(args, "T", 1024),
        kappa_constant=getattr(args, "kappa_constant", 1.0),
        seed=args.seed,
        depth=args.depth,
        branching=args.branching,
        record_every=getattr(args, "record_every", None),
        output=getattr(args, "out", None),
        timing=getattr(args, "timing", False),
    )


def _add_game_args(p: argparse.ArgumentParser):
    p.add_argument("--game", default="kuhn", help="kuhn | leduc | random | file:<path>")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--branching", type=int, default=3)


def _add_solver_args(p: argparse.ArgumentParser):
    p.add_argument("--algo", default="oftrl_theory", choices=cfr.ALGORITHMS)
    p.add_argument("-d", type=int, default=1, choices=(1, 2, 3),
                   help="stepsize scaling exponent for oftrl_scaled")
    p.add_argument("--updates", default="simultaneous", choices=cfr.UPDATE_MODES)
    p.add_argument("--reg", default="entropy", choices=("entropy", "euclidean"))
    p.add_argument("-T", type=int, default=1024, help="iteration budget")
    p.add_argument("--kappa-constant", dest="kappa_constant", type=float, default=1.0)
    p.add_argument("--record-every", dest="record_every", type=int, default=None)
    p.add_argument("--timing", action="store_true",
                   help="write measured wall times into the CSV (breaks byte reproducibility)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spcfr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one configuration, write one CSV")
    _add_game_args(p_solve)
    _add_solver_args(p_solve)
    p_solve.add_argument("--out", default=None, help="CSV output path")
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="algorithms x update modes on one game")
    _add_game_args(p_sweep)
    _add_solver_args(p_sweep)
    p_sweep.add_argument("--out-dir", default="sweep", help="directory for CSVs")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_export = sub.add_parser("export-game", help="write a built-in game to the file format")
    _add_game_args(p_export)
    p_export.add_argument("--out", required=True)
    p_export.set_defaults(func=_cmd_export)

    p_check = sub.add_parser("check", help="run the invariant suites")
    p_check.set_defaults(func=_cmd_check)
    p_check.add_argument("--game", default="kuhn", help=argparse.SUPPRESS)
    p_check.add_argument("--seed", type=int, default=0, help=argparse.SUPPRESS)
    p_check.add_argument("--depth", type=int, default=2, help=argparse.SUPPRESS)
    p_check.add_argument("--branching", type=int, default=2, help=argparse.SUPPRESS)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except games.GameFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except games.SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE_GUARD
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
