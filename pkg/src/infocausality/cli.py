"""Command-line front end.

Subcommands ``sweep-chsh``, ``ic-run``, ``box-info`` and ``theory``. Settings
come from built-in defaults, then an optional JSON config file, then flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from . import boxes as bx
from . import quantum as qm
from .icproto import (
    DATASET_MODES,
    RUN_CSV_HEADER,
    ProtocolConfig,
    exact_protocol_stats,
    isotropic_success,
    run_protocol,
)
from .metrics import merit
from .svg import GREY, PALETTE, LineChart
from .twirl import TWIRL_MODES, apply_twirl

log = logging.getLogger("infocausality")

RESULT_HEADER = [
    "kappa", "state", "S_simulated", "S_theory", "n",
    "i_bound", "i_bound_std", "efficiency", "efficiency_std",
    "anisotropy", "depolarized",
]
SETTINGS_HEADER = ["kappa", "phi_A0", "phi_A1", "phi_B0", "phi_B1", "S_psi_plus"]
THEORY_HEADER = ["kappa", "S_theory"]
IC_THEORY_HEADER = ["curve", "S", "n", "i_bound", "efficiency"]

SWEEP_STATES = ("psi-plus", "rho-sep", "hv", "vh")


class CLIError(Exception):
    pass


# -- value formatting and CSV sink --------------------------------------------

def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.16e}"
    return str(value)


def write_csv(path: Path, header: list[str], rows: Iterable[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


# -- specs ---------------------------------------------------------------------

def default_kappa_grid(points: int = 21) -> list[float]:
    if points < 2:
        raise CLIError("kappa grid needs at least 2 points")
    return [i / (points - 1) for i in range(points)]


def _check_grid(grid: list[float]) -> list[float]:
    grid = [float(k) for k in grid]
    if not grid or any(not (0.0 <= k <= 1.0) for k in grid):
        raise CLIError("kappa grid values must lie in [0, 1]")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise CLIError("kappa grid must be strictly increasing")
    return grid


@dataclass
class SweepSpec:
    kappa_grid: list[float] = field(default_factory=default_kappa_grid)
    states: tuple[str, ...] = ("psi-plus", "rho-sep")
    optimize_separable: bool = False
    replicates: int = 5
    seed: int = 0

    def __post_init__(self):
        self.kappa_grid = _check_grid(self.kappa_grid)
        unknown = [s for s in self.states if s not in SWEEP_STATES]
        if unknown:
            raise CLIError(f"unknown states {unknown}; choose from {list(SWEEP_STATES)}")
        self.states = tuple(self.states)


@dataclass
class ResultRow:
    kappa: float | None
    state: str
    S_simulated: float | None
    S_theory: float | None = None
    n: int | None = None
    i_bound: float | None = None
    i_bound_std: float | None = None
    efficiency: float | None = None
    efficiency_std: float | None = None
    anisotropy: float | None = None
    depolarized: bool = False

    def as_list(self) -> list:
        return [getattr(self, name) for name in RESULT_HEADER]


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


_settings_cache: dict[float, tuple[qm.MeasurementSettings, float]] = {}


def psi_plus_settings(kappa: float) -> tuple[qm.MeasurementSettings, float]:
    """Optimal psi-plus settings at ``kappa``; pure, so cached per process."""
    if kappa not in _settings_cache:
        _settings_cache[kappa] = qm.optimize_settings(qm.psi_plus(), kappa)
    return _settings_cache[kappa]


# -- sweep-chsh ----------------------------------------------------------------

def sweep_chsh(spec: SweepSpec, threads: int = 1):
    """CHSH values versus kappa, with settings fixed by the psi-plus optimum.

    Returns ``(rows, settings_rows, skipped)``; ``skipped`` lists
    ``(kappa, state, reason)`` for rows lost to degenerate post-selection.
    """
    sim_grid = [k for k in spec.kappa_grid if k < 1.0]

    def optimize(kappa):
        try:
            return psi_plus_settings(kappa)
        except qm.DegeneratePostselectionError as exc:
            return exc

    optimized = dict(zip(sim_grid, _pmap(optimize, sim_grid, threads)))
    rows: list[ResultRow] = []
    settings_rows = []
    skipped = []
    for kappa in spec.kappa_grid:
        if kappa >= 1.0:
            if "psi-plus" in spec.states:
                rows.append(ResultRow(kappa, "psi-plus", None, qm.theory_S(kappa)))
            continue
        opt = optimized[kappa]
        if isinstance(opt, Exception):
            skipped.extend((kappa, s, str(opt)) for s in spec.states)
            continue
        settings, S_psi = opt
        settings_rows.append([kappa, *settings.as_tuple(), S_psi])
        for state_name in spec.states:
            try:
                box = qm.quantum_box(qm.named_state(state_name), kappa, settings)
            except qm.DegeneratePostselectionError as exc:
                skipped.append((kappa, state_name, str(exc)))
                continue
            theory = qm.theory_S(kappa) if state_name == "psi-plus" else None
            rows.append(ResultRow(kappa, state_name, bx.chsh_value(box), theory, anisotropy=bx.anisotropy(box)))
        if spec.optimize_separable:
            S_opt, _ = qm.best_product_state(kappa, settings)
            rows.append(ResultRow(kappa, "sep-opt", S_opt))
    return rows, settings_rows, skipped


def sweep_chart(rows: list[ResultRow]) -> LineChart:
    chart = LineChart("CHSH value versus polarization-dependent loss", "kappa", "S")
    chart.hrule(bx.CLASSICAL_BOUND)
    chart.hrule(bx.TSIRELSON_BOUND)
    theory = [(r.kappa, r.S_theory) for r in rows if r.state == "psi-plus" and r.S_theory is not None]
    if theory:
        chart.add([t[0] for t in theory], [t[1] for t in theory], "psi-plus theory", color=PALETTE[0])
    styles = {"psi-plus": PALETTE[0], "rho-sep": PALETTE[1], "hv": PALETTE[3], "vh": PALETTE[4]}
    for state, color in styles.items():
        pts = [(r.kappa, r.S_simulated) for r in rows if r.state == state and r.S_simulated is not None]
        if pts:
            chart.add([p[0] for p in pts], [p[1] for p in pts], f"{state} simulated",
                      color=color, line=state != "psi-plus", markers=True)
    opt = [(r.kappa, r.S_simulated) for r in rows if r.state == "sep-opt"]
    if opt:
        chart.add([p[0] for p in opt], [p[1] for p in opt], "best product state", color=GREY, dashed=True)
    return chart


def cmd_sweep_chsh(spec: SweepSpec, out_dir: Path, threads: int = 1) -> int:
    rows, settings_rows, skipped = sweep_chsh(spec, threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "sweep_chsh.csv", RESULT_HEADER, (r.as_list() for r in rows))
    write_csv(out_dir / "sweep_settings.csv", SETTINGS_HEADER, settings_rows)
    (out_dir / "sweep_chsh.svg").write_text(sweep_chart(rows).render(), encoding="utf-8", newline="\n")
    return _report_skipped(skipped)


def _report_skipped(skipped) -> int:
    for item in skipped:
        print("skipped row: " + " ".join(fmt(v) for v in item), file=sys.stderr)
    return 1 if skipped else 0


# -- ic-run ---------------------------------------------------------------------

@dataclass
class BoxSource:
    label: str
    box: bx.Box
    kappa: float | None = None


def sweep_boxes(spec: SweepSpec, threads: int = 1) -> tuple[list[BoxSource], list]:
    sim_grid = [k for k in spec.kappa_grid if k < 1.0]
    _pmap(psi_plus_settings, sim_grid, threads)
    sources, skipped = [], []
    for kappa in sim_grid:
        settings, _ = psi_plus_settings(kappa)
        for name in spec.states:
            try:
                sources.append(BoxSource(name, qm.quantum_box(qm.named_state(name), kappa, settings), kappa))
            except qm.DegeneratePostselectionError as exc:
                skipped.append((kappa, name, str(exc)))
    return sources, skipped


@dataclass
class ICSpec:
    n_list: tuple[int, ...] = (1, 2, 3, 4)
    dataset_mode: str = "random_per_trial"
    datasets: tuple[tuple[int, ...], ...] = ()
    trials_per_index: int | None = None
    replicates: int = 5
    twirl: str = "none"
    shot_twirl: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.dataset_mode not in DATASET_MODES:
            raise CLIError(f"dataset mode must be one of {DATASET_MODES}")
        if self.twirl not in TWIRL_MODES:
            raise CLIError(f"twirl must be one of {TWIRL_MODES}")
        if self.dataset_mode == "fixed":
            lengths = {len(d) for d in self.datasets}
            missing = [n for n in self.n_list if (1 << n) not in lengths]
            if missing:
                raise CLIError(f"fixed dataset mode needs a dataset of length 2^n for n in {missing}")

    def config(self, n: int, stream: tuple[int, ...]) -> ProtocolConfig:
        dataset = None
        if self.dataset_mode == "fixed":
            dataset = next(d for d in self.datasets if len(d) == 1 << n)
        return ProtocolConfig(
            n=n, dataset_mode=self.dataset_mode, dataset=dataset,
            trials_per_index=self.trials_per_index, replicates=self.replicates,
            seed=self.seed, shot_twirl=self.shot_twirl, stream=stream,
        )


def ic_run(sources: list[BoxSource], spec: ICSpec, threads: int = 1):
    """Protocol runs for every (box, n); returns rows, per-index rows, theory rows."""
    twirled = [apply_twirl(s.box, spec.twirl) for s in sources]
    tasks = [(i, n) for i in range(len(sources)) for n in spec.n_list]

    def work(task):
        i, n = task
        return run_protocol(twirled[i], spec.config(n, stream=(i, n)))

    summaries = _pmap(work, tasks, threads)
    rows, run_rows, theory_rows = [], [], []
    depolarized = spec.twirl == "depolarize" or spec.shot_twirl
    for (i, n), summary in zip(tasks, summaries):
        src, box = sources[i], twirled[i]
        S = bx.chsh_value(box)
        i_mean, i_std = summary.i_bound_stats
        e_mean, e_std = summary.efficiency_stats
        theory = qm.theory_S(src.kappa) if (src.label == "psi-plus" and src.kappa is not None) else None
        rows.append(ResultRow(src.kappa, src.label, S, theory, n, i_mean, i_std, e_mean, e_std,
                              bx.anisotropy(box), depolarized))
        run_rows.extend(summary.csv_rows(S))
        exact_box = apply_twirl(box, "depolarize") if spec.shot_twirl else box
        mode = spec.config(n, ()).dataset if spec.dataset_mode == "fixed" else "random_per_trial"
        m = merit(exact_protocol_stats(exact_box, n, mode))
        theory_rows.append(["exact", S, n, m.i_bound, m.efficiency])
    if rows:
        S_values = [r.S_simulated for r in rows]
        lo, hi = max(2.0, min(S_values)), min(4.0, max(S_values))
        if hi - lo < 1e-9:
            lo, hi = max(2.0, lo - 0.05), min(4.0, hi + 0.05)
        for n in spec.n_list:
            for j in range(101):
                S = lo + (hi - lo) * j / 100
                m = merit([isotropic_success(S, n)] * (1 << n))
                theory_rows.append(["isotropic", S, n, m.i_bound, m.efficiency])
    return rows, run_rows, theory_rows


def ic_charts(rows: list[ResultRow], theory_rows: list) -> tuple[LineChart, LineChart]:
    charts = (
        LineChart("Protocol efficiency", "S", "efficiency"),
        LineChart("Information bound", "S", "I (bits)"),
    )
    for chart in charts:
        chart.vrule(bx.TSIRELSON_BOUND)
        chart.hrule(1.0)
    n_values = sorted({r.n for r in rows})
    for idx, n in enumerate(n_values):
        color = PALETTE[idx % len(PALETTE)]
        iso = sorted((t[1], t[3], t[4]) for t in theory_rows if t[0] == "isotropic" and t[2] == n)
        pts = sorted((r.S_simulated, r.efficiency, r.efficiency_std, r.i_bound, r.i_bound_std) for r in rows if r.n == n)
        for chart, col in ((charts[0], 2), (charts[1], 1)):
            if iso:
                chart.add([t[0] for t in iso], [t[col] for t in iso], f"n={n} isotropic theory", color=color)
        charts[0].add([p[0] for p in pts], [p[1] for p in pts], f"n={n} simulated", color=color,
                      line=False, markers=True, yerr=[p[2] for p in pts])
        charts[1].add([p[0] for p in pts], [p[3] for p in pts], f"n={n} simulated", color=color,
                      line=False, markers=True, yerr=[p[4] for p in pts])
    return charts


def cmd_ic_run(sources: list[BoxSource], spec: ICSpec, out_dir: Path, threads: int = 1, skipped=()) -> int:
    rows, run_rows, theory_rows = ic_run(sources, spec, threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "ic_results.csv", RESULT_HEADER, (r.as_list() for r in rows))
    write_csv(out_dir / "ic_protocol.csv", RUN_CSV_HEADER, run_rows)
    write_csv(out_dir / "ic_theory.csv", IC_THEORY_HEADER, theory_rows)
    eff, info = ic_charts(rows, theory_rows)
    (out_dir / "ic_efficiency.svg").write_text(eff.render(), encoding="utf-8", newline="\n")
    (out_dir / "ic_information.svg").write_text(info.render(), encoding="utf-8", newline="\n")
    return _report_skipped(skipped)


# -- box-info -------------------------------------------------------------------

def box_from_family(spec: str) -> bx.Box:
    """``pr-box``, ``uniform``, ``isotropic:S``, ``local:A0A1B0B1`` or
    ``quantum:STATE:KAPPA`` (settings from the psi-plus optimum)."""
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "pr-box" and len(parts) == 1:
            return bx.pr_box()
        if kind == "uniform" and len(parts) == 1:
            return bx.uniform_box()
        if kind == "isotropic" and len(parts) == 2:
            return bx.isotropic_box(float(parts[1]))
        if kind == "local" and len(parts) == 2 and len(parts[1]) == 4 and set(parts[1]) <= {"0", "1"}:
            return bx.local_deterministic_box(*(int(c) for c in parts[1]))
        if kind == "quantum" and len(parts) == 3:
            kappa = float(parts[2])
            settings, _ = psi_plus_settings(kappa)
            return qm.quantum_box(qm.named_state(parts[1]), kappa, settings)
    except (ValueError, qm.QuantumError) as exc:
        raise CLIError(f"bad box family {spec!r}: {exc}") from None
    raise CLIError(f"unknown box family {spec!r}")


def box_report(box: bx.Box) -> tuple[str, bx.NoSignalingReport]:
    ns = bx.no_signaling(box)
    norm = float(abs(box.p.sum(axis=(2, 3)) - 1.0).max())
    succ = box.success_vector()
    lines = [
        f"normalization_max_error {fmt(norm)}",
        f"chsh {fmt(bx.chsh_value(box))}",
        f"no_signaling_max_violation {fmt(ns.max_violation)}",
        f"no_signaling {'pass' if ns.passes else 'FAIL'}",
        f"anisotropy {fmt(bx.anisotropy(box))}",
    ]
    for (a, b), s in zip(((0, 0), (0, 1), (1, 0), (1, 1)), succ):
        lines.append(f"success a={a} b={b} {fmt(s)}")
    return "\n".join(lines) + "\n", ns


# -- argument handling -------------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _datasets(text: str) -> list[tuple[int, ...]]:
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk or set(chunk) - {"0", "1"}:
            raise argparse.ArgumentTypeError(f"dataset {chunk!r} must be a bit string")
        out.append(tuple(int(c) for c in chunk))
    return out


def _seed(text: str) -> int:
    value = int(text, 0)
    if not (0 <= value < 2**64):
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="JSON config file")
    common.add_argument("--seed", type=_seed, default=argparse.SUPPRESS)
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--strict", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="infocausality", parents=[common],
        description="Simulate no-signaling boxes and the information-causality protocol.",
    )
    sub = parser.add_subparsers(dest="command")

    def sweep_flags(p):
        p.add_argument("--kappa-grid", type=_floats, help="comma-separated kappa values")
        p.add_argument("--kappa-points", type=int, help="uniform grid size over [0, 1]")
        p.add_argument("--states", type=lambda s: tuple(x for x in s.split(",") if x))
        p.add_argument("--optimize-separable", action="store_true", default=None)

    p = sub.add_parser("sweep-chsh", parents=[common], help="CHSH value versus loss")
    sweep_flags(p)

    p = sub.add_parser("ic-run", parents=[common], help="run the information-causality protocol")
    sweep_flags(p)
    p.add_argument("--source", choices=("sweep", "isotropic", "file"))
    p.add_argument("--box-file", type=Path)
    p.add_argument("--s-grid", type=_floats, help="CHSH values for isotropic boxes")
    p.add_argument("--n-list", type=_ints)
    p.add_argument("--dataset-mode", choices=DATASET_MODES)
    p.add_argument("--dataset", type=_datasets, help="comma-separated bit strings, one per n")
    p.add_argument("--trials-per-index", type=int)
    p.add_argument("--replicates", type=int)
    twirl = p.add_mutually_exclusive_group()
    twirl.add_argument("--twirl", choices=TWIRL_MODES)
    twirl.add_argument("--depolarize", dest="twirl", action="store_const", const="depolarize")
    twirl.add_argument("--symmetrize", dest="twirl", action="store_const", const="symmetrize")
    p.add_argument("--shot-twirl", action="store_true", default=None,
                   help="draw a depolarizing relabeling per box use instead of twirling analytically")

    p = sub.add_parser("box-info", parents=[common], help="describe a box")
    p.add_argument("path", nargs="?", type=Path, help="box file")
    p.add_argument("--family", help="pr-box | uniform | isotropic:S | local:A0A1B0B1 | quantum:STATE:KAPPA")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--depolarize", dest="twirl", action="store_const", const="depolarize")
    group.add_argument("--symmetrize", dest="twirl", action="store_const", const="symmetrize")
    p.add_argument("--write", type=Path, help="also write the (twirled) box to this file")

    p = sub.add_parser("theory", parents=[common], help="tabulate the closed-form psi-plus curve")
    p.add_argument("--kappa-grid", type=_floats)
    p.add_argument("--kappa-points", type=int)
    return parser


def _pick(*values, default=None):
    for v in values:
        if v is not None:
            return v
    return default


def _kappa_grid(args, section: dict) -> list[float]:
    grid = _pick(getattr(args, "kappa_grid", None), section.get("kappa_grid"))
    if grid is not None:
        return _check_grid(grid)
    points = _pick(getattr(args, "kappa_points", None), section.get("kappa_points"), default=21)
    return default_kappa_grid(int(points))


def _sweep_spec(args, config: dict, seed: int) -> SweepSpec:
    section = config.get("sweep", {}) or {}
    return SweepSpec(
        kappa_grid=_kappa_grid(args, section),
        states=tuple(_pick(getattr(args, "states", None), section.get("states"), default=("psi-plus", "rho-sep"))),
        optimize_separable=bool(_pick(getattr(args, "optimize_separable", None), section.get("optimize_separable"), default=False)),
        replicates=int(_pick(getattr(args, "replicates", None), section.get("replicates"), default=5)),
        seed=seed,
    )


def _ic_spec(args, config: dict, seed: int) -> ICSpec:
    section = config.get("protocol", {}) or {}
    datasets = _pick(args.dataset, section.get("dataset"), default=())
    if isinstance(datasets, str):
        datasets = _datasets(datasets)
    twirl_cfg = config.get("twirl")
    return ICSpec(
        n_list=tuple(_pick(args.n_list, section.get("n_list"), default=(1, 2, 3, 4))),
        dataset_mode=_pick(args.dataset_mode, section.get("dataset_mode"), default="random_per_trial"),
        datasets=tuple(tuple(d) for d in datasets),
        trials_per_index=_pick(args.trials_per_index, section.get("trials_per_index")),
        replicates=int(_pick(args.replicates, section.get("replicates"), (config.get("sweep") or {}).get("replicates"), default=5)),
        twirl=_pick(args.twirl, twirl_cfg if isinstance(twirl_cfg, str) else None, default="none"),
        shot_twirl=bool(_pick(args.shot_twirl, section.get("shot_twirl"), default=False)),
        seed=seed,
    )


def _ic_sources(args, config: dict, seed: int, threads: int):
    section = config.get("protocol", {}) or {}
    source = _pick(args.source, section.get("source"), default="isotropic")
    if source == "sweep":
        return sweep_boxes(_sweep_spec(args, config, seed), threads)
    if source == "isotropic":
        grid = _pick(args.s_grid, section.get("s_grid"), default=[2 + 0.1 * i for i in range(21)])
        return [BoxSource("isotropic", bx.isotropic_box(S)) for S in grid], []
    path = _pick(args.box_file, section.get("box_file"))
    if path is None:
        raise CLIError("file source needs --box-file")
    return [BoxSource(Path(path).stem, bx.read_box(path))], []


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = {}
        if getattr(args, "config", None) is not None:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
            if not isinstance(config, dict):
                raise CLIError("config file must hold a JSON object")
        command = args.command or config.get("command")
        if command is None:
            parser.print_help(sys.stderr)
            return 2
        if args.command is None:
            # subcommand flags were not parsed; let the subparser supply defaults
            args = parser.parse_args([command, *(argv if argv is not None else sys.argv[1:])])
        seed = int(_pick(getattr(args, "seed", None), config.get("seed"), default=0))
        threads = int(_pick(getattr(args, "threads", None), config.get("threads"), default=1))
        out_dir = Path(_pick(getattr(args, "out", None), config.get("output_dir"), default="results"))
        strict = bool(getattr(args, "strict", False))

        if command == "sweep-chsh":
            return cmd_sweep_chsh(_sweep_spec(args, config, seed), out_dir, threads)
        if command == "ic-run":
            sources, skipped = _ic_sources(args, config, seed, threads)
            return cmd_ic_run(sources, _ic_spec(args, config, seed), out_dir, threads, skipped)
        if command == "box-info":
            if args.path is not None:
                box = bx.read_box(args.path)
            elif args.family is not None:
                box = box_from_family(args.family)
            else:
                raise CLIError("box-info needs a box file or --family")
            box = apply_twirl(box, args.twirl or "none")
            text, ns = box_report(box)
            sys.stdout.write(text)
            if args.write is not None:
                bx.write_box(box, args.write)
            return 1 if (strict and not ns.passes) else 0
        if command == "theory":
            grid = _kappa_grid(args, config.get("sweep", {}) or {})
            rows = [[k, qm.theory_S(k)] for k in grid]
            if getattr(args, "out", None) is not None or "output_dir" in config:
                write_csv(out_dir / "theory.csv", THEORY_HEADER, rows)
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(THEORY_HEADER)
            for row in rows:
                w.writerow([fmt(v) for v in row])
            return 0
        raise CLIError(f"unknown command {command!r}")
    except bx.BoxParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CLIError, bx.BoxError, qm.QuantumError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
