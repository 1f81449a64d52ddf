"""Command-line entry point: generate scenes, run sweeps, analyze and report."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import tomli

from . import records as rio
from .planner import LLMPlanner, ScriptedPlanner
from .scene import SceneFormatError, SceneParams, default_scene_set, load_scene, save_scene, validate_scene
from .sim import DEFAULT_PHI_GRID, DEFAULT_RHO_GRID, MODES, DegradationConfig, run_sweep
from .stats import bucket_sr, curve_by_grid, failure_histogram, pearson
from .topograph import dump_graph

log = logging.getLogger("vlnbound")


class CLIError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass
class RunConfig:
    mode: str = "slow"
    master_seed: int = 0
    out: str = "run"
    jobs: int = 1
    rho_grid: Tuple[float, ...] = DEFAULT_RHO_GRID
    phi_grid: Tuple[float, ...] = DEFAULT_PHI_GRID
    lam: float = 0.5
    success_threshold: float = 3.0
    max_steps: int = 20
    delta_safe: float = 0.3
    delta_pass: float = 0.5
    fp_rate: float = 0.0
    distort: str = "none"
    scenes: Tuple[str, ...] = ()
    generate: Optional[dict] = None
    llm: Optional[dict] = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise CLIError("config", f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scenes and self.generate is not None:
            raise CLIError("config", "give either scene paths or [generate] parameters, not both")
        if not self.rho_grid or any(not 0.0 <= r <= 1.0 for r in self.rho_grid):
            raise CLIError("config", f"rho grid values must lie in [0, 1]: {list(self.rho_grid)}")
        if not self.phi_grid or any(not 0.0 < p <= 1.0 for p in self.phi_grid):
            raise CLIError("config", f"phi grid values must lie in (0, 1]: {list(self.phi_grid)}")
        if self.jobs < 1:
            raise CLIError("config", "jobs must be at least 1")
        self.distortion()
        try:
            self.degradation_grid()
        except ValueError as exc:
            raise CLIError("config", str(exc)) from exc

    def distortion(self) -> Tuple[Optional[str], float]:
        if self.distort in ("", "none", None):
            return None, 0.0
        mode, _, prob = self.distort.partition(":")
        try:
            p = float(prob) if prob else 1.0
        except ValueError:
            raise CLIError("config", f"bad --distort value {self.distort!r}; expected MODE[:PROBABILITY]")
        if mode not in ("swap_min_mid", "equalize_min_mid") or not 0.0 <= p <= 1.0:
            raise CLIError("config", f"bad --distort value {self.distort!r}; expected MODE[:PROBABILITY]")
        return mode, p

    def degradation_grid(self) -> List[DegradationConfig]:
        mode, prob = self.distortion()
        common = dict(false_positive_rate=self.fp_rate, distort_mode=mode, distort_probability=prob,
                      lam=self.lam, master_seed=self.master_seed, success_threshold=self.success_threshold,
                      max_steps=self.max_steps, delta_safe=self.delta_safe, delta_pass=self.delta_pass)
        if self.mode == "slow":
            return [DegradationConfig(rho_ret=r, **common) for r in self.rho_grid]
        return [DegradationConfig(phi_iou=p, **common) for p in self.phi_grid]

    def scene_params(self) -> Tuple[SceneParams, int]:
        gen = dict(self.generate or {})
        n_scenes = int(gen.pop("n_scenes", 4))
        if "grid" in gen:
            gen["grid"] = tuple(gen["grid"])
        known = {f.name for f in fields(SceneParams)}
        unknown = set(gen) - known
        if unknown:
            raise CLIError("config", f"unknown [generate] keys {sorted(unknown)}")
        gen.setdefault("delta_safe", self.delta_safe)
        gen.setdefault("delta_pass", self.delta_pass)
        gen.setdefault("min_goal_distance", self.success_threshold)
        return SceneParams(**gen), n_scenes


_TOML_KEYS = {"lambda": "lam", "seed": "master_seed"}


def load_config(path: Optional[str]) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    try:
        data = tomli.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CLIError("io", f"config file not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise CLIError("config", f"{path}: {exc}")
    known = {f.name for f in fields(RunConfig)}
    for key, value in data.items():
        name = _TOML_KEYS.get(key, key).replace("-", "_")
        if name not in known:
            raise CLIError("config", f"{path}: unknown key {key!r}")
        if name in ("rho_grid", "phi_grid", "scenes"):
            value = tuple(value)
        setattr(cfg, name, value)
    return cfg


def _floats(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    mapping = {
        "mode": "mode", "seed": "master_seed", "out": "out", "jobs": "jobs",
        "rho_grid": "rho_grid", "phi_grid": "phi_grid", "lam": "lam", "fp_rate": "fp_rate",
        "distort": "distort", "scenes": "scenes", "success_threshold": "success_threshold",
    }
    for arg, name in mapping.items():
        value = getattr(args, arg, None)
        if value is not None:
            setattr(cfg, name, tuple(value) if name == "scenes" else value)
    if getattr(args, "llm_endpoint", None):
        cfg.llm = dict(cfg.llm or {}, endpoint=args.llm_endpoint)
    if getattr(args, "n_scenes", None) is not None:
        cfg.generate = dict(cfg.generate or {}, n_scenes=args.n_scenes)
    return cfg


# ----------------------------------------------------------------- commands


def build_scenes(cfg: RunConfig):
    if cfg.scenes:
        scenes = []
        for path in cfg.scenes:
            try:
                scene = load_scene(path)
            except FileNotFoundError:
                raise CLIError("io", f"scene file not found: {path}")
            except SceneFormatError as exc:
                raise CLIError("scene", f"{path}: {exc}")
            problems = validate_scene(scene)
            if problems:
                raise CLIError("scene", f"{path}: {problems[0]} ({len(problems)} violation(s))")
            scenes.append(scene)
        return scenes
    params, n_scenes = cfg.scene_params()
    try:
        return default_scene_set(cfg.master_seed, n_scenes, params)
    except ValueError as exc:
        raise CLIError("config", f"scene generation: {exc}")


def cmd_generate(cfg: RunConfig) -> List[Path]:
    if cfg.scenes:
        raise CLIError("config", "generate needs generation parameters, not scene paths")
    out = Path(cfg.out) / "scenes"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for scene in build_scenes(cfg):
        path = out / f"{scene.id}.json"
        save_scene(scene, path)
        written.append(path)
    return written


def _planner(cfg: RunConfig):
    if cfg.llm and cfg.llm.get("endpoint"):
        opts = dict(cfg.llm)
        return LLMPlanner(
            base_url=opts.pop("endpoint"),
            model=opts.pop("model", "gpt-4o"),
            timeout=float(opts.pop("timeout", 30.0)),
            token_env=opts.pop("token_env", "VLNBOUND_LLM_TOKEN"),
            max_requests_per_second=opts.pop("max_requests_per_second", None),
            max_steps=cfg.max_steps,
        )
    return ScriptedPlanner(cfg.max_steps)


def cmd_sweep(cfg: RunConfig, dump_graphs: bool = False) -> Tuple[Path, Path]:
    cfg.validate()
    scenes = build_scenes(cfg)
    grid = cfg.degradation_grid()
    records = run_sweep(scenes, grid, cfg.mode, _planner(cfg), cfg.master_seed, cfg.jobs,
                        keep_graphs=dump_graphs and cfg.mode == "slow")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rec_path = out / f"records_{cfg.mode}.csv"
    met_path = out / f"metrics_{cfg.mode}.csv"
    rio.write_records(records, rec_path)
    curve = curve_by_grid(records)
    met_path.write_text(rio.metrics_to_csv([(p.grid_value, p.metrics) for p in curve]))
    settings = asdict(cfg)
    settings["n_episodes"] = sum(len(s.episodes) for s in scenes)
    for key in ("jobs", "out"):
        settings.pop(key)
    (out / f"run_{cfg.mode}.json").write_text(json.dumps(settings, indent=1, sort_keys=True) + "\n")
    if dump_graphs and cfg.mode == "slow":
        gdir = out / "graphs"
        gdir.mkdir(exist_ok=True)
        for rec in records:
            degraded, ideal = rec.outcome.graphs
            stem = f"{rec.outcome.episode_id}_g{rec.grid_index}"
            (gdir / f"{stem}_degraded.tsv").write_text(dump_graph(degraded))
            (gdir / f"{stem}_ideal.tsv").write_text(dump_graph(ideal))
    return rec_path, met_path


def _record_files(target: Path) -> List[Path]:
    if target.is_dir():
        files = sorted(target.glob("records_*.csv"))
        if not files:
            raise CLIError("io", f"no records_*.csv in {target}")
        return files
    if not target.exists():
        raise CLIError("io", f"no such file or directory: {target}")
    return [target]


def _load(path: Path):
    try:
        recs = rio.read_records(path)
    except (ValueError, KeyError) as exc:
        raise CLIError("records", f"{path}: {exc}")
    if not recs:
        raise CLIError("records", f"{path}: no records")
    return recs


def correlation(curve) -> Optional[float]:
    xs = [p.grid_value for p in curve if not math.isnan(p.mean_s_match)]
    ys = [p.mean_s_match for p in curve if not math.isnan(p.mean_s_match)]
    try:
        return pearson(xs, ys)
    except ValueError:
        return None


def cmd_analyze(target: str, out: Optional[str] = None, bin_width: float = 0.1) -> List[Path]:
    written = []
    for path in _record_files(Path(target)):
        recs = _load(path)
        mode = recs[0].mode
        dest = Path(out) if out else path.parent
        dest.mkdir(parents=True, exist_ok=True)
        curve = curve_by_grid(recs)
        lines = ["grid_value,SR,OSR,SPL,n,mean_s_match"]
        for p in curve:
            m = p.metrics
            sm = "" if math.isnan(p.mean_s_match) else f"{p.mean_s_match:.6f}"
            lines.append(f"{p.grid_value!r},{m.sr:.4f},{m.osr:.4f},{m.spl:.4f},{m.n_episodes},{sm}")
        curves_path = dest / f"curves_{mode}.csv"
        curves_path.write_text("\n".join(lines) + "\n")
        written.append(curves_path)
        scored = [(r.outcome.s_match, r.outcome.success) for r in recs if not math.isnan(r.outcome.s_match)]
        if scored:
            try:
                buckets = bucket_sr(scored, bin_width)
            except ValueError as exc:
                raise CLIError("config", str(exc))
            rows = ["lower,upper,n,SR"]
            rows += [f"{b.lower:.4f},{b.upper:.4f},{b.n},{'' if b.sr is None else f'{b.sr:.4f}'}" for b in buckets]
            bpath = dest / f"buckets_{mode}.csv"
            bpath.write_text("\n".join(rows) + "\n")
            written.append(bpath)
            r = correlation(curve)
            cpath = dest / f"correlation_{mode}.txt"
            cpath.write_text(f"pearson_grid_vs_mean_s_match\t{'undefined' if r is None else f'{r:.6f}'}\n")
            written.append(cpath)
    return written


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> List[str]:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    fmt = "  ".join(f"{{:>{w}}}" for w in widths)
    return [fmt.format(*header)] + [fmt.format(*map(str, r)) for r in rows]


def cmd_report(run_dir: str) -> str:
    run = Path(run_dir)
    files = _record_files(run)
    lines: List[str] = []
    for path in files:
        recs = _load(path)
        mode = recs[0].mode
        curve = curve_by_grid(recs)
        if lines:
            lines.append("")
        if mode == "slow":
            lines.append("[slow planner] retention ratio -> SR / OSR / SPL")
            lines += _table(("rho", "SR", "OSR", "SPL", "n"),
                            [(f"{p.grid_value:.2f}", f"{p.metrics.sr:.1f}", f"{p.metrics.osr:.1f}",
                              f"{p.metrics.spl:.1f}", p.metrics.n_episodes) for p in curve])
            lines.append("")
            lines.append("[slow planner] retention ratio -> mean S_match")
            lines += _table(("rho", "S_match"), [(f"{p.grid_value:.2f}", f"{p.mean_s_match:.4f}") for p in curve])
            r = correlation(curve)
            lines.append(f"pearson(rho, S_match) = {'undefined' if r is None else f'{r:.4f}'}")
            lines.append("")
            lines.append("[slow planner] S_match bucket -> SR")
            scored = [(rec.outcome.s_match, rec.outcome.success) for rec in recs
                      if not math.isnan(rec.outcome.s_match)]
            if scored:
                lines += _table(("bucket", "n", "SR"),
                                [(f"[{b.lower:.1f},{b.upper:.1f}{']' if b.upper == 1.0 else ')'}", b.n,
                                  "-" if b.sr is None else f"{b.sr:.1f}") for b in bucket_sr(scored)])
        else:
            lines.append("[fast navigator] target IoU -> SR / OSR / SPL")
            lines += _table(("phi", "SR", "OSR", "SPL", "n"),
                            [(f"{p.grid_value:.2f}", f"{p.metrics.sr:.1f}", f"{p.metrics.osr:.1f}",
                              f"{p.metrics.spl:.1f}", p.metrics.n_episodes) for p in curve])
        hist = failure_histogram(recs)
        lines.append("")
        lines.append(f"[{mode}] failure attribution (reason, skill, count)")
        lines += _table(("reason", "skill", "count"), hist) if hist else ["none"]
    text = "\n".join(lines) + "\n"
    (run / "report.txt").write_text(text)
    return text


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vlnbound", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output directory")

    gen = sub.add_parser("generate", help="write synthetic scene files")
    common(gen)
    gen.add_argument("--n-scenes", type=int)

    sw = sub.add_parser("sweep", help="run a degradation sweep")
    common(sw)
    sw.add_argument("--mode", choices=MODES)
    sw.add_argument("--jobs", type=int)
    sw.add_argument("--rho-grid", type=_floats)
    sw.add_argument("--phi-grid", type=_floats)
    sw.add_argument("--lambda", dest="lam", type=float)
    sw.add_argument("--fp-rate", type=float)
    sw.add_argument("--distort", help="MODE[:PROBABILITY], e.g. swap_min_mid:1.0, or none")
    sw.add_argument("--success-threshold", type=float)
    sw.add_argument("--scenes", nargs="+", help="scene JSON files instead of generated scenes")
    sw.add_argument("--n-scenes", type=int)
    sw.add_argument("--llm-endpoint", help="chat-completion base URL; enables the LLM planner")
    sw.add_argument("--dump-graphs", action="store_true", help="write per-episode graph dumps (slow mode)")

    an = sub.add_parser("analyze", help="bucket and curve statistics from records")
    an.add_argument("target", help="run directory or records CSV")
    an.add_argument("--out")
    an.add_argument("--bin-width", type=float, default=0.1)

    rp = sub.add_parser("report", help="human-readable summary of a run directory")
    rp.add_argument("run_dir")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            cfg = apply_overrides(load_config(args.config), args)
            for path in cmd_generate(cfg):
                print(path)
        elif args.command == "sweep":
            cfg = apply_overrides(load_config(args.config), args)
            for path in cmd_sweep(cfg, dump_graphs=args.dump_graphs):
                print(path)
        elif args.command == "analyze":
            for path in cmd_analyze(args.target, args.out, args.bin_width):
                print(path)
        elif args.command == "report":
            sys.stdout.write(cmd_report(args.run_dir))
    except CLIError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
