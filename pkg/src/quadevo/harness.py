"""Experiment orchestration: dual-voltage evolution, re-evaluation,
statistics and figures, all persisted as plain files.

Archive layout (one directory per run)::

    <out>/v14.8_s1/
        evaluations.jsonl    one JSON object per evaluated individual
        populations.json     survivor (generation, index) pairs per generation
        final_population.json
        config.json
        seed.json

Every report and figure is computed from these files alone.
"""
from __future__ import annotations

import configparser
import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import analysis, nsga2, simbench
from .genome import CONTROL_GENES, MORPHOLOGY_GENES, PARAM_NAMES, DomainError, decode
from .simbench import EvalConfig

log = logging.getLogger(__name__)

ARCHIVE_FILES = ("evaluations.jsonl", "populations.json", "final_population.json", "config.json", "seed.json")


class ConfigError(ValueError):
    """Malformed or out-of-range experiment configuration."""


@dataclass(frozen=True)
class ReevalConfig:
    selection: int = 5
    repeats: int = 10
    voltage: float = 12.0
    seed: int = 1000  # first evaluation seed; repeat i uses seed + i


@dataclass(frozen=True)
class ExperimentConfig:
    voltages: tuple[float, ...] = (14.8, 12.0)
    runs_per_voltage: int = 3
    seed: int = 1  # run i (0-based) uses seed + i at every voltage
    evo: nsga2.EvoConfig = field(default_factory=nsga2.EvoConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    reeval: ReevalConfig = field(default_factory=ReevalConfig)
    output_dir: str = "results"

    def __post_init__(self):
        if not self.voltages:
            raise ConfigError("at least one voltage is required")
        for v in self.voltages:
            if not 12.0 <= v <= 14.8:
                raise ConfigError(f"voltage {v} outside [12.0, 14.8]")
        if self.runs_per_voltage < 1:
            raise ConfigError("runs_per_voltage must be positive")

    @property
    def run_seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.runs_per_voltage)]

    def to_dict(self) -> dict:
        return {
            "voltages": list(self.voltages),
            "runs_per_voltage": self.runs_per_voltage,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "evo": asdict(self.evo),
            "eval": asdict(self.eval),
            "reeval": asdict(self.reeval),
        }


_SECTIONS = {"evolution": nsga2.EvoConfig, "evaluation": EvalConfig, "reevaluation": ReevalConfig}
_ATTR = {"evolution": "evo", "evaluation": "eval", "reevaluation": "reeval"}


def _coerce(cls, key: str, raw: str):
    kinds = {f.name: f.type for f in fields(cls)}
    if key not in kinds:
        raise ConfigError(f"unknown key {key!r} for {cls.__name__}")
    kind = str(kinds[key])
    try:
        if kind == "bool":
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if kind == "int":
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def load_config(path: str | os.PathLike | None = None, **overrides) -> ExperimentConfig:
    """Read an INI-style config; missing keys keep their defaults.

    Recognised sections are ``[experiment]`` (voltages, runs_per_voltage,
    seed, output_dir), ``[evolution]``, ``[evaluation]`` and
    ``[reevaluation]``; the last three take the field names of
    :class:`~quadevo.nsga2.EvoConfig`, :class:`~quadevo.simbench.EvalConfig`
    and :class:`ReevalConfig`. Keyword overrides use the same names as the
    command-line flags (seed, out, runs, generations, population, voltage).
    """
    cp = configparser.ConfigParser()
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
    try:
        parts = {}
        for section, cls in _SECTIONS.items():
            kw = {k: _coerce(cls, k, v) for k, v in cp.items(section)} if cp.has_section(section) else {}
            parts[_ATTR[section]] = cls(**kw)
        kw = {}
        if cp.has_section("experiment"):
            for key, raw in cp.items("experiment"):
                if key == "voltages":
                    kw[key] = tuple(float(v) for v in raw.replace(",", " ").split())
                elif key in ("runs_per_voltage", "seed"):
                    kw[key] = int(raw)
                elif key == "output_dir":
                    kw[key] = raw.strip()
                else:
                    raise ConfigError(f"unknown key {key!r} in [experiment]")
        unknown = set(cp.sections()) - set(_SECTIONS) - {"experiment"}
        if unknown:
            raise ConfigError(f"unknown sections: {sorted(unknown)}")
        cfg = ExperimentConfig(**kw, **parts)
        return apply_overrides(cfg, **overrides)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def apply_overrides(cfg: ExperimentConfig, *, seed=None, out=None, runs=None, generations=None,
                    population=None, voltage=None) -> ExperimentConfig:
    try:
        evo = cfg.evo
        if generations is not None:
            evo = replace(evo, generations=generations)
        if population is not None:
            evo = replace(evo, population=population)
        changes = {"evo": evo}
        if seed is not None:
            changes["seed"] = seed
        if out is not None:
            changes["output_dir"] = str(out)
        if runs is not None:
            changes["runs_per_voltage"] = runs
        if voltage is not None:
            changes["voltages"] = (float(voltage),)
        return replace(cfg, **changes)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


# -- archives -----------------------------------------------------------------

def archive_name(voltage: float, seed: int) -> str:
    return f"v{voltage:.1f}_s{seed}"


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _record(ind: nsga2.Individual, run: int, seed: int, voltage: float) -> dict:
    return {
        "run": run,
        "seed": seed,
        "voltage": voltage,
        "generation": ind.generation,
        "index": ind.index,
        "genotype": [float(v) for v in ind.genotype],
        "params": decode(ind.genotype).to_dict(),
        "speed": ind.fitness[0],
        "stability": ind.fitness[1],
        "slip_count": ind.slip_count,
        "fell": ind.fell,
        "sigma": ind.sigma,
        "eval_seed": ind.eval_seed,
    }


@dataclass
class RunArchive:
    path: Path
    voltage: float
    seed: int
    run: int
    records: list[dict]
    populations: list[list[tuple[int, int]]]

    def lookup(self, generation: int, index: int) -> dict:
        return self._by_key[(generation, index)]

    def __post_init__(self):
        self._by_key = {(r["generation"], r["index"]): r for r in self.records}

    @property
    def final_population(self) -> list[dict]:
        return [self.lookup(g, i) for g, i in self.populations[-1]] if self.populations else []

    def survivors(self, generation: int) -> list[dict]:
        return [self.lookup(g, i) for g, i in self.populations[generation]]


def _check_writable(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc


def write_run(cfg: ExperimentConfig, voltage: float, run: int, seed: int) -> Path:
    """Evolve one run and write its archive; returns the archive directory."""
    out = Path(cfg.output_dir) / archive_name(voltage, seed)
    out.mkdir(parents=True, exist_ok=True)
    ecfg = cfg.eval.with_(voltage=voltage)

    def evaluator(genes, eval_seed):
        return simbench.evaluate(decode(genes), None, ecfg.with_(seed=eval_seed))

    with open(out / "evaluations.jsonl", "w") as fh:
        def on_evaluated(ind):
            fh.write(_dump(_record(ind, run, seed, voltage)) + "\n")
            fh.flush()

        hist = nsga2.run(evaluator, cfg.evo, seed, on_evaluated=on_evaluated)

    pops = [[[ind.generation, ind.index] for ind in pop] for pop in hist.populations]
    (out / "populations.json").write_text(_dump(pops) + "\n")
    final = [_record(ind, run, seed, voltage) | {"rank": ind.rank, "crowding": _finite(ind.crowding)}
             for ind in hist.final_population]
    (out / "final_population.json").write_text(_dump(final) + "\n")
    (out / "config.json").write_text(_dump(cfg.to_dict() | {"voltage": voltage}) + "\n")
    (out / "seed.json").write_text(_dump({"run": run, "seed": seed, "voltage": voltage}) + "\n")
    return out


def _finite(x: float):
    return x if np.isfinite(x) else None


def load_archive(path: str | os.PathLike) -> RunArchive:
    path = Path(path)
    missing = [f for f in ARCHIVE_FILES if not (path / f).is_file()]
    if missing:
        raise FileNotFoundError(f"{path} is not a complete run archive (missing {', '.join(missing)})")
    with open(path / "evaluations.jsonl") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    meta = json.loads((path / "seed.json").read_text())
    pops = [[tuple(k) for k in gen] for gen in json.loads((path / "populations.json").read_text())]
    return RunArchive(path, float(meta["voltage"]), int(meta["seed"]), int(meta["run"]), records, pops)


def find_archives(root: str | os.PathLike) -> list[RunArchive]:
    """All run archives directly below ``root``, sorted by voltage (high first) then seed."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"no such directory: {root}")
    found = [load_archive(p) for p in sorted(root.iterdir()) if (p / "seed.json").is_file()]
    return sorted(found, key=lambda a: (-a.voltage, a.seed))


def group_by_voltage(archives: Iterable[RunArchive]) -> dict[float, list[RunArchive]]:
    groups: dict[float, list[RunArchive]] = {}
    for a in archives:
        groups.setdefault(a.voltage, []).append(a)
    return dict(sorted(groups.items(), key=lambda kv: -kv[0]))


# -- commands -----------------------------------------------------------------

def cmd_evolve(cfg: ExperimentConfig) -> list[Path]:
    """Run ``runs_per_voltage`` seeded runs at every voltage."""
    _check_writable(Path(cfg.output_dir))
    (Path(cfg.output_dir) / "experiment.json").write_text(_dump(cfg.to_dict()) + "\n")
    paths = []
    for voltage in cfg.voltages:
        for run, seed in enumerate(cfg.run_seeds):
            log.info("evolving %s", archive_name(voltage, seed))
            paths.append(write_run(cfg, voltage, run, seed))
    return paths


def front_zero(records: Sequence[dict]) -> list[dict]:
    fronts = nsga2.fast_non_dominated_sort([(r["speed"], r["stability"]) for r in records])
    return [records[i] for i in fronts[0]] if fronts else []


def select_for_reevaluation(archives: Sequence[RunArchive], selection: int = 5) -> list[dict]:
    """Pick individuals from the pooled final front at evenly spaced speed quantiles.

    The front is sorted by speed (ties by seed, generation, index) and the
    member nearest each quantile 0, 1/(k-1), ..., 1 is taken; duplicates
    collapse, so small fronts yield fewer picks.
    """
    if selection < 1:
        raise DomainError("selection must be positive")
    pool = [r for a in archives for r in a.final_population]
    if not pool:
        return []
    front = sorted(front_zero(pool), key=lambda r: (r["speed"], r["seed"], r["generation"], r["index"]))
    m = len(front)
    qs = [0.5] if selection == 1 else np.linspace(0.0, 1.0, selection)
    picks = []
    for q in qs:
        k = int(round(q * (m - 1)))
        if front[k] not in picks:
            picks.append(front[k])
    return picks


def _summary(values: Sequence[float]) -> dict:
    v = np.asarray(values, dtype=float)
    d = v - v[0]  # identical repeats give an exact zero spread
    return {"mean": float(v.mean()), "std": float((d - d.mean()).std(ddof=1)) if len(v) > 1 else 0.0,
            "values": [float(x) for x in v]}


def _pct(new: float, old: float) -> float | None:
    return 100.0 * (new - old) / abs(old) if old != 0 else None


def cmd_reevaluate(archives: Sequence[RunArchive], eval_cfg: EvalConfig, reeval: ReevalConfig = ReevalConfig(),
                   alpha: float = 0.05) -> dict:
    """Re-evaluate selected front members at their own and at ``reeval.voltage``."""
    if not archives:
        raise FileNotFoundError("no archives to re-evaluate")
    picks = select_for_reevaluation(archives, reeval.selection)
    rows = []
    for r in picks:
        p = decode(r["genotype"])
        per_voltage = {}
        for label, v in (("original", r["voltage"]), ("reduced", reeval.voltage)):
            res = simbench.reevaluate(p, None, eval_cfg.with_(voltage=v, seed=reeval.seed), reeval.repeats)
            per_voltage[label] = {"voltage": v,
                                  "speed": _summary([x.speed for x in res]),
                                  "stability": _summary([x.stability for x in res])}
        row = {"source": {k: r[k] for k in ("seed", "voltage", "generation", "index")},
               "genotype": r["genotype"], "params": r["params"],
               "archived": {"speed": r["speed"], "stability": r["stability"]}, **per_voltage}
        for obj in ("speed", "stability"):
            a, b = per_voltage["original"][obj], per_voltage["reduced"][obj]
            mw = analysis.mann_whitney_u(a["values"], b["values"])
            row[f"{obj}_change_pct"] = _pct(b["mean"], a["mean"])
            row[f"{obj}_U"] = mw.U
            row[f"{obj}_p_raw"] = mw.p
        rows.append(row)
    tests = [(i, obj) for i in range(len(rows)) for obj in ("speed", "stability")]
    adjusted = analysis.holm_correction([rows[i][f"{obj}_p_raw"] for i, obj in tests]) if tests else []
    for (i, obj), ph in zip(tests, adjusted):
        rows[i][f"{obj}_p_holm"] = float(ph)
        rows[i][f"{obj}_significant"] = bool(ph < alpha)
    return {"repeats": reeval.repeats, "reduced_voltage": reeval.voltage, "alpha": alpha,
            "eval_seed_start": reeval.seed, "individuals": rows}


def _genes(archives: Sequence[RunArchive]) -> np.ndarray:
    return np.array([r["genotype"] for a in archives for r in a.final_population])


def analyze_groups(a: Sequence[RunArchive], b: Sequence[RunArchive], labels=("a", "b")) -> dict:
    """Morphology and control comparisons between two pooled final populations."""
    ga, gb = _genes(a), _genes(b)
    if len(ga) < 2 or len(gb) < 2:
        raise DomainError("each group needs at least 2 individuals")
    pairs = {
        "morphology": (analysis.GroupSample(labels[0], ga[:, MORPHOLOGY_GENES]),
                       analysis.GroupSample(labels[1], gb[:, MORPHOLOGY_GENES])),
        "control": (analysis.GroupSample(labels[0], ga[:, CONTROL_GENES]),
                    analysis.GroupSample(labels[1], gb[:, CONTROL_GENES])),
    }
    comps = analysis.compare(pairs)
    return {"groups": list(labels), "n": [len(ga), len(gb)],
            "genes": {"morphology": list(PARAM_NAMES[MORPHOLOGY_GENES]), "control": list(PARAM_NAMES[CONTROL_GENES])},
            "comparisons": [c.to_dict() for c in comps]}


def cmd_analyze(archives: Sequence[RunArchive]) -> dict:
    """Compare the highest- and lowest-voltage groups."""
    groups = group_by_voltage(archives)
    if len(groups) < 2:
        raise DomainError(f"need at least 2 voltage groups, found {len(groups)}")
    (va, ra), (vb, rb) = list(groups.items())[0], list(groups.items())[-1]
    return analyze_groups(ra, rb, labels=(f"{va:.1f}V", f"{vb:.1f}V"))


# -- figures ------------------------------------------------------------------

def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def plot_data(archives: Sequence[RunArchive]) -> dict[str, tuple[list[str], list[list]]]:
    """Every table behind the figures, keyed by CSV file name."""
    tables: dict[str, tuple[list[str], list[list]]] = {}
    ev_head = ["voltage", "seed", "generation", "index", "speed", "stability", *PARAM_NAMES]
    tables["evaluations.csv"] = (ev_head, [
        [a.voltage, a.seed, r["generation"], r["index"], r["speed"], r["stability"],
         *[r["params"][k] for k in PARAM_NAMES]]
        for a in archives for r in a.records])
    for v, group in group_by_voltage(archives).items():
        tag = f"v{v:.1f}"
        final = [(a, r) for a in group for r in a.final_population]
        tables[f"objectives_{tag}.csv"] = (["seed", "generation", "index", "speed", "stability"], [
            [a.seed, r["generation"], r["index"], r["speed"], r["stability"]] for a, r in final])
        tables[f"morphology_{tag}.csv"] = (["seed", "femur_ext", "tibia_ext", "speed"], [
            [a.seed, r["params"]["femur_ext"], r["params"]["tibia_ext"], r["speed"]] for a, r in final])
        trace = []
        for a in group:
            for g in range(len(a.populations)):
                for r in sorted(front_zero(a.survivors(g)), key=lambda r: r["speed"]):
                    trace.append([a.seed, g, r["speed"], r["stability"]])
        tables[f"fronts_{tag}.csv"] = (["seed", "generation", "speed", "stability"], trace)
    return tables


def cmd_plot(archives: Sequence[RunArchive], out: str | os.PathLike) -> list[Path]:
    """Write SVG figures and their CSV tables; returns the written paths.

    An empty archive list writes nothing and returns an empty list.
    """
    if not archives:
        return []
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "quadevo"
    out = Path(out)
    _check_writable(out)
    tables = plot_data(archives)
    written = []
    for name, (head, rows) in tables.items():
        _write_csv(out / name, head, rows)
        written.append(out / name)

    def save(fig, name):
        fig.tight_layout()
        fig.savefig(out / name, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(out / name)

    for v, group in group_by_voltage(archives).items():
        tag = f"v{v:.1f}"
        _, obj = tables[f"objectives_{tag}.csv"]
        fig, ax = plt.subplots(figsize=(5, 4))
        for seed in sorted({row[0] for row in obj}):
            pts = np.array([row[3:5] for row in obj if row[0] == seed], dtype=float)
            ax.scatter(pts[:, 0], pts[:, 1], label=f"seed {seed}", s=18)
        ax.set_xlabel("speed (m/min)")
        ax.set_ylabel("stability")
        ax.set_title(f"final populations, {v:.1f} V (better: top right)")
        ax.legend(fontsize=7)
        save(fig, f"objectives_{tag}.svg")

        _, morph = tables[f"morphology_{tag}.csv"]
        m = np.array([row[1:4] for row in morph], dtype=float)
        fig, ax = plt.subplots(figsize=(5, 4))
        sc = ax.scatter(m[:, 0] * 1000, m[:, 1] * 1000, c=m[:, 2], cmap="viridis", s=22)
        fig.colorbar(sc, ax=ax, label="speed (m/min)")
        ax.set_xlabel("femur extension (mm)")
        ax.set_ylabel("tibia extension (mm)")
        ax.set_title(f"leg morphology, {v:.1f} V")
        save(fig, f"morphology_{tag}.svg")

        _, trace = tables[f"fronts_{tag}.csv"]
        gens = sorted({row[1] for row in trace})
        cmap = plt.get_cmap("plasma", max(len(gens), 2))
        fig, ax = plt.subplots(figsize=(5, 4))
        for seed in sorted({row[0] for row in trace}):
            for g in gens:
                pts = np.array([row[2:4] for row in trace if row[0] == seed and row[1] == g], dtype=float)
                if len(pts):
                    ax.plot(pts[:, 0], pts[:, 1], "o-", color=cmap(g), ms=3, lw=0.8,
                            label=f"gen {g}" if seed == trace[0][0] else None)
        ax.set_xlabel("speed (m/min)")
        ax.set_ylabel("stability")
        ax.set_title(f"front 0 per generation, {v:.1f} V")
        ax.legend(fontsize=6, ncol=2)
        save(fig, f"fronts_{tag}.svg")
    return written


def write_json(path: str | os.PathLike, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path
