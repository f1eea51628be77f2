"""Table-reproduction harness: model presets, policy sweeps, comparison statistics."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from . import seeding
from .coding import CodeConfig
from .engine import TrialConfig, run_cell
from .errors import ParameterError, ValidationError
from .linkmodel import LinkSpec, delay_preset, loss_preset
from .netstate import Topology
from .policy import POLICY_KINDS, PolicyConfig

MESSAGE_SIZE = 64
CHUNK_SIZES = (8, 32)
LENGTHS = (2, 8)
DEFAULT_M = 4
DEFAULT_DELTA = 4

CSV_COLUMNS = (
    "table", "cell", "policy", "delay_model", "loss_model", "L", "k", "chunk_size",
    "m", "delta", "realizations", "trials", "mean", "stderr", "seed", "runtime_ms",
)

# runs per cell: (realizations, trials)
SCALES = {
    "paper": {p: (100, 100) for p in POLICY_KINDS},
    "desk": {"random": (20, 20), "rp": (20, 20), "lrf": (20, 20), "mdf": (10, 10), "mcmf": (10, 10)},
}


@dataclass(frozen=True)
class Preset:
    delay_model: str
    loss_model: str

    def link_specs(self, L: int) -> list:
        delays = delay_preset(self.delay_model, L)
        losses = loss_preset(self.loss_model, L)
        return [LinkSpec(lo, de) for lo, de in zip(losses, delays)]


@dataclass(frozen=True)
class Cell:
    preset: Preset
    L: int
    chunk_size: int
    k: int = MESSAGE_SIZE

    @property
    def label(self) -> str:
        return f"d{self.preset.delay_model}-l{self.preset.loss_model}-L{self.L}-c{self.chunk_size}"


def _grid(presets) -> list:
    return [Cell(p, L, c) for p in presets for L in LENGTHS for c in CHUNK_SIZES]


_LOSSLESS_IDENTICAL = [Preset(d, "none") for d in ("I", "II", "III")]
_LOSSLESS_MIXED = [Preset(d, "none") for d in ("IV", "V")]
_LOSSY_IDENTICAL = [Preset("unit", "I")]
_LOSSY_MIXED = [Preset("unit", lo) for lo in ("II", "III")]

# delivery-time tables and the relative-statistics tables built from the same cells
TABLES = {
    "II": _LOSSLESS_IDENTICAL,
    "III": _LOSSLESS_MIXED,
    "IV": _LOSSLESS_IDENTICAL,
    "V": _LOSSLESS_MIXED,
    "VII": _LOSSY_IDENTICAL,
    "VIII": _LOSSY_MIXED,
    "IX": _LOSSY_IDENTICAL + _LOSSY_MIXED,
}


def table_cells(table: str) -> list:
    if table not in TABLES:
        raise ValidationError("table", f"unknown table {table!r}; choose from {sorted(TABLES)}")
    return _grid(TABLES[table])


# --- comparison statistics ---------------------------------------------------


@dataclass
class ComparisonRow:
    means: dict
    I1: float
    I2: float
    I_R: dict
    I_E: float
    I_P: float

    def as_dict(self) -> dict:
        return {
            "means": dict(self.means), "I1": self.I1, "I2": self.I2,
            "I_R": dict(self.I_R), "I_E": self.I_E, "I_P": self.I_P,
        }


def improvement_stats(means: Mapping[str, float]) -> ComparisonRow:
    """Relative delivery-time improvements, in percent."""
    for p in POLICY_KINDS:
        if p not in means:
            raise ParameterError(f"missing mean for policy {p!r}")
        if not means[p] > 0:
            raise ParameterError(f"mean for {p!r} must be positive, got {means[p]}")
    rand, rp, lrf = float(means["random"]), float(means["rp"]), float(means["lrf"])
    mdf, mcmf = float(means["mdf"]), float(means["mcmf"])
    best = min(rp, lrf)
    return ComparisonRow(
        means={p: float(means[p]) for p in POLICY_KINDS},
        I1=100 * (best - mdf) / best,
        I2=100 * (best - mcmf) / best,
        I_R={p: 100 * (rand - float(means[p])) / rand for p in POLICY_KINDS if p != "random"},
        I_E=100 * (lrf - rp) / lrf,
        I_P=100 * (mcmf - mdf) / mcmf,
    )


# --- sweeps ----------------------------------------------------------------------


@dataclass
class Row:
    table: str
    cell: str
    policy: str
    delay_model: str
    loss_model: str
    L: int
    k: int
    chunk_size: int
    m: int
    delta: int
    realizations: int
    trials: int
    mean: float
    stderr: float
    seed: int
    runtime_ms: Optional[int] = None

    def as_list(self) -> list:
        vals = []
        for col in CSV_COLUMNS:
            v = getattr(self, col)
            if v is None:
                vals.append("")
            elif isinstance(v, float):
                vals.append(f"{v:.6f}")
            else:
                vals.append(str(v))
        return vals


@dataclass
class TableResult:
    table: str
    scale: str
    seed: int
    runs: dict
    rows: list = field(default_factory=list)
    comparisons: dict = field(default_factory=dict)  # cell label -> ComparisonRow

    def header(self) -> str:
        runs = ";".join(f"{p}={r}x{t}" for p, (r, t) in self.runs.items())
        return f"# table={self.table} scale={self.scale} master_seed={self.seed} runs_per_cell={runs}"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self.header() + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow(row.as_list())
        return buf.getvalue()

    def to_json(self) -> str:
        data = {
            "table": self.table,
            "scale": self.scale,
            "master_seed": self.seed,
            "runs_per_cell": {p: list(rt) for p, rt in self.runs.items()},
            "rows": [dict(zip(CSV_COLUMNS, r.as_list())) for r in self.rows],
            "comparisons": {c: cmp.as_dict() for c, cmp in self.comparisons.items()},
        }
        return json.dumps(data, indent=2, sort_keys=True) + "\n"


def cell_seed(master: int, cell: Cell) -> int:
    """Seed shared by every policy of ``cell`` and by every table containing it."""
    return seeding.derive(master, seeding.label_key(cell.label))


def run_table(
    table: str,
    scale: str = "desk",
    seed: int = 0,
    jobs: int = 1,
    cells: Optional[Sequence[str]] = None,
    policies: Sequence[str] = POLICY_KINDS,
    m: int = DEFAULT_M,
    delta: int = DEFAULT_DELTA,
    record_runtime: bool = False,
) -> TableResult:
    """Run every cell of ``table``; ``cells`` optionally restricts to the given labels."""
    if scale not in SCALES:
        raise ValidationError("scale", f"unknown scale {scale!r}; choose from {sorted(SCALES)}")
    grid = table_cells(table)
    if cells is not None:
        wanted = set(cells)
        unknown = wanted - {c.label for c in grid}
        if unknown:
            raise ValidationError("cells", f"not in table {table}: {sorted(unknown)}")
        grid = [c for c in grid if c.label in wanted]
    runs = {p: SCALES[scale][p] for p in policies}
    result = TableResult(table, scale, seed, runs)
    for cell in grid:
        topo = Topology.line(cell.L, cell.preset.link_specs(cell.L))
        code = CodeConfig(cell.k, cell.k // cell.chunk_size)
        cseed = cell_seed(seed, cell)
        means = {}
        for p in policies:
            r, t = runs[p]
            pcfg = PolicyConfig(p, m=m, delta=delta)
            start = time.perf_counter()
            res = run_cell(TrialConfig(topo, code, pcfg), r, t, cseed, jobs)
            elapsed = round((time.perf_counter() - start) * 1000)
            means[p] = res.mean
            result.rows.append(Row(
                table, cell.label, p, cell.preset.delay_model, cell.preset.loss_model,
                cell.L, cell.k, cell.chunk_size, m, delta, r, t, res.mean, res.stderr, cseed,
                elapsed if record_runtime else None,
            ))
        if all(p in means for p in POLICY_KINDS):
            result.comparisons[cell.label] = improvement_stats(means)
    return result
