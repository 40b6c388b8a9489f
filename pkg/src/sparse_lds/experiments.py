"""Random system ensembles, recovery trials, and desk-scale aggregations.

Randomness comes from a counter-based generator (Philox) keyed by explicit
stream tuples (seed, tag, cell, system, trial), so every cell, system, and
trial draws from its own stream and results are reproducible regardless of
execution order or parallelism. All aggregation outputs are sorted on their
keys and CSV floats are written with repr, making reruns byte-identical.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .certify import Classification, Mode, NscInterval, necessary_condition, sufficient_condition
from .lds import LinearSystem, build_operators, simulate
from .matrixcore import rank
from .recovery import recovery_success, sefati_sufficient, solve_d1
from .sparsity import Asc

__all__ = [
    "AggregateStats",
    "CellResult",
    "ConfigError",
    "ExperimentConfig",
    "PhaseCell",
    "ScatterPoint",
    "SystemCert",
    "TrialRecord",
    "gen_system",
    "gen_trial",
    "phase_grid",
    "rng_from",
    "run_cell",
    "run_ensemble",
    "scatter",
    "table1",
    "write_manifest",
    "write_phase_csv",
    "write_scatter_csv",
    "write_table1_csv",
    "write_trials_csv",
]

_TAG_SYSTEM = 0
_TAG_TRIAL = 1

_SPECTRAL_RADIUS_CAP = 0.9


class ConfigError(ValueError):
    """Invalid experiment configuration; carries the offending field name."""

    def __init__(self, fieldname: str, message: str):
        super().__init__(f"field '{fieldname}': {message}")
        self.field = fieldname


def rng_from(key) -> np.random.Generator:
    """Counter-based generator for an explicit stream key (int or tuple of ints)."""
    if isinstance(key, (int, np.integer)):
        key = (int(key),)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(tuple(int(k) for k in key))))


def gen_system(seed, n: int, m: int, p: int) -> LinearSystem:
    """Random system: Gaussian entries, state matrix rescaled to spectral radius < 0.9.

    State and input matrices have entry variance 1/n, the output matrix unit
    variance. Rescaling (rather than rejection) keeps generation deterministic
    in the seed.
    """
    rng = rng_from(seed)
    a = rng.normal(0.0, 1.0 / np.sqrt(n), size=(n, n))
    radius = float(np.abs(np.linalg.eigvals(a)).max())
    if radius >= _SPECTRAL_RADIUS_CAP:
        a *= _SPECTRAL_RADIUS_CAP * (1.0 - 1e-6) / radius
    psi = rng.normal(0.0, 1.0 / np.sqrt(n), size=(n, m))
    c = rng.normal(0.0, 1.0, size=(p, n))
    return LinearSystem(a=a, psi=psi, c=c)


def gen_trial(
    seed,
    system: LinearSystem,
    s: int,
    horizon: int,
    input_range=(-5.0, 5.0),
    x0_range=(-5.0, 5.0),
):
    """Random initial state and entrywise s-sparse inputs for one trial.

    Each time slice gets a uniformly random size-s support (without
    replacement) with nonzeros uniform on the input range.
    """
    rng = rng_from(seed)
    m = system.m
    if not 0 <= s <= m:
        raise ValueError(f"sparsity level {s} outside [0, {m}]")
    x0 = rng.uniform(x0_range[0], x0_range[1], size=system.n)
    u = np.zeros(horizon * m)
    for k in range(horizon):
        if s == 0:
            continue
        support = np.sort(rng.choice(m, size=s, replace=False))
        u[k * m + support] = rng.uniform(input_range[0], input_range[1], size=s)
    return x0, u


@dataclass
class ExperimentConfig:
    seed: int
    n_list: tuple[int, ...]
    m: int
    p_range: tuple[int, int]
    s_range: tuple[int, int]
    n_policy: int | str = "n"
    trials_per_system: int = 30
    systems_per_cell: int = 10
    input_amplitude: tuple[float, float] = (-5.0, 5.0)
    x0_range: tuple[float, float] = (-5.0, 5.0)
    nsc_tol: float = 0.05
    recovery_tol: float = 1e-4

    _FIELDS = (
        "seed",
        "n_list",
        "m",
        "p_range",
        "s_range",
        "n_policy",
        "trials_per_system",
        "systems_per_cell",
        "input_amplitude",
        "x0_range",
        "nsc_tol",
        "recovery_tol",
    )

    def validate(self) -> None:
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ConfigError("n_list", "must be a nonempty list of positive integers")
        if self.m < 1:
            raise ConfigError("m", "must be a positive integer")
        if not (1 <= self.p_range[0] <= self.p_range[1]):
            raise ConfigError("p_range", "must be an increasing pair of positive integers")
        if not (0 <= self.s_range[0] <= self.s_range[1]):
            raise ConfigError("s_range", "must be an increasing pair of nonnegative integers")
        if self.s_range[1] > self.m:
            raise ConfigError("s_range", f"sparsity may not exceed m={self.m}")
        if self.n_policy != "n" and not isinstance(self.n_policy, int):
            raise ConfigError("n_policy", "must be the string 'n' or an integer horizon")
        if isinstance(self.n_policy, int) and self.n_policy < 1:
            raise ConfigError("n_policy", "integer horizon must be at least 1")
        if self.trials_per_system < 1:
            raise ConfigError("trials_per_system", "must be at least 1")
        if self.systems_per_cell < 1:
            raise ConfigError("systems_per_cell", "must be at least 1")
        for name in ("input_amplitude", "x0_range"):
            lohi = getattr(self, name)
            if len(lohi) != 2 or not lohi[0] < lohi[1]:
                raise ConfigError(name, "must be a (low, high) pair with low < high")
        if not 0 < self.nsc_tol < 0.5:
            raise ConfigError("nsc_tol", "must lie in (0, 0.5)")
        if not 0 < self.recovery_tol < 1:
            raise ConfigError("recovery_tol", "must lie in (0, 1)")

    def horizon_for(self, n: int) -> int:
        return n if self.n_policy == "n" else int(self.n_policy)

    def ps(self) -> range:
        return range(self.p_range[0], self.p_range[1] + 1)

    def ss(self) -> range:
        return range(self.s_range[0], self.s_range[1] + 1)

    def cells(self) -> list[tuple[int, int, int]]:
        return [(n, p, s) for n in sorted(self.n_list) for p in self.ps() for s in self.ss()]

    def to_json(self) -> dict:
        out = asdict(self)
        out["n_list"] = list(self.n_list)
        out["p_range"] = list(self.p_range)
        out["s_range"] = list(self.s_range)
        out["input_amplitude"] = list(self.input_amplitude)
        out["x0_range"] = list(self.x0_range)
        return out

    @classmethod
    def from_json(cls, obj: dict, fallback_seed: int | None = None) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config", "must be a JSON object")
        unknown = set(obj) - set(cls._FIELDS)
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        data = dict(obj)
        if "seed" not in data:
            if fallback_seed is None:
                raise ConfigError("seed", "missing (set it or the SPARSE_LDS_SEED variable)")
            data["seed"] = fallback_seed
        for name in ("n_list", "p_range", "s_range", "input_amplitude", "x0_range"):
            if name in data:
                try:
                    data[name] = tuple(data[name])
                except TypeError:
                    raise ConfigError(name, "must be a list") from None
        missing = [k for k in ("n_list", "m", "p_range", "s_range") if k not in data]
        if missing:
            raise ConfigError(missing[0], "missing required field")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from None
        cfg.validate()
        return cfg


@dataclass
class TrialRecord:
    system_id: str
    n: int
    m: int
    p: int
    s: int
    horizon: int
    trial: int
    joint_success: bool
    input_success: bool
    l1_gap: float


@dataclass
class SystemCert:
    system_id: str
    n: int
    m: int
    p: int
    s: int
    observable: bool
    sefati: bool
    necessary: NscInterval
    sufficient: NscInterval


@dataclass
class CellResult:
    n: int
    p: int
    s: int
    records: list[TrialRecord]
    certs: list[SystemCert]


@dataclass
class PhaseCell:
    n: int
    p: int
    s: int
    fail_prob: float
    red_region: bool
    blue_region: bool


@dataclass
class ScatterPoint:
    system_id: str
    n: int
    m: int
    p: int
    s: int
    cpsi: NscInterval
    pg1: NscInterval


@dataclass
class AggregateStats:
    trials: list[TrialRecord] = field(default_factory=list)
    table1: dict[tuple[str, str], tuple[int, int]] | None = None
    phase: list[PhaseCell] | None = None
    scatter: list[ScatterPoint] | None = None


def _system_id(n: int, p: int, idx: int) -> str:
    return f"n{n}p{p}i{idx}"


def run_cell(cfg: ExperimentConfig, n: int, p: int, s: int, mode: Mode = Mode.THRESHOLD) -> CellResult:
    """Certify and run recovery trials for every system of one (n, p, s) cell."""
    cfg.validate()
    asc = Asc.uniform(cfg.m, s)
    horizon = cfg.horizon_for(n)
    records: list[TrialRecord] = []
    certs: list[SystemCert] = []
    for idx in range(cfg.systems_per_cell):
        system = gen_system((cfg.seed, _TAG_SYSTEM, n, p, idx), n, cfg.m, p)
        sid = _system_id(n, p, idx)
        ops = build_operators(system, horizon)
        obs = rank(ops.obsv) == n
        nec = necessary_condition(system, asc, cfg.nsc_tol, mode)
        suf = sufficient_condition(system, asc, cfg.nsc_tol, mode)
        # the coherence bound is defined for s >= 1; s = 0 reduces to observability
        sef = sefati_sufficient(ops, s) if s >= 1 else obs
        certs.append(SystemCert(sid, n, cfg.m, p, s, obs, sef, nec, suf))
        for t in range(cfg.trials_per_system):
            x0, u = gen_trial(
                (cfg.seed, _TAG_TRIAL, n, p, idx, s, t),
                system,
                s,
                horizon,
                cfg.input_amplitude,
                cfg.x0_range,
            )
            try:
                result = solve_d1(ops, simulate(system, x0, u))
            except Exception as exc:
                raise RuntimeError(f"trial failed for system {sid}, s={s}, trial={t}") from exc
            joint, input_only = recovery_success(x0, u, result, cfg.recovery_tol)
            records.append(
                TrialRecord(
                    system_id=sid,
                    n=n,
                    m=cfg.m,
                    p=p,
                    s=s,
                    horizon=horizon,
                    trial=t,
                    joint_success=joint,
                    input_success=input_only,
                    l1_gap=float(np.abs(u).sum() - result.l1_value),
                )
            )
    return CellResult(n=n, p=p, s=s, records=records, certs=certs)


def _run_cell_args(args) -> CellResult:
    cfg, n, p, s, mode = args
    return run_cell(cfg, n, p, s, mode)


def run_ensemble(
    cfg: ExperimentConfig, threads: int = 1, mode: Mode = Mode.THRESHOLD
) -> list[CellResult]:
    """All cells of the sweep, in canonical (n, p, s) order regardless of threads."""
    cfg.validate()
    cells = cfg.cells()
    jobs = [(cfg, n, p, s, mode) for (n, p, s) in cells]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell_args, jobs))
    else:
        results = [_run_cell_args(j) for j in jobs]
    return sorted(results, key=lambda r: (r.n, r.p, r.s))


def _imperfect_by_system(cell: CellResult) -> dict[str, bool]:
    out: dict[str, bool] = {}
    for rec in cell.records:
        out[rec.system_id] = out.get(rec.system_id, False) or not rec.joint_success
    return out


def table1(cfg: ExperimentConfig, threads: int = 1) -> AggregateStats:
    """Bucket (system, s) occurrences by the two threshold classifications."""
    cells = run_ensemble(cfg, threads)
    counts: dict[tuple[str, str], list[int]] = {}
    trials: list[TrialRecord] = []
    for cell in cells:
        trials.extend(cell.records)
        imperfect = _imperfect_by_system(cell)
        for cert in cell.certs:
            key = (cert.sufficient.classification.value, cert.necessary.classification.value)
            slot = counts.setdefault(key, [0, 0])
            slot[0] += int(imperfect.get(cert.system_id, False))
            slot[1] += 1
    return AggregateStats(
        trials=trials, table1={k: (v[0], v[1]) for k, v in sorted(counts.items())}
    )


def phase_grid(cfg: ExperimentConfig, threads: int = 1) -> AggregateStats:
    """Per-(n, p, s) failure probability with certified region flags."""
    cells = run_ensemble(cfg, threads)
    phase: list[PhaseCell] = []
    trials: list[TrialRecord] = []
    for cell in cells:
        trials.extend(cell.records)
        imperfect = _imperfect_by_system(cell)
        total = len(cell.certs)
        bad = sum(int(imperfect.get(c.system_id, False)) for c in cell.certs)
        phase.append(
            PhaseCell(
                n=cell.n,
                p=cell.p,
                s=cell.s,
                fail_prob=bad / total,
                red_region=all(
                    c.necessary.classification is Classification.ABOVE for c in cell.certs
                ),
                blue_region=all(
                    c.sufficient.classification is Classification.BELOW for c in cell.certs
                ),
            )
        )
    return AggregateStats(trials=trials, phase=phase)


def _scatter_cell(args) -> list[ScatterPoint]:
    cfg, n, p, s = args
    asc = Asc.uniform(cfg.m, s)
    points = []
    for idx in range(cfg.systems_per_cell):
        system = gen_system((cfg.seed, _TAG_SYSTEM, n, p, idx), n, cfg.m, p)
        points.append(
            ScatterPoint(
                system_id=_system_id(n, p, idx),
                n=n,
                m=cfg.m,
                p=p,
                s=s,
                cpsi=necessary_condition(system, asc, cfg.nsc_tol, Mode.FULL),
                pg1=sufficient_condition(system, asc, cfg.nsc_tol, Mode.FULL),
            )
        )
    return points


def scatter(cfg: ExperimentConfig, threads: int = 1) -> AggregateStats:
    """Exact (full-mode) constants for every system and sparsity level; no trials."""
    cfg.validate()
    jobs = [(cfg, n, p, s) for (n, p, s) in cfg.cells()]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_scatter_cell, jobs))
    else:
        chunks = [_scatter_cell(j) for j in jobs]
    points = [pt for chunk in chunks for pt in chunk]
    points.sort(key=lambda q: (q.n, q.p, q.s, q.system_id))
    return AggregateStats(scatter=points)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_trials_csv(records: list[TrialRecord], path) -> None:
    rows = sorted(records, key=lambda r: (r.n, r.p, r.s, r.system_id, r.trial))
    _write_csv(
        path,
        ["system_id", "n", "m", "p", "s", "N", "trial", "joint_success", "input_success", "l1_gap"],
        (
            (r.system_id, r.n, r.m, r.p, r.s, r.horizon, r.trial, r.joint_success, r.input_success, r.l1_gap)
            for r in rows
        ),
    )


_CLASS_ORDER = ("above", "near", "below")


def write_table1_csv(stats: AggregateStats, path) -> None:
    table = stats.table1 or {}
    rows = []
    for row_class in _CLASS_ORDER:
        for col_class in reversed(_CLASS_ORDER):
            bad, total = table.get((row_class, col_class), (0, 0))
            rows.append((row_class, col_class, bad, total))
    _write_csv(path, ["row_class", "col_class", "imperfect_systems", "total_systems"], rows)


def write_phase_csv(stats: AggregateStats, path) -> None:
    cells = sorted(stats.phase or [], key=lambda c: (c.n, c.p, c.s))
    _write_csv(
        path,
        ["n", "p", "s", "fail_prob", "red_region", "blue_region"],
        ((c.n, c.p, c.s, c.fail_prob, c.red_region, c.blue_region) for c in cells),
    )


def write_scatter_csv(stats: AggregateStats, path) -> None:
    pts = sorted(stats.scatter or [], key=lambda q: (q.n, q.p, q.s, q.system_id))
    _write_csv(
        path,
        ["system_id", "n", "m", "p", "s", "nsc_cpsi_lo", "nsc_cpsi_hi", "nsc_pg_lo", "nsc_pg_hi"],
        (
            (q.system_id, q.n, q.m, q.p, q.s, q.cpsi.lo, q.cpsi.hi, q.pg1.lo, q.pg1.hi)
            for q in pts
        ),
    )


def write_manifest(cfg: ExperimentConfig, command: str, path) -> None:
    from . import __version__

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "seed": cfg.seed,
        "config": cfg.to_json(),
        "version": __version__,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
