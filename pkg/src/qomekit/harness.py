"""Benchmark protocols: single comparison run, (alpha, T) sweeps and the g^4 scaling study."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .bath import DEFAULT_COUPLING, BathSpec, SpectralDensity, bath_from_dict, bath_to_dict, rate_table
from .checks import greedy_match_deviation
from .dynamics import InitialStateSpec, final_state, propagate, trace_distance, write_trajectory_csv
from .generators import qome, redfield, secular_mask, ule
from .system import SystemModel, TlsSpec, bohr_decompose, build_tls, model_from_dict, model_to_dict

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class ScalingFitError(RuntimeError):
    pass


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# -- single run ---------------------------------------------------------------


def default_run_bath() -> BathSpec:
    return BathSpec(SpectralDensity("jc", alpha=0.2, cutoff=50.0, gamma_width=0.1), temperature=0.05)


@dataclass
class RunConfig:
    model: SystemModel = field(default_factory=lambda: build_tls(TlsSpec(1.0, np.pi / 4)))
    bath: BathSpec = field(default_factory=default_run_bath)
    initial: InitialStateSpec = field(default_factory=lambda: InitialStateSpec(np.pi / 2, np.pi / 2))
    t_f: float = 10.0
    n_points: int = 201
    ule_lamb_shift: bool = False

    def __post_init__(self):
        if not self.t_f > 0:
            raise ConfigError(f"t_f: must be positive, got {self.t_f}")
        if self.n_points < 2:
            raise ConfigError(f"n_points: need at least 2, got {self.n_points}")
        if self.model.dim != 2:
            raise ConfigError("model: the initial-state parametrization needs a two-level system")


@dataclass
class SingleResult:
    trajectories: dict
    d_qo_re: float
    d_ul_re: float
    summary: dict


def build_generators(model: SystemModel, bath: BathSpec, *, ule_lamb_shift: bool = False):
    bohr = bohr_decompose(model)
    rt = rate_table(bath, bohr)
    return bohr, {
        "RE": redfield(model, rt, bohr),
        "QO": qome(model, rt, bohr),
        "UL": ule(model, rt, bohr, lamb_shift=ule_lamb_shift),
    }


def run_single(cfg: RunConfig, out: Path | str | None = None) -> SingleResult:
    """Propagate one initial state under all three equations; optionally write CSVs + summary."""
    bohr, gens = build_generators(cfg.model, cfg.bath, ule_lamb_shift=cfg.ule_lamb_shift)
    rho0 = cfg.initial.density_matrix()
    times = np.linspace(0.0, cfg.t_f, cfg.n_points)
    u = bohr.eigen.eigenvectors
    trajs = {k: propagate(g, rho0, times, basis=u, label=k) for k, g in gens.items()}
    d_qo = trace_distance(trajs["QO"].final, trajs["RE"].final)
    d_ul = trace_distance(trajs["UL"].final, trajs["RE"].final)
    summary = {
        "t_f": cfg.t_f,
        "d_qo_re": d_qo,
        "d_ul_re": d_ul,
        "redfield_positivity_violation": trajs["RE"].metadata["positivity_violation"],
        "bath": bath_to_dict(cfg.bath),
        "initial": {"theta": cfg.initial.theta, "varphi": cfg.initial.varphi},
        "ule_lamb_shift": cfg.ule_lamb_shift,
    }
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        for key, name in (("RE", "redfield"), ("QO", "qome"), ("UL", "ule")):
            ref = None if key == "RE" else trajs["RE"]
            write_trajectory_csv(out / f"{name}.csv", trajs[key], reference=ref)
        _write_json(out / "summary.json", summary)
    return SingleResult(trajs, d_qo, d_ul, summary)


# -- sweeps -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    n_alpha: int = 10
    n_T: int = 10
    alpha_range: tuple[float, float] = (0.1, 1.0)
    T_range: tuple[float, float] = (0.01, 0.1)
    phi_range: tuple[float, float] = (0.0, np.pi / 4)
    theta_range: tuple[float, float] = (0.0, np.pi)
    varphi_range: tuple[float, float] = (0.0, 2 * np.pi)
    instances_per_cell: int = 1
    seed: int = 0
    baths: tuple[str, ...] = ("ohmic", "jc")
    energy: float = 1.0
    cutoff: float = 50.0
    gamma_width: float = 0.1
    coupling: float = DEFAULT_COUPLING
    lamb_shift: bool = True
    ule_lamb_shift: bool = False
    t_f: float | None = None
    threshold: float = 0.01
    n_check_points: int = 201
    workers: int = 1

    def __post_init__(self):
        for name in ("n_alpha", "n_T", "instances_per_cell"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be >= 1")
        for name in ("alpha_range", "T_range", "phi_range", "theta_range", "varphi_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ConfigError(f"{name}: empty range [{lo}, {hi}]")
        if self.T_range[0] <= 0:
            raise ConfigError("T_range: temperatures must be positive")
        if self.alpha_range[0] < 0:
            raise ConfigError("alpha_range: alpha must be >= 0")
        if not self.baths:
            raise ConfigError("baths: need at least one bath kind")
        for b in self.baths:
            if b not in ("ohmic", "jc"):
                raise ConfigError(f"baths: unknown bath kind {b!r}")
        if not self.threshold > 0:
            raise ConfigError("threshold: must be positive")
        if not self.energy > 0:
            raise ConfigError("energy: must be positive")

    @property
    def final_time(self) -> float:
        return 10.0 / self.energy if self.t_f is None else self.t_f

    def alphas(self) -> np.ndarray:
        return np.linspace(*self.alpha_range, self.n_alpha)

    def temperatures(self) -> np.ndarray:
        return np.linspace(*self.T_range, self.n_T)


RECORD_HEADER = (
    "bath", "i_alpha", "i_T", "instance", "alpha", "T", "phi", "theta", "varphi",
    "d_ul_re", "d_qo_re", "redfield_positivity_violation",
)
HIST_HEADER = ("bath", "i_alpha", "i_T", "alpha", "T", "count", "total")


@dataclass
class SweepRecord:
    bath: str
    i_alpha: int
    i_T: int
    instance: int
    alpha: float
    T: float
    phi: float
    theta: float
    varphi: float
    d_ul_re: float
    d_qo_re: float
    redfield_positivity_violation: float

    def row(self) -> list[str]:
        vals = asdict(self)
        return [str(vals[k]) if k in ("bath", "i_alpha", "i_T", "instance") else _fmt(vals[k]) for k in RECORD_HEADER]


@dataclass
class SweepResult:
    records: list[SweepRecord]
    failures: list[dict]
    summary: dict


def draw_instances(cfg: SweepConfig) -> list[tuple[int, int, int, float, float, float]]:
    """Angles for every (alpha, T, instance) in canonical order, from one seeded stream."""
    rng = np.random.default_rng(cfg.seed)
    out = []
    for ia in range(cfg.n_alpha):
        for it in range(cfg.n_T):
            for k in range(cfg.instances_per_cell):
                phi = rng.uniform(*cfg.phi_range)
                theta = rng.uniform(*cfg.theta_range)
                varphi = rng.uniform(*cfg.varphi_range)
                out.append((ia, it, k, phi, theta, varphi))
    return out


def evaluate_instance(cfg: SweepConfig, kind: str, alpha: float, T: float, phi: float, theta: float, varphi: float):
    """(d_ul_re, d_qo_re, redfield positivity violation) at the final time."""
    model = build_tls(TlsSpec(cfg.energy, phi))
    bath = BathSpec(SpectralDensity(kind, alpha, cfg.cutoff, cfg.gamma_width), T, cfg.coupling, cfg.lamb_shift)
    bohr, gens = build_generators(model, bath, ule_lamb_shift=cfg.ule_lamb_shift)
    rho0 = InitialStateSpec(theta, varphi).density_matrix()
    u = bohr.eigen.eigenvectors
    t_f = cfg.final_time
    times = np.linspace(0.0, t_f, cfg.n_check_points)
    re = propagate(gens["RE"], rho0, times, basis=u)
    qo = final_state(gens["QO"], rho0, t_f, basis=u)
    ul = final_state(gens["UL"], rho0, t_f, basis=u)
    return trace_distance(ul, re.final), trace_distance(qo, re.final), re.metadata["positivity_violation"]


def _task(args):
    cfg, kind, ia, it, k, alpha, T, phi, theta, varphi = args
    try:
        d_ul, d_qo, viol = evaluate_instance(cfg, kind, alpha, T, phi, theta, varphi)
        if not (np.isfinite(d_ul) and np.isfinite(d_qo)):
            raise FloatingPointError("non-finite trace distance")
    except Exception as exc:  # skip-and-log policy
        return None, {"bath": kind, "i_alpha": ia, "i_T": it, "instance": k, "error": f"{type(exc).__name__}: {exc}"}
    return SweepRecord(kind, ia, it, k, alpha, T, phi, theta, varphi, d_ul, d_qo, viol), None


def histogram(records: list[SweepRecord], cfg: SweepConfig, kind: str, which: str) -> list[tuple]:
    """Per-(alpha, T) cell counts of d < threshold for ``which`` in {"ul", "qo"}."""
    alphas, temps = cfg.alphas(), cfg.temperatures()
    counts = np.zeros((cfg.n_alpha, cfg.n_T), dtype=int)
    totals = np.zeros_like(counts)
    attr = f"d_{which}_re"
    for r in records:
        if r.bath != kind:
            continue
        totals[r.i_alpha, r.i_T] += 1
        counts[r.i_alpha, r.i_T] += getattr(r, attr) < cfg.threshold
    return [
        (kind, ia, it, alphas[ia], temps[it], int(counts[ia, it]), int(totals[ia, it]))
        for ia in range(cfg.n_alpha)
        for it in range(cfg.n_T)
    ]


def _corner_check(records: list[SweepRecord], kind: str) -> dict:
    corner = [r for r in records if r.bath == kind and r.i_alpha == 0 and r.i_T == 0]
    if not corner:
        return {"checked": False}
    qo = float(np.mean([r.d_qo_re for r in corner]))
    ul = float(np.mean([r.d_ul_re for r in corner]))
    lo, hi = sorted((qo, ul))
    ok = hi <= 2 * lo if lo > 0 else hi == 0
    if not ok:
        log.warning("%s: at the smallest (alpha, T) corner d_qo_re=%.3g and d_ul_re=%.3g differ by more than 2x", kind, qo, ul)
    return {"checked": True, "d_qo_re": qo, "d_ul_re": ul, "within_factor_2": bool(ok)}


def sweep_summary(records: list[SweepRecord], failures: list[dict], cfg: SweepConfig) -> dict:
    out = {"threshold": cfg.threshold, "t_f": cfg.final_time, "n_failures": len(failures), "baths": {}}
    for kind in cfg.baths:
        rs = [r for r in records if r.bath == kind]
        qo = np.array([r.d_qo_re for r in rs])
        ul = np.array([r.d_ul_re for r in rs])
        out["baths"][kind] = {
            "n_records": len(rs),
            "count_qo_below": int((qo < cfg.threshold).sum()),
            "count_ul_below": int((ul < cfg.threshold).sum()),
            "median_d_qo_re": float(np.median(qo)) if len(rs) else None,
            "median_d_ul_re": float(np.median(ul)) if len(rs) else None,
            "max_redfield_positivity_violation": float(max((r.redfield_positivity_violation for r in rs), default=0.0)),
            "corner_check": _corner_check(records, kind),
        }
    return out


def run_sweep(cfg: SweepConfig, out: Path | str | None = None) -> SweepResult:
    draws = draw_instances(cfg)
    alphas, temps = cfg.alphas(), cfg.temperatures()
    tasks = [
        (cfg, kind, ia, it, k, float(alphas[ia]), float(temps[it]), phi, theta, varphi)
        for kind in cfg.baths
        for ia, it, k, phi, theta, varphi in draws
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    else:
        results = [_task(t) for t in tasks]

    records = [r for r, _ in results if r is not None]
    failures = [f for _, f in results if f is not None]
    for f in failures:
        log.warning("instance skipped: %s", f)
    if len(failures) > 0.01 * len(tasks):
        raise RuntimeError(f"{len(failures)} of {len(tasks)} sweep instances failed (limit 1%)")
    key = {b: n for n, b in enumerate(cfg.baths)}
    records.sort(key=lambda r: (key[r.bath], r.i_alpha, r.i_T, r.instance))
    summary = sweep_summary(records, failures, cfg)
    if out is not None:
        write_sweep(Path(out), cfg, records, failures, summary)
    return SweepResult(records, failures, summary)


def write_sweep(out: Path, cfg: SweepConfig, records, failures, summary) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with (out / "records.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for r in records:
            w.writerow(r.row())
    for which in ("ul", "qo"):
        with (out / f"hist_{which}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HIST_HEADER)
            for kind in cfg.baths:
                for b, ia, it, a, t, c, n in histogram(records, cfg, kind, which):
                    w.writerow([b, ia, it, _fmt(a), _fmt(t), c, n])
    _write_json(out / "summary.json", {**summary, "failures": failures})
    _write_json(out / "config.json", sweep_config_to_dict(cfg))


# -- scaling study ------------------------------------------------------------


@dataclass
class ScalingConfig:
    model: SystemModel = field(default_factory=lambda: build_tls(TlsSpec(1.0, np.pi / 4)))
    bath: BathSpec = field(default_factory=lambda: BathSpec(SpectralDensity("ohmic", 0.2, 50.0), 0.05))
    g_min: float = 1e-3
    g_max: float = 1e-1
    n_g: int = 9
    extra_g: tuple[float, ...] = ()
    min_slope: float = 3.5

    def couplings(self) -> np.ndarray:
        if not 0 < self.g_min < self.g_max:
            raise ConfigError("g range: need 0 < g_min < g_max")
        gs = np.logspace(np.log10(self.g_min), np.log10(self.g_max), self.n_g)
        return np.concatenate([np.asarray(self.extra_g, dtype=float), gs])


@dataclass
class ScalingReport:
    couplings: np.ndarray
    deviations: np.ndarray
    used: np.ndarray
    slope: float
    intercept: float
    min_slope: float

    @property
    def passed(self) -> bool:
        return bool(self.slope >= self.min_slope)


def masked_deviation(model: SystemModel, bath: BathSpec) -> float:
    """Largest matched distance between eigenvalues of the full and secular-masked generator."""
    bohr = bohr_decompose(model)
    full = redfield(model, rate_table(bath, bohr), bohr).superop
    masked = secular_mask(bohr).apply(full)
    return greedy_match_deviation(np.linalg.eigvals(full), np.linalg.eigvals(masked))


def scaling_deviations(cfg: ScalingConfig) -> tuple[np.ndarray, np.ndarray]:
    gs = cfg.couplings()
    devs = np.array([masked_deviation(cfg.model, cfg.bath.with_coupling(g)) for g in gs])
    return gs, devs


def fit_loglog(gs, devs, floor: float = 1e-300) -> tuple[float, float, np.ndarray]:
    gs, devs = np.asarray(gs), np.asarray(devs)
    used = (gs > 0) & (devs > floor)
    if used.sum() < 4:
        raise ScalingFitError(f"only {int(used.sum())} usable (g, deviation) points; need at least 4")
    slope, intercept = np.polyfit(np.log(gs[used]), np.log(devs[used]), 1)
    return float(slope), float(intercept), used


def run_scaling(cfg: ScalingConfig, out: Path | str | None = None) -> ScalingReport:
    gs, devs = scaling_deviations(cfg)
    slope, intercept, used = fit_loglog(gs, devs)
    rep = ScalingReport(gs, devs, used, slope, intercept, cfg.min_slope)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "scaling.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("g", "max_eig_deviation", "used_in_fit"))
            for g, d, u in zip(gs, devs, used):
                w.writerow([_fmt(g), _fmt(d), int(u)])
        _write_json(out / "scaling.json", {"slope": slope, "intercept": intercept, "min_slope": cfg.min_slope, "passed": rep.passed})
    return rep


# -- configuration files ------------------------------------------------------


def sweep_config_to_dict(cfg: SweepConfig) -> dict:
    doc = asdict(cfg)
    for k, v in doc.items():
        if isinstance(v, tuple):
            doc[k] = list(v)
    return doc


def sweep_config_from_dict(doc: dict) -> SweepConfig:
    known = set(SweepConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"sweep: unknown fields {sorted(unknown)}")
    kw = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
    return SweepConfig(**kw)


def _section(doc: dict, name: str, parse):
    try:
        return parse(doc[name])
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def load_config(path) -> dict:
    """Parse a config document with optional sections system, bath, initial, sweep, run.

    Returns a dict with keys ``run`` (RunConfig) and ``sweep`` (SweepConfig).
    """
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    run_kw = {}
    if "system" in doc:
        run_kw["model"] = _section(doc, "system", model_from_dict)
    if "bath" in doc:
        run_kw["bath"] = _section(doc, "bath", bath_from_dict)
    if "initial" in doc:
        run_kw["initial"] = _section(doc, "initial", lambda d: InitialStateSpec(float(d.get("theta", 0.0)), float(d.get("varphi", 0.0))))
    for k in ("t_f", "n_points", "ule_lamb_shift"):
        if k in doc:
            run_kw[k] = doc[k]
    sweep = _section(doc, "sweep", sweep_config_from_dict) if "sweep" in doc else SweepConfig()
    return {"run": RunConfig(**run_kw), "sweep": sweep}


def run_config_to_dict(cfg: RunConfig) -> dict:
    return {
        "system": model_to_dict(cfg.model),
        "bath": bath_to_dict(cfg.bath),
        "initial": {"theta": cfg.initial.theta, "varphi": cfg.initial.varphi},
        "t_f": cfg.t_f,
        "n_points": cfg.n_points,
        "ule_lamb_shift": cfg.ule_lamb_shift,
    }


def with_overrides(cfg: SweepConfig, **kw) -> SweepConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
