"""Named, seeded experiment drivers emitting self-describing CSV tables.

Each registered experiment maps one figure-level measurement onto a
simulation backend (Gaussian frames, stabilizer tableaus or dense
vectors) and yields records in a fixed schema::

    experiment, seed, realization, param_name, param_value, L, t,
    observable, value, sem

Realization ``i`` of size index ``li`` always draws from
``SeedSequence(base_seed, spawn_key=(li, i))``, so output is independent
of worker scheduling, and disorder samples are shared across the
parameter scan within a realization (common random numbers).  Every CSV
starts with ``#``-prefixed metadata lines carrying the resolved
configuration, code version and abort counters, so a file can be
reproduced from its own header.
"""

from __future__ import annotations

import dataclasses
import importlib.metadata
import json
import math
import os
import re
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import analysis, dense, gaussian, stabilizer
from .circuits import (
    GOLDEN_Q,
    build_2d_floquet,
    build_aa_dual_step,
    build_aa_floquet,
    build_mbl_dual_step,
    build_mbl_floquet,
    build_mbl_schedule,
    rotate_circuit_2d,
    sample_2d_couplings,
    LayerKind,
    Layer,
)

CSV_COLUMNS = (
    "experiment",
    "seed",
    "realization",
    "param_name",
    "param_value",
    "L",
    "t",
    "observable",
    "value",
    "sem",
)

_WORKERS_ENV = "DUALCTL_WORKERS"


class ConfigError(ValueError):
    """Invalid or unknown experiment configuration."""


def code_version() -> str:
    try:
        return importlib.metadata.version("dualcirc")
    except importlib.metadata.PackageNotFoundError:  # pragma: no cover
        return "unknown"


# ---------------------------------------------------------------------------
# Configuration.


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved parameters of one experiment run."""

    experiment: str
    sizes: tuple
    values: tuple
    param_name: str
    realizations: int
    base_seed: int = 0
    periods: str | int = "2L"
    size_realizations: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)

    def realizations_for(self, size: int) -> int:
        return int(self.size_realizations.get(size, self.realizations))

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sizes"] = list(self.sizes)
        d["values"] = list(self.values)
        d["size_realizations"] = {str(k): v for k, v in self.size_realizations.items()}
        return d


def resolve_periods(rule: str | int, size: int) -> int:
    """Number of periods for a size: a plain count or a 'cL' / 'cL2' rule."""
    if isinstance(rule, (int, np.integer)):
        return int(rule)
    m = re.fullmatch(r"(\d*)L(2?)", str(rule).strip())
    if not m:
        raise ConfigError(f"bad period rule {rule!r} (want an int, 'cL' or 'cL2')")
    c = int(m.group(1) or 1)
    return c * (size * size if m.group(2) else size)


def _lam_grid(*vals) -> tuple:
    return tuple(round(v, 4) for v in vals)


DEFAULTS: dict[str, ExperimentConfig] = {
    "aa-unitary": ExperimentConfig(
        "aa-unitary",
        sizes=(64, 128, 256, 512),
        values=_lam_grid(0.1, 0.2, 0.4, 0.6, 0.64, 0.8, 1.0, 1.2),
        param_name="lambda",
        realizations=100,
        periods="4L",
        model={"h": 2.5, "j": 1.0, "q": GOLDEN_Q, "initial": "random-z"},
    ),
    "aa-dual": ExperimentConfig(
        "aa-dual",
        sizes=(64, 128, 256, 512),
        values=_lam_grid(0.2, 0.44, 0.54, 0.64, 0.74, 0.84, 1.2),
        param_name="lambda",
        realizations=8,
        periods="2L",
        model={"h": 2.5, "j": 1.0, "q": GOLDEN_Q, "renorm_every": 1},
    ),
    "aa-purify": ExperimentConfig(
        "aa-purify",
        sizes=(64, 128),
        values=_lam_grid(0.2, 1.2),
        param_name="lambda",
        realizations=8,
        periods="4L",
        model={"h": 2.5, "j": 1.0, "q": GOLDEN_Q, "renorm_every": 1},
    ),
    "ipr": ExperimentConfig(
        "ipr",
        sizes=(64, 128, 256),
        values=_lam_grid(0.2, 0.5, 0.8, 1.0, 1.1, 1.2),
        param_name="lambda",
        realizations=20,
        periods=1,
        model={"h": 2.5, "j": 1.0, "q": GOLDEN_Q},
    ),
    "spectrum": ExperimentConfig(
        "spectrum",
        sizes=(0,),
        values=tuple(round(0.05 * k, 2) for k in range(1, 61)),
        param_name="alpha_h",
        realizations=1,
        periods=1,
        model={"alpha_j": 0.0, "n_grid": 4096},
    ),
    "clifford2d": ExperimentConfig(
        "clifford2d",
        sizes=(8, 12, 16, 20),
        values=(0.17, 0.23, 0.29, 0.35, 0.41),
        param_name="p",
        realizations=400,
        periods="L",
    ),
    "clifford2d-dual": ExperimentConfig(
        "clifford2d-dual",
        sizes=(8, 12, 16, 20),
        values=(0.17, 0.23, 0.29, 0.35, 0.41),
        param_name="p",
        realizations=400,
        periods="L",
        model={"zero_weight": "keep"},
    ),
    "mbl-eigen": ExperimentConfig(
        "mbl-eigen",
        sizes=(8, 10, 12),
        values=(0.13, 0.18, 0.23, 0.28, 0.33),
        param_name="j_x",
        realizations=200,
        periods=1,
        size_realizations={10: 64, 12: 8},
        model={"tau": 0.8, "mean": 0.8090, "width": 1.421, "width_is_variance": False},
    ),
    "mbl-dual": ExperimentConfig(
        "mbl-dual",
        sizes=(8, 10, 12),
        values=(0.2, 0.4, 0.6, 0.8, 1.0),
        param_name="j_x",
        realizations=200,
        periods="L",
        model={"tau": 0.8, "mean": 0.8090, "width": 1.421, "width_is_variance": False},
    ),
    "mbl-ancilla": ExperimentConfig(
        "mbl-ancilla",
        sizes=(8, 10, 12, 14),
        values=(0.1, 0.2, 0.4, 0.7, 0.8, 0.9),
        param_name="j_x",
        realizations=200,
        periods="2L2",
        size_realizations={14: 100},
        model={
            "tau": 0.8,
            "mean": 0.8090,
            "width": 1.421,
            "width_is_variance": False,
            "threshold": 0.65,
        },
    ),
    "correlator": ExperimentConfig(
        "correlator",
        sizes=(8, 10, 12),
        values=(0.0, 0.2, 0.4, 0.6, 0.8),
        param_name="j_x",
        realizations=256,
        periods="2L",
        size_realizations={10: 64, 12: 6},
        model={"tau": 0.8, "mean": 0.8090, "width": 1.421, "width_is_variance": False},
    ),
}


def resolve_config(experiment: str, **overrides) -> ExperimentConfig:
    """Merge overrides into the default table for a registered experiment."""
    if experiment not in DEFAULTS:
        known = ", ".join(sorted(DEFAULTS))
        raise ConfigError(f"unknown experiment {experiment!r} (known: {known})")
    base = DEFAULTS[experiment]
    model = dict(base.model)
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    kwargs: dict = {}
    for key, val in overrides.items():
        if val is None:
            continue
        if key == "model":
            model.update(val)
        elif key in fields and key != "experiment":
            kwargs[key] = val
        elif key in base.model:
            model[key] = val
        else:
            raise ConfigError(f"unknown config field {key!r} for {experiment}")
    if "sizes" in kwargs:
        kwargs["sizes"] = tuple(int(s) for s in kwargs["sizes"])
    if "values" in kwargs:
        kwargs["values"] = tuple(float(v) for v in kwargs["values"])
    if "size_realizations" in kwargs:
        kwargs["size_realizations"] = {
            int(k): int(v) for k, v in dict(kwargs["size_realizations"]).items()
        }
    cfg = dataclasses.replace(base, model=model, **kwargs)
    if cfg.realizations < 1:
        raise ConfigError("realizations must be positive")
    if not cfg.sizes or not cfg.values:
        raise ConfigError("sizes and values must be non-empty")
    for size in cfg.sizes:
        resolve_periods(cfg.periods, size)  # validate the rule early
    return cfg


def _field_sigma(model: dict) -> float:
    w = float(model["width"])
    return math.sqrt(w) if model.get("width_is_variance") else w


# ---------------------------------------------------------------------------
# Runners.  Each takes (cfg, size, rng) for one disorder realization and
# returns (records, stats): records are (param_value, t, observable, value)
# tuples, stats counts aborts and zero-weight events.


def _product_covariance(signs: np.ndarray) -> np.ndarray:
    """Majorana covariance of a Z-basis product state with the given signs."""
    n = len(signs)
    k = np.zeros((2 * n, 2 * n))
    for j, s in enumerate(signs):
        k[2 * j, 2 * j + 1] = -s
        k[2 * j + 1, 2 * j] = s
    return k


def _initial_signs(kind: str, size: int, rng) -> np.ndarray:
    if kind == "random-z":
        return rng.choice((-1.0, 1.0), size=size)
    if kind == "neel":
        return (-1.0) ** np.arange(size)
    if kind == "all-up":
        return np.ones(size)
    raise ConfigError(f"unknown initial state {kind!r}")


def _run_aa_unitary(cfg: ExperimentConfig, size: int, rng) -> tuple:
    m = cfg.model
    delta = rng.uniform(0.0, 2.0 * math.pi)
    t_final = resolve_periods(cfg.periods, size)
    signs = _initial_signs(m.get("initial", "random-z"), size, rng)
    k0 = _product_covariance(signs)
    half = range(size // 2)
    out = []
    for lam in cfg.values:
        spec = build_aa_floquet(size, j=m["j"], h=m["h"], lam=lam, delta=delta)
        o_t = np.linalg.matrix_power(gaussian.floquet_orthogonal(spec), t_final)
        s = gaussian.entropy_from_covariance(o_t @ k0 @ o_t.T, half)
        out.append((lam, t_final, "entropy", s))
        out.append((lam, t_final, "entropy_density", s / (size // 2)))
    return out, {}


def _dual_aa_entropy(size: int, lam: float, model: dict, delta: float, t_final: int):
    """Evolve the vacuum under the rotated quasiperiodic circuit.

    Returns the half-cut entropy averaged over the last quarter of the
    evolution; the late-time entropy oscillates step to step, and the
    window average suppresses that temporal noise without changing the
    scaling with L.
    """
    q = gaussian.vacuum_frame(size)
    renorm = int(model.get("renorm_every", 1))
    half = range(size // 2)
    window = max(1, t_final // 4)
    stride = max(1, t_final // 64)
    samples = []
    for t in range(1, t_final + 1):
        h_t = model["h"] + lam * math.cos(2.0 * math.pi * model["q"] * t + delta)
        layers = build_aa_dual_step(size, h_t, j=model["j"])
        q = gaussian.run_layers_frame(q, layers, size, renorm_every=renorm)
        if t > t_final - window and (t_final - t) % stride == 0:
            samples.append(gaussian.frame_entropy(q, half))
    return float(np.mean(samples))


def _run_aa_dual(cfg: ExperimentConfig, size: int, rng) -> tuple:
    delta = rng.uniform(0.0, 2.0 * math.pi)
    t_final = resolve_periods(cfg.periods, size)
    out = []
    for lam in cfg.values:
        s = _dual_aa_entropy(size, lam, cfg.model, delta, t_final)
        out.append((lam, t_final, "entropy", s))
        out.append((lam, t_final, "entropy_density", s / (size // 2)))
    return out, {}


def _run_aa_purify(cfg: ExperimentConfig, size: int, rng) -> tuple:
    m = cfg.model
    delta = rng.uniform(0.0, 2.0 * math.pi)
    t_final = resolve_periods(cfg.periods, size)
    stride = max(1, t_final // 256)
    system = range(size)
    renorm = int(m.get("renorm_every", 1))
    out = []
    for lam in cfg.values:
        q = gaussian.purified_mixed_frame(size)
        s0 = gaussian.frame_entropy(q, system)
        out.append((lam, 0, "entropy", s0))
        out.append((lam, 0, "entropy_density", s0 / size))
        for t in range(1, t_final + 1):
            h_t = m["h"] + lam * math.cos(2.0 * math.pi * m["q"] * t + delta)
            # Periodic wrap bond with a fixed fermion-sector sign: the
            # maximally mixed covariance evolves in the antiperiodic
            # sector, which is what sustains the extensive entropy
            # plateau on the volume-law side.
            layers = build_aa_dual_step(size, h_t, j=m["j"])
            q = gaussian.run_layers_frame(q, layers, size, renorm_every=renorm)
            if t % stride == 0 or t == t_final:
                s = gaussian.frame_entropy(q, system)
                out.append((lam, t, "entropy", s))
                out.append((lam, t, "entropy_density", s / size))
    return out, {}


def _run_ipr(cfg: ExperimentConfig, size: int, rng) -> tuple:
    m = cfg.model
    delta = rng.uniform(0.0, 2.0 * math.pi)
    out = []
    for lam in cfg.values:
        spec = build_aa_floquet(size, j=m["j"], h=m["h"], lam=lam, delta=delta)
        spectrum = gaussian.ipr_spectrum(gaussian.floquet_orthogonal(spec))
        out.append((lam, 0, "ipr_mean", float(np.mean(spectrum))))
        out.append((lam, 0, "ipr_max", float(np.max(spectrum))))
    return out, {}


def _run_spectrum(cfg: ExperimentConfig, size: int, rng) -> tuple:
    del rng  # closed-form scan, nothing random
    m = cfg.model
    n_grid = int(m.get("n_grid", 4096))
    alpha_j = float(m.get("alpha_j", 0.0))
    out = []
    for alpha_h in cfg.values:
        frac = gaussian.real_energy_window(alpha_h, alpha_j, n_grid)
        out.append((alpha_h, 0, "window_fraction", frac))
        out.append(
            (alpha_h, 0, "half_width_closed", gaussian.real_window_half_width(alpha_h))
        )
        out.append(
            (
                alpha_h,
                0,
                "window_fraction_equal",
                gaussian.real_energy_window(alpha_h, alpha_h, n_grid),
            )
        )
    return out, {}


def _square_region(size: int) -> list:
    half = size // 2
    return [x + size * y for y in range(half) for x in range(half)]


def _strip_region(size: int) -> list:
    return [x + size * y for y in range(size // 2) for x in range(size)]


def _run_clifford2d(cfg: ExperimentConfig, size: int, rng) -> tuple:
    t_final = resolve_periods(cfg.periods, size)
    region = _square_region(size)
    out = []
    for p in cfg.values:
        couplings = sample_2d_couplings(size, size, p, rng)
        spec = build_2d_floquet(size, size, couplings)
        tab = stabilizer.new_z_product(size * size)
        for _ in range(t_final):
            tab, aborted = stabilizer.run_2d_period(tab, spec)
            assert not aborted  # the unrotated model is purely unitary
        s = stabilizer.entropy_region(tab, region)
        out.append((p, t_final, "entropy", s))
        out.append((p, t_final, "entropy_per_l", s / size))
    return out, {}


def _run_clifford2d_dual(cfg: ExperimentConfig, size: int, rng) -> tuple:
    t_final = resolve_periods(cfg.periods, size)
    chunks = max(1, -(-t_final // size))  # each rotated sample covers L steps
    policy = cfg.model.get("zero_weight", "keep")
    region = _strip_region(size)
    out = []
    stats: dict = {"aborts": 0, "attempts": 0, "zero_weight_events": 0}
    for p in cfg.values:
        stats["attempts"] += 1
        tab = stabilizer.new_z_product(size * size)
        aborted = False
        for _ in range(chunks):
            couplings = sample_2d_couplings(size, size, p, rng)
            spec = rotate_circuit_2d(build_2d_floquet(size, size, couplings))
            tab, aborted = stabilizer.run_2d_period(
                tab, spec, zero_weight=policy, stats=stats
            )
            if aborted:
                break
        if aborted:
            stats["aborts"] += 1
            continue
        s = stabilizer.entropy_region(tab, region)
        out.append((p, t_final, "entropy", s))
        out.append((p, t_final, "entropy_per_l", s / size))
    return out, stats


def _page_value(size: int) -> float:
    return 0.5 * (size * math.log(2.0) - 1.0)


def _run_mbl_eigen(cfg: ExperimentConfig, size: int, rng) -> tuple:
    m = cfg.model
    fields = build_mbl_schedule(size, m["mean"], _field_sigma(m), rng)
    half = range(size // 2)
    s_page = _page_value(size)
    out = []
    for j_x in cfg.values:
        spec = build_mbl_floquet(size, j_x, tau=m["tau"], h=fields)
        # Single precision: ~1e-3 error in the eigenstate-mean entropy,
        # below the disorder-ensemble spread, at half the
        # diagonalization cost.
        u = dense.circuit_matrix_power(spec, 1, single=True)
        _, vecs = dense.unitary_eigvecs(u)
        s = float(np.mean(dense.eigenstate_entropies(vecs, half)))
        out.append((j_x, 0, "entropy", s))
        out.append((j_x, 0, "entropy_ratio", s / s_page))
    return out, {}


def _run_mbl_dual(cfg: ExperimentConfig, size: int, rng) -> tuple:
    m = cfg.model
    t_final = resolve_periods(cfg.periods, size)
    h_ts = rng.normal(m["mean"], _field_sigma(m), size=t_final)
    half = range(size // 2)
    s_page = _page_value(size)
    out = []
    stats = {"aborts": 0, "attempts": 0}
    for j_x in cfg.values:
        stats["attempts"] += 1
        psi = dense.initial_state(size)
        try:
            for t in range(t_final):
                layers = build_mbl_dual_step(size, j_x, m["tau"], h_ts[t])
                psi = dense.run_layers(psi, layers, size)
        except dense.ZeroAmplitude:
            stats["aborts"] += 1
            continue
        s = dense.entanglement_entropy(psi, half)
        out.append((j_x, t_final, "entropy", s))
        out.append((j_x, t_final, "entropy_ratio", s / s_page))
    return out, stats


def _run_mbl_ancilla(cfg: ExperimentConfig, size: int, rng) -> tuple:
    m = cfg.model
    t_max = resolve_periods(cfg.periods, size)
    threshold = float(m.get("threshold", 0.65))
    h_ts = rng.normal(m["mean"], _field_sigma(m), size=t_max)
    out = []
    stats = {"aborts": 0, "attempts": 0}
    for j_x in cfg.values:
        stats["attempts"] += 1
        psi = dense.ancilla_probe_state(size, rng)
        t_p = t_max  # sentinel: never purified within the horizon
        try:
            for t in range(1, t_max + 1):
                layers = build_mbl_dual_step(size, j_x, m["tau"], h_ts[t - 1])
                psi = dense.run_layers(psi, layers, size)
                if dense.entanglement_entropy(psi, [size]) < threshold:
                    t_p = t
                    break
        except dense.ZeroAmplitude:
            stats["aborts"] += 1
            continue
        out.append((j_x, 0, "purification_time", float(t_p)))
    return out, stats


def _run_correlator(cfg: ExperimentConfig, size: int, rng) -> tuple:
    m = cfg.model
    t_half = resolve_periods(cfg.periods, size) // 2
    fields = build_mbl_schedule(size, m["mean"], _field_sigma(m), rng)
    out = []
    for j_x in cfg.values:
        spec = build_mbl_floquet(size, j_x, tau=m["tau"], h=fields)
        power = dense.circuit_matrix_power(spec, t_half, single=True)
        c = dense.correlator_from_power(power, range(size))
        out.append((j_x, t_half, "correlator", float(np.mean(c.real))))
    return out, {}


_RUNNERS = {
    "aa-unitary": _run_aa_unitary,
    "aa-dual": _run_aa_dual,
    "aa-purify": _run_aa_purify,
    "ipr": _run_ipr,
    "spectrum": _run_spectrum,
    "clifford2d": _run_clifford2d,
    "clifford2d-dual": _run_clifford2d_dual,
    "mbl-eigen": _run_mbl_eigen,
    "mbl-dual": _run_mbl_dual,
    "mbl-ancilla": _run_mbl_ancilla,
    "correlator": _run_correlator,
}


# ---------------------------------------------------------------------------
# Driver.


@dataclass
class ExperimentRun:
    """Gathered records plus the metadata that reproduces them."""

    config: ExperimentConfig
    records: list
    stats: dict

    @property
    def abort_rate(self) -> float:
        attempts = self.stats.get("attempts", 0)
        return self.stats.get("aborts", 0) / attempts if attempts else 0.0

    def metadata(self) -> dict:
        return {
            "config": self.config.as_dict(),
            "version": code_version(),
            "stats": dict(sorted(self.stats.items())),
        }


def _task(args) -> tuple:
    cfg, li, size, i = args
    rng = np.random.default_rng(np.random.SeedSequence(cfg.base_seed, spawn_key=(li, i)))
    rows, stats = _RUNNERS[cfg.experiment](cfg, size, rng)
    records = [
        {
            "experiment": cfg.experiment,
            "seed": cfg.base_seed,
            "realization": i,
            "param_name": cfg.param_name,
            "param_value": value,
            "L": size,
            "t": t,
            "observable": obs,
            "value": y,
            "sem": None,
        }
        for value, t, obs, y in rows
    ]
    return (li, i), records, stats


def worker_count() -> int:
    raw = os.environ.get(_WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{_WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentRun:
    """Fan realizations out to a worker pool; deterministic gather order."""
    if cfg.experiment not in _RUNNERS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    tasks = [
        (cfg, li, size, i)
        for li, size in enumerate(cfg.sizes)
        for i in range(cfg.realizations_for(size))
    ]
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or len(tasks) == 1:
        results = [_task(t) for t in tasks]
    else:
        import multiprocessing

        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_task, tasks, chunksize=1)
    results.sort(key=lambda item: item[0])
    records: list = []
    stats: dict = {}
    for _, recs, st in results:
        records.extend(recs)
        for key, val in st.items():
            stats[key] = stats.get(key, 0) + val
    return ExperimentRun(cfg, records, stats)


# ---------------------------------------------------------------------------
# CSV interchange.


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def write_csv(path, run: ExperimentRun) -> None:
    meta = run.metadata()
    lines = [
        f"# config: {json.dumps(meta['config'], sort_keys=True)}",
        f"# version: {meta['version']}",
        f"# stats: {json.dumps(meta['stats'], sort_keys=True)}",
        ",".join(CSV_COLUMNS),
    ]
    for rec in run.records:
        lines.append(
            ",".join(
                (
                    rec["experiment"],
                    str(rec["seed"]),
                    str(rec["realization"]),
                    rec["param_name"],
                    _fmt(rec["param_value"]),
                    str(rec["L"]),
                    str(rec["t"]),
                    rec["observable"],
                    _fmt(rec["value"]),
                    _fmt(rec["sem"]),
                )
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> tuple:
    """Parse a results file back into (records, metadata)."""
    meta: dict = {}
    records: list = []
    header: list | None = None
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, rest = body.partition(":")
                try:
                    meta[key.strip()] = json.loads(rest.strip())
                except json.JSONDecodeError:
                    meta[key.strip()] = rest.strip()
                continue
            parts = line.split(",")
            if header is None:
                header = parts
                missing = [c for c in CSV_COLUMNS if c not in header]
                if missing:
                    raise ConfigError(f"missing CSV columns: {missing}")
                continue
            rec = dict(zip(header, parts))
            rec["seed"] = int(rec["seed"])
            rec["realization"] = int(rec["realization"])
            rec["param_value"] = float(rec["param_value"])
            rec["L"] = int(rec["L"])
            rec["t"] = int(rec["t"])
            rec["value"] = float(rec["value"])
            rec["sem"] = float(rec["sem"]) if rec["sem"] else None
            records.append(rec)
    if header is None:
        raise ConfigError(f"{path}: no CSV header found")
    return records, meta


def curves_from_records(records, observable: str, t_filter=None) -> dict:
    """Group records into {L: (param sorted, mean value)} for collapse fits."""
    rows = [r for r in records if r["observable"] == observable]
    if t_filter is not None:
        rows = [r for r in rows if t_filter(r["t"])]
    if not rows:
        raise ConfigError(f"no records with observable {observable!r}")
    agg = analysis.aggregate(rows, keys=("L", "param_value")).points
    by_size: dict = {}
    for (size, x), pt in agg.items():
        by_size.setdefault(size, []).append((x, pt.mean))
    out = {}
    for size, pairs in by_size.items():
        pairs.sort()
        xs = np.array([p[0] for p in pairs])
        ys = np.array([p[1] for p in pairs])
        out[size] = (xs, ys)
    return out
