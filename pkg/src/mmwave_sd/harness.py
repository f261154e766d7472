"""Seeded Monte Carlo sweeps over (K, SNR, trial), CSV output and summaries.

Every trial draws its channel, sounders and noise from a private generator
seeded with :func:`child_seed`, so a sweep is a pure function of its config and
any single record can be replayed from its stored seed.
"""

import csv
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import MISSING, astuple, dataclass, fields

import numpy as np
from scipy import stats

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .channel import draw_paths, synthesize, truncate
from .estimator import SDConfig, mf_estimate, realized_error_bound, sd_estimate
from .metrics import nmse, precoders_from_estimate, spectrum_efficiency
from .rip import estimate_delta
from .sounding import generate, observe, snr_db_to_noise_var

CSV_HEADER = ("estimator", "K", "snr_db", "trial", "seed", "nmse", "rate_bps_hz", "iterations", "wall_time_s")
ESTIMATORS = ("sd", "mf")
MF_ITERS = 50


class ConfigError(ValueError):
    """Raised with every violation found in an experiment config."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid experiment config:\n  " + "\n  ".join(self.violations))


def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_real(v):
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


@dataclass(frozen=True)
class ExperimentConfig:
    Nr: int
    Nt: int
    N: int
    L: int
    d: int
    K_values: tuple
    snr_db_values: tuple
    trials: int
    master_seed: int
    beta_rule: object = "nrnt_product"
    estimators: tuple = ESTIMATORS
    output_path: str = "results.csv"

    def __post_init__(self):
        for name in ("K_values", "snr_db_values", "estimators"):
            val = getattr(self, name)
            if isinstance(val, (list, np.ndarray)):
                object.__setattr__(self, name, tuple(val))
        errs = self.violations()
        if errs:
            raise ConfigError(errs)

    def violations(self):
        errs = []
        for name in ("Nr", "Nt", "N", "L", "d", "trials"):
            v = getattr(self, name)
            if not _is_int(v) or v < 1:
                errs.append(f"{name} must be a positive integer, got {v!r}")
        dims = (self.Nr, self.Nt, self.N, self.L, self.d)
        if all(_is_int(v) for v in dims) and not self.d <= self.L <= self.N <= min(self.Nr, self.Nt):
            errs.append(
                f"need d <= L <= N <= min(Nr, Nt), got d={self.d}, L={self.L}, N={self.N}, "
                f"Nr={self.Nr}, Nt={self.Nt}"
            )
        if not isinstance(self.K_values, tuple) or not self.K_values:
            errs.append("K_values must be a non-empty list")
        elif not all(_is_int(k) and k >= 1 for k in self.K_values):
            errs.append(f"K_values must hold positive integers, got {list(self.K_values)}")
        elif len(set(self.K_values)) != len(self.K_values):
            errs.append("K_values must not repeat")
        if not isinstance(self.snr_db_values, tuple) or not self.snr_db_values:
            errs.append("snr_db_values must be a non-empty list")
        elif not all(_is_real(s) and np.isfinite(s) for s in self.snr_db_values):
            errs.append(f"snr_db_values must hold finite numbers, got {list(self.snr_db_values)}")
        elif len(set(self.snr_db_values)) != len(self.snr_db_values):
            errs.append("snr_db_values must not repeat")
        if not _is_int(self.master_seed) or not 0 <= self.master_seed < 2**64:
            errs.append(f"master_seed must be an integer in [0, 2^64), got {self.master_seed!r}")
        if self.beta_rule != "nrnt_product" and not (
            _is_real(self.beta_rule) and np.isfinite(self.beta_rule) and self.beta_rule > 0
        ):
            errs.append(f"beta_rule must be 'nrnt_product' or a positive number, got {self.beta_rule!r}")
        if not isinstance(self.estimators, tuple) or not self.estimators:
            errs.append("estimators must be a non-empty list")
        else:
            bad = [e for e in self.estimators if e not in ESTIMATORS]
            if bad:
                errs.append(f"unknown estimators {bad}; choose from {list(ESTIMATORS)}")
            elif len(set(self.estimators)) != len(self.estimators):
                errs.append("estimators must not repeat")
        if not isinstance(self.output_path, str) or not self.output_path:
            errs.append("output_path must be a non-empty string")
        return errs

    @property
    def beta(self):
        if self.beta_rule == "nrnt_product":
            return float(self.Nr * self.Nt)
        return float(self.beta_rule)

    @classmethod
    def from_mapping(cls, data):
        names = [f.name for f in fields(cls)]
        required = [f.name for f in fields(cls) if f.default is MISSING]
        errs = [f"unknown key {k!r}" for k in data if k not in names]
        missing = [f"missing key {k!r}" for k in required if k not in data]
        errs += missing
        if not missing:
            try:
                cfg = cls(**{k: v for k, v in data.items() if k in names})
            except ConfigError as exc:
                errs += exc.violations
        if errs:
            raise ConfigError(errs)
        return cfg


def load_config(path):
    """Read an :class:`ExperimentConfig` from a flat TOML file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    return ExperimentConfig.from_mapping(data)


def child_seed(master_seed, K, snr_index, trial):
    """64-bit seed for one trial, hashed from ``(master_seed, K, snr_index, trial)``.

    Uses the SeedSequence entropy mixer, whose output bits all depend on every
    input word.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(K), int(snr_index), int(trial)))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ResultRecord:
    estimator: str
    K: int
    snr_db: float
    trial: int
    seed: int
    nmse: float
    rate_bps_hz: float
    iterations: int
    wall_time_s: float

    def __post_init__(self):
        if not (np.isfinite(self.nmse) and self.nmse >= 0):
            raise ValueError(f"nmse must be finite and >= 0, got {self.nmse}")
        if not (np.isfinite(self.rate_bps_hz) and np.isfinite(self.wall_time_s)):
            raise ValueError("rate and wall time must be finite")

    def sort_key(self):
        return (ESTIMATORS.index(self.estimator), self.K, self.snr_db, self.trial)


@dataclass(frozen=True)
class TrialDraw:
    H: np.ndarray
    H_d: np.ndarray
    sounders: object
    obs: object
    rng: np.random.Generator


def draw_trial(config, K, snr_db, seed):
    """Channel, sounders and noisy observation of one trial.

    The returned generator has advanced past these draws and may be used for
    anything downstream (RIP probes, degenerate initializations).
    """
    rng = np.random.default_rng(seed)
    H = synthesize(draw_paths(config.L, rng), config.Nr, config.Nt)
    S = generate(K, config.N, config.Nr, config.Nt, rng)
    obs = observe(S, H, float(snr_db_to_noise_var(snr_db)), rng)
    H_d = truncate(H, config.d)[0].reconstruct()
    return TrialDraw(H=H, H_d=H_d, sounders=S, obs=obs, rng=rng)


def _estimate(config, name, draw):
    S, y = draw.sounders, draw.obs.y
    if name == "sd":
        est, trace = sd_estimate(S, y, SDConfig(d=config.d, beta=config.beta))
        return est.matrix, trace.iterations_run
    return mf_estimate(S, y, config.d, iters=MF_ITERS, rng=draw.rng), MF_ITERS


def simulate(config, K, snr_db, seed, trial=0, timing=False):
    """Run every configured estimator on one trial; one record per estimator."""
    draw = draw_trial(config, K, snr_db, seed)
    sigma2 = draw.obs.noise_var
    out = []
    for name in config.estimators:
        t0 = time.perf_counter()
        H_hat, iters = _estimate(config, name, draw)
        elapsed = time.perf_counter() - t0 if timing else 0.0
        rate = spectrum_efficiency(draw.H, precoders_from_estimate(H_hat, config.d), sigma2)
        out.append(
            ResultRecord(
                estimator=name,
                K=int(K),
                snr_db=float(snr_db),
                trial=int(trial),
                seed=int(seed),
                nmse=nmse(draw.H_d, H_hat),
                rate_bps_hz=rate,
                iterations=int(iters),
                wall_time_s=elapsed,
            )
        )
    return out


def _tasks(config):
    for K in config.K_values:
        for j, snr in enumerate(config.snr_db_values):
            for t in range(config.trials):
                yield K, float(snr), t, child_seed(config.master_seed, K, j, t)


def _run_task(args):
    config, K, snr, t, seed, timing = args
    return simulate(config, K, snr, seed, trial=t, timing=timing)


def run_sweep(config, workers=1, timing=False):
    """All records of a config, sorted by (estimator, K, snr_db, trial).

    ``wall_time_s`` is only measured when ``timing`` is set; it is 0 otherwise
    so that the output stays a deterministic function of the config.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    jobs = [(config, K, snr, t, seed, timing) for K, snr, t, seed in _tasks(config)]
    if workers == 1:
        chunks = map(_run_task, jobs)
        records = [r for chunk in chunks for r in chunk]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [r for chunk in pool.map(_run_task, jobs) for r in chunk]
    return sorted(records, key=ResultRecord.sort_key)


def replay(config, record):
    """Recompute a record from its stored seed."""
    cfg = ExperimentConfig(**{**_config_dict(config), "estimators": (record.estimator,)})
    return simulate(cfg, record.K, record.snr_db, record.seed, trial=record.trial)[0]


def _config_dict(config):
    return {f.name: getattr(config, f.name) for f in fields(config)}


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".16e")
    return str(v)


def write_csv(records, path):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in records:
                w.writerow([_fmt(v) for v in astuple(r)])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_csv(path):
    types = [f.type for f in fields(ResultRecord)]
    conv = {int: int, float: float, str: str}
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {rows[0] if rows else None}")
    return [ResultRecord(*(conv[t](v) for t, v in zip(types, row))) for row in rows[1:]]


def bootstrap_ci(values, confidence=0.95, n_resamples=2000, seed=0):
    """Percentile bootstrap CI of the mean; degenerate for one value or constant data."""
    v = np.asarray(values, dtype=float)
    if v.size < 2 or np.all(v == v[0]):
        return float(v[0]), float(v[0])
    res = stats.bootstrap(
        (v,),
        np.mean,
        confidence_level=confidence,
        n_resamples=n_resamples,
        method="percentile",
        random_state=np.random.default_rng(seed),
    )
    return float(res.confidence_interval.low), float(res.confidence_interval.high)


def summarize(records, seed=0):
    """Per (estimator, K, snr_db) median, mean and 95% bootstrap CI of nmse and rate."""
    groups = defaultdict(list)
    for r in records:
        groups[(r.estimator, r.K, r.snr_db)].append(r)
    out = []
    for key in sorted(groups, key=lambda k: (ESTIMATORS.index(k[0]), k[1], k[2])):
        rows = groups[key]
        row = {"estimator": key[0], "K": key[1], "snr_db": key[2], "n": len(rows)}
        for metric in ("nmse", "rate_bps_hz"):
            vals = np.array([getattr(r, metric) for r in rows])
            lo, hi = bootstrap_ci(vals, seed=seed)
            row[f"{metric}_median"] = float(np.median(vals))
            row[f"{metric}_mean"] = float(np.mean(vals))
            row[f"{metric}_ci_low"] = lo
            row[f"{metric}_ci_high"] = hi
        out.append(row)
    return out


def bound_check(config, trials, probes=1000):
    """Compare the SD error against the realized error bound, trial by trial.

    The RIP constant of order 2d is the empirical lower bound from ``probes``
    random rank-2d matrices on the trial's own sounders.  Returns one dict per
    trial.
    """
    if trials < 1 or probes < 1:
        raise ValueError("trials and probes must be >= 1")
    rows = []
    for K in config.K_values:
        for j, snr in enumerate(config.snr_db_values):
            for t in range(trials):
                seed = child_seed(config.master_seed, K, j, t)
                draw = draw_trial(config, K, snr, seed)
                S = draw.sounders
                est, _ = sd_estimate(S, draw.obs.y, SDConfig(d=config.d, beta=config.beta))
                delta = estimate_delta(S, min(2 * config.d, S.Nr, S.Nt), probes, draw.rng)
                err = float(np.linalg.norm(draw.H_d - est.matrix) ** 2)
                bound = realized_error_bound(draw.H, config.d, delta, S, draw.obs.noise, config.beta)
                rows.append(
                    {
                        "K": int(K),
                        "snr_db": float(snr),
                        "trial": t,
                        "seed": seed,
                        "delta_2d": delta,
                        "error": err,
                        "bound": bound,
                        "covered": err <= bound,
                        "hd_power": float(np.linalg.norm(draw.H_d) ** 2),
                        "beta": config.beta,
                    }
                )
    return rows
