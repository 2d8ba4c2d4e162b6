"""Reproducible experiment runner.

Each experiment is a pure function of (config, seed): replicas draw their
seeds from a counter-based derivation, run in a thread pool, and are
merged in replica order, so results are byte-identical regardless of
scheduling or thread count.  Wall-clock timing goes to a sidecar file and
never into results.json, keeping the primary outputs deterministic.

Exit codes: 0 success, 1 invalid configuration, 2 failed acceptance
check under --strict, 3 internal error.
"""

import argparse
import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, stats

from . import discrete as dsc
from . import ldp, levelproc, measures, mollifiers, spectral
from .errors import ConfigError, WscheborError
from .increments import dpsi_window, normalized_increment
from .mollifiers import bessel_k0, kernel_by_id
from .paths import ProcessDescriptor, simulate, simulate_brownian


def seed_split(master_seed, replica_index):
    """Collision-resistant per-replica seed, stable across versions.

    SHA-256 of the decimal rendering "master:replica", truncated to
    63 bits.  Documented so results can be reproduced outside this
    package.
    """
    digest = hashlib.sha256(f"{int(master_seed)}:{int(replica_index)}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def run_replicas(fn, replicas, master_seed, threads=1):
    """Map fn(replica_index, seed) over replicas; results in index order."""
    seeds = [seed_split(master_seed, i) for i in range(replicas)]
    if threads <= 1:
        return [fn(i, s) for i, s in enumerate(seeds)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, i, s) for i, s in enumerate(seeds)]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

EXPERIMENTS = {}


def experiment(name, description):
    def wrap(fn):
        EXPERIMENTS[name] = (fn, description)
        return fn
    return wrap


@dataclass
class ExperimentConfig:
    experiment: str
    kernel_id: str = "psi1"
    family: str = "brownian"
    hurst: float = 0.5
    alpha: float = 2.0
    epsilon: float = 2.0 ** -10
    lag_kind: str = "power:gamma=0.6"
    replicas: int = 20
    seed: int = 0
    grid_n: int = 2 ** 18
    horizon: float = 50.0
    time_bins: int = 8
    value_bins: int = 32
    t_count: int = 2 ** 14
    s_count: int = 33
    n_discrete: int = 2 ** 18
    threads: int = 1
    output_dir: str = "results"
    tolerances: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown configuration field")
        if "experiment" not in data:
            raise ConfigError("experiment", "missing required field")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment",
                              f"unknown experiment {self.experiment!r}; "
                              f"choose from {sorted(EXPERIMENTS)}")
        try:
            kernel_by_id(self.kernel_id)
        except WscheborError as exc:
            raise ConfigError("kernel_id", str(exc))
        if self.family not in ("brownian", "stable", "fbm"):
            raise ConfigError("family", f"unknown process family {self.family!r}")
        if not 0.0 < self.hurst < 1.0:
            raise ConfigError("hurst", "must lie in (0, 1)")
        if not 0.0 < self.alpha <= 2.0:
            raise ConfigError("alpha", "must lie in (0, 2]")
        if self.epsilon <= 0:
            raise ConfigError("epsilon", "must be positive")
        if self.replicas < 1:
            raise ConfigError("replicas", "must be at least 1")
        if self.grid_n < 8:
            raise ConfigError("grid_n", "must be at least 8")
        if self.threads < 1:
            raise ConfigError("threads", "must be at least 1")
        self._parse_lag()

    def _parse_lag(self):
        kind = self.lag_kind
        if kind == "overlog":
            return dsc.over_log_schedule()
        if kind.startswith("power:gamma="):
            try:
                gamma = float(kind.split("=", 1)[1])
            except ValueError:
                raise ConfigError("lag_kind", f"malformed schedule {kind!r}")
            if not 0.0 < gamma < 1.0:
                raise ConfigError("lag_kind", "gamma must lie in (0, 1)")
            return dsc.power_schedule(gamma)
        if kind.startswith("custom:"):
            return self._load_lag_table(kind.split(":", 1)[1])
        raise ConfigError("lag_kind", f"unknown schedule {kind!r}")

    @staticmethod
    def _load_lag_table(path):
        """Custom schedule from a CSV table with an `n,r` header; lookups
        interpolate linearly between tabulated sizes."""
        try:
            rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError("lag_kind", f"cannot read lag table {path!r}: {exc}")
        if rows.shape[1] != 2 or rows.shape[0] < 2:
            raise ConfigError("lag_kind", "lag table needs at least two n,r rows")
        ns, rs = rows[:, 0], rows[:, 1]
        if np.any(np.diff(ns) <= 0):
            raise ConfigError("lag_kind", "lag table sizes must increase")
        return dsc.custom_schedule(lambda n: float(np.interp(n, ns, rs)))

    def descriptor(self, seed=None):
        return ProcessDescriptor(
            self.family,
            hurst=self.hurst if self.family == "fbm" else None,
            alpha=self.alpha if self.family == "stable" else None,
            seed=seed,
        )

    def tolerance(self, name, default):
        return float(self.tolerances.get(name, default))


def metric(name, value, tolerance, passed=None):
    value = float(value)
    tolerance = float(tolerance)
    if passed is None:
        passed = bool(value <= tolerance)
    return {"name": name, "value": value, "tolerance": tolerance, "pass": bool(passed)}


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def _phi(x):
    return stats.norm.cdf(x)


def _occupation_ks(kernel, eps, seed, grid_n):
    lo, hi = dpsi_window(kernel, eps, (0.0, 1.0))
    dt = 1.0 / grid_n
    n = int(round((hi - lo) / dt)) + 1
    src = simulate_brownian(n, hi - lo, seed, t_start=lo)
    inc = normalized_increment(src, kernel, eps, window=(0.0, 1.0))
    mu = measures.occupation_measure(inc.values)
    scale = kernel.norm(2)
    return measures.ks_distance(mu, lambda x: _phi(x / scale)), mu


@experiment("wschebor-check",
            "occupation measure of normalized increments against the Gaussian limit")
def run_wschebor_check(config):
    kernel = kernel_by_id(config.kernel_id)
    tol = config.tolerance("ks_to_phi", 0.05)

    def one(i, seed):
        ks_a, mu = _occupation_ks(kernel, config.epsilon, seed, config.grid_n)
        ks_b, _ = _occupation_ks(kernel, config.epsilon / 4.0, seed, config.grid_n)
        return ks_a, ks_b, mu

    results = run_replicas(one, config.replicas, config.seed, config.threads)
    ks_coarse = np.array([r[0] for r in results])
    ks_fine = np.array([r[1] for r in results])
    metrics = [
        metric("ks_to_phi", ks_coarse[0], tol),
        metric("ks_to_phi_median", float(np.median(ks_coarse)), tol),
        metric("median_decreases_at_smaller_eps",
               float(np.median(ks_fine)), float(np.median(ks_coarse)),
               passed=bool(np.median(ks_fine) <= np.median(ks_coarse))),
    ]
    tables = {
        "ks_by_replica.csv": [("replica", "ks_eps", "ks_eps_over_4")] + [
            (i, repr(float(a)), repr(float(b)))
            for i, (a, b, _) in enumerate(results)],
        "occupation_first_replica.csv": [("value", "weight")] + [
            (repr(float(v)), repr(float(w)))
            for v, w in zip(results[0][2].points, results[0][2].weights)],
    }
    return metrics, tables


@experiment("spectral-tables",
            "spectral density and covariance tables with the variance identity")
def run_spectral_tables(config):
    kernel = kernel_by_id(config.kernel_id)
    dens = spectral.spectral_density(kernel, config.hurst)
    s2 = spectral.sigma_sq(kernel, config.hurst) if kernel.has_derivative_measure \
        else dens.variance
    tol = config.tolerance("variance_consistency", 1e-4)
    lambdas = np.linspace(0.0, 20.0, 201)
    ts = np.linspace(0.0, 4.0, 41)
    metrics = [
        metric("variance_consistency", abs(dens.variance - s2), tol),
        metric("sup_value", dens.sup_value, np.inf, passed=True),
    ]
    tables = {
        "density.csv": [("lambda", "density")] + [
            (repr(float(l)), repr(float(dens.eval(np.array([l]))[0]))) for l in lambdas],
        "covariance.csv": [("t", "covariance")] + [
            (repr(float(t)), repr(spectral.covariance_from_density(dens, t))) for t in ts],
    }
    return metrics, tables


@experiment("ou-match",
            "covariance of the unit-scale process against the OU law, with kernel checks")
def run_ou_match(config):
    kernel = kernel_by_id(config.kernel_id)
    if kernel.kernel_id not in ("ou-exp", "ou-bessel"):
        raise ConfigError("kernel_id", "ou-match needs the ou-exp or ou-bessel kernel")
    report = spectral.verify_ou_match(kernel, [0.0, 1.0, 2.0],
                                      replicas=config.replicas,
                                      horizon=config.horizon, seed=config.seed)
    metrics = []
    for c in report.checks:
        metrics.append(metric(f"cov_dev_lag_{c.lag:g}", c.deviation,
                              4.0 * c.stderr))
    ft_tol = config.tolerance("fourier_error", 1e-6)
    for lam in (0.0, 1.0, 5.0):
        val = abs(mollifiers.fourier(kernel_by_id("ou-bessel"), lam))
        target = np.sqrt(2.0) / np.sqrt(1.0 + lam ** 2)
        metrics.append(metric(f"bessel_ft_error_{lam:g}", abs(val - target), ft_tol))
    oracle, _ = integrate.quad(lambda l: 1.0 / np.sqrt(1.0 + l * l), 0.0, np.inf,
                               weight="cos", wvar=1.0, limit=800)
    metrics.append(metric("k0_error_at_1", abs(bessel_k0(1.0) - oracle),
                          config.tolerance("k0_error", 1e-9)))
    tables = {
        "covariance_checks.csv": [("lag", "estimate", "stderr", "target")] + [
            (repr(c.lag), repr(c.estimate), repr(c.stderr), repr(c.target))
            for c in report.checks],
    }
    return metrics, tables


@experiment("moment-rate",
            "rate function of the time-averaged squared increment process")
def run_moment_rate(config):
    kernel = kernel_by_id(config.kernel_id)
    dens = spectral.spectral_density(kernel, config.hurst)
    xs = [0.5, 0.75, 1.0, 1.5, 2.0]
    curve = ldp.moment_rate(dens, xs)
    metrics = []
    if kernel.fourier_abs2 is not None and kernel.kernel_id.startswith("ou"):
        closed = [(x + 1.0 / x - 2.0) / 4.0 for x in xs]
        err = max(abs(v - c) for v, c in zip(curve.values, closed))
        metrics.append(metric("closed_form_error", err,
                              config.tolerance("closed_form_error", 1e-6)))
    at_var = ldp.moment_rate(dens, [dens.variance]).values[0]
    metrics.append(metric("rate_at_variance", at_var,
                          config.tolerance("rate_at_variance", 1e-6)))
    second = np.diff(curve.values, 2)
    metrics.append(metric("convexity_defect",
                          float(abs(min(second.min(), 0.0))) if second.size else 0.0,
                          1e-9))
    tables = {
        "rate_curve.csv": [("x", "rate")] + [
            (repr(float(x)), repr(float(v))) for x, v in zip(curve.xs, curve.values)],
    }
    return metrics, tables


@experiment("level-process",
            "characteristic functionals and ball frequencies of the window cloud")
def run_level_process(config):
    eps = config.epsilon
    s_count = config.s_count
    dt = eps / (s_count - 1)
    n = int(round((1.0 + eps) / dt)) + 1
    src = simulate_brownian(n, 1.0 + eps, seed_split(config.seed, 0))
    cloud = levelproc.extract_cloud(src, eps, config.t_count, s_count)
    atom_sets = [
        [(1.0, 1.0)],
        [(0.5, 1.0)],
        [(0.5, 1.0), (1.0, 1.0)],
    ]
    tol = config.tolerance("char_functional", 0.05)
    metrics = []
    rows = [("atoms", "empirical_re", "empirical_im", "limit", "deviation")]
    report_entries = []
    for k, atoms in enumerate(atom_sets):
        emp = levelproc.char_functional(cloud, atoms)
        lim = levelproc.char_functional_limit(atoms)
        dev = abs(emp - lim)
        metrics.append(metric(f"char_dev_{k}", dev, tol))
        rows.append((json.dumps(atoms), repr(emp.real), repr(emp.imag),
                     repr(lim), repr(dev)))
        report_entries.append({
            "atoms": atoms,
            "empirical": [emp.real, emp.imag],
            "limit": lim,
            "deviation": dev,
        })
    ball_eps = 2.0 ** -8
    dt_b = ball_eps / (s_count - 1)
    n_b = int(round((1.0 + ball_eps) / dt_b)) + 1
    src_b = simulate_brownian(n_b, 1.0 + ball_eps, seed_split(config.seed, 1))
    cloud_b = levelproc.extract_cloud(src_b, ball_eps, config.t_count, s_count)
    center = np.zeros(s_count)
    freq = levelproc.l2_ball_frequency(cloud_b, center, 1.0)
    oracle = levelproc.wiener_ball_probability(center, 1.0, s_count,
                                               200000, seed_split(config.seed, 2))
    n_eff = levelproc.effective_snapshot_count(cloud_b)
    se_cloud = np.sqrt(max(freq * (1.0 - freq), 1e-12) / n_eff)
    dev = abs(freq - oracle.probability)
    metrics.append(metric("ball_frequency_dev", dev,
                          3.0 * (se_cloud + oracle.stderr)))
    report = {
        "epsilon": eps,
        "t_count": config.t_count,
        "char_functionals": report_entries,
        "ball": {
            "epsilon": ball_eps,
            "frequency": freq,
            "oracle_probability": oracle.probability,
            "deviation": dev,
            "cloud_stderr": se_cloud,
            "oracle_stderr": oracle.stderr,
        },
    }
    tables = {"char_functional.csv": rows,
              "levelproc_report.json": report}
    return metrics, tables


@experiment("discrete-lag",
            "sliding-window increment measures with growing lags")
def run_discrete_lag(config):
    schedule = config._parse_lag()
    n = config.n_discrete
    r = int(schedule.r(n))
    tol = config.tolerance("ks_to_phi", 0.05)
    metrics = []
    for idx, (name, gen) in enumerate((("gaussian", dsc.gaussian_innovations),
                                       ("uniform", dsc.uniform_innovations))):
        xs = gen(n + r, seed_split(config.seed, idx))
        m_n = dsc.discrete_measure(xs, r)
        metrics.append(metric(f"ks_to_phi_{name}",
                              measures.ks_distance(m_n, _phi), tol))
    rep1 = dsc.validate_lln_schedule(dsc.power_schedule(0.6), 0.25,
                                     lambda k: int(k ** 5), 40)
    rep2 = dsc.validate_lln_schedule(dsc.over_log_schedule(), 0.25,
                                     lambda k: int(np.exp(k ** 2)), 26)
    rep3 = dsc.validate_lln_schedule(dsc.custom_schedule(lambda n: np.log(n)), 0.25,
                                     lambda k: int(k ** 5), 40)
    metrics.append(metric("power_schedule_passes", 0.0, 1.0, passed=rep1.all_pass()))
    metrics.append(metric("overlog_schedule_passes", 0.0, 1.0, passed=rep2.all_pass()))
    metrics.append(metric("log_schedule_rejected", 0.0, 1.0,
                          passed=not rep3.check("lag-unbounded-ratio-vanishing").passed))
    pairs = min(config.replicas, 20)
    meds = []
    for nn in (2 ** 14, n):
        vals = []
        for i in range(pairs):
            m_a, mu_a = dsc.coupled_pair(nn, int(schedule.r(nn)),
                                         seed_split(config.seed, 100 + i))
            vals.append(dsc.coupling_distance(m_a, mu_a))
        meds.append(float(np.median(vals)))
    metrics.append(metric("coupling_median_decreases", meds[1], meds[0],
                          passed=bool(meds[1] <= meds[0])))
    tables = {
        "coupling.csv": [("n", "median_bl_lower_bound")] + [
            (repr(float(nn)), repr(m)) for nn, m in zip((2 ** 14, n), meds)],
    }
    return metrics, tables


@experiment("stable-marginal",
            "marginal of the stable increment process against the scaled stable law")
def run_stable_marginal(config):
    kernel = kernel_by_id(config.kernel_id)
    alpha = config.alpha
    eps = config.epsilon
    desc = config.descriptor()

    def one(i, seed):
        lo, hi = dpsi_window(kernel, eps, (0.0, eps))
        dt = eps / 8.0
        n = int(round((hi - lo) / dt)) + 1
        src = simulate(desc, n, hi - lo, seed, t_start=lo)
        inc = normalized_increment(src, kernel, eps, window=(0.0, eps))
        return float(inc.values.values[0])

    samples = np.array(run_replicas(one, config.replicas, config.seed, config.threads))
    rng = np.random.Generator(np.random.PCG64(seed_split(config.seed, 10 ** 6)))
    from .paths import standard_stable
    reference = standard_stable(alpha, rng, config.replicas) * kernel.norm(alpha)
    mu = measures.EmpiricalMeasure.from_samples(samples)
    nu = measures.EmpiricalMeasure.from_samples(reference)
    ks = measures.ks_two_sample(mu, nu)
    crit = measures.ks_critical_value(config.replicas, config.replicas, alpha=0.01)
    metrics = [metric("two_sample_ks", ks, crit)]
    tables = {
        "marginal_samples.csv": [("simulated", "reference")] + [
            (repr(float(a)), repr(float(b))) for a, b in zip(samples, reference)],
    }
    return metrics, tables


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def run(config, output_dir=None, strict=False):
    """Execute one experiment; write results.json and CSV tables.

    Returns the exit status (0 ok, 2 failed metric under strict).
    """
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    fn, _ = EXPERIMENTS[config.experiment]
    started = time.time()
    metrics, tables = fn(config)
    elapsed = time.time() - started
    results = {
        "experiment": config.experiment,
        "parameters": config.to_dict(),
        "metrics": metrics,
    }
    with open(out / "results.json", "w") as fh:
        json.dump(results, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "timing.json", "w") as fh:
        json.dump({"seconds": elapsed}, fh)
        fh.write("\n")
    for name, rows in tables.items():
        if name.endswith(".json"):
            with open(out / name, "w") as fh:
                json.dump(rows, fh, indent=2, sort_keys=True)
                fh.write("\n")
            continue
        with open(out / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerows(rows)
    ok = all(m["pass"] for m in metrics)
    return 0 if (ok or not strict) else 2


def list_experiments(as_json=False):
    if as_json:
        return json.dumps({name: desc for name, (_, desc) in sorted(EXPERIMENTS.items())},
                          indent=2, sort_keys=True)
    lines = [f"{name}: {desc}" for name, (_, desc) in sorted(EXPERIMENTS.items())]
    return "\n".join(lines)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="wschebor",
        description="Numerical experiments on occupation measures of small increments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to a JSON config file")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--replicas", type=int, default=None,
                       help="override the replica count")
    p_run.add_argument("--threads", type=int, default=None,
                       help="override the worker-thread count")
    p_run.add_argument("--output", default=None, help="override the output directory")
    p_run.add_argument("--strict", action="store_true",
                       help="exit nonzero when any acceptance check fails")

    p_list = sub.add_parser("list", help="list available experiments")
    p_list.add_argument("--json", action="store_true", help="machine-readable listing")
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        print(list_experiments(as_json=args.json))
        return 0
    try:
        with open(args.config) as fh:
            payload = json.load(fh)
        if args.seed is not None:
            payload["seed"] = args.seed
        if args.replicas is not None:
            payload["replicas"] = args.replicas
        if args.threads is not None:
            payload["threads"] = args.threads
        config = ExperimentConfig.from_dict(payload)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(config, output_dir=args.output, strict=args.strict)
    except WscheborError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
