"""Simulated line-search instances, solver timings and flop models.

An instance mimics the first few iterations of a quasi-Newton method:
``x_{j+1} = x_j - H_j g_j`` (unit step) with random gradients, giving pairs
``s_j = x_{j+1} - x_j`` and ``y_j = g_{j+1} - g_j``. Each solver then solves
``B p = -g`` for the last gradient.
"""
import csv
import time
from dataclasses import dataclass, field

import numpy as np

from qnsolve import baselines, broyden_compact, sr1_compact
from qnsolve.errors import InstanceGenerationError, QuasiNewtonError
from qnsolve.qnstore import PairBuffer

SR1 = "sr1"
BROYDEN_ALGORITHMS = (1, 3, 4, 6)
SR1_ALGORITHMS = (2, 8)
MAX_RESAMPLES = 100
CSV_COLUMNS = ("algorithm", "n", "k", "phi", "run", "seed",
               "relative_residual", "wall_time_seconds", "predicted_flops")


def parse_phi(text):
    """``"sr1"`` or a float in [0, 1]."""
    if isinstance(text, str) and text.strip().lower() == SR1:
        return SR1
    phi = float(text)
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"phi must lie in [0, 1] or be 'sr1', got {text!r}")
    return phi


def applicable_algorithms(phi):
    if phi == SR1:
        return SR1_ALGORITHMS
    return BROYDEN_ALGORITHMS if phi == 0.0 else tuple(a for a in BROYDEN_ALGORITHMS if a != 3)


@dataclass
class ExperimentConfig:
    n: int
    memory: int = 5
    phi: float | str = 0.0
    algorithms: tuple = ()
    runs: int = 10
    seed: int = 0
    gamma: float = 1.0
    out: str | None = None
    driver: str | None = None

    def __post_init__(self):
        if self.n < 1 or self.runs < 1 or self.memory < 1:
            raise ValueError("n, memory and runs must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        self.phi = parse_phi(self.phi)
        allowed = applicable_algorithms(self.phi)
        if not self.algorithms:
            self.algorithms = allowed
        bad = [a for a in self.algorithms if a not in allowed]
        if bad:
            raise ValueError(f"algorithms {bad} do not apply to phi={self.phi}")
        self.algorithms = tuple(int(a) for a in self.algorithms)
        if self.driver is None:
            self.driver = "bfgs" if self.is_sr1 else "self"
        if self.driver not in ("self", "bfgs"):
            raise ValueError(f"driver must be 'self' or 'bfgs', got {self.driver!r}")

    @property
    def driver_phi(self):
        """Update class whose inverse moves the simulated iterates."""
        return 0.0 if self.driver == "bfgs" else self.phi

    @property
    def is_sr1(self):
        return self.phi == SR1


@dataclass
class ProblemInstance:
    x0: np.ndarray = field(repr=False)
    gradients: list = field(repr=False)
    buffer: PairBuffer = field(repr=False)
    resamples: int = 0

    @property
    def rhs(self):
        """Right-hand side ``-g`` of the final Newton-like system."""
        return -self.gradients[-1]


@dataclass
class SolveReport:
    algorithm: int
    n: int
    k: int
    phi: float | str
    run: int
    seed: int
    relative_residual: float
    wall_time_seconds: float
    predicted_flops: int
    solution: np.ndarray | None = field(default=None, repr=False)
    error: str | None = None

    @property
    def ok(self):
        return self.error is None


def _inverse_apply(buf, phi):
    if len(buf) == 0:
        return lambda v: v / buf.gamma
    if phi == SR1:
        return sr1_compact.build_sr1(buf).solve
    return broyden_compact.build_states(buf, phi)[1].solve


def gen_instance(cfg):
    """Generate ``cfg.memory`` pairs from a seeded Philox stream.

    The iterates move along ``-H_j g_j`` for the driver's update class. With a
    Broyden-class driver ``g_{j+1}`` is redrawn until ``s_j'y_j > 0``; an SR1
    driver keeps every pair.

    SR1 runs are driven by BFGS by default. Driving them with SR1 itself
    makes ``H_{j+1} g_{j+1}`` shrink by roughly ``n^{-1/2}`` per step for
    random gradients, and the resulting matrices have condition numbers near
    1e11 at n = 10^4.
    """
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    n = cfg.n
    buf = PairBuffer(n, m=cfg.memory, gamma=cfg.gamma)
    x = rng.standard_normal(n)
    x0 = x.copy()
    g = rng.standard_normal(n)
    grads = [g]
    resamples = 0
    for j in range(cfg.memory):
        s = -_inverse_apply(buf, cfg.driver_phi)(g)
        for _ in range(MAX_RESAMPLES):
            g_next = rng.standard_normal(n)
            if buf.push(s, g_next - g, require_curvature=cfg.driver_phi != SR1):
                break
            resamples += 1
        else:
            raise InstanceGenerationError(
                f"no pair with positive curvature after {MAX_RESAMPLES} draws at step {j}")
        x = x + s
        g = g_next
        grads.append(g)
    return ProblemInstance(x0=x0, gradients=grads, buffer=buf, resamples=resamples)


def _solver(alg, buf, phi):
    """Return a zero-argument build step producing a solve callable."""
    if alg == 1:
        return lambda: broyden_compact.build_states(buf, phi)[1].solve
    if alg == 2:
        return lambda: sr1_compact.build_sr1(buf).solve
    if alg == 3:
        return lambda: (lambda z: baselines.two_loop_solve(buf, z, phi))
    if alg == 4:
        def build4():
            unrolled = baselines.smw_factor(baselines.unroll_forward(buf, phi))
            return lambda z: baselines.smw_solve(unrolled, z)
        return build4
    if alg == 6:
        def build6():
            unrolled = baselines.unroll_inverse(buf, phi)
            return lambda z: baselines.recursive_H_solve(unrolled, z)
        return build6
    if alg == 8:
        return lambda: (lambda z: baselines.sr1_self_dual_solve(buf, z))
    raise ValueError(f"unknown algorithm id {alg}")


def _forward_matvec(buf, phi):
    if phi == SR1:
        return sr1_compact.build_sr1_forward(buf).matvec
    return broyden_compact.build_states(buf, phi)[0].matvec


def run_benchmark(cfg, instance=None):
    """Time every configured algorithm ``cfg.runs`` times on one instance.

    The reported wall time covers the build step and the solve. A solver
    breakdown is recorded in the row's ``error`` field and the sweep goes on.
    """
    inst = instance if instance is not None else gen_instance(cfg)
    buf = inst.buffer
    z = inst.rhs
    znorm = np.linalg.norm(z)
    k = buf.k
    try:
        forward = _forward_matvec(buf, cfg.phi)
    except QuasiNewtonError:
        forward = None
    reports = []
    for run in range(cfg.runs):
        for alg in cfg.algorithms:
            row = SolveReport(algorithm=alg, n=cfg.n, k=k, phi=cfg.phi, run=run,
                              seed=cfg.seed, relative_residual=np.nan,
                              wall_time_seconds=np.nan,
                              predicted_flops=flop_model(alg, cfg.n, k))
            build = _solver(alg, buf, cfg.phi)
            try:
                t0 = time.perf_counter()
                p = build()(z)
                row.wall_time_seconds = time.perf_counter() - t0
            except QuasiNewtonError as exc:
                row.error = f"{type(exc).__name__}: {exc}"
                reports.append(row)
                continue
            row.solution = p
            if forward is None:
                row.error = "forward matrix unavailable for the residual"
            else:
                row.relative_residual = float(np.linalg.norm(forward(p) - z) / znorm)
            reports.append(row)
    return reports


def flop_model(alg, n, k):
    """Closed-form flop count of algorithm ``alg`` for k+1 stored pairs.

    Every formula is evaluated in exact integer arithmetic.
    """
    n, k = int(n), int(k)
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    if alg == 1:
        cubic = 40 * k**3 + 90 * k**2 + 122 * k
        assert cubic % 3 == 0
        return (2*k + 1) * (n + k + 1) + 2*n + cubic // 3 + (2*n - 1) * (k + 1)
    if alg == 2:
        return (2*k + 1) * (n + k + 1) + 2*n + (2*n - 1) * (k + 1)
    if alg == 3:
        return 4*n*k + 3*k + n + 2*k * (2*n - 1)
    if alg == 4:
        half = (k + 1) * (23*k*n + 52*n + 12*k + 42)
        return half // 2 + (2*n - 1) * (6 * (k + 1)**2 + 7 * (k + 1))
    if alg == 6:
        return (5*n + 3) * (k + 1) * k + (10*n + 14) * (k + 1) + (2*n - 1) * (3*k + 2) * (k + 1)
    if alg == 8:
        first = (k + 1) * (k * (2*n + 1) + 2 * (3*n + 1))
        second = (2*n - 1) * (k + 2) * (k + 1)
        return first // 2 + 2*n + second // 2
    raise ValueError(f"unknown algorithm id {alg}")


def _fmt(x):
    return f"{x:.5e}"


def write_csv(reports, stream):
    """Write the header and one row per report to an open text stream."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        phi = r.phi if r.phi == SR1 else _fmt(r.phi)
        w.writerow([r.algorithm, r.n, r.k, phi, r.run, r.seed,
                    _fmt(r.relative_residual), _fmt(r.wall_time_seconds),
                    r.predicted_flops])


def emit_csv(reports, path):
    """Write ``reports`` to ``path``; an empty list is an error and writes nothing."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to write")
    try:
        with open(path, "w", newline="") as fh:
            write_csv(reports, fh)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV: {exc.strerror}", str(path)) from exc
    return path


def median_times(reports):
    """Median wall time per algorithm over the successful runs."""
    by_alg = {}
    for r in reports:
        if r.ok:
            by_alg.setdefault(r.algorithm, []).append(r.wall_time_seconds)
    return {a: float(np.median(t)) for a, t in by_alg.items()}
