"""Randomized coordinate descent on SPD quadratics as a Markov chain.

The objects here simulate exact coordinate minimization of f(w) = (1/2)
w^T Q w where coordinates are drawn i.i.d. from a fixed distribution pi.
Because each step rescales freely (the update is linear in w), the chain is
tracked on the unit sphere: after every step w is renormalized, which
leaves the per-step drop in log f unchanged but keeps 10^7-step runs clear
of underflow.

Main entry points:

- :func:`generate_rbf_instance` draws a Gaussian-kernel Gram matrix over
  random planar points, the standard test bed used throughout.
- :func:`estimate_rho` measures the mean per-step drop in log f (the
  progress rate ``rho``) and its per-coordinate conditionals ``rho_i``,
  with a batch-means standard error, sampling until the error falls below
  a relative tolerance.
- :func:`balance_rprop` adapts pi with a sign-based resilient update until
  all conditional rates agree, approximating the distribution that
  equalizes per-coordinate progress.
- :func:`gamma_scan` probes one-parameter curves through a balanced pi and
  reports rate ratios, the numerical experiment behind the claim that the
  balanced point is a local maximum of the rate.

Chains on diagonal matrices reach the optimum exactly after finitely many
distinct coordinate steps; that outcome raises :class:`ChainTerminated`
instead of producing a (divergent) rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

__all__ = [
    "BalanceResult",
    "ChainState",
    "ChainTerminated",
    "DEFAULT_T_GRID",
    "QuadraticInstance",
    "RateEstimate",
    "ScanPoint",
    "balance_rprop",
    "cd_transition",
    "estimate_rho",
    "gamma_scan",
    "generate_rbf_instance",
    "simulate_log_drop",
]

#: Exponents probed by :func:`gamma_scan`; the curve parameter t scales the
#: selected entry of pi by 2**t before renormalization.
DEFAULT_T_GRID = (-1.0, -0.5, -0.25, -0.1, 0.0, 0.1, 0.25, 0.5, 1.0)

_BUCKET = 500  # steps per accumulation bucket
_BATCHES = 100  # batch-means groups for the stderr
_INITIAL_BUCKETS = 200  # first sampling round: 200 * 500 = 1e5 steps
_TERMINATION_RATIO = 1e-14  # f_after <= ratio * f_before ends the chain


class ChainTerminated(RuntimeError):
    """The chain hit the exact optimum (f dropped to ~0) in finite time.

    Happens on diagonal (or otherwise decoupled) matrices, where single
    coordinate steps zero out components exactly; a progress *rate* is
    meaningless there.
    """

    def __init__(self, message: str, steps: int):
        super().__init__(message)
        self.steps = steps


@dataclass(eq=False)
class QuadraticInstance:
    """A symmetric positive definite matrix Q defining f(w) = (1/2) w^T Q w.

    Symmetry is required to about 1e-12 relative to the largest entry and
    definiteness is checked by attempting a Cholesky factorization.
    """

    Q: np.ndarray

    def __post_init__(self):
        Q = np.ascontiguousarray(np.asarray(self.Q, dtype=np.float64))
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
            raise ValueError("Q must be a square matrix")
        if not np.isfinite(Q).all():
            raise ValueError("Q has non-finite entries")
        scale = max(1.0, float(np.abs(Q).max()))
        if float(np.abs(Q - Q.T).max()) > 1e-12 * scale:
            raise ValueError("Q is not symmetric")
        try:
            np.linalg.cholesky(Q)
        except np.linalg.LinAlgError as exc:
            raise ValueError("Q is not positive definite") from exc
        self.Q = Q

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def objective(self, w) -> float:
        w = np.asarray(w, dtype=np.float64)
        return 0.5 * float(w @ self.Q @ w)

    def to_text_lines(self) -> list[str]:
        """Whitespace-separated dense rows, loadable by :meth:`from_text`."""
        return [" ".join(repr(float(v)) for v in row) for row in self.Q]

    @classmethod
    def from_text(cls, text: str) -> "QuadraticInstance":
        rows = [line.split() for line in text.splitlines() if line.strip()]
        if not rows:
            raise ValueError("empty matrix text")
        return cls(np.array([[float(v) for v in row] for row in rows]))


def _as_matrix(Q) -> np.ndarray:
    if isinstance(Q, QuadraticInstance):
        return Q.Q
    Q = np.ascontiguousarray(np.asarray(Q, dtype=np.float64))
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError("Q must be a square matrix")
    return Q


def generate_rbf_instance(n: int, sigma: float = 3.0, seed: int = 0) -> QuadraticInstance:
    """Gaussian-kernel Gram matrix of n standard-normal points in the plane.

    Q_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)), so the diagonal is exactly 1
    and off-diagonals lie in (0, 1).  A draw whose factorization fails
    numerically (e.g. near-coincident points) is rejected and retried with
    the next seed, up to 10 attempts.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    for attempt in range(10):
        rng = np.random.default_rng(seed + attempt)
        x = rng.standard_normal((n, 2))
        sq = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
        Q = np.exp(-sq / (2.0 * sigma * sigma))
        np.fill_diagonal(Q, 1.0)
        Q = 0.5 * (Q + Q.T)  # exact symmetry despite rounding
        try:
            return QuadraticInstance(Q)
        except ValueError:
            continue
    raise RuntimeError(
        f"no positive definite draw in 10 attempts (n={n}, sigma={sigma}, seed={seed})"
    )


def cd_transition(Q, w, i: int) -> np.ndarray:
    """Exact minimization of f along coordinate i: w_i -= (Qw)_i / Q_ii.

    Returns a new vector; the input is untouched.  The updated point lands
    on the hyperplane (Qw)_i = 0, so the map is idempotent, and it is
    linear in w (scale invariant).
    """
    Q = _as_matrix(Q)
    w = np.asarray(w, dtype=np.float64).copy()
    g = float(Q[i] @ w)
    w[i] -= g / Q[i, i]
    return w


@numba.njit(cache=True)
def _chain_kernel(Q, diag, w, f_in, idx, drop_sums, drop_counts, bucket_sums, bucket_size, prev_in):
    """Advance the renormalized chain over idx; returns (f, prev, stop).

    stop == -1 means all steps ran; otherwise the step at position `stop`
    drove f below _TERMINATION_RATIO of its value (exact-optimum event) and
    was not recorded.
    """
    n = w.shape[0]
    f = f_in
    prev = prev_in
    for t in range(idx.shape[0]):
        i = idx[t]
        g = 0.0
        for j in range(n):
            g += Q[i, j] * w[j]
        w[i] -= g / diag[i]
        f_after = 0.0
        for a in range(n):
            row = 0.0
            for b in range(n):
                row += Q[a, b] * w[b]
            f_after += w[a] * row
        f_after *= 0.5
        if not (f_after > 1e-14 * f):
            return f, prev, t
        d = np.log(f) - np.log(f_after)
        drop_sums[prev, i] += d
        drop_counts[prev, i] += 1
        bucket_sums[t // bucket_size] += d
        s2 = 0.0
        for j in range(n):
            s2 += w[j] * w[j]
        inv = 1.0 / np.sqrt(s2)
        for j in range(n):
            w[j] *= inv
        f = f_after * inv * inv
        prev = i
    return f, prev, -1


class ChainState:
    """A running chain on the unit sphere with per-transition drop tallies.

    ``drop_sums[p, i]`` / ``drop_counts[p, i]`` accumulate the log-f drops
    of steps that picked coordinate i right after coordinate p (p = n for
    the first step, which has no predecessor), so conditional rates by
    coordinate or by transition pair can both be read off.
    """

    def __init__(self, Q, w0):
        self.Q = _as_matrix(Q)
        n = self.Q.shape[0]
        self.diag = np.ascontiguousarray(np.diag(self.Q))
        if not (self.diag > 0).all():
            raise ValueError("Q must have a positive diagonal")
        w = np.asarray(w0, dtype=np.float64).copy()
        if w.shape != (n,):
            raise ValueError("w0 has the wrong shape")
        norm = float(np.linalg.norm(w))
        if not norm > 0:
            raise ValueError("w0 must be nonzero")
        self.w = w / norm
        self.f = 0.5 * float(self.w @ self.Q @ self.w)
        if not self.f > 0:
            raise ValueError("f(w0) must be positive (is Q positive definite?)")
        self.prev = n  # virtual predecessor for the first step
        self.drop_sums = np.zeros((n + 1, n))
        self.drop_counts = np.zeros((n + 1, n), dtype=np.int64)
        self.samples = 0
        self.terminated = False

    def reset_tallies(self) -> None:
        """Forget accumulated drops (e.g. after burn-in) but keep w."""
        self.drop_sums[:] = 0.0
        self.drop_counts[:] = 0
        self.samples = 0

    def advance(self, idx, bucket_sums=None, bucket_size=None) -> None:
        """Run one step per entry of idx, accumulating drops in place."""
        if self.terminated:
            raise ChainTerminated("chain already terminated", self.samples)
        idx = np.ascontiguousarray(np.asarray(idx, dtype=np.int64))
        n = self.Q.shape[0]
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError("coordinate index out of range")
        if bucket_sums is None:
            bucket_size = max(int(idx.size), 1)
            bucket_sums = np.zeros(1)
        f, prev, stop = _chain_kernel(
            self.Q,
            self.diag,
            self.w,
            self.f,
            idx,
            self.drop_sums,
            self.drop_counts,
            bucket_sums,
            np.int64(bucket_size),
            np.int64(self.prev),
        )
        if stop >= 0:
            self.samples += int(stop)
            self.terminated = True
            raise ChainTerminated(
                f"objective hit the exact optimum after {self.samples} recorded steps",
                self.samples,
            )
        self.f = float(f)
        self.prev = int(prev)
        self.samples += int(idx.size)

    def total_drop(self) -> float:
        return float(self.drop_sums.sum())

    def rate(self) -> float:
        return self.total_drop() / self.samples

    def coordinate_rates(self) -> np.ndarray:
        """Mean drop conditioned on the chosen coordinate (nan if unvisited)."""
        sums = self.drop_sums.sum(axis=0)
        counts = self.drop_counts.sum(axis=0)
        out = np.full(self.Q.shape[0], np.nan)
        seen = counts > 0
        out[seen] = sums[seen] / counts[seen]
        return out


@dataclass
class RateEstimate:
    """Measured progress of a chain: overall and per-coordinate means."""

    rho: float
    rho_i: np.ndarray
    stderr: float
    samples: int


def _validated_pi(pi, n: int, *, interior: bool) -> np.ndarray:
    p = np.asarray(pi, dtype=np.float64)
    if p.shape != (n,):
        raise ValueError(f"pi must have shape ({n},)")
    if not np.isfinite(p).all():
        raise ValueError("pi has non-finite entries")
    if interior:
        if not (p > 0).all():
            raise ValueError("pi must be strictly positive")
    elif (p < 0).any():
        raise ValueError("pi must be nonnegative")
    total = float(p.sum())
    if not total > 0:
        raise ValueError("pi must have positive mass")
    return p / total


def _draw_indices(rng, cum: np.ndarray, count: int) -> np.ndarray:
    u = rng.random(count)
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, cum.size - 1).astype(np.int64)


def _seed_seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _rng_from(seed) -> np.random.Generator:
    return np.random.default_rng(_seed_seq(seed))


def _start_state(Q: np.ndarray, rng) -> ChainState:
    n = Q.shape[0]
    w0 = rng.standard_normal(n)
    while not float(np.linalg.norm(w0)) > 0:  # pragma: no cover - measure zero
        w0 = rng.standard_normal(n)
    return ChainState(Q, w0)


def _batch_stderr(bucket_sums: np.ndarray, bucket_size: int) -> float:
    groups = np.array_split(bucket_sums, _BATCHES)
    means = np.array([g.sum() / (g.size * bucket_size) for g in groups])
    return float(np.sqrt(means.var(ddof=1) / means.size))


def estimate_rho(Q, pi, seed: int = 0, rel_tol: float = 1e-4) -> RateEstimate:
    """Measure the mean per-step log-f drop of the chain driven by pi.

    Coordinates are sampled i.i.d. from pi (categorical inverse-CDF on a
    dedicated generator).  The first 100*n steps are burn-in and are not
    tallied.  Sampling proceeds in geometrically growing rounds until the
    batch-means standard error of rho falls below rel_tol * rho and every
    coordinate has been visited.

    Raises ChainTerminated if the chain lands on the exact optimum, which
    is the expected outcome for diagonal matrices.
    """
    Q = _as_matrix(Q)
    n = Q.shape[0]
    p = _validated_pi(pi, n, interior=True)
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    rng = _rng_from(seed)
    cum = np.cumsum(p)
    state = _start_state(Q, rng)

    burn = 100 * n
    state.advance(_draw_indices(rng, cum, burn))
    state.reset_tallies()

    buckets: list[np.ndarray] = []
    round_buckets = _INITIAL_BUCKETS
    while True:
        bucket_sums = np.zeros(round_buckets)
        idx = _draw_indices(rng, cum, round_buckets * _BUCKET)
        state.advance(idx, bucket_sums, _BUCKET)
        buckets.append(bucket_sums)
        all_buckets = np.concatenate(buckets)
        rho = state.rate()
        stderr = _batch_stderr(all_buckets, _BUCKET)
        visited = state.drop_counts.sum(axis=0) > 0
        if rho > 0 and stderr <= rel_tol * rho and visited.all():
            return RateEstimate(rho, state.coordinate_rates(), stderr, state.samples)
        round_buckets = all_buckets.size  # double the total each round


def simulate_log_drop(Q, pi, n_steps: int, seed: int = 0) -> float:
    """Total drop in log f over n_steps from a random unit start.

    Unlike :func:`estimate_rho` there is no burn-in and pi may sit on the
    boundary of the simplex (zero entries are simply never drawn), which is
    what makes stalled boundary chains observable.
    """
    Q = _as_matrix(Q)
    n = Q.shape[0]
    p = _validated_pi(pi, n, interior=False)
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    rng = _rng_from(seed)
    state = _start_state(Q, rng)
    state.advance(_draw_indices(rng, np.cumsum(p), n_steps))
    return state.total_drop()


@dataclass
class BalanceResult:
    """Outcome of :func:`balance_rprop`.

    residual is max_i |rho_i - rho| / rho at the accepted iterate;
    terminated means the chain solved the instance exactly (diagonal-like
    case), in which case pi is returned as-is and estimate is None.
    """

    pi: np.ndarray
    converged: bool
    residual: float
    iterations: int
    estimate: RateEstimate | None
    terminated: bool = False


def balance_rprop(
    Q,
    seed: int = 0,
    tight_tol: float = 1e-3,
    max_outer: int = 200,
) -> BalanceResult:
    """Find the sampling distribution equalizing per-coordinate progress.

    Iterates estimate -> sign-based update in log-pi space: a coordinate
    whose conditional rate exceeds the mean gets more mass.  Step sizes
    follow the resilient scheme (grow 1.2x while the sign repeats, shrink
    0.5x and skip the move on a flip) within [1e-4, 0.5].  Estimation
    starts at a loose 0.04 relative tolerance and tightens by 4x whenever
    the residuals sink into the estimate's noise, down to tight_tol; the
    iteration stops when max_i |rho_i - rho| < 5 * stderr(rho) at the
    tight tolerance.  If 200 rounds pass without that, the best tight
    iterate is returned with converged=False and a warning.
    """
    Q = _as_matrix(Q)
    n = Q.shape[0]
    if not 0 < tight_tol:
        raise ValueError("tight_tol must be positive")
    if max_outer < 1:
        raise ValueError("max_outer must be positive")
    seeds = _seed_seq(seed).spawn(max_outer)
    log_pi = np.zeros(n)
    step = np.full(n, 0.05)
    prev_sign = np.zeros(n)
    rel = max(0.04, tight_tol)
    best: tuple[float, np.ndarray, RateEstimate, int] | None = None
    est = None
    pi = np.full(n, 1.0 / n)
    for k in range(max_outer):
        pi = np.exp(log_pi - log_pi.max())
        pi /= pi.sum()
        try:
            est = estimate_rho(Q, pi, seed=seeds[k], rel_tol=rel)
        except ChainTerminated:
            return BalanceResult(pi, True, 0.0, k, None, terminated=True)
        resid = est.rho_i - est.rho
        max_resid = float(np.abs(resid).max())
        tight = rel <= tight_tol * (1.0 + 1e-12)
        if tight:
            rel_resid = max_resid / est.rho
            if best is None or rel_resid < best[0]:
                best = (rel_resid, pi.copy(), est, k + 1)
            if max_resid < 5.0 * est.stderr:
                return BalanceResult(pi, True, rel_resid, k + 1, est)
        elif max_resid < 10.0 * est.stderr:
            rel = max(tight_tol, rel / 4.0)
        sign = np.sign(resid)
        flipped = sign * prev_sign < 0
        repeated = sign * prev_sign > 0
        step[flipped] = np.maximum(step[flipped] * 0.5, 1e-4)
        step[repeated] = np.minimum(step[repeated] * 1.2, 0.5)
        sign[flipped] = 0.0
        log_pi += step * sign
        prev_sign = sign
    warnings.warn(
        "balance_rprop did not meet its stopping rule; returning best iterate",
        RuntimeWarning,
        stacklevel=2,
    )
    if best is not None:
        rel_resid, pi_best, est_best, it = best
        return BalanceResult(pi_best, False, rel_resid, it, est_best)
    resid = float(np.abs(est.rho_i - est.rho).max() / est.rho) if est else math.nan
    return BalanceResult(pi, False, resid, max_outer, est)


@dataclass(frozen=True)
class ScanPoint:
    """One curve sample: rate ratio rho(gamma_i(t)) / rho(pi) and its stderr."""

    i: int
    t: float
    ratio: float
    stderr: float


def gamma_scan(
    Q,
    pi_bar,
    t_grid=DEFAULT_T_GRID,
    seed: int = 0,
    rel_tol: float = 1e-3,
) -> list[ScanPoint]:
    """Probe rate ratios along n curves through pi_bar.

    Curve i scales the i-th entry by 2**t and renormalizes:
    gamma_i(t) = normalize(pi_bar + (2**t - 1) * pi_bar_i * e_i).  Every
    point's rate is estimated independently; t = 0 is pi_bar itself and
    reuses the shared baseline estimate, so its ratio is exactly 1 with
    zero spread.  Ratios carry a first-order propagated stderr.
    """
    Q = _as_matrix(Q)
    n = Q.shape[0]
    p = _validated_pi(pi_bar, n, interior=True)
    t_grid = [float(t) for t in t_grid]
    seeds = _seed_seq(seed).spawn(1 + n * len(t_grid))
    base = estimate_rho(Q, p, seed=seeds[0], rel_tol=rel_tol)
    base_rel = base.stderr / base.rho
    points: list[ScanPoint] = []
    k = 1
    for i in range(n):
        for t in t_grid:
            if t == 0.0:
                points.append(ScanPoint(i, 0.0, 1.0, 0.0))
                k += 1
                continue
            gamma = p.copy()
            gamma[i] += (2.0**t - 1.0) * p[i]
            gamma /= gamma.sum()
            est = estimate_rho(Q, gamma, seed=seeds[k], rel_tol=rel_tol)
            k += 1
            ratio = est.rho / base.rho
            spread = ratio * math.hypot(est.stderr / est.rho, base_rel)
            points.append(ScanPoint(i, t, ratio, spread))
    return points
