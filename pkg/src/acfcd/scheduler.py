"""Online adaptive coordinate selection.

Each coordinate i carries an unnormalized preference p_i, clipped to
[p_min, p_max].  Coordinates are drawn with probability proportional to
p_i through a stochastic quasi-sweep scheduler: every regeneration adds
n*p_i/p_sum to a fractional accumulator a_i, emits floor(a_i) copies of i,
keeps the remainder, and shuffles the emitted block.  Preferences adapt
online: after a step on coordinate i yields objective gain delta_f, p_i is
multiplied by exp(c*(delta_f/rbar - 1)) and clipped, then the running gain
reference rbar is refreshed.  An initial uniform sweep seeds rbar with the
mean observed gain before adaptation activates.

The expected block length is n and never exceeds 2n, so selection stays
"essentially cyclic": a coordinate with accumulator gain g = n*p_i/p_sum
per regeneration waits at most ceil(1/g) regenerations between visits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["AcfConfig", "AcfState", "UniformSelector"]

# Treat gains and references below this as exact zero when forming the
# ratio delta_f/rbar, and never let rbar fall below it.
_TINY = 1e-300


@dataclass
class AcfConfig:
    """Constants of the preference update.

    c : learning rate of the multiplicative preference update
    p_min, p_max : absolute clipping bounds on each unnormalized p_i
    eta : smoothing rate of the gain reference rbar; None means 1/n,
        fixed when the state is created
    """

    c: float = 1.0 / 5.0
    p_min: float = 1.0 / 20.0
    p_max: float = 20.0
    eta: float | None = None

    def validate(self):
        if not (0.0 < self.p_min <= 1.0 <= self.p_max):
            raise ValueError("need 0 < p_min <= 1 <= p_max")
        if self.c <= 0.0:
            raise ValueError("c must be positive")
        if self.eta is not None and not (0.0 < self.eta <= 1.0):
            raise ValueError("eta must lie in (0, 1]")


class AcfState:
    """Preferences, gain reference, and the pending coordinate schedule.

    Parameters
    ----------
    n : number of coordinates
    config : AcfConfig, defaults applied when None
    seed : seeds the shuffle generator (64-bit PCG)
    initial_prefs : optional array of starting preferences; default all 1
    """

    def __init__(self, n, config: AcfConfig | None = None, seed=0, initial_prefs=None):
        if n < 1:
            raise ValueError("need at least one coordinate")
        self.config = config if config is not None else AcfConfig()
        self.config.validate()
        self.n = int(n)
        self.eta = self.config.eta if self.config.eta is not None else 1.0 / self.n
        if initial_prefs is None:
            self.prefs = np.ones(self.n)
        else:
            self.prefs = np.clip(
                np.asarray(initial_prefs, dtype=np.float64).copy(),
                self.config.p_min,
                self.config.p_max,
            )
            if self.prefs.shape != (self.n,):
                raise ValueError("initial_prefs has wrong shape")
        self.p_sum = float(self.prefs.sum())
        self.accum = np.zeros(self.n)
        self.rbar: float | None = None
        self.warmup_remaining = self.n
        self._warmup_total = 0.0
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self._schedule = np.empty(0, dtype=np.int64)
        self._cursor = 0
        self._updates_since_resum = 0

    # -- warm-up -------------------------------------------------------------

    def warmup_record(self, delta_f: float):
        """Accumulate one uniform-sweep gain; after n of them, rbar is set
        to their mean (floored at a tiny positive value if all were zero)."""
        if self.warmup_remaining <= 0:
            raise RuntimeError("warm-up already complete")
        if not np.isfinite(delta_f) or delta_f < 0.0:
            raise ValueError(f"gain must be finite and nonnegative, got {delta_f}")
        self._warmup_total += delta_f
        self.warmup_remaining -= 1
        if self.warmup_remaining == 0:
            self.rbar = max(self._warmup_total / self.n, _TINY)

    @property
    def warmed_up(self) -> bool:
        return self.warmup_remaining == 0

    # -- preference update -----------------------------------------------------

    def acf_update(self, i: int, delta_f: float):
        """Multiplicative preference update for coordinate i, then refresh rbar.

        Order matters: the factor exp(c*(delta_f/rbar - 1)) uses the
        reference from *before* this step, the clipped preference is written
        back, and only then does rbar absorb delta_f.  Calls that arrive
        before warm-up completed are routed to :meth:`warmup_record` and
        leave preferences untouched.
        """
        if not np.isfinite(delta_f) or delta_f < 0.0:
            raise ValueError(f"gain must be finite and nonnegative, got {delta_f}")
        if self.warmup_remaining > 0:
            self.warmup_record(delta_f)
            return
        if self.rbar is None or self.rbar <= 0.0:
            raise RuntimeError("rbar not positive; warm-up contract violated")
        if delta_f <= _TINY and self.rbar <= _TINY:
            ratio = 1.0  # both effectively zero: neutral step
        else:
            ratio = delta_f / self.rbar
        z = self.config.c * (ratio - 1.0)
        # the clip makes any exponent beyond ~log(p_max/p_min) irrelevant;
        # capping z avoids overflow in exp for extreme gain ratios
        p_new = self.prefs[i] * math.exp(min(z, 700.0))
        p_new = min(max(p_new, self.config.p_min), self.config.p_max)
        self.p_sum += p_new - self.prefs[i]
        self.prefs[i] = p_new
        self.rbar = max((1.0 - self.eta) * self.rbar + self.eta * delta_f, _TINY)
        self._updates_since_resum += 1
        if self._updates_since_resum >= self.n:
            self.p_sum = float(self.prefs.sum())
            self._updates_since_resum = 0

    def pi(self):
        """Normalized selection distribution p / p_sum."""
        return self.prefs / self.prefs.sum()

    # -- scheduling ------------------------------------------------------------

    def generate_schedule(self):
        """Emit the next shuffled coordinate block J and make it pending.

        Accumulators gain n*p_i/p_sum; each coordinate contributes
        floor(a_i) copies and keeps the fractional remainder, so len(J)
        has expectation n and is always < 2n.
        """
        self.accum += self.n * self.prefs / self.p_sum
        counts = np.floor(self.accum).astype(np.int64)
        self.accum -= counts
        block = np.repeat(np.arange(self.n, dtype=np.int64), counts)
        self.rng.shuffle(block)
        self._schedule = block
        self._cursor = 0
        return block

    def next_coordinate(self) -> int:
        """Next coordinate from the pending block, regenerating as needed."""
        while self._cursor >= self._schedule.size:
            self.generate_schedule()
        i = self._schedule[self._cursor]
        self._cursor += 1
        return int(i)

    def waiting_time_bound(self) -> int:
        """Max regenerations between visits of any coordinate, for the
        current preferences: ceil(p_sum / (n * min p_i))."""
        return math.ceil(self.p_sum / (self.n * float(self.prefs.min())))

    # -- diagnostics -------------------------------------------------------------

    def snapshot_csv(self, fileobj):
        """Write the preference table as CSV rows (i, p, pi)."""
        fileobj.write("i,p,pi\n")
        total = float(self.prefs.sum())
        for i in range(self.n):
            fileobj.write(f"{i},{float(self.prefs[i])!r},{float(self.prefs[i]) / total!r}\n")


class UniformSelector:
    """Baseline selection: a fresh uniform permutation every sweep."""

    def __init__(self, n, seed=0):
        if n < 1:
            raise ValueError("need at least one coordinate")
        self.n = int(n)
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self._order = np.empty(0, dtype=np.int64)
        self._cursor = 0

    def next_coordinate(self) -> int:
        if self._cursor >= self._order.size:
            self._order = self.rng.permutation(self.n)
            self._cursor = 0
        i = self._order[self._cursor]
        self._cursor += 1
        return int(i)
