"""The training loop: coordinate selection, stopping, accounting."""

from __future__ import annotations

from time import perf_counter

import numpy as np

from ..data import OpCounter
from ..scheduler import AcfState, UniformSelector
from .common import SolverConfig, TrainResult
from .lasso import LassoState
from .logreg import LogRegDualState
from .mcsvm import McSvmState
from .svm import SvmDualState

__all__ = ["PROBLEMS", "make_state", "train"]

PROBLEMS = {
    "lasso": LassoState,
    "svm": SvmDualState,
    "logreg": LogRegDualState,
    "mcsvm": McSvmState,
}


def make_state(dataset, problem: str, config: SolverConfig):
    try:
        cls = PROBLEMS[problem]
    except KeyError:
        raise ValueError(f"unknown problem {problem!r}") from None
    if problem in ("svm", "logreg"):
        if dataset.class_values is None or dataset.n_classes != 2:
            raise ValueError(f"{problem} needs binary classification labels")
    return cls(dataset, config)


def train(dataset, problem: str, config: SolverConfig) -> TrainResult:
    """Run coordinate descent until the epoch-wise maximum KKT violation
    drops below epsilon or max_epochs is reached.

    An epoch is n coordinate steps (n = feature count for lasso, example
    count otherwise).  Under adaptive selection the first epoch is a
    uniform warm-up sweep that seeds the gain reference; adaptation starts
    with the second epoch.  Stopping is sound because selection remains
    essentially cyclic: every coordinate is visited within a bounded
    number of sweeps, so an epoch maximum below epsilon certifies that
    recently-visited violations are all small.
    """
    config.validate()
    state = make_state(dataset, problem, config)
    n = state.n_coordinates
    counter = OpCounter()
    iterations = 0
    epochs = 0
    converged = False

    seed_seq = np.random.SeedSequence(config.seed)
    sched_seed, sweep_seed = seed_seq.spawn(2)

    t0 = perf_counter()
    if config.max_epochs > 0:
        if config.selection == "acf":
            acf = AcfState(
                n, config=config.acf, seed=sched_seed, initial_prefs=config.initial_prefs
            )
            sweep_rng = np.random.Generator(np.random.PCG64(sweep_seed))
            kkt_max = 0.0
            for i in sweep_rng.permutation(n):  # warm-up sweep, uniform order
                gain, viol = state.step(int(i), counter)
                acf.warmup_record(max(gain, 0.0))
                if viol > kkt_max:
                    kkt_max = viol
                iterations += 1
            epochs = 1
            converged = kkt_max < config.epsilon
            while not converged and epochs < config.max_epochs:
                kkt_max = 0.0
                for _ in range(n):
                    i = acf.next_coordinate()
                    gain, viol = state.step(i, counter)
                    acf.acf_update(i, max(gain, 0.0))
                    if viol > kkt_max:
                        kkt_max = viol
                    iterations += 1
                epochs += 1
                converged = kkt_max < config.epsilon
        else:
            selector = UniformSelector(n, seed=sweep_seed)
            while not converged and epochs < config.max_epochs:
                kkt_max = 0.0
                for _ in range(n):
                    i = selector.next_coordinate()
                    _, viol = state.step(i, counter)
                    if viol > kkt_max:
                        kkt_max = viol
                    iterations += 1
                epochs += 1
                converged = kkt_max < config.epsilon
    seconds = perf_counter() - t0

    return TrainResult(
        problem=problem,
        solution=state.solution(),
        objective=state.objective(),
        epochs=epochs,
        iterations=iterations,
        operations=counter.count,
        seconds=seconds,
        converged=bool(converged),
    )
