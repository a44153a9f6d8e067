"""The main evolutionary loop."""

import time
from dataclasses import dataclass, field

import numpy as np

from hgamp import LOG
from hgamp.construct import CrhParams, build_configurations, mst_estimate
from hgamp.crossover import mdeax
from hgamp.exceptions import HgampError, InfeasibleInstanceError, RepairError
from hgamp.localsearch import build_neighbor_lists, vnd_improve
from hgamp.logger import flag_extra
from hgamp.population import (
    halve_subpops,
    init_population,
    insert_offspring,
    replace_worst_config,
    restart_if_stagnant,
    select_parents,
)
from hgamp.repairmutate import mutate, repair


@dataclass(frozen=True)
class RunParams:
    seed: int = 0
    max_iterations: int = 300000
    time_limit: float = 0.0
    mu: int = 30
    lam: int = 30
    alpha: int = 20
    zeta: float = 0.15
    xi: float = 0.25
    eta: int = 70000
    beta: int = 10
    n_close: int = 5
    n_elite: int = 0
    tabu_tenure: int = 20
    penalty_cap: float = 1e9
    parent_redraws: int = 10
    crh: CrhParams = field(default_factory=CrhParams)
    seed_configs: tuple = ()
    seed_configs_mode: str = "add"

    def __post_init__(self):
        if self.max_iterations < 0 or self.time_limit < 0:
            raise HgampError("max_iterations and time_limit must not be negative")
        for name in ("mu", "lam", "alpha", "eta", "beta", "n_close", "tabu_tenure"):
            if getattr(self, name) < 1:
                raise HgampError(f"{name} must be positive")
        if not 0 <= self.zeta <= 1:
            raise HgampError(f"zeta must lie in [0, 1], got {self.zeta}")
        if not 0 < self.xi <= 1:
            raise HgampError(f"xi must lie in (0, 1], got {self.xi}")

    @property
    def gamma(self):
        return self.crh.gamma

    @classmethod
    def from_config(cls, config, seed_configs=()):
        run = dict(config["run"])
        run["lam"] = run.pop("lambda")
        construct = config["construct"]
        return cls(
            crh=CrhParams.from_config(construct),
            seed_configs=tuple(seed_configs),
            seed_configs_mode=construct["seed_configs_mode"],
            **{k: v for k, v in run.items() if k in cls.__dataclass_fields__},
        )


@dataclass
class RunStats:
    best: object = None
    best_cost: float = None
    best_iteration: int = 0
    wall_time: float = 0.0
    time_to_best: float = 0.0
    iterations: int = 0
    restarts: int = 0
    crossovers: int = 0
    repairs: int = 0
    repair_failures: int = 0
    local_searches: int = 0
    final_average: float = None

    def as_dict(self):
        return {
            "best_cost": self.best_cost,
            "best_iteration": self.best_iteration,
            "wall_time": round(self.wall_time, 3),
            "time_to_best": round(self.time_to_best, 3),
            "iterations": self.iterations,
            "restarts": self.restarts,
            "crossovers": self.crossovers,
            "repairs": self.repairs,
            "repair_failures": self.repair_failures,
            "local_searches": self.local_searches,
            "final_average": self.final_average,
        }


class Run:
    """State of one seeded search over one instance."""

    def __init__(self, instance, params, seed=None):
        if instance.total_capacity < instance.total_demand:
            raise InfeasibleInstanceError(
                f"{instance.name}: total depot capacity {instance.total_capacity} "
                f"is below total demand {instance.total_demand}"
            )
        self.instance = instance
        self.params = params
        self.seed = params.seed if seed is None else seed
        self.rng = np.random.default_rng(self.seed)
        self.stats = RunStats()
        self.start = None

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def finished(self):
        if self.params.max_iterations > 0:
            return self.stats.iterations >= self.params.max_iterations
        if self.params.time_limit > 0:
            return self.elapsed >= self.params.time_limit
        return True

    def halfway(self):
        if self.params.max_iterations > 0:
            return self.stats.iterations >= self.params.max_iterations / 2
        return self.elapsed >= self.params.time_limit / 2

    def _note_best(self, population):
        if self.stats.best_cost is None or population.best.cost < self.stats.best_cost:
            self.stats.best_cost = population.best.cost
            self.stats.best_iteration = self.stats.iterations
            self.stats.time_to_best = self.elapsed
            LOG.info(
                f"new best {population.best.cost} at iteration {self.stats.iterations} "
                f"with depots {population.best.depot_config}",
                extra=flag_extra(
                    {
                        "instance": self.instance.name,
                        "iteration": self.stats.iterations,
                        "objective": population.best.cost,
                    }
                ),
            )

    def execute(self):
        inst = self.instance
        params = self.params
        rng = self.rng
        self.start = time.perf_counter()

        lists = build_neighbor_lists(inst, params.alpha)
        estimates = [mst_estimate(inst, i) for i in range(inst.m)]
        ranks = build_configurations(
            inst, params.crh, lists, rng, params.seed_configs, params.seed_configs_mode, estimates
        )
        population = init_population(inst, ranks, params, lists, rng, estimates)
        self._note_best(population)

        while not self.finished():
            parent_a, parent_b = select_parents(population, rng, params.parent_redraws)
            offspring = mdeax(parent_a, parent_b, params.beta, rng, inst, lists)
            self.stats.crossovers += 1
            if not offspring:
                offspring = [mutate(parent_a.copy(), 1.0, params.xi, inst, lists, rng)]

            for child in offspring:
                if not child.feasible:
                    self.stats.repairs += 1
                    try:
                        repair(child, inst, lists, rng, params.tabu_tenure, params.penalty_cap)
                    except RepairError as e:
                        self.stats.repair_failures += 1
                        LOG.warning(
                            f"discarding offspring: {e}",
                            extra=flag_extra({"instance": inst.name}),
                        )
                        continue

                child = mutate(child, params.zeta, params.xi, inst, lists, rng)
                vnd_improve(child, lists, inst)
                self.stats.local_searches += 1
                self.stats.iterations += 1
                population.stagnation += 1

                improved = population.record(child)
                rekeyed = improved and replace_worst_config(
                    population, child, inst, params, lists, rng, estimates
                )
                if not rekeyed:
                    insert_offspring(population, child, params)

                if not population.halved and self.halfway():
                    halve_subpops(population)

                restarted = restart_if_stagnant(population, inst, params, lists, rng, estimates)
                if restarted is not population:
                    population = restarted
                    self.stats.restarts += 1

                # rekeying and restarts can also lower the incumbent
                self._note_best(population)

                if self.finished():
                    break

        self.stats.best = population.best
        members = [s.cost for sub in population.subpops for s in sub.members]
        self.stats.final_average = sum(members) / len(members) if members else population.best.cost
        self.stats.wall_time = self.elapsed
        LOG.info(
            f"{inst.name}: best {self.stats.best_cost} after {self.stats.iterations} iterations",
            extra=flag_extra(self.stats.as_dict()),
        )
        return population.best, self.stats


def run(instance, params, seed=None):
    """Solve one instance; identical instance, parameters and seed give identical results."""
    return Run(instance, params, seed).execute()
