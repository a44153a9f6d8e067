"""Benchmark run candidates."""

import itertools

from hgamp import LOG
from hgamp.engine import RunParams, run
from hgamp.exceptions import HgampError
from hgamp.format import parse_instance
from hgamp.logger import flag_extra
from hgamp.model import compact_degree
from hgamp.report import RunRecord
from hgamp.solution import read_seed_configs


def load_instance(config, path=None):
    """Parse the configured instance file, applying the format and convention overrides."""
    section = config["instance"]
    return parse_instance(
        path or section["path"],
        section["format"],
        section["convention"] or None,
    )


def run_params(config, instance):
    seed_file = config["construct"]["seed_configs"]
    seed_configs = read_seed_configs(seed_file, instance) if seed_file else ()
    return RunParams.from_config(config, seed_configs)


class RunCandidate:
    """
    One `(instance file, seed)` pair of a benchmark.

    Candidates are independent of each other, so a bench fans them out over a
    process pool; each one parses its own instance inside the worker.
    """

    def __init__(self, path, seed, config):
        self.path = path
        self.seed = seed
        self.config = config

    @classmethod
    def expand(cls, config):
        """All candidates of the configured bench, ordered by instance file then seed."""
        bench = config["bench"]
        return [
            cls(path, seed, config)
            for path, seed in itertools.product(bench["instances"], bench["seeds"])
        ]

    def run(self):
        """Execute the run; returns a `RunRecord`, or None if the instance could not be solved."""
        try:
            instance = load_instance(self.config, self.path)
            params = run_params(self.config, instance)
            LOG.info(
                f"Running {self}",
                extra=flag_extra({"instance": instance.name, "seed": self.seed}),
            )
            best, stats = run(instance, params, self.seed)
        except (HgampError, OSError) as e:
            LOG.error(
                f"{self} failed: {e}", extra=flag_extra({"file": self.path, "seed": self.seed})
            )
            return None

        return RunRecord(
            instance=instance.name,
            seed=self.seed,
            best=best.cost,
            avg=stats.final_average,
            time_s=stats.wall_time,
            ttb_s=stats.time_to_best,
            compact=compact_degree(best, instance),
        )

    def __repr__(self):
        return f"{type(self).__name__} ({self.path}, seed={self.seed})"
