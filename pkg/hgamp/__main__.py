#!/usr/bin/env python
"""Main program."""

import argparse
import multiprocessing
import sys

from hgamp import LOG, __version__, logger, utils
from hgamp.candidate import RunCandidate, load_instance, run_params
from hgamp.engine import run
from hgamp.exceptions import HgampError, InfeasibleInstanceError
from hgamp.format import serialize_instance
from hgamp.generate import gen_tiny
from hgamp.logger import flag_extra
from hgamp.model import check_feasibility, total_cost
from hgamp.oracle import brute_force_oracle
from hgamp.report import BksRegistry, format_cost, gap_report
from hgamp.settings import Settings
from hgamp.solution import read_solution, write_solution


def _common_options():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-c", "--config", dest="config_file", metavar="CONFIG", help="path to configuration file"
    )
    common.add_argument(
        "-v", dest="logging.level", action="append_const", const=-1, help="increase log level"
    )
    common.add_argument(
        "-q", dest="logging.level", action="append_const", const=1, help="decrease log level"
    )
    return common


def _instance_options():
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument(
        "--format",
        dest="instance.format",
        metavar="FORMAT",
        help="instance format id, or 'auto' to detect it",
    )
    options.add_argument(
        "--convention",
        dest="instance.convention",
        metavar="CONVENTION",
        help="override the distance convention, e.g. 'exact-real' or 'scaled-integer:100'",
    )
    return options


def _run_options():
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument("--seed", dest="run.seed", type=int, help="random seed")
    options.add_argument(
        "--max-iterations",
        dest="run.max_iterations",
        type=int,
        help="number of offspring to build and improve (0 stops after initialization)",
    )
    options.add_argument(
        "--time-limit", dest="run.time_limit", type=float, metavar="SECS", help="wall clock budget"
    )
    options.add_argument("--mu", dest="run.mu", type=int, help="minimum subpopulation size")
    options.add_argument("--lambda", dest="run.lambda", type=int, help="generation size")
    options.add_argument("--alpha", dest="run.alpha", type=int, help="granular neighbor count")
    options.add_argument("--zeta", dest="run.zeta", type=float, help="mutation probability")
    options.add_argument("--xi", dest="run.xi", type=float, help="mutation removal fraction")
    options.add_argument("--eta", dest="run.eta", type=int, help="local searches before restart")
    options.add_argument("--beta", dest="run.beta", type=int, help="crossover offspring per pair")
    options.add_argument(
        "--gamma", dest="construct.gamma", type=int, help="number of depot configurations kept"
    )
    options.add_argument(
        "--seed-configs",
        dest="construct.seed_configs",
        metavar="PATH",
        help="file with depot configurations to inject",
    )
    return options


def _instance_argument(parser):
    parser.add_argument("instance.path", metavar="INSTANCE", nargs="?")
    parser.add_argument(
        "--instance",
        dest="instance_option",
        metavar="PATH",
        help="instance file, as an alternative to the positional argument",
    )


def _resolve_instance(parser, args):
    if "instance_option" not in args:
        return args
    option = args.pop("instance_option")
    positional = args["instance.path"]
    if option and positional and option != positional:
        parser.error(f"conflicting instance files: {positional} and {option}")
    args["instance.path"] = positional or option
    if not args["instance.path"]:
        parser.error("an instance file is required")
    return args


def build_parser():
    common = _common_options()
    instance = _instance_options()
    run_opts = _run_options()

    parser = argparse.ArgumentParser(
        description="Solve capacitated location-routing problems with a hybrid genetic algorithm"
    )
    parser.add_argument("-V", "--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    solve = commands.add_parser(
        "solve", parents=[common, instance, run_opts], help="solve one instance"
    )
    _instance_argument(solve)
    solve.add_argument(
        "-o", "--out", dest="output.solution", metavar="PATH", help="write the best solution"
    )

    bench = commands.add_parser(
        "bench",
        parents=[common, instance, run_opts],
        help="run instance files and directories over several seeds",
    )
    bench.add_argument("bench.instances", metavar="INSTANCE", nargs="+")
    bench.add_argument("--seeds", dest="bench.seeds", type=int, nargs="+", metavar="SEED")
    bench.add_argument("--threads", dest="bench.threads", type=int, help="parallel runs")
    bench.add_argument(
        "-e",
        "--exclude",
        dest="bench.exclude_files",
        metavar="PATTERN",
        action="append",
        help="skip files matching a gitwildmatch pattern",
    )
    bench.add_argument(
        "-r", "--report", dest="output.report", metavar="PATH", help="write per-run rows as CSV"
    )

    validate = commands.add_parser(
        "validate", parents=[common, instance], help="check a solution file against its instance"
    )
    _instance_argument(validate)
    validate.add_argument("instance.solution", metavar="SOLUTION")

    oracle = commands.add_parser(
        "oracle", parents=[common, instance], help="exact optimum of a tiny instance"
    )
    _instance_argument(oracle)
    oracle.add_argument(
        "-o", "--out", dest="output.solution", metavar="PATH", help="write the optimum as JSON"
    )

    tiny = commands.add_parser(
        "gen-tiny", parents=[common], help="write a reproducible toy instance"
    )
    tiny.add_argument("--customers", dest="generate.customers", type=int, metavar="N")
    tiny.add_argument("--depots", dest="generate.depots", type=int, metavar="M")
    tiny.add_argument("--seed", dest="run.seed", type=int)
    tiny.add_argument(
        "-o", "--out", dest="output.instance", metavar="PATH", help="instance file to write"
    )

    return parser


def _emit(text):
    sys.stdout.write(text)
    sys.stdout.flush()


def _describe(solution):
    lines = [f"cost {format_cost(solution.cost)}, depots {solution.depot_config}"]
    inst = solution.instance
    for route in solution.routes:
        customers = " ".join(str(inst.customer_index(v)) for v in route.customers)
        lines.append(f"  depot {route.depot}: {customers}")
    return "\n".join(lines) + "\n"


def solve(config):
    instance = load_instance(config)
    best, stats = run(instance, run_params(config, instance))
    LOG.info(f"{instance.name} finished", extra=flag_extra(stats.as_dict()))

    path = config["output"]["solution"]
    if path:
        write_solution(best, path)
        LOG.info(f"Solution written to {path}")
    _emit(f"{instance.name}: {_describe(best)}")
    return 0


def bench(config):
    candidates = RunCandidate.expand(config)
    if not candidates:
        utils.sysexit_with_message("No instance files to bench")

    p = multiprocessing.Pool(config["bench"]["threads"])
    records = p.map(_run_wrapper, candidates)
    p.close()
    p.join()

    done = [r for r in records if r is not None]
    report = gap_report(done, BksRegistry())
    path = config["output"]["report"]
    if path:
        report.write_csv(path)
        LOG.info(f"Report written to {path}")
    _emit(report.table())
    return 0 if len(done) == len(candidates) else 1


def validate(config):
    instance = load_instance(config)
    solution = read_solution(config["instance"]["solution"], instance)
    cost = format_cost(total_cost(solution, instance))
    result = check_feasibility(solution, instance)
    if result.feasible:
        _emit(f"feasible, cost {cost}\n")
        return 0

    _emit(f"infeasible, cost {cost}, depot excess {result.f_l}, route excess {result.f_r}\n")
    return 1


def oracle(config):
    instance = load_instance(config)
    _cost, solution = brute_force_oracle(instance)
    path = config["output"]["solution"]
    if path:
        write_solution(solution, path)
    _emit(f"{instance.name}: optimum {_describe(solution)}")
    return 0


def generate(config):
    section = config["generate"]
    instance = gen_tiny(section["customers"], section["depots"], config["run"]["seed"])
    text = serialize_instance(instance)
    path = config["output"]["instance"]
    if path:
        with utils.open_file(path, "w") as stream:
            stream.write(text)
        LOG.info(f"Instance {instance.name} written to {path}")
    else:
        _emit(text)
    return 0


COMMANDS = {
    "solve": solve,
    "bench": bench,
    "validate": validate,
    "oracle": oracle,
    "gen-tiny": generate,
}


def main():
    """Run main program."""
    parser = build_parser()
    args = _resolve_instance(parser, parser.parse_args().__dict__)
    command = args["command"]

    settings = Settings(args=args)
    config = settings.config

    logger.update_logger(LOG, config["logging"]["level"], config["logging"]["json"])

    try:
        return_code = COMMANDS[command](config)
    except InfeasibleInstanceError as e:
        utils.sysexit_with_message(str(e), code=2)
    except (HgampError, OSError) as e:
        utils.sysexit_with_message(str(e))

    sys.exit(return_code)


def _run_wrapper(candidate):
    return candidate.run()


if __name__ == "__main__":
    main()
