"""Solution and seed-configuration files."""

import anyconfig

from hgamp import LOG, utils
from hgamp.exceptions import InstanceSyntaxError, IntegrityError, StructuralError
from hgamp.logger import flag_extra
from hgamp.model import DepotConfiguration, Solution, objective_matches, total_cost


def solution_document(solution):
    inst = solution.instance
    return {
        "instance": inst.name,
        "objective": solution.cost,
        "depots": list(solution.opened),
        "routes": [
            {
                "depot": r.depot,
                "customers": [inst.customer_index(v) for v in r.customers],
            }
            for r in solution.routes
        ],
    }


def write_solution(solution, path):
    total_cost(solution, solution.instance)
    anyconfig.dump(solution_document(solution), path, ac_parser="json", indent=2)


def read_solution(path, instance):
    """
    Load a solution JSON and revalidate it against `instance`.

    :raises StructuralError: bad depot or customer references, or a broken visitation
    :raises IntegrityError: stored objective differs from the recomputed one
    """
    doc = anyconfig.load(path, ac_parser="json")
    return solution_from_document(doc, instance)


def solution_from_document(doc, instance):
    if doc.get("instance") not in (None, instance.name):
        LOG.warning(
            f"solution was written for '{doc.get('instance')}', "
            f"validating against '{instance.name}'",
            extra=flag_extra({"instance": instance.name}),
        )

    sequences = []
    for k, route in enumerate(doc.get("routes", [])):
        depot = route.get("depot")
        if not isinstance(depot, int) or not 0 <= depot < instance.m:
            raise StructuralError(f"route {k} references unknown depot {depot}")
        customers = []
        for j in route.get("customers", []):
            if not isinstance(j, int) or not 0 <= j < instance.n:
                raise StructuralError(f"route {k} references unknown customer {j}")
            customers.append(instance.vertex(j))
        if customers:
            sequences.append((depot, customers))

    declared = doc.get("depots", [])
    for i in declared:
        if not isinstance(i, int) or not 0 <= i < instance.m:
            raise StructuralError(f"unknown opened depot {i}")
    used = {depot for depot, _ in sequences}
    solution = Solution.from_sequences(instance, sequences, open_empty=set(declared) - used)

    recomputed = total_cost(solution, instance)
    stored = doc.get("objective")
    if stored is not None and not objective_matches(stored, recomputed, instance):
        raise IntegrityError(f"stored objective {stored} does not match recomputed {recomputed}")
    return solution


def read_seed_configs(path, instance):
    """One configuration per line as 0-based depot indices; `#` starts a comment."""
    configs = []
    with utils.open_file(path) as stream:
        for lineno, line in enumerate(stream, 1):
            content = line.split("#", 1)[0].split()
            if not content:
                continue
            try:
                depots = [int(tok) for tok in content]
            except ValueError as e:
                raise InstanceSyntaxError(path, lineno, "depot indices must be integers") from e
            if any(not 0 <= i < instance.m for i in depots):
                raise InstanceSyntaxError(
                    path, lineno, f"depot index out of range 0..{instance.m - 1}"
                )
            configs.append(DepotConfiguration.of(instance, depots))
    return configs
