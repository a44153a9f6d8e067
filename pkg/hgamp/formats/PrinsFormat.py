from hgamp.exceptions import InstanceValidationError
from hgamp.format import FormatBase, build_instance
from hgamp.model import Convention, CustomerSpec, DepotSpec


class PrinsFormat(FormatBase):
    """
    Whitespace-separated `.dat` layout of the classical benchmark sets.

    Sections in order: customer count, depot count, depot coordinates,
    customer coordinates, vehicle capacity, depot capacities, customer
    demands, depot opening costs, vehicle fixed cost, cost-type flag
    (1 rounds travel costs up after scaling by 100, 0 keeps real costs;
    a missing flag means real costs).
    """

    fid = "prins"
    description = "classical benchmark .dat layout"
    priority = 50

    def detect(self, stream):
        token = stream.peek()
        return token is not None and token.isdigit()

    def parse(self, stream, name):
        n = stream.integer("customer count")
        m = stream.integer("depot count")
        if n <= 0:
            raise InstanceValidationError("n", "customer count must be positive")
        if m <= 0:
            raise InstanceValidationError("m", "depot count must be positive")

        depot_xy = [
            (stream.number(f"depot {i} x"), stream.number(f"depot {i} y")) for i in range(m)
        ]
        customer_xy = [
            (stream.number(f"customer {j} x"), stream.number(f"customer {j} y")) for j in range(n)
        ]
        q = stream.number("vehicle capacity")
        capacities = [stream.number(f"depot {i} capacity") for i in range(m)]
        demands = [stream.number(f"customer {j} demand") for j in range(n)]
        opening = [stream.number(f"depot {i} opening cost") for i in range(m)]
        f = stream.number("vehicle fixed cost")

        convention = Convention()
        if stream.peek() is not None:
            lineno = stream.line
            flag = stream.integer("cost type flag")
            if flag == 1:
                convention = Convention.parse("scaled-integer:100")
            elif flag != 0:
                raise stream.error(lineno, f"cost type flag must be 0 or 1, got {flag}")
        stream.expect_end()

        depots = [
            DepotSpec(i, capacities[i], opening[i], *depot_xy[i]) for i in range(m)
        ]
        customers = [CustomerSpec(j, demands[j], *customer_xy[j]) for j in range(n)]
        return build_instance(name, depots, customers, q, f, convention)
