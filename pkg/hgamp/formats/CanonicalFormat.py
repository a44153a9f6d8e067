from hgamp.exceptions import InstanceValidationError
from hgamp.format import FormatBase, build_instance
from hgamp.model import Convention, CustomerSpec, DepotSpec


class CanonicalFormat(FormatBase):
    """
    Native line-oriented grammar.

    ```
    CLRP 1
    NAME <name>                 # optional
    n m Q F <convention>
    x y w o                     # m depot lines, '-' for a missing coordinate
    x y d                       # n customer lines
    MATRIX                      # optional, (m+n) rows of m+n costs
    ```
    """

    fid = "canonical"
    description = "CLRP 1 canonical text grammar"
    priority = 10

    def detect(self, stream):
        token = stream.peek()
        return token is not None and token.upper() == "CLRP"

    def parse(self, stream, name):
        stream.keyword("CLRP")
        lineno = stream.line
        version = stream.integer("format version")
        if version != 1:
            raise stream.error(lineno, f"unsupported format version {version}")

        token = stream.peek()
        if token is not None and token.upper() == "NAME":
            stream.take("NAME")
            _, name = stream.take("instance name")

        n = stream.integer("customer count")
        m = stream.integer("depot count")
        if n <= 0:
            raise InstanceValidationError("n", "customer count must be positive")
        if m <= 0:
            raise InstanceValidationError("m", "depot count must be positive")
        q = stream.number("vehicle capacity Q")
        f = stream.number("vehicle fixed cost F")
        _, token = stream.take("distance convention")
        convention = Convention.parse(token)

        depots = []
        for i in range(m):
            x = stream.number(f"depot {i} x", allow_missing=True)
            y = stream.number(f"depot {i} y", allow_missing=True)
            w = stream.number(f"depot {i} capacity")
            o = stream.number(f"depot {i} opening cost")
            depots.append(DepotSpec(i, w, o, x, y))

        customers = []
        for j in range(n):
            x = stream.number(f"customer {j} x", allow_missing=True)
            y = stream.number(f"customer {j} y", allow_missing=True)
            d = stream.number(f"customer {j} demand")
            customers.append(CustomerSpec(j, d, x, y))

        matrix = None
        token = stream.peek()
        if token is not None and token.upper() == "MATRIX":
            stream.take("MATRIX")
            size = n + m
            matrix = [
                [stream.number(f"MATRIX row {r} column {col}") for col in range(size)]
                for r in range(size)
            ]

        stream.expect_end()
        return build_instance(name, depots, customers, q, f, convention, matrix)
