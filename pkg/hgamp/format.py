"""Instance format definition and loader."""

import importlib.util
import inspect
import math
import os
import pathlib
import re
from abc import ABCMeta, abstractmethod

import toolz

from hgamp import utils
from hgamp.exceptions import HgampError, InstanceSyntaxError, InstanceValidationError
from hgamp.model import Convention, DistanceMatrix, Instance
from hgamp.utils import Singleton, sysexit_with_message

FORMATS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "formats")


class FormatMeta(type):
    def __call__(cls, *args):
        mcls = type.__call__(cls, *args)
        mcls.fid = cls.fid
        mcls.description = getattr(cls, "description", "__unknown__")
        mcls.priority = getattr(cls, "priority", 100)
        return mcls


class FormatExtendedMeta(FormatMeta, ABCMeta):
    pass


class FormatBase(metaclass=FormatExtendedMeta):
    @property
    @abstractmethod
    def fid(self):
        pass

    @abstractmethod
    def detect(self, stream):
        """Return True if the token stream looks like this family."""

    @abstractmethod
    def parse(self, stream, name):
        pass

    def __repr__(self):
        return f"Format: {self.fid} ({self.description})"


class TokenStream:
    """Whitespace tokens with their line numbers; `#` starts a comment."""

    NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

    def __init__(self, path, text):
        self.path = str(path)
        self.tokens = []
        self.last_line = 0
        for lineno, line in enumerate(text.splitlines(), 1):
            content = line.split("#", 1)[0]
            self.tokens.extend((lineno, tok) for tok in content.split())
            self.last_line = lineno
        self.pos = 0

    def peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][1]
        return None

    @property
    def line(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][0]
        return self.last_line

    def take(self, what):
        if self.pos >= len(self.tokens):
            raise InstanceSyntaxError(
                self.path, self.last_line, f"unexpected end of file, missing {what}"
            )
        lineno, tok = self.tokens[self.pos]
        self.pos += 1
        return lineno, tok

    def error(self, lineno, message):
        return InstanceSyntaxError(self.path, lineno, message)

    def number(self, what, allow_missing=False):
        lineno, tok = self.take(what)
        if allow_missing and tok == "-":
            return None
        if not self.NUMBER.match(tok):
            raise self.error(lineno, f"expected a number for {what}, got '{tok}'")
        if re.match(r"^[+-]?\d+$", tok):
            return int(tok)
        value = float(tok)
        if not math.isfinite(value):
            raise self.error(lineno, f"non-finite value for {what}")
        return value

    def integer(self, what):
        lineno = self.line
        value = self.number(what)
        if not isinstance(value, int):
            raise self.error(lineno, f"expected an integer for {what}, got {value}")
        return value

    def keyword(self, word):
        lineno, tok = self.take(word)
        if tok.upper() != word:
            raise self.error(lineno, f"expected '{word}', got '{tok}'")

    def expect_end(self):
        if self.pos < len(self.tokens):
            lineno, tok = self.tokens[self.pos]
            raise self.error(lineno, f"unexpected trailing token '{tok}'")


class FormatLoader:
    def __init__(self, source=None):
        self.formats = []

        for s in source or [FORMATS_DIR]:
            for p in sorted(pathlib.Path(s).glob("*.py")):
                filename = os.path.splitext(os.path.basename(p))[0]
                if not re.match(r"^[A-Za-z]+$", filename):
                    continue

                spec = importlib.util.spec_from_file_location(filename, p)
                module = importlib.util.module_from_spec(spec)

                try:
                    spec.loader.exec_module(module)
                except (ImportError, NameError) as e:
                    sysexit_with_message(f"Failed to load format file {filename}: \n {e!s}")

                try:
                    for _name, obj in inspect.getmembers(module):
                        if self._is_plugin(obj):
                            self.formats.append(obj())
                except TypeError as e:
                    sysexit_with_message(f"Failed to load format file: \n {e!s}")

        self.formats.sort(key=lambda f: (f.priority, f.fid))
        self.validate()

    def _is_plugin(self, obj):
        return inspect.isclass(obj) and issubclass(obj, FormatBase) and obj is not FormatBase

    def validate(self):
        unique = len(list(toolz.unique(self.formats, key=lambda x: x.fid)))
        if len(self.formats) != unique:
            sysexit_with_message("Detect duplicate format ID's. Please use unique ID's only.")

    def get(self, fid):
        for f in self.formats:
            if f.fid == fid:
                return f
        known = ", ".join(f.fid for f in self.formats)
        raise HgampError(f"unknown instance format '{fid}' (known: {known})")

    def detect(self, stream):
        for f in self.formats:
            stream.pos = 0
            if f.detect(stream):
                stream.pos = 0
                return f
        raise InstanceSyntaxError(stream.path, 1, "unable to detect the instance format")


class SingleFormats(FormatLoader, metaclass=Singleton):
    """Singleton format registry."""

    pass


def instance_name(path):
    """Derive an instance name from a file name, dropping family prefixes like `coord`."""
    stem = pathlib.Path(path).stem
    return re.sub(r"^coord", "", stem, flags=re.IGNORECASE)


def parse_instance(path, fmt="auto", convention=None):
    """
    Parse an instance file into a validated `Instance`.

    :param path: instance file path
    :param fmt: format id or `auto`
    :param convention: optional convention token overriding the file's own
    :raises InstanceSyntaxError: malformed input, with line number
    :raises InstanceValidationError: semantic violations, with field name
    """
    with utils.open_file(path) as stream:
        text = stream.read()

    tokens = TokenStream(path, text)
    loader = SingleFormats()
    handler = loader.detect(tokens) if fmt in (None, "", "auto") else loader.get(fmt)
    instance = handler.parse(tokens, instance_name(path))

    if convention:
        instance = with_convention(instance, Convention.parse(convention))
    return instance


def build_instance(name, depots, customers, q, f, convention, matrix=None):
    """Assemble an instance from parsed records.

    Distances are derived from coordinates when no matrix is given.
    """
    if matrix is None:
        points = [(r.x, r.y) for r in depots] + [(r.x, r.y) for r in customers]
        if any(x is None or y is None for x, y in points):
            raise InstanceValidationError(
                "coordinates", "missing coordinates require a MATRIX section"
            )
        distances = DistanceMatrix.from_points(points, convention)
    else:
        distances = DistanceMatrix(matrix)
    return Instance(name, depots, customers, q, f, distances, convention)


def with_convention(instance, convention):
    if convention == instance.convention:
        return instance
    return build_instance(
        instance.name,
        instance.depots,
        instance.customers,
        instance.vehicle_capacity,
        instance.vehicle_fixed_cost,
        convention,
    )


def _fmt(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return repr(float(value))
    return str(int(value))


def serialize_instance(instance):
    """Render an instance in the canonical grammar."""
    lines = ["CLRP 1", f"NAME {instance.name}"]
    lines.append(
        " ".join(
            [
                str(instance.n),
                str(instance.m),
                _fmt(instance.vehicle_capacity),
                _fmt(instance.vehicle_fixed_cost),
                str(instance.convention),
            ]
        )
    )
    for d in instance.depots:
        lines.append(" ".join(_fmt(v) for v in (d.x, d.y, d.capacity, d.opening_cost)))
    for c in instance.customers:
        lines.append(" ".join(_fmt(v) for v in (c.x, c.y, c.demand)))

    if _needs_matrix(instance):
        lines.append("MATRIX")
        for row in instance.distances.rows:
            lines.append(" ".join(_fmt(v) for v in row))

    return "\n".join(lines) + "\n"


def _needs_matrix(instance):
    coords = [(r.x, r.y) for r in instance.depots] + [(r.x, r.y) for r in instance.customers]
    if any(x is None or y is None for x, y in coords):
        return True
    derived = DistanceMatrix.from_points(coords, instance.convention)
    return derived != instance.distances


def write_instance(instance, path):
    with utils.open_file(path, "w") as stream:
        stream.write(serialize_instance(instance))
