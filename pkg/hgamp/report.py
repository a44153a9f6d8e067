"""Best-known-solution registry and run reports."""

import csv
import io
import os
from dataclasses import dataclass, field

import toolz

from hgamp import utils
from hgamp.exceptions import HgampError
from hgamp.model import group_compact_degree

BKS_FILE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", "bks.csv")
CSV_COLUMNS = ["instance", "seed", "best", "avg", "time_s", "ttb_s", "gap_pct", "compact_pct"]


class BksRegistry:
    """Instance name to best-known objective."""

    def __init__(self, path=BKS_FILE):
        self.path = path
        self.entries = {}
        self.sets = {}
        with utils.open_file(path) as stream:
            for row in csv.DictReader(stream):
                name = row["instance"].strip()
                if name in self.entries:
                    raise HgampError(f"duplicate BKS entry '{name}' in {path}")
                value = float(row["bks"])
                if value <= 0:
                    raise HgampError(f"BKS for '{name}' must be positive")
                self.entries[name] = int(value) if value.is_integer() else value
                self.sets[name] = row.get("set", "")

    def __contains__(self, name):
        return name in self.entries

    def __getitem__(self, name):
        return self.entries[name]

    def __len__(self):
        return len(self.entries)

    def get(self, name, default=None):
        return self.entries.get(name, default)


def gap(best, bks):
    return 100.0 * (best - bks) / bks


def format_gap(value):
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


def format_compact(value):
    return "n/a" if value is None else f"{value:.2f}%"


def format_cost(value):
    if float(value).is_integer():
        return str(int(value))
    return f"{value:.2f}"


@dataclass(frozen=True)
class RunRecord:
    instance: str
    seed: int
    best: float
    avg: float
    time_s: float
    ttb_s: float
    # opened depot capacity used by the best solution, in percent
    compact: float = None


@dataclass
class RunReport:
    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)
    unmatched: list = field(default_factory=list)

    @property
    def mean_gap(self):
        gaps = [a["gap"] for a in self.aggregates if a["gap"] is not None]
        if not gaps:
            return None
        return sum(gaps) / len(gaps)

    @property
    def group_compact(self):
        values = [a["compact"] for a in self.aggregates if a["compact"] is not None]
        return group_compact_degree(values) if values else None

    def to_csv(self):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record, value in self.rows:
            writer.writerow(
                [
                    record.instance,
                    record.seed,
                    format_cost(record.best),
                    f"{record.avg:.2f}",
                    f"{record.time_s:.2f}",
                    f"{record.ttb_s:.2f}",
                    "" if value is None else format_gap(value),
                    "" if record.compact is None else f"{record.compact:.2f}",
                ]
            )
        return buffer.getvalue()

    def write_csv(self, path):
        with utils.open_file(path, "w") as stream:
            stream.write(self.to_csv())

    def table(self):
        header = (
            f"{'instance':<24} {'best':>12} {'avg':>12} "
            f"{'time_s':>9} {'ttb_s':>9} {'gap_pct':>8} {'compact':>8}"
        )
        lines = [header, "-" * len(header)]
        for agg in self.aggregates:
            value = "n/a" if agg["gap"] is None else format_gap(agg["gap"])
            flag = "  improved" if agg["gap"] is not None and agg["gap"] < 0 else ""
            lines.append(
                f"{agg['instance']:<24} {format_cost(agg['best']):>12} {agg['avg']:>12.2f} "
                f"{agg['time_s']:>9.2f} {agg['ttb_s']:>9.2f} {value:>8} "
                f"{format_compact(agg['compact']):>8}{flag}"
            )
        mean = self.mean_gap
        compact = self.group_compact
        if mean is not None or compact is not None:
            blank = f"{'':>12} {'':>12} {'':>9} {'':>9}"
            value = "n/a" if mean is None else format_gap(mean)
            lines.append(f"{'average':<24} {blank} {value:>8} {format_compact(compact):>8}")
        if self.unmatched:
            lines.append("")
            lines.append("unmatched:")
            lines.extend(f"  {name}" for name in self.unmatched)
        return "\n".join(lines) + "\n"


def gap_report(runs, registry):
    """
    Build a report over run records.

    Instances missing from the registry are listed as unmatched and carry no gap.
    """
    ordered = sorted(runs, key=lambda r: (r.instance, r.seed))
    report = RunReport()
    for record in ordered:
        bks = registry.get(record.instance)
        report.rows.append((record, None if bks is None else gap(record.best, bks)))

    for name, group in toolz.groupby(lambda r: r.instance, ordered).items():
        bks = registry.get(name)
        best_run = min(group, key=lambda r: (r.best, r.seed))
        best = best_run.best
        report.aggregates.append(
            {
                "instance": name,
                "best": best,
                "avg": sum(r.best for r in group) / len(group),
                "time_s": sum(r.time_s for r in group) / len(group),
                "ttb_s": sum(r.ttb_s for r in group) / len(group),
                "gap": None if bks is None else gap(best, bks),
                "compact": best_run.compact,
            }
        )
        if bks is None:
            report.unmatched.append(name)

    report.aggregates.sort(key=lambda a: a["instance"])
    report.unmatched.sort()
    return report
