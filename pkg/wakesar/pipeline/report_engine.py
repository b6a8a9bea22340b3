"""
ReportEngine

Responsibilities:
- Arrange score rows into the results table: one row per method (noisy
  baseline first), PSNR and S/MSE columns per number of looks
- Mark the best restoration per column with '*'
- Emit aligned text, CSV (one line per method and L) and JSON
"""
import csv
import io
import logging
from pathlib import Path

from wakesar.despeckling.metrics import PSNR_CAP_DB
from wakesar.rasters import canonical_json

logger = logging.getLogger(__name__)

METHOD_ORDER = ["Noisy", "L1", "TV", "Cauchy"]
_LABELS = {"cauchy": "Cauchy", "l1": "L1", "tv": "TV", "noisy": "Noisy"}
_METRICS = (("psnr_db", "PSNR"), ("smse_db", "S/MSE"))
CSV_FIELDS = ["method", "looks", "psnr_db", "smse_db", "capped", "best_psnr", "best_smse", "tuned_scale"]


def method_label(kind: str) -> str:
    return _LABELS.get(kind.lower(), kind)


def _order(method: str) -> tuple[int, str]:
    return (METHOD_ORDER.index(method) if method in METHOD_ORDER else len(METHOD_ORDER), method)


class ReportEngine:
    """Formats PSNR / S-MSE rows for people and for machines."""

    def __init__(self, rows: list[dict]):
        self.rows = sorted(rows, key=lambda r: (_order(r["method"]), r["looks"]))
        self.methods = sorted({r["method"] for r in self.rows}, key=_order)
        self.looks = sorted({r["looks"] for r in self.rows})
        self._best = self._rank()

    def _rank(self) -> set[tuple[str, int, str]]:
        """(method, L, metric) triples holding the best restored score."""
        best = set()
        for value in self.looks:
            for key, _ in _METRICS:
                candidates = [r for r in self.rows if r["looks"] == value and r["method"] != "Noisy"]
                if not candidates:
                    continue
                top = max(r[key] for r in candidates)
                best.update((r["method"], value, key) for r in candidates if r[key] == top)
        return best

    def is_best(self, method: str, looks: int, key: str) -> bool:
        return (method, looks, key) in self._best

    def _cell(self, method: str, looks: int, key: str) -> str:
        for row in self.rows:
            if row["method"] == method and row["looks"] == looks:
                value = row[key]
                text = "capped" if value == PSNR_CAP_DB else f"{value:.3f}"
                return text + ("*" if self.is_best(method, looks, key) else "")
        return "-"

    def to_text(self) -> str:
        header = ["Method"] + [f"{label} L={value}" for value in self.looks for _, label in _METRICS]
        body = [
            [method] + [self._cell(method, value, key) for value in self.looks for key, _ in _METRICS]
            for method in self.methods
        ]
        widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]

        def fmt(line: list[str]) -> str:
            first = line[0].ljust(widths[0])
            rest = [cell.rjust(width) for cell, width in zip(line[1:], widths[1:])]
            return "  ".join([first] + rest).rstrip()

        rule = "-" * len(fmt(header))
        return "\n".join([fmt(header), rule] + [fmt(line) for line in body]) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({
                **row,
                "best_psnr": self.is_best(row["method"], row["looks"], "psnr_db"),
                "best_smse": self.is_best(row["method"], row["looks"], "smse_db"),
                "tuned_scale": row.get("tuned_scale", ""),
            })
        return buffer.getvalue()

    def to_json(self) -> str:
        return canonical_json({
            "looks": self.looks,
            "methods": self.methods,
            "rows": [
                {
                    **row,
                    "best_psnr": self.is_best(row["method"], row["looks"], "psnr_db"),
                    "best_smse": self.is_best(row["method"], row["looks"], "smse_db"),
                }
                for row in self.rows
            ],
        })

    def write(self, directory: Path, formats: list[str] | None = None) -> dict[str, str]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        writers = {"text": ("results.txt", self.to_text), "csv": ("results.csv", self.to_csv),
                   "json": ("results.json", self.to_json)}
        paths = {}
        for name in formats or list(writers):
            filename, render = writers[name]
            path = directory / filename
            path.write_text(render(), encoding="utf-8")
            paths[name] = path.as_posix()
        logger.info("Results table written to %s", directory)
        return paths
