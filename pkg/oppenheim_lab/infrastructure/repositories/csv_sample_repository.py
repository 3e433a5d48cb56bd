import csv
from collections.abc import Iterator
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from oppenheim_lab.domain.entities import ChainPath
from oppenheim_lab.domain.repositories import SampleRepository
from oppenheim_lab.infrastructure.repositories.filesystem_report_repository import format_cell

SAMPLE_HEADER = ("path_id", "step", "value", "ratio", "digit", "next_digit")
IID_FILE = "iid_samples.csv"
CHAIN_FILE = "chain_samples.csv"


class CsvSampleRepository(SampleRepository):
    """Raw sample dumps, one CSV row per (path, step), streamed path by path.

    Chain rows carry B_step and B_{step+1} as exact integers next to X and R.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self._open: dict[str, tuple[TextIO, Any]] = {}

    def _writer(self, name: str):
        if name not in self._open:
            self.root.mkdir(parents=True, exist_ok=True)
            handle = (self.root / name).open("w", encoding="utf-8", newline="")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(SAMPLE_HEADER)
            self._open[name] = (handle, writer)
        return self._open[name][1]

    def add_iid(self, path_id: int, values: np.ndarray) -> None:
        self._writer(IID_FILE).writerows(
            (path_id, step, format_cell(float(value)), "", "", "")
            for step, value in enumerate(values, start=1)
        )

    def add_chain(self, path_id: int, chain: ChainPath) -> None:
        self._writer(CHAIN_FILE).writerows(self._chain_rows(path_id, chain))

    @staticmethod
    def _chain_rows(path_id: int, chain: ChainPath) -> Iterator[tuple]:
        for step, (value, ratio) in enumerate(zip(chain.xs, chain.ratios, strict=True), start=1):
            yield (path_id, step, format_cell(float(value)), format_cell(float(ratio)),
                   str(chain.digits[step - 1]), str(chain.digits[step]))

    def flush(self) -> list[Path]:
        written = [self.root / name for name in (IID_FILE, CHAIN_FILE) if name in self._open]
        self.close()
        return written

    def close(self) -> None:
        for handle, _ in self._open.values():
            handle.close()
        self._open.clear()
