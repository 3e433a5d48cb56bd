import csv
import json
from collections.abc import Mapping, Sequence
from pathlib import Path

from oppenheim_lab.domain.repositories import ReportRepository


def format_cell(value: object) -> str:
    """Round-trip float text so identical runs give byte-identical files."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class FilesystemReportRepository(ReportRepository):
    def __init__(self, root: Path):
        self.root = Path(root)

    def _target(self, name: str) -> Path:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_table(self, name: str, header: Sequence[str],
                    rows: Sequence[Mapping[str, object]]) -> Path:
        path = self._target(name)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_cell(row.get(column)) for column in header])
        return path

    def write_document(self, name: str, document: Mapping[str, object]) -> Path:
        path = self._target(name)
        path.write_text(json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                        encoding="utf-8", newline="\n")
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self._target(name)
        path.write_text(text, encoding="utf-8", newline="\n")
        return path

    def read_table(self, path: Path) -> list[dict[str, str]]:
        with Path(path).open(encoding="utf-8", newline="") as handle:
            return list(csv.DictReader(handle))
