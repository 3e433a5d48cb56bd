from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from pathlib import Path


class ReportRepository(ABC):
    @abstractmethod
    def write_table(self, name: str, header: Sequence[str],
                    rows: Sequence[Mapping[str, object]]) -> Path:
        """
        Write a table as CSV.

        Args:
            name (str): File name relative to the report root.
            header (Sequence[str]): Column names, in output order.
            rows (Sequence[Mapping[str, object]]): One mapping per row.

        Returns:
            Path: The written file.
        """
        pass

    @abstractmethod
    def write_document(self, name: str, document: Mapping[str, object]) -> Path:
        """
        Write a nested report as JSON.

        Args:
            name (str): File name relative to the report root.
            document (Mapping[str, object]): JSON-serializable content.

        Returns:
            Path: The written file.
        """
        pass

    @abstractmethod
    def write_text(self, name: str, text: str) -> Path:
        """
        Write a plain-text artifact.

        Args:
            name (str): File name relative to the report root.
            text (str): The content.

        Returns:
            Path: The written file.
        """
        pass

    @abstractmethod
    def read_table(self, path: Path) -> list[dict[str, str]]:
        """
        Read a CSV table written by ``write_table``.

        Args:
            path (Path): The CSV file.

        Returns:
            list[dict[str, str]]: Rows keyed by header names.
        """
        pass
