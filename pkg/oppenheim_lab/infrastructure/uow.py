import logging
import shutil
import tempfile
from contextlib import AbstractContextManager
from pathlib import Path

from oppenheim_lab.infrastructure.repositories import (
    CsvSampleRepository,
    FilesystemReportRepository,
)

logger = logging.getLogger(__name__)


class ReportUnitOfWork(AbstractContextManager):
    """Stages every output under a scratch directory next to ``out_dir``.

    On a clean exit the staged files are moved into ``out_dir``; on an
    exception the scratch directory is removed and ``out_dir`` is left as it was.
    """

    def __init__(self, out_dir: Path | str):
        self.out_dir = Path(out_dir)
        self.staging: Path | None = None
        self.reports: FilesystemReportRepository | None = None
        self.samples: CsvSampleRepository | None = None

    def __enter__(self):
        self.out_dir.parent.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=f".{self.out_dir.name}-",
                                             dir=self.out_dir.parent))
        self.reports = FilesystemReportRepository(self.staging)
        self.samples = CsvSampleRepository(self.staging)
        return self

    def commit(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for staged in sorted(self.staging.iterdir()):
            target = self.out_dir / staged.name
            if target.is_dir():
                shutil.rmtree(target)
            shutil.move(str(staged), str(target))
        logger.info("reports written to %s", self.out_dir)

    def rollback(self) -> None:
        logger.warning("discarding staged outputs for %s", self.out_dir)

    def __exit__(self, exc_type, exc, tb):
        self.samples.close()
        try:
            if exc_type:
                self.rollback()
            else:
                self.commit()
        finally:
            shutil.rmtree(self.staging, ignore_errors=True)
