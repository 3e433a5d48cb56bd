from .csv_sample_repository import CsvSampleRepository
from .filesystem_report_repository import FilesystemReportRepository

__all__ = ["CsvSampleRepository", "FilesystemReportRepository"]
