from .path_executor import PathExecutor
from .report_repository import ReportRepository
from .sample_repository import SampleRepository

__all__ = ["PathExecutor", "ReportRepository", "SampleRepository"]
