from .experiment_service import ExperimentService
from .verification_service import AcceptanceSettings, VerificationService

__all__ = ["AcceptanceSettings", "ExperimentService", "VerificationService"]
