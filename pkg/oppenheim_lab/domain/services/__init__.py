from . import diagnostics_service, model_service, sampler_service, trimstats_service

__all__ = ["diagnostics_service", "model_service", "sampler_service", "trimstats_service"]
