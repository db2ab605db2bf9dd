"""Common error handling for all services"""

class ServiceError(Exception):
    """Base exception for all service errors"""
    pass

class ThermalIOError(ServiceError):
    """Base exception for acquisition loading and window encoding errors"""
    pass

class MmvError(ServiceError):
    """Base exception for MMV network errors"""
    pass

class CheckpointError(ServiceError):
    """Base exception for checkpoint read/write errors"""
    pass

class TrainingError(ServiceError):
    """Base exception for detector training errors"""
    pass

class RpcaError(ServiceError):
    """Base exception for R-PCA errors"""
    pass

class TrackerError(ServiceError):
    """Base exception for tracking errors"""
    pass

class ClassifierError(ServiceError):
    """Base exception for track classification errors"""
    pass

class PipelineError(ServiceError):
    """Base exception for pipeline and evaluation errors"""
    pass

class ConfigError(ServiceError):
    """Base exception for configuration errors"""
    pass
