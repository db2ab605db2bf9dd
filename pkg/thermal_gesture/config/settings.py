from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with validation.

    Defaults are the reference hyper-parameters and training schedule; any
    of them can be overridden from the environment or `.env`.
    """

    # Sensor / window configuration
    N_C: int = 5
    FRAME_HEIGHT: int = 24
    FRAME_WIDTH: int = 32
    FPS: int = 8

    # Spike encoding
    THETA_S: float = 0.2

    # Tracking and classification
    TRACK_LENGTH: int = 10
    BETA: float = 0.5
    THETA_C1: float = 5.0
    THETA_C2: float = 5.0
    THETA_BLOB: float = 0.1
    N_GAP: int = 3

    # R-PCA
    RPCA_LAMBDA: float = 0.05
    RPCA_MAX_ITER: int = 100
    RPCA_MU_GROWTH: float = 1.5  # per-window continuation in the streaming pipeline

    # Detector training
    NEURONS: int = 125
    LEARNING_RATE: float = 5e-3
    BATCH_SIZE: int = 32
    EPOCHS: int = 50
    BINARIZE_START_EPOCH: int = 10
    BINARIZE_END_EPOCH: int = 25
    SPLIT_FRACTION: float = 0.7
    TAU_B: float = 0.3
    SEED: int = 0

    # Cost model
    GESTURES_PER_MINUTE: float = 1.0

    # Path Configuration
    BASE_DIR: Path = Path(__file__).parent.parent.parent
    DATA_DIR: Path = BASE_DIR / "data"
    LOG_DIR: Path = BASE_DIR / "logs"

    # Development Configuration
    DEBUG: bool = False

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True
    )

    @property
    def time_steps(self) -> int:
        """MMV run length for one window: (N_c - 1) * frame height"""
        return (self.N_C - 1) * self.FRAME_HEIGHT

    def validate_paths(self) -> None:
        """Ensure all required paths exist"""
        for path in [self.DATA_DIR, self.LOG_DIR]:
            path.mkdir(parents=True, exist_ok=True)


settings = Settings()
