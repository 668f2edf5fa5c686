from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict



class Settings(BaseSettings):
    STATE_CAP: int = 2 ** 20
    DENSE_STATE_CAP: int = 4096
    PATH_CAP: int = 64
    INDEPENDENT_P: str = "1/2"
    BETA_LADDER: list[float] = [4.0, 8.0, 16.0, 32.0, 64.0]
    SLOPE_TOL: float = 1e-3
    FIT_POINTS: int = 2
    DATA_DIR: Path = Path("data")
    LOG_LEVEL: str = "INFO"

    model_config = SettingsConfigDict(env_file=".env", env_prefix="STABILITY_", extra="ignore")

settings=Settings()
