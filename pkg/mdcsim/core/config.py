import os

from pydantic_settings import BaseSettings
from pydantic_settings import SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="MDCSIM_", env_file_encoding="utf-8", extra="ignore")
    PROJECT_NAME: str = "MdcDeploymentSim"
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"
    LOG_TO_FILE: bool = True


class DevSettings(Settings):
    model_config = SettingsConfigDict(env_prefix="MDCSIM_", env_file=".env.dev", env_file_encoding="utf-8",
                                      extra="ignore")
    LOG_LEVEL: str = "DEBUG"


class ProdSettings(Settings):
    LOG_LEVEL: str = "WARNING"


class TestSettings(Settings):
    LOG_TO_FILE: bool = False


env = os.getenv("MDCSIM_ENV", "development")
if env == "production":
    settings = ProdSettings()
elif env == "test":
    settings = TestSettings()
else:
    settings = DevSettings()
