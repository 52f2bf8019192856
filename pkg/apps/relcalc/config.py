import os
from typing import Optional

from errors import InputError

VERSION = "0.1.0"
FORMAT_VERSION = "1"

DEFAULT_MAX_VARIABLES = 6
DEFAULT_JOBS = 1


def env_int(name: str, default: Optional[int]) -> Optional[int]:
    # an exported but empty variable counts as unset
    value = os.environ.get(name)
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError:
        raise InputError(f"{name} must be an integer, got {value!r}")


class Config:
    def __init__(
        self,
        max_variables: int = DEFAULT_MAX_VARIABLES,
        max_extensions: Optional[int] = None,
        jobs: int = DEFAULT_JOBS,
        system: str = "uniq",
        json: bool = False,
        verbosity: int = 0,
    ):
        self.max_variables = max_variables
        self.max_extensions = max_extensions
        self.jobs = jobs
        self.system = system
        self.json = json
        self.verbosity = verbosity

    @classmethod
    def from_env(cls) -> "Config":
        return cls(
            max_variables=env_int("RELCALC_MAX_VARIABLES", DEFAULT_MAX_VARIABLES),
            max_extensions=env_int("RELCALC_MAX_EXTENSIONS", None),
            jobs=env_int("RELCALC_JOBS", DEFAULT_JOBS),
        )

