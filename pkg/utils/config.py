"""Environment-driven configuration and logging setup"""
import logging
import os
from dataclasses import dataclass
from typing import Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, model_validator

load_dotenv()

DEFAULT_STATE_CAP = 200_000
DEFAULT_ENUM_CAP = 1_000_000

COMMANDS = (
    "validate",
    "coefficients",
    "check",
    "certificate",
    "build-abstract",
    "solve-nstage",
    "solve-uniform",
    "pipeline",
    "simulate-coupling",
    "fixtures",
)
EPSILON_COMMANDS = ("certificate", "pipeline", "simulate-coupling")


def _positive_int_from_env(name, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be a positive integer, got {raw!r}")
    if value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {raw!r}")
    return value


def default_threads():
    """Worker count from DSG_THREADS, else the available parallelism"""
    return _positive_int_from_env("DSG_THREADS", os.cpu_count() or 1)


@dataclass(frozen=True)
class Caps:
    """Upper limits on exhaustive work"""

    state_cap: int = DEFAULT_STATE_CAP
    enum_cap: int = DEFAULT_ENUM_CAP

    def __post_init__(self):
        if self.state_cap <= 0 or self.enum_cap <= 0:
            raise ValueError("caps must be positive")

    @classmethod
    def from_env(cls):
        """Build caps from DSG_STATE_CAP / DSG_ENUM_CAP with defaults"""
        return cls(
            state_cap=_positive_int_from_env("DSG_STATE_CAP", DEFAULT_STATE_CAP),
            enum_cap=_positive_int_from_env("DSG_ENUM_CAP", DEFAULT_ENUM_CAP),
        )


class RunConfig(BaseModel):
    """Everything one CLI invocation needs"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Literal[COMMANDS]
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    epsilon: Optional[float] = None
    eta_override: Optional[int] = Field(default=None, ge=1)
    eta: Optional[int] = Field(default=None, ge=1)
    horizon: Optional[int] = Field(default=None, ge=1)
    discount: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    kind: Optional[Literal["ergodic", "primitive"]] = None
    fixture: Optional[str] = None
    m_eps: Optional[int] = Field(default=None, ge=1)
    delta_eps: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    episodes: int = Field(default=1000, ge=1)
    blocks: int = Field(default=2, ge=1)
    trace_path: Optional[str] = None
    diagnostics_path: Optional[str] = None
    strict: bool = False
    include_document: bool = False
    tol: Optional[float] = Field(default=None, gt=0.0)
    state_cap: int = Field(default=DEFAULT_STATE_CAP, gt=0)
    enum_cap: int = Field(default=DEFAULT_ENUM_CAP, gt=0)
    seed: int = 0
    threads: int = Field(default=1, ge=1)
    verbosity: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_epsilon(self):
        if self.command in EPSILON_COMMANDS:
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise ValueError(f"{self.command} requires 0 < epsilon < 1")
        elif self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        return self

    @property
    def caps(self):
        return Caps(state_cap=self.state_cap, enum_cap=self.enum_cap)


def configure_logging(verbosity=0):
    """Route library logging to stderr at a level picked by verbosity"""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)
