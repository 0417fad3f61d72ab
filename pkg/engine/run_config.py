from pathlib import Path
from typing import Any, Literal, Optional

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from data.presets import DEFAULT_TOLERANCES
from engine.errors import ConfigError
from engine.map_registry import get_map
from engine.matrix_core import vector_from_json


class Tolerances(BaseModel):

    model_config = ConfigDict(extra="forbid")

    lax: float = DEFAULT_TOLERANCES["lax"]
    casimir: float = DEFAULT_TOLERANCES["casimir"]
    yb: float = DEFAULT_TOLERANCES["yb"]
    poisson: float = DEFAULT_TOLERANCES["poisson"]
    involution: float = DEFAULT_TOLERANCES["involution"]
    integrals: float = DEFAULT_TOLERANCES["integrals"]
    independence: float = DEFAULT_TOLERANCES["independence"]
    oracle: float = DEFAULT_TOLERANCES["oracle"]
    strong_lax: float = DEFAULT_TOLERANCES["strong_lax"]
    drift: float = DEFAULT_TOLERANCES["drift"]
    surface: float = DEFAULT_TOLERANCES["surface"]

    @model_validator(mode="after")
    def _positive(self):

        for name, value in self.model_dump().items():
            if not value > 0:
                raise ValueError(f"tolerance {name} must be positive")

        return self


class SiteConfig(BaseModel):

    coords: Any
    params: Any


class GridConfig(BaseModel):

    model_config = ConfigDict(extra="forbid")

    curve: Optional[str] = None
    alphas: Optional[list[float]] = None
    samples: Optional[int] = Field(default=None, ge=0)


class RunConfig(BaseModel):
    """One run of the yb CLI. Vectors use the {"re": [...], "im": [...]} form or plain lists."""

    model_config = ConfigDict(extra="forbid")

    command: Literal["verify", "evaluate", "lattice", "surface-scan"] = "verify"
    map: Optional[str] = None

    alpha: Any = None
    beta: Any = None
    x: Any = None
    y: Any = None

    seed: int = 0
    samples: int = Field(default=1000, ge=1)
    workers: Optional[int] = Field(default=None, ge=1)
    tolerances: Tolerances = Field(default_factory=Tolerances)

    steps: int = Field(default=100, ge=0)
    x_sites: Optional[list[SiteConfig]] = None
    y_sites: Optional[list[SiteConfig]] = None

    grid: GridConfig = Field(default_factory=GridConfig)

    out: Optional[str] = None
    report_out: Optional[str] = None

    @field_validator("map")
    @classmethod
    def _known_map(cls, value):

        if value is not None:
            try:
                get_map(value)
            except ConfigError as e:
                raise ValueError(e.message) from None

        return value

    @model_validator(mode="after")
    def _command_fields(self):

        if self.command in ("verify", "evaluate", "lattice") and self.map is None:
            raise ValueError(f"command {self.command!r} needs a map id")

        if self.command == "evaluate":
            for name in ("x", "alpha", "y", "beta"):
                if getattr(self, name) is None:
                    raise ValueError(f"evaluate needs {name}")

        if self.command == "lattice":

            if not self.x_sites or not self.y_sites:
                raise ValueError("lattice needs x_sites and y_sites")

            if len(self.x_sites) != len(self.y_sites):
                raise ValueError("x_sites and y_sites must have the same length")

        return self

    def vector(self, name):
        return vector_from_json(getattr(self, name))


def _errors(e):
    return [{"loc": list(err["loc"]), "msg": err["msg"]} for err in e.errors()]


def build_config(document, overrides=None):

    document = dict(document or {})

    for key, value in (overrides or {}).items():
        if value is not None:
            document[key] = value

    try:
        return RunConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigError("invalid run configuration", {"errors": _errors(e)}) from None


def load_config(path=None, overrides=None):

    document = {}

    if path is not None:

        path = Path(path)

        if not path.is_file():
            raise ConfigError(f"config file {str(path)!r} not found")

        try:
            document = orjson.loads(path.read_bytes())
        except orjson.JSONDecodeError as e:
            raise ConfigError(f"config file {str(path)!r} is not valid JSON", {"error": str(e)}) from None

        if not isinstance(document, dict):
            raise ConfigError("config document must be a JSON object")

    return build_config(document, overrides)
