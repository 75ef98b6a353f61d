"""Experiment configuration files.

Flat `key = value` lines, `#` comments, and one `[name]` section per estimator:

    n = 30
    replications = 1000
    p = 20
    theta = 2, 1, 0.5
    collection = complete
    dmax = 5

    [K=1.1]
    kind = selector
    penalty = complete
    K = 1.1

    [lasso]
    kind = lasso

Every key keeps the line it was read from so that validation errors point back into the file.
"""
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)
from typing_extensions import Annotated

from ..base.collection import BaseCollection, CompleteCollection, OrderedCollection, load_explicit_collection
from ..base.exceptions import ConfigError
from ..base.types import GroundTruth
from ..contrib.lasso.lasso import LassoConfig
from ..simulation.design import (
    BaseCovariance,
    ExpCirculantCovariance,
    ExplicitCovariance,
    IdentityCovariance,
    PolyCirculantCovariance,
    SeedSpec,
    Sigma2Covariance,
)
from ..simulation.experiment import (
    AdaptiveLassoEstimator,
    EstimatorSpec,
    ExperimentConfig,
    LassoEstimator,
    SelectorEstimator,
)


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    line: int
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}


class ParsedConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source: str
    top: Section
    sections: List[Section] = []


def parse_config_text(text: str, source: str = "<config>") -> ParsedConfig:
    top = Section(name="", line=0)
    sections: List[Section] = []
    current = top
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"{source}:{number}: empty section name.", line=number)
            if any(section.name == name for section in sections):
                raise ConfigError(f"{source}:{number}: duplicate section [{name}].", key=name, line=number)
            current = Section(name=name, line=number)
            sections.append(current)
            continue

        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got {raw.strip()!r}.", line=number)
        if key in current.values:
            raise ConfigError(f"{source}:{number}: duplicate key {key!r}.", key=key, line=number)
        current.values[key] = value.strip()
        current.lines[key] = number
    return ParsedConfig(source=source, top=top, sections=sections)


def _translate(error: ValidationError, section: Section, source: str) -> ConfigError:
    """First pydantic error as a ConfigError naming the key and its line."""
    first = error.errors()[0]
    key = str(first["loc"][0]) if first["loc"] else None
    line = section.lines.get(key, section.line) if key else section.line
    where = f"[{section.name}] " if section.name else ""
    if first["type"] == "extra_forbidden":
        message = f"{source}:{line}: {where}unknown key {key!r}."
    elif key is None:
        message = f"{source}:{line}: {where}{first['msg']}."
    else:
        message = f"{source}:{line}: {where}{key}: {first['msg']}."
    return ConfigError(message, key=key, line=line)


def split_str(value):
    if isinstance(value, str):
        return tuple(item.strip() for item in value.split(",") if item.strip())
    return value


Floats = Annotated[Tuple[float, ...], BeforeValidator(split_str)]


class EstimatorSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["selector", "lasso", "adaptive_lasso"]
    penalty: Optional[Literal["minimal", "heuristic", "complexity", "complete", "prior"]] = None
    K: Optional[float] = Field(None, gt=0)
    lambda_grid: Optional[Floats] = None
    n_points: int = Field(20, ge=1)
    gamma_grid: Floats = (0.5, 1.0, 2.0)
    max_iter: int = Field(10_000, ge=1)
    tol: float = Field(1e-7, gt=0)

    @model_validator(mode="after")
    def penalty_for_selectors(self):
        if self.kind == "selector":
            if self.penalty is None:
                raise ValueError("selector estimators need a penalty")
            if self.penalty != "heuristic" and self.K is None:
                raise ValueError(f"penalty {self.penalty} needs K")
        return self

    def to_spec(self, name: str) -> EstimatorSpec:
        if self.kind == "selector":
            penalty = {"kind": self.penalty} if self.penalty == "heuristic" else {"kind": self.penalty, "K": self.K}
            return SelectorEstimator(name=name, penalty=penalty)
        config = LassoConfig(
            lambda_grid=self.lambda_grid,
            n_points=self.n_points,
            gamma_grid=self.gamma_grid,
            max_iter=self.max_iter,
            tol=self.tol,
        )
        if self.kind == "lasso":
            return LassoEstimator(name=name, config=config)
        return AdaptiveLassoEstimator(name=name, config=config)


class RunConfig(BaseModel):
    """Top-level keys of an experiment file plus output settings."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=2)
    replications: int = Field(ge=1)
    p: int = Field(ge=1)
    theta: Floats
    noise_var: float = Field(1.0, ge=0)
    covariance: Literal["identity", "sigma2", "exp_circulant", "poly_circulant", "explicit"] = "identity"
    omega: Optional[float] = Field(None, gt=0)
    t: Optional[float] = Field(None, gt=0)
    covariance_path: Optional[Path] = None
    collection: Literal["ordered", "complete", "explicit"] = "complete"
    dmax: Optional[int] = Field(None, ge=0)
    collection_path: Optional[Path] = None
    oracle_collection: Literal["ordered", "complete"] = "complete"
    oracle_dmax: Optional[int] = Field(None, ge=0)
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    output: Optional[Path] = None
    format: Literal["csv", "json"] = "csv"
    threads: Optional[int] = Field(None, ge=1)

    @field_validator("theta")
    def theta_fits_p(cls, value, info: ValidationInfo):
        p = info.data.get("p")
        if p is not None and len(value) > p:
            raise ValueError(f"theta has {len(value)} entries but p={p}")
        return value

    @field_validator("covariance_path", "collection_path")
    def file_exists(cls, value):
        if value is not None and not value.is_file():
            raise ValueError(f"file {value} does not exist")
        return value

    @model_validator(mode="after")
    def required_companions(self):
        needs = {
            "exp_circulant": ("omega", self.omega),
            "poly_circulant": ("t", self.t),
            "explicit": ("covariance_path", self.covariance_path),
        }
        if self.covariance in needs and needs[self.covariance][1] is None:
            raise ValueError(f"covariance {self.covariance} needs {needs[self.covariance][0]}")
        if self.collection == "explicit" and self.collection_path is None:
            raise ValueError("collection explicit needs collection_path")
        # The oracle collection cannot borrow dmax from an explicit list.
        if self.collection == "explicit" and self.oracle_dmax is None:
            raise ValueError("collection explicit needs oracle_dmax")
        if self.collection != "explicit" and self.dmax is None:
            raise ValueError(f"collection {self.collection} needs dmax")
        return self

    def covariance_builder(self) -> BaseCovariance:
        if self.covariance == "identity":
            return IdentityCovariance(p=self.p)
        if self.covariance == "sigma2":
            return Sigma2Covariance(p=self.p)
        if self.covariance == "exp_circulant":
            return ExpCirculantCovariance(p=self.p, omega=self.omega)
        if self.covariance == "poly_circulant":
            return PolyCirculantCovariance(p=self.p, t=self.t)
        return ExplicitCovariance(p=self.p, path=self.covariance_path)

    def truth(self) -> GroundTruth:
        theta = np.zeros(self.p)
        theta[: len(self.theta)] = self.theta
        return GroundTruth(theta=theta, sigma=self.covariance_builder().build(), noise_var=self.noise_var)

    def selection_collection(self) -> BaseCollection:
        if self.collection == "explicit":
            return load_explicit_collection(self.collection_path, self.p)
        return _collection(self.collection, self.p, self.dmax)

    def reference_collection(self) -> BaseCollection:
        dmax = self.oracle_dmax if self.oracle_dmax is not None else self.dmax
        return _collection(self.oracle_collection, self.p, dmax)


def _collection(kind: str, p: int, dmax: int) -> BaseCollection:
    if kind == "ordered":
        return OrderedCollection(p=p, dmax=dmax)
    return CompleteCollection(p=p, dmax=dmax)


class LoadedConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    run: RunConfig
    estimators: List[EstimatorSpec]

    def experiment(self, seed: Optional[int] = None) -> ExperimentConfig:
        """Assemble the experiment; `seed` overrides the file's seed."""
        master_seed = seed if seed is not None else self.run.seed
        if master_seed is None:
            seed_spec = SeedSpec.from_entropy()
        else:
            seed_spec = SeedSpec(master_seed=master_seed)
        try:
            return ExperimentConfig(
                truth=self.run.truth(),
                n=self.run.n,
                replications=self.run.replications,
                estimators=self.estimators,
                collection=self.run.selection_collection(),
                oracle_collection=self.run.reference_collection(),
                seed=seed_spec,
            )
        except ValidationError as e:
            first = e.errors()[0]
            raise ConfigError(f"invalid experiment: {first['msg']}.") from e
        except ValueError as e:
            raise ConfigError(f"invalid experiment: {e}") from e


PATH_KEYS = ("covariance_path", "collection_path", "output")


def load_config_text(text: str, source: str = "<config>", base_dir: Optional[Path] = None) -> LoadedConfig:
    """Parse and validate a configuration. Relative paths are resolved against `base_dir` when given."""
    parsed = parse_config_text(text, source)
    values = dict(parsed.top.values)
    if base_dir is not None:
        for key in PATH_KEYS:
            if key in values and not Path(values[key]).is_absolute():
                values[key] = str(base_dir / values[key])
    try:
        run = RunConfig(**values)
    except ValidationError as e:
        raise _translate(e, parsed.top, source) from e

    if not parsed.sections:
        raise ConfigError(f"{source}: no estimator section.")
    estimators = []
    for section in parsed.sections:
        try:
            estimators.append(EstimatorSection(**section.values).to_spec(section.name))
        except ValidationError as e:
            raise _translate(e, section, source) from e
    return LoadedConfig(run=run, estimators=estimators)


def load_config(path: Union[str, Path]) -> LoadedConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}.") from e
    return load_config_text(text, str(path), base_dir=path.parent)


def bundled_config(name: str) -> Path:
    """Path of a configuration shipped in randes/configs, e.g. `experiment1_n30`."""
    path = Path(__file__).resolve().parent.parent / "configs" / f"{name}.cfg"
    if not path.is_file():
        raise ConfigError(f"no bundled configuration named {name!r}.")
    return path
