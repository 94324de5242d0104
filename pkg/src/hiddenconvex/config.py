"""Flat ``key = value`` experiment configuration with dotted sections.

Example::

    problem.name = cosine
    problem.delta = 1.5707963267948966
    problem.sigma = 0.5
    algorithm = psgdm
    schedule.theorem = psgdm_strongly_convex
    epsilon = 0.05
    seeds.base = 7
    seeds.count = 20

Unknown keys are rejected; problem parameters are validated against the
catalog entry's schema.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .problems import CATALOG

OUT_DIR_ENV = "HIDDENCONVEX_OUT_DIR"

_TOP_KEYS = {
    "problem.name": str,
    "algorithm": str,
    "schedule.theorem": str,
    "schedule.eta": float,
    "schedule.alpha": float,
    "schedule.beta": float,
    "schedule.rho": float,
    "schedule.T": int,
    "schedule.batch": int,
    "schedule.post_batch": int,
    "epsilon": float,
    "epsilon.grid": list,
    "seeds.base": int,
    "seeds.count": int,
    "seeds.list": list,
    "x0.policy": str,
    "checkpoints.count": int,
    "checkpoints.lyapunov": bool,
    "inner_tol": float,
    "output.dir": str,
    "run.skip_diagnostics": bool,
}

_ALGORITHMS = ("sm", "psgd", "psgdm")
_X0_POLICIES = ("fixed", "uniform")


def parse_flat(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _coerce(key: str, value: str, kind):
    try:
        if kind is bool:
            low = value.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(value)
        if kind is list:
            return [float(tok) for tok in value.split(",") if tok.strip()]
        if kind is int:
            return int(value)
        if kind is float:
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigurationError(f"key {key!r}: cannot parse {value!r} as {kind.__name__}") from exc


@dataclass
class ExperimentConfig:
    """Validated experiment description."""

    problem_name: str
    problem_params: dict = field(default_factory=dict)
    algorithm: str = "psgd"
    theorem: str = "manual"
    schedule_overrides: dict = field(default_factory=dict)
    epsilon: float | None = None
    epsilon_grid: list[float] | None = None
    seeds_base: int = 0
    seeds_count: int = 1
    seeds_list: list[int] | None = None
    x0_policy: str = "fixed"
    checkpoint_count: int = 100
    checkpoint_lyapunov: bool = True
    inner_tol: float = 1e-8
    out_dir: str = ""
    skip_diagnostics: bool = False

    def __post_init__(self):
        if self.problem_name not in CATALOG:
            raise ConfigurationError(
                f"unknown problem {self.problem_name!r}; known: {sorted(CATALOG)}")
        if self.algorithm not in _ALGORITHMS:
            raise ConfigurationError(
                f"unknown algorithm {self.algorithm!r}; known: {_ALGORITHMS}")
        if self.x0_policy not in _X0_POLICIES:
            raise ConfigurationError(
                f"unknown x0 policy {self.x0_policy!r}; known: {_X0_POLICIES}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive")
        if self.epsilon_grid is not None:
            if any(not e > 0 for e in self.epsilon_grid):
                raise ConfigurationError("epsilon grid entries must be positive")
        if not self.out_dir:
            self.out_dir = os.environ.get(OUT_DIR_ENV, "out")
        schema = CATALOG[self.problem_name].schema
        unknown = set(self.problem_params) - set(schema)
        if unknown:
            raise ConfigurationError(
                f"unknown problem parameter(s) {sorted(unknown)} for "
                f"{self.problem_name!r}; known: {sorted(schema)}")

    @property
    def seeds(self) -> list[tuple[int, int | None]]:
        """(seed, run_index) pairs; explicit lists use the seed directly."""
        if self.seeds_list is not None:
            return [(int(s), None) for s in self.seeds_list]
        return [(self.seeds_base, i) for i in range(self.seeds_count)]

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        raw = parse_flat(text)
        known_problem = None
        if "problem.name" in raw:
            known_problem = raw["problem.name"]
            if known_problem not in CATALOG:
                raise ConfigurationError(
                    f"unknown problem {known_problem!r}; known: {sorted(CATALOG)}")
        problem_params: dict = {}
        top: dict = {}
        for key, value in raw.items():
            if key.startswith("problem.") and key != "problem.name":
                if known_problem is None:
                    raise ConfigurationError("problem.name must be set before parameters")
                pname = key.split(".", 1)[1]
                schema = CATALOG[known_problem].schema
                if pname not in schema:
                    raise ConfigurationError(
                        f"unknown key {key!r}; known problem parameters: "
                        f"{sorted(schema)}")
                problem_params[pname] = _coerce(key, value, schema[pname])
            elif key in _TOP_KEYS:
                top[key] = _coerce(key, value, _TOP_KEYS[key])
            else:
                raise ConfigurationError(
                    f"unknown key {key!r}; known keys: {sorted(_TOP_KEYS)} "
                    f"plus problem.<parameter>")
        if "problem.name" not in top:
            raise ConfigurationError("missing required key 'problem.name'")
        overrides = {name.split(".", 1)[1]: top[name]
                     for name in ("schedule.eta", "schedule.alpha", "schedule.beta",
                                  "schedule.rho", "schedule.T", "schedule.batch",
                                  "schedule.post_batch")
                     if name in top}
        seeds_list = top.get("seeds.list")
        return cls(
            problem_name=top["problem.name"],
            problem_params=problem_params,
            algorithm=top.get("algorithm", "psgd"),
            theorem=top.get("schedule.theorem", "manual"),
            schedule_overrides=overrides,
            epsilon=top.get("epsilon"),
            epsilon_grid=top.get("epsilon.grid"),
            seeds_base=top.get("seeds.base", 0),
            seeds_count=top.get("seeds.count", 1),
            seeds_list=[int(s) for s in seeds_list] if seeds_list is not None else None,
            x0_policy=top.get("x0.policy", "fixed"),
            checkpoint_count=top.get("checkpoints.count", 100),
            checkpoint_lyapunov=top.get("checkpoints.lyapunov", True),
            inner_tol=top.get("inner_tol", 1e-8),
            out_dir=top.get("output.dir", ""),
            skip_diagnostics=top.get("run.skip_diagnostics", False),
        )

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())
