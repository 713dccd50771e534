"""Run configuration: JSON ingestion, defaults and validation."""

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .matkit import RANK_TOL
from .riccati import CARE_TOL
from .stabcheck import pbh_defects, q_sqrt


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SystemModel:
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    x0: np.ndarray

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.D.shape[1]

    @property
    def theta(self):
        """True parameters as an ``(n + m, n)`` matrix, ``theta' = [A, B]``."""
        return np.vstack([self.A.T, self.B.T])

    def check_assumption(self):
        """Raise :class:`ConfigError` unless (A, B) is stabilizable and (A, Q^1/2) detectable."""
        bad = pbh_defects(self.A, self.B)
        if bad:
            raise ConfigError(
                f"(A, B) is not stabilizable: PBH rank test fails at eigenvalue {_fmt(bad[0])}"
            )
        bad = pbh_defects(self.A.T, q_sqrt(self.Q))
        if bad:
            raise ConfigError(
                f"(A, Q^1/2) is not detectable: PBH rank test fails at eigenvalue {_fmt(bad[0])}"
            )


def _fmt(z):
    z = complex(z)
    if abs(z.imag) < 1e-12:
        return f"{z.real:g}"
    return f"{z.real:g}{z.imag:+g}j"


@dataclass(frozen=True)
class RunConfig:
    n: int
    m: int
    p: int
    A: list
    B: list
    D: list
    Q: list
    R: list
    x0: list = None
    T: float = 100.0
    h: float = 1e-3
    seed_w: int = 0
    seed_v: int = 1
    seed_eta: int = 2
    gamma_reg: float = 1.2
    excitation_exponent: float = 0.2
    theta0_A: list = None
    theta0_B: list = None
    rank_tol: float = RANK_TOL
    care_tol: float = CARE_TOL
    out_dir: str = "out"
    decimation: int = None
    blowup_cap: float = 1e8
    noise_probe: bool = False
    gram_checkpoints: list = field(default_factory=list)

    def __post_init__(self):
        if self.decimation is None:
            object.__setattr__(self, "decimation", max(1, math.ceil(1.0 / (100 * self.h) - 1e-9)))
        self.validate()

    # -- matrices -----------------------------------------------------------
    def _mat(self, values, rows, cols, name):
        arr = np.asarray(values, dtype=float)
        if arr.size != rows * cols:
            raise ConfigError(f"{name} needs {rows * cols} entries, got {arr.size}")
        return arr.reshape(rows, cols)

    def model(self):
        n, m, p = self.n, self.m, self.p
        x0 = np.zeros(n) if self.x0 is None else self._mat(self.x0, n, 1, "x0").ravel()
        return SystemModel(
            A=self._mat(self.A, n, n, "A"),
            B=self._mat(self.B, n, m, "B"),
            D=self._mat(self.D, n, p, "D"),
            Q=self._mat(self.Q, n, n, "Q"),
            R=self._mat(self.R, m, m, "R"),
            x0=x0,
        )

    def theta0(self):
        n, m = self.n, self.m
        A0 = -np.eye(n) if self.theta0_A is None else self._mat(self.theta0_A, n, n, "theta0_A")
        B0 = np.eye(n, m) if self.theta0_B is None else self._mat(self.theta0_B, n, m, "theta0_B")
        return np.vstack([A0.T, B0.T])

    @property
    def steps_per_unit(self):
        return int(round(1.0 / self.h))

    @property
    def total_steps(self):
        return int(round(self.T / self.h))

    # -- validation ---------------------------------------------------------
    def validate(self):
        for name in ("n", "m", "p"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not self.T >= 1:
            raise ConfigError("T must be >= 1")
        if not 0 < self.h <= 0.1:
            raise ConfigError("h must lie in (0, 0.1]")
        if abs(1.0 / self.h - round(1.0 / self.h)) > 1e-6:
            raise ConfigError("1/h must be an integer so unit intervals align with micro-steps")
        if not 1.0 < self.gamma_reg < math.sqrt(2.0):
            raise ConfigError("gamma_reg must lie in (1, sqrt 2)")
        if self.decimation < 1:
            raise ConfigError("decimation must be >= 1")
        model = self.model()
        self.theta0()
        R = model.R
        if np.abs(R - R.T).max() > 1e-10 or np.linalg.eigvalsh(0.5 * (R + R.T)).min() <= 0:
            raise ConfigError("R must be symmetric positive definite")
        Q = model.Q
        if np.abs(Q - Q.T).max() > 1e-10 or np.linalg.eigvalsh(0.5 * (Q + Q.T)).min() < -1e-10:
            raise ConfigError("Q must be symmetric positive semidefinite")

    # -- serialization ------------------------------------------------------
    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, np.ndarray):
                d[k] = v.tolist()
        return d

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


_FIELDS = {f.name for f in fields(RunConfig)}


def config_from_dict(d):
    unknown = set(d) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = {"n", "m", "p", "A", "B", "D", "Q", "R"} - set(d)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    try:
        return RunConfig(**d)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = config_from_dict(d)
    env_out = os.environ.get("ALQG_OUT")
    if env_out:
        cfg = replace(cfg, out_dir=env_out)
    return cfg
