"""Run configuration shared by the pipeline stages and the command line.

Config files are flat ``key = value`` text; ``#`` starts a comment. Values
are parsed as Python literals where possible, so ``times = [0, 1, 2]`` and
``seed = 7`` both work.
"""
from __future__ import annotations

import ast
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

DEFAULT_TIMES = (-1e6, -100.0, -5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 100.0, 1e6)


@dataclass(frozen=True)
class RunConfig:
    """Tolerances, degrees and sample counts for one run.

    Attributes
    ----------
    residual_tol : float
        Pointwise Legendrian residual bound for S^3 curves.
    coeff_tol : float
        Coefficient-level zero test for trigonometric identities.
    newton_tol : float
        Residual target of crossing refinement and inverse-map solves.
    initial_degree, degree_cap : int
        Fourier degree escalation range; the degree doubles on failure.
    oversample : int
        Samples per retained Fourier mode when projecting.
    loop_style : {"spiral", "circle"}
        Realisation of correction loops when assembling diagrams.
    parity : {"auto", "all", "even"}
        Monomial parity policy of the tangency system.
    samples : int
        Default sample count for verification and exports.
    """

    residual_tol: float = 1e-9
    coeff_tol: float = 1e-10
    newton_tol: float = 1e-12
    initial_degree: int = 64
    degree_cap: int = 1024
    oversample: int = 8
    loop_style: str = "spiral"
    r_cap: float = 0.25
    parity: str = "auto"
    rank_tol: float = 1e-8
    samples: int = 2048
    times: tuple = DEFAULT_TIMES
    escape_radius: float = 10.0
    out: str = "out"
    seed: int = 0
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)

    def __post_init__(self):
        for name in ("residual_tol", "coeff_tol", "newton_tol", "rank_tol", "r_cap", "escape_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("initial_degree", "degree_cap", "oversample", "samples", "threads"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.initial_degree > self.degree_cap:
            raise ValueError("initial_degree exceeds degree_cap")
        if self.loop_style not in ("spiral", "circle"):
            raise ValueError(f"unknown loop_style {self.loop_style!r}")
        if self.parity not in ("auto", "all", "even"):
            raise ValueError(f"unknown parity {self.parity!r}")
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_text(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            try:
                values[key] = ast.literal_eval(val)
            except (ValueError, SyntaxError):
                values[key] = val
        return cls(**values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text())
