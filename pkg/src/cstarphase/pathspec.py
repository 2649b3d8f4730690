"""Parameter paths t -> (B(t), alpha(t)) and the line-oriented path language.

One statement per line, ``#`` starts a comment::

    loop   theta=<rad> [phi0=<rad>] B=<val> alpha=<val> T=<val> steps=<int>
    ramp alpha from=<val> to=<val> B=(<x>,<y>,<z>) T=<val> steps=<int>
    spiral theta=<rad> [phi0=<rad>] B=<val> alpha_from=<val> alpha_to=<val> turns=<int> T=<val> steps=<int>
    const  B=(<x>,<y>,<z>) alpha=<val> T=<val> steps=<int>

Angles are radians. Every generator samples a uniform time grid with
``steps + 1`` points. Errors are collected for the whole text and raised
together as a :class:`PathSpecError`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from cstarphase.model import ParamPoint

CLOSURE_TOL = 1e-12


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self):
        return f"line {self.line}, column {self.column}: {self.message}"


class PathSpecError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic], source: str = "<text>"):
        self.diagnostics = list(diagnostics)
        self.source = source
        lines = "\n".join(f"{source}:{d}" for d in self.diagnostics)
        super().__init__(f"{len(self.diagnostics)} error(s) in path specification\n{lines}")


# ---------------------------------------------------------------------------
# descriptors


def _num(x: float) -> str:
    return repr(float(x))


def _vec(v) -> str:
    return "(" + ",".join(_num(c) for c in v) + ")"


@dataclass(frozen=True)
class LoopSpec:
    """Circle at fixed polar angle about the B3 axis, one turn in time T."""

    theta: float
    B: float
    alpha: float
    T: float
    steps: int
    phi0: float = 0.0

    def serialize(self) -> str:
        return (
            f"loop theta={_num(self.theta)} phi0={_num(self.phi0)} B={_num(self.B)} "
            f"alpha={_num(self.alpha)} T={_num(self.T)} steps={self.steps}"
        )

    def sample(self) -> ParamPath:
        s = np.arange(self.steps + 1) / self.steps
        phi = self.phi0 + 2 * np.pi * s
        pts = _polar_points(self.theta, phi, self.B, np.full_like(s, self.alpha))
        return ParamPath(self.T * s, pts, descriptor=self)


@dataclass(frozen=True)
class RampSpec:
    """Linear ramp of alpha at a fixed field."""

    alpha_from: float
    alpha_to: float
    field: tuple[float, float, float]
    T: float
    steps: int

    def serialize(self) -> str:
        return (
            f"ramp alpha from={_num(self.alpha_from)} to={_num(self.alpha_to)} B={_vec(self.field)} "
            f"T={_num(self.T)} steps={self.steps}"
        )

    def sample(self) -> ParamPath:
        s = np.arange(self.steps + 1) / self.steps
        pts = np.empty((s.size, 4))
        pts[:, :3] = self.field
        pts[:, 3] = _lerp(self.alpha_from, self.alpha_to, s)
        return ParamPath(self.T * s, pts, descriptor=self)


@dataclass(frozen=True)
class SpiralSpec:
    """Fixed-theta circle wound ``turns`` times while alpha moves linearly."""

    theta: float
    B: float
    alpha_from: float
    alpha_to: float
    turns: int
    T: float
    steps: int
    phi0: float = 0.0

    def serialize(self) -> str:
        return (
            f"spiral theta={_num(self.theta)} phi0={_num(self.phi0)} B={_num(self.B)} "
            f"alpha_from={_num(self.alpha_from)} alpha_to={_num(self.alpha_to)} turns={self.turns} "
            f"T={_num(self.T)} steps={self.steps}"
        )

    def sample(self) -> ParamPath:
        s = np.arange(self.steps + 1) / self.steps
        phi = self.phi0 + 2 * np.pi * self.turns * s
        pts = _polar_points(self.theta, phi, self.B, _lerp(self.alpha_from, self.alpha_to, s))
        return ParamPath(self.T * s, pts, descriptor=self)


@dataclass(frozen=True)
class ConstSpec:
    field: tuple[float, float, float]
    alpha: float
    T: float
    steps: int

    def serialize(self) -> str:
        return f"const B={_vec(self.field)} alpha={_num(self.alpha)} T={_num(self.T)} steps={self.steps}"

    def sample(self) -> ParamPath:
        s = np.arange(self.steps + 1) / self.steps
        pts = np.empty((s.size, 4))
        pts[:, :3] = self.field
        pts[:, 3] = self.alpha
        return ParamPath(self.T * s, pts, descriptor=self)


Descriptor = Union[LoopSpec, RampSpec, SpiralSpec, ConstSpec]


def _lerp(a: float, b: float, s: np.ndarray) -> np.ndarray:
    # exact at both ends
    return a * (1.0 - s) + b * s


def _polar_points(theta: float, phi: np.ndarray, b: float, alpha: np.ndarray) -> np.ndarray:
    pts = np.empty((phi.size, 4))
    pts[:, 0] = b * math.sin(theta) * np.cos(phi)
    pts[:, 1] = b * math.sin(theta) * np.sin(phi)
    pts[:, 2] = b * math.cos(theta)
    pts[:, 3] = alpha
    return pts


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True, eq=False)
class ParamPath:
    """Samples ``(t_k, x_k)``, k = 0..N, with x = (B1, B2, B3, alpha)."""

    times: np.ndarray
    points: np.ndarray
    descriptor: Descriptor | None = None
    closed: bool = field(init=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        points = np.asarray(self.points, dtype=float)
        if times.ndim != 1 or points.shape != (times.size, 4):
            raise ValueError(f"need times (N+1,) and points (N+1, 4); got {times.shape} and {points.shape}")
        if times.size < 3:
            raise ValueError(f"a path needs at least 2 steps (3 samples), got {times.size} samples")
        if not np.all(np.diff(times) > 0):
            raise ValueError("path times must be strictly increasing")
        if not np.all(np.isfinite(points)):
            raise ValueError("path points must be finite")
        if not np.all(points[:, 3] > 0):
            raise ValueError("alpha must be > 0 at every path sample")
        times.setflags(write=False)
        points.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "closed", bool(np.max(np.abs(points[0] - points[-1])) <= CLOSURE_TOL))

    @classmethod
    def from_function(cls, fn, T: float, steps: int) -> ParamPath:
        """Sample ``fn(t) -> (B1, B2, B3, alpha)`` on a uniform grid over [0, T]."""
        times = T * np.arange(steps + 1) / steps
        return cls(times, np.array([fn(t) for t in times], dtype=float))

    @property
    def steps(self) -> int:
        return self.times.size - 1

    def __len__(self) -> int:
        return self.times.size

    def point(self, k: int) -> ParamPoint:
        return ParamPoint.from_array(self.points[k])

    def midpoint(self, k: int) -> ParamPoint:
        """Chord midpoint of segment k (between samples k and k+1)."""
        return ParamPoint.from_array(0.5 * (self.points[k] + self.points[k + 1]))

    def chord(self, k: int) -> np.ndarray:
        return self.points[k + 1] - self.points[k]


# ---------------------------------------------------------------------------
# parser

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")
_INTEGER = re.compile(r"[+-]?\d+\Z")
_KEYVAL = re.compile(r"(?P<key>[A-Za-z_][A-Za-z0-9_]*)=(?P<val>.*)\Z", re.S)

# key -> kind; "float+" strictly positive, "int2" integer >= 2, "int1" integer >= 1
_GRAMMAR: dict[str, dict[str, str]] = {
    "loop": {"theta": "float", "phi0": "float?", "B": "float+", "alpha": "alpha", "T": "float+", "steps": "int2"},
    "ramp": {"from": "alpha", "to": "alpha", "B": "vec", "T": "float+", "steps": "int2"},
    "spiral": {
        "theta": "float",
        "phi0": "float?",
        "B": "float+",
        "alpha_from": "alpha",
        "alpha_to": "alpha",
        "turns": "int1",
        "T": "float+",
        "steps": "int2",
    },
    "const": {"B": "vec", "alpha": "alpha", "T": "float+", "steps": "int2"},
}


def _tokens(text: str) -> list[tuple[int, str]]:
    """Whitespace tokens with 1-based start columns; parenthesised groups are kept whole."""
    out: list[tuple[int, str]] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        start = i
        depth = 0
        while i < n and (depth > 0 or not text[i].isspace()):
            if text[i] == "(":
                depth += 1
            elif text[i] == ")":
                depth = max(0, depth - 1)
            i += 1
        out.append((start + 1, text[start:i]))
    return out


def _convert(kind: str, key: str, raw: str, col: int, lineno: int, errs: list[Diagnostic]):
    def bad(msg):
        errs.append(Diagnostic(lineno, col, msg))
        return None

    if kind == "vec":
        inner = raw.strip()
        if not (inner.startswith("(") and inner.endswith(")")):
            return bad(f"{key} must be a vector (<x>,<y>,<z>), got {raw!r}")
        parts = [s.strip() for s in inner[1:-1].split(",")]
        if len(parts) != 3 or not all(_NUMBER.match(s) for s in parts):
            return bad(f"{key} must be a vector of three numbers, got {raw!r}")
        return tuple(float(s) for s in parts)
    if kind.startswith("int"):
        if not _INTEGER.match(raw):
            return bad(f"{key} must be an integer, got {raw!r}")
        v = int(raw)
        lo = int(kind[3:])
        if v < lo:
            return bad(f"{key} must be >= {lo}, got {v}")
        return v
    if not _NUMBER.match(raw):
        return bad(f"{key} must be a number, got {raw!r}")
    v = float(raw)
    if kind == "alpha" and not v > 0:
        return bad(f"alpha must be > 0 ({key}={raw})")
    if kind == "float+" and not v > 0:
        return bad(f"{key} must be > 0, got {raw}")
    return v


def _parse_line(text: str, lineno: int, errs: list[Diagnostic]) -> Descriptor | None:
    toks = _tokens(text)
    if not toks:
        return None
    col0, kind = toks[0]
    if kind not in _GRAMMAR:
        errs.append(Diagnostic(lineno, col0, f"unknown statement {kind!r}; expected one of {', '.join(_GRAMMAR)}"))
        return None
    rest = toks[1:]
    if kind == "ramp":
        if not rest or rest[0][1] != "alpha":
            col = rest[0][0] if rest else col0 + len(kind)
            errs.append(Diagnostic(lineno, col, "expected 'ramp alpha ...' (only alpha ramps are supported)"))
            return None
        rest = rest[1:]
    grammar = _GRAMMAR[kind]
    values: dict[str, object] = {}
    n_before = len(errs)
    for col, tok in rest:
        m = _KEYVAL.match(tok)
        if not m:
            errs.append(Diagnostic(lineno, col, f"expected key=value, got {tok!r}"))
            continue
        key, raw = m.group("key"), m.group("val")
        if key not in grammar:
            errs.append(Diagnostic(lineno, col, f"unknown key {key!r} for {kind}; allowed: {', '.join(grammar)}"))
            continue
        if key in values:
            errs.append(Diagnostic(lineno, col, f"duplicate key {key!r}"))
            continue
        v = _convert(grammar[key].rstrip("?"), key, raw, col + len(key) + 1, lineno, errs)
        values[key] = v
    end_col = len(text.rstrip()) + 1
    for key, kind_ in grammar.items():
        if key not in values and not kind_.endswith("?"):
            errs.append(Diagnostic(lineno, end_col, f"missing required key {key!r} for {kind}"))
    if len(errs) > n_before:
        return None
    if kind == "loop":
        return LoopSpec(values["theta"], values["B"], values["alpha"], values["T"], values["steps"], values.get("phi0", 0.0))
    if kind == "ramp":
        return RampSpec(values["from"], values["to"], values["B"], values["T"], values["steps"])
    if kind == "spiral":
        return SpiralSpec(
            values["theta"],
            values["B"],
            values["alpha_from"],
            values["alpha_to"],
            values["turns"],
            values["T"],
            values["steps"],
            values.get("phi0", 0.0),
        )
    return ConstSpec(values["B"], values["alpha"], values["T"], values["steps"])


def parse_specs(text: str, source: str = "<text>") -> list[Descriptor]:
    errs: list[Diagnostic] = []
    specs: list[Descriptor] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        code = line.split("#", 1)[0]
        spec = _parse_line(code, lineno, errs)
        if spec is not None:
            specs.append(spec)
    if errs:
        raise PathSpecError(errs, source)
    return specs


def parse(text: str, source: str = "<text>") -> list[ParamPath]:
    """Parse a path file and sample every statement."""
    return [spec.sample() for spec in parse_specs(text, source)]


def serialize(specs) -> str:
    if not isinstance(specs, (list, tuple)):
        specs = [specs]
    return "".join(s.serialize() + "\n" for s in specs)


def sample(spec: Descriptor) -> ParamPath:
    return spec.sample()
