"""Pydantic request models and the JSON forms of the domain objects."""

from __future__ import annotations

import hashlib
import json
from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from .intervals import ArithmeticTail, GeometricAnnuliTail, IntervalUnion
from .potentials import potential_from_dict
from .sets import (
    ConicalArcs,
    FullSpace,
    HalfLineCone,
    ObservationSet,
    Spherical,
    TwoCones,
)


# -- interval unions ---------------------------------------------------------------


def interval_union_to_dict(I: IntervalUnion) -> dict:
    tail: Optional[dict] = None
    if isinstance(I.tail, ArithmeticTail):
        tail = {
            "kind": "arithmetic",
            "start": I.tail.start,
            "gap": I.tail.gap,
            "width": I.tail.width,
            "growth": I.tail.growth,
        }
    elif isinstance(I.tail, GeometricAnnuliTail):
        tail = {"kind": "geometric", "ratio": I.tail.ratio, "fill": I.tail.fill}
    elif I.tail is not None:
        raise ValueError(f"tail {type(I.tail).__name__} has no JSON form")
    return {
        "intervals": [[a, b] for a, b in I.intervals],
        "tail": tail,
        "ray_start": I.ray_start,
    }


def interval_union_from_dict(data: dict) -> IntervalUnion:
    tail = None
    td = data.get("tail")
    if td is not None:
        if td["kind"] == "arithmetic":
            tail = ArithmeticTail(
                float(td["start"]), float(td["gap"]), float(td["width"]),
                float(td.get("growth", 0.0)),
            )
        elif td["kind"] == "geometric":
            tail = GeometricAnnuliTail(float(td["ratio"]), float(td["fill"]))
        else:
            raise ValueError(f"unknown tail kind {td['kind']!r}")
    return IntervalUnion(
        intervals=tuple((float(a), float(b)) for a, b in data.get("intervals", [])),
        tail=tail,
        ray_start=None if data.get("ray_start") is None else float(data["ray_start"]),
    )


# -- observation sets --------------------------------------------------------------


def set_to_dict(s: ObservationSet) -> dict:
    if isinstance(s, FullSpace):
        return {"kind": "full", "d": s.dimension}
    if isinstance(s, Spherical):
        return {"kind": "spherical", "radii": interval_union_to_dict(s.radii), "d": s.dimension}
    if isinstance(s, ConicalArcs):
        return {"kind": "arcs", "arcs": [[a, b] for a, b in s.arcs]}
    if isinstance(s, TwoCones):
        return {"kind": "two_cones", "epsilon": s.epsilon, "basis_angle": s.basis_angle}
    if isinstance(s, HalfLineCone):
        return {"kind": "half_line", "positive": s.positive, "negative": s.negative}
    raise ValueError(f"set {type(s).__name__} has no JSON form")


def set_from_dict(data: dict) -> ObservationSet:
    kind = data.get("kind")
    if kind == "full":
        return FullSpace(int(data.get("d", 2)))
    if kind == "spherical":
        return Spherical(interval_union_from_dict(data["radii"]), int(data.get("d", 2)))
    if kind == "arcs":
        return ConicalArcs(tuple((float(a), float(b)) for a, b in data["arcs"]))
    if kind == "two_cones":
        return TwoCones(float(data["epsilon"]), float(data.get("basis_angle", 0.0)))
    if kind == "half_line":
        pos = data.get("positive")
        neg = data.get("negative")
        return HalfLineCone(
            None if pos is None else float(pos), None if neg is None else float(neg)
        )
    raise ValueError(f"unknown set kind {kind!r}")


# -- request models ----------------------------------------------------------------


class FlowRequest(BaseModel):
    potential: Optional[dict] = None
    lissajous: Optional[str] = None  # "p:q"
    rho0: Optional[list[float]] = None  # x coordinates then xi coordinates
    T: Optional[float] = None
    dt: Optional[float] = None
    samples: int = Field(default=2048, ge=2, le=5_000_000)

    @model_validator(mode="after")
    def _check(self) -> "FlowRequest":
        if (self.potential is None) == (self.lissajous is None):
            raise ValueError("exactly one of potential / lissajous is required")
        if self.potential is not None:
            if self.rho0 is None or self.T is None:
                raise ValueError("potential runs need rho0 and T")
            if len(self.rho0) % 2 != 0:
                raise ValueError("rho0 must list x then xi, equal lengths")
            potential_from_dict(self.potential)
        else:
            p, _, q = self.lissajous.partition(":")
            if int(p) <= 0 or int(q) <= 0:
                raise ValueError("lissajous ratio must be positive integers p:q")
        return self


class KfrakRequest(BaseModel):
    potential: dict
    set: dict
    T: float = Field(gt=0)
    shells: Optional[list[float]] = None
    seed: int = 0
    per_shell_budget: int = Field(default=64, ge=1, le=4096)
    samples: int = Field(default=2048, ge=64)

    @model_validator(mode="after")
    def _check(self) -> "KfrakRequest":
        potential_from_dict(self.potential)
        set_from_dict(self.set)
        return self


class ClassifyRequest(BaseModel):
    nu1: float = Field(gt=0)
    nu2: float = Field(gt=0)
    radii: dict
    delta1: float = 1.0
    r_max: float = 1e6

    @model_validator(mode="after")
    def _check(self) -> "ClassifyRequest":
        interval_union_from_dict(self.radii)
        return self


class GramianRequest(BaseModel):
    nu: float = Field(gt=0)
    N: int = Field(ge=2, le=4096)
    d: Literal[1, 2] = 1
    set: dict
    T: float = Field(gt=0)
    band: Optional[list[float]] = None
    check_quadrature: bool = True

    @model_validator(mode="after")
    def _check(self) -> "GramianRequest":
        set_from_dict(self.set)
        if self.band is not None and (len(self.band) != 2 or self.band[0] >= self.band[1]):
            raise ValueError("band must be [E_min, E_max] with E_min < E_max")
        return self


class KappaRequest(BaseModel):
    radii: dict
    r_max: float = 1e6
    grid: int = Field(default=256, ge=16)
    threshold: float = Field(default=1e-3, gt=0)

    @model_validator(mode="after")
    def _check(self) -> "KappaRequest":
        interval_union_from_dict(self.radii)
        return self


class LambdaRequest(BaseModel):
    mu: Optional[float] = None
    ratio: Optional[str] = None  # "p:q"

    @model_validator(mode="after")
    def _check(self) -> "LambdaRequest":
        if (self.mu is None) == (self.ratio is None):
            raise ValueError("exactly one of mu / ratio is required")
        if self.ratio is not None:
            p, _, q = self.ratio.partition(":")
            if int(p) <= 0 or int(q) <= 0:
                raise ValueError("ratio must be positive integers p:q")
        if self.mu is not None and self.mu <= 0:
            raise ValueError("mu must be positive")
        return self


class ConvergentsRequest(BaseModel):
    mu: float = Field(gt=0)
    count: int = Field(default=32, ge=1, le=256)


class AvoidRequest(BaseModel):
    nu1: float = Field(gt=0)
    nu2: float = Field(gt=0)
    epsilon: float = Field(gt=0)
    samples: int = Field(default=4096, ge=16)

    @model_validator(mode="after")
    def _check(self) -> "AvoidRequest":
        if self.nu2 <= self.nu1:
            raise ValueError("need nu2 > nu1")
        import math

        if self.epsilon >= math.pi / 4:
            raise ValueError("epsilon must be < pi/4")
        return self


class CoherentRequest(BaseModel):
    nu: float = Field(gt=0)
    N: int = Field(default=64, ge=2, le=4096)
    d: Literal[1, 2] = 1
    rho0: list[float]
    t: float = 0.0

    @model_validator(mode="after")
    def _check(self) -> "CoherentRequest":
        if len(self.rho0) != 2 * self.d:
            raise ValueError("rho0 must list x then xi, d entries each")
        return self


# -- canonical hashing ----------------------------------------------------------------


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(model: BaseModel) -> str:
    payload = canonical_json(model.model_dump(mode="json"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]
