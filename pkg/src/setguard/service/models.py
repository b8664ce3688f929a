"""Request/response schemas for the service and the scenario-config format."""

from __future__ import annotations

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from ..sets import HPolytope, Zonotope
from ..sim import AttackSpec, PlantConfig, ReferenceSchedule, Scenario, TrackingLaw
from ..sysid import TrajectoryBank


class NoiseModel(BaseModel):
    center: list[float]
    generators: list[list[float]]


class TrajectoryModel(BaseModel):
    u: list[list[float]]
    x: list[list[float]]

    @model_validator(mode="after")
    def _shift_lengths(self):
        if any(len(row) != len(self.u[0]) for row in self.u):
            raise ValueError("ragged input rows")
        if any(len(row) != len(self.x[0]) for row in self.x):
            raise ValueError("ragged state rows")
        if len(self.x[0]) != len(self.u[0]) + 1:
            raise ValueError("states must carry one more sample than inputs")
        return self


class BankModel(BaseModel):
    trajectories: list[TrajectoryModel] = Field(min_length=1)
    noise: NoiseModel

    def to_core(self) -> TrajectoryBank:
        return TrajectoryBank(
            trajectories=tuple((t.u, t.x) for t in self.trajectories),
            noise_center=np.array(self.noise.center),
            noise_generators=tuple(np.array(g) for g in self.noise.generators),
        )

    @classmethod
    def from_core(cls, bank: TrajectoryBank) -> "BankModel":
        return cls.model_validate(bank.to_json())


class BoxModel(BaseModel):
    lo: list[float]
    hi: list[float]

    @model_validator(mode="after")
    def _ordered(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("lo/hi length mismatch")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError("lo must not exceed hi")
        return self

    def to_poly(self) -> HPolytope:
        return HPolytope.box(np.array(self.lo), np.array(self.hi))


class ZonotopeModel(BaseModel):
    center: list[float]
    generators: list[list[float]]

    def to_core(self) -> Zonotope:
        return Zonotope(np.array(self.center), np.array(self.generators))


class PlantModel(BaseModel):
    A: list[list[float]]
    B: list[list[float]]
    W: ZonotopeModel
    X: BoxModel
    U: BoxModel
    x0: list[float]


class ControllerModel(BaseModel):
    Kt: list[list[float]]
    X_eta: BoxModel
    ff_gain: Optional[list[list[float]]] = None


class CellSeedModel(BaseModel):
    x_e: list[float]
    u_e: Optional[list[float]] = None


class WeightsModel(BaseModel):
    alpha: float = Field(ge=0.0, default=1.0)
    beta: float = Field(ge=0.0, default=0.0)


class DetectorModel(BaseModel):
    tau: int = Field(ge=0)
    clear_streak: int = Field(ge=1, default=3)


class AttackModel(BaseModel):
    channel: Literal["measurement", "actuation"]
    window: tuple[int, int]
    offset: list[float]
    slope: list[float]
    k_ref: int

    @model_validator(mode="after")
    def _window_order(self):
        if self.window[0] > self.window[1]:
            raise ValueError("attack window start after end")
        return self

    def to_core(self) -> AttackSpec:
        return AttackSpec(channel=self.channel, window=self.window,
                          offset=np.array(self.offset),
                          slope=np.array(self.slope), k_ref=self.k_ref)


class WaypointModel(BaseModel):
    k: int = Field(ge=0)
    r: list[float]


class ScenarioModel(BaseModel):
    """On-disk scenario configuration; see README for the field meanings."""

    plant: PlantModel
    controller: ControllerModel
    cells: list[CellSeedModel] = Field(min_length=1)
    weights: WeightsModel = WeightsModel()
    detector: DetectorModel
    attacks: list[AttackModel] = []
    reference: list[WaypointModel] = Field(min_length=1)
    horizon: int = Field(gt=0)
    seed: int = 0
    j_samples: int = Field(gt=0, default=2000)

    @field_validator("plant")
    @classmethod
    def _square_plant(cls, v):
        n = len(v.A)
        if any(len(row) != n for row in v.A):
            raise ValueError("A must be square")
        if len(v.B) != n:
            raise ValueError("B row count must match A")
        return v

    def to_core(self) -> Scenario:
        A = np.array(self.plant.A)
        B = np.array(self.plant.B)
        plant = PlantConfig(A=A, B=B, W=self.plant.W.to_core(),
                            X=self.plant.X.to_poly(), U=self.plant.U.to_poly(),
                            x0=np.array(self.plant.x0))
        ff = (np.array(self.controller.ff_gain)
              if self.controller.ff_gain is not None
              else np.linalg.solve(B, np.eye(len(A)) - A))
        law = TrackingLaw(K_t=np.array(self.controller.Kt), ff_gain=ff,
                          u_lo=np.array(self.plant.U.lo),
                          u_hi=np.array(self.plant.U.hi))
        return Scenario(
            plant=plant,
            tracking=law,
            X_eta=self.controller.X_eta.to_poly(),
            reference=ReferenceSchedule(
                waypoints=tuple((w.k, w.r) for w in self.reference)),
            attacks=tuple(a.to_core() for a in self.attacks),
            horizon=self.horizon,
            tau=self.detector.tau,
            clear_streak=self.detector.clear_streak,
            alpha=self.weights.alpha,
            beta=self.weights.beta,
            j_samples=self.j_samples,
        )

    def seed_points(self):
        return [np.array(c.x_e) for c in self.cells]


class SynthOptions(BaseModel):
    build_aux: bool = True
    coverage_target: float = Field(gt=0.0, le=1.0, default=0.99)
    coverage_samples: int = Field(gt=0, default=3000)
    j_max: int = Field(gt=0, default=50)
    seed: int = 0


class IdentifyRequest(BaseModel):
    bank: BankModel


class IdentifyResponse(BaseModel):
    model: dict
    order: int
    samples: int


class SynthRequest(BaseModel):
    bank: BankModel
    scenario: ScenarioModel
    options: SynthOptions = SynthOptions()


class SynthResponse(BaseModel):
    bundle: dict
    coverage: list[float]
    stalled: list[bool]


class SimulateRequest(BaseModel):
    bundle: dict
    scenario: ScenarioModel
    seed: Optional[int] = None
    mode: Literal["proposed", "ec_only", "no_attack"] = "proposed"
    include_tubes: bool = False


class SimulateResponse(BaseModel):
    trace_csv: str
    e_r: float
    seed: int
    mode: str
    tubes: Optional[list] = None


class ReportRequest(BaseModel):
    traces: dict[str, list[str]]  # label -> list of trace CSV payloads


class ReportResponse(BaseModel):
    table: dict


class HealthResponse(BaseModel):
    status: str
    version: str
