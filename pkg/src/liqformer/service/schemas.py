"""Request/response models; site fields mirror the sites CSV columns."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SiteIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    site_id: str = "site"
    label: int = 0  # ignored for prediction; kept for schema parity
    spt_1: float
    spt_2: float
    spt_3: float
    spt_4: float
    spt_5: float
    spt_6: float
    spt_7: float
    spt_8: float
    spt_9: float
    spt_10: float
    soil_1: int
    soil_2: int
    soil_3: int
    soil_4: int
    soil_5: int
    soil_6: int
    soil_7: int
    soil_8: int
    soil_9: int
    soil_10: int
    vs30: float
    dist_epi: float
    wt_depth: float
    dist_water: float
    motion_id: str = ""


class MotionIn(BaseModel):
    """Either inline samples + dt, or a reference into the motion library."""

    model_config = ConfigDict(extra="forbid")

    samples: list[float] | None = None
    dt: float | None = None
    motion_id: str | None = None

    @model_validator(mode="after")
    def _one_form(self) -> "MotionIn":
        inline = self.samples is not None or self.dt is not None
        if inline and self.motion_id is not None:
            raise ValueError("give either inline samples+dt or motion_id, not both")
        if inline and (self.samples is None or self.dt is None):
            raise ValueError("inline motion needs both samples and dt")
        if not inline and self.motion_id is None:
            raise ValueError("motion needs samples+dt or motion_id")
        return self


class PredictRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    site: SiteIn
    motion: MotionIn
    options: dict[str, Any] = Field(default_factory=dict)


class PredictResponse(BaseModel):
    p_liq: float
    p_noliq: float
    model_version: str


class ExplainRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    site: SiteIn
    motion: MotionIn
    n_perms: int = 2000
    seed: int = 0


class GroupPhi(BaseModel):
    name: str
    phi: float
    std_err: float


class ExplainResponse(BaseModel):
    base_value: float
    fx: float
    n_samples: int
    groups: list[GroupPhi]


class SensitivityRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    site: SiteIn
    motion: MotionIn
    pga_factors: list[float] = Field(default_factory=lambda: [i / 10 for i in range(11)])
    spt_factors: list[float] = Field(default_factory=lambda: [1.0])


class SensitivityResponse(BaseModel):
    pga_factors: list[float]
    spt_factors: list[float]
    p: list[list[float]]


class HealthResponse(BaseModel):
    status: str
    model_version: str


class MotionCatalogResponse(BaseModel):
    motions: list[str]
