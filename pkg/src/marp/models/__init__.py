# Models package
from marp.models.enums import (
    CertificateKind,
    ConeMethod,
    Exactness,
    Provenance,
    RateMode,
    RunStatus,
    SweepParam,
    TiePolicy,
)
from marp.models.schemas import (
    CQConditionReport,
    CQQuery,
    CQReport,
    ExampleCase,
    ExampleSpec,
    Expectation,
    ExperimentConfig,
    ProbeQuery,
    RateCertificate,
    RunSummary,
    ScheduleSpec,
    SetSpec,
    SweepRow,
)

__all__ = [
    "TiePolicy",
    "RunStatus",
    "CertificateKind",
    "Exactness",
    "ConeMethod",
    "RateMode",
    "Provenance",
    "SweepParam",
    "SetSpec",
    "ScheduleSpec",
    "ExperimentConfig",
    "CQQuery",
    "ProbeQuery",
    "Expectation",
    "ExampleCase",
    "ExampleSpec",
    "RateCertificate",
    "CQReport",
    "CQConditionReport",
    "RunSummary",
    "SweepRow",
]
