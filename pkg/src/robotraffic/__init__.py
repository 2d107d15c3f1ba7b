"""Fit, generate and evaluate synthetic web-robot traffic."""

__version__ = "0.1.0"

from .distfit import (  # noqa: E402
    CategoricalParams,
    EmpiricalCdf,
    ExponentialParams,
    LognormalParams,
    ZetaParams,
    fit_lognormal,
    fit_poisson_rate,
    fit_zeta,
    ks_statistic,
    riemann_zeta,
)
from .generator import FittedModel, RobotTrafficModel, generate  # noqa: E402
from .ingest import RobotFilter, Sessionizer, UserAgentDatabase, sessionize, summarize  # noqa: E402
from .log_model import AgentId, Request, Session, Trace  # noqa: E402
from .resource_model import ResourceModel  # noqa: E402

__all__ = [
    "AgentId", "CategoricalParams", "EmpiricalCdf", "ExponentialParams", "FittedModel",
    "LognormalParams", "Request", "ResourceModel", "RobotFilter", "RobotTrafficModel",
    "Session", "Sessionizer", "Trace", "UserAgentDatabase", "ZetaParams", "fit_lognormal",
    "fit_poisson_rate", "fit_zeta", "generate", "ks_statistic", "riemann_zeta", "sessionize",
    "summarize",
]
