from __future__ import annotations

from typing import Optional

import numpy as np

from mdcsim.schemas.edgesim import ServiceSpec


def draw_gap(spec: ServiceSpec, rng: np.random.Generator, size: Optional[int] = None):
    """Gap between an op's completion and the next request, U[gap_min, gap_max]."""
    return rng.uniform(spec.gap_min, spec.gap_max, size=size)


def first_request_time(spec: ServiceSpec, opened_t: float, rng: Optional[np.random.Generator]) -> float:
    """Periodic services ask as soon as the session opens; gap services wait one gap."""
    if spec.schedule == "periodic":
        return opened_t
    return opened_t + float(draw_gap(spec, rng))


def next_request_time(spec: ServiceSpec, started_t: float, finished_t: float,
                      rng: Optional[np.random.Generator]) -> float:
    if spec.schedule == "periodic":
        return started_t + spec.period
    return finished_t + float(draw_gap(spec, rng))
