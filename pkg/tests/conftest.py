"""Session-cached simulation runs shared by the acceptance criteria."""

import numpy as np
import pytest

from torwave.evolution import SimConfig, integrate
from torwave.operators import constant_damping_spec, make_preset


@pytest.fixture(scope="session")
def evolve_cache():
    """Memoized scenario runs keyed by (damping, n, t_final)."""
    cache = {}

    def get(damping: str, n: int, t_final: float):
        key = (damping, n, t_final)
        if key not in cache:
            if damping == "const1":
                spec = constant_damping_spec(0.5, n, n, level=1.0)
                _, forcing = make_preset(0.5, n, n, "chi0")
            else:
                spec, forcing = make_preset(0.5, n, n, damping)
            cfg = SimConfig(
                dt=0.05,
                t_final=t_final,
                snapshot_times=(t_final,),
                norm_orders=(0.0,),
                norm_stride=20,
            )
            cache[key] = (spec, forcing, integrate(spec, forcing, cfg))
        return cache[key]

    return get


def report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"
