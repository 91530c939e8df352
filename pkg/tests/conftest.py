import numpy as np
import pytest

from promptfield import PhysicsConfig


@pytest.fixture
def quick_physics() -> PhysicsConfig:
    """Small world that keeps per-test simulation time negligible."""
    return PhysicsConfig(n_agents=8, arena=120.0, steps=30)


@pytest.fixture
def tiny_field():
    """Gentle rightward-drift field usable with any arena."""
    from promptfield import VectorField

    v = np.zeros((5, 5, 2))
    v[:, :, 0] = 0.3
    return VectorField(v)
