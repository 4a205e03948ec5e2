import math

import numpy as np
import pytest

from ledfit.generator import generate_dataset, write_dataset
from ledfit.model import eval_intensity
from ledfit.state import IntensitySamples, ModelParams, RunRecord

PHI = np.arange(0, 91, dtype=float)


@pytest.fixture
def truth() -> ModelParams:
    return ModelParams(a=(0.5, 0.3, 0.2), b=(10.0, 30.0, 50.0), c=(5.0, 20.0, 2.0))


@pytest.fixture
def exact_samples(truth) -> IntensitySamples:
    """Samples reproduced exactly by ``truth`` at i_max = 1000."""
    return IntensitySamples(PHI, eval_intensity(truth, PHI, 1000.0), 1000.0)


@pytest.fixture
def dataset_dir(tmp_path):
    directory = tmp_path / "dataset"
    write_dataset(generate_dataset(3, 7), directory)
    return directory


def random_interior_point(rng: np.random.Generator) -> np.ndarray:
    """Point where every term stays well inside the 90 degree clamp over 0..90."""
    a = rng.uniform(0.05, 1.0, 3)
    b = rng.uniform(5.0, 85.0, 3)
    c = rng.uniform(1.0, 20.0, 3)
    return np.concatenate([a, b, c])


def make_record(config: str, instance: str, rmsp: float, repeat: int = 0, **kwargs) -> RunRecord:
    fields = dict(
        config_name=config,
        instance_id=instance,
        best_rmsp=rmsp,
        best_params=ModelParams(a=(0.1, 0.2, 0.3), b=(1.0, 2.0, 3.0), c=(4.0, 5.0, 6.0)),
        evaluations=100,
        newton_iterations=3,
        wall_seconds=0.5,
        seed=42,
        repeat=repeat,
        best_rms=rmsp / 10.0,
        pre_newton_rmsp=math.nan,
    )
    fields.update(kwargs)
    return RunRecord(**fields)
