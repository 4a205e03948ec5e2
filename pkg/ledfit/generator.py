"""
Artificial Instance Generator

Each instance draws its true coefficients from finite grids
(a in steps of 0.001 on [0, 1], b in steps of 0.01 on [0, 90], c in
steps of 0.1 on [0, 10]) and samples the model at 0..90 degrees, so a
zero-error fit exists by construction. Written files hold 0 candela for
91..180 degrees.
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ledfit.model import eval_intensity
from ledfit.photometry import write_ies
from ledfit.records import comment_header, with_header
from ledfit.state import PARAM_NAMES, ArtificialInstance, IntensitySamples, ModelParams

logger = logging.getLogger(__name__)

DEFAULT_I_MAX = 1000.0
POLAR_ANGLES = np.arange(0, 91, dtype=float)
MANIFEST_NAME = "manifest.csv"
MANIFEST_COLUMNS = ["index", "seed", *PARAM_NAMES, "i_max", "file"]


def instance_seed(master_seed: int, index: int) -> int:
    """Seed of instance ``index``, derived from the master seed."""
    sequence = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(sequence.generate_state(1, np.uint64)[0])


def generate_instance(
    rng: np.random.Generator,
    i_max: float = DEFAULT_I_MAX,
    seed: int = 0,
    index: int = 0,
) -> ArtificialInstance:
    """
    Draw one artificial instance.

    Args:
        rng: Random generator
        i_max: Intensity scale of the samples in candela
        seed: Seed recorded with the instance
        index: Position in its dataset

    Returns:
        ArtificialInstance with exact (unrounded) samples
    """
    a = rng.integers(0, 1001, size=3) / 1000.0
    b = rng.integers(0, 9001, size=3) / 100.0
    c = rng.integers(0, 101, size=3) / 10.0
    truth = ModelParams(a=tuple(a), b=tuple(b), c=tuple(c))
    candela = eval_intensity(truth, POLAR_ANGLES, i_max)
    return ArtificialInstance(
        truth=truth,
        samples=IntensitySamples(POLAR_ANGLES, candela, i_max),
        i_max=float(i_max),
        seed=seed,
        index=index,
    )


def generate_dataset(
    n: int,
    master_seed: int,
    i_max: float = DEFAULT_I_MAX,
) -> List[ArtificialInstance]:
    """``n`` independent instances, instance i seeded from (master_seed, i)."""
    instances = []
    for index in range(n):
        seed = instance_seed(master_seed, index)
        instances.append(generate_instance(np.random.default_rng(seed), i_max, seed, index))
    return instances


def instance_from_row(row: pd.Series) -> ArtificialInstance:
    """Regenerate the instance described by one manifest row."""
    seed = int(row["seed"])
    return generate_instance(
        np.random.default_rng(seed), float(row["i_max"]), seed, int(row["index"])
    )


def write_dataset(
    instances: Sequence[ArtificialInstance],
    out_dir: Union[str, Path],
    decimals: Optional[int] = None,
    master_seed: Optional[int] = None,
    timestamp: bool = False,
) -> Path:
    """
    Write one .ies file per instance plus the manifest.

    The manifest starts with "# " comment lines recording the ledfit
    version, the master seed and the generation settings.

    Args:
        instances: Generated instances
        out_dir: Target directory (created if needed)
        decimals: Candela decimals in the files, or None for full precision
        master_seed: Seed the dataset was generated from, for the header
        timestamp: Add a generation time to the header

    Returns:
        Path of the manifest CSV
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for instance in instances:
        name = f"{instance.instance_id}.ies"
        text = write_ies(
            instance.samples,
            decimals,
            metadata=[f"[TEST] {instance.instance_id}", f"[_SEED] {instance.seed}"],
        )
        (out_dir / name).write_text(text, encoding="utf-8")
        rows.append(
            {
                "index": instance.index,
                "seed": instance.seed,
                **instance.truth.as_dict(),
                "i_max": instance.i_max,
                "file": name,
            }
        )
        logger.debug("wrote %s", name)

    header = comment_header(
        master_seed,
        {"count": len(instances), "decimals": "full" if decimals is None else decimals},
        timestamp,
    )
    manifest = out_dir / MANIFEST_NAME
    manifest.write_text(
        with_header(header, pd.DataFrame(rows, columns=MANIFEST_COLUMNS)), encoding="utf-8"
    )
    return manifest


def read_manifest(path: Union[str, Path]) -> pd.DataFrame:
    """Read a dataset manifest; seeds keep their full 64-bit value."""
    return pd.read_csv(
        path,
        comment="#",
        float_precision="round_trip",
        dtype={"seed": "uint64", "file": str},
    )
