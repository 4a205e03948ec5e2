"""
Experiment Harness

Runs algorithm configurations over a dataset of instances and returns
one RunRecord per (configuration, instance, repeat) cell. Each cell
derives its own seed from (master seed, config index, instance index,
repeat), so results do not depend on the number of workers.
"""

import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from ledfit.errors import ConfigError, LedFitError
from ledfit.generator import MANIFEST_NAME, read_manifest
from ledfit.heuristics import run_config
from ledfit.photometry import load_samples
from ledfit.state import AlgorithmConfig, IntensitySamples, NewtonOptions, RunRecord

logger = logging.getLogger(__name__)

Instance = Tuple[str, IntensitySamples]

STANDARD_CONFIGS: Tuple[AlgorithmConfig, ...] = (
    AlgorithmConfig("S-Newton", "random-newton", 1_000_000, number=1),
    AlgorithmConfig("L-Newton", "random-newton", 4_000_000, number=2),
    AlgorithmConfig("IF10", "if", 10, 100_000, number=3),
    AlgorithmConfig("IF20", "if", 20, 50_000, number=4),
    AlgorithmConfig("IF50", "if", 50, 20_000, number=5),
    AlgorithmConfig("IF100", "if", 100, 10_000, number=6),
    AlgorithmConfig("IF40", "if", 40, 100_000, number=7),
    AlgorithmConfig("IF80", "if", 80, 50_000, number=8),
    AlgorithmConfig("IF200", "if", 200, 20_000, number=9),
    AlgorithmConfig("IF400", "if", 400, 10_000, number=10),
)

EXTENDED: Tuple[AlgorithmConfig, ...] = (
    AlgorithmConfig("XL-Newton", "random-newton", 16_000_000, number=11),
    AlgorithmConfig("XXL-Newton", "random-newton", 64_000_000, number=12),
)

# Plain random sampling at the L-Newton budget, without Newton.
RAN = AlgorithmConfig("RAN", "random", 4_000_000, newton=False, number=13)

SHORT_RUNS = ("S-Newton", "IF10", "IF20", "IF50", "IF100")
LONG_RUNS = ("L-Newton", "IF40", "IF80", "IF200", "IF400")

INSTANCE_SUFFIXES = (".ies", ".ldt", ".csv")


def config_set(name: str, scale: float = 1.0) -> List[AlgorithmConfig]:
    """
    Named group of configurations.

    Args:
        name: table1, short, long, extended or ran
        scale: Budget factor applied to every configuration

    Returns:
        List of AlgorithmConfig
    """
    by_name = {cfg.name: cfg for cfg in STANDARD_CONFIGS}
    groups = {
        "table1": list(STANDARD_CONFIGS),
        "short": [by_name[n] for n in SHORT_RUNS],
        "long": [by_name[n] for n in LONG_RUNS],
        "extended": list(STANDARD_CONFIGS) + list(EXTENDED),
        "ran": [RAN],
    }
    if name not in groups:
        raise ConfigError(f"unknown configuration set {name!r} (choose from {', '.join(groups)})")
    if scale <= 0:
        raise ConfigError("scale must be positive")
    configs = groups[name]
    if scale != 1.0:
        configs = [cfg.scaled(scale) for cfg in configs]
    return configs


def load_dataset(
    directory: Union[str, Path],
    plane_index: int = 0,
    average: bool = False,
) -> List[Instance]:
    """
    Load every instance of a dataset directory.

    Files listed in a manifest are loaded in manifest order; without a
    manifest all .ies, .ldt and .csv files are loaded sorted by name.

    Returns:
        List of (instance id, samples)
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise LedFitError(f"{directory}: dataset directory not found")

    manifest = directory / MANIFEST_NAME
    if manifest.is_file():
        files = [directory / name for name in read_manifest(manifest)["file"]]
    else:
        files = sorted(
            p for p in directory.iterdir() if p.suffix.lower() in INSTANCE_SUFFIXES
        )
    if not files:
        raise LedFitError(f"{directory}: no instances found")
    return [(path.stem, load_samples(path, plane_index, average)) for path in files]


def cell_seed(master_seed: int, config_index: int, instance_index: int, repeat: int) -> int:
    sequence = np.random.SeedSequence([master_seed, config_index, instance_index, repeat])
    return int(sequence.generate_state(1, np.uint64)[0])


def run_suite(
    configs: Sequence[AlgorithmConfig],
    dataset: Sequence[Instance],
    master_seed: int,
    repeats: int = 1,
    n_jobs: int = 1,
    newton_opts: NewtonOptions = NewtonOptions(),
) -> List[RunRecord]:
    """
    Run every configuration on every instance.

    Args:
        configs: Configurations to run
        dataset: (instance id, samples) pairs
        master_seed: Seed all cell seeds derive from
        repeats: Runs per (configuration, instance)
        n_jobs: joblib worker count
        newton_opts: Options for the Newton stage

    Returns:
        RunRecords ordered by configuration, instance, then repeat
    """
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    cells = [
        (cfg, instance_id, samples, cell_seed(master_seed, ci, ii, r), r)
        for ci, cfg in enumerate(configs)
        for ii, (instance_id, samples) in enumerate(dataset)
        for r in range(repeats)
    ]
    logger.info(
        "running %d cells (%d configs x %d instances x %d repeats) on %d workers",
        len(cells), len(configs), len(dataset), repeats, n_jobs,
    )
    return Parallel(n_jobs=n_jobs)(
        delayed(run_config)(cfg, samples, seed, instance_id, repeat, newton_opts)
        for cfg, instance_id, samples, seed, repeat in cells
    )
