from pathlib import Path
from typing import Callable, Dict, Tuple

import pytest

from scanb.data.records import DatasetManifest, EpisodeRecord
from scanb.data.splits import build_splits
from scanb.data.storage import save_dataset
from scanb.harness.config import RunConfig, load_config
from scanb.harness.dataset import build_dataset
from scanb.harness.selfcheck import probe_episode
from scanb.world.spec import EnvironmentSpec

_TINY_RUN = """
[run]
task = "{task}"
strategy = "{strategy}"
output = "{root}/run"
dataset = "{root}/data"

[seeds]
data = 7
init = 11
eval = 13

[data]
n_base = 2
n_novel = 1
episodes_per_env = 1
shots = 2
length_variance = "low"
frame_size = 16
crop_size = 8

[train]
steps = 2
checkpoint_every = 1
log_every = 1

[finetune]
steps = 1

[eval]
shots = 2
playouts = 1

[sweep]
shots = 2
detour_budget = 1
playouts = 1
"""

Records = Dict[str, Tuple[EpisodeRecord, ...]]


def tiny_run_text(root: Path, strategy: str = 'scan', task: str = 'PP') -> str:
    """Smallest complete run document, artifacts under ``root``."""
    return _TINY_RUN.format(
        root=root.as_posix(), strategy=strategy, task=task,
    )


@pytest.fixture()
def write_config(tmp_path: Path) -> Callable[..., Path]:
    """Writes a tiny run document and returns its path."""
    def factory(strategy: str = 'scan', task: str = 'PP') -> Path:
        path = tmp_path / '{0}-{1}.toml'.format(task.lower(), strategy)
        path.write_text(
            tiny_run_text(tmp_path, strategy, task), encoding='utf-8',
        )
        return path
    return factory


@pytest.fixture()
def run_document() -> Callable[..., str]:
    """Tiny run document factory for any artifact root."""
    return tiny_run_text


@pytest.fixture()
def tiny_config(write_config) -> RunConfig:
    """Tiny stage-conscious run writing into a fresh directory."""
    return load_config(write_config())


@pytest.fixture(scope='session')
def session_root(tmp_path_factory) -> Path:
    """Directory shared by every session fixture."""
    return tmp_path_factory.mktemp('session')


@pytest.fixture(scope='session')
def session_config(session_root: Path) -> RunConfig:
    """Tiny run whose dataset is generated once per session."""
    path = session_root / 'run.toml'
    path.write_text(tiny_run_text(session_root), encoding='utf-8')
    return load_config(path)


@pytest.fixture(scope='session')
def dataset(session_config: RunConfig) -> Tuple[DatasetManifest, Records]:
    """Manifest and records of the tiny run."""
    return build_dataset(session_config)


@pytest.fixture(scope='session')
def saved_dataset(session_config: RunConfig, dataset) -> Path:
    """The tiny dataset written to ``run.dataset``."""
    manifest, records = dataset
    root = Path(session_config.run.dataset)
    save_dataset(manifest, records, root)
    return root


@pytest.fixture(scope='session')
def pp_specs() -> Tuple[EnvironmentSpec, ...]:
    """Two base and one novel two-stage environment."""
    return build_splits(2, 1, 'PP', seed=3).specs


@pytest.fixture(scope='session')
def ppp_specs() -> Tuple[EnvironmentSpec, ...]:
    """Two base and one novel three-stage environment."""
    return build_splits(2, 1, 'PPP', seed=3).specs


@pytest.fixture()
def probe():
    """Random two-shot support and labeled query on ``8 x 8`` frames."""
    return probe_episode(seed=0)
