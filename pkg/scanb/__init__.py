"""
Few-shot imitation with stage-conscious attention at desk scale.

The names below are the public surface. Each one is imported with ``as``
so it stays exported under strict ``mypy`` settings.
"""

from scanb.data.records import DatasetManifest as DatasetManifest
from scanb.data.records import Demonstration as Demonstration
from scanb.data.records import EpisodeRecord as EpisodeRecord
from scanb.harness.config import RunConfig as RunConfig
from scanb.harness.config import load_config as load_config
from scanb.harness.evaluation import SuccessReport as SuccessReport
from scanb.harness.evaluation import evaluate as evaluate
from scanb.harness.training import fine_tune as fine_tune
from scanb.harness.training import meta_train as meta_train
from scanb.model.policy import ScanModel as ScanModel
from scanb.world.spec import EnvironmentSpec as EnvironmentSpec
