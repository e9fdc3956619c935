"""Environment splits, demonstrations and datasets."""

from scanb.data.generate import generate_episode as generate_episode
from scanb.data.generate import make_suboptimal as make_suboptimal
from scanb.data.records import DatasetManifest as DatasetManifest
from scanb.data.records import Demonstration as Demonstration
from scanb.data.records import DemoFrames as DemoFrames
from scanb.data.records import EpisodeRecord as EpisodeRecord
from scanb.data.splits import build_splits as build_splits
from scanb.data.storage import load_dataset as load_dataset
from scanb.data.storage import save_dataset as save_dataset
from scanb.data.stream import iter_training_episodes as iter_training_episodes
