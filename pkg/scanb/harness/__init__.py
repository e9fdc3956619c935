"""Training, evaluation, metrics and exports of whole runs."""

from scanb.harness.config import RunConfig as RunConfig
from scanb.harness.config import load_config as load_config
from scanb.harness.config import parse_config as parse_config
from scanb.harness.dataset import build_dataset as build_dataset
from scanb.harness.evaluation import SuccessReport as SuccessReport
from scanb.harness.evaluation import evaluate as evaluate
from scanb.harness.export import export_attention as export_attention
from scanb.harness.export import (
    export_context_projection as export_context_projection,
)
from scanb.harness.locality import LocalityReport as LocalityReport
from scanb.harness.locality import attention_locality as attention_locality
from scanb.harness.reports import summarize_reports as summarize_reports
from scanb.harness.selfcheck import run_selfcheck as run_selfcheck
from scanb.harness.sweep import robustness_sweep as robustness_sweep
from scanb.harness.training import fine_tune as fine_tune
from scanb.harness.training import meta_train as meta_train
