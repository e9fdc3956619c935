"""Encoders, conditioning strategies, action heads and losses."""

from scanb.model.conditioning import STRATEGIES as STRATEGIES
from scanb.model.conditioning import TaskEmbedding as TaskEmbedding
from scanb.model.conditioning import condition as condition
from scanb.model.losses import LossBundle as LossBundle
from scanb.model.policy import PolicySession as PolicySession
from scanb.model.policy import ScanModel as ScanModel
from scanb.model.recurrent import bilstm_encode as bilstm_encode
from scanb.model.visual import visual_encode as visual_encode
