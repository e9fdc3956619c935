"""Tabletop simulator: specs, states, rendering, experts and judging."""

from scanb.world.expert import LengthProfile as LengthProfile
from scanb.world.expert import ScriptedExpert as ScriptedExpert
from scanb.world.expert import minimal_profile as minimal_profile
from scanb.world.expert import scripted_expert as scripted_expert
from scanb.world.judge import Trajectory as Trajectory
from scanb.world.judge import check_success as check_success
from scanb.world.judge import rollout as rollout
from scanb.world.render import ObservationState as ObservationState
from scanb.world.render import RenderConfig as RenderConfig
from scanb.world.render import render as render
from scanb.world.spec import EnvironmentSpec as EnvironmentSpec
from scanb.world.state import Action as Action
from scanb.world.state import WorldState as WorldState
from scanb.world.state import init_environment as init_environment
from scanb.world.state import step as step
