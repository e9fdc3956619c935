"""
The full policy: visual heads, a conditioner and two action heads.

Training runs one episode at a time on a window of at most
:data:`WINDOW` query frames that keeps absolute timesteps.
Inference re-runs the pipeline on the latest window at every step,
caching per-frame features and the support encoding.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from typing_extensions import Final, final

from scanb.data.records import DemoFrames, Demonstration, EpisodeRecord
from scanb.exceptions import ContractError
from scanb.model.actor import (
    ActionHead,
    ActorOutput,
    action_head,
    actor_input,
    actor_width,
    inverse_dynamics,
)
from scanb.model.conditioning import (
    EMBEDDING_WIDTH,
    STRATEGY_SCA,
    SupportSummary,
    TaskEmbedding,
    condition,
    make_conditioner,
    summarize_support,
)
from scanb.model.layers import gather_parameters
from scanb.model.losses import (
    LossBundle,
    loss_gripper,
    loss_pos,
    total_loss,
    zero_loss,
)
from scanb.model.visual import (
    FEATURE_WIDTH,
    SOURCE_CROP,
    SOURCE_DEMO,
    FeatureSequence,
    VisualHead,
    visual_encode,
)
from scanb.numeric.ops import concat
from scanb.numeric.rng import seeded_rng
from scanb.numeric.tensor import Parameter, Tensor, no_grad
from scanb.world.render import ObservationState
from scanb.world.state import Action, WorldState

logger = logging.getLogger(__name__)

#: Longest stretch of playout frames seen at once.
WINDOW: Final = 64
#: Open probabilities at or above it open the gripper.
OPEN_THRESHOLD: Final = 0.5

_WINDOW_MSG: Final = 'Window start {0} is outside a playout of {1} frames'
_NO_SUPPORT_MSG: Final = 'Policy needs at least one support demonstration'
_HISTORY_MSG: Final = 'Playout history is empty'
_OBSERVATION_MSG: Final = 'Policy needs an observation'
_QUERY_MSG: Final = 'Query demonstration has no actions to imitate'


@final
class ScanModel(object):
    """
    Every trainable part of one policy.

    The RGB-D head is shared by the playout and the demonstrations,
    the crop head only sees effector crops.
    """

    __slots__ = (
        'strategy', 'visual', 'crop', 'conditioner', 'actor', 'inverse',
    )

    def __init__(self, strategy: str = STRATEGY_SCA, seed: int = 0) -> None:
        """Weights depend only on ``strategy`` and ``seed``."""
        rng = seeded_rng(seed, 'model', strategy)
        self.strategy = strategy
        self.visual = VisualHead(rng, 'visual')
        self.crop = VisualHead(rng, 'crop')
        self.conditioner = make_conditioner(strategy, rng)
        self.actor = ActionHead(rng, actor_width(EMBEDDING_WIDTH), 'actor')
        self.inverse = ActionHead(rng, 4 * FEATURE_WIDTH, 'inverse')

    def parameters(self) -> List[Parameter]:
        """Every parameter, in a stable order."""
        return gather_parameters(
            self.visual, self.crop, self.conditioner, self.actor, self.inverse,
        )

    def encode_support(self, support: Sequence[DemoFrames]) -> SupportSummary:
        """Visual features of every demonstration, then the conditioner."""
        if not support:
            raise ContractError(_NO_SUPPORT_MSG)
        demos = [
            visual_encode(demo.frames, self.visual, source=SOURCE_DEMO)
            for demo in support
        ]
        return summarize_support(self.conditioner, demos)

    def embed_task(
        self,
        support: Sequence[DemoFrames],
        frames: np.ndarray,
    ) -> TaskEmbedding:
        """Task embedding of a playout, attention maps included."""
        playout = visual_encode(frames, self.visual)
        summary = self.encode_support(support)
        return condition(self.conditioner, playout, summary)

    def forward(
        self,
        summary: SupportSummary,
        playout: FeatureSequence,
        crops: Tensor,
        effectors: np.ndarray,
        positions: np.ndarray,
    ) -> ActorOutput:
        """Action head outputs for every playout row."""
        task = condition(self.conditioner, playout, summary)
        inputs = actor_input(
            playout.features, crops, effectors, task.embedding, positions,
        )
        return action_head(inputs, self.actor)

    def episode_loss(
        self,
        episode: EpisodeRecord,
        lambda_pos: float,
        lambda_gripper: float,
        start: int = 0,
    ) -> LossBundle:
        """Loss of one episode on the query window beginning at ``start``."""
        return self.query_loss(
            episode.support_frames(), episode.query,
            lambda_pos, lambda_gripper, start,
        )

    def query_loss(  # noqa: WPS210, WPS211
        self,
        support: Sequence[DemoFrames],
        query: Demonstration,
        lambda_pos: float,
        lambda_gripper: float,
        start: int = 0,
    ) -> LossBundle:
        """
        Loss of ``query`` conditioned on ``support``.

        Rows with a recorded next action are supervised. The inverse head
        is supervised on every adjacent pair of the window, and its losses
        are zero for a single-frame window.
        """
        if query.actions is None:
            raise ContractError(_QUERY_MSG)
        length = len(query.frames)
        if not 0 <= start < length:
            raise ContractError(_WINDOW_MSG.format(start, length))
        stop = min(start + WINDOW, length)
        actions = query.actions
        summary = self.encode_support(support)
        playout = visual_encode(query.frames[start:stop], self.visual)
        crops = visual_encode(
            query.crops[start:stop], self.crop, source=SOURCE_CROP,
        ).features
        out = self.forward(
            summary,
            playout,
            crops,
            query.effectors[start:stop],
            np.arange(start, stop),
        )
        supervised = min(stop, length - 1) - start
        if supervised > 0:
            act_out = _head_rows(out, supervised)
            labels = actions[start:start + supervised]
            act_pos = loss_pos(act_out, labels)
            act_gripper = loss_gripper(act_out, labels)
        else:
            act_pos = act_gripper = zero_loss()
        if stop - start > 1:
            inv_out = inverse_dynamics(playout.features, crops, self.inverse)
            inv_labels = actions[start:stop - 1]
            inv_pos = loss_pos(inv_out, inv_labels)
            inv_gripper = loss_gripper(inv_out, inv_labels)
        else:
            inv_pos = inv_gripper = zero_loss()
        return total_loss(
            act_pos, inv_pos, act_gripper, inv_gripper,
            lambda_pos, lambda_gripper,
        )

    def session(self, support: Sequence[DemoFrames]) -> 'PolicySession':
        """Fresh inference state for one playout."""
        return PolicySession(self, support)

    def act(
        self,
        history: Sequence[ObservationState],
        support: Sequence[DemoFrames],
    ) -> Action:
        """Next action after the playout ``history``, oldest frame first."""
        if not history:
            raise ContractError(_HISTORY_MSG)
        session = self.session(support)
        with no_grad():
            for observation in history[:-1]:
                session.observe(observation)
        return session.act(None, history[-1])


@final
@dataclass(frozen=True)
class StepTrace(object):
    """One executed policy step."""

    t: int
    mu: List[float]
    sigma: List[float]
    g: float
    action: List[float]

    def as_row(self) -> Dict[str, Any]:
        """JSON-ready mapping."""
        return {
            't': self.t,
            'mu': self.mu,
            'sigma': self.sigma,
            'g': self.g,
            'action': self.action,
        }


@final
class PolicySession(object):
    """
    Closed-loop controller for one playout.

    Satisfies the environment controller protocol: :meth:`act`
    takes the current state and observation and returns the next action.
    """

    __slots__ = (
        'model', 'trace', '_summary', '_playout', '_crops', '_effectors',
    )

    def __init__(self, model: ScanModel, support: Sequence[DemoFrames]) -> None:
        """Encodes the support once."""
        self.model = model
        self.trace: List[StepTrace] = []
        with no_grad():
            self._summary = model.encode_support(support)
        self._playout: List[Tensor] = []
        self._crops: List[Tensor] = []
        self._effectors: List[np.ndarray] = []

    def act(
        self,
        state: Optional[WorldState],
        observation: Optional[ObservationState] = None,
    ) -> Action:
        """Predicts from the latest window and executes its last row."""
        if observation is None:
            raise ContractError(_OBSERVATION_MSG)
        with no_grad():
            self.observe(observation)
            t = len(self._playout) - 1
            first = max(0, t + 1 - WINDOW)
            playout = FeatureSequence(
                features=concat(self._playout[first:], axis=0),
                mask=np.ones(t + 1 - first),
            )
            out = self.model.forward(
                self._summary,
                playout,
                concat(self._crops[first:], axis=0),
                np.stack(self._effectors[first:]),
                np.arange(first, t + 1),
            )
        mu = out.mean.data[-1]
        g = float(out.gripper.data[-1])
        action = Action(
            target=(float(mu[0]), float(mu[1]), float(mu[2])),
            gripper=1.0 if g >= OPEN_THRESHOLD else 0.0,
        )
        self.trace.append(StepTrace(
            t=t,
            mu=mu.tolist(),
            sigma=out.sigma.tolist(),
            g=g,
            action=[*action.target, action.gripper],
        ))
        logger.debug('policy step t=%d g=%.3f', t, g)
        return action

    def observe(self, observation: ObservationState) -> None:
        """Caches features of one more playout frame."""
        self._playout.append(
            visual_encode(observation.frame[None], self.model.visual).features,
        )
        self._crops.append(visual_encode(
            observation.crop[None], self.model.crop, source=SOURCE_CROP,
        ).features)
        self._effectors.append(
            np.asarray(observation.effector, dtype=np.float64),
        )


def _head_rows(out: ActorOutput, rows: int) -> ActorOutput:
    return ActorOutput(
        mean=out.mean[:rows],
        gripper=out.gripper[:rows],
        log_sigma=out.log_sigma,
    )
