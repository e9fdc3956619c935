"""
Demonstration conditioning.

Every strategy turns the support demonstrations and the playout features
into a task embedding of shape ``(l_p, 64)``, so the actor does not depend
on the strategy. Strategies are conditioner types and the work is split
between two typeclasses:

- :func:`summarize_support` encodes the support once per episode
- :func:`condition` attends the playout to that summary

.. code:: python

  >>> import numpy as np
  >>> from scanb.model.conditioning import NullConditioner, condition
  >>> from scanb.model.conditioning import summarize_support
  >>> from scanb.model.visual import FeatureSequence
  >>> from scanb.numeric.tensor import constant

  >>> playout = FeatureSequence(constant(np.ones((3, 128))), np.ones(3))
  >>> null = NullConditioner()
  >>> task = condition(null, playout, summarize_support(null, [playout]))
  >>> assert task.embedding.shape == (3, 64)
  >>> assert not task.embedding.data.any()

"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from classes import typeclass
from typing_extensions import Final, final

from scanb.exceptions import (
    ConfigurationError,
    ContractError,
    DimensionError,
)
from scanb.model.layers import Dense, scaled_normal
from scanb.model.recurrent import (
    ENCODING_WIDTH,
    BiLstmEncoder,
    TemporalEncoding,
    bilstm_encode,
)
from scanb.model.visual import FEATURE_WIDTH, FeatureSequence
from scanb.numeric.ops import concat, reshape, softmax_rows, swap_last
from scanb.numeric.tensor import Parameter, Tensor, constant

#: Width of every task embedding.
EMBEDDING_WIDTH: Final = ENCODING_WIDTH

STRATEGY_SCA: Final = 'scan'
STRATEGY_TANET: Final = 'tanet'
STRATEGY_TASKEMB: Final = 'taskemb'
STRATEGY_BC: Final = 'bc'
STRATEGIES: Final = (
    STRATEGY_SCA,
    STRATEGY_TANET,
    STRATEGY_TASKEMB,
    STRATEGY_BC,
)

#: Additive score of padded columns before the softmax.
MASK_PENALTY: Final = 1e9

_EMPTY_DEMO_MSG: Final = 'Demonstration has no valid rows'
_NO_DEMOS_MSG: Final = 'At least one demonstration is required'
_CONTEXT_SHAPES_MSG: Final = 'Contexts must share one shape, got {0}'
_INNER_MSG: Final = 'Attention {0} does not match encoding {1}'
_LENGTH_MSG: Final = 'Playout length must be positive, got {0}'
_STRATEGY_MSG: Final = 'Unknown strategy {0!r}, expected one of {1}'


@final
class AttentionParams(object):
    """Bilinear map from playout features to encoding width."""

    __slots__ = ('weight',)

    def __init__(self, rng: np.random.Generator, name: str) -> None:
        """Weight is ``(128, 64)``."""
        self.weight = Parameter(
            scaled_normal(rng, (FEATURE_WIDTH, ENCODING_WIDTH), FEATURE_WIDTH),
            name='{0}.weight'.format(name),
        )

    def parameters(self) -> List[Parameter]:
        """The single bilinear weight."""
        return [self.weight]


@final
@dataclass(frozen=True, eq=False)
class TaskEmbedding(object):
    """
    Per-playout-row task embedding and the attention maps behind it.

    ``attention`` holds one ``(l_p, l_d)`` map per demonstration for
    the stage-conscious strategy, a single map over the averaged sequence
    for the timestep-averaging strategy and nothing otherwise.
    """

    embedding: Tensor
    strategy: str
    attention: Tuple[np.ndarray, ...] = ()


@final
@dataclass(frozen=True, eq=False)
class SupportSummary(object):
    """Per-episode encoding of the support set."""

    encodings: Tuple[TemporalEncoding, ...] = ()
    vector: Optional[Tensor] = None


def sca_attend(
    emb_p: FeatureSequence,
    h_d: TemporalEncoding,
    params: AttentionParams,
) -> Tensor:
    """
    Row-stochastic ``(l_p, l_d)`` attention of playout rows over one demo.

    Padded demonstration columns get exactly zero mass.
    """
    encodings, mask = _single(h_d)
    if mask.sum() < 1:
        raise ContractError(_EMPTY_DEMO_MSG)
    scores = (emb_p.features @ params.weight) @ swap_last(encodings)
    return softmax_rows(scores + constant((mask - 1.0) * MASK_PENALTY))


def sca_context(attn: Tensor, h_d: TemporalEncoding) -> Tensor:
    """``attn @ h_d``: every row mixes rows of one demonstration."""
    encodings, _ = _single(h_d)
    if attn.shape[-1] != encodings.shape[0]:
        raise DimensionError(_INNER_MSG.format(attn.shape, encodings.shape))
    return attn @ encodings


def sca_task_embedding(contexts: Sequence[Tensor]) -> Tensor:
    """
    Mean of the contexts.

    The sum runs in a canonical order of the context values,
    so any permutation of ``contexts`` gives a bit-identical result.
    """
    return canonical_mean(contexts)


def canonical_mean(parts: Sequence[Tensor]) -> Tensor:
    """Elementwise mean summed in the byte order of the values."""
    if not parts:
        raise ContractError(_NO_DEMOS_MSG)
    shapes = {part.shape for part in parts}
    if len(shapes) != 1:
        raise DimensionError(_CONTEXT_SHAPES_MSG.format(sorted(shapes)))
    summed = canonical_sum(parts)
    if len(parts) == 1:
        return summed
    return summed / float(len(parts))


def taskemb_baseline(
    demo_feats: Sequence[FeatureSequence],
    l_p: int,
    projection: Dense,
) -> Tensor:
    """First and last frame features of every demo, averaged and projected."""
    return broadcast_rows(taskemb_vector(demo_feats, projection), l_p)


def taskemb_vector(
    demo_feats: Sequence[FeatureSequence],
    projection: Dense,
) -> Tensor:
    """The ``(1, 64)`` row shared by every playout timestep."""
    if not demo_feats:
        raise ContractError(_NO_DEMOS_MSG)
    pairs = []
    for demo in demo_feats:
        length = demo.length
        if length < 1:
            raise ContractError(_EMPTY_DEMO_MSG)
        features = demo.features
        pairs.append(concat([
            features[0:1], features[length - 1:length],
        ], axis=-1))
    return projection(canonical_mean(pairs))


def tanet_baseline(
    demo_encodings: Sequence[TemporalEncoding],
    emb_p: FeatureSequence,
    params: AttentionParams,
) -> Tuple[Tensor, Tensor]:
    """
    Per-timestep average of tail-padded encodings, then global attention.

    Returns the embedding and the ``(l_p, l_max)`` attention map.
    """
    averaged = average_timesteps(demo_encodings)
    attn = sca_attend(emb_p, averaged, params)
    return sca_context(attn, averaged), attn


def average_timesteps(
    demo_encodings: Sequence[TemporalEncoding],
) -> TemporalEncoding:
    """Masked mean over demonstrations at every absolute timestep."""
    if not demo_encodings:
        raise ContractError(_NO_DEMOS_MSG)
    longest = max(enc.mask.shape[-1] for enc in demo_encodings)
    padded = []
    counts = np.zeros(longest)
    for enc in demo_encodings:
        rows, mask = _single(enc)
        missing = longest - rows.shape[0]
        if missing:
            rows = concat([
                rows, constant(np.zeros((missing, rows.shape[1]))),
            ], axis=0)
            mask = np.concatenate([mask, np.zeros(missing)])
        padded.append(rows)
        counts = counts + mask
    summed = canonical_sum(padded)
    divisor = np.maximum(counts, 1.0)[:, None]
    return TemporalEncoding(
        encodings=reshape(summed / constant(divisor), (1, longest, -1)),
        mask=(counts > 0).astype(np.float64)[None],
    )


def canonical_sum(parts: Sequence[Tensor]) -> Tensor:
    """Elementwise sum in the byte order of the values."""
    ordered = sorted(parts, key=lambda part: part.data.tobytes())
    summed = ordered[0]
    for part in ordered[1:]:
        summed = summed + part
    return summed


def bc_null(l_p: int) -> Tensor:
    """Zero task embedding: the actor sees the playout only."""
    if l_p < 1:
        raise ContractError(_LENGTH_MSG.format(l_p))
    return constant(np.zeros((l_p, EMBEDDING_WIDTH)))


def broadcast_rows(row: Tensor, l_p: int) -> Tensor:
    """Repeats a ``(1, D)`` row ``l_p`` times, gradients add up."""
    if l_p < 1:
        raise ContractError(_LENGTH_MSG.format(l_p))
    return constant(np.ones((l_p, 1))) @ reshape(row, (1, row.shape[-1]))


@final
class ScaConditioner(object):
    """Stage-conscious attention: every playout row attends every demo."""

    __slots__ = ('encoder', 'attention')

    strategy: Final = STRATEGY_SCA

    def __init__(self, rng: np.random.Generator) -> None:
        """Encoder and bilinear attention weight."""
        self.encoder = BiLstmEncoder(rng, 'sca.encoder')
        self.attention = AttentionParams(rng, 'sca.attention')

    def parameters(self) -> List[Parameter]:
        """Encoder, then attention."""
        return [*self.encoder.parameters(), *self.attention.parameters()]


@final
class TanetConditioner(object):
    """Timestep-averaged demonstrations under one global attention."""

    __slots__ = ('encoder', 'attention')

    strategy: Final = STRATEGY_TANET

    def __init__(self, rng: np.random.Generator) -> None:
        """Own encoder and attention weight."""
        self.encoder = BiLstmEncoder(rng, 'tanet.encoder')
        self.attention = AttentionParams(rng, 'tanet.attention')

    def parameters(self) -> List[Parameter]:
        """Encoder, then attention."""
        return [*self.encoder.parameters(), *self.attention.parameters()]


@final
class TaskEmbConditioner(object):
    """First and last frames only."""

    __slots__ = ('projection',)

    strategy: Final = STRATEGY_TASKEMB

    def __init__(self, rng: np.random.Generator) -> None:
        """Projection from the joined frame pair to the embedding width."""
        self.projection = Dense(
            rng, 2 * FEATURE_WIDTH, EMBEDDING_WIDTH, 'taskemb.projection',
        )

    def parameters(self) -> List[Parameter]:
        """The projection."""
        return self.projection.parameters()


@final
class NullConditioner(object):
    """Behavior cloning without demonstrations."""

    __slots__ = ()

    strategy: Final = STRATEGY_BC

    def parameters(self) -> List[Parameter]:
        """Nothing to train."""
        return []


@typeclass
def summarize_support(
    conditioner,
    demos: Sequence[FeatureSequence],
) -> SupportSummary:
    """Encodes the support demonstrations once per episode."""


@summarize_support.instance(ScaConditioner)
@summarize_support.instance(TanetConditioner)
def _summarize_recurrent(
    conditioner, demos: Sequence[FeatureSequence],
) -> SupportSummary:
    if not demos:
        raise ContractError(_NO_DEMOS_MSG)
    return SupportSummary(encodings=tuple(
        bilstm_encode(demo, conditioner.encoder) for demo in demos
    ))


@summarize_support.instance(TaskEmbConditioner)
def _summarize_taskemb(
    conditioner: TaskEmbConditioner, demos: Sequence[FeatureSequence],
) -> SupportSummary:
    return SupportSummary(vector=taskemb_vector(demos, conditioner.projection))


@summarize_support.instance(NullConditioner)
def _summarize_null(
    conditioner: NullConditioner, demos: Sequence[FeatureSequence],
) -> SupportSummary:
    return SupportSummary()


@typeclass
def condition(
    conditioner,
    emb_p: FeatureSequence,
    support: SupportSummary,
) -> TaskEmbedding:
    """Task embedding for every playout row."""


@condition.instance(ScaConditioner)
def _condition_sca(
    conditioner: ScaConditioner,
    emb_p: FeatureSequence,
    support: SupportSummary,
) -> TaskEmbedding:
    maps = []
    contexts = []
    for h_d in support.encodings:
        attn = sca_attend(emb_p, h_d, conditioner.attention)
        maps.append(attn.data)
        contexts.append(sca_context(attn, h_d))
    return TaskEmbedding(
        embedding=sca_task_embedding(contexts),
        strategy=conditioner.strategy,
        attention=tuple(maps),
    )


@condition.instance(TanetConditioner)
def _condition_tanet(
    conditioner: TanetConditioner,
    emb_p: FeatureSequence,
    support: SupportSummary,
) -> TaskEmbedding:
    embedding, attn = tanet_baseline(
        support.encodings, emb_p, conditioner.attention,
    )
    return TaskEmbedding(
        embedding=embedding,
        strategy=conditioner.strategy,
        attention=(attn.data,),
    )


@condition.instance(TaskEmbConditioner)
def _condition_taskemb(
    conditioner: TaskEmbConditioner,
    emb_p: FeatureSequence,
    support: SupportSummary,
) -> TaskEmbedding:
    if support.vector is None:
        raise ContractError(_NO_DEMOS_MSG)
    return TaskEmbedding(
        embedding=broadcast_rows(support.vector, emb_p.features.shape[0]),
        strategy=conditioner.strategy,
    )


@condition.instance(NullConditioner)
def _condition_null(
    conditioner: NullConditioner,
    emb_p: FeatureSequence,
    support: SupportSummary,
) -> TaskEmbedding:
    return TaskEmbedding(
        embedding=bc_null(emb_p.features.shape[0]),
        strategy=conditioner.strategy,
    )


def make_conditioner(strategy: str, rng: np.random.Generator):
    """Builds the conditioner named by ``strategy``."""
    if strategy == STRATEGY_SCA:
        return ScaConditioner(rng)
    if strategy == STRATEGY_TANET:
        return TanetConditioner(rng)
    if strategy == STRATEGY_TASKEMB:
        return TaskEmbConditioner(rng)
    if strategy == STRATEGY_BC:
        return NullConditioner()
    raise ConfigurationError(_STRATEGY_MSG.format(strategy, STRATEGIES))


def _single(h_d: TemporalEncoding) -> Tuple[Tensor, np.ndarray]:
    encodings = h_d.encodings
    mask = np.asarray(h_d.mask, dtype=np.float64)
    if encodings.ndim == 3:
        encodings = reshape(encodings, encodings.shape[1:])
        mask = mask.reshape(-1)
    return encodings, mask
