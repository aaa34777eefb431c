"""Context-aware locomotion on a terrain-parameterized surrogate.

Natural-language terrain descriptions become one-hot context embeddings
(via a chat-completion backend or a deterministic rule oracle) that feed
an augmented-random-search linear policy next to the sensor observation.
"""

from .ars import ArsConfig, IterationRecord, LinearPolicy, ars_update, train
from .core import backend_name
from .embedding import BLOCK_ORDER, ContextEmbedding, ContextMode, embed, index_embedding, onehot
from .env import SurrogateEnv, episode_reward
from .evaluation import EvalCase, EvalReport, builtin_cases, evaluate, run_study
from .terrain import (
    PropertyLevel,
    PropertyLevels,
    TerrainParams,
    describe_low_level,
    levels_to_params,
    quantize,
    sample_terrain,
)
from .translator import (
    BackendConfig,
    HttpBackend,
    MockBackend,
    TranslationCache,
    TranslationResult,
    build_prompt,
    mock_translate,
    parse_response,
    translate,
)

__version__ = "0.1.0"
