"""Caesar: agentic web research with cited synthesis.

Phase 1 walks the web depth-first from a seeded root, keeping a
navigation graph, a chunked vector knowledge base, and an episodic
memory of moves. Phase 2 interrogates the frozen knowledge base through
recursive QA chains and adversarial refinement to produce one merged,
citation-sound artifact. A blinded multi-judge harness scores competing
answers and tests the gaps for significance.
"""

from .config import CaesarConfig, ConfigError, RunManifest, load_config
from .explore import (
    AgentRole,
    BootstrapError,
    ExplorationEngine,
    ExplorationGraph,
    GraphIntegrityError,
    GraphNode,
    NavStack,
    StepTrace,
)
from .graphtools import GraphStats, compute_stats, export, export_embeddings
from .judge import (
    JudgeError,
    JudgeScore,
    aggregate,
    judge_batch,
    pairwise_mwu,
    self_preference_bias,
)
from .knowledge import (
    EpisodicMemory,
    EpisodicRecord,
    HashingEmbedder,
    KnowledgeBase,
    KnowledgeEntry,
    chunk,
    extract_keywords,
)
from .llm import (
    ChatClient,
    ChatRequest,
    ChatResponse,
    CredentialError,
    OpenAICompatProvider,
    ProviderError,
    RuleProvider,
    ScriptedProvider,
    TokenLedger,
    TransientProviderError,
)
from .mwu import MWUResult, mann_whitney_u
from .prompts import PromptError, PromptTemplate, get_template, render
from .synthesis import (
    Draft,
    EmptyKnowledgeBaseError,
    InsightChain,
    QAInsight,
    SourceTable,
    SynthesisResult,
    Synthesizer,
)
from .web import (
    FetchError,
    FetchPolicy,
    FixtureSearchProvider,
    LiveFetcher,
    LiveSearchProvider,
    OfflineFetcher,
    Perceiver,
    SearchError,
    canonicalize_url,
)

__version__ = "0.1.0"

__all__ = [
    "AgentRole",
    "BootstrapError",
    "CaesarConfig",
    "ChatClient",
    "ChatRequest",
    "ChatResponse",
    "ConfigError",
    "CredentialError",
    "Draft",
    "EmptyKnowledgeBaseError",
    "EpisodicMemory",
    "EpisodicRecord",
    "ExplorationEngine",
    "ExplorationGraph",
    "FetchError",
    "FetchPolicy",
    "FixtureSearchProvider",
    "GraphIntegrityError",
    "GraphNode",
    "GraphStats",
    "HashingEmbedder",
    "InsightChain",
    "JudgeError",
    "JudgeScore",
    "KnowledgeBase",
    "KnowledgeEntry",
    "LiveFetcher",
    "LiveSearchProvider",
    "MWUResult",
    "NavStack",
    "OfflineFetcher",
    "OpenAICompatProvider",
    "Perceiver",
    "PromptError",
    "PromptTemplate",
    "ProviderError",
    "QAInsight",
    "RuleProvider",
    "RunManifest",
    "ScriptedProvider",
    "SearchError",
    "SourceTable",
    "StepTrace",
    "SynthesisResult",
    "Synthesizer",
    "TokenLedger",
    "TransientProviderError",
    "aggregate",
    "canonicalize_url",
    "chunk",
    "compute_stats",
    "export",
    "export_embeddings",
    "extract_keywords",
    "get_template",
    "judge_batch",
    "load_config",
    "mann_whitney_u",
    "pairwise_mwu",
    "render",
    "self_preference_bias",
]
