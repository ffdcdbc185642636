"""Tournament harness for cooperation-eliciting multi-agent scenarios.

Scripted and LLM-backed agents play substrates against background
populations; the resulting scores are ranked with Elo, Copeland, ranked
pairs and (iterative) maximal lotteries.
"""
from .core import (
    ActionAttempt,
    ArenaError,
    Event,
    Mode,
    Observation,
    Phase,
    PhaseLabel,
    Role,
    ScenarioSpec,
    ScoreRecord,
    SubstrateId,
    Tag,
    compose_population,
    normalize_score,
    validate_scenario,
)

__version__ = "0.1.0"
