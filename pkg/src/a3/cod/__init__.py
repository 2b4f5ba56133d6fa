"""Two-stage opinion-in-the-loop classification pipeline.

Stage 1 obtains one opinion per distinct news item from a generator (an
in-process stub or an external plugin process); stage 2 composes opinions
with the news and classifies with the built-in naive-Bayes baseline or a
classifier plugin.
"""

from .baseline import BaselineModel, predict, train_baseline
from .compose import SEPARATOR, ComposedInput, ComposeMode, compose_input, count_tokens
from .experiment import ExperimentConfig, ExperimentReport, run_experiment
from .opinions import CacheStats, Opinion, OpinionCache, generate_opinions
from .plugin import PluginClient
from .prompts import PromptTemplate, load_template, render_prompt
from .stubs import resolve_generator

__all__ = [
    "BaselineModel",
    "CacheStats",
    "ComposeMode",
    "ComposedInput",
    "ExperimentConfig",
    "ExperimentReport",
    "Opinion",
    "OpinionCache",
    "PluginClient",
    "PromptTemplate",
    "SEPARATOR",
    "compose_input",
    "count_tokens",
    "generate_opinions",
    "load_template",
    "predict",
    "render_prompt",
    "resolve_generator",
    "run_experiment",
    "train_baseline",
]
