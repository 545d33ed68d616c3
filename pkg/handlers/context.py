import logging
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, List

from config import run_summary_handler
from storage.data_manager import ArtifactManager
from utils.validators import ExperimentConfig

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    """Everything a subcommand handler needs for one run"""
    command: str
    config: ExperimentConfig
    artifacts: ArtifactManager
    plot: bool = False
    threads: int = 1
    notify: Callable[[str], None] = print
    messages: List[str] = dataclass_field(default_factory=list)

    def say(self, text: str):
        self.messages.append(text)
        self.notify(text)

    def write_summary(self, name: str, payload: dict) -> str:
        """JSON summary with the warnings logged during the run appended"""
        document = {"command": self.command}
        document.update(payload)
        document["warnings"] = run_summary_handler.drain()
        return self.artifacts.write_json(name, document)
