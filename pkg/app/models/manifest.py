from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class OutputRecord(BaseModel):
    """A written artifact and its content digest"""
    model_config = ConfigDict(frozen=True)

    path: str
    sha256: str = Field(description="Hex digest of the file bytes")
    rows: Optional[int] = None


class RunManifest(BaseModel):
    """Everything needed to rerun a command and check its outputs"""
    command: str = Field(description="Subcommand name")
    command_line: List[str] = Field(description="Arguments after the program name")
    config: Dict[str, Any] = Field(default_factory=dict, description="mu, epsilon, order, n_paths, seed, mode, ...")
    tool_version: str
    started: datetime
    elapsed_seconds: float = Field(default=0.0, ge=0)
    outputs: List[OutputRecord] = Field(default_factory=list)
    censored_count: Optional[int] = None

    def digests(self) -> Dict[str, str]:
        """Digest by file name, so reruns into another directory compare"""
        return {record.path.replace("\\", "/").rsplit("/", 1)[-1]: record.sha256 for record in self.outputs}
