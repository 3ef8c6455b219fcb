from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class RunStatus(str, Enum):
    """Status of a run"""

    SUCCESS = "success"
    PARTIAL = "partial"  # Finished, but something was flagged
    FAILED = "failed"


class RunIssue(BaseModel):
    """Details about a failure recorded during a run"""

    stage: str
    error: str
    details: Optional[Dict[str, Any]] = None


class RunManifest(BaseModel):
    """Everything needed to reproduce and audit one run"""

    model: str
    seed: int
    config: Dict[str, Any] = Field(description="Echo of the validated config")
    software_version: str
    output_dir: str
    status: RunStatus = RunStatus.SUCCESS
    started_at: datetime = Field(default_factory=datetime.now)
    finished_at: Optional[datetime] = None
    wall_seconds: float = 0.0
    generated_files: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)
    errors: List[RunIssue] = Field(default_factory=list)
    diagnostics: Dict[str, float] = Field(default_factory=dict)

    def add_error(
        self, stage: str, error: str, details: Optional[Dict[str, Any]] = None
    ):
        """Add an error that ended the run"""
        self.errors.append(RunIssue(stage=stage, error=error, details=details))

    def add_warning(self, warning: str):
        """Add a warning message"""
        if warning not in self.warnings:
            self.warnings.append(warning)

    def add_generated_file(self, file_name: str):
        """Add a file written into the output directory"""
        if file_name not in self.generated_files:
            self.generated_files.append(file_name)

    def finish(self):
        """Stamp the end time and settle the status"""
        self.finished_at = datetime.now()
        self.wall_seconds = (self.finished_at - self.started_at).total_seconds()
        self.update_status()

    def update_status(self):
        """Update the overall status based on errors and warnings"""
        if self.errors:
            self.status = RunStatus.FAILED
        elif self.warnings:
            self.status = RunStatus.PARTIAL
        else:
            self.status = RunStatus.SUCCESS
