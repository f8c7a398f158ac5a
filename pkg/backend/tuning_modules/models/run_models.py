"""
Command-line run records
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class RunConfig(BaseModel):
    """Everything a subcommand was invoked with, written next to its outputs"""
    command: str = Field(..., description="Subcommand name")
    space: Optional[str] = Field(None, description="Space file path")
    data: List[str] = Field(default_factory=list, description="Training or trajectory files")
    method: Optional[str] = Field(None, description="Importance method")
    optimizer: Optional[str] = None
    k: Optional[int] = Field(None, ge=1, description="Number of selected knobs")
    sense: Optional[str] = None
    budget: Optional[int] = Field(None, ge=1)
    seeds: List[int] = Field(default_factory=list)
    overrides: Dict[str, Any] = Field(default_factory=dict, description="Algorithm settings in effect")
    out: str = Field(..., description="Output directory")
