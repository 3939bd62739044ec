"""
File persistence for models, evidence, configurations and results.

Documents are JSON; tables are CSV with '#'-prefixed metadata lines
before the column header.
"""

import io
import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence

import aiofiles
import pandas as pd
from pydantic import ValidationError

from ..errors import ConfigurationError, EvidenceError, ModelValidationError
from ..models.ctbn_model import CTBNModel
from ..models.evidence import Evidence
from ..models.trajectory import JointTrajectory
from ..stats.sufficient_stats import SufficientStats

if TYPE_CHECKING:
    from ..analysis.config import ExperimentConfig

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["sample", "component", "time", "new_state"]


def trajectories_frame(samples: Sequence[JointTrajectory]) -> pd.DataFrame:
    """One row per transition; the row at time 0 carries the initial state."""
    rows = []
    for index, joint in enumerate(samples):
        for trajectory in joint.components:
            rows.append((index, trajectory.component, trajectory.t_start, trajectory.initial_state))
            rows.extend(
                (index, trajectory.component, time, state) for time, state in trajectory.transitions
            )
    return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)


class ResultStore:
    """Reads input documents and writes result tables under one directory."""

    def __init__(self, output_dir: Path = Path("results")):
        """
        Initialize the store.

        Args:
            output_dir: Directory that relative result names resolve against
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def resolve(self, name: Path) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.output_dir / path

    async def load_json(self, path: Path, error: type = ConfigurationError) -> Dict[str, Any]:
        try:
            async with aiofiles.open(path, "r", encoding="utf-8") as f:
                content = await f.read()
            return json.loads(content)
        except FileNotFoundError:
            raise error(f"file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise error(f"{path} is not valid JSON: {e}") from e

    async def save_json(self, document: Dict[str, Any], name: Path) -> Path:
        path = self.resolve(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(path, "w", encoding="utf-8") as f:
            await f.write(json.dumps(document, indent=2))
        return path

    async def load_model(self, path: Path) -> CTBNModel:
        document = await self.load_json(path, ModelValidationError)
        try:
            model = CTBNModel.from_document(document)
        except ValidationError as e:
            raise ModelValidationError(f"{path}: {e}") from e
        logger.info(f"Loaded model with {model.num_components} components from {path}")
        return model

    async def load_evidence(self, path: Path, horizon: Optional[float] = None) -> Evidence:
        """Load an evidence document; ``horizon`` overrides the document's."""
        document = await self.load_json(path, EvidenceError)
        if horizon is not None:
            document = {**document, "horizon": horizon}
        try:
            return Evidence.model_validate(document)
        except ValidationError as e:
            raise EvidenceError(f"{path}: {e}") from e

    async def load_config(self, path: Path) -> "ExperimentConfig":
        from ..analysis.config import ExperimentConfig

        document = await self.load_json(path, ConfigurationError)
        try:
            return ExperimentConfig.model_validate(document)
        except ValidationError as e:
            raise ConfigurationError(f"{path}: {e}") from e

    async def save_model(self, model: CTBNModel, name: Path) -> Path:
        return await self.save_json(model.to_document(), name)

    async def save_evidence(self, evidence: Evidence, name: Path) -> Path:
        return await self.save_json(evidence.to_document(), name)

    async def save_frame(
        self, frame: pd.DataFrame, name: Path, metadata: Optional[Dict[str, Any]] = None
    ) -> Path:
        """Write a CSV table preceded by '# key: value' metadata lines."""
        path = self.resolve(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = "".join(f"# {key}: {value}\n" for key, value in (metadata or {}).items())
        async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
            await f.write(header + frame.to_csv(index=False, lineterminator="\n"))
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    async def load_frame(self, path: Path) -> pd.DataFrame:
        async with aiofiles.open(self.resolve(path), "r", encoding="utf-8") as f:
            content = await f.read()
        return pd.read_csv(io.StringIO(content), comment="#")

    async def load_metadata(self, path: Path) -> Dict[str, str]:
        metadata: Dict[str, str] = {}
        async with aiofiles.open(self.resolve(path), "r", encoding="utf-8") as f:
            async for line in f:
                if not line.startswith("#"):
                    break
                key, _, value = line[1:].partition(":")
                metadata[key.strip()] = value.strip()
        return metadata

    async def save_trajectories(
        self, samples: List[JointTrajectory], name: Path, horizon: float, seed: Optional[int]
    ) -> Path:
        return await self.save_frame(
            trajectories_frame(samples), name, {"horizon": horizon, "seed": seed}
        )

    async def save_stats(
        self, stats: SufficientStats, name: Path, metadata: Optional[Dict[str, Any]] = None
    ) -> Path:
        return await self.save_frame(
            stats.to_frame(), name, {"horizon": stats.horizon, **(metadata or {})}
        )
