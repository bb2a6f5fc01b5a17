import os
import json
import logging
from pathlib import Path
from typing import List, Sequence, Union

from pydantic import ValidationError

from .. import __version__
from ..core.models import RunManifest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def build_manifest(command: str, config_text: str, base_seed: int, outputs: List[Path],
                   out_dir: Union[str, Path], inputs: Sequence[Path] = ()) -> RunManifest:
    out_dir = Path(out_dir)
    return RunManifest(
        command=command,
        config_text=config_text,
        base_seed=base_seed,
        version=__version__,
        outputs=sorted(str(Path(p).relative_to(out_dir)) for p in outputs),
        inputs=[str(Path(p).resolve()) for p in inputs],
    )


def write_manifest(manifest: RunManifest, out_dir: Union[str, Path]) -> Path:
    """Written through a temporary file and renamed, so it only appears complete."""
    path = Path(out_dir) / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    os.replace(tmp, path)
    logger.info(f"Manifest written to {path} ({len(manifest.outputs)} outputs)")
    return path


def read_manifest(path: Union[str, Path]) -> RunManifest:
    return RunManifest.model_validate_json(Path(path).read_text(encoding="utf-8"))


def manifest_inputs(path: Union[str, Path]) -> List[Path]:
    """Input files recorded in a manifest; empty for a plain config document."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError:
        return []
    if not text.lstrip().startswith("{"):
        return []
    try:
        manifest = RunManifest.model_validate_json(text)
    except ValidationError:
        return []
    if manifest.inputs:
        logger.info(f"Using {len(manifest.inputs)} input files recorded in {path}")
    return [Path(p) for p in manifest.inputs]
