import logging

import numpy as np

from harfusion.core.exceptions import NonFiniteInputError, ProvenanceError
from harfusion.schemas.manifest import StageManifest


logger = logging.getLogger(__name__)


def check_finite(array: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(array)):
        raise NonFiniteInputError(what)
    return array


def check_provenance(
    manifest: StageManifest, expected_hash: str, expected_seed: int | None = None, force: bool = False
) -> None:
    """
    Verify an upstream artifact was produced by the current configuration.

    A config hash mismatch is an error unless forced; a seed mismatch only warns.

    :param manifest: StageManifest
        Manifest of the upstream stage.
    :param expected_hash: str
        Hash of the upstream stage's sections under the current config.
    :param expected_seed: int | None, optional
        Global seed of the current run.
    :param force: bool, optional
        Downgrade a hash mismatch to a warning.
    :raises ProvenanceError:
        If the hashes differ and `force` is not set.
    """
    if manifest.config_hash != expected_hash:
        if not force:
            raise ProvenanceError(manifest.stage, manifest.config_hash, expected_hash)
        logger.warning(
            f"Using {manifest.stage} artifacts from config {manifest.config_hash} (current {expected_hash}), forced."
        )
    if expected_seed is not None and manifest.seed != expected_seed:
        logger.warning(f"Seed mismatch: {manifest.stage} ran with seed {manifest.seed}, current seed {expected_seed}.")
