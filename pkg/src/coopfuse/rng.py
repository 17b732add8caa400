"""Named random streams.

Every random draw in the package flows from a generator built here, so a
single master seed plus a chain of purpose labels ("scene", ("trial", 4),
"pose-noise", ...) pins down the whole experiment.  Labels are hashed with
SHA-256 rather than Python's builtin ``hash`` so streams are stable across
interpreter runs and platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np

_UINT64 = (1 << 64) - 1


def _label_entropy(label: object) -> int:
    digest = hashlib.sha256(repr(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, *labels: object) -> np.random.Generator:
    """Derive an independent generator from a master seed and purpose labels.

    Distinct label chains give statistically independent streams; the same
    chain always gives the same stream.
    """
    entropy = [int(seed) & _UINT64] + [_label_entropy(lab) for lab in labels]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def substream_seed(seed: int, *labels: object) -> int:
    """Collapse (seed, labels) to a plain integer seed for APIs that take one."""
    entropy = [int(seed) & _UINT64] + [_label_entropy(lab) for lab in labels]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
