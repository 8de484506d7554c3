"""Seeds derived from the global experiment seed, stable across processes and runs."""

import hashlib


SEED_MASK = (1 << 63) - 1


def derive_seed(global_seed: int, *parts: object) -> int:
    """sha256 of the global seed and the job coordinates, folded into a 63-bit seed."""
    key = "|".join(str(part) for part in (global_seed, *parts))
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & SEED_MASK
