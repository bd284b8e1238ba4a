"""Deterministic seed derivation.

All randomness flows from one 64-bit root seed.  Stages and parallel tasks
get independent streams by hashing the root together with a name path, so
results do not depend on scheduling or worker count.
"""

from __future__ import annotations

import hashlib


def derive_seed(root: int, *names) -> int:
    h = hashlib.sha256()
    h.update(str(int(root)).encode())
    for name in names:
        h.update(b"/")
        h.update(str(name).encode())
    return int.from_bytes(h.digest()[:8], "little")
