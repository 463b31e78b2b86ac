"""Counter-addressed random streams.

A stream is a Philox4x64 generator keyed by ``(master_seed, namespace)``
whose counter starts at ``(0, 0, trial, stream_id)``. Any stream can be
rebuilt from its coordinates alone, so per-trial draws do not depend on
evaluation order or on how trials are split across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int = 0
    namespace: int = 0
    trial: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id", "namespace", "trial"):
            v = getattr(self, name)
            if not 0 <= int(v) < _U64:
                raise ValueError(f"{name}={v} outside the unsigned 64-bit range")

    def generator(self) -> np.random.Generator:
        bg = np.random.Philox(
            key=[self.master_seed, self.namespace],
            counter=[0, 0, self.trial, self.stream_id],
        )
        return np.random.Generator(bg)

    def for_trial(self, trial: int) -> "RngStream":
        return replace(self, trial=int(trial))

    def substream(self, stream_id: int) -> "RngStream":
        return replace(self, stream_id=int(stream_id), trial=0)
