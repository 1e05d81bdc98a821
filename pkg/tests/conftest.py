from dataclasses import dataclass, field

import pytest

from metafold.env import Environment, RngState


@dataclass
class AccessLog:
    reads: set = field(default_factory=set)
    writes: set = field(default_factory=set)


@dataclass(frozen=True)
class TrackingEnvironment(Environment):
    """Environment that records which keys a component touches.

    The log object is shared across the whole lineage because
    dataclasses.replace copies the reference, so every get/put anywhere in
    a threaded computation lands in the same log.
    """

    log: AccessLog = field(default_factory=AccessLog, compare=False)

    def get(self, key):
        self.log.reads.add(key)
        return super().get(key)

    def put(self, key, value):
        self.log.writes.add(key)
        return super().put(key, value)


def tracking_env(seed: int) -> TrackingEnvironment:
    return TrackingEnvironment(entries={}, rng=RngState(seed, 0))


@pytest.fixture
def tenv():
    return tracking_env(1)
