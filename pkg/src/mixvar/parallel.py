"""Replication runner with one independent random substream per replication."""
from __future__ import annotations

import logging
from typing import Callable

import numpy as np

from .errors import MixVarError

logger = logging.getLogger(__name__)


def substreams(seed, count: int) -> list:
    return np.random.SeedSequence(seed).spawn(count)


def _call(fn, ss):
    try:
        return fn(np.random.default_rng(ss))
    except MixVarError as exc:
        logger.info("replication failed: %s", exc)
        return exc


def run_replications(fn: Callable, count: int, seed, n_jobs: int = 1) -> list:
    """Evaluate ``fn(rng)`` for ``count`` substreams of ``seed``, in order.

    Library errors raised by a replication are returned in its slot rather
    than propagated, so callers can count failures.  Results do not depend
    on ``n_jobs``.
    """
    streams = substreams(seed, count)
    if n_jobs == 1 or count <= 1:
        return [_call(fn, ss) for ss in streams]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=n_jobs)(delayed(_call)(fn, ss) for ss in streams)
