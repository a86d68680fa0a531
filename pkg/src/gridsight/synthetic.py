"""Seeded random cases for property tests and demos."""
from __future__ import annotations

import random
from typing import Optional

from .model import Bus, Case, FLOW, INJECTION, Line, Measurement


def random_case(seed: int, max_buses: int = 8, max_lines: int = 14,
                flow_p: float = 0.35, injection_p: float = 0.6,
                min_buses: int = 2, name: Optional[str] = None) -> Case:
    """Connected random network with random meter placement.

    A random spanning tree is drawn first, then extra lines up to
    ``max_lines``.  Measurement ids are shuffled so the canonical order is
    not tied to the placement.  Susceptances are left out (use generic ones).
    """
    rng = random.Random(seed)
    n = rng.randint(min_buses, max_buses)
    pairs = []
    for b in range(2, n + 1):
        pairs.append((rng.randint(1, b - 1), b))
    spare = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)
             if (i, j) not in pairs]
    rng.shuffle(spare)
    extra = rng.randint(0, max(0, min(len(spare), max_lines - len(pairs))))
    pairs += spare[:extra]
    rng.shuffle(pairs)
    lines = tuple(Line(k + 1, *(p if rng.random() < 0.5 else p[::-1]))
                  for k, p in enumerate(pairs))

    placed = [(FLOW, ln.id) for ln in lines if rng.random() < flow_p]
    placed += [(INJECTION, b) for b in range(1, n + 1) if rng.random() < injection_p]
    rng.shuffle(placed)
    meas = tuple(Measurement(k + 1, kind, target) for k, (kind, target) in enumerate(placed))
    buses = tuple(Bus(b, f"Bus {b}") for b in range(1, n + 1))
    return Case(buses, lines, meas, 1, name or f"random-{seed}")
