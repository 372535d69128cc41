"""Satellite constellation graph and cloud routing.

Satellites are graph nodes joined by inter-satellite links; some have a
direct ground-station link.  A task offloaded through satellite n rides
the hop-minimal ISL path (ties broken by chain length, then index) to a
GS-connected satellite n', then down to the ground station.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .world import default_sat_layout


@dataclass(frozen=True)
class CloudPath:
    """Route from a source satellite down to the ground station."""

    hops: int            # ISL hops to the GS-connected satellite
    isl_dist_m: float    # summed ISL chain length
    gs_sat: int          # satellite holding the ground link
    sat_gs_dist_m: float  # 3D distance from gs_sat to the ground station


@dataclass
class Constellation:
    sat_pos: np.ndarray      # (N, 2) horizontal m
    sat_alt_m: float
    links: list              # [(a, b), ...] undirected
    gs_pos: np.ndarray       # (2,) m
    gs_sats: list            # indices with a direct ground link

    @classmethod
    def from_config(cls, cfg: ScenarioConfig,
                    sat_pos: np.ndarray | None = None) -> "Constellation":
        sc = cfg.scenario
        if sat_pos is None:
            if sc.sat_pos_m is not None:
                sat_pos = np.asarray(sc.sat_pos_m, dtype=float)
            else:
                sat_pos = default_sat_layout(cfg)
        sat_pos = sat_pos.reshape(sc.num_sats, 2)
        if cfg.cloud.isl_links == "ring":
            links = ring_links(sc.num_sats)
        else:
            links = [tuple(e) for e in cfg.cloud.isl_links]
        gs_pos = np.asarray(cfg.cloud.gs_pos_m, dtype=float)
        if cfg.cloud.gs_sats is not None:
            gs_sats = list(cfg.cloud.gs_sats)
        elif sc.num_sats > 0:
            d = sat_gs_distance(sat_pos, sc.sat_alt_m, gs_pos)
            gs_sats = [int(np.argmin(d))]
        else:
            gs_sats = []
        return cls(sat_pos=sat_pos, sat_alt_m=sc.sat_alt_m, links=links,
                   gs_pos=gs_pos, gs_sats=gs_sats)


def ring_links(n: int) -> list:
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    return [(k, (k + 1) % n) for k in range(n)]


def sat_gs_distance(sat_pos: np.ndarray, sat_alt: float, gs_pos: np.ndarray):
    diff = sat_pos - gs_pos[None, :]
    return np.sqrt(np.sum(diff * diff, axis=-1) + sat_alt * sat_alt)


def cloud_path(con: Constellation, source: int) -> CloudPath:
    """Hop-minimal route from `source` to a GS-connected satellite.

    Ties on hop count break by total chain length, then by satellite index.
    Raises ValueError("cloud unreachable") when no GS-connected satellite
    can be reached.
    """
    n = len(con.sat_pos)
    if not 0 <= source < n:
        raise ValueError(f"satellite index {source} out of range")
    adjacency = [[] for _ in range(n)]
    for a, b in con.links:
        d = float(np.linalg.norm(con.sat_pos[a] - con.sat_pos[b]))
        adjacency[a].append((b, d))
        adjacency[b].append((a, d))

    # Lexicographic Dijkstra on (hops, chain length).
    best = {source: (0, 0.0)}
    heap = [(0, 0.0, source)]
    while heap:
        hops, dist, node = heapq.heappop(heap)
        if best.get(node, (math.inf, math.inf)) < (hops, dist):
            continue
        for nxt, d in adjacency[node]:
            cand = (hops + 1, dist + d)
            if cand < best.get(nxt, (math.inf, math.inf)):
                best[nxt] = cand
                heapq.heappush(heap, (cand[0], cand[1], nxt))

    gs_dist = sat_gs_distance(con.sat_pos, con.sat_alt_m, con.gs_pos)
    candidates = [
        (best[k][0], best[k][1], k) for k in con.gs_sats if k in best
    ]
    if not candidates:
        raise ValueError("cloud unreachable")
    hops, isl_dist, gs_sat = min(candidates)
    return CloudPath(hops=hops, isl_dist_m=isl_dist, gs_sat=gs_sat,
                     sat_gs_dist_m=float(gs_dist[gs_sat]))
