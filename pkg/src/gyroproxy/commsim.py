"""Analytic model of the two-dimensional collective-communication split.

The distributed solve exchanges data along two orthogonal rank-grid
dimensions: an all-to-all transpose over groups of size n1 and an
all-reduce over groups of size n2, with n1 * n2 ranks in total.  This
module predicts per-step communication seconds for such a split on a
parameterized machine, and searches the (n1, n2, placement) space for
the cheapest plan.  Everything is closed-form; no traffic is simulated.

Cost model (bandwidth-latency style, fixed here since no standard exists
for this level of abstraction):

* Ranks are laid out in blocks: dim1 groups are packed onto one node
  (``dim1_intra_node``) or striped across ``spread_nodes`` nodes
  (``dim1_spread``); dim2 then stacks groups onto the remaining slots.
  GPUs are assigned round-robin within a node, so two ranks can share a
  physical GPU when processes_per_gpu > 1.
* Peer traffic is split exactly, by counting pairs under that layout,
  into same-GPU (free, device-local), same-node (intra fabric), and
  cross-node shares.
* Each active rank gets an equal share of the node's aggregate intra
  fabric and of the NIC pool; a shared-bus NIC pool is further divided
  by the contention factor.  The cross-node path runs at the minimum of
  the intra share and the NIC share.
* Message counts: pairwise-exchange all-to-all sends group-1 messages;
  ring all-reduce pays 2*ceil(log2(group)) latency rounds.  Only a
  shared bus charges per-message latency, and only on the fraction of
  messages that actually leave the node.
* Zero bytes or a singleton group costs exactly 0.0 seconds.

Bandwidths are decimal: 1 GB/s = 1e9 bytes/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grid import GridShape

NIC_LAYOUTS = ("shared_bus", "per_gpu")
PLACEMENTS = ("dim1_intra_node", "dim1_spread")
GB = 1e9


@dataclass(frozen=True)
class MachineTopology:
    """Node-level hardware figures for the communication model."""

    name: str
    gpus_per_node: int
    intra_node_links: int
    intra_link_gbps: float
    nic_layout: str
    nics_per_node: int
    nic_bandwidth: float
    processes_per_gpu: int = 1
    shared_bus_latency_penalty: float = 2e-6
    shared_bus_contention: float = 1.5

    def __post_init__(self):
        if self.gpus_per_node < 1:
            raise ValueError("gpus_per_node must be >= 1")
        if self.intra_node_links < 1 or self.nics_per_node < 1:
            raise ValueError("link and NIC counts must be >= 1")
        if self.intra_link_gbps <= 0 or self.nic_bandwidth <= 0:
            raise ValueError("bandwidths must be positive")
        if self.nic_layout not in NIC_LAYOUTS:
            raise ValueError(f"nic_layout must be one of {NIC_LAYOUTS}, got {self.nic_layout!r}")
        if self.processes_per_gpu < 1:
            raise ValueError("processes_per_gpu must be >= 1")
        if self.shared_bus_latency_penalty < 0:
            raise ValueError("latency penalty must be >= 0")
        if self.shared_bus_contention < 1:
            raise ValueError("contention must be >= 1")

    @property
    def ranks_per_node(self) -> int:
        return self.gpus_per_node * self.processes_per_gpu

    @property
    def intra_aggregate_gbps(self) -> float:
        return self.intra_node_links * self.intra_link_gbps

    @property
    def nic_pool_gbps(self) -> float:
        return self.nics_per_node * self.nic_bandwidth


_BUILTIN = {
    "perlmutter_like": MachineTopology(
        name="perlmutter_like",
        gpus_per_node=4,
        intra_node_links=4,
        intra_link_gbps=25.0,
        nic_layout="shared_bus",
        nics_per_node=4,
        nic_bandwidth=25.0,
    ),
    "frontier_like": MachineTopology(
        name="frontier_like",
        gpus_per_node=4,
        intra_node_links=2,
        intra_link_gbps=50.0,
        nic_layout="per_gpu",
        nics_per_node=4,
        nic_bandwidth=25.0,
        processes_per_gpu=2,
    ),
}


def builtin_topology(name: str) -> MachineTopology:
    """One of the two reference machine models, by name."""
    try:
        return _BUILTIN[name]
    except KeyError:
        known = ", ".join(sorted(_BUILTIN))
        raise ValueError(f"unknown topology {name!r}; builtins: {known}") from None


def load_topology(path) -> MachineTopology:
    """Read a topology from a key=value text file.

    One field per line, ``#`` starts a comment.  Required keys:
    gpus_per_node, intra_node_links, intra_link_gbps, nic_layout,
    nics_per_node, nic_bandwidth.  Optional: name, processes_per_gpu,
    shared_bus_latency_penalty, shared_bus_contention.
    """
    ints = {"gpus_per_node", "intra_node_links", "nics_per_node", "processes_per_gpu"}
    floats = {"intra_link_gbps", "nic_bandwidth", "shared_bus_latency_penalty", "shared_bus_contention"}
    fields: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in ints:
                fields[key] = int(value)
            elif key in floats:
                fields[key] = float(value)
            elif key in ("name", "nic_layout"):
                fields[key] = value
            else:
                raise ValueError(f"{path}:{lineno}: unknown topology field {key!r}")
    missing = {"gpus_per_node", "intra_node_links", "intra_link_gbps",
               "nic_layout", "nics_per_node", "nic_bandwidth"} - fields.keys()
    if missing:
        raise ValueError(f"{path}: missing topology fields: {', '.join(sorted(missing))}")
    fields.setdefault("name", str(path))
    return MachineTopology(**fields)


@dataclass(frozen=True)
class CommPlan:
    """An n1 x n2 rank-grid split with its placement policy.

    ranks_per_node is the occupancy the plan was laid out for (active
    ranks per node); when None it defaults at evaluation time to filling
    whole nodes, min(total_ranks, topology capacity).
    """

    n1: int
    n2: int
    placement: str
    spread_nodes: int = 1
    ranks_per_node: int | None = None

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("group sizes must be >= 1")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        if self.placement == "dim1_intra_node" and self.spread_nodes != 1:
            raise ValueError("dim1_intra_node implies spread_nodes == 1")
        if self.placement == "dim1_spread" and self.spread_nodes < 2:
            raise ValueError("dim1_spread requires spread_nodes >= 2")
        if self.ranks_per_node is not None and self.ranks_per_node < 1:
            raise ValueError("ranks_per_node must be >= 1 when given")

    @property
    def total_ranks(self) -> int:
        return self.n1 * self.n2


@dataclass(frozen=True)
class VolumeModel:
    """Total bytes moved by each communication dimension.

    state_bytes is the full distributed state (transposed piecewise by
    the all-to-all); field_bytes_base is the reduced field buffer at
    n2 = 1, which grows linearly with n2 before being reduced back.
    """

    state_bytes: int
    field_bytes_base: int

    def __post_init__(self):
        if self.state_bytes < 0 or self.field_bytes_base < 0:
            raise ValueError("byte volumes must be >= 0")

    @classmethod
    def from_shape(cls, shape: GridShape) -> "VolumeModel":
        return cls(state_bytes=shape.state_bytes, field_bytes_base=shape.field_bytes)


def alltoall_volume(vm: VolumeModel, plan: CommPlan) -> float:
    """Bytes each rank sends per transpose step.

    state/total * (n1-1)/n1: independent of how n1 and n2 trade off at
    fixed total ranks, up to the self-share correction, and 0 at n1=1.
    """
    return vm.state_bytes / plan.total_ranks * (plan.n1 - 1) / plan.n1


def allreduce_volume(vm: VolumeModel, plan: CommPlan) -> float:
    """Bytes each rank sends per reduce step (ring model).

    The reduced buffer grows linearly with n2 from field_bytes_base, so
    the per-rank ring traffic is base * n2/total * 2(n2-1)/n2.
    """
    return vm.field_bytes_base * plan.n2 / plan.total_ranks * 2 * (plan.n2 - 1) / plan.n2


@dataclass(frozen=True)
class _Layout:
    u: int        # active ranks per node
    k: int        # nodes each dim1 group is striped across
    c1: int       # dim1 ranks per node within a group
    q: int        # dim1 groups stacked per node band


def _layout(plan: CommPlan, topo: MachineTopology) -> _Layout:
    total = plan.total_ranks
    u = plan.ranks_per_node if plan.ranks_per_node is not None else min(total, topo.ranks_per_node)
    if u > topo.ranks_per_node:
        raise ValueError(f"{u} ranks per node exceeds node capacity {topo.ranks_per_node}")
    k = plan.spread_nodes
    c1 = -(-plan.n1 // k)
    q = u // c1
    if q < 1:
        raise ValueError(
            f"dim1 group of {plan.n1} over {k} node(s) needs {c1} slots per node "
            f"but only {u} are active"
        )
    return _Layout(u=u, k=k, c1=c1, q=q)


def _pair_class_fractions(plan: CommPlan, topo: MachineTopology, kind: str):
    """Exact (same_gpu, same_node, cross_node) traffic fractions.

    Counted from the block layout: rank (i, j) of the n1 x n2 grid sits
    on node (j//q)*k + i//c1, slot (j%q)*c1 + i%c1, GPU slot % gpus.
    Alltoall pairs every rank with its whole dim1 group; allreduce
    traffic follows the dim2 ring edges j -> j+1 (mod n2).
    """
    lay = _layout(plan, topo)
    g = topo.gpus_per_node
    if kind == "alltoall":
        if plan.n1 == 1:
            return 0.0, 0.0, 0.0
        i = np.arange(plan.n1)
        band = i // lay.c1
        col = i % lay.c1
        same_node = band[:, None] == band[None, :]
        same_gpu = same_node & ((col[:, None] - col[None, :]) % g == 0)
        off_diag = ~np.eye(plan.n1, dtype=bool)
        pairs = plan.n1 * (plan.n1 - 1)
        f_sib = np.count_nonzero(same_gpu & off_diag) / pairs
        f_node = np.count_nonzero(same_node & off_diag) / pairs - f_sib
        return f_sib, f_node, 1.0 - f_sib - f_node
    if kind == "allreduce":
        if plan.n2 == 1:
            return 0.0, 0.0, 0.0
        i = np.arange(plan.n1)[:, None]
        j = np.arange(plan.n2)[None, :]
        jn = (j + 1) % plan.n2
        node = (j // lay.q) * lay.k + i // lay.c1
        node_n = (jn // lay.q) * lay.k + i // lay.c1
        gpu = ((j % lay.q) * lay.c1 + i % lay.c1) % g
        gpu_n = ((jn % lay.q) * lay.c1 + i % lay.c1) % g
        same_node = node == node_n
        same_gpu = same_node & (gpu == gpu_n)
        edges = plan.n1 * plan.n2
        f_sib = np.count_nonzero(same_gpu) / edges
        f_node = np.count_nonzero(same_node) / edges - f_sib
        return f_sib, f_node, 1.0 - f_sib - f_node
    raise ValueError(f"kind must be 'alltoall' or 'allreduce', got {kind!r}")


def collective_time(kind: str, bytes_per_rank: float, plan: CommPlan, topo: MachineTopology) -> float:
    """Predicted seconds for one collective step.

    Same-GPU traffic is free; the same-node share moves at the rank's
    slice of the intra fabric; the cross-node share at the slower of
    that slice and the rank's NIC share (contention-divided on a shared
    bus).  A shared bus additionally pays the per-message latency
    penalty on cross-node messages.  Nothing to send costs 0.0 exactly.
    """
    if kind not in ("alltoall", "allreduce"):
        raise ValueError(f"kind must be 'alltoall' or 'allreduce', got {kind!r}")
    if bytes_per_rank < 0:
        raise ValueError("bytes_per_rank must be >= 0")
    group = plan.n1 if kind == "alltoall" else plan.n2
    if bytes_per_rank == 0 or group == 1:
        return 0.0
    _, f_node, f_inter = _pair_class_fractions(plan, topo, kind)
    lay = _layout(plan, topo)
    bw_intra = topo.intra_aggregate_gbps * GB / lay.u
    bw_nic = topo.nic_pool_gbps * GB / lay.u
    if topo.nic_layout == "shared_bus":
        bw_nic /= topo.shared_bus_contention
    bw_inter = min(bw_intra, bw_nic)
    seconds = bytes_per_rank * (f_node / bw_intra + f_inter / bw_inter)
    if topo.nic_layout == "shared_bus":
        messages = group - 1 if kind == "alltoall" else 2 * math.ceil(math.log2(group))
        seconds += topo.shared_bus_latency_penalty * messages * f_inter
    return seconds


def _divisors(n: int) -> list[int]:
    small = [d for d in range(1, int(math.isqrt(n)) + 1) if n % d == 0]
    return sorted({d for s in small for d in (s, n // s)})


def plan_decomposition(vm: VolumeModel, total_ranks: int, nodes: int, topo: MachineTopology) -> CommPlan:
    """Cheapest (n1, n2, placement) split of total_ranks over the nodes.

    Enumerates every factor pair and every feasible placement under a
    balanced fill of ceil(total/nodes) ranks per node, scoring each by
    predicted alltoall + allreduce seconds.  Ties prefer larger n1, then
    intra-node placement, then narrower spreads.
    """
    if total_ranks < 1 or nodes < 1:
        raise ValueError("total_ranks and nodes must be >= 1")
    if total_ranks > nodes * topo.ranks_per_node:
        raise ValueError(
            f"{total_ranks} ranks exceed {nodes} node(s) x {topo.ranks_per_node} ranks/node"
        )
    u = -(-total_ranks // nodes)
    candidates = []
    for n1 in _divisors(total_ranks):
        n2 = total_ranks // n1
        if n1 <= u and -(-n2 // (u // n1)) <= nodes:
            candidates.append(CommPlan(n1, n2, "dim1_intra_node", ranks_per_node=u))
        for k in range(2, min(n1, nodes) + 1):
            c1 = -(-n1 // k)
            q = u // c1
            if q >= 1 and -(-n2 // q) * k <= nodes:
                candidates.append(CommPlan(n1, n2, "dim1_spread", spread_nodes=k, ranks_per_node=u))
    if not candidates:
        raise ValueError(f"no feasible decomposition of {total_ranks} ranks on {nodes} node(s)")

    def score(plan: CommPlan):
        t = collective_time("alltoall", alltoall_volume(vm, plan), plan, topo) \
            + collective_time("allreduce", allreduce_volume(vm, plan), plan, topo)
        return (t, -plan.n1, 0 if plan.placement == "dim1_intra_node" else 1, plan.spread_nodes)

    return min(candidates, key=score)


@dataclass(frozen=True)
class CommPrediction:
    dimension: str
    kind: str
    bytes_per_rank: float
    seconds: float


def predict_report(case: GridShape, topo: MachineTopology, plan: CommPlan) -> list[CommPrediction]:
    """Per-dimension predicted volumes and seconds for one case.

    Row seconds sum to the total predicted communication time per step
    pair; a zero-volume case predicts zero everywhere.
    """
    vm = VolumeModel.from_shape(case)
    v1 = alltoall_volume(vm, plan)
    v2 = allreduce_volume(vm, plan)
    return [
        CommPrediction("dim1", "alltoall", v1, collective_time("alltoall", v1, plan, topo)),
        CommPrediction("dim2", "allreduce", v2, collective_time("allreduce", v2, plan, topo)),
    ]


def natural_plan(total_ranks: int, nodes: int, topo: MachineTopology) -> CommPlan:
    """The conventional split: dim1 fills each node, dim2 spans nodes."""
    u = -(-total_ranks // nodes)
    if u > topo.ranks_per_node or total_ranks % u:
        raise ValueError(f"{total_ranks} ranks do not fill {nodes} node(s) evenly")
    return CommPlan(u, total_ranks // u, "dim1_intra_node", ranks_per_node=u)


def zeroed(topo: MachineTopology) -> MachineTopology:
    """Copy of a topology with calibration knobs neutralized.

    With no latency penalty and unit contention, shared_bus and per_gpu
    layouts with equal bandwidth figures predict identical times.
    """
    return replace(topo, shared_bus_latency_penalty=0.0, shared_bus_contention=1.0)
