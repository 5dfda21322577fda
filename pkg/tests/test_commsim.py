import dataclasses

import numpy as np
import pytest

from gyroproxy.commsim import (
    GB,
    CommPlan,
    MachineTopology,
    VolumeModel,
    allreduce_volume,
    alltoall_volume,
    builtin_topology,
    collective_time,
    load_topology,
    natural_plan,
    plan_decomposition,
    predict_report,
    zeroed,
)
from gyroproxy.grid import make_case

PERL = builtin_topology("perlmutter_like")
FRONT = builtin_topology("frontier_like")

VOLUME_SWEEP = np.logspace(6, 10, 9)  # 1 MB .. 10 GB

# natural 24-rank / 6-node split, identical occupancy on both machines
PLAN_S = natural_plan(24, 6, PERL)
PLAN_D = CommPlan(4, 6, "dim1_intra_node", ranks_per_node=4)


# ---------------------------------------------------------------------------
# topology descriptions


def test_builtin_shared_bus_machine():
    assert PERL.nic_layout == "shared_bus"
    assert PERL.ranks_per_node == 4
    assert PERL.intra_aggregate_gbps == 100.0
    assert PERL.nic_pool_gbps == 100.0


def test_builtin_dedicated_nic_machine():
    assert FRONT.nic_layout == "per_gpu"
    assert FRONT.processes_per_gpu == 2
    assert FRONT.ranks_per_node == 8
    assert FRONT.intra_aggregate_gbps == 100.0
    assert FRONT.nic_pool_gbps == 100.0


def test_builtin_unknown_name():
    with pytest.raises(ValueError, match="perlmutter_like"):
        builtin_topology("summit")


@pytest.mark.parametrize("field, value", [
    ("gpus_per_node", 0),
    ("intra_node_links", 0),
    ("intra_link_gbps", 0.0),
    ("nic_layout", "pcie"),
    ("nics_per_node", 0),
    ("nic_bandwidth", -1.0),
    ("processes_per_gpu", 0),
    ("shared_bus_latency_penalty", -1e-6),
    ("shared_bus_contention", 0.5),
])
def test_topology_field_validation(field, value):
    with pytest.raises(ValueError):
        dataclasses.replace(PERL, **{field: value})


def test_load_topology_roundtrip(tmp_path):
    path = tmp_path / "machine.topo"
    path.write_text(
        "# four-GPU node, NICs on a shared bus\n"
        "name = testbox\n"
        "gpus_per_node = 4\n"
        "intra_node_links = 4\n"
        "intra_link_gbps = 25.0\n"
        "nic_layout = shared_bus  # trailing comment\n"
        "nics_per_node = 4\n"
        "nic_bandwidth = 25.0\n"
    )
    topo = load_topology(path)
    assert topo == dataclasses.replace(PERL, name="testbox")


def test_load_topology_name_defaults_to_path(tmp_path):
    path = tmp_path / "m.topo"
    path.write_text(
        "gpus_per_node=2\nintra_node_links=1\nintra_link_gbps=10\n"
        "nic_layout=per_gpu\nnics_per_node=2\nnic_bandwidth=10\n"
    )
    assert load_topology(path).name == str(path)


def test_load_topology_errors(tmp_path):
    missing = tmp_path / "missing.topo"
    missing.write_text("gpus_per_node=4\n")
    with pytest.raises(ValueError, match="missing"):
        load_topology(missing)

    unknown = tmp_path / "unknown.topo"
    unknown.write_text("gpus=4\n")
    with pytest.raises(ValueError, match="unknown"):
        load_topology(unknown)

    malformed = tmp_path / "bad.topo"
    malformed.write_text("gpus_per_node 4\n")
    with pytest.raises(ValueError, match="key=value"):
        load_topology(malformed)


# ---------------------------------------------------------------------------
# plans and volumes


def test_plan_validation():
    with pytest.raises(ValueError):
        CommPlan(0, 4, "dim1_intra_node")
    with pytest.raises(ValueError):
        CommPlan(2, 2, "dim1_packed")
    with pytest.raises(ValueError):
        CommPlan(2, 2, "dim1_intra_node", spread_nodes=2)
    with pytest.raises(ValueError):
        CommPlan(2, 2, "dim1_spread", spread_nodes=1)
    with pytest.raises(ValueError):
        CommPlan(2, 2, "dim1_intra_node", ranks_per_node=0)
    assert CommPlan(3, 5, "dim1_intra_node").total_ranks == 15


def test_volume_model_validation():
    with pytest.raises(ValueError):
        VolumeModel(-1, 0)
    vm = VolumeModel.from_shape(make_case("sh03b-desk"))
    assert vm.state_bytes == make_case("sh03b-desk").state_bytes
    assert vm.field_bytes_base == make_case("sh03b-desk").field_bytes


def test_alltoall_volume_closed_form():
    vm = VolumeModel(96 * 10**9, 0)
    plan = CommPlan(8, 3, "dim1_intra_node")
    assert alltoall_volume(vm, plan) == pytest.approx(3.5e9)
    assert alltoall_volume(vm, CommPlan(1, 24, "dim1_intra_node")) == 0.0


def test_allreduce_volume_closed_form():
    vm = VolumeModel(0, 8 * 10**6)
    plan = CommPlan(4, 6, "dim1_intra_node")
    assert allreduce_volume(vm, plan) == pytest.approx(1e7 / 3)
    assert allreduce_volume(vm, CommPlan(24, 1, "dim1_intra_node")) == 0.0


def test_allreduce_volume_grows_with_group_size():
    # at fixed total ranks the reduce buffer grows with n2
    vm = VolumeModel(0, 10**6)
    volumes = [
        allreduce_volume(vm, CommPlan(24 // n2, n2, "dim1_intra_node"))
        for n2 in (1, 2, 4, 8, 24)
    ]
    assert volumes == sorted(volumes)
    assert volumes[0] == 0.0


# ---------------------------------------------------------------------------
# collective timing


def test_zero_work_costs_exactly_zero():
    plan = CommPlan(4, 6, "dim1_intra_node")
    assert collective_time("alltoall", 0.0, plan, PERL) == 0.0
    assert collective_time("allreduce", 0.0, plan, FRONT) == 0.0
    solo = CommPlan(1, 1, "dim1_intra_node")
    assert collective_time("alltoall", 1e9, solo, PERL) == 0.0
    assert collective_time("allreduce", 1e9, solo, PERL) == 0.0


def test_collective_time_input_validation():
    plan = CommPlan(4, 6, "dim1_intra_node")
    with pytest.raises(ValueError):
        collective_time("gather", 1e6, plan, PERL)
    with pytest.raises(ValueError):
        collective_time("alltoall", -1.0, plan, PERL)


def test_plan_must_fit_node_capacity():
    plan = CommPlan(8, 1, "dim1_intra_node", ranks_per_node=8)
    with pytest.raises(ValueError, match="capacity"):
        collective_time("alltoall", 1e6, plan, PERL)


def test_intra_node_alltoall_exact_share():
    # four ranks fill one node; each gets a quarter of the 100 GB/s fabric
    t = collective_time("alltoall", 1e9, PLAN_S, PERL)
    assert t == pytest.approx(1e9 / (25 * GB), rel=1e-12)


def test_same_gpu_traffic_is_free():
    topo = MachineTopology(
        name="one-gpu", gpus_per_node=1, intra_node_links=1, intra_link_gbps=10.0,
        nic_layout="shared_bus", nics_per_node=1, nic_bandwidth=10.0, processes_per_gpu=4,
    )
    plan = CommPlan(4, 1, "dim1_intra_node")
    assert collective_time("alltoall", 1e9, plan, topo) == 0.0


def test_cross_node_pair_rate():
    # two ranks on two nodes: all traffic crosses the wire
    plan = CommPlan(2, 1, "dim1_spread", spread_nodes=2, ranks_per_node=1)
    t_front = collective_time("alltoall", 1e9, plan, FRONT)
    assert t_front == pytest.approx(1e9 / (100 * GB), rel=1e-12)
    t_perl = collective_time("alltoall", 1e9, plan, PERL)
    want = 1e9 / (100 * GB / 1.5) + PERL.shared_bus_latency_penalty
    assert t_perl == pytest.approx(want, rel=1e-12)


def test_time_linear_in_bytes_without_latency():
    plan = CommPlan(4, 6, "dim1_intra_node", ranks_per_node=4)
    t1 = collective_time("allreduce", 1e8, plan, FRONT)
    t2 = collective_time("allreduce", 2e8, plan, FRONT)
    assert t2 == pytest.approx(2 * t1, rel=1e-12)


def test_time_monotone_in_bytes():
    for kind in ("alltoall", "allreduce"):
        times = [collective_time(kind, v, PLAN_S, PERL) for v in VOLUME_SWEEP]
        assert times == sorted(times)
        assert times[0] > 0.0


def test_neutralized_shared_bus_equals_dedicated():
    """With latency and contention switched off only bandwidths matter."""
    flat = zeroed(PERL)
    dedicated = dataclasses.replace(flat, nic_layout="per_gpu")
    for kind, plan in [("alltoall", PLAN_S), ("allreduce", PLAN_S)]:
        for v in (1e6, 1e9):
            assert collective_time(kind, v, plan, flat) == \
                collective_time(kind, v, plan, dedicated)


def test_intra_alltoall_equal_across_machines():
    for v in VOLUME_SWEEP:
        ts = collective_time("alltoall", v, PLAN_S, PERL)
        td = collective_time("alltoall", v, PLAN_D, FRONT)
        assert abs(ts / td - 1.0) <= 0.01


def test_shared_bus_hurts_allreduce_more_than_alltoall():
    for v in VOLUME_SWEEP:
        r_a2a = collective_time("alltoall", v, PLAN_S, PERL) \
            / collective_time("alltoall", v, PLAN_D, FRONT)
        r_ar = collective_time("allreduce", v, PLAN_S, PERL) \
            / collective_time("allreduce", v, PLAN_D, FRONT)
        assert r_ar > r_a2a
        # cross-node reduce pays contention (1.5x) plus per-message latency
        assert 1.5 <= r_ar < 2.0


def test_sibling_share_discounts_cross_node_volume():
    # 8 ranks per frontier node: each rank has one same-GPU peer, and the
    # higher occupancy exactly cancels against the thinner bandwidth slice
    state = 10**10
    v48 = alltoall_volume(VolumeModel(state, 0), natural_plan(48, 6, FRONT))
    t48 = collective_time("alltoall", v48, natural_plan(48, 6, FRONT), FRONT)
    assert t48 == pytest.approx(state / (800 * GB), rel=1e-12)


# ---------------------------------------------------------------------------
# planner


def test_planner_keeps_transpose_inside_nodes():
    vm = VolumeModel.from_shape(make_case("sh03b"))
    plan = plan_decomposition(vm, 24, 6, PERL)
    assert plan.placement == "dim1_intra_node"
    assert plan.total_ranks == 24
    assert plan.ranks_per_node == 4


def test_planner_spreads_when_transpose_dominates():
    vm = VolumeModel.from_shape(make_case("em04b"))
    plan = plan_decomposition(vm, 288, 72, FRONT)
    assert plan == CommPlan(288, 1, "dim1_spread", spread_nodes=72, ranks_per_node=4)


def test_planner_handles_prime_rank_counts():
    vm = VolumeModel.from_shape(make_case("sh03b-desk"))
    plan = plan_decomposition(vm, 7, 2, PERL)
    assert plan.total_ranks == 7
    assert {plan.n1, plan.n2} <= {1, 7}


def test_planner_tie_break_prefers_larger_n1():
    # zero volume makes every candidate free; the tie break decides
    plan = plan_decomposition(VolumeModel(0, 0), 4, 2, PERL)
    assert plan.n1 == 4


def test_planner_rejects_impossible_requests():
    vm = VolumeModel(10**9, 10**6)
    with pytest.raises(ValueError):
        plan_decomposition(vm, 25, 6, PERL)  # over capacity
    with pytest.raises(ValueError):
        plan_decomposition(vm, 0, 6, PERL)


def test_natural_plan_requires_even_fill():
    assert natural_plan(24, 6, PERL) == CommPlan(4, 6, "dim1_intra_node", ranks_per_node=4)
    with pytest.raises(ValueError):
        natural_plan(23, 6, PERL)
    with pytest.raises(ValueError):
        natural_plan(48, 6, PERL)  # 8 per node exceeds the 4-slot capacity


# ---------------------------------------------------------------------------
# reports


def test_predict_report_rows():
    case = make_case("sh03b")
    rows = predict_report(case, PERL, PLAN_S)
    assert [(r.dimension, r.kind) for r in rows] == [("dim1", "alltoall"), ("dim2", "allreduce")]
    assert all(r.seconds > 0.0 for r in rows)
    assert rows[0].bytes_per_rank == pytest.approx(case.state_bytes / 32)


def test_predict_report_natural_volume_identity():
    # at natural volumes the transpose row reduces to state / 800 GB/s on
    # both reference machines
    case = make_case("sh03b")
    for topo in (PERL, FRONT):
        plan = natural_plan(24, 6, topo)
        row = predict_report(case, topo, plan)[0]
        assert row.seconds == pytest.approx(case.state_bytes / (800 * GB), rel=1e-12)


def test_predict_report_degenerate_split_is_free():
    rows = predict_report(make_case("sh03b-desk"), PERL, CommPlan(1, 1, "dim1_intra_node"))
    assert all(r.seconds == 0.0 and r.bytes_per_rank == 0.0 for r in rows)
