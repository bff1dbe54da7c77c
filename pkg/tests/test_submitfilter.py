import copy

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from niasim.partitions import (
    default_partition_specs,
    default_qos_map,
    resolve_partitions,
)
from niasim.submitfilter import (
    ACCEPT,
    REJECT,
    WARN,
    Verdict,
    explain_rules,
    validate_submission,
)
from niasim.topology import build_topology
from niasim.workload import Job


@pytest.fixture(scope="module")
def partitions():
    topo = build_topology()
    return resolve_partitions(topo, default_partition_specs())[0]


@pytest.fixture(scope="module")
def qos_map():
    return default_qos_map()


def make_job(**kw):
    base = dict(id=1, user="alice", group="astro", partition="compute",
                nodes_requested=10, walltime_requested=3600,
                actual_runtime=1800)
    base.update(kw)
    return Job(**base)


class TestGoldenVerdicts:
    def test_clean_submission_accepted(self, partitions, qos_map):
        v = validate_submission(make_job(), partitions, qos_map, allocated=True)
        assert v.status == ACCEPT
        assert v.exit_code == 0
        assert v.reasons == () and v.warnings == ()
        assert str(v) == "accept"

    def test_too_many_nodes(self, partitions, qos_map):
        v = validate_submission(make_job(nodes_requested=1001), partitions,
                                qos_map, allocated=True)
        assert v.status == REJECT
        assert v.exit_code == 2
        assert v.reasons == (
            "compute: 1001 nodes requested, limit is 1000",
        )

    def test_walltime_too_short(self, partitions, qos_map):
        v = validate_submission(make_job(walltime_requested=600,
                                         actual_runtime=600),
                                partitions, qos_map, allocated=True)
        assert v.reasons == (
            "compute: walltime 600s requested, minimum is 900s",
        )

    def test_walltime_too_long(self, partitions, qos_map):
        v = validate_submission(make_job(partition="debug",
                                         walltime_requested=7200),
                                partitions, qos_map, allocated=True)
        assert v.reasons == (
            "debug: walltime 7200s requested, limit is 3600s",
        )

    def test_unknown_partition(self, partitions, qos_map):
        v = validate_submission(make_job(partition="gpu"), partitions,
                                qos_map, allocated=True)
        assert v.reasons == ("unknown partition 'gpu'",)

    def test_home_cwd_warns_but_accepts(self, partitions, qos_map):
        v = validate_submission(make_job(submit_cwd_fs="home"), partitions,
                                qos_map, allocated=True)
        assert v.status == WARN
        assert v.exit_code == 1
        assert v.accepted
        assert "read-only on the compute nodes" in v.warnings[0]

    def test_odd_task_count_warns(self, partitions, qos_map):
        v = validate_submission(make_job(tasks_per_node=37), partitions,
                                qos_map, allocated=True)
        assert v.status == WARN
        assert "tasks_per_node is 37" in v.warnings[0]

    def test_standard_task_counts_silent(self, partitions, qos_map):
        for tpn in (40, 80):
            v = validate_submission(make_job(tasks_per_node=tpn), partitions,
                                    qos_map, allocated=True)
            assert v.status == ACCEPT

    def test_network_request_warns(self, partitions, qos_map):
        v = validate_submission(make_job(needs_network=True), partitions,
                                qos_map, allocated=True)
        assert v.status == WARN
        assert "no internet access" in v.warnings[0]

    def test_multiple_reasons_collected(self, partitions, qos_map):
        v = validate_submission(
            make_job(nodes_requested=2000, walltime_requested=90000),
            partitions, qos_map, allocated=True)
        assert len(v.reasons) == 2

    def test_warnings_survive_rejection(self, partitions, qos_map):
        v = validate_submission(
            make_job(nodes_requested=2000, submit_cwd_fs="home"),
            partitions, qos_map, allocated=True)
        assert v.status == REJECT
        assert v.warnings != ()
        rendered = str(v)
        assert rendered.startswith("reject\nerror: ")
        assert "warning: " in rendered


class TestUserCaps:
    def test_partition_cap_counts_running_jobs(self, partitions, qos_map):
        job = make_job(partition="debug")
        ok = validate_submission(job, partitions, qos_map, allocated=True,
                                 user_jobs_in_partition=0)
        full = validate_submission(job, partitions, qos_map, allocated=True,
                                   user_jobs_in_partition=1)
        assert ok.status == ACCEPT
        assert full.reasons == (
            "debug: user already has 1 job(s), limit is 1 per user",
        )

    def test_qos_submit_cap(self, partitions, qos_map):
        job = make_job()
        v = validate_submission(job, partitions, qos_map, allocated=False,
                                user_jobs_submitted=50)
        assert v.reasons == (
            "qos default: user already has 50 submitted job(s), limit is 50",
        )

    def test_qos_node_cap_only_for_unallocated(self, partitions, qos_map):
        job = make_job(nodes_requested=30)
        assert validate_submission(job, partitions, qos_map,
                                   allocated=True).status == ACCEPT
        v = validate_submission(job, partitions, qos_map, allocated=False)
        assert v.reasons == (
            "qos default: 30 nodes requested, limit is 20",
        )

    def test_unknown_qos_rejected(self, partitions, qos_map):
        v = validate_submission(make_job(qos="platinum"), partitions,
                                qos_map, allocated=True)
        assert v.reasons == ("unknown qos 'platinum'",)

    def test_explicit_qos_overrides_allocation(self, partitions, qos_map):
        job = make_job(nodes_requested=30, qos="default")
        v = validate_submission(job, partitions, qos_map, allocated=True)
        assert v.status == REJECT

    def test_no_qos_map_skips_qos_checks(self, partitions):
        job = make_job(nodes_requested=500, qos="platinum")
        v = validate_submission(job, partitions, None, allocated=False)
        assert v.status == ACCEPT


class TestRobustness:
    @settings(max_examples=200, deadline=None)
    @given(
        nodes=st.integers(-10, 5000),
        walltime=st.integers(-100, 10 ** 7),
        runtime=st.integers(-100, 10 ** 7),
        tpn=st.integers(-5, 200),
        partition=st.sampled_from(["compute", "debug", "archive-short",
                                   "gpu", "", "dragonfly1"]),
        cwd=st.sampled_from(["home", "scratch", "project", "bb", "tape", ""]),
        qos=st.sampled_from([None, "normal", "default", "bogus"]),
        allocated=st.booleans(),
        in_part=st.integers(0, 100),
        submitted=st.integers(0, 100),
    )
    def test_never_raises(self, partitions, qos_map, nodes, walltime, runtime,
                          tpn, partition, cwd, qos, allocated, in_part,
                          submitted):
        job = make_job(nodes_requested=nodes, walltime_requested=walltime,
                       actual_runtime=runtime, tasks_per_node=tpn,
                       partition=partition, submit_cwd_fs=cwd, qos=qos)
        v = validate_submission(job, partitions, qos_map, allocated=allocated,
                                user_jobs_in_partition=in_part,
                                user_jobs_submitted=submitted)
        assert isinstance(v, Verdict)
        assert v.exit_code in (0, 1, 2)
        assert (v.status == REJECT) == bool(v.reasons)

    def test_inputs_not_mutated(self, partitions, qos_map):
        job = make_job(nodes_requested=9999)
        before = copy.deepcopy(partitions)
        validate_submission(job, partitions, qos_map, allocated=True)
        assert partitions == before

    def test_same_inputs_same_verdict(self, partitions, qos_map):
        job = make_job(submit_cwd_fs="home", tasks_per_node=13)
        a = validate_submission(job, partitions, qos_map, allocated=True)
        b = validate_submission(job, partitions, qos_map, allocated=True)
        assert a == b


class TestExplainRules:
    def test_compute_summary(self, partitions, qos_map):
        text = explain_rules("compute", partitions, qos_map)
        assert "Partition compute:" in text
        assert "nodes per job: 1 to 1000" in text
        assert "walltime: 15m to 24h" in text
        assert "qos default: at most 20 nodes per job, 50 submitted jobs" in text

    def test_debug_summary(self, partitions):
        text = explain_rules("debug", partitions)
        assert "at most 1 job per user" in text
        assert "5 dedicated node(s)" in text

    def test_archive_summary(self, partitions):
        text = explain_rules("archive-long", partitions)
        assert "at most 5 jobs per user" in text
        assert "nodes are shared between jobs" in text
        assert "walltime: up to 3d" in text

    def test_unknown_partition_raises(self, partitions):
        with pytest.raises(ValueError, match="unknown partition"):
            explain_rules("gpu", partitions)
