import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from niasim.fspolicy import FileRecord
from niasim.partitions import PartitionSpec, resolve_partitions
from niasim.priority import FairShareLedger
from niasim.scheduler import (
    EventKind,
    EventQueue,
    SchedulerOptions,
    Simulation,
    default_simulation,
    run_simulation,
)
from niasim.topology import PlacementPolicy, TopologyConfig, build_topology
from niasim.workload import Job, JobPhase, WorkloadSpec, generate_workload

DAY = 86400


def small_sim(backfill="easy", placement=PlacementPolicy.ANY,
              shares=None, max_walltime=4 * DAY):
    """100-node machine with one wide-open batch partition."""
    topo = build_topology(TopologyConfig(
        wings=4, leaf_switches=16, core_switches=8, switch_ports=36,
        nodes=100, max_nodes_per_wing=432,
    ))
    partitions, archive_ids = resolve_partitions(
        topo, [PartitionSpec("batch", max_nodes=100, max_walltime=max_walltime)],
    )
    return Simulation(
        topo, partitions, archive_ids,
        ledger=FairShareLedger(shares if shares is not None else {"g": 0.5}),
        options=SchedulerOptions(backfill=backfill, placement=placement),
    )


def make_job(jid, nodes, walltime, runtime=None, submit=0, user="alice",
             group="g", partition="batch", **kw):
    return Job(id=jid, user=user, group=group, partition=partition,
               nodes_requested=nodes, walltime_requested=walltime,
               actual_runtime=runtime if runtime is not None else walltime,
               submit_time=submit, **kw)


class TestEventQueue:
    def test_same_time_kind_order(self):
        q = EventQueue()
        q.push(10, EventKind.PURGE_SCAN)
        q.push(10, EventKind.SCHEDULER_PASS)
        q.push(10, EventKind.JOB_ARRIVAL, 1)
        q.push(10, EventKind.JOB_END, 2)
        kinds = [q.pop().kind for _ in range(4)]
        assert kinds == [EventKind.JOB_END, EventKind.JOB_ARRIVAL,
                         EventKind.SCHEDULER_PASS, EventKind.PURGE_SCAN]

    def test_insertion_order_within_kind(self):
        q = EventQueue()
        for payload in (5, 3, 9):
            q.push(7, EventKind.JOB_ARRIVAL, payload)
        assert [q.pop().payload for _ in range(3)] == [5, 3, 9]

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            EventQueue().push(-1, EventKind.JOB_END)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 50), st.sampled_from(list(EventKind))),
                    max_size=30))
    def test_pop_order_is_sorted(self, items):
        q = EventQueue()
        for t, kind in items:
            q.push(t, kind)
        popped = [q.pop() for _ in range(len(q))]
        keys = [(e.time, int(e.kind)) for e in popped]
        assert keys == sorted(keys)


class TestSingleJob:
    def test_job_runs_to_completion(self):
        sim = small_sim()
        result = run_simulation([make_job(1, nodes=10, walltime=3600,
                                          runtime=1800, submit=100)], sim)
        rec = result.records[1]
        assert rec.phase is JobPhase.COMPLETED
        assert rec.start_time == 100
        assert rec.end_time == 100 + 1800
        assert rec.wait_time == 0
        assert len(rec.nodes) == 10

    def test_walltime_truncates_runtime(self):
        sim = small_sim()
        result = run_simulation([make_job(1, nodes=1, walltime=600,
                                          runtime=5000)], sim)
        rec = result.records[1]
        assert rec.end_time == rec.start_time + 600

    def test_usage_recorded_at_end(self):
        sim = small_sim()
        run_simulation([make_job(1, nodes=10, walltime=3600, runtime=1800)], sim)
        assert sim.ledger.window_usage("g", 1800) == 10 * 1800

    def test_event_log_lines(self):
        sim = small_sim()
        result = run_simulation([make_job(1, nodes=10, walltime=3600,
                                          runtime=1800, submit=100)], sim)
        text = "\n".join(result.events)
        assert "arrival job=1 user=alice group=g partition=batch " \
               "nodes=10 walltime=3600" in text
        assert "start job=1 nodes=10 span=" in text
        assert "end job=1" in text

    def test_fabric_locality_recorded(self):
        sim = small_sim(placement=PlacementPolicy.PACK_BY_WING)
        result = run_simulation([make_job(1, nodes=5, walltime=3600)], sim)
        rec = result.records[1]
        assert rec.wing_span == 1
        assert rec.blocking == 1.0
        assert rec.max_hops is not None

    def test_rejected_job_never_runs(self):
        sim = small_sim()
        result = run_simulation([make_job(1, nodes=101, walltime=3600)], sim)
        rec = result.records[1]
        assert rec.phase is JobPhase.REJECTED
        assert rec.start_time is None
        assert any("101 nodes requested" in r for r in rec.reject_reasons)
        assert any(line.split(maxsplit=1)[1].startswith("reject job=1")
                   for line in result.events)


class TestDeterminism:
    def test_identical_runs(self):
        spec = WorkloadSpec(seed=99, partition="batch",
                            size_classes=((1, 20, 1.0),))
        jobs = generate_workload(spec, 6 * 3600)
        r1 = run_simulation(jobs, small_sim(shares={f"g{i}": 0.09 for i in range(10)}))
        r2 = run_simulation(jobs, small_sim(shares={f"g{i}": 0.09 for i in range(10)}))
        assert r1.events == r2.events
        assert {jid: (rec.start_time, rec.end_time, rec.nodes)
                for jid, rec in r1.records.items()} == \
               {jid: (rec.start_time, rec.end_time, rec.nodes)
                for jid, rec in r2.records.items()}

    def test_duplicate_job_id_rejected_at_submit(self):
        sim = small_sim()
        sim.submit([make_job(1, 1, 3600)])
        with pytest.raises(ValueError, match="duplicate job id"):
            sim.submit([make_job(1, 1, 3600)])


class TestBackfill:
    def scenario(self, backfill):
        """A 60-node hour-long job, an 80-node blocker, a short 30-node
        job that fits the hole, and a long 30-node job that does not."""
        sim = small_sim(backfill=backfill)
        jobs = [
            make_job(1, nodes=60, walltime=3600, submit=0),
            make_job(2, nodes=80, walltime=7200, submit=1),
            make_job(3, nodes=30, walltime=1800, submit=2),
            make_job(4, nodes=30, walltime=7200, submit=3),
        ]
        return run_simulation(jobs, sim)

    def test_easy_backfills_short_job(self):
        result = self.scenario("easy")
        starts = {jid: result.records[jid].start_time for jid in (1, 2, 3, 4)}
        assert starts[1] == 0
        assert starts[3] == 2          # fits before the blocker's shadow
        assert starts[2] == 3600       # reserved start survives the backfill
        assert starts[4] == 10800      # too long for the hole, waits out B

    def test_fcfs_keeps_strict_order(self):
        result = self.scenario("fcfs")
        starts = {jid: result.records[jid].start_time for jid in (1, 2, 3, 4)}
        assert starts[1] == 0
        assert starts[2] == 3600
        assert starts[3] == 10800      # no backfill: waits behind the blocker
        assert starts[4] == 10800

    def test_reservation_logged(self):
        result = self.scenario("easy")
        reserves = [line for line in result.events if " reserve " in f" {line} "
                    or "reserve job=" in line]
        assert any("reserve job=2 shadow=3600" in line for line in reserves)

    def test_backfill_never_delays_reserved_job(self):
        easy = self.scenario("easy")
        fcfs = self.scenario("fcfs")
        assert easy.records[2].start_time == fcfs.records[2].start_time


class TestUserCaps:
    def test_debug_second_job_waits_for_first(self):
        sim = default_simulation(shares={"astro": 0.5})
        jobs = [
            make_job(1, nodes=1, walltime=600, runtime=600, submit=0,
                     group="astro", partition="debug"),
            make_job(2, nodes=1, walltime=600, runtime=600, submit=0,
                     group="astro", partition="debug"),
        ]
        result = run_simulation(jobs, sim)
        assert result.records[1].start_time == 0
        assert result.records[2].start_time == 600

    def test_cap_applies_per_user(self):
        sim = default_simulation(shares={"astro": 0.5})
        jobs = [
            make_job(1, nodes=1, walltime=600, submit=0, user="alice",
                     group="astro", partition="debug"),
            make_job(2, nodes=1, walltime=600, submit=0, user="bob",
                     group="astro", partition="debug"),
        ]
        result = run_simulation(jobs, sim)
        assert result.records[1].start_time == 0
        assert result.records[2].start_time == 0

    def test_debug_uses_dedicated_nodes_first(self):
        sim = default_simulation(shares={"astro": 0.5})
        result = run_simulation(
            [make_job(1, nodes=3, walltime=600, group="astro",
                      partition="debug")], sim)
        assert result.records[1].nodes <= frozenset(range(1495, 1500))

    def test_compute_jobs_avoid_debug_nodes(self):
        # two jobs exhaust every compute-eligible node, so between them
        # they prove the dedicated debug nodes are never touched
        sim = default_simulation(shares={"astro": 0.5})
        jobs = [make_job(1, nodes=1000, walltime=3600, group="astro",
                         partition="compute"),
                make_job(2, nodes=495, walltime=3600, group="astro",
                         partition="compute", user="bob")]
        result = run_simulation(jobs, sim)
        assert result.records[1].phase is JobPhase.COMPLETED
        assert result.records[2].phase is JobPhase.COMPLETED
        assert result.records[1].start_time == 0
        assert result.records[2].start_time == 0
        used = result.records[1].nodes | result.records[2].nodes
        assert used == frozenset(range(1495))

    def test_qos_submit_cap_rejects_fifty_first(self):
        sim = default_simulation()   # no allocations: default QoS applies
        jobs = [make_job(i, nodes=1, walltime=900, runtime=100, submit=0,
                         group="walkin", partition="compute")
                for i in range(1, 52)]
        result = run_simulation(jobs, sim)
        phases = [result.records[i].phase for i in range(1, 52)]
        assert phases[:50] == [JobPhase.COMPLETED] * 50
        assert phases[50] is JobPhase.REJECTED
        assert any("limit is 50" in r for r in result.records[51].reject_reasons)


class TestArchivePool:
    def archive_sim(self):
        return default_simulation(shares={"astro": 0.5})

    def test_movers_balance_by_load_then_id(self):
        sim = self.archive_sim()
        jobs = [make_job(i, nodes=1, walltime=600, submit=0, group="astro",
                         partition="archive-short") for i in (1, 2, 3)]
        result = run_simulation(jobs, sim)
        assert result.records[1].nodes == frozenset({1500})
        assert result.records[2].nodes == frozenset({1501})
        assert result.records[3].nodes == frozenset({1500})

    def test_archive_jobs_never_resource_block(self):
        sim = self.archive_sim()
        jobs = [make_job(i, nodes=1, walltime=600, submit=0, user=f"u{i}",
                         group="astro", partition="archive-short")
                for i in range(1, 11)]
        result = run_simulation(jobs, sim)
        assert all(result.records[i].start_time == 0 for i in range(1, 11))

    def test_archive_user_cap_enforced(self):
        sim = self.archive_sim()
        jobs = [make_job(i, nodes=1, walltime=100, submit=0, group="astro",
                         partition="archive-long") for i in range(1, 8)]
        result = run_simulation(jobs, sim)
        starts = sorted(result.records[i].start_time for i in range(1, 8))
        assert starts == [0, 0, 0, 0, 0, 100, 100]

    def test_archive_outside_fabric_accounting(self):
        sim = self.archive_sim()
        result = run_simulation(
            [make_job(1, nodes=1, walltime=600, group="astro",
                      partition="archive-short")], sim)
        rec = result.records[1]
        assert rec.wing_span is None and rec.blocking is None
        assert sim.ledger.window_usage("astro", 600) == 0.0
        assert "pool=archive" in "\n".join(result.events)


class TestBurstBuffer:
    def test_job_dir_created_and_reclaimed(self):
        sim = small_sim()
        job = make_job(1, nodes=1, walltime=3600, runtime=1800,
                       submit_cwd_fs="bb")
        sim.submit([job])
        sim.run(until=100)           # job started, still running
        assert 1 in sim.bb.job_dirs
        sim.run()
        assert 1 not in sim.bb.job_dirs
        assert sim.bb.usage == 0

    def test_burst_buffer_can_be_disabled(self):
        topo = build_topology(TopologyConfig(
            wings=4, leaf_switches=16, core_switches=8, switch_ports=36,
            nodes=100, max_nodes_per_wing=432))
        partitions, archive_ids = resolve_partitions(
            topo, [PartitionSpec("batch", max_nodes=100, max_walltime=DAY)])
        sim = Simulation(topo, partitions, archive_ids,
                         ledger=FairShareLedger({"g": 0.5}),
                         options=SchedulerOptions(use_burst_buffer=False))
        result = run_simulation([make_job(1, nodes=1, walltime=3600,
                                          submit_cwd_fs="bb")], sim)
        assert sim.bb is None
        assert result.records[1].phase is JobPhase.COMPLETED


class TestPurgeIntegration:
    def test_stale_files_removed_on_schedule(self):
        sim = small_sim()
        sim.options.purge_interval = 3600
        stale = FileRecord("/scratch/a/g/alice/old.dat", "alice", "g",
                           size=100, atime=-(60 * DAY), fs="scratch")
        fresh = FileRecord("/scratch/a/g/alice/new.dat", "alice", "g",
                           size=100, atime=0, fs="scratch")
        result = run_simulation(
            [make_job(1, nodes=1, walltime=7200)], sim,
            files=[stale, fresh])
        assert result.purged == [stale]
        assert sim.files == [fresh]
        assert any("purge files=1" in line for line in result.events)

    def test_no_files_no_purge_events(self):
        sim = small_sim()
        result = run_simulation([make_job(1, nodes=1, walltime=3600)], sim)
        assert not any("purge" in line for line in result.events)


class TestRunControl:
    def test_until_stops_the_clock(self):
        sim = small_sim()
        jobs = [make_job(1, nodes=1, walltime=3600, submit=0),
                make_job(2, nodes=1, walltime=3600, submit=5000)]
        result = sim_run_with(sim, jobs, until=4000)
        assert result.horizon == 4000
        assert result.records[1].phase is JobPhase.COMPLETED
        assert result.records[2].phase is JobPhase.SUBMITTED

    def test_horizon_is_last_event_when_unbounded(self):
        sim = small_sim()
        result = run_simulation([make_job(1, nodes=1, walltime=3600,
                                          runtime=1234, submit=10)], sim)
        assert result.horizon == 10 + 1234


def sim_run_with(sim, jobs, until=None):
    sim.submit(jobs)
    return sim.run(until=until)


class TestInvariants:
    @settings(max_examples=20, deadline=None)
    @given(st.lists(
        st.tuples(
            st.integers(1, 40),       # nodes
            st.integers(60, 7200),    # walltime
            st.integers(1, 7200),     # runtime
            st.integers(0, 10000),    # submit
        ),
        min_size=1, max_size=15,
    ))
    def test_exclusive_nodes_never_overlap(self, raws):
        sim = small_sim()
        jobs = [
            make_job(i + 1, nodes=n, walltime=w, runtime=min(r, w), submit=s)
            for i, (n, w, r, s) in enumerate(raws)
        ]
        jobs.sort(key=lambda j: (j.submit_time, j.id))
        result = run_simulation(jobs, sim)
        spans = [
            (rec.start_time, rec.end_time, rec.nodes)
            for rec in result.records.values()
            if rec.phase is JobPhase.COMPLETED
        ]
        for i, (s1, e1, n1) in enumerate(spans):
            assert s1 <= e1
            for s2, e2, n2 in spans[i + 1:]:
                if s1 < e2 and s2 < e1:    # time overlap
                    assert not (n1 & n2)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(
        st.tuples(st.integers(1, 40), st.integers(60, 7200),
                  st.integers(1, 9000), st.integers(0, 10000)),
        min_size=1, max_size=15,
    ))
    def test_lifecycle_arithmetic(self, raws):
        sim = small_sim()
        jobs = [make_job(i + 1, nodes=n, walltime=w, runtime=r, submit=s)
                for i, (n, w, r, s) in enumerate(raws)]
        jobs.sort(key=lambda j: (j.submit_time, j.id))
        result = run_simulation(jobs, sim)
        for rec in result.records.values():
            assert rec.phase is JobPhase.COMPLETED
            assert rec.start_time >= rec.job.submit_time
            expected = min(rec.job.actual_runtime, rec.job.walltime_requested)
            assert rec.end_time - rec.start_time == expected
            assert len(rec.nodes) == rec.job.nodes_requested
