import pytest

from baconsched.coloring import Coloring, canonical_sequence_5x5
from baconsched.lattice import XX, ZZ, Check, Dims, column_stabilizer, enumerate_checks
from baconsched.schedule import (
    Schedule,
    Step,
    build_schedule,
    format_schedule,
    modified_schedule,
    standard_schedule,
    transition_measurements,
)


def test_canonical_schedule_shape():
    sched = build_schedule(canonical_sequence_5x5())
    assert sched.period == 4
    assert [s.kind for s in sched.steps] == [ZZ, XX, ZZ, XX]
    # boundary strips include the boundary edge, so 14 checks per step
    assert [len(s.checks) for s in sched.steps] == [14, 14, 14, 14]
    assert sched.checks_per_cycle() == 56


def test_tiled_schedule_step_sizes():
    sched = modified_schedule(9)
    assert [s.kind for s in sched.steps] == [ZZ, XX, ZZ, XX]
    assert [len(s.checks) for s in sched.steps] == [48, 48, 48, 48]


@pytest.mark.parametrize("d", [5, 9, 13])
def test_every_check_measured_each_cycle(d):
    sched = modified_schedule(d)
    measured = set()
    for s in sched.steps:
        measured.update(s.checks)
    assert measured == set(enumerate_checks(Dims(d, d)))


@pytest.mark.parametrize("d", [5, 9, 13, 17])
def test_kinds_alternate(d):
    kinds = [s.kind for s in modified_schedule(d).steps]
    assert all(a != b for a, b in zip(kinds, kinds[1:] + kinds[:1]))


def test_full_column_paint_measures_whole_column():
    dims = Dims(5, 5)
    c = Coloring(("RBBB", "BBBB", "BBBB", "RBBB"))
    c2 = Coloring(("RBBB", "RBBB", "RBBB", "RBBB"))
    assert transition_measurements(c, c2, dims) == column_stabilizer(0, dims)


@pytest.mark.parametrize("d", [9, 13])
def test_full_column_paint_in_tiled_schedule(d):
    # every box-column is painted entirely red at some step
    sched = modified_schedule(d)
    for bc in range(d - 1):
        assert any(column_stabilizer(bc, sched.dims) <= set(s.checks) for s in sched.steps)


def test_strip_at_bottom_includes_boundary_edge():
    dims = Dims(5, 5)
    c = Coloring(("RBBB", "BBBB", "BBBB", "BBBB"))
    c2 = Coloring(("RBBB", "RBBB", "BBBB", "BBBB"))
    assert transition_measurements(c, c2, dims) == {Check(XX, 0, 0), Check(XX, 1, 0)}


def test_standard_schedule():
    sched = standard_schedule(Dims(5, 5))
    assert [len(s.checks) for s in sched.steps] == [20, 20]
    assert [len(s.checks) for s in standard_schedule(Dims(2, 2)).steps] == [2, 2]


def test_step_validation():
    with pytest.raises(ValueError):
        Step(0, XX, ())
    with pytest.raises(ValueError):
        Step(0, XX, (Check(XX, 0, 0), Check(ZZ, 0, 0)))


def test_bootstrap_and_indexing():
    sched = standard_schedule(Dims(3, 3)).with_bootstrap([Check(ZZ, 0, 0)])
    assert sched.step_at(0).phase == -1
    assert sched.step_at(1).phase == 0
    assert sched.phase_at(3) == 0
    assert format_schedule(sched).splitlines()[0] == "phase -1 ZZ: (0,0)"


def test_schedule_dump_format():
    line = format_schedule(standard_schedule(Dims(2, 2))).splitlines()[0]
    assert line == "phase 0 XX: (0,0) (1,0)"


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        build_schedule(canonical_sequence_5x5(), Dims(6, 6))
