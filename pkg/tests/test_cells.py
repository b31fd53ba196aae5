import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from potsim.cells import (
    Capacitor,
    ComplexImpedance,
    Parallel,
    Resistor,
    Series,
    elements,
    impedance_at,
    network_impedance,
    parallel_rc_magnitude,
    parallel_rc_phase,
    time_domain_current,
    to_sexpr,
    wrap_degrees,
)
from potsim.config import TABLE3_CELLS, TABLE3_FREQUENCY
from potsim.errors import InvalidInput, UnsupportedTopology


# -- independent oracle: nodal admittance matrix built from scratch -------------

def _oracle_impedance(network, f):
    """Impedance between two terminals by solving Y V = I on a fresh netlist."""
    edges = []  # (node_a, node_b, admittance)
    counter = [2]

    def new_node():
        counter[0] += 1
        return counter[0] - 1

    def place(net, a, b):
        if isinstance(net, Resistor):
            edges.append((a, b, 1.0 / net.resistance))
        elif isinstance(net, Capacitor):
            edges.append((a, b, 2j * math.pi * f * net.capacitance))
        elif isinstance(net, Parallel):
            for child in net.children:
                place(child, a, b)
        else:
            nodes = [a] + [new_node() for _ in net.children[1:]] + [b]
            for child, x, y in zip(net.children, nodes, nodes[1:]):
                place(child, x, y)

    place(network, 0, 1)
    n = counter[0]
    Y = np.zeros((n, n), dtype=complex)
    for a, b, y in edges:
        Y[a, a] += y
        Y[b, b] += y
        Y[a, b] -= y
        Y[b, a] -= y
    # ground node 1, inject 1 A into node 0
    keep = [i for i in range(n) if i != 1]
    rhs = np.zeros(len(keep), dtype=complex)
    rhs[0] = 1.0
    v = np.linalg.solve(Y[np.ix_(keep, keep)], rhs)
    return v[0]


values_r = st.floats(10.0, 1e6)
values_c = st.floats(1e-10, 1e-6)
leaves = st.one_of(values_r.map(Resistor), values_c.map(Capacitor))
networks = st.recursive(
    leaves,
    lambda kids: st.one_of(
        st.lists(kids, min_size=2, max_size=3).map(lambda c: Series(*c)),
        st.lists(kids, min_size=2, max_size=3).map(lambda c: Parallel(*c)),
    ),
    max_leaves=6,
)


@given(networks, st.floats(1.0, 1e5))
def test_impedance_matches_nodal_oracle(net, f):
    z = impedance_at(net, f).value
    ref = _oracle_impedance(net, f)
    assert abs(z - ref) <= 1e-9 * abs(ref) + 1e-12


def test_table3_closed_forms():
    # calculated |Z| and phase columns, rounded to 2 decimals
    expected = [
        (844.81, -32.35), (887.46, -27.44), (919.71, -23.12), (943.41, -19.37),
        (964.86, -15.23), (1890.78, -79.10), (2280.86, -76.82), (2736.32, -74.12),
        (3377.57, -70.26),
    ]
    for (r, c), (mag, ph) in zip(TABLE3_CELLS, expected):
        assert parallel_rc_magnitude(r, c, TABLE3_FREQUENCY) == pytest.approx(mag, rel=5e-3)
        assert abs(parallel_rc_phase(r, c, TABLE3_FREQUENCY) - ph) <= 0.05


@given(values_r, values_c, st.floats(1.0, 1e5))
def test_closed_forms_agree_with_network(r, c, f):
    z = impedance_at(Parallel(Resistor(r), Capacitor(c)), f)
    assert z.magnitude == pytest.approx(parallel_rc_magnitude(r, c, f), rel=1e-12)
    assert z.phase == pytest.approx(parallel_rc_phase(r, c, f), abs=1e-9)


def test_zero_capacitance_is_pure_resistance():
    assert parallel_rc_magnitude(1000.0, 0.0, 1e4) == pytest.approx(1000.0)
    assert parallel_rc_phase(1000.0, 0.0, 1e4) == 0.0


def test_redox_dummy_limits():
    net = Series(Resistor(560), Parallel(Resistor(10e3), Capacitor(33e-9)))
    assert impedance_at(net, 1e-3).magnitude == pytest.approx(10560, rel=1e-6)
    assert impedance_at(net, 1e9).magnitude == pytest.approx(560, rel=1e-6)


def test_vectorized_impedance():
    net = Parallel(Resistor(1e3), Capacitor(1e-8))
    fs = np.array([10.0, 100.0, 1e4])
    z = network_impedance(net, fs)
    assert z.shape == (3,)
    assert z[2] == pytest.approx(impedance_at(net, 1e4).value)


@given(st.floats(-1e4, 1e4))
def test_wrap_degrees_range(angle):
    w = wrap_degrees(angle)
    assert -180.0 <= w < 180.0
    assert math.isclose(math.remainder(w - angle, 360.0), 0.0, abs_tol=1e-9)


def test_complex_impedance_polar():
    z = ComplexImpedance.from_polar(2.0, -90.0)
    assert z.real == pytest.approx(0.0, abs=1e-12)
    assert z.imag == pytest.approx(-2.0)
    assert z.phase == pytest.approx(-90.0)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_rejects_bad_values(bad):
    with pytest.raises(InvalidInput):
        Resistor(bad)
    with pytest.raises(InvalidInput):
        Capacitor(bad)


def test_composites_are_immutable_and_hashable():
    a = Series(Resistor(1), Capacitor(1e-9))
    b = Series(Resistor(1), Capacitor(1e-9))
    assert a == b and hash(a) == hash(b)
    with pytest.raises(AttributeError):
        a.children = ()
    assert list(elements(a)) == [Resistor(1), Capacitor(1e-9)]
    assert to_sexpr(a) == "(series (R 1) (C 1e-09))"


# -- time domain -----------------------------------------------------------------

def test_capacitor_only_network_is_rejected():
    with pytest.raises(UnsupportedTopology):
        time_domain_current(Series(Capacitor(1e-9), Capacitor(1e-9)), np.zeros(4), 1e6)


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=50), values_r)
def test_ohms_law(v, r):
    i = time_domain_current(Series(Resistor(r), Resistor(r)), np.array(v), 1e5)
    np.testing.assert_allclose(i, np.array(v) / (2 * r), rtol=1e-12, atol=1e-300)


def _steady_state(net, f, spc=360, cycles=40):
    rate = f * spc
    t = np.arange(cycles * spc) / rate
    v = np.sin(2 * np.pi * f * t)
    i = time_domain_current(net, v, rate)
    tail = slice(-spc * 4, None)
    phasor_v = np.sum(v[tail] * np.exp(-2j * np.pi * f * t[tail]))
    phasor_i = np.sum(i[tail] * np.exp(-2j * np.pi * f * t[tail]))
    return phasor_v / phasor_i


@pytest.mark.parametrize("net", [
    Parallel(Resistor(1e3), Capacitor(1e-8)),
    Series(Resistor(560), Parallel(Resistor(10e3), Capacitor(33e-9))),
    Series(Resistor(100), Parallel(Resistor(1e3), Capacitor(1e-8)),
           Parallel(Resistor(2e3), Capacitor(4.7e-9))),
    Parallel(Resistor(1e3), Series(Resistor(500), Capacitor(1e-8)), Capacitor(2e-9)),
])
def test_time_domain_steady_state_matches_phasor(net):
    f = 10_080.0
    z = _steady_state(net, f)
    ref = impedance_at(net, f)
    assert abs(z) == pytest.approx(ref.magnitude, rel=1e-3)
    assert math.degrees(np.angle(z)) == pytest.approx(ref.phase, abs=0.05)


def test_initial_state_decays_through_the_resistor():
    net = Parallel(Resistor(1e3), Capacitor(1e-6))
    rate = 1e6
    # capacitor directly across the terminals: state is irrelevant, v is zero
    i = time_domain_current(net, np.zeros(100), rate)
    assert np.all(i == 0)
    series = Series(Resistor(1e3), Capacitor(1e-6))
    i = time_domain_current(series, np.zeros(2000), rate, initial_state=[1.0])
    tau = 1e-3
    t = np.arange(2000) / rate
    np.testing.assert_allclose(i, -np.exp(-t / tau) / 1e3, rtol=1e-9, atol=1e-15)


def test_initial_state_shape_checked():
    with pytest.raises(InvalidInput):
        time_domain_current(Series(Resistor(1), Capacitor(1e-9)), np.zeros(3), 1e3, [0.0, 0.0])
