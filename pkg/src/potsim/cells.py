"""Analytic R/C cell models: impedance and time-domain current response.

Networks are trees of :class:`Resistor`, :class:`Capacitor`, :class:`Series`
and :class:`Parallel`.  The cell is driven by an ideal voltage source across
its two terminals; the returned current flows from the source into the cell.
"""

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import InvalidInput, UnsupportedTopology

TWO_PI = 2.0 * math.pi


def _check_positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise InvalidInput(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Resistor:
    resistance: float

    def __post_init__(self):
        object.__setattr__(self, "resistance", _check_positive("resistance", self.resistance))


@dataclass(frozen=True)
class Capacitor:
    capacitance: float

    def __post_init__(self):
        object.__setattr__(self, "capacitance", _check_positive("capacitance", self.capacitance))


class _Composite:
    __slots__ = ("children",)

    def __init__(self, *children):
        if len(children) == 1 and isinstance(children[0], (list, tuple)):
            children = tuple(children[0])
        if not children:
            raise InvalidInput(f"{type(self).__name__} needs at least one child")
        for child in children:
            if not isinstance(child, (Resistor, Capacitor, _Composite)):
                raise InvalidInput(f"not a network element: {child!r}")
        object.__setattr__(self, "children", tuple(children))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __eq__(self, other):
        return type(self) is type(other) and self.children == other.children

    def __hash__(self):
        return hash((type(self).__name__, self.children))

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(map(repr, self.children))})"


class Series(_Composite):
    __slots__ = ()


class Parallel(_Composite):
    __slots__ = ()


def elements(network):
    """Yield the leaf elements of ``network`` in depth-first order."""
    if isinstance(network, _Composite):
        for child in network.children:
            yield from elements(child)
    else:
        yield network


def _shortest(value):
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def to_sexpr(network):
    """Render a network in the config-file notation, e.g. ``(series (R 560) (C 1e-08))``."""
    if isinstance(network, Resistor):
        return f"(R {_shortest(network.resistance)})"
    if isinstance(network, Capacitor):
        return f"(C {_shortest(network.capacitance)})"
    head = "series" if isinstance(network, Series) else "parallel"
    return "(" + head + " " + " ".join(to_sexpr(c) for c in network.children) + ")"


# -- frequency domain --------------------------------------------------------

@dataclass(frozen=True)
class ComplexImpedance:
    value: complex

    @property
    def real(self):
        return self.value.real

    @property
    def imag(self):
        return self.value.imag

    @property
    def magnitude(self):
        return abs(self.value)

    @property
    def phase(self):
        """Phase angle in degrees, in [-180, 180)."""
        return wrap_degrees(math.degrees(cmath.phase(self.value)))

    @classmethod
    def from_polar(cls, magnitude, phase_deg):
        return cls(cmath.rect(magnitude, math.radians(phase_deg)))


def wrap_degrees(angle):
    """Wrap an angle (scalar or array) into [-180, 180)."""
    if np.ndim(angle):
        out = np.mod(np.asarray(angle, dtype=float) + 180.0, 360.0) - 180.0
        out[out >= 180.0] -= 360.0
        return out
    out = (angle + 180.0) % 360.0 - 180.0
    if out >= 180.0:
        out -= 360.0
    return out


def network_impedance(network, f):
    """Complex impedance of ``network`` at frequency/frequencies ``f`` (Hz)."""
    f_arr = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f_arr)) or np.any(f_arr <= 0.0):
        raise InvalidInput(f"frequency must be positive and finite, got {f!r}")
    return _impedance(network, f_arr)


def _impedance(network, f):
    if isinstance(network, Resistor):
        return np.full(f.shape, complex(network.resistance))
    if isinstance(network, Capacitor):
        return 1.0 / (1j * TWO_PI * f * network.capacitance)
    parts = [_impedance(child, f) for child in network.children]
    if isinstance(network, Series):
        return sum(parts[1:], parts[0])
    admittance = sum((1.0 / z for z in parts[1:]), 1.0 / parts[0])
    return 1.0 / admittance


def impedance_at(network, f):
    return ComplexImpedance(complex(network_impedance(network, f)))


def parallel_rc_magnitude(resistance, capacitance, f):
    """|Z| of a resistor in parallel with a capacitor: 1/sqrt(1/R^2 + (2 pi f C)^2)."""
    r, c, f = _check_rc(resistance, capacitance, f)
    return 1.0 / math.sqrt(1.0 / r**2 + (TWO_PI * f * c) ** 2)


def parallel_rc_phase(resistance, capacitance, f):
    """Phase in degrees of a parallel RC: atan(-2 pi f R C)."""
    r, c, f = _check_rc(resistance, capacitance, f)
    return math.degrees(math.atan(-TWO_PI * f * r * c))


def _check_rc(resistance, capacitance, f):
    r = _check_positive("resistance", resistance)
    f = _check_positive("frequency", f)
    c = float(capacitance)
    if not math.isfinite(c) or c < 0.0:
        raise InvalidInput(f"capacitance must be >= 0 and finite, got {capacitance!r}")
    return r, c, f


# -- netlist -----------------------------------------------------------------

def netlist(network):
    """Flatten a network into ``(n_nodes, edges)``.

    Node 1 is the driven terminal, node 0 the return terminal.  Each edge is
    ``(element, node_a, node_b)``; capacitor voltage is ``V[a] - V[b]``.
    """
    edges = []
    count = [2]

    def place(item, a, b):
        if isinstance(item, (Resistor, Capacitor)):
            edges.append((item, a, b))
        elif isinstance(item, Series):
            nodes = [a]
            for _ in range(len(item.children) - 1):
                nodes.append(count[0])
                count[0] += 1
            nodes.append(b)
            for child, (na, nb) in zip(item.children, zip(nodes, nodes[1:])):
                place(child, na, nb)
        else:
            for child in item.children:
                place(child, a, b)

    place(network, 1, 0)
    return count[0], edges


def _laplacians(n_nodes, edges):
    G = np.zeros((n_nodes, n_nodes))
    Cm = np.zeros((n_nodes, n_nodes))
    for element, a, b in edges:
        if isinstance(element, Resistor):
            M, w = G, 1.0 / element.resistance
        else:
            M, w = Cm, element.capacitance
        M[a, a] += w
        M[b, b] += w
        M[a, b] -= w
        M[b, a] -= w
    return G, Cm


@dataclass(frozen=True)
class _ResistiveModel:
    conductance: float


@dataclass(frozen=True)
class _SingleCapModel:
    capacitance: float
    alpha: float  # open-circuit capacitor voltage per volt of drive
    r_thevenin: float  # 0 when the capacitor sits directly on the terminals
    beta: float  # source current per volt with the capacitor current held at 0
    gamma: float  # source current per ampere of capacitor current


@dataclass(frozen=True, eq=False)
class _MultiCapModel:
    n_nodes: int
    G: np.ndarray
    Cm: np.ndarray
    cap_edges: tuple


@lru_cache(maxsize=256)
def compile_network(network):
    n_nodes, edges = netlist(network)
    caps = [(e, a, b) for e, a, b in edges if isinstance(e, Capacitor)]
    if not any(isinstance(e, Resistor) for e, _, _ in edges):
        raise UnsupportedTopology("network has no resistive path (pure capacitor network)")
    G, Cm = _laplacians(n_nodes, edges)
    internal = np.arange(2, n_nodes)
    Gii = G[np.ix_(internal, internal)]

    if not caps:
        rhs = -G[internal, 1]
        V = np.zeros(n_nodes)
        V[1] = 1.0
        if internal.size:
            V[internal] = np.linalg.solve(Gii, rhs)
        # Laplacian row of the driven node gives the current leaving it
        return _ResistiveModel(float(G[1, :] @ V))

    if len(caps) == 1:
        cap, a, b = caps[0]

        def solve(v, i_c):
            V = np.zeros(n_nodes)
            V[1] = v
            if internal.size:
                rhs = -G[internal, 1] * v
                inj = np.zeros(n_nodes)
                inj[a] -= i_c
                inj[b] += i_c
                rhs = rhs + inj[internal]
                try:
                    V[internal] = np.linalg.solve(Gii, rhs)
                except np.linalg.LinAlgError as exc:
                    raise UnsupportedTopology("floating node in resistive network") from exc
            source = float(G[1, :] @ V)
            source += i_c * ((a == 1) - (b == 1))
            return V, source

        Vv, beta = solve(1.0, 0.0)
        Vc, gamma = solve(0.0, 1.0)
        alpha = float(Vv[a] - Vv[b])
        r_th = 0.0 if {a, b} == {0, 1} else float(-(Vc[a] - Vc[b]))
        if {a, b} != {0, 1} and r_th <= 0.0:
            raise UnsupportedTopology("capacitor has no resistive discharge path")
        return _SingleCapModel(cap.capacitance, alpha, r_th, beta, gamma)

    return _MultiCapModel(n_nodes, G, Cm, tuple((e.capacitance, a, b) for e, a, b in caps))


# -- time domain -------------------------------------------------------------

def _foh_pole_coefficients(q):
    """Input weights (b0, b1) for x' = (u - x)/tau over one step, q = -h/tau.

    The input is linear between samples, so x[n+1] = a x[n] + b0 u[n] + b1 u[n+1]
    is exact with a = exp(q).
    """
    a = math.exp(q)
    if abs(q) < 1e-4:
        b1 = -q / 2.0 - q * q / 6.0 - q**3 / 24.0
    else:
        b1 = (q - math.expm1(q)) / q
    b0 = (1.0 - a) - b1
    return a, b0, b1


def time_domain_current(network, voltage, rate, initial_state=None):
    """Current drawn by ``network`` when driven by ``voltage`` sampled at ``rate``.

    The drive is taken as linear between samples.  Cells with one capacitor
    are discretized exactly; cells with several use trapezoidal integration
    of the nodal equations.  ``initial_state`` gives the capacitor voltages
    in :func:`elements` order (zeros by default).  A capacitor sitting
    directly across the terminals has no state and its current uses the
    central difference of the drive (one-sided at the ends).
    """
    v = np.asarray(voltage, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInput("voltage waveform must be a non-empty 1-D array")
    if not np.all(np.isfinite(v)):
        raise InvalidInput("voltage waveform contains non-finite samples")
    rate = float(rate)
    if not math.isfinite(rate) or rate <= 0.0:
        raise InvalidInput(f"sample rate must be positive, got {rate!r}")
    model = compile_network(network)
    n_caps = sum(isinstance(e, Capacitor) for e in elements(network))
    if initial_state is None:
        state = np.zeros(n_caps)
    else:
        state = np.atleast_1d(np.asarray(initial_state, dtype=float))
        if state.shape != (n_caps,):
            raise InvalidInput(f"expected {n_caps} initial capacitor voltages, got {state.shape}")
    h = 1.0 / rate

    if isinstance(model, _ResistiveModel):
        return model.conductance * v

    if isinstance(model, _SingleCapModel):
        if model.r_thevenin == 0.0:
            dv = np.gradient(v, h) if v.size > 1 else np.zeros(1)
            return model.beta * v + model.gamma * model.capacitance * model.alpha * dv
        tau = model.r_thevenin * model.capacitance
        a, b0, b1 = _foh_pole_coefficients(-h / tau)
        drive = model.alpha * v
        v_cap = _kernels.foh_first_order(drive, a, b0, b1, state[0])
        i_cap = (drive - v_cap) / model.r_thevenin
        return model.beta * v + model.gamma * i_cap

    return _multi_cap_current(model, v, h, state)


def _multi_cap_current(model, v, h, cap_voltages):
    n = model.n_nodes
    internal = np.arange(2, n)
    G, Cm = model.G, model.Cm
    V = np.zeros((v.size, n))
    V[:, 1] = v
    if internal.size:
        E = Cm[np.ix_(internal, internal)]
        Gi = G[np.ix_(internal, internal)]
        g = G[internal, 1]
        c = Cm[internal, 1]
        lhs = 2.0 * E / h + Gi
        try:
            K = np.linalg.inv(lhs)
        except np.linalg.LinAlgError as exc:
            raise UnsupportedTopology("singular nodal matrix") from exc
        A = K @ (2.0 * E / h - Gi)
        b_sum = -K @ g
        b_diff = -K @ (2.0 * c / h)
        x0 = _consistent_start(model, E, Gi, g, v[0], cap_voltages)
        V[:, internal] = _kernels.linear_recursion(A, b_sum, b_diff, v, x0)
    resistive = V @ G[1, :]
    charge = V @ Cm[1, :]
    dq = np.gradient(charge, h) if v.size > 1 else np.zeros(1)
    return resistive + dq


def _consistent_start(model, E, Gi, g, v0, cap_voltages):
    """Internal node voltages matching the capacitor voltages and the
    algebraic (charge-free) node equations at t = 0."""
    n_int = model.n_nodes - 2
    rows, rhs = [], []
    for (_, a, b), vc in zip(model.cap_edges, cap_voltages):
        row = np.zeros(model.n_nodes)
        row[a] += 1.0
        row[b] -= 1.0
        rows.append(row[2:])
        rhs.append(vc - row[1] * v0)
    _, s, vt = np.linalg.svd(E.T)
    tol = s.max(initial=0.0) * n_int * np.finfo(float).eps if s.size else 0.0
    rank = int(np.sum(s > tol))
    # rows of vt beyond the rank span the left null space of E
    for null_vec in vt[rank:]:
        rows.append(null_vec @ Gi)
        rhs.append(-(null_vec @ g) * v0)
    x0, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return x0
