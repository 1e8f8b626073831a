"""Deterministic named-stream random source for the simulator.

One Stream per (scenario seed, purpose, node) via a splitmix64 derivation,
xorshift128+ generation. All integer arithmetic is masked to 64 bits so the
interpreted fallback produces bit-identical sequences to the compiled build;
floating draws go through libm on both paths for the same reason.

Written in Cython pure-Python mode; importable compiled or interpreted.
"""

import cython

if cython.compiled:
    from cython.cimports.libc.math import cos, log, sqrt
else:
    from math import cos, log, sqrt

COMPILED = cython.compiled

MASK64 = 0xFFFFFFFFFFFFFFFF

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INDEX_SALT = 0xC2B2AE3D27D4EB4F

_TWO_PI = 6.283185307179586
_INV_2_53 = 1.1102230246251565e-16  # 2**-53

# Stream purposes. Topology draws happen once per scenario; channel streams
# are per transmitting node. Traffic streams are derived for stability of the
# numbering but the traffic schedule itself is a fixed jitter formula.
PURPOSE_TOPOLOGY = 1
PURPOSE_CHANNEL = 2
PURPOSE_TRAFFIC = 3


@cython.cfunc
def _mix(z: cython.ulonglong) -> cython.ulonglong:
    # splitmix64 step: advance by the golden gamma, then finalize.
    z = (z + _GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_state(seed: int, purpose: int, index: int) -> tuple:
    """Derive a 128-bit generator state (s0, s1) for a named stream."""
    h: cython.ulonglong = (seed ^ ((purpose * _GAMMA) & MASK64)) & MASK64
    h = _mix(h)
    h = (h ^ ((index * _INDEX_SALT) & MASK64)) & MASK64
    h = _mix(h)
    s0: cython.ulonglong = _mix(h)
    s1: cython.ulonglong = _mix(s0)
    if s0 == 0 and s1 == 0:
        s1 = _GAMMA
    return s0, s1


@cython.cclass
class Stream:
    """xorshift128+ generator bound to one (seed, purpose, index) name."""

    s0 = cython.declare(cython.ulonglong, visibility="public")
    s1 = cython.declare(cython.ulonglong, visibility="public")

    def __init__(self, seed: int, purpose: int = 0, index: int = 0):
        state = derive_state(seed, purpose, index)
        self.s0 = state[0]
        self.s1 = state[1]

    @cython.ccall
    def next_u64(self) -> cython.ulonglong:
        x: cython.ulonglong = self.s0
        y: cython.ulonglong = self.s1
        self.s0 = y
        x = (x ^ ((x << 23) & MASK64)) & MASK64
        self.s1 = (x ^ y ^ (x >> 17) ^ (y >> 26)) & MASK64
        return (self.s1 + y) & MASK64

    @cython.ccall
    def uniform(self) -> cython.double:
        """Uniform double in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * _INV_2_53

    @cython.ccall
    def normal(self) -> cython.double:
        """Standard normal via Box-Muller (cosine branch only)."""
        u1: cython.double = self.uniform()
        while u1 <= 0.0:
            u1 = self.uniform()
        u2: cython.double = self.uniform()
        return sqrt(-2.0 * log(u1)) * cos(_TWO_PI * u2)

    @cython.ccall
    def fill_uniforms(self, out: cython.double[:], n: cython.Py_ssize_t) -> None:
        i: cython.Py_ssize_t
        for i in range(n):
            out[i] = self.uniform()

    @cython.ccall
    def fill_normals(self, out: cython.double[:], n: cython.Py_ssize_t) -> None:
        i: cython.Py_ssize_t
        for i in range(n):
            out[i] = self.normal()
