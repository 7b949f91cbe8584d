"""Small 3-vector helpers on plain float tuples.

Tuples beat numpy for the single-vector arithmetic that dominates the
placement and raycast hot loops; numpy is reserved for bulk array work.
"""
from __future__ import annotations

import math

Vec3 = tuple[float, float, float]

ZERO: Vec3 = (0.0, 0.0, 0.0)
UP: Vec3 = (0.0, 1.0, 0.0)


def vec3(x: float, y: float, z: float) -> Vec3:
    return (float(x), float(y), float(z))


def add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def dist(a: Vec3, b: Vec3) -> float:
    return norm(sub(a, b))


def normalize(a: Vec3) -> Vec3:
    n = norm(a)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return (a[0] / n, a[1] / n, a[2] / n)


def lerp(a: Vec3, b: Vec3, t: float) -> Vec3:
    return (
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    )


def rotate_euler(v: Vec3, yaw: float, pitch: float, roll: float) -> Vec3:
    """Rotate ``v`` by intrinsic yaw (Y), pitch (X), roll (Z) in radians."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    # roll about Z
    x = v[0] * cr - v[1] * sr
    y = v[0] * sr + v[1] * cr
    z = v[2]
    # pitch about X
    y, z = y * cp - z * sp, y * sp + z * cp
    # yaw about Y
    x, z = x * cy + z * sy, -x * sy + z * cy
    return (x, y, z)


def camera_basis(forward: Vec3, world_up: Vec3 = UP) -> tuple[Vec3, Vec3, Vec3]:
    """Right-handed (forward, right, up) frame for a view direction.

    Falls back to +Z as the up reference when the view is near-vertical,
    so straight-down shots still get a stable frame.
    """
    f = normalize(forward)
    r = cross(world_up, f)
    if norm(r) < 1e-9:
        r = cross((0.0, 0.0, 1.0), f)
    r = normalize(r)
    u = cross(f, r)
    return f, r, u
