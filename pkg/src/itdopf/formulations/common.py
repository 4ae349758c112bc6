"""Shared pieces of the formulation builders."""

from __future__ import annotations

import enum
import math

import numpy as np

from ..errors import UnsupportedFormulation

PHASE_ANGLE = {"a": 0.0, "b": -2.0 * math.pi / 3.0, "c": 2.0 * math.pi / 3.0}


class Formulation(str, enum.Enum):
    ACP = "acp-acpu"
    ACR = "acr-acru"
    IVR = "ivr-ivru"
    NFA = "nfa-nfau"

    def __str__(self):
        return self.value

    @property
    def label(self):
        return {"acp-acpu": "ACP_ACPU", "acr-acru": "ACR_ACRU", "ivr-ivru": "IVR_IVRU", "nfa-nfau": "NFA_NFAU"}[
            self.value
        ]

    @property
    def polar(self):
        return self is Formulation.ACP

    @property
    def rectangular(self):
        return self in (Formulation.ACR, Formulation.IVR)

    @property
    def has_voltage(self):
        return self is not Formulation.NFA

    @classmethod
    def parse(cls, tag) -> "Formulation":
        if isinstance(tag, Formulation):
            return tag
        key = str(tag).strip().lower().replace("_", "-")
        for f in cls:
            if key in (f.value, f.label.lower().replace("_", "-"), f.name.lower()):
                return f
        raise UnsupportedFormulation(
            f"unknown formulation {tag!r}; expected one of {', '.join(f.value for f in cls)}"
        )


ALL_FORMULATIONS = tuple(Formulation)


def midpoint(lo, hi):
    """Flat-start value: bound midpoint, or 0 clipped into the bounds when one side is open."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    both = np.isfinite(lo) & np.isfinite(hi)
    mid = np.where(both, 0.5 * (np.where(both, lo, 0) + np.where(both, hi, 0)), 0.0)
    return np.clip(mid, lo, hi)


def finite_or(values, default):
    return np.where(np.isfinite(values), values, default)


def add_pair(bb, rows, kind, polar, a, c, G, B, sign=1.0):
    """Add ``sign * Re/Im(conj(Y) * V_a * conj(V_c))`` to ``rows``.

    ``a`` and ``c`` are ``(vm, va)`` index arrays in polar form or ``(vr, vi)``
    in rectangular form; ``kind`` is ``"P"`` or ``"Q"``.
    """
    rows = np.asarray(rows)
    G = np.broadcast_to(np.asarray(G, float), rows.shape) * sign
    B = np.broadcast_to(np.asarray(B, float), rows.shape) * sign
    keep = (G != 0) | (B != 0)
    if not np.any(keep):
        return
    rows = rows[keep]
    G, B = G[keep], B[keep]
    a0, a1 = np.asarray(a[0])[keep], np.asarray(a[1])[keep]
    c0, c1 = np.asarray(c[0])[keep], np.asarray(c[1])[keep]
    if polar:
        if kind == "P":
            bb.polar(rows, a0, a1, c0, c1, G, B)
        else:
            bb.polar(rows, a0, a1, c0, c1, -B, G)
        return
    # X = ea ec + fa fc ; W = fa ec - ea fc
    if kind == "P":  # G X + B W
        terms = ((a0, c0, G), (a1, c1, G), (a1, c0, B), (a0, c1, -B))
    else:  # G W - B X
        terms = ((a1, c0, G), (a0, c1, -G), (a0, c0, -B), (a1, c1, -B))
    for p, q, coef in terms:
        nz = coef != 0
        if np.any(nz):
            bb.quad(rows[nz], p[nz], q[nz], coef[nz])


def add_current(bb, rows, part, a, G, B, sign=1.0):
    """Add ``sign * Re/Im(Y * V_a)`` (rectangular voltages) to ``rows``; linear."""
    rows = np.asarray(rows)
    G = np.broadcast_to(np.asarray(G, float), rows.shape) * sign
    B = np.broadcast_to(np.asarray(B, float), rows.shape) * sign
    e, f = np.asarray(a[0]), np.asarray(a[1])
    if part == "re":  # G e - B f
        terms = ((e, G), (f, -B))
    else:  # B e + G f
        terms = ((e, B), (f, G))
    for col, coef in terms:
        nz = coef != 0
        if np.any(nz):
            bb.linear(rows[nz], col[nz], coef[nz])


def add_power_product(bb, rows, kind, v, cur, sign=1.0):
    """Add ``sign * Re/Im(V * conj(I))`` for rectangular ``v=(e, f)``, ``cur=(cr, ci)``."""
    e, f = v
    cr, ci = cur
    if kind == "P":  # e cr + f ci
        bb.quad(rows, e, cr, sign)
        bb.quad(rows, f, ci, sign)
    else:  # f cr - e ci
        bb.quad(rows, f, cr, sign)
        bb.quad(rows, e, ci, -sign)


def add_angle_difference(bb, rows_lo_hi, polar, a, c, angmin, angmax):
    """Angle-difference limits between nodes ``a`` and ``c``.

    Polar: one linear row ``va_a - va_c`` in ``[angmin, angmax]``.  Rectangular:
    two rows ``W - tan(angmax) X <= 0`` and ``W - tan(angmin) X >= 0``.  Returns
    the (cl, cu) arrays for the rows that were written.
    """
    if polar:
        rows = rows_lo_hi
        bb.linear(rows, a[1], 1.0)
        bb.linear(rows, c[1], -1.0)
        return angmin, angmax
    r_hi, r_lo = rows_lo_hi
    for rows, lim in ((r_hi, angmax), (r_lo, angmin)):
        t = np.tan(lim)
        # W - t X = (fa ec - ea fc) - t (ea ec + fa fc)
        bb.quad(rows, a[1], c[0], 1.0)
        bb.quad(rows, a[0], c[1], -1.0)
        bb.quad(rows, a[0], c[0], -t)
        bb.quad(rows, a[1], c[1], -t)
    return None
