"""Charge transition levels and charge-state stability diagrams.

Formation energies of the different charge states of one defect share
every chemical-potential term, so only the charge-dependent part

    E(q; E_F) = E_tot + E_corr + q * (E_VBM + E_F)

is compared. The stable charge at a Fermi level is the lowest of these
lines; the stability diagram is their lower envelope over [0, gap].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ChargeStateRecord, HostParams
from .errors import EqualCharges, FermiOutOfGap, InvalidHost, TooFewRecords
from .units import COULOMB_EV_A, MADELUNG_SC


@dataclass(frozen=True)
class StabilityDiagram:
    """Lower envelope of the formation-energy lines.

    ``intervals`` holds ``(fermi_low, fermi_high, q)`` tiling [0, gap] in
    order of increasing Fermi level; ``transitions`` holds ``(q1, q2, eps)``
    for every pair of neighbouring stable states. ``ties`` lists envelope
    crossings where more than one line met at the same point and the
    most negative charge was kept.
    """

    intervals: tuple
    transitions: tuple
    ties: tuple = field(default=())

    def stable_charge(self, fermi: float) -> int:
        for lo, hi, q in self.intervals:
            if lo <= fermi < hi:
                return q
        lo, hi, q = self.intervals[-1]
        if fermi == hi:
            return q
        raise FermiOutOfGap(f"Fermi level {fermi} eV outside [0, {hi}]")


def transition_level(r1: ChargeStateRecord, r2: ChargeStateRecord, host: HostParams) -> float:
    """Thermodynamic level eps(q1/q2) in eV above the VBM."""
    if r1.q == r2.q:
        raise EqualCharges(f"both records have charge {r1.q}")
    num = r1.e_tot + r1.e_corr - r2.e_corr - r2.e_tot
    return num / (r2.q - r1.q) - host.e_vbm


def point_charge_correction(q: int, host: HostParams) -> float:
    """Leading Makov-Payne term q^2 alpha e^2 / (2 eps L) for a simple-cubic cell, in eV."""
    if host.cell_length is None or not host.cell_length > 0:
        raise InvalidHost("point-charge correction needs a positive cell_length")
    if not host.eps_r > 1:
        raise InvalidHost(f"dielectric constant must exceed 1, got {host.eps_r}")
    return q * q * MADELUNG_SC * COULOMB_EV_A / (2.0 * host.eps_r * host.cell_length)


def with_point_charge_corrections(records, host: HostParams):
    return [ChargeStateRecord(r.q, r.e_tot, point_charge_correction(r.q, host), r.label) for r in records]


def relative_formation_energy(r: ChargeStateRecord, host: HostParams, fermi: float) -> float:
    if not 0.0 <= fermi <= host.gap:
        raise FermiOutOfGap(f"Fermi level {fermi} eV outside [0, {host.gap}]")
    return r.e_tot + r.e_corr + r.q * (host.e_vbm + fermi)


def _line_value(r, host, fermi):
    # no range check: used at the envelope ends where fermi may equal the gap edges
    return r.e_tot + r.e_corr + r.q * (host.e_vbm + fermi)


def stability_diagram(records, host: HostParams) -> StabilityDiagram:
    """Sweep the lower envelope of the formation-energy lines from E_F = 0 to the gap.

    Degenerate crossings keep the more negative charge on the high-Fermi
    side, so the stable charge never increases with the Fermi level.
    """
    records = list(records)
    if len(records) < 2:
        raise TooFewRecords(f"need at least two charge states, got {len(records)}")
    charges = [r.q for r in records]
    if len(set(charges)) != len(charges):
        raise EqualCharges("charge states must be distinct")

    # at E_F = 0 the lowest line wins; among ties the smallest slope wins to the right
    chain = [min(records, key=lambda r: (_line_value(r, host, 0.0), r.q))]
    bounds, ties = [], []
    fermi = 0.0
    while True:
        current = chain[-1]
        best_eps, best = None, []
        for r in records:
            if r.q >= current.q:
                continue
            eps = transition_level(current, r, host)
            if eps < fermi:
                # crossing behind us only through round-off when several lines meet here
                if _line_value(r, host, fermi) > _line_value(current, host, fermi):
                    continue
                eps = fermi
            if eps >= host.gap:
                continue
            if best_eps is None or eps < best_eps:
                best_eps, best = eps, [r]
            elif eps == best_eps:
                best.append(r)
        if best_eps is None:
            break
        nxt = min(best, key=lambda r: r.q)
        if len(best) > 1:
            ties.append((current.q,) + tuple(sorted((r.q for r in best), reverse=True)) + (best_eps,))
        if best_eps > fermi:
            chain.append(nxt)
            bounds.append(best_eps)
        else:
            ties.append((current.q, nxt.q, best_eps))
            chain[-1] = nxt
            if bounds:
                bounds[-1] = transition_level(chain[-2], nxt, host)
        fermi = bounds[-1] if bounds else 0.0

    edges = [0.0] + bounds + [host.gap]
    intervals = tuple((edges[i], edges[i + 1], r.q) for i, r in enumerate(chain))
    transitions = tuple((chain[i].q, chain[i + 1].q, bounds[i]) for i in range(len(bounds)))
    return StabilityDiagram(intervals, transitions, tuple(ties))


def all_transition_levels(records, host: HostParams):
    """eps(q1/q2) for every pair with q1 > q2, sorted by q1 descending then q2."""
    records = sorted(records, key=lambda r: -r.q)
    out = []
    for i, r1 in enumerate(records):
        for r2 in records[i + 1:]:
            out.append((r1.q, r2.q, transition_level(r1, r2, host)))
    return out


def formation_energy_curves(records, host: HostParams, fermi_grid):
    """Matrix of relative formation energies, one row per record."""
    fermi_grid = np.asarray(fermi_grid, dtype=float)
    return np.array([[relative_formation_energy(r, host, f) for f in fermi_grid] for r in records])
