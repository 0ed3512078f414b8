"""Model-vs-simulation comparison and least-squares fitting of the syn coefficient."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .config import ScenarioConfig, model_params
from .model import (
    CycleBreakdown,
    ErrorTrace,
    NodeModelParams,
    SystemModelParams,
    aggregate,
    t1,
    t2,
    total,
)
from .sim import SimReport


class DegenerateFitError(ValueError):
    pass


def model_from_report(
    cfg: ScenarioConfig, report: SimReport, use_power: bool = False
) -> tuple[SystemModelParams, list[NodeModelParams]]:
    """Model inputs measured from a completed run.

    m_i and w_i become per-circle averages of the observed retransmits and
    ERROR frames, E_i the mean observed ERROR frame length. With
    ``use_power`` the per-circle error counts feed P_i as well; by default
    P_i is zero, since m_i already accounts for the resent frames.
    """
    circles = report.circles_completed
    if circles < 1:
        raise ValueError("report has no completed circle")
    sys, nodes = model_params(cfg)
    out = []
    for nc, nd in zip(cfg.nodes, nodes):
        st = report.node_stats[nc.address.addr]
        E = st.error_bits / st.error_frames if st.error_frames else nd.E
        out.append(replace(nd, m=st.retransmits / circles, w=st.error_frames / circles, E=E))
    sys = replace(sys, r=circles)
    if use_power:
        series = tuple(tuple(report.error_counts[nc.address.addr][:circles]) for nc in cfg.nodes)
        sys = replace(sys, trace=ErrorTrace(series, circles), window=None)
    return sys, out


@dataclass(frozen=True)
class SynFit:
    syn: float  # seconds per meter
    stderr: Optional[float]  # None when a single report makes the fit exact
    n: int
    residuals_ns: tuple[float, ...]


def estimate_syn(reports: Sequence[SimReport], models) -> SynFit:
    """Fit residual = syn * agg(L) * circles through the origin.

    ``models`` is either one ``(SystemModelParams, nodes)`` pair shared by all
    reports or a sequence with one pair per report. The residual of a report
    is its simulated total minus circles * (T1 + T2) of its model.
    """
    if not reports:
        raise ValueError("need at least one report")
    if isinstance(models, tuple) and len(models) == 2 and isinstance(models[0], SystemModelParams):
        models = [models] * len(reports)
    if len(models) != len(reports):
        raise ValueError("one model per report required")

    zs, ys = [], []
    for rep, (sys, nodes) in zip(reports, models):
        circles = rep.circles_completed
        ys.append(rep.total_time_ns - circles * (t1(sys, nodes) + t2(sys, nodes)))
        zs.append(circles * aggregate([nd.L for nd in nodes], sys.aggregation))
    szz = sum(z * z for z in zs)
    if szz == 0:
        raise DegenerateFitError("node distances aggregate to zero; syn is not identifiable")
    syn_ns = sum(z * y for z, y in zip(zs, ys)) / szz
    resid = tuple(y - syn_ns * z for z, y in zip(zs, ys))
    stderr = None
    if len(reports) > 1:
        s2 = sum(e * e for e in resid) / (len(reports) - 1)
        stderr = math.sqrt(s2 / szz) / 1e9
    return SynFit(syn_ns / 1e9, stderr, len(reports), resid)


@dataclass(frozen=True)
class Comparison:
    deviation: float
    model_total_ns: int
    sim_total_ns: int
    # per role: (model ns, simulated ns, relative deviation or None when model is 0)
    components: dict
    bottlenecks: list


def _rel(model_ns, sim_ns):
    return abs(sim_ns - model_ns) / model_ns if model_ns else None


def compare(breakdown: CycleBreakdown, r: int, report: SimReport, top_k: int = 5) -> Comparison:
    if r != report.r:
        raise ValueError(f"model is for r={r} circles but the simulation ran r={report.r}")
    model_ns = r * breakdown.T
    if model_ns == 0:
        raise ValueError("model time is zero; relative deviation undefined")
    comps = {}
    for role, m_ns, s_ns in (
        ("T1", r * breakdown.T1, report.t1_role_ns),
        ("T2", r * breakdown.T2, report.t2_role_ns),
        ("T3", r * breakdown.T3, report.t3_role_ns),
    ):
        comps[role] = (m_ns, s_ns, _rel(m_ns, s_ns))
    return Comparison(
        deviation=abs(report.total_time_ns - model_ns) / model_ns,
        model_total_ns=model_ns,
        sim_total_ns=report.total_time_ns,
        components=comps,
        bottlenecks=report.bottlenecks(top_k),
    )


def compare_scenario(cfg: ScenarioConfig, report: SimReport, top_k: int = 5) -> Comparison:
    sys, nodes = model_params(cfg)
    return compare(total(sys, nodes), cfg.r, report, top_k)
