"""Per-user SINR and rate evaluation under nominal-direction precoding.

Each (sector, cluster) group is served by a matched-filter style precoder
whose columns are the unit steering vectors of the members' own directions.
A user's interference sums over co-scheduled users of the same sector that
share a resource block and are not slot-orthogonal to it (users in the same
grid cell time-share and never interfere with each other); interference from
a time-shared cell is weighted by the transmitting user's airtime fraction.

Noise is normalized to 1, so with rho = p_max / (N0 * r * bw_rb):

    sinr = rho * omega_u * |h_u^H p_u|^2 / (rho * I + 1)
    rate = time_share * r * bw_rb * log2(1 + sinr)   [bits/s]
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .allocation import PowerAllocation, QoSSpec, ResourcePlan
from .channel import composite_steering
from .dofgrid import GridCell
from .geometry import AngularCoordinates, ArrayConfig


@dataclass(frozen=True)
class Precoder:
    """Unit-norm steering columns for one (sector, cluster) member group."""

    user_ids: tuple[int, ...]
    columns: np.ndarray  # (M, n), column k serves user_ids[k]

    def column_of(self, user_id: int) -> np.ndarray:
        return self.columns[:, self.user_ids.index(user_id)]


@dataclass(frozen=True)
class SinrReport:
    signal: float
    interference: float  # noise-normalized total
    sinr: float
    per_interferer: Mapping[int, float]


@dataclass(frozen=True)
class ServedUser:
    """Everything the rate evaluator needs to know about one scheduled user."""

    user_id: int
    cell: GridCell
    angles: AngularCoordinates
    channel: np.ndarray
    time_share: float


@dataclass(frozen=True)
class RateReport:
    rates: Mapping[int, float]                 # bits/s
    spectral_efficiency: Mapping[int, float]   # bits/s/Hz within the user's slot
    sinr: Mapping[int, float]
    sum_rate: float


@dataclass(frozen=True)
class ConstraintReport:
    power_margin_w: float            # p_total - p_max * sum(omega)
    qos_margin_model: float          # min over users, allocator gain model
    qos_margin_realized: float       # min over users, with interference
    min_omega: float
    qos_feasible: bool

    @property
    def satisfied(self) -> bool:
        return (
            self.power_margin_w >= -1e-9
            and self.qos_margin_model >= -1e-9
            and self.min_omega >= 0.0
        )


def build_precoder(
    members: Sequence[tuple[int, AngularCoordinates]], cfg: ArrayConfig
) -> Precoder:
    """Stack unit steering columns at the members' nominal directions."""
    if not members:
        raise ValueError("precoder needs at least one member")
    ids = tuple(uid for uid, _ in members)
    cols = np.column_stack(
        [composite_steering(a.mu_phi, a.mu_h, cfg) for _, a in members]
    )
    return Precoder(user_ids=ids, columns=cols)


def build_cluster_precoders(
    users: Sequence[ServedUser], cfg: ArrayConfig
) -> dict[tuple[int, int], Precoder]:
    """One precoder per (sector, cluster) group, members ordered by user id.

    Angle-only, so the result can be computed once per trial and reused
    across power points.
    """
    groups: dict[tuple[int, int], list[ServedUser]] = {}
    for u in users:
        groups.setdefault((u.cell.sector, u.cell.subsection), []).append(u)
    return {
        key: build_precoder(
            [(u.user_id, u.angles) for u in sorted(members, key=lambda u: u.user_id)],
            cfg,
        )
        for key, members in groups.items()
    }


def sinr(
    user_id: int,
    channels: Mapping[int, np.ndarray],
    precoder: Precoder,
    omega: Mapping[int, float],
    rho: float,
) -> SinrReport:
    """SINR of one user against every other precoder column.

    Callers encode scheduling in omega: a co-scheduled interferer carries its
    effective power coefficient (time-share weighted if its cell is shared),
    an inactive user simply carries 0.
    """
    h = channels[user_id]
    projections = np.abs(h.conj() @ precoder.columns) ** 2
    per_interferer = {}
    signal = 0.0
    for k, uid in enumerate(precoder.user_ids):
        power = rho * omega.get(uid, 0.0) * float(projections[k])
        if uid == user_id:
            signal = power
        else:
            per_interferer[uid] = power
    interference = sum(per_interferer.values())
    return SinrReport(
        signal=signal,
        interference=interference,
        sinr=signal / (interference + 1.0),
        per_interferer=per_interferer,
    )


def rate(sinr_value: float, rb_per_user: int, bw_rb: float, time_share: float) -> float:
    """Throughput of one user over its blocks and time slots, bits/s."""
    if sinr_value < 0:
        raise ValueError("sinr must be >= 0")
    if not 0.0 <= time_share <= 1.0:
        raise ValueError("time_share must lie in [0, 1]")
    return time_share * rb_per_user * bw_rb * float(np.log2(1.0 + sinr_value))


def evaluate_objective(
    users: Sequence[ServedUser],
    plan: ResourcePlan,
    power: PowerAllocation,
    qos: QoSSpec,
    rho: float,
    bw_rb: float,
    cfg: ArrayConfig,
    allocator_gains: Mapping[int, float] | None = None,
    precoders: Mapping[tuple[int, int], Precoder] | None = None,
) -> tuple[RateReport, ConstraintReport]:
    """Realized rates for a full trial plus constraint margins.

    Groups users by (sector, cluster), builds one precoder per group, and
    evaluates each user block by block. With disjoint block sets every block
    of a user sees the same interferers; when the plan reuses blocks across
    clusters the wrapped blocks also collect the other cluster's users.
    Pass the build_cluster_precoders result to reuse it across power points.
    """
    groups: dict[tuple[int, int], list[ServedUser]] = {}
    for u in users:
        groups.setdefault((u.cell.sector, u.cell.subsection), []).append(u)

    if precoders is None:
        precoders = build_cluster_precoders(users, cfg)
    cross_gain: dict[tuple[int, tuple[int, int]], np.ndarray] = {}
    rates: dict[int, float] = {}
    ses: dict[int, float] = {}
    sinrs: dict[int, float] = {}

    # which groups share a block, per sector (only possible under reuse)
    block_groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    if plan.reuse:
        for key in groups:
            for b in plan.cluster_blocks[key[1]]:
                block_groups.setdefault((key[0], b), []).append(key)

    for key, _ in sorted(groups.items(), key=lambda kv: kv[0]):
        members = sorted(groups[key], key=lambda u: u.user_id)
        prec = precoders[key]
        h_mat = np.stack([u.channel for u in members])
        proj = np.abs(h_mat.conj() @ prec.columns) ** 2  # (n, n)
        omega_eff = np.array(
            [power.omega[u.user_id] * u.time_share for u in members]
        )
        blocks = plan.cluster_blocks[key[1]]
        for a, u in enumerate(members):
            own = float(proj[a, a]) * power.omega[u.user_id]
            # same-cluster interference: same sector, different cell
            mask = np.array(
                [(v.cell != u.cell) and (b != a) for b, v in enumerate(members)]
            )
            base_i = float(np.sum(omega_eff[mask] * proj[a, mask])) if mask.any() else 0.0
            se_sum = 0.0
            for b in blocks:
                extra = 0.0
                for other in block_groups.get((key[0], b), ()):
                    if other == key:
                        continue
                    ck = (u.user_id, other)
                    if ck not in cross_gain:
                        cross_gain[ck] = (
                            np.abs(u.channel.conj() @ precoders[other].columns) ** 2
                        )
                    others = sorted(groups[other], key=lambda v: v.user_id)
                    w = np.array(
                        [power.omega[v.user_id] * v.time_share for v in others]
                    )
                    extra += float(np.sum(w * cross_gain[ck]))
                sinr_b = rho * own / (rho * (base_i + extra) + 1.0)
                se_sum += float(np.log2(1.0 + sinr_b))
            se = se_sum / len(blocks)
            uid = u.user_id
            ses[uid] = se
            sinrs[uid] = 2.0 ** se - 1.0
            rates[uid] = u.time_share * len(blocks) * bw_rb * se

    sum_rate = float(sum(rates.values()))
    spent = power.p_max * sum(power.omega.values())
    def _model_gain(u: ServedUser) -> float:
        if allocator_gains is not None:
            return allocator_gains[u.user_id]
        col = precoders[(u.cell.sector, u.cell.subsection)].column_of(u.user_id)
        return float(np.abs(np.vdot(u.channel, col)) ** 2)

    if users:
        model_margin = min(
            float(np.log2(1.0 + rho * power.omega[u.user_id] * _model_gain(u)))
            - qos.r_min
            for u in users
        )
        realized_margin = min(ses[u.user_id] - qos.r_min for u in users)
        min_omega = min(power.omega[u.user_id] for u in users)
    else:
        model_margin = float("inf")
        realized_margin = float("inf")
        min_omega = float("inf")
    report = RateReport(
        rates=rates, spectral_efficiency=ses, sinr=sinrs, sum_rate=sum_rate
    )
    constraints = ConstraintReport(
        power_margin_w=power.p_total - spent,
        qos_margin_model=model_margin,
        qos_margin_realized=realized_margin,
        min_omega=min_omega,
        qos_feasible=power.qos_feasible,
    )
    return report, constraints
