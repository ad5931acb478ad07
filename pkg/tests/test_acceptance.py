"""Acceptance suite: every system-level claim checked at a pinned tolerance.

Each test appends one verdict line per claim to the shared report that
conftest.py prints after the run, so the outcome of every check is visible
even when the whole suite is green. Stated runtime budgets are asserted
too; they are the contract that keeps the figure-level checks usable.
"""

from __future__ import annotations

import math
import time

import numpy as np

from conftest import ACCEPTANCE_REPORTS

from hapsim import (
    AngularCoordinates,
    ArrayConfig,
    ChannelStats,
    LargeScaleFading,
    QoSSpec,
    ScatteringSpread,
    ScenarioConfig,
    correlation_matrix,
    dof_azimuth,
    dof_elevation,
    fill_remaining_power,
    los_channel,
    min_power_coefficients,
    sample_channel,
    steering,
    steering_correlation,
    subsections_per_section,
)
from hapsim import cli
from hapsim.harness import dbm_to_watts, evaluate_trial, place_and_cluster, prepare_trial


def check(label: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_REPORTS.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    assert ok, f"{label}: {detail}"


def note(label: str, detail: str) -> None:
    ACCEPTANCE_REPORTS.append(f"[note] {label}: {detail}")


# -- 1: steering orthogonality -------------------------------------------------


def test_01_steering_orthogonality():
    """Steering vectors spaced by 2q/M are numerically orthogonal (q % M != 0)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    pairs = 0
    for m in (2, 4, 8, 16, 32):
        mus = rng.uniform(-1.0, 1.0, size=100)
        for q in range(-2 * m, 2 * m + 1):
            if q % m == 0:
                continue
            for mu in mus:
                inner = abs(np.vdot(steering(mu, m), steering(mu + 2.0 * q / m, m)))
                worst = max(worst, float(inner))
                pairs += 1
    elapsed = time.perf_counter() - t0
    check(
        "1 steering orthogonality",
        worst < 1e-10 and elapsed < 1.0,
        f"max |inner| {worst:.2e} over {pairs} pairs (< 1e-10), {elapsed:.2f}s (< 1s)",
    )


# -- 2: beam-count formulas vs packing oracle ----------------------------------


def brute_force_beam_count(m: int, width: float) -> int:
    """Greedy left-to-right packing of disjoint 2/m sections into [0, width].

    For intervals on a line greedy packing is maximal, so this counts the
    largest set of mutually orthogonal beams whose spans fit the range.
    Same 1e-9 slack as the closed forms' floor guard.
    """
    section = 2.0 / m
    count = 0
    x = 0.0
    while x + section <= width + 1e-9:
        count += 1
        x += section
    return count


def test_02_beam_counts_match_brute_force():
    t0 = time.perf_counter()
    mismatches = 0
    cases = 0
    for m in range(1, 33):
        for n_s in range(1, 13):
            width = 2.0 * math.sin(math.pi / n_s)
            if dof_azimuth(m, n_s) != brute_force_beam_count(m, width):
                mismatches += 1
            cases += 1
    rng = np.random.default_rng(2)
    for _ in range(20):
        radius = float(rng.uniform(10e3, 500e3))
        altitude = float(rng.uniform(5e3, 50e3))
        width = radius / math.hypot(radius, altitude)
        for m in range(1, 33):
            if dof_elevation(m, radius, altitude) != brute_force_beam_count(m, width):
                mismatches += 1
            cases += 1
    elapsed = time.perf_counter() - t0
    check(
        "2 beam-count formulas",
        mismatches == 0 and elapsed < 10.0,
        f"{mismatches} mismatches over {cases} cases, {elapsed:.2f}s (< 10s)",
    )


# -- 3: scattering covariance properties ---------------------------------------


def test_03_covariance_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_herm = worst_eig = worst_diag = worst_quad = 0.0
    for _ in range(50):
        cfg = ArrayConfig(
            m_x=int(rng.integers(1, 7)),
            m_y=int(rng.integers(1, 7)),
            d_h=float(rng.uniform(0.3, 1.0)),
            d_v=float(rng.uniform(0.3, 1.0)),
        )
        azimuth = float(rng.uniform(0.0, math.pi))
        elevation = float(rng.uniform(0.05, math.pi / 2))
        angles = AngularCoordinates(
            azimuth=azimuth,
            elevation=elevation,
            mu_phi=math.sin(elevation) * math.cos(azimuth),
            mu_h=math.cos(elevation),
        )
        spread = ScatteringSpread(
            delta_phi=float(rng.uniform(0.0, 0.3)),
            delta_theta=float(rng.uniform(0.0, 0.3)),
        )
        beta = float(10.0 ** rng.uniform(-14, -10))
        c = correlation_matrix(angles, spread, beta, cfg, quadrature_points=32)
        c2 = correlation_matrix(angles, spread, beta, cfg, quadrature_points=64)
        scale = float(np.max(np.abs(c)))
        worst_herm = max(worst_herm, float(np.max(np.abs(c - c.conj().T))) / scale)
        trace = float(np.real(np.trace(c)))
        min_eig = float(np.min(np.linalg.eigvalsh(c)))
        worst_eig = max(worst_eig, -min_eig / trace)
        worst_diag = max(worst_diag, float(np.max(np.abs(np.diag(c).real - beta))) / beta)
        worst_quad = max(worst_quad, float(np.max(np.abs(c2 - c))) / scale)
    elapsed = time.perf_counter() - t0
    check(
        "3 covariance properties",
        worst_herm <= 1e-12
        and worst_eig <= 1e-10
        and worst_diag <= 1e-6
        and worst_quad < 1e-6
        and elapsed < 30.0,
        f"hermitian {worst_herm:.1e} (<=1e-12), eig {worst_eig:.1e} (<=1e-10 rel trace), "
        f"diag {worst_diag:.1e} (<=1e-6 rel), quadrature doubling {worst_quad:.1e} "
        f"(<1e-6), {elapsed:.1f}s (< 30s)",
    )


# -- 4: subsection-count tables ------------------------------------------------


def test_04_subsection_count_tables():
    cfg = ArrayConfig()
    got_50 = tuple(subsections_per_section(50, r, cfg).l_count for r in (1, 2, 3))
    got_100 = tuple(subsections_per_section(100, r, cfg).l_count for r in (1, 2, 3, 4, 6))
    ok = got_50 == (49, 25, 16) and got_100 == (100, 49, 36, 25, 16)
    check(
        "4 subsection tables",
        ok,
        f"nbr=50 -> {got_50} (want (49, 25, 16)); nbr=100 -> {got_100} "
        f"(want (100, 49, 36, 25, 16))",
    )


# -- 5: greedy power fill vs exhaustive grid -----------------------------------


def grid_search_objective(
    gains: dict[int, float], rho: float, qos: QoSSpec, step: float = 0.005
) -> float:
    """Best sum of log2(1 + rho*g*Omega) over the share lattice.

    Shares of the unit budget move in `step` increments; the optimum lies
    on the full-spend face because the objective is increasing, so only
    that face is enumerated. Points violating a user's rate floor are
    dropped.
    """
    uids = sorted(gains)
    g = np.array([gains[u] for u in uids])
    floors = (2.0 ** qos.r_min - 1.0) / (rho * g)
    n = round(1.0 / step)
    if len(uids) == 1:
        omega = np.array([[1.0]])
    elif len(uids) == 2:
        s1 = np.arange(n + 1) * step
        omega = np.stack([s1, 1.0 - s1], axis=1)
    else:
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        k = n - i - j
        keep = k >= 0
        omega = np.stack([i[keep], j[keep], k[keep]], axis=1) * step
    feasible = np.all(omega >= floors[None, :] - 1e-12, axis=1)
    if not np.any(feasible):
        raise AssertionError("grid has no feasible point")
    values = np.log2(1.0 + rho * g[None, :] * omega[feasible]).sum(axis=1)
    return float(np.max(values))


def test_05_power_fill_matches_grid_search():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst_ratio = math.inf
    need = 2.0 ** 1.0 - 1.0
    qos = QoSSpec(r_min=1.0, delta_r=0.05)
    for _ in range(200):
        n_users = int(rng.integers(1, 4))
        gains = {u + 1: float(10.0 ** rng.uniform(-3, 0)) for u in range(n_users)}
        p = float(10.0 ** rng.uniform(-0.5, 1.0))
        floor_fraction = float(rng.uniform(0.3, 0.9))
        rho = need * sum(1.0 / v for v in gains.values()) / floor_fraction
        omega_min = min_power_coefficients(gains, rho, qos, p, p)
        alloc = fill_remaining_power(omega_min, gains, rho, p, p, qos)
        # constraints hold exactly: budget, floors, nonnegativity
        assert alloc.spent <= p * (1.0 + 1e-12)
        assert alloc.qos_feasible
        for uid, w in alloc.omega.items():
            assert w >= omega_min[uid] * (1.0 - 1e-12) >= 0.0
        achieved = sum(
            math.log2(1.0 + rho * gains[u] * w) for u, w in alloc.omega.items()
        )
        best = grid_search_objective(gains, rho, qos)
        worst_ratio = min(worst_ratio, achieved / best)
    elapsed = time.perf_counter() - t0
    check(
        "5 greedy power fill",
        worst_ratio >= 0.98 and elapsed < 60.0,
        f"worst greedy/grid ratio {worst_ratio:.4f} (>= 0.98) over 200 instances, "
        f"constraints exact, {elapsed:.1f}s (< 60s)",
    )


# -- 6: channel sampler moments ------------------------------------------------


def test_06_channel_sampling_moments():
    t0 = time.perf_counter()
    cfg = ArrayConfig()
    angles = AngularCoordinates(
        azimuth=0.4,
        elevation=0.35,
        mu_phi=math.sin(0.35) * math.cos(0.4),
        mu_h=math.cos(0.35),
    )
    spread = ScatteringSpread(delta_phi=0.05, delta_theta=0.02)
    fading = LargeScaleFading(beta_los=2e-13, beta_nlos=3e-14)
    mean = los_channel(fading, angles, cfg)
    cov = correlation_matrix(angles, spread, fading.beta_nlos, cfg)
    stats = ChannelStats(mean=mean, covariance=cov)
    rng = np.random.default_rng(6)
    n = 100_000
    draws = np.empty((n, mean.shape[0]), dtype=complex)
    for i in range(n):
        draws[i] = sample_channel(stats, rng)
    mean_err = np.abs(draws.mean(axis=0) - mean)
    mean_bound = 3.0 * np.sqrt(np.diag(cov).real / n)
    centered = draws - draws.mean(axis=0)
    cov_hat = (centered.T @ centered.conj()) / n
    cov_rel = float(
        np.linalg.norm(cov_hat - cov, "fro") / np.linalg.norm(cov, "fro")
    )
    elapsed = time.perf_counter() - t0
    mean_ok = bool(np.all(mean_err <= mean_bound))
    check(
        "6 sampler moments",
        mean_ok and cov_rel <= 0.05 and elapsed < 30.0,
        f"mean error within 3-sigma bounds: {mean_ok}, covariance rel error "
        f"{cov_rel:.3f} (<= 0.05) over {n} draws, {elapsed:.1f}s (< 30s)",
    )


# -- 7: sum-rate ordering of the clustering granularities ----------------------

# The pinned 30..50 dBm sweep sampled every 4 dB; 40+ is the upper half.
ORDERING_POWERS = (30.0, 34.0, 38.0, 42.0, 46.0, 50.0)
KNOB_POWERS = (42.0, 46.0, 50.0)
ORDERING_TRIALS = 200


def _mean_sum_rates(
    bandwidth: float,
    r_values: tuple[int, ...],
    spread_deg: float,
    powers: tuple[float, ...],
) -> dict[tuple[int, int], dict[float, tuple[float, float]]]:
    """Mean sum rate and standard error per (L, r) and power, 200 trials.

    quadrature_points=8 instead of the default 32: the covariance rule is
    a pure numerics knob and the orderings are identical for 6, 8 and 12
    points, while 32 points would put this check far over its budget.
    """
    out = {}
    for r in r_values:
        cfg = ScenarioConfig(
            bandwidth=bandwidth,
            r=r,
            quadrature_points=8,
            spread_phi_deg=spread_deg,
            spread_theta_deg=spread_deg,
        ).resolve()
        samples: dict[float, list[float]] = {p: [] for p in powers}
        for trial in range(ORDERING_TRIALS):
            state = prepare_trial(cfg, 42, trial)
            for p_dbm in powers:
                p = dbm_to_watts(p_dbm)
                samples[p_dbm].append(evaluate_trial(state, p, p).sum_rate_bps)
        out[(cfg.subsection_grid().l_count, r)] = {
            p: (
                float(np.mean(v)),
                float(np.std(v, ddof=1) / math.sqrt(len(v))),
            )
            for p, v in samples.items()
        }
    return out


def _ranking(
    means: dict[tuple[int, int], dict[float, tuple[float, float]]], p_dbm: float
) -> list[tuple[int, int]]:
    return sorted(means, key=lambda lr: means[lr][p_dbm][0], reverse=True)


def _order_text(means, powers) -> str:
    parts = []
    for p in powers:
        order = ">".join(f"({l},{r})" for l, r in _ranking(means, p))
        parts.append(f"{p:.0f}dBm {order}")
    return "; ".join(parts)


def _top_margin(means, p_dbm) -> str:
    (l1, r1), (l2, r2) = _ranking(means, p_dbm)[:2]
    m1, s1 = means[(l1, r1)][p_dbm]
    m2, s2 = means[(l2, r2)][p_dbm]
    sig = (m1 - m2) / max(math.hypot(s1, s2), 1e-12)
    return f"{p_dbm:.0f}dBm ({l1},{r1}) by {(m1 - m2) / 1e6:.2f} Mbps ({sig:.1f} se)"


def test_07_sum_rate_ordering():
    """Mean sum rate must peak at the documented clustering granularity.

    At 10 MHz the (L=25, r=2) grid should lead {(49,1), (25,2), (16,3)}
    over the upper half of the power sweep; at 20 MHz the (L=36, r=3)
    grid should lead its five-way field. The 10 MHz claim holds at the
    defaults through 46 dBm and, under the documented 20 deg angular
    spreads, through the 50 dBm endpoint as well; both settings are run
    and every ordering is reported. The 20 MHz claim does not reproduce:
    (36, 3) runs second or third across the whole sweep (0.2-1 Mbps
    behind at 30-42 dBm, decisively behind above), and no setting of
    the sanctioned knobs recovers it - angular spreads 0.5-60 deg,
    scattering penalty -5..+30 dB, or a wide-spread/zero-penalty combo.
    The structural reason: QoS floor power grows with blocks per user
    (the per-block power normalization divides by r), so the (36, 3)
    grid pays 8 percent more floor outlay than (100, 1) while serving
    a third of its users, wraps 8 of its 108 cluster-blocks onto shared
    resource blocks (the only layout of the five that wraps), and once every
    layout clears its floors the single-block grid's thin floors buy
    the most greedy surplus. The check below asserts the claim in its
    weakest form (top at any sweep power under the defaults) and is
    expected to fail; it is kept failing rather than weakened.
    """
    t0 = time.perf_counter()
    m10 = _mean_sum_rates(10e6, (1, 2, 3), 2.0, ORDERING_POWERS)
    m20 = _mean_sum_rates(20e6, (1, 2, 3, 4, 6), 2.0, ORDERING_POWERS)
    k10 = _mean_sum_rates(10e6, (1, 2, 3), 20.0, KNOB_POWERS)
    elapsed = time.perf_counter() - t0

    note("7 orderings, defaults 10 MHz", _order_text(m10, ORDERING_POWERS))
    note("7 orderings, defaults 20 MHz", _order_text(m20, ORDERING_POWERS))
    note("7 orderings, 20 deg spreads 10 MHz", _order_text(k10, KNOB_POWERS))

    ok_10_mid = _ranking(m10, 42.0)[0] == (25, 2)
    check(
        "7 sum-rate peak, 10 MHz defaults at 42 dBm",
        ok_10_mid,
        f"top {_top_margin(m10, 42.0)} (want (25,2))",
    )
    ok_knob = all(_ranking(k10, p)[0] == (25, 2) for p in KNOB_POWERS)
    check(
        "7 sum-rate peak, 10 MHz upper half at 20 deg spreads",
        ok_knob,
        "top "
        + ", ".join(_top_margin(k10, p) for p in KNOB_POWERS)
        + " (want (25,2) at all)",
    )
    note(
        "7 documented deviations",
        "10 MHz defaults at 50 dBm rank (49,1) first; the 20 deg spread "
        "setting recovers (25,2) there. 20 MHz never ranks (36,3) first "
        "at 200 trials: it trails by 0.2-1 Mbps (about 0.5-1.5 se) over "
        "30-42 dBm and loses the top of the sweep outright; spreads of "
        "0.5-60 deg, penalties of -5..+30 dB and a 20 deg/0 dB combo "
        "all leave (100,1) or (25,4) on top, so the failure below is "
        "genuine, not a knob artifact",
    )
    check(
        "7 runtime",
        elapsed < 600.0,
        f"{elapsed:.0f}s for 200 trials x 11 layout runs x "
        f"{len(ORDERING_POWERS)} powers (< 600s)",
    )
    ranks = {p: _ranking(m20, p).index((36, 3)) + 1 for p in ORDERING_POWERS}
    best_p = min(ORDERING_POWERS, key=lambda p: (ranks[p], p))
    check(
        "7 sum-rate peak, 20 MHz defaults",
        ranks[best_p] == 1,
        f"(36,3) best rank {ranks[best_p]} at {best_p:.0f} dBm where "
        f"{_top_margin(m20, best_p)} (want rank 1 somewhere in 30-50 dBm)",
    )


# -- 8: co-cluster correlation falls as the grid refines -----------------------


def test_08_cocluster_correlation_trend():
    """Finer subsection grids must reduce steering correlation inside clusters.

    Geometry-only check on an 8x8 array (beams narrow enough that the
    grid, not the beam width, limits separation) with two sectors, the
    fewest with a nonzero azimuth span; sectors are statistically
    identical copies, so averaging more adds nothing. Users fill every
    cell, and each (sector, subsection) group is exactly the set sharing
    resource blocks.
    """
    t0 = time.perf_counter()
    acfg = ArrayConfig(m_x=8, m_y=8)
    means = {}
    for r, l_count in ((3, 16), (2, 25), (1, 49)):
        cfg = ScenarioConfig(
            bandwidth=10e6, r=r, m_x=8, m_y=8, n_sectors=2
        ).resolve()
        assert cfg.subsection_grid().l_count == l_count
        total = 0.0
        count = 0
        for seed in range(100):
            served, _unserved, _rng = place_and_cluster(cfg, 42, seed)
            groups: dict[tuple[int, int], list] = {}
            for _uid, _dist, angles, cell in served:
                groups.setdefault((cell.sector, cell.subsection), []).append(angles)
            for members in groups.values():
                if len(members) < 2:
                    continue
                mu_phi = np.array([a.mu_phi for a in members])
                mu_h = np.array([a.mu_h for a in members])
                corr = steering_correlation(
                    mu_phi[:, None] - mu_phi[None, :],
                    mu_h[:, None] - mu_h[None, :],
                    acfg,
                )
                k = len(members)
                total += float(corr.sum()) - float(np.trace(corr))
                count += k * (k - 1)
        means[l_count] = total / count
    elapsed = time.perf_counter() - t0
    ok = means[16] > means[25] > means[49]
    check(
        "8 co-cluster correlation trend",
        ok and elapsed < 120.0,
        f"mean off-diagonal correlation L=16: {means[16]:.5f} > L=25: "
        f"{means[25]:.5f} > L=49: {means[49]:.5f} over 100 seeds, "
        f"{elapsed:.1f}s (< 120s)",
    )


# -- 9: CLI determinism --------------------------------------------------------


def test_09_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    config = tmp_path / "tiny.cfg"
    config.write_text(
        "bandwidth = 1.8e6\n"
        "m_y = 8\n"
        "quadrature_points = 4\n"
        "trials = 2\n"
        "seed = 7\n"
    )
    commands = {
        "run": ["run"],
        "sweep_power": ["sweep-power", "--powers-dbm", "40,46"],
        "sweep_rb": ["sweep-rb", "--r", "1,2"],
        "heatmap": ["heatmap"],
    }
    identical = []
    for name, argv in commands.items():
        outputs = []
        for attempt in ("a", "b"):
            out = tmp_path / f"{name}_{attempt}"
            code = cli.main(argv + ["--config", str(config), "--out", str(out)])
            assert code == 0
            outputs.append(
                (
                    (out / f"{name}.csv").read_bytes(),
                    (out / "meta.txt").read_bytes(),
                )
            )
        same = outputs[0] == outputs[1]
        identical.append(same)
        assert len(outputs[0][0]) > 0
    elapsed = time.perf_counter() - t0
    check(
        "9 CLI determinism",
        all(identical) and elapsed < 60.0,
        f"byte-identical reruns for {len(commands)} subcommands "
        f"(csv and meta), {elapsed:.1f}s (< 60s)",
    )
