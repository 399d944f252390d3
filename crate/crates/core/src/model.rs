//! Closed-form performance and energy estimates for the two join strategies.
//!
//! A join runs as two phases, build then probe, and each phase is reduced to
//! a duration, a binding bottleneck, and a per-group piecewise-constant CPU
//! rate profile. Energy is the integral of each group's power curve over its
//! profile, summed across nodes.
//!
//! Time propagates through three laws:
//!
//! * Cold phases stream tables off disk at `I` per node and exchange
//!   qualified tuples over `L`-limited NICs; whichever saturates first sets
//!   the phase rate.
//! * Heterogeneous (asymmetric-role) phases add the builder ingestion cap:
//!   the aggregate qualified traffic that must land on the builder group's
//!   NICs, `table × sel × (n-1)/n`, cannot exceed `builders × L`.
//! * Warm phases consume memory-resident tables at CPU speed and only then
//!   drain their network sends, so legs add instead of overlapping. When
//!   builder and scanner drains overlap, the builder-side ingress pool is
//!   shared max-min between the two flow classes.

use crate::domain::{
    CacheMode, ClusterDesign, ExecutionMode, JoinQuerySpec, JoinStrategy,
};
use crate::error::Error;
use crate::power::eval_power;

/// Which half of the join a [`PhaseEstimate`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    Build,
    Probe,
}

impl PhaseKind {
    pub fn name(self) -> &'static str {
        match self {
            PhaseKind::Build => "build",
            PhaseKind::Probe => "probe",
        }
    }
}

/// The resource that sets a phase's duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bottleneck {
    /// Sequential scan bandwidth binds.
    Disk,
    /// The all-to-all exchange saturates every NIC symmetrically.
    NetworkExchange,
    /// The builder group's aggregate ingress cannot absorb qualified tuples
    /// as fast as the cluster produces them.
    BeefyIngestion,
    /// Memory-resident processing binds and nothing needs the network.
    Cpu,
    /// A CPU leg followed by a network drain; both contribute to the total.
    CpuPlusNetwork,
}

impl Bottleneck {
    pub fn name(self) -> &'static str {
        match self {
            Bottleneck::Disk => "disk",
            Bottleneck::NetworkExchange => "network-exchange",
            Bottleneck::BeefyIngestion => "beefy-ingestion",
            Bottleneck::Cpu => "cpu",
            Bottleneck::CpuPlusNetwork => "cpu-plus-network",
        }
    }
}

/// One phase of a join on a concrete design.
///
/// The per-group vectors are keyed by group name and hold phase averages:
/// `per_group_cpu_mbps` is the mean raw tuple-consumption rate over the
/// phase, `per_group_rate_mbps` the mean qualified-output rate, and
/// `per_group_power_w` the mean electrical power of one node of that group.
/// Energy always equals `duration_s × Σ count × per_group_power_w` exactly.
/// For single-leg (cold) phases the power values also equal the power curve
/// evaluated at the mean rate; warm phases run two legs at different
/// utilizations, so there the reported mean power is the energy-consistent
/// average of the two.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEstimate {
    pub phase: PhaseKind,
    pub duration_s: f64,
    pub per_group_rate_mbps: Vec<(String, f64)>,
    pub per_group_cpu_mbps: Vec<(String, f64)>,
    pub per_group_power_w: Vec<(String, f64)>,
    pub energy_j: f64,
    pub binding_bottleneck: Bottleneck,
}

impl PhaseEstimate {
    /// Looks up a per-group value by group name.
    pub fn group_value(map: &[(String, f64)], group: &str) -> Option<f64> {
        map.iter().find(|(name, _)| name == group).map(|&(_, v)| v)
    }
}

/// A complete two-phase join estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinEstimate {
    pub build: PhaseEstimate,
    pub probe: PhaseEstimate,
    pub total_s: f64,
    pub total_j: f64,
    pub mode: ExecutionMode,
    pub strategy: JoinStrategy,
}

/// Rates and duration of one symmetric scan-and-exchange phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousPhase {
    /// Qualified tuple output rate per node, MB/s.
    pub rate_mbps: f64,
    /// Raw scan rate per node, MB/s.
    pub cpu_mbps: f64,
    pub duration_s: f64,
    pub bottleneck: Bottleneck,
}

/// Closed form for a cold phase where every node scans its share of
/// `table_mb` off disk, keeps `1/n` of the qualified tuples, and exchanges
/// the rest across `n - 1` peers.
///
/// With a single node, or while the qualified output `disk × sel` fits under
/// the NIC line `net`, the disk binds: nodes scan flat out. Past that point
/// each NIC's ingress is the narrow resource and every node settles at the
/// qualified rate `n × net / (n - 1)`.
pub fn homogeneous_phase(
    n_total: usize,
    table_mb: f64,
    sel: f64,
    disk_mbps: f64,
    net_mbps: f64,
) -> HomogeneousPhase {
    let n = n_total as f64;
    let share = table_mb / n;
    if n_total == 1 || disk_mbps * sel < net_mbps {
        HomogeneousPhase {
            rate_mbps: disk_mbps * sel,
            cpu_mbps: disk_mbps,
            duration_s: share / disk_mbps,
            bottleneck: Bottleneck::Disk,
        }
    } else {
        let rate = n * net_mbps / (n - 1.0);
        let cpu = rate / sel;
        HomogeneousPhase {
            rate_mbps: rate,
            cpu_mbps: cpu,
            duration_s: share / cpu,
            bottleneck: Bottleneck::NetworkExchange,
        }
    }
}

/// Per-node bytes a broadcast build phase pushes to (and receives from) the
/// rest of the cluster, MB.
pub fn broadcast_exchanged_mb(table_mb: f64, sel: f64, n_total: usize) -> f64 {
    let n = n_total as f64;
    table_mb * sel * (n - 1.0) / n
}

/// A phase reduced to duration, bottleneck, and per-active-group rate
/// profiles. Segment lists may be shorter than the duration; the remainder
/// runs at zero raw rate.
struct PhasePlan {
    duration_s: f64,
    bottleneck: Bottleneck,
    /// Aligned with `ClusterDesign::active_groups`. Each entry is a list of
    /// `(seconds, raw_mbps)` legs.
    group_segments: Vec<Vec<(f64, f64)>>,
}

/// Integrates power over a plan's rate profiles and packages the estimate.
fn seal_phase(
    cluster: &ClusterDesign,
    kind: PhaseKind,
    table_mb: f64,
    sel: f64,
    plan: PhasePlan,
) -> PhaseEstimate {
    let n = cluster.total_nodes() as f64;
    let share = table_mb / n;
    let duration = plan.duration_s;
    let mut rate_map = Vec::new();
    let mut cpu_map = Vec::new();
    let mut power_map = Vec::new();
    let mut energy = 0.0;
    for ((_, group), segments) in cluster.active_groups().zip(&plan.group_segments) {
        let spec = &group.spec;
        let mut node_energy = 0.0;
        let mut covered = 0.0;
        for &(leg_s, raw_mbps) in segments {
            let util = (spec.baseline_util + raw_mbps / spec.cpu_bandwidth_mbps)
                .clamp(spec.baseline_util, 1.0);
            node_energy += leg_s * eval_power(&spec.power_model, util);
            covered += leg_s;
        }
        let idle = duration - covered;
        if idle > 0.0 {
            node_energy += idle * eval_power(&spec.power_model, spec.baseline_util);
        }
        energy += group.count as f64 * node_energy;
        let mean_power = if duration > 0.0 {
            node_energy / duration
        } else {
            eval_power(&spec.power_model, spec.baseline_util)
        };
        let mean_cpu = if duration > 0.0 { share / duration } else { 0.0 };
        rate_map.push((spec.name.clone(), mean_cpu * sel));
        cpu_map.push((spec.name.clone(), mean_cpu));
        power_map.push((spec.name.clone(), mean_power));
    }
    PhaseEstimate {
        phase: kind,
        duration_s: duration,
        per_group_rate_mbps: rate_map,
        per_group_cpu_mbps: cpu_map,
        per_group_power_w: power_map,
        energy_j: energy,
        binding_bottleneck: plan.bottleneck,
    }
}

/// Plans one shuffle phase in homogeneous mode.
fn shuffle_homogeneous_plan(
    cluster: &ClusterDesign,
    cache: CacheMode,
    table_mb: f64,
    sel: f64,
) -> PhasePlan {
    let n_total = cluster.total_nodes();
    let n = n_total as f64;
    let share = table_mb / n;
    match cache {
        CacheMode::Cold => {
            let phase = homogeneous_phase(
                n_total,
                table_mb,
                sel,
                cluster.disk_bandwidth_mbps,
                cluster.net_bandwidth_mbps,
            );
            let segments = cluster
                .active_groups()
                .map(|_| vec![(phase.duration_s, phase.cpu_mbps)])
                .collect();
            PhasePlan {
                duration_s: phase.duration_s,
                bottleneck: phase.bottleneck,
                group_segments: segments,
            }
        }
        CacheMode::Warm => {
            // Each node chews its memory-resident share at CPU speed, then
            // drains the qualified fraction bound for the other n-1 nodes.
            let send_mb = if n_total > 1 {
                share * sel * (n - 1.0) / n
            } else {
                0.0
            };
            let drain_s = send_mb / cluster.net_bandwidth_mbps;
            let legs: Vec<(f64, f64)> = cluster
                .active_groups()
                .map(|(_, g)| (share / g.spec.cpu_bandwidth_mbps, g.spec.cpu_bandwidth_mbps))
                .collect();
            let duration = legs
                .iter()
                .map(|&(cpu_s, _)| cpu_s + drain_s)
                .fold(0.0, f64::max);
            PhasePlan {
                duration_s: duration,
                bottleneck: if send_mb > 0.0 {
                    Bottleneck::CpuPlusNetwork
                } else {
                    Bottleneck::Cpu
                },
                group_segments: legs.into_iter().map(|leg| vec![leg]).collect(),
            }
        }
    }
}

/// Plans one shuffle phase in heterogeneous mode. `builder_group` indexes
/// `cluster.node_groups`.
fn shuffle_heterogeneous_plan(
    cluster: &ClusterDesign,
    builder_group: usize,
    cache: CacheMode,
    table_mb: f64,
    sel: f64,
) -> PhasePlan {
    let n_total = cluster.total_nodes();
    let n = n_total as f64;
    let share = table_mb / n;
    let builders = cluster.node_groups[builder_group].count as f64;
    let net = cluster.net_bandwidth_mbps;
    match cache {
        CacheMode::Cold => {
            // Every node scans its share; all qualified tuples except the
            // builders' own local cuts funnel into the builder group's NICs.
            let scan_s = share / cluster.disk_bandwidth_mbps;
            let traversing_mb = table_mb * sel * (n - 1.0) / n;
            let ingest_s = traversing_mb / (builders * net);
            let duration = scan_s.max(ingest_s);
            let raw = share / duration;
            PhasePlan {
                duration_s: duration,
                bottleneck: if ingest_s > scan_s {
                    Bottleneck::BeefyIngestion
                } else {
                    Bottleneck::Disk
                },
                group_segments: cluster
                    .active_groups()
                    .map(|_| vec![(duration, raw)])
                    .collect(),
            }
        }
        CacheMode::Warm => warm_heterogeneous_plan(cluster, builder_group, table_mb, sel),
    }
}

/// Warm heterogeneous phases interleave two drain classes: builders
/// redistributing qualified tuples among themselves and scanners forwarding
/// everything they qualified. Both classes start when their CPU legs end and
/// share the builder-side ingress pool max-min, which throttles scanners to
/// `net × builders / n` whenever both classes (or too many scanners) are
/// draining at once.
fn warm_heterogeneous_plan(
    cluster: &ClusterDesign,
    builder_group: usize,
    table_mb: f64,
    sel: f64,
) -> PhasePlan {
    let n = cluster.total_nodes() as f64;
    let share = table_mb / n;
    let net = cluster.net_bandwidth_mbps;
    let builder = &cluster.node_groups[builder_group];
    let n_b = builder.count as f64;
    let scanner = cluster
        .active_groups()
        .find(|&(idx, _)| idx != builder_group)
        .map(|(_, group)| group)
        .expect("heterogeneous mode requires a second active group");
    let n_s = scanner.count as f64;

    let cpu_b = share / builder.spec.cpu_bandwidth_mbps;
    let cpu_s = share / scanner.spec.cpu_bandwidth_mbps;
    // Builder-to-builder repartition bytes per builder, and scanner forward
    // bytes per scanner.
    let mut rem_int = if n_b > 1.0 {
        share * sel * (n_b - 1.0) / n_b
    } else {
        0.0
    };
    let mut rem_scn = share * sel;
    let had_sends = rem_int > 0.0 || rem_scn > 0.0;

    let mut t: f64 = 0.0;
    let mut throttled = false;
    loop {
        let int_pending = rem_int > 0.0;
        let scn_pending = rem_scn > 0.0;
        if !int_pending && !scn_pending {
            break;
        }
        let int_active = int_pending && t >= cpu_b;
        let scn_active = scn_pending && t >= cpu_s;
        if !int_active && !scn_active {
            // Jump to the earliest start among pending classes.
            let mut next = f64::INFINITY;
            if int_pending {
                next = next.min(cpu_b);
            }
            if scn_pending {
                next = next.min(cpu_s);
            }
            t = next;
            continue;
        }
        // Per-sender drain rates under the shared builder ingress pool:
        // each builder ingests its peers' repartition flows at sigma plus
        // the scanners' forwards at n_s * sigma / n_b.
        let (sigma_int, sigma_scn) = match (int_active, scn_active) {
            (true, true) => {
                let sigma = net * n_b / (n_b + n_s);
                (sigma, sigma)
            }
            (true, false) => (net, 0.0),
            (false, true) => (0.0, net.min(net * n_b / n_s)),
            (false, false) => unreachable!(),
        };
        if scn_active && sigma_scn < net {
            throttled = true;
        }
        let mut dt = f64::INFINITY;
        if int_active {
            dt = dt.min(rem_int / sigma_int);
        }
        if scn_active {
            dt = dt.min(rem_scn / sigma_scn);
        }
        // A class whose CPU leg ends mid-drain changes the sharing; stop
        // there too.
        if int_pending && !int_active {
            dt = dt.min(cpu_b - t);
        }
        if scn_pending && !scn_active {
            dt = dt.min(cpu_s - t);
        }
        t += dt;
        if int_active {
            rem_int = zero_snap(rem_int - sigma_int * dt, share * sel);
        }
        if scn_active {
            rem_scn = zero_snap(rem_scn - sigma_scn * dt, share * sel);
        }
    }
    let duration = t.max(cpu_b).max(cpu_s);

    let mut segments = Vec::new();
    for (idx, group) in cluster.active_groups() {
        let leg_s = if idx == builder_group { cpu_b } else { cpu_s };
        segments.push(vec![(leg_s, group.spec.cpu_bandwidth_mbps)]);
    }
    PhasePlan {
        duration_s: duration,
        bottleneck: if throttled {
            Bottleneck::BeefyIngestion
        } else if had_sends {
            Bottleneck::CpuPlusNetwork
        } else {
            Bottleneck::Cpu
        },
        group_segments: segments,
    }
}

fn zero_snap(value: f64, scale: f64) -> f64 {
    if value.abs() <= 1e-12 * scale.max(1.0) {
        0.0
    } else {
        value
    }
}

/// Plans a broadcast phase. The build side replicates every qualified tuple
/// to all peers; the probe side never touches the network.
fn broadcast_plan(
    cluster: &ClusterDesign,
    kind: PhaseKind,
    cache: CacheMode,
    table_mb: f64,
    sel: f64,
) -> PhasePlan {
    let n_total = cluster.total_nodes();
    let n = n_total as f64;
    let share = table_mb / n;
    let replicate_mb = match kind {
        PhaseKind::Build if n_total > 1 => share * sel * (n - 1.0),
        _ => 0.0,
    };
    match cache {
        CacheMode::Cold => {
            let scan_s = share / cluster.disk_bandwidth_mbps;
            let net_s = replicate_mb / cluster.net_bandwidth_mbps;
            let duration = scan_s.max(net_s);
            let raw = share / duration;
            PhasePlan {
                duration_s: duration,
                bottleneck: if net_s > scan_s {
                    Bottleneck::NetworkExchange
                } else {
                    Bottleneck::Disk
                },
                group_segments: cluster
                    .active_groups()
                    .map(|_| vec![(duration, raw)])
                    .collect(),
            }
        }
        CacheMode::Warm => {
            let drain_s = replicate_mb / cluster.net_bandwidth_mbps;
            let legs: Vec<(f64, f64)> = cluster
                .active_groups()
                .map(|(_, g)| (share / g.spec.cpu_bandwidth_mbps, g.spec.cpu_bandwidth_mbps))
                .collect();
            let duration = legs
                .iter()
                .map(|&(cpu_s, _)| cpu_s + drain_s)
                .fold(0.0, f64::max);
            PhasePlan {
                duration_s: duration,
                bottleneck: if replicate_mb > 0.0 {
                    Bottleneck::CpuPlusNetwork
                } else {
                    Bottleneck::Cpu
                },
                group_segments: legs.into_iter().map(|leg| vec![leg]).collect(),
            }
        }
    }
}

/// Estimates a shuffle join: both phases hash-partition their qualified
/// tuples across the participating nodes (or into the builder group when the
/// design runs heterogeneous).
pub fn estimate_dual_shuffle(
    cluster: &ClusterDesign,
    query: &JoinQuerySpec,
) -> Result<JoinEstimate, Error> {
    if query.strategy != JoinStrategy::DualShuffle {
        return Err(Error::InvalidSpec {
            field: "query.strategy".to_string(),
            message: "estimate_dual_shuffle requires the dual-shuffle strategy".to_string(),
        });
    }
    let mode = crate::domain::select_execution_mode(cluster, query)?;
    let plan_for = |table_mb: f64, sel: f64| match mode {
        ExecutionMode::Homogeneous => {
            shuffle_homogeneous_plan(cluster, query.cache_mode, table_mb, sel)
        }
        ExecutionMode::Heterogeneous { builder_group } => {
            shuffle_heterogeneous_plan(cluster, builder_group, query.cache_mode, table_mb, sel)
        }
    };
    let build = seal_phase(
        cluster,
        PhaseKind::Build,
        query.build_table_mb,
        query.build_sel,
        plan_for(query.build_table_mb, query.build_sel),
    );
    let probe = seal_phase(
        cluster,
        PhaseKind::Probe,
        query.probe_table_mb,
        query.probe_sel,
        plan_for(query.probe_table_mb, query.probe_sel),
    );
    Ok(seal_join(build, probe, mode, query.strategy))
}

/// Estimates a broadcast join: the qualified build side is replicated to
/// every node during the build phase, and the probe phase is purely local.
pub fn estimate_broadcast(
    cluster: &ClusterDesign,
    query: &JoinQuerySpec,
) -> Result<JoinEstimate, Error> {
    if query.strategy != JoinStrategy::Broadcast {
        return Err(Error::InvalidSpec {
            field: "query.strategy".to_string(),
            message: "estimate_broadcast requires the broadcast strategy".to_string(),
        });
    }
    let mode = crate::domain::select_execution_mode(cluster, query)?;
    let build = seal_phase(
        cluster,
        PhaseKind::Build,
        query.build_table_mb,
        query.build_sel,
        broadcast_plan(
            cluster,
            PhaseKind::Build,
            query.cache_mode,
            query.build_table_mb,
            query.build_sel,
        ),
    );
    let probe = seal_phase(
        cluster,
        PhaseKind::Probe,
        query.probe_table_mb,
        query.probe_sel,
        broadcast_plan(
            cluster,
            PhaseKind::Probe,
            query.cache_mode,
            query.probe_table_mb,
            query.probe_sel,
        ),
    );
    Ok(seal_join(build, probe, mode, query.strategy))
}

fn seal_join(
    build: PhaseEstimate,
    probe: PhaseEstimate,
    mode: ExecutionMode,
    strategy: JoinStrategy,
) -> JoinEstimate {
    let total_s = build.duration_s + probe.duration_s;
    let total_j = build.energy_j + probe.energy_j;
    JoinEstimate {
        build,
        probe,
        total_s,
        total_j,
        mode,
        strategy,
    }
}

/// Estimates a join with whichever strategy the query declares.
pub fn estimate(cluster: &ClusterDesign, query: &JoinQuerySpec) -> Result<JoinEstimate, Error> {
    match query.strategy {
        JoinStrategy::DualShuffle => estimate_dual_shuffle(cluster, query),
        JoinStrategy::Broadcast => estimate_broadcast(cluster, query),
    }
}

/// Verifies the bookkeeping identity `energy = duration × Σ count × power`
/// for one group listing. Exposed for tests and report sanity checks.
pub fn energy_identity_gap(cluster: &ClusterDesign, phase: &PhaseEstimate) -> f64 {
    let mut implied = 0.0;
    for (_, group) in cluster.active_groups() {
        let power = PhaseEstimate::group_value(&phase.per_group_power_w, &group.spec.name)
            .unwrap_or_default();
        implied += group.count as f64 * power;
    }
    (phase.duration_s * implied - phase.energy_j).abs()
}
