//! Event-driven fluid simulation of one or more concurrent joins.
//!
//! All quantities in the closed-form model are rates and volumes, so the
//! simulator treats every piece of work as a fluid flow: a scan draining a
//! table share through a disk, a CPU leg chewing a memory-resident share, or
//! a network drain pushing qualified tuples through NIC endpoints. Between
//! events every flow runs at the max-min fair rate over the resources it
//! traverses; the next event is the earliest flow completion, at which point
//! rates are recomputed. No randomness anywhere: identical inputs produce
//! bit-identical results.
//!
//! Resources are per node: disk bandwidth, NIC egress, NIC ingress, and (for
//! memory-resident legs only) CPU bandwidth. Cold scans are never CPU
//! rate-limited; their CPU cost enters through the power accounting, which
//! charges each node `eval_power(clamp(jobs × baseline + raw/C, _, 1))` per
//! segment. The per-job baseline term reflects that every concurrently open
//! join keeps its own slice of the node busy even while stalled on I/O.

use crate::domain::{
    CacheMode, ClusterDesign, ExecutionMode, JoinQuerySpec, JoinStrategy, PowerModel,
};
use crate::error::Error;
use crate::model::PhaseKind;
use crate::power::eval_power;

/// One admitted join and the role assignment it runs under.
#[derive(Debug, Clone, PartialEq)]
pub struct SimJob {
    pub query: JoinQuerySpec,
    pub mode: ExecutionMode,
}

/// Per-phase measurements for one job.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseOutcome {
    pub duration_s: f64,
    /// Bytes this job pushed through NIC egress during the phase, MB.
    pub network_mb: f64,
}

/// Completion record for one job.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JobOutcome {
    pub completion_s: f64,
    /// This job's share of cluster energy: each segment's energy is split
    /// evenly across the jobs still running during it.
    pub energy_j: f64,
    pub build: PhaseOutcome,
    pub probe: PhaseOutcome,
}

/// One piecewise-constant utilization segment of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSegment {
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub node: String,
    pub cpu_util: f64,
    pub watts: f64,
}

/// Everything a simulation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub per_job: Vec<JobOutcome>,
    pub cluster_energy_j: f64,
    pub makespan_s: f64,
    pub trace: Vec<TraceSegment>,
}

/// A flow remnant is snapped to done below this many MB.
const REMAINING_EPS_MB: f64 = 1e-7;
/// Rates below this are treated as stalled.
const RATE_EPS: f64 = 1e-12;

struct SimNode {
    name: String,
    cpu_bandwidth: f64,
    baseline: f64,
    power_model: PowerModel,
}

/// One fluid flow: `remaining` MB drain at a primary rate λ, consuming
/// `coeff × λ` of each listed resource.
struct Unit {
    node: usize,
    remaining: f64,
    disk: f64,
    cpu: f64,
    out: f64,
    ins: Vec<(usize, f64)>,
    /// Raw CPU tuple rate per unit of λ, for power accounting.
    raw: f64,
    /// Index of a unit in the same phase that must finish first.
    gate: Option<usize>,
    done: bool,
}

impl Unit {
    fn flow(node: usize, remaining: f64) -> Unit {
        Unit {
            node,
            remaining,
            disk: 0.0,
            cpu: 0.0,
            out: 0.0,
            ins: Vec::new(),
            raw: 0.0,
            gate: None,
            done: remaining <= REMAINING_EPS_MB,
        }
    }
}

struct JobState {
    query: JoinQuerySpec,
    mode: ExecutionMode,
    phase: PhaseKind,
    phase_start: f64,
    phase_network_mb: f64,
    units: Vec<Unit>,
    build: Option<PhaseOutcome>,
    probe: Option<PhaseOutcome>,
    energy_j: f64,
    completion_s: Option<f64>,
}

fn flatten_nodes(cluster: &ClusterDesign) -> (Vec<SimNode>, Vec<Vec<usize>>) {
    let mut nodes = Vec::new();
    let mut by_group = vec![Vec::new(); cluster.node_groups.len()];
    for (group_idx, group) in cluster.node_groups.iter().enumerate() {
        for k in 0..group.count {
            by_group[group_idx].push(nodes.len());
            nodes.push(SimNode {
                name: format!("{}-{}", group.spec.name, k),
                cpu_bandwidth: group.spec.cpu_bandwidth_mbps,
                baseline: group.spec.baseline_util,
                power_model: group.spec.power_model,
            });
        }
    }
    (nodes, by_group)
}

/// Builds the flow units for one phase of one job.
fn phase_units(
    by_group: &[Vec<usize>],
    node_count: usize,
    mode: ExecutionMode,
    query: &JoinQuerySpec,
    phase: PhaseKind,
) -> Vec<Unit> {
    let (table_mb, sel) = match phase {
        PhaseKind::Build => (query.build_table_mb, query.build_sel),
        PhaseKind::Probe => (query.probe_table_mb, query.probe_sel),
    };
    let n = node_count as f64;
    let share = table_mb / n;
    let all_nodes: Vec<usize> = (0..node_count).collect();
    let builders: Vec<usize> = match mode {
        ExecutionMode::Homogeneous => all_nodes.clone(),
        ExecutionMode::Heterogeneous { builder_group } => by_group[builder_group].clone(),
    };
    let n_b = builders.len() as f64;

    let mut units = Vec::new();
    match (query.strategy, query.cache_mode) {
        (JoinStrategy::DualShuffle, CacheMode::Cold) => {
            for &i in &all_nodes {
                let mut u = Unit::flow(i, share);
                u.disk = 1.0;
                u.raw = 1.0;
                match mode {
                    ExecutionMode::Homogeneous => {
                        if node_count > 1 {
                            u.out = sel * (n - 1.0) / n;
                            u.ins = all_nodes
                                .iter()
                                .filter(|&&j| j != i)
                                .map(|&j| (j, sel / n))
                                .collect();
                        }
                    }
                    ExecutionMode::Heterogeneous { .. } => {
                        if builders.contains(&i) {
                            if builders.len() > 1 {
                                u.out = sel * (n_b - 1.0) / n_b;
                                u.ins = builders
                                    .iter()
                                    .filter(|&&j| j != i)
                                    .map(|&j| (j, sel / n_b))
                                    .collect();
                            }
                        } else {
                            u.out = sel;
                            u.ins = builders.iter().map(|&j| (j, sel / n_b)).collect();
                        }
                    }
                }
                units.push(u);
            }
        }
        (JoinStrategy::Broadcast, CacheMode::Cold) => {
            for &i in &all_nodes {
                let mut u = Unit::flow(i, share);
                u.disk = 1.0;
                u.raw = 1.0;
                if phase == PhaseKind::Build && node_count > 1 {
                    u.out = sel * (n - 1.0);
                    u.ins = all_nodes
                        .iter()
                        .filter(|&&j| j != i)
                        .map(|&j| (j, sel))
                        .collect();
                }
                units.push(u);
            }
        }
        (strategy, CacheMode::Warm) => {
            for &i in &all_nodes {
                let mut cpu_leg = Unit::flow(i, share);
                cpu_leg.cpu = 1.0;
                cpu_leg.raw = 1.0;
                let cpu_idx = units.len();
                units.push(cpu_leg);

                let (send_mb, dests): (f64, Vec<usize>) = match (strategy, mode) {
                    (JoinStrategy::Broadcast, _) => {
                        if phase == PhaseKind::Build && node_count > 1 {
                            let dests: Vec<usize> =
                                all_nodes.iter().copied().filter(|&j| j != i).collect();
                            (share * sel * (n - 1.0), dests)
                        } else {
                            (0.0, Vec::new())
                        }
                    }
                    (JoinStrategy::DualShuffle, ExecutionMode::Homogeneous) => {
                        if node_count > 1 {
                            let dests: Vec<usize> =
                                all_nodes.iter().copied().filter(|&j| j != i).collect();
                            (share * sel * (n - 1.0) / n, dests)
                        } else {
                            (0.0, Vec::new())
                        }
                    }
                    (JoinStrategy::DualShuffle, ExecutionMode::Heterogeneous { .. }) => {
                        if builders.contains(&i) {
                            let dests: Vec<usize> =
                                builders.iter().copied().filter(|&j| j != i).collect();
                            if dests.is_empty() {
                                (0.0, dests)
                            } else {
                                (share * sel * (n_b - 1.0) / n_b, dests)
                            }
                        } else {
                            (share * sel, builders.clone())
                        }
                    }
                };
                let mut send = Unit::flow(i, send_mb);
                send.out = 1.0;
                send.gate = Some(cpu_idx);
                if !send.done {
                    let fan = dests.len() as f64;
                    send.ins = dests.into_iter().map(|j| (j, 1.0 / fan)).collect();
                }
                units.push(send);
            }
        }
    }
    units
}

/// Progressive-filling max-min: all active flows rise at one common rate;
/// when a resource saturates, the flows crossing it freeze at the current
/// level and the rest keep rising.
fn max_min_rates(
    coeffs: &[Vec<(usize, f64)>],
    caps: &[f64],
) -> Vec<f64> {
    let mut rates = vec![0.0; coeffs.len()];
    let mut frozen = vec![false; coeffs.len()];
    let mut remaining: Vec<f64> = caps.to_vec();
    let mut level = 0.0;
    loop {
        let mut sums = vec![0.0; caps.len()];
        for (u, list) in coeffs.iter().enumerate() {
            if frozen[u] {
                continue;
            }
            for &(r, c) in list {
                sums[r] += c;
            }
        }
        let mut delta = f64::INFINITY;
        let mut tightest = usize::MAX;
        for (r, &s) in sums.iter().enumerate() {
            if s > RATE_EPS {
                let d = remaining[r].max(0.0) / s;
                if d < delta {
                    delta = d;
                    tightest = r;
                }
            }
        }
        if tightest == usize::MAX {
            // No unfrozen flow touches any resource: nothing left to fill.
            break;
        }
        level += delta;
        for (r, &s) in sums.iter().enumerate() {
            if s > RATE_EPS {
                remaining[r] -= s * delta;
            }
        }
        let mut froze_any = false;
        for (u, list) in coeffs.iter().enumerate() {
            if frozen[u] {
                continue;
            }
            let saturated = list.iter().any(|&(r, c)| {
                c > RATE_EPS && (r == tightest || remaining[r] <= 1e-9 * caps[r].max(1.0))
            });
            if saturated {
                rates[u] = level;
                frozen[u] = true;
                froze_any = true;
            }
        }
        if !froze_any {
            // Defensive: guarantees termination even if rounding hides the
            // saturated resource from the epsilon test.
            break;
        }
        if frozen.iter().all(|&f| f) {
            break;
        }
    }
    rates
}

/// Runs `jobs` concurrently on `cluster`, all submitted at t = 0.
///
/// Every job must be individually feasible. Phases within a job are strictly
/// sequential: probing starts only after the build phase has completed on
/// every node.
pub fn simulate(cluster: &ClusterDesign, jobs: &[JoinQuerySpec]) -> Result<SimResult, Error> {
    let (nodes, by_group) = flatten_nodes(cluster);
    let node_count = nodes.len();
    let mut states: Vec<JobState> = Vec::with_capacity(jobs.len());
    for query in jobs {
        let mode = crate::domain::select_execution_mode(cluster, query)?;
        let units = phase_units(&by_group, node_count, mode, query, PhaseKind::Build);
        states.push(JobState {
            query: query.clone(),
            mode,
            phase: PhaseKind::Build,
            phase_start: 0.0,
            phase_network_mb: 0.0,
            units,
            build: None,
            probe: None,
            energy_j: 0.0,
            completion_s: None,
        });
    }

    let disk = cluster.disk_bandwidth_mbps;
    let net = cluster.net_bandwidth_mbps;
    // Resource layout: [disk | cpu | out | in], each `node_count` wide.
    let mut caps = vec![0.0; 4 * node_count];
    for i in 0..node_count {
        caps[i] = disk;
        caps[node_count + i] = nodes[i].cpu_bandwidth;
        caps[2 * node_count + i] = net;
        caps[3 * node_count + i] = net;
    }

    let mut t = 0.0;
    let mut node_energy = vec![0.0; node_count];
    let mut trace = Vec::new();

    loop {
        // Collect flows that may run right now.
        let mut active: Vec<(usize, usize)> = Vec::new();
        let mut pending = 0usize;
        for (ji, job) in states.iter().enumerate() {
            if job.completion_s.is_some() {
                continue;
            }
            for (ui, unit) in job.units.iter().enumerate() {
                if unit.done {
                    continue;
                }
                pending += 1;
                let gate_open = unit.gate.map_or(true, |g| job.units[g].done);
                if gate_open {
                    active.push((ji, ui));
                }
            }
        }
        if pending == 0 {
            break;
        }
        if active.is_empty() {
            return Err(Error::NoProgress { time_s: t, pending });
        }

        let coeffs: Vec<Vec<(usize, f64)>> = active
            .iter()
            .map(|&(ji, ui)| {
                let unit = &states[ji].units[ui];
                let mut list = Vec::with_capacity(3 + unit.ins.len());
                if unit.disk > 0.0 {
                    list.push((unit.node, unit.disk));
                }
                if unit.cpu > 0.0 {
                    list.push((node_count + unit.node, unit.cpu));
                }
                if unit.out > 0.0 {
                    list.push((2 * node_count + unit.node, unit.out));
                }
                for &(dst, c) in &unit.ins {
                    list.push((3 * node_count + dst, c));
                }
                list
            })
            .collect();
        let rates = max_min_rates(&coeffs, &caps);

        let mut dt = f64::INFINITY;
        for (k, &(ji, ui)) in active.iter().enumerate() {
            if rates[k] > RATE_EPS {
                dt = dt.min(states[ji].units[ui].remaining / rates[k]);
            }
        }
        if !dt.is_finite() {
            return Err(Error::NoProgress { time_s: t, pending });
        }

        // Power accounting over [t, t + dt].
        let mut raw = vec![0.0; node_count];
        for (k, &(ji, ui)) in active.iter().enumerate() {
            let unit = &states[ji].units[ui];
            raw[unit.node] += rates[k] * unit.raw;
        }
        let running = states.iter().filter(|j| j.completion_s.is_none()).count();
        let mut segment_energy = 0.0;
        for (i, node) in nodes.iter().enumerate() {
            let util = (running as f64 * node.baseline + raw[i] / node.cpu_bandwidth).min(1.0);
            let watts = eval_power(&node.power_model, util);
            let energy = watts * dt;
            node_energy[i] += energy;
            segment_energy += energy;
            trace.push(TraceSegment {
                t_start_s: t,
                t_end_s: t + dt,
                node: node.name.clone(),
                cpu_util: util,
                watts,
            });
        }
        let share = segment_energy / running as f64;
        for job in states.iter_mut().filter(|j| j.completion_s.is_none()) {
            job.energy_j += share;
        }

        // Advance flows.
        t += dt;
        for (k, &(ji, ui)) in active.iter().enumerate() {
            let job = &mut states[ji];
            job.phase_network_mb += rates[k] * job.units[ui].out * dt;
            let unit = &mut job.units[ui];
            unit.remaining -= rates[k] * dt;
            if unit.remaining <= REMAINING_EPS_MB {
                unit.remaining = 0.0;
                unit.done = true;
            }
        }

        // Phase transitions and completions.
        for job in states.iter_mut() {
            if job.completion_s.is_some() || !job.units.iter().all(|u| u.done) {
                continue;
            }
            let outcome = PhaseOutcome {
                duration_s: t - job.phase_start,
                network_mb: job.phase_network_mb,
            };
            match job.phase {
                PhaseKind::Build => {
                    job.build = Some(outcome);
                    job.phase = PhaseKind::Probe;
                    job.phase_start = t;
                    job.phase_network_mb = 0.0;
                    job.units =
                        phase_units(&by_group, node_count, job.mode, &job.query, PhaseKind::Probe);
                }
                PhaseKind::Probe => {
                    job.probe = Some(outcome);
                    job.completion_s = Some(t);
                }
            }
        }
    }

    let per_job = states
        .iter()
        .map(|job| JobOutcome {
            completion_s: job.completion_s.unwrap_or(0.0),
            energy_j: job.energy_j,
            build: job.build.unwrap_or(PhaseOutcome {
                duration_s: 0.0,
                network_mb: 0.0,
            }),
            probe: job.probe.unwrap_or(PhaseOutcome {
                duration_s: 0.0,
                network_mb: 0.0,
            }),
        })
        .collect();
    Ok(SimResult {
        per_job,
        cluster_energy_j: node_energy.iter().sum(),
        makespan_s: t,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;
    use crate::testkit::{beefy_only, mix, standard_query};

    fn assert_close(actual: f64, expected: f64, rel: f64, label: &str) {
        let tol = rel * expected.abs().max(1e-300);
        assert!(
            (actual - expected).abs() <= tol,
            "{label}: got {actual}, expected {expected} within rel {rel}"
        );
    }

    #[test]
    fn empty_job_list_is_a_zero_result() {
        let result = simulate(&beefy_only(8), &[]).unwrap();
        assert_eq!(result.per_job.len(), 0);
        assert_eq!(result.cluster_energy_j, 0.0);
        assert_eq!(result.makespan_s, 0.0);
        assert!(result.trace.is_empty());
    }

    #[test]
    fn single_cold_shuffle_matches_the_closed_form() {
        let design = beefy_only(8);
        let query = standard_query(0.10, 0.01);
        let est = model::estimate(&design, &query).unwrap();
        let sim = simulate(&design, &[query]).unwrap();
        let job = &sim.per_job[0];
        assert_close(job.build.duration_s, est.build.duration_s, 1e-9, "build");
        assert_close(job.probe.duration_s, est.probe.duration_s, 1e-9, "probe");
        assert_close(job.completion_s, est.total_s, 1e-9, "completion");
        assert_close(sim.cluster_energy_j, est.total_j, 1e-9, "energy");
        assert_close(job.energy_j, est.total_j, 1e-9, "per-job energy");
    }

    #[test]
    fn builder_bound_cold_shuffle_matches_the_closed_form() {
        let design = mix(2, 6);
        let query = standard_query(0.10, 0.01);
        let est = model::estimate(&design, &query).unwrap();
        let sim = simulate(&design, &[query]).unwrap();
        let job = &sim.per_job[0];
        assert_close(job.build.duration_s, 306.25, 1e-9, "build");
        assert_close(job.probe.duration_s, 291.6666666666667, 1e-9, "probe");
        assert_close(sim.cluster_energy_j, est.total_j, 1e-9, "energy");
    }

    #[test]
    fn warm_phases_match_the_closed_form() {
        let mut query = standard_query(0.10, 0.01);
        query.cache_mode = CacheMode::Warm;

        let design = beefy_only(8);
        let est = model::estimate(&design, &query).unwrap();
        let sim = simulate(&design, &[query.clone()]).unwrap();
        assert_close(
            sim.per_job[0].build.duration_s,
            93.93395126067104,
            1e-9,
            "uniform build",
        );
        assert_close(sim.cluster_energy_j, est.total_j, 1e-9, "uniform energy");

        let design = mix(2, 6);
        let est = model::estimate(&design, &query).unwrap();
        let sim = simulate(&design, &[query]).unwrap();
        assert_close(
            sim.per_job[0].build.duration_s,
            340.00221434898145,
            1e-9,
            "throttled build",
        );
        assert_close(sim.per_job[0].completion_s, est.total_s, 1e-9, "total");
        assert_close(sim.cluster_energy_j, est.total_j, 1e-9, "energy");
    }

    #[test]
    fn identical_jobs_halve_rates_but_not_utilization() {
        let design = beefy_only(8);
        let query = standard_query(0.10, 0.10);
        let solo = simulate(&design, &[query.clone()]).unwrap();
        let dual = simulate(&design, &[query.clone(), query]).unwrap();
        assert_eq!(dual.per_job.len(), 2);
        for job in &dual.per_job {
            assert_close(
                job.completion_s,
                2.0 * solo.per_job[0].completion_s,
                1e-9,
                "two identical jobs take twice as long",
            );
        }

        let avg_util = |result: &SimResult, node: &str| {
            let (mut area, mut span) = (0.0, 0.0);
            for seg in result.trace.iter().filter(|s| s.node == node) {
                area += seg.cpu_util * (seg.t_end_s - seg.t_start_s);
                span += seg.t_end_s - seg.t_start_s;
            }
            area / span
        };
        let solo_util = avg_util(&solo, "beefy-0");
        let dual_util = avg_util(&dual, "beefy-0");
        assert!(
            dual_util < 2.0 * solo_util,
            "utilization must grow sub-linearly: solo {solo_util}, dual {dual_util}"
        );
        assert!(dual_util > solo_util, "more jobs still cost more CPU");
    }

    #[test]
    fn network_bytes_are_conserved() {
        // Uniform shuffle: (n-1)/n of qualified tuples traverse the network.
        let design = beefy_only(8);
        let query = standard_query(0.10, 0.05);
        let sim = simulate(&design, &[query]).unwrap();
        let job = &sim.per_job[0];
        assert_close(
            job.build.network_mb,
            700_000.0 * 0.10 * 7.0 / 8.0,
            1e-6,
            "build bytes",
        );
        assert_close(
            job.probe.network_mb,
            2_800_000.0 * 0.05 * 7.0 / 8.0,
            1e-6,
            "probe bytes",
        );

        // Broadcast replicates qualified build bytes n-1 times and moves
        // nothing during probe.
        let mut query = standard_query(0.01, 0.10);
        query.strategy = JoinStrategy::Broadcast;
        let sim = simulate(&design, &[query]).unwrap();
        let job = &sim.per_job[0];
        assert_close(
            job.build.network_mb,
            700_000.0 * 0.01 * 7.0,
            1e-6,
            "replicated bytes",
        );
        assert_close(job.probe.network_mb, 0.0, 1e-9, "probe is local");
    }

    #[test]
    fn runs_are_bit_identical() {
        let design = mix(2, 6);
        let query = standard_query(0.10, 0.01);
        let a = simulate(&design, &[query.clone(), query.clone()]).unwrap();
        let b = simulate(&design, &[query.clone(), query]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_jobs_are_rejected_up_front() {
        let design = mix(1, 7);
        let query = standard_query(0.10, 0.01);
        assert!(matches!(
            simulate(&design, &[query]),
            Err(Error::Infeasible { .. })
        ));
    }
}
