//! Vocabulary types for cluster designs and join queries, plus the
//! execution-mode selector that decides how a design runs a given query.

use crate::error::Error;

/// Functional family of a utilization-to-watts curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerFamily {
    /// `watts = a * (100 * util)^b`
    PowerLaw,
    /// `watts = a * exp(b * 100 * util)`
    Exponential,
    /// `watts = a + b * ln(100 * util)`
    Logarithmic,
}

impl PowerFamily {
    pub fn name(self) -> &'static str {
        match self {
            PowerFamily::PowerLaw => "power-law",
            PowerFamily::Exponential => "exponential",
            PowerFamily::Logarithmic => "logarithmic",
        }
    }
}

/// A fitted utilization-to-watts curve for one node type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    pub family: PowerFamily,
    pub coeff_a: f64,
    pub coeff_b: f64,
}

/// Static description of one node type.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTypeSpec {
    pub name: String,
    /// Memory available for hash-table state, in MB.
    pub memory_mb: f64,
    /// Peak rate at which one node's CPUs consume tuples, in MB/s.
    pub cpu_bandwidth_mbps: f64,
    /// Utilization floor of an idle node that is holding a job open.
    pub baseline_util: f64,
    pub power_model: PowerModel,
}

/// A node type plus how many instances of it a design deploys.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGroup {
    pub spec: NodeTypeSpec,
    pub count: usize,
}

/// A concrete cluster: up to two node groups plus the per-node I/O envelope.
///
/// Groups with `count == 0` are legal (mix sweeps produce them at the edges)
/// and are ignored everywhere except report columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDesign {
    pub node_groups: Vec<NodeGroup>,
    /// Sequential scan bandwidth of one node's disk subsystem, MB/s.
    pub disk_bandwidth_mbps: f64,
    /// Bandwidth of one NIC direction (ingress and egress each get this), MB/s.
    pub net_bandwidth_mbps: f64,
}

impl ClusterDesign {
    /// Total node count across all groups.
    pub fn total_nodes(&self) -> usize {
        self.node_groups.iter().map(|g| g.count).sum()
    }

    /// Indices of groups that actually contribute nodes.
    pub fn active_groups(&self) -> impl Iterator<Item = (usize, &NodeGroup)> {
        self.node_groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.count > 0)
    }
}

/// How build-side tuples reach the nodes that will probe against them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinStrategy {
    /// Both tables are hash-partitioned across the participating nodes.
    DualShuffle,
    /// The qualified build table is replicated to every node; the probe
    /// table is scanned in place.
    Broadcast,
}

impl JoinStrategy {
    pub fn name(self) -> &'static str {
        match self {
            JoinStrategy::DualShuffle => "dual-shuffle",
            JoinStrategy::Broadcast => "broadcast",
        }
    }
}

/// Whether the base tables start on disk or are already resident in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheMode {
    Cold,
    Warm,
}

impl CacheMode {
    pub fn name(self) -> &'static str {
        match self {
            CacheMode::Cold => "cold",
            CacheMode::Warm => "warm",
        }
    }
}

/// One equi-join between a build table and a probe table.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinQuerySpec {
    pub build_table_mb: f64,
    pub probe_table_mb: f64,
    /// Fraction of build tuples that survive the scan predicate.
    pub build_sel: f64,
    /// Fraction of probe tuples that survive the scan predicate.
    pub probe_sel: f64,
    pub strategy: JoinStrategy,
    pub cache_mode: CacheMode,
    /// In-memory size of the hash table relative to the raw qualified bytes.
    pub hash_table_expansion: f64,
}

impl JoinQuerySpec {
    /// Total qualified build bytes that must be held in hash tables, MB.
    pub fn qualified_build_mb(&self) -> f64 {
        self.build_table_mb * self.build_sel * self.hash_table_expansion
    }
}

/// The role assignment a design uses for a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutionMode {
    /// Every node scans, exchanges, builds, and probes identically.
    Homogeneous,
    /// Only the named group holds hash-table partitions; the other group
    /// scans and forwards. `builder_group` indexes `ClusterDesign::node_groups`.
    Heterogeneous { builder_group: usize },
}

impl ExecutionMode {
    pub fn name(self) -> &'static str {
        match self {
            ExecutionMode::Homogeneous => "homogeneous",
            ExecutionMode::Heterogeneous { .. } => "heterogeneous",
        }
    }
}

fn check_positive(field: &str, value: f64) -> Result<(), Error> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::InvalidSpec {
            field: field.to_string(),
            message: format!("must be a positive finite number, got {value}"),
        });
    }
    Ok(())
}

fn check_fraction(field: &str, value: f64) -> Result<(), Error> {
    if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
        return Err(Error::InvalidSpec {
            field: field.to_string(),
            message: format!("must lie in [0, 1], got {value}"),
        });
    }
    Ok(())
}

/// Validates a design/query pair before any estimation or simulation.
///
/// Checks are structural only; memory feasibility is the job of
/// [`select_execution_mode`].
pub fn validate_scenario(cluster: &ClusterDesign, query: &JoinQuerySpec) -> Result<(), Error> {
    if cluster.node_groups.is_empty() || cluster.node_groups.len() > 2 {
        return Err(Error::InvalidSpec {
            field: "node_groups".to_string(),
            message: format!(
                "a design needs one or two node groups, got {}",
                cluster.node_groups.len()
            ),
        });
    }
    if cluster.total_nodes() == 0 {
        return Err(Error::InvalidSpec {
            field: "node_groups".to_string(),
            message: "a design needs at least one node".to_string(),
        });
    }
    for group in &cluster.node_groups {
        let name = &group.spec.name;
        if name.is_empty() {
            return Err(Error::InvalidSpec {
                field: "node.name".to_string(),
                message: "node type name must be non-empty".to_string(),
            });
        }
        check_positive(&format!("node.{name}.memory_mb"), group.spec.memory_mb)?;
        check_positive(
            &format!("node.{name}.cpu_bandwidth_mbps"),
            group.spec.cpu_bandwidth_mbps,
        )?;
        let g = group.spec.baseline_util;
        if !(g.is_finite() && (0.0..1.0).contains(&g)) {
            return Err(Error::InvalidSpec {
                field: format!("node.{name}.baseline_util"),
                message: format!("must lie in [0, 1), got {g}"),
            });
        }
        let pm = &group.spec.power_model;
        for (label, v) in [("a", pm.coeff_a), ("b", pm.coeff_b)] {
            if !v.is_finite() {
                return Err(Error::InvalidSpec {
                    field: format!("node.{name}.power_model.{label}"),
                    message: format!("must be finite, got {v}"),
                });
            }
        }
        for util in [0.01, 1.0] {
            let w = crate::power::eval_power(pm, util);
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidSpec {
                    field: format!("node.{name}.power_model"),
                    message: format!("curve yields invalid power {w} W at utilization {util}"),
                });
            }
        }
    }
    if cluster.node_groups.len() == 2
        && cluster.node_groups[0].spec.name == cluster.node_groups[1].spec.name
    {
        return Err(Error::InvalidSpec {
            field: "node_groups".to_string(),
            message: format!(
                "node groups must have distinct names, both are `{}`",
                cluster.node_groups[0].spec.name
            ),
        });
    }
    check_positive("cluster.disk_bandwidth_mbps", cluster.disk_bandwidth_mbps)?;
    check_positive("cluster.net_bandwidth_mbps", cluster.net_bandwidth_mbps)?;

    check_positive("query.build_table_mb", query.build_table_mb)?;
    check_positive("query.probe_table_mb", query.probe_table_mb)?;
    check_fraction("query.build_sel", query.build_sel)?;
    check_fraction("query.probe_sel", query.probe_sel)?;
    if !(query.hash_table_expansion.is_finite() && query.hash_table_expansion >= 1.0) {
        return Err(Error::InvalidSpec {
            field: "query.hash_table_expansion".to_string(),
            message: format!("must be >= 1, got {}", query.hash_table_expansion),
        });
    }
    Ok(())
}

/// Decides how `cluster` runs `query`, or reports that it cannot.
///
/// Shuffle joins run homogeneous when every active group can hold its
/// per-node share of the hash table, `qualified / n`. Otherwise the
/// largest-memory group (declaration order breaks ties) becomes the builder
/// and must hold `qualified / builder_count` per node. Broadcast joins
/// replicate the whole qualified table to every node, so each active group
/// needs the full size; they never run heterogeneous.
pub fn select_execution_mode(
    cluster: &ClusterDesign,
    query: &JoinQuerySpec,
) -> Result<ExecutionMode, Error> {
    validate_scenario(cluster, query)?;
    let qualified = query.qualified_build_mb();
    match query.strategy {
        JoinStrategy::Broadcast => {
            for (_, group) in cluster.active_groups() {
                if group.spec.memory_mb < qualified {
                    return Err(Error::Infeasible {
                        reason: format!(
                            "broadcast needs {qualified} MB of hash table on every node but \
                             `{}` nodes have {} MB",
                            group.spec.name, group.spec.memory_mb
                        ),
                    });
                }
            }
            Ok(ExecutionMode::Homogeneous)
        }
        JoinStrategy::DualShuffle => {
            let n = cluster.total_nodes() as f64;
            let per_node = qualified / n;
            if cluster
                .active_groups()
                .all(|(_, g)| g.spec.memory_mb >= per_node)
            {
                return Ok(ExecutionMode::Homogeneous);
            }
            let (builder_group, builder) = cluster
                .active_groups()
                .max_by(|(_, a), (_, b)| {
                    a.spec
                        .memory_mb
                        .partial_cmp(&b.spec.memory_mb)
                        .expect("memory validated finite")
                })
                .expect("validated to have at least one active group");
            let per_builder = qualified / builder.count as f64;
            if builder.spec.memory_mb >= per_builder {
                Ok(ExecutionMode::Heterogeneous { builder_group })
            } else {
                Err(Error::Infeasible {
                    reason: format!(
                        "hash table needs {per_builder} MB per `{}` node but each has {} MB",
                        builder.spec.name, builder.spec.memory_mb
                    ),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{mix, wimpy};

    fn query(build_sel: f64) -> JoinQuerySpec {
        crate::testkit::standard_query(build_sel, 0.10)
    }

    #[test]
    fn small_hash_table_runs_homogeneous_on_any_mix() {
        // 700000 * 0.01 / 8 = 875 MB per node fits even wimpy memory.
        for design in [mix(8, 0), mix(2, 6), mix(0, 8)] {
            assert_eq!(
                select_execution_mode(&design, &query(0.01)).unwrap(),
                ExecutionMode::Homogeneous
            );
        }
    }

    #[test]
    fn oversized_share_promotes_large_memory_group_to_builder() {
        // 700000 * 0.10 / 8 = 8750 MB per node exceeds wimpy's 7000 MB, and
        // two beefy nodes can absorb 35000 MB each.
        assert_eq!(
            select_execution_mode(&mix(2, 6), &query(0.10)).unwrap(),
            ExecutionMode::Heterogeneous { builder_group: 0 }
        );
        // All-beefy designs still fit the per-node share, so they stay
        // homogeneous at the same selectivity.
        assert_eq!(
            select_execution_mode(&mix(8, 0), &query(0.10)).unwrap(),
            ExecutionMode::Homogeneous
        );
    }

    #[test]
    fn builder_overflow_is_infeasible() {
        // One beefy node would need the full 70000 MB but has 47000 MB.
        let err = select_execution_mode(&mix(1, 7), &query(0.10)).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }), "got {err:?}");
    }

    #[test]
    fn mode_selection_is_monotone_in_selectivity() {
        // Sweeping selectivity upward must pass through homogeneous,
        // heterogeneous, infeasible in that order with no interleaving.
        let design = mix(2, 6);
        let mut seen_hetero = false;
        let mut seen_infeasible = false;
        for step in 0..=40 {
            let sel = step as f64 / 40.0;
            match select_execution_mode(&design, &query(sel)) {
                Ok(ExecutionMode::Homogeneous) => {
                    assert!(!seen_hetero && !seen_infeasible, "regressed at sel={sel}");
                }
                Ok(ExecutionMode::Heterogeneous { .. }) => {
                    assert!(!seen_infeasible, "regressed at sel={sel}");
                    seen_hetero = true;
                }
                Err(Error::Infeasible { .. }) => seen_infeasible = true,
                Err(other) => panic!("unexpected error at sel={sel}: {other:?}"),
            }
        }
        assert!(seen_hetero && seen_infeasible);
    }

    #[test]
    fn mode_is_invariant_when_table_and_nodes_scale_together() {
        for scale in [1usize, 2, 4] {
            let design = mix(2 * scale, 6 * scale);
            let mut q = query(0.10);
            q.build_table_mb *= scale as f64;
            assert_eq!(
                select_execution_mode(&design, &q).unwrap(),
                ExecutionMode::Heterogeneous { builder_group: 0 }
            );
        }
    }

    #[test]
    fn single_group_designs_never_go_heterogeneous() {
        // A lone group either fits homogeneously or cannot run at all:
        // promoting it to builder would not change any per-node share.
        let design = ClusterDesign {
            node_groups: vec![NodeGroup {
                spec: wimpy(),
                count: 8,
            }],
            disk_bandwidth_mbps: 1200.0,
            net_bandwidth_mbps: 100.0,
        };
        assert_eq!(
            select_execution_mode(&design, &query(0.01)).unwrap(),
            ExecutionMode::Homogeneous
        );
        let err = select_execution_mode(&design, &query(0.10)).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }), "got {err:?}");
    }

    #[test]
    fn broadcast_requires_full_table_on_every_node() {
        let mut q = query(0.01);
        q.strategy = JoinStrategy::Broadcast;
        // 7000 MB of qualified table fits both node types exactly at the
        // wimpy boundary.
        q.build_table_mb = 700_000.0;
        q.build_sel = 0.01;
        assert_eq!(
            select_execution_mode(&mix(2, 6), &q).unwrap(),
            ExecutionMode::Homogeneous
        );
        // Expansion pushes it past wimpy memory; broadcast has no builder
        // fallback, so the design is simply infeasible.
        q.hash_table_expansion = 1.5;
        let err = select_execution_mode(&mix(2, 6), &q).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }), "got {err:?}");
        // The all-beefy design still fits the expanded table.
        assert_eq!(
            select_execution_mode(&mix(8, 0), &q).unwrap(),
            ExecutionMode::Homogeneous
        );
    }

    #[test]
    fn zero_count_groups_are_ignored_for_feasibility() {
        let design = mix(0, 8);
        // Only wimpy nodes exist; the empty beefy group must not be chosen
        // as builder even though it has more memory per node.
        let err = select_execution_mode(&design, &query(0.10)).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }), "got {err:?}");
    }

    #[test]
    fn validation_rejects_out_of_range_fields() {
        let design = mix(2, 6);
        let mut q = query(0.05);
        q.build_sel = 1.5;
        let err = validate_scenario(&design, &q).unwrap_err();
        match err {
            Error::InvalidSpec { field, .. } => assert_eq!(field, "query.build_sel"),
            other => panic!("expected InvalidSpec, got {other:?}"),
        }

        let mut bad = mix(2, 6);
        bad.net_bandwidth_mbps = 0.0;
        let err = validate_scenario(&bad, &query(0.05)).unwrap_err();
        match err {
            Error::InvalidSpec { field, .. } => assert_eq!(field, "cluster.net_bandwidth_mbps"),
            other => panic!("expected InvalidSpec, got {other:?}"),
        }

        let mut bad = mix(2, 6);
        bad.node_groups[1].spec.baseline_util = 1.0;
        let err = validate_scenario(&bad, &query(0.05)).unwrap_err();
        match err {
            Error::InvalidSpec { field, .. } => assert_eq!(field, "node.wimpy.baseline_util"),
            other => panic!("expected InvalidSpec, got {other:?}"),
        }
    }
}
