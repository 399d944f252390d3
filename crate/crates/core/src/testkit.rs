//! Shared fixtures for the unit tests in this crate.

use crate::domain::{
    CacheMode, ClusterDesign, JoinQuerySpec, JoinStrategy, NodeGroup, NodeTypeSpec, PowerFamily,
    PowerModel,
};

pub(crate) fn beefy() -> NodeTypeSpec {
    NodeTypeSpec {
        name: "beefy".to_string(),
        memory_mb: 47000.0,
        cpu_bandwidth_mbps: 5037.0,
        baseline_util: 0.25,
        power_model: PowerModel {
            family: PowerFamily::PowerLaw,
            coeff_a: 130.03,
            coeff_b: 0.2369,
        },
    }
}

pub(crate) fn wimpy() -> NodeTypeSpec {
    NodeTypeSpec {
        name: "wimpy".to_string(),
        memory_mb: 7000.0,
        cpu_bandwidth_mbps: 1129.0,
        baseline_util: 0.13,
        power_model: PowerModel {
            family: PowerFamily::PowerLaw,
            coeff_a: 10.994,
            coeff_b: 0.2875,
        },
    }
}

/// Two-group design on the standard 1200 MB/s disk, 100 MB/s NIC envelope.
pub(crate) fn mix(beefy_count: usize, wimpy_count: usize) -> ClusterDesign {
    ClusterDesign {
        node_groups: vec![
            NodeGroup {
                spec: beefy(),
                count: beefy_count,
            },
            NodeGroup {
                spec: wimpy(),
                count: wimpy_count,
            },
        ],
        disk_bandwidth_mbps: 1200.0,
        net_bandwidth_mbps: 100.0,
    }
}

/// Single-group all-beefy design on the standard envelope.
pub(crate) fn beefy_only(count: usize) -> ClusterDesign {
    ClusterDesign {
        node_groups: vec![NodeGroup {
            spec: beefy(),
            count,
        }],
        disk_bandwidth_mbps: 1200.0,
        net_bandwidth_mbps: 100.0,
    }
}

/// The reference join: 700 GB build side, 2.8 TB probe side.
pub(crate) fn standard_query(build_sel: f64, probe_sel: f64) -> JoinQuerySpec {
    JoinQuerySpec {
        build_table_mb: 700_000.0,
        probe_table_mb: 2_800_000.0,
        build_sel,
        probe_sel,
        strategy: JoinStrategy::DualShuffle,
        cache_mode: CacheMode::Cold,
        hash_table_expansion: 1.0,
    }
}
