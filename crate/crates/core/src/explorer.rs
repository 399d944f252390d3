//! Design-space sweeps and the recommendation rule built on top of them.
//!
//! A sweep evaluates one query against a list of candidate cluster designs
//! and scores every candidate relative to a reference design. Points where
//! the hash table cannot fit are kept in the output with the refusal reason
//! so reports can show the full design space, not just the survivors.

use crate::domain::{ClusterDesign, ExecutionMode, JoinQuerySpec, NodeGroup, NodeTypeSpec};
use crate::error::Error;
use crate::model::{estimate, Bottleneck, JoinEstimate};

/// Two designs whose energy ratios differ by less than this (relative to the
/// larger magnitude) are treated as equally cheap and broken by the secondary
/// criteria. Keeps the tie rule stable when energies agree to the last few
/// bits but not exactly.
pub const ENERGY_TIE_EPS: f64 = 1e-9;

/// Outcome of evaluating one candidate design.
#[derive(Debug, Clone, PartialEq)]
pub enum PointOutcome {
    /// The design can run the query; ratios are relative to the reference
    /// (perf above 1.0 means faster than the reference, energy below 1.0
    /// means cheaper).
    Feasible {
        estimate: JoinEstimate,
        perf_ratio: f64,
        energy_ratio: f64,
        edp_ratio: f64,
    },
    /// The design cannot hold the hash table in any execution mode.
    Infeasible { reason: String },
}

/// One candidate design together with its evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub design: ClusterDesign,
    pub outcome: PointOutcome,
}

impl DesignPoint {
    pub fn is_feasible(&self) -> bool {
        matches!(self.outcome, PointOutcome::Feasible { .. })
    }

    pub fn estimate(&self) -> Option<&JoinEstimate> {
        match &self.outcome {
            PointOutcome::Feasible { estimate, .. } => Some(estimate),
            PointOutcome::Infeasible { .. } => None,
        }
    }

    pub fn perf_ratio(&self) -> Option<f64> {
        match &self.outcome {
            PointOutcome::Feasible { perf_ratio, .. } => Some(*perf_ratio),
            PointOutcome::Infeasible { .. } => None,
        }
    }

    pub fn energy_ratio(&self) -> Option<f64> {
        match &self.outcome {
            PointOutcome::Feasible { energy_ratio, .. } => Some(*energy_ratio),
            PointOutcome::Infeasible { .. } => None,
        }
    }

    pub fn edp_ratio(&self) -> Option<f64> {
        match &self.outcome {
            PointOutcome::Feasible { edp_ratio, .. } => Some(*edp_ratio),
            PointOutcome::Infeasible { .. } => None,
        }
    }
}

/// Scores an estimate against a reference run of the same query.
///
/// Returns `(perf_ratio, energy_ratio, edp_ratio)` where perf is the
/// reference runtime over this runtime, energy is this energy over the
/// reference energy, and the energy-delay ratio is their quotient. A design
/// that halves the runtime at equal energy scores (2.0, 1.0, 0.5).
pub fn relative_metrics(estimate: &JoinEstimate, reference: &JoinEstimate) -> (f64, f64, f64) {
    let perf_ratio = reference.total_s / estimate.total_s;
    let energy_ratio = estimate.total_j / reference.total_j;
    (perf_ratio, energy_ratio, energy_ratio / perf_ratio)
}

/// Evaluates `query` on every design in `designs`, scoring each against the
/// reference design. An infeasible reference is an error because no ratio is
/// defined; infeasible candidates are carried through as marked points.
pub fn sweep_designs(
    designs: &[ClusterDesign],
    query: &JoinQuerySpec,
    reference: &ClusterDesign,
) -> Result<Vec<DesignPoint>, Error> {
    let reference_estimate = estimate(reference, query)?;
    designs
        .iter()
        .map(|design| {
            let outcome = match estimate(design, query) {
                Ok(candidate) => {
                    let (perf_ratio, energy_ratio, edp_ratio) =
                        relative_metrics(&candidate, &reference_estimate);
                    PointOutcome::Feasible {
                        estimate: candidate,
                        perf_ratio,
                        energy_ratio,
                        edp_ratio,
                    }
                }
                Err(Error::Infeasible { reason }) => PointOutcome::Infeasible { reason },
                Err(other) => return Err(other),
            };
            Ok(DesignPoint {
                design: design.clone(),
                outcome,
            })
        })
        .collect()
}

/// All two-type mixes of `total_nodes` nodes, ordered from all-`first` to
/// all-`second` (so the count of `second` nodes increases along the list).
pub fn mix_designs(
    first: &NodeTypeSpec,
    second: &NodeTypeSpec,
    total_nodes: usize,
    disk_bandwidth_mbps: f64,
    net_bandwidth_mbps: f64,
) -> Vec<ClusterDesign> {
    (0..=total_nodes)
        .map(|second_count| ClusterDesign {
            node_groups: vec![
                NodeGroup {
                    spec: first.clone(),
                    count: total_nodes - second_count,
                },
                NodeGroup {
                    spec: second.clone(),
                    count: second_count,
                },
            ],
            disk_bandwidth_mbps,
            net_bandwidth_mbps,
        })
        .collect()
}

/// Homogeneous designs of one node type at each requested size.
pub fn scale_designs(
    node: &NodeTypeSpec,
    counts: &[usize],
    disk_bandwidth_mbps: f64,
    net_bandwidth_mbps: f64,
) -> Vec<ClusterDesign> {
    counts
        .iter()
        .map(|&count| ClusterDesign {
            node_groups: vec![NodeGroup {
                spec: node.clone(),
                count,
            }],
            disk_bandwidth_mbps,
            net_bandwidth_mbps,
        })
        .collect()
}

/// Finds the point where adding more of the small node type stops being
/// free: the first feasible heterogeneous point (in list order, which
/// callers build with the small-node count increasing) whose probe phase is
/// limited by ingestion at the builder group rather than by local scans.
/// Returns the non-builder node count of that point.
pub fn find_knee(points: &[DesignPoint]) -> Option<usize> {
    points.iter().find_map(|point| {
        let PointOutcome::Feasible { estimate, .. } = &point.outcome else {
            return None;
        };
        let ExecutionMode::Heterogeneous { builder_group } = estimate.mode else {
            return None;
        };
        if estimate.probe.binding_bottleneck != Bottleneck::BeefyIngestion {
            return None;
        }
        let scan_only_nodes = point
            .design
            .active_groups()
            .filter(|(index, _)| *index != builder_group)
            .map(|(_, group)| group.count)
            .sum();
        Some(scan_only_nodes)
    })
}

/// Picks the cheapest design that still meets the performance floor.
///
/// Candidates are feasible points with `perf_ratio >= perf_floor`. The
/// winner has the lowest energy ratio; near-exact energy ties go to the
/// faster design, then to the design with fewer nodes.
pub fn recommend(points: &[DesignPoint], perf_floor: f64) -> Result<&DesignPoint, Error> {
    let mut best: Option<(&DesignPoint, f64, f64, usize)> = None;
    for point in points {
        let PointOutcome::Feasible {
            perf_ratio,
            energy_ratio,
            ..
        } = point.outcome
        else {
            continue;
        };
        if perf_ratio < perf_floor {
            continue;
        }
        let nodes = point.design.total_nodes();
        match best {
            None => best = Some((point, energy_ratio, perf_ratio, nodes)),
            Some((_, best_energy, best_perf, best_nodes)) => {
                let tol = ENERGY_TIE_EPS * energy_ratio.abs().max(best_energy.abs());
                let wins = if energy_ratio < best_energy - tol {
                    true
                } else if energy_ratio > best_energy + tol {
                    false
                } else if perf_ratio != best_perf {
                    perf_ratio > best_perf
                } else {
                    nodes < best_nodes
                };
                if wins {
                    best = Some((point, energy_ratio, perf_ratio, nodes));
                }
            }
        }
    }
    best.map(|(point, _, _, _)| point)
        .ok_or(Error::NoFeasibleDesign)
}
