//! Line-oriented scenario files.
//!
//! A scenario is a small INI-flavored document: `[node <name>]` sections
//! declare hardware types, `[cluster]` wires them into a design, `[query]`
//! describes the join, and optional `[sweep]` / `[reference]` sections set up
//! a design-space exploration. Keys are `key = value`, comments start with
//! `#` at the beginning of a line, and everything resolves by node-type name
//! at parse time so later stages never see a dangling reference.

use clusterwatt_core::domain::{
    CacheMode, ClusterDesign, JoinQuerySpec, JoinStrategy, NodeGroup, NodeTypeSpec, PowerFamily,
    PowerModel,
};
use clusterwatt_core::explorer::{mix_designs, scale_designs};

/// A parse failure, pointing at the offending line where one exists.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing required section [{name}]")]
    MissingSection { name: String },
}

/// How a sweep walks the design space.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Every split of `total` nodes between the two types, from all-`first`
    /// to all-`second`.
    Mix {
        first: NodeTypeSpec,
        second: NodeTypeSpec,
        total: usize,
    },
    /// Homogeneous clusters of `node` at each listed size.
    Scale {
        node: NodeTypeSpec,
        counts: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Default performance floor for recommendations driven by this file.
    pub perf_floor: Option<f64>,
}

/// Everything a scenario file declares.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub node_types: Vec<NodeTypeSpec>,
    pub cluster: ClusterDesign,
    pub query: JoinQuerySpec,
    pub sweep: Option<SweepSpec>,
    /// Explicit baseline design; when absent the cluster itself is the
    /// reference.
    pub reference: Option<ClusterDesign>,
}

impl Scenario {
    pub fn node_type(&self, name: &str) -> Option<&NodeTypeSpec> {
        self.node_types.iter().find(|t| t.name == name)
    }

    /// The design that ratios are computed against.
    pub fn reference_design(&self) -> &ClusterDesign {
        self.reference.as_ref().unwrap_or(&self.cluster)
    }

    /// Candidate designs spanned by the sweep axis, or `None` when the file
    /// has no `[sweep]` section. Candidates inherit the cluster's disk and
    /// network bandwidths.
    pub fn designs(&self) -> Option<Vec<ClusterDesign>> {
        let sweep = self.sweep.as_ref()?;
        let disk = self.cluster.disk_bandwidth_mbps;
        let net = self.cluster.net_bandwidth_mbps;
        Some(match &sweep.axis {
            SweepAxis::Mix {
                first,
                second,
                total,
            } => mix_designs(first, second, *total, disk, net),
            SweepAxis::Scale { node, counts } => scale_designs(node, counts, disk, net),
        })
    }
}

#[derive(Debug, PartialEq)]
enum SectionKind {
    Node(String),
    Cluster,
    Query,
    Sweep,
    Reference,
}

struct Entry {
    line: usize,
    key: String,
    value: String,
    consumed: bool,
}

struct Section {
    kind: SectionKind,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn label(&self) -> String {
        match &self.kind {
            SectionKind::Node(name) => format!("node {name}"),
            SectionKind::Cluster => "cluster".to_string(),
            SectionKind::Query => "query".to_string(),
            SectionKind::Sweep => "sweep".to_string(),
            SectionKind::Reference => "reference".to_string(),
        }
    }

    /// Consumes `key` if present. Duplicate keys are an error.
    fn take(&mut self, key: &str) -> Result<Option<(usize, String)>, ScenarioError> {
        let mut found: Option<(usize, String)> = None;
        for entry in &mut self.entries {
            if entry.key != key {
                continue;
            }
            if found.is_some() {
                return Err(ScenarioError::ParseError {
                    line: entry.line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            entry.consumed = true;
            found = Some((entry.line, entry.value.clone()));
        }
        Ok(found)
    }

    fn require(&mut self, key: &str) -> Result<(usize, String), ScenarioError> {
        self.take(key)?.ok_or_else(|| ScenarioError::ParseError {
            line: self.line,
            message: format!("missing key `{key}` in [{}]", self.label()),
        })
    }

    /// Errors on the first key nothing claimed.
    fn finish(&self) -> Result<(), ScenarioError> {
        match self.entries.iter().find(|e| !e.consumed) {
            Some(entry) => Err(ScenarioError::UnknownKey {
                line: entry.line,
                key: entry.key.clone(),
            }),
            None => Ok(()),
        }
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ScenarioError> {
    value.parse().map_err(|_| ScenarioError::ParseError {
        line,
        message: format!("invalid value for `{key}`: expected a number, got `{value}`"),
    })
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize, ScenarioError> {
    value.parse().map_err(|_| ScenarioError::ParseError {
        line,
        message: format!("invalid value for `{key}`: expected a count, got `{value}`"),
    })
}

fn parse_power_model(line: usize, value: &str) -> Result<PowerModel, ScenarioError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let [family, a, b] = parts.as_slice() else {
        return Err(ScenarioError::ParseError {
            line,
            message: format!("invalid value for `power_model`: expected `<family> <a> <b>`, got `{value}`"),
        });
    };
    let family = match *family {
        "power-law" => PowerFamily::PowerLaw,
        "exponential" => PowerFamily::Exponential,
        "logarithmic" => PowerFamily::Logarithmic,
        other => {
            return Err(ScenarioError::ParseError {
                line,
                message: format!(
                    "unknown power model family `{other}` (expected power-law, exponential, or logarithmic)"
                ),
            })
        }
    };
    Ok(PowerModel {
        family,
        coeff_a: parse_f64(line, "power_model", a)?,
        coeff_b: parse_f64(line, "power_model", b)?,
    })
}

fn resolve<'a>(
    line: usize,
    name: &str,
    node_types: &'a [NodeTypeSpec],
) -> Result<&'a NodeTypeSpec, ScenarioError> {
    node_types
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| ScenarioError::ParseError {
            line,
            message: format!("unknown node type `{name}`"),
        })
}

/// Parses a `name:count name:count ...` list into groups.
fn parse_node_list(
    line: usize,
    value: &str,
    node_types: &[NodeTypeSpec],
) -> Result<Vec<NodeGroup>, ScenarioError> {
    let mut groups = Vec::new();
    for token in value.split_whitespace() {
        let Some((name, count)) = token.split_once(':') else {
            return Err(ScenarioError::ParseError {
                line,
                message: format!("invalid node list entry `{token}`: expected `name:count`"),
            });
        };
        groups.push(NodeGroup {
            spec: resolve(line, name, node_types)?.clone(),
            count: parse_usize(line, "nodes", count)?,
        });
    }
    if groups.is_empty() {
        return Err(ScenarioError::ParseError {
            line,
            message: "empty node list".to_string(),
        });
    }
    Ok(groups)
}

fn split_sections(text: &str) -> Result<Vec<Section>, ScenarioError> {
    let mut sections: Vec<Section> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(inner) = trimmed.strip_prefix('[') {
            let Some(inner) = inner.strip_suffix(']') else {
                return Err(ScenarioError::ParseError {
                    line,
                    message: format!("unterminated section header `{trimmed}`"),
                });
            };
            let inner = inner.trim();
            let kind = if let Some(name) = inner.strip_prefix("node ") {
                let name = name.trim();
                if name.is_empty() || name.contains(':') || name.contains(char::is_whitespace) {
                    return Err(ScenarioError::ParseError {
                        line,
                        message: format!("invalid node type name `{name}`"),
                    });
                }
                if sections
                    .iter()
                    .any(|s| s.kind == SectionKind::Node(name.to_string()))
                {
                    return Err(ScenarioError::ParseError {
                        line,
                        message: format!("duplicate node type `{name}`"),
                    });
                }
                SectionKind::Node(name.to_string())
            } else {
                let kind = match inner {
                    "cluster" => SectionKind::Cluster,
                    "query" => SectionKind::Query,
                    "sweep" => SectionKind::Sweep,
                    "reference" => SectionKind::Reference,
                    other => {
                        return Err(ScenarioError::ParseError {
                            line,
                            message: format!("unknown section `[{other}]`"),
                        })
                    }
                };
                if sections.iter().any(|s| s.kind == kind) {
                    return Err(ScenarioError::ParseError {
                        line,
                        message: format!("duplicate section `[{inner}]`"),
                    });
                }
                kind
            };
            sections.push(Section {
                kind,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ScenarioError::ParseError {
                line,
                message: format!("expected `key = value`, got `{trimmed}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(ScenarioError::ParseError {
                line,
                message: "empty key".to_string(),
            });
        }
        let Some(section) = sections.last_mut() else {
            return Err(ScenarioError::ParseError {
                line,
                message: format!("key `{key}` appears before any section header"),
            });
        };
        section.entries.push(Entry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
            consumed: false,
        });
    }
    Ok(sections)
}

fn build_node_type(section: &mut Section) -> Result<NodeTypeSpec, ScenarioError> {
    let SectionKind::Node(name) = &section.kind else {
        unreachable!("caller filters node sections");
    };
    let name = name.clone();
    let (line, memory) = section.require("memory_mb")?;
    let memory_mb = parse_f64(line, "memory_mb", &memory)?;
    let (line, cpu) = section.require("cpu_bandwidth_mbps")?;
    let cpu_bandwidth_mbps = parse_f64(line, "cpu_bandwidth_mbps", &cpu)?;
    let (line, base) = section.require("baseline_util")?;
    let baseline_util = parse_f64(line, "baseline_util", &base)?;
    let (line, power) = section.require("power_model")?;
    let power_model = parse_power_model(line, &power)?;
    section.finish()?;
    Ok(NodeTypeSpec {
        name,
        memory_mb,
        cpu_bandwidth_mbps,
        baseline_util,
        power_model,
    })
}

fn build_query(section: &mut Section) -> Result<JoinQuerySpec, ScenarioError> {
    let (line, v) = section.require("build_table_mb")?;
    let build_table_mb = parse_f64(line, "build_table_mb", &v)?;
    let (line, v) = section.require("probe_table_mb")?;
    let probe_table_mb = parse_f64(line, "probe_table_mb", &v)?;
    let (line, v) = section.require("build_sel")?;
    let build_sel = parse_f64(line, "build_sel", &v)?;
    let (line, v) = section.require("probe_sel")?;
    let probe_sel = parse_f64(line, "probe_sel", &v)?;
    let (line, v) = section.require("strategy")?;
    let strategy = match v.as_str() {
        "dual-shuffle" => JoinStrategy::DualShuffle,
        "broadcast" => JoinStrategy::Broadcast,
        other => {
            return Err(ScenarioError::ParseError {
                line,
                message: format!("unknown strategy `{other}` (expected dual-shuffle or broadcast)"),
            })
        }
    };
    let cache_mode = match section.take("cache_mode")? {
        None => CacheMode::Cold,
        Some((line, v)) => match v.as_str() {
            "cold" => CacheMode::Cold,
            "warm" => CacheMode::Warm,
            other => {
                return Err(ScenarioError::ParseError {
                    line,
                    message: format!("unknown cache mode `{other}` (expected cold or warm)"),
                })
            }
        },
    };
    let hash_table_expansion = match section.take("hash_table_expansion")? {
        None => 1.0,
        Some((line, v)) => parse_f64(line, "hash_table_expansion", &v)?,
    };
    section.finish()?;
    Ok(JoinQuerySpec {
        build_table_mb,
        probe_table_mb,
        build_sel,
        probe_sel,
        strategy,
        cache_mode,
        hash_table_expansion,
    })
}

fn build_sweep(
    section: &mut Section,
    node_types: &[NodeTypeSpec],
) -> Result<SweepSpec, ScenarioError> {
    let (kind_line, kind) = section.require("kind")?;
    let axis = match kind.as_str() {
        "mix" => {
            let (line, v) = section.require("first")?;
            let first = resolve(line, &v, node_types)?.clone();
            let (line, v) = section.require("second")?;
            let second = resolve(line, &v, node_types)?.clone();
            let (line, v) = section.require("total")?;
            let total = parse_usize(line, "total", &v)?;
            SweepAxis::Mix {
                first,
                second,
                total,
            }
        }
        "scale" => {
            let (line, v) = section.require("node")?;
            let node = resolve(line, &v, node_types)?.clone();
            let (line, v) = section.require("counts")?;
            let counts = v
                .split_whitespace()
                .map(|token| parse_usize(line, "counts", token))
                .collect::<Result<Vec<_>, _>>()?;
            if counts.is_empty() {
                return Err(ScenarioError::ParseError {
                    line,
                    message: "empty counts list".to_string(),
                });
            }
            SweepAxis::Scale { node, counts }
        }
        other => {
            return Err(ScenarioError::ParseError {
                line: kind_line,
                message: format!("unknown sweep kind `{other}` (expected mix or scale)"),
            })
        }
    };
    let perf_floor = match section.take("perf_floor")? {
        None => None,
        Some((line, v)) => Some(parse_f64(line, "perf_floor", &v)?),
    };
    section.finish()?;
    Ok(SweepSpec { axis, perf_floor })
}

/// Parses a scenario document. Defaults applied: `cache_mode = cold`,
/// `hash_table_expansion = 1`.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut sections = split_sections(text)?;

    let mut node_types: Vec<NodeTypeSpec> = Vec::new();
    for section in &mut sections {
        if matches!(section.kind, SectionKind::Node(_)) {
            node_types.push(build_node_type(section)?);
        }
    }
    if node_types.is_empty() {
        return Err(ScenarioError::MissingSection {
            name: "node".to_string(),
        });
    }

    let mut cluster: Option<ClusterDesign> = None;
    let mut query: Option<JoinQuerySpec> = None;
    let mut sweep: Option<SweepSpec> = None;
    let mut reference_groups: Option<Vec<NodeGroup>> = None;
    for section in &mut sections {
        match section.kind {
            SectionKind::Node(_) => {}
            SectionKind::Cluster => {
                let (line, nodes) = section.require("nodes")?;
                let groups = parse_node_list(line, &nodes, &node_types)?;
                let (line, v) = section.require("disk_bandwidth_mbps")?;
                let disk = parse_f64(line, "disk_bandwidth_mbps", &v)?;
                let (line, v) = section.require("net_bandwidth_mbps")?;
                let net = parse_f64(line, "net_bandwidth_mbps", &v)?;
                section.finish()?;
                cluster = Some(ClusterDesign {
                    node_groups: groups,
                    disk_bandwidth_mbps: disk,
                    net_bandwidth_mbps: net,
                });
            }
            SectionKind::Query => query = Some(build_query(section)?),
            SectionKind::Sweep => sweep = Some(build_sweep(section, &node_types)?),
            SectionKind::Reference => {
                let (line, nodes) = section.require("nodes")?;
                reference_groups = Some(parse_node_list(line, &nodes, &node_types)?);
                section.finish()?;
            }
        }
    }

    let Some(cluster) = cluster else {
        return Err(ScenarioError::MissingSection {
            name: "cluster".to_string(),
        });
    };
    let Some(query) = query else {
        return Err(ScenarioError::MissingSection {
            name: "query".to_string(),
        });
    };
    let reference = reference_groups.map(|node_groups| ClusterDesign {
        node_groups,
        disk_bandwidth_mbps: cluster.disk_bandwidth_mbps,
        net_bandwidth_mbps: cluster.net_bandwidth_mbps,
    });
    Ok(Scenario {
        node_types,
        cluster,
        query,
        sweep,
        reference,
    })
}

fn node_list(groups: &[NodeGroup]) -> String {
    groups
        .iter()
        .map(|g| format!("{}:{}", g.spec.name, g.count))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders a scenario back into the file format. `parse_scenario` of the
/// result reproduces the input scenario exactly.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for node in &scenario.node_types {
        writeln!(out, "[node {}]", node.name).unwrap();
        writeln!(out, "memory_mb = {}", node.memory_mb).unwrap();
        writeln!(out, "cpu_bandwidth_mbps = {}", node.cpu_bandwidth_mbps).unwrap();
        writeln!(out, "baseline_util = {}", node.baseline_util).unwrap();
        writeln!(
            out,
            "power_model = {} {} {}",
            node.power_model.family.name(),
            node.power_model.coeff_a,
            node.power_model.coeff_b
        )
        .unwrap();
        writeln!(out).unwrap();
    }

    writeln!(out, "[cluster]").unwrap();
    writeln!(out, "nodes = {}", node_list(&scenario.cluster.node_groups)).unwrap();
    writeln!(
        out,
        "disk_bandwidth_mbps = {}",
        scenario.cluster.disk_bandwidth_mbps
    )
    .unwrap();
    writeln!(
        out,
        "net_bandwidth_mbps = {}",
        scenario.cluster.net_bandwidth_mbps
    )
    .unwrap();

    let q = &scenario.query;
    writeln!(out).unwrap();
    writeln!(out, "[query]").unwrap();
    writeln!(out, "build_table_mb = {}", q.build_table_mb).unwrap();
    writeln!(out, "probe_table_mb = {}", q.probe_table_mb).unwrap();
    writeln!(out, "build_sel = {}", q.build_sel).unwrap();
    writeln!(out, "probe_sel = {}", q.probe_sel).unwrap();
    writeln!(out, "strategy = {}", q.strategy.name()).unwrap();
    writeln!(out, "cache_mode = {}", q.cache_mode.name()).unwrap();
    writeln!(out, "hash_table_expansion = {}", q.hash_table_expansion).unwrap();

    if let Some(sweep) = &scenario.sweep {
        writeln!(out).unwrap();
        writeln!(out, "[sweep]").unwrap();
        match &sweep.axis {
            SweepAxis::Mix {
                first,
                second,
                total,
            } => {
                writeln!(out, "kind = mix").unwrap();
                writeln!(out, "first = {}", first.name).unwrap();
                writeln!(out, "second = {}", second.name).unwrap();
                writeln!(out, "total = {total}").unwrap();
            }
            SweepAxis::Scale { node, counts } => {
                writeln!(out, "kind = scale").unwrap();
                writeln!(out, "node = {}", node.name).unwrap();
                let counts: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
                writeln!(out, "counts = {}", counts.join(" ")).unwrap();
            }
        }
        if let Some(floor) = sweep.perf_floor {
            writeln!(out, "perf_floor = {floor}").unwrap();
        }
    }

    if let Some(reference) = &scenario.reference {
        writeln!(out).unwrap();
        writeln!(out, "[reference]").unwrap();
        writeln!(out, "nodes = {}", node_list(&reference.node_groups)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLUSTER_V: &str = include_str!("../fixtures/cluster_v.scn");
    const VALIDATION: &str = include_str!("../fixtures/validation_2b2w.scn");

    #[test]
    fn parses_the_bundled_heterogeneity_study() {
        let s = parse_scenario(CLUSTER_V).unwrap();
        assert_eq!(s.node_types.len(), 2);
        let beefy = s.node_type("beefy").unwrap();
        assert_eq!(beefy.memory_mb, 47000.0);
        assert_eq!(beefy.cpu_bandwidth_mbps, 5037.0);
        assert_eq!(beefy.baseline_util, 0.25);
        assert_eq!(beefy.power_model.family, PowerFamily::PowerLaw);
        assert_eq!(beefy.power_model.coeff_a, 130.03);
        let wimpy = s.node_type("wimpy").unwrap();
        assert_eq!(wimpy.memory_mb, 7000.0);
        assert_eq!(wimpy.power_model.coeff_b, 0.2875);

        assert_eq!(s.cluster.node_groups.len(), 2);
        assert_eq!(s.cluster.node_groups[0].count, 2);
        assert_eq!(s.cluster.node_groups[1].count, 6);
        assert_eq!(s.cluster.disk_bandwidth_mbps, 1200.0);
        assert_eq!(s.cluster.net_bandwidth_mbps, 100.0);

        assert_eq!(s.query.build_table_mb, 700000.0);
        assert_eq!(s.query.build_sel, 0.1);
        assert_eq!(s.query.probe_sel, 0.01);
        assert_eq!(s.query.strategy, JoinStrategy::DualShuffle);
        assert_eq!(s.query.cache_mode, CacheMode::Cold);
        assert_eq!(s.query.hash_table_expansion, 1.0);

        let designs = s.designs().unwrap();
        assert_eq!(designs.len(), 9);
        assert_eq!(designs[0].node_groups[0].count, 8);
        assert_eq!(designs[8].node_groups[1].count, 8);

        let reference = s.reference_design();
        assert_eq!(reference.total_nodes(), 8);
        assert_eq!(reference.node_groups[0].spec.name, "beefy");
    }

    #[test]
    fn parses_the_bundled_validation_cluster() {
        let s = parse_scenario(VALIDATION).unwrap();
        let big = s.node_type("big").unwrap();
        assert_eq!(big.memory_mb, 31000.0);
        assert_eq!(big.cpu_bandwidth_mbps, 4034.0);
        assert_eq!(big.power_model.coeff_a, 79.006);
        assert_eq!(big.power_model.coeff_b, 0.2451);
        assert_eq!(s.cluster.disk_bandwidth_mbps, 270.0);
        assert_eq!(s.cluster.net_bandwidth_mbps, 95.0);
        assert_eq!(s.query.cache_mode, CacheMode::Warm);
        assert_eq!(s.cluster.node_groups[0].count, 2);
        assert_eq!(s.cluster.node_groups[1].count, 2);
        assert!(s.sweep.is_none());
        assert!(s.reference.is_none());
        assert!(std::ptr::eq(s.reference_design(), &s.cluster));
    }

    #[test]
    fn round_trips_through_serialize() {
        for text in [CLUSTER_V, VALIDATION] {
            let parsed = parse_scenario(text).unwrap();
            let rendered = serialize_scenario(&parsed);
            let reparsed = parse_scenario(&rendered).unwrap();
            assert_eq!(parsed, reparsed);
        }
    }

    #[test]
    fn empty_document_misses_the_node_section() {
        assert_eq!(
            parse_scenario(""),
            Err(ScenarioError::MissingSection {
                name: "node".to_string()
            })
        );
        assert_eq!(
            parse_scenario("# only comments\n\n"),
            Err(ScenarioError::MissingSection {
                name: "node".to_string()
            })
        );
    }

    #[test]
    fn missing_sections_are_named() {
        let only_node = "[node a]\nmemory_mb = 1\ncpu_bandwidth_mbps = 1\nbaseline_util = 0.1\npower_model = power-law 1 0.1\n";
        assert_eq!(
            parse_scenario(only_node),
            Err(ScenarioError::MissingSection {
                name: "cluster".to_string()
            })
        );
        let with_cluster = format!(
            "{only_node}[cluster]\nnodes = a:2\ndisk_bandwidth_mbps = 100\nnet_bandwidth_mbps = 10\n"
        );
        assert_eq!(
            parse_scenario(&with_cluster),
            Err(ScenarioError::MissingSection {
                name: "query".to_string()
            })
        );
    }

    #[test]
    fn unknown_keys_carry_their_line_number() {
        let text = "[node a]\nmemory_mb = 1\ncpu_bandwidth_mbps = 1\nbaseline_util = 0.1\npower_model = power-law 1 0.1\nfrobnication = 9\n";
        assert_eq!(
            parse_scenario(text),
            Err(ScenarioError::UnknownKey {
                line: 6,
                key: "frobnication".to_string()
            })
        );
    }

    #[test]
    fn malformed_lines_are_parse_errors() {
        let bad_number = CLUSTER_V.replace("disk_bandwidth_mbps = 1200", "disk_bandwidth_mbps = fast");
        match parse_scenario(&bad_number) {
            Err(ScenarioError::ParseError { message, .. }) => {
                assert!(message.contains("disk_bandwidth_mbps"));
            }
            other => panic!("expected a parse error, got {other:?}"),
        }

        let unknown_type = CLUSTER_V.replace("nodes = beefy:2 wimpy:6", "nodes = beefy:2 tiny:6");
        match parse_scenario(&unknown_type) {
            Err(ScenarioError::ParseError { message, .. }) => {
                assert!(message.contains("tiny"));
            }
            other => panic!("expected a parse error, got {other:?}"),
        }

        match parse_scenario("memory_mb = 5\n") {
            Err(ScenarioError::ParseError { line: 1, .. }) => {}
            other => panic!("expected a parse error, got {other:?}"),
        }

        match parse_scenario("[node a]\nmemory_mb\n") {
            Err(ScenarioError::ParseError { line: 2, .. }) => {}
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn query_defaults_apply() {
        let text = "\
[node a]
memory_mb = 50000
cpu_bandwidth_mbps = 5000
baseline_util = 0.25
power_model = power-law 130.03 0.2369

[cluster]
nodes = a:4
disk_bandwidth_mbps = 1200
net_bandwidth_mbps = 100

[query]
build_table_mb = 1000
probe_table_mb = 4000
build_sel = 0.1
probe_sel = 0.1
strategy = broadcast
";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.query.cache_mode, CacheMode::Cold);
        assert_eq!(s.query.hash_table_expansion, 1.0);
        assert_eq!(s.query.strategy, JoinStrategy::Broadcast);
        assert!(s.designs().is_none());
    }

    #[test]
    fn duplicate_declarations_are_rejected() {
        let dup_section = format!("{CLUSTER_V}\n[cluster]\nnodes = beefy:1\n");
        assert!(matches!(
            parse_scenario(&dup_section),
            Err(ScenarioError::ParseError { .. })
        ));

        let dup_key = CLUSTER_V.replace(
            "disk_bandwidth_mbps = 1200",
            "disk_bandwidth_mbps = 1200\ndisk_bandwidth_mbps = 1300",
        );
        match parse_scenario(&dup_key) {
            Err(ScenarioError::ParseError { message, .. }) => {
                assert!(message.contains("duplicate key"));
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }
}
