//! CSV and text emission.
//!
//! All floating-point output goes through one significant-digit formatter so
//! identical inputs produce identical bytes on every platform. The digit
//! count defaults to 6 and can be overridden with the `CLUSTERWATT_SIG_DIGITS`
//! environment variable.

use std::io::{self, Write};

use clusterwatt_core::explorer::{DesignPoint, PointOutcome};
use clusterwatt_core::sim::TraceSegment;

pub const DEFAULT_SIG_DIGITS: usize = 6;

/// Significant digits for report output, from the environment or the
/// default. Out-of-range or unparseable settings fall back to the default.
pub fn sig_digits() -> usize {
    match std::env::var("CLUSTERWATT_SIG_DIGITS") {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(d) if (1..=17).contains(&d) => d,
            _ => DEFAULT_SIG_DIGITS,
        },
        Err(_) => DEFAULT_SIG_DIGITS,
    }
}

/// Formats with a fixed number of significant digits, positionally (no
/// scientific notation): with 6 digits, 1.0 becomes `1.00000` and 382.8125
/// becomes `382.812`. Values too large to show that few digits print all
/// their integer digits.
pub fn format_sig(value: f64, digits: usize) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    if value == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1), 0.0);
    }
    let magnitude = value.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}

fn field(value: f64, digits: usize) -> String {
    format_sig(value, digits)
}

/// Writes one row per design point in the sweep.
///
/// The header lists one `n_<group>` column per node group followed by the
/// fixed metric columns. Rows are sorted by their group-count tuples so the
/// output is byte-stable regardless of sweep order. Infeasible designs keep
/// their count columns and `feasible=false` but leave every metric empty.
pub fn write_points_csv<W: Write>(points: &[DesignPoint], out: &mut W) -> io::Result<()> {
    let Some(first) = points.first() else {
        return Ok(());
    };
    let digits = sig_digits();

    let mut columns: Vec<String> = first
        .design
        .node_groups
        .iter()
        .map(|g| format!("n_{}", g.spec.name))
        .collect();
    columns.extend(
        [
            "mode",
            "strategy",
            "t_build_s",
            "t_probe_s",
            "t_total_s",
            "e_build_j",
            "e_probe_j",
            "e_total_j",
            "perf_ratio",
            "energy_ratio",
            "edp_ratio",
            "bottleneck_build",
            "bottleneck_probe",
            "feasible",
        ]
        .map(String::from),
    );
    writeln!(out, "{}", columns.join(","))?;

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| {
        points[i]
            .design
            .node_groups
            .iter()
            .map(|g| g.count)
            .collect::<Vec<_>>()
    });

    for index in order {
        let point = &points[index];
        let mut row: Vec<String> = point
            .design
            .node_groups
            .iter()
            .map(|g| g.count.to_string())
            .collect();
        match &point.outcome {
            PointOutcome::Feasible {
                estimate,
                perf_ratio,
                energy_ratio,
                edp_ratio,
            } => {
                row.push(estimate.mode.name().to_string());
                row.push(estimate.strategy.name().to_string());
                row.push(field(estimate.build.duration_s, digits));
                row.push(field(estimate.probe.duration_s, digits));
                row.push(field(estimate.total_s, digits));
                row.push(field(estimate.build.energy_j, digits));
                row.push(field(estimate.probe.energy_j, digits));
                row.push(field(estimate.total_j, digits));
                row.push(field(*perf_ratio, digits));
                row.push(field(*energy_ratio, digits));
                row.push(field(*edp_ratio, digits));
                row.push(estimate.build.binding_bottleneck.name().to_string());
                row.push(estimate.probe.binding_bottleneck.name().to_string());
                row.push("true".to_string());
            }
            PointOutcome::Infeasible { .. } => {
                row.extend(std::iter::repeat(String::new()).take(13));
                row.push("false".to_string());
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes the simulator's per-node utilization trace, one row per segment
/// start.
pub fn write_trace_csv<W: Write>(trace: &[TraceSegment], out: &mut W) -> io::Result<()> {
    let digits = sig_digits();
    writeln!(out, "time_s,node,cpu_util,watts")?;
    for segment in trace {
        writeln!(
            out,
            "{},{},{},{}",
            field(segment.t_start_s, digits),
            segment.node,
            field(segment.cpu_util, digits),
            field(segment.watts, digits)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;
    use clusterwatt_core::explorer::sweep_designs;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(1.0, 6), "1.00000");
        assert_eq!(format_sig(0.0, 6), "0.00000");
        assert_eq!(format_sig(0.1270656511315807, 6), "0.127066");
        assert_eq!(format_sig(961139.7509962071, 6), "961140");
        assert_eq!(format_sig(0.6158536585365854, 6), "0.615854");
        assert_eq!(format_sig(597.9166666666666, 6), "597.917");
        assert_eq!(format_sig(-597.9166666666666, 6), "-597.917");
        assert_eq!(format_sig(0.0001234567, 6), "0.000123457");
        assert_eq!(format_sig(1234567.89, 6), "1234568");
        assert_eq!(format_sig(597.9166666666666, 9), "597.916667");
        assert_eq!(format_sig(2.5, 2), "2.5");
    }

    fn study_points() -> Vec<clusterwatt_core::explorer::DesignPoint> {
        let scenario =
            parse_scenario(include_str!("../fixtures/cluster_v.scn")).unwrap();
        let designs = scenario.designs().unwrap();
        sweep_designs(&designs, &scenario.query, scenario.reference_design()).unwrap()
    }

    #[test]
    fn points_csv_layout() {
        let points = study_points();
        let mut bytes = Vec::new();
        write_points_csv(&points, &mut bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();

        assert_eq!(
            lines[0],
            "n_beefy,n_wimpy,mode,strategy,t_build_s,t_probe_s,t_total_s,e_build_j,\
             e_probe_j,e_total_j,perf_ratio,energy_ratio,edp_ratio,bottleneck_build,\
             bottleneck_probe,feasible"
        );
        assert_eq!(lines.len(), 10);

        // Sorted ascending by the count tuple: 0B8W first, 8B0W last.
        assert!(lines[1].starts_with("0,8,"));
        assert!(lines[9].starts_with("8,0,"));

        // The all-wimpy and 1B7W rows cannot hold the hash table.
        assert_eq!(lines[1], "0,8,,,,,,,,,,,,,,false");
        assert_eq!(lines[2], "1,7,,,,,,,,,,,,,,false");

        // The 2B6W row carries the heterogeneous estimate.
        assert!(lines[3].starts_with("2,6,heterogeneous,dual-shuffle,306.250,291.667,597.917,"));
        assert!(lines[3].contains(",beefy-ingestion,disk,true"));
        assert!(lines[3].contains(",0.615854,0.519886,0.844172,"));

        // The reference row scores unity.
        assert!(lines[9].contains(",1.00000,1.00000,1.00000,"));
    }

    #[test]
    fn points_csv_is_byte_stable() {
        let points = study_points();
        let mut first = Vec::new();
        write_points_csv(&points, &mut first).unwrap();
        let mut second = Vec::new();
        write_points_csv(&points, &mut second).unwrap();
        assert_eq!(first, second);

        let mut reversed: Vec<_> = points.clone();
        reversed.reverse();
        let mut third = Vec::new();
        write_points_csv(&reversed, &mut third).unwrap();
        assert_eq!(first, third);
    }

    #[test]
    fn empty_point_list_writes_nothing() {
        let mut bytes = Vec::new();
        write_points_csv(&[], &mut bytes).unwrap();
        assert!(bytes.is_empty());
    }

    #[test]
    fn trace_csv_layout() {
        let trace = vec![TraceSegment {
            t_start_s: 0.0,
            t_end_s: 1.5,
            node: "beefy-0".to_string(),
            cpu_util: 0.48823705777248364,
            watts: 326.64,
        }];
        let mut bytes = Vec::new();
        write_trace_csv(&trace, &mut bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text,
            "time_s,node,cpu_util,watts\n0.00000,beefy-0,0.488237,326.640\n"
        );
    }
}
