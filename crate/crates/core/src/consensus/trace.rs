use std::io::Write;

use super::ConvergenceReport;

/// Writes `t,l2sq_dev,linf_dev,theorem_bound`, one row per recorded round.
pub fn write_trace_csv<W: Write>(report: &ConvergenceReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,l2sq_dev,linf_dev,theorem_bound")?;
    for (k, ((sq, inf), bound)) in report
        .l2sq_dev
        .iter()
        .zip(&report.linf_dev)
        .zip(&report.bound)
        .enumerate()
    {
        writeln!(out, "{},{},{},{}", k + 1, sq, inf, bound)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{run_consensus, MomentumParams, StopNorm};
    use crate::graphs::line_graph;

    #[test]
    fn header_and_row_count() {
        let g = line_graph(4).unwrap();
        let p = MomentumParams::default_schedule(4.0).unwrap();
        let run = run_consensus(&g, &[1.0, 0.0, 0.0, 0.0], &p, 1e-2, StopNorm::Inf, 1000).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&run.report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,l2sq_dev,linf_dev,theorem_bound");
        assert_eq!(lines.len(), run.report.rounds + 1);
        assert!(lines[1].starts_with("1,0.75,0.75,"));
    }
}
