use std::io::{BufRead, Write};

use super::ReportError;
use crate::harness::{AggregateCurve, RegretTrace, RetrainRecord};

pub const TRACE_HEADER: &str = "agent,seed,step,regret,cum_regret,retrain_event";
pub const SUMMARY_HEADER: &str = "agent,runs,fcr_mean,fcr_stderr,fcr_min,fcr_max,final_dropout_rate";

/// Rounds to 6 significant digits and prints the shortest decimal that
/// parses back to the rounded value.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("scientific notation parses");
    format!("{rounded}")
}

/// Writes one row per step per trace, in the order given.
pub fn write_traces<W: Write>(mut out: W, traces: &[RegretTrace]) -> Result<(), ReportError> {
    writeln!(out, "{TRACE_HEADER}")?;
    for t in traces {
        check_name(&t.agent)?;
        let mut retrains = t.retrains.iter().map(|r| r.step).peekable();
        for (i, (r, c)) in t.regret.iter().zip(&t.cumulative).enumerate() {
            let step = i + 1;
            let event = if retrains.peek() == Some(&step) {
                retrains.next();
                1
            } else {
                0
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t.agent,
                t.seed,
                step,
                format_sig6(*r),
                format_sig6(*c),
                event
            )?;
        }
    }
    Ok(())
}

pub fn traces_to_string(traces: &[RegretTrace]) -> Result<String, ReportError> {
    let mut buf = Vec::new();
    write_traces(&mut buf, traces)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn check_name(name: &str) -> Result<(), ReportError> {
    if name.is_empty() || name.contains([',', '"', '\n', '\r']) {
        return Err(ReportError::AgentName(name.to_string()));
    }
    Ok(())
}

/// Reads a `traces.csv` back into traces. Retrain records carry only the
/// step, since the file does not hold dropout rates or losses.
pub fn read_traces<R: BufRead>(input: R) -> Result<Vec<RegretTrace>, ReportError> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != TRACE_HEADER {
        return Err(parse_err(1, format!("expected header `{TRACE_HEADER}`")));
    }
    let mut traces: Vec<RegretTrace> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(line_no, format!("expected 6 fields, found {}", fields.len())));
        }
        let num = |idx: usize| -> Result<f64, ReportError> {
            fields[idx]
                .parse::<f64>()
                .map_err(|e| parse_err(line_no, format!("field {}: {e}", idx + 1)))
        };
        let seed: u64 = fields[1]
            .parse()
            .map_err(|e| parse_err(line_no, format!("seed: {e}")))?;
        let step: usize = fields[2]
            .parse()
            .map_err(|e| parse_err(line_no, format!("step: {e}")))?;
        let (regret, cum) = (num(3)?, num(4)?);
        let event = match fields[5] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line_no, format!("retrain_event `{other}`"))),
        };
        let continues = traces
            .last()
            .is_some_and(|t| t.agent == fields[0] && t.seed == seed);
        if !continues {
            traces.push(RegretTrace {
                agent: fields[0].to_string(),
                seed,
                regret: vec![],
                cumulative: vec![],
                retrains: vec![],
            });
        }
        let t = traces.last_mut().expect("pushed above");
        if step != t.regret.len() + 1 {
            return Err(parse_err(line_no, format!("step {step} out of sequence")));
        }
        t.regret.push(regret);
        t.cumulative.push(cum);
        if event {
            t.retrains.push(RetrainRecord {
                step,
                buffer_size: step,
                mean_dropout_rate: None,
                final_loss: f64::NAN,
            });
        }
    }
    Ok(traces)
}

fn parse_err(line: usize, message: String) -> ReportError {
    ReportError::Parse { line, message }
}

/// One row per curve. `final_dropout_rate` is the mean over runs of the
/// rate after each run's last retrain, blank for agents without dropout.
pub fn write_summary<W: Write>(
    mut out: W,
    curves: &[AggregateCurve],
    traces: &[RegretTrace],
) -> Result<(), ReportError> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for c in curves {
        check_name(&c.agent)?;
        let fcrs: Vec<f64> = traces.iter().filter(|t| t.agent == c.agent).map(RegretTrace::fcr).collect();
        let rates: Vec<f64> = traces
            .iter()
            .filter(|t| t.agent == c.agent)
            .filter_map(|t| t.retrains.last().and_then(|r| r.mean_dropout_rate))
            .collect();
        let rate = if rates.is_empty() {
            String::new()
        } else {
            format_sig6(rates.iter().sum::<f64>() / rates.len() as f64)
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.agent,
            c.runs,
            format_sig6(c.fcr.mean),
            format_sig6(stderr(&fcrs)),
            format_sig6(c.fcr.min),
            format_sig6(c.fcr.max),
            rate
        )?;
    }
    Ok(())
}

fn stderr(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}
