//! CSV writers and the trajectory reader.
//!
//! Floats are written with 17 significant digits so a value read back is the
//! value that was written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use optiflock::{AgentState, DispersionRecord, OscillationEstimate, TrajectoryLog};

pub const TRAJECTORY_HEADER: &str = "t,agent,x,y,v,theta,omega";
pub const METRICS_HEADER: &str = "t,speed_spread,heading_spread";
pub const SUMMARY_HEADER: &str = "value,conv_time,final_speed_spread,final_heading_spread,n_peaks";
pub const OSCILLATION_HEADER: &str = "peak_time,zeta,omega_n";
pub const PROFILE_HEADER: &str = "bearing_rad,qdot_mag";

/// Lossless float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// C `%#.6g`: six significant digits, trailing zeros kept.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 {
            "0.00000".into()
        } else {
            x.to_string()
        };
    }
    // round first so 9.999996 moves to the next decade
    let sci = format!("{x:.5e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..6).contains(&exp) {
        let fixed = format!("{x:.*}", (5 - exp) as usize);
        if exp == 5 {
            fixed + "."
        } else {
            fixed
        }
    } else {
        let (mant, _) = sci.split_at(sci.find('e').unwrap());
        format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn write(path: &Path, body: String) -> Result<()> {
    fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))
}

fn table<I>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = String::with_capacity(1 << 16);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(log: &TrajectoryLog) -> String {
    let mut out =
        String::with_capacity(log.states.len() * log.states.first().map_or(0, Vec::len) * 140);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (t, swarm) in log.times.iter().zip(&log.states) {
        for (i, s) in swarm.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{i},{},{},{},{},{}",
                fmt_f64(*t),
                fmt_f64(s.x),
                fmt_f64(s.y),
                fmt_f64(s.v),
                fmt_f64(s.theta),
                fmt_f64(s.omega)
            );
        }
    }
    out
}

pub fn metrics_csv(metrics: &[DispersionRecord]) -> String {
    table(
        METRICS_HEADER,
        metrics.iter().map(|m| {
            vec![
                fmt_f64(m.t),
                fmt_f64(m.speed_spread),
                fmt_f64(m.heading_spread),
            ]
        }),
    )
}

pub fn oscillation_csv(est: &OscillationEstimate) -> String {
    // one row per peak pair, stamped with the pair's first peak
    table(
        OSCILLATION_HEADER,
        est.pair_times
            .iter()
            .zip(&est.zeta_seq)
            .zip(&est.omega_n_seq)
            .map(|((t, z), w)| vec![fmt_f64(*t), fmt_f64(*z), fmt_f64(*w)]),
    )
}

pub fn profile_csv(profile: &[(f64, f64)]) -> String {
    table(
        PROFILE_HEADER,
        profile.iter().map(|(b, q)| vec![fmt_f64(*b), fmt_f64(*q)]),
    )
}

/// One sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub value: f64,
    pub conv_time: Option<f64>,
    pub final_speed_spread: f64,
    pub final_heading_spread: f64,
    pub n_peaks: usize,
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    table(
        SUMMARY_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.value),
                r.conv_time.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.final_speed_spread),
                fmt_f64(r.final_heading_spread),
                r.n_peaks.to_string(),
            ]
        }),
    )
}

pub fn write_run(dir: &Path, log: &TrajectoryLog) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write(&dir.join("trajectory.csv"), trajectory_csv(log))?;
    write(&dir.join("metrics.csv"), metrics_csv(&log.metrics))
}

pub fn write_file(dir: &Path, name: &str, body: String) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write(&dir.join(name), body)
}

/// Times and states from a `trajectory.csv`.
pub fn read_trajectory(text: &str) -> Result<(Vec<f64>, Vec<Vec<AgentState>>)> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRAJECTORY_HEADER => {}
        _ => bail!("trajectory file must start with `{TRAJECTORY_HEADER}`"),
    }
    let mut times: Vec<f64> = Vec::new();
    let mut states: Vec<Vec<AgentState>> = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = n + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            bail!("trajectory row {row}: expected 7 fields, got {}", f.len());
        }
        let num = |k: usize| -> Result<f64> {
            f[k].trim()
                .parse()
                .with_context(|| format!("trajectory row {row}: bad number `{}`", f[k]))
        };
        let t = num(0)?;
        let agent: usize = f[1]
            .trim()
            .parse()
            .with_context(|| format!("trajectory row {row}: bad agent index `{}`", f[1]))?;
        if times.last() != Some(&t) {
            times.push(t);
            states.push(Vec::new());
        }
        let swarm = states.last_mut().unwrap();
        if agent != swarm.len() {
            bail!("trajectory row {row}: agents must be listed 0, 1, ... at each time");
        }
        swarm.push(AgentState::new(num(2)?, num(3)?, num(4)?, num(5)?, num(6)?));
    }
    Ok((times, states))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_matches_printf() {
        assert_eq!(fmt_sig6(0.05), "0.0500000");
        assert_eq!(fmt_sig6(1.0), "1.00000");
        assert_eq!(fmt_sig6(123456.0), "123456.");
        assert_eq!(fmt_sig6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig6(0.000012345), "1.23450e-05");
        assert_eq!(fmt_sig6(0.00012345), "0.000123450");
        assert_eq!(fmt_sig6(9.9999996), "10.0000");
        assert_eq!(fmt_sig6(-2.5), "-2.50000");
        assert_eq!(fmt_sig6(0.0), "0.00000");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn empty_oscillation_is_header_only() {
        assert_eq!(
            oscillation_csv(&OscillationEstimate::default()),
            "peak_time,zeta,omega_n\n"
        );
    }

    #[test]
    fn summary_leaves_missing_convergence_blank() {
        let row = SummaryRow {
            value: 1.0,
            conv_time: None,
            final_speed_spread: 0.5,
            final_heading_spread: 0.25,
            n_peaks: 3,
        };
        let csv = summary_csv(&[row]);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.starts_with("1.0000000000000000e0,,"));
        assert!(line.ends_with(",3"));
    }

    #[test]
    fn trajectory_round_trips() {
        let log = TrajectoryLog {
            dt: 0.5,
            times: vec![0.0, 0.5],
            states: vec![
                vec![
                    AgentState::new(0.1, 0.2, 1.0, 0.3, 0.0),
                    AgentState::new(1.0, 2.0, 1.5, -3.0, 0.1),
                ],
                vec![
                    AgentState::new(0.6, 0.2, 1.0, 0.3, 0.0),
                    AgentState::new(1.7, 2.0, 1.5, -3.0, 0.1),
                ],
            ],
            metrics: vec![],
        };
        let (times, states) = read_trajectory(&trajectory_csv(&log)).unwrap();
        assert_eq!(times, log.times);
        assert_eq!(states, log.states);
        assert!(read_trajectory("a,b\n").is_err());
        assert!(read_trajectory("t,agent,x,y,v,theta,omega\n0,1,0,0,1,0,0\n").is_err());
    }
}
