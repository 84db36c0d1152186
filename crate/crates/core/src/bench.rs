//! Timing of streamline tracing under the naive and error-checked guided
//! schemes, laid out as a step-size by error-bound table.

use std::fmt::Write as _;
use std::time::Instant;

use crate::field::{FemField, FieldError};
use crate::linalg::Vec3;
use crate::position::Scheme;
use crate::scalar::Real;
use crate::trace::{rk2_trace, TraceConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig<T> {
    pub h_list: Vec<T>,
    pub err_list: Vec<T>,
    /// Integration time per trace; each run takes `ceil(duration / h)` steps.
    pub duration: T,
    pub repetitions: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub scheme: String,
    pub h: f64,
    pub err_max: Option<f64>,
    /// Best-of-repetitions wall time over all seeds.
    pub seconds: f64,
    pub steps_inside: usize,
    /// `naive_seconds / seconds`; absent when the row is flagged.
    pub speedup: Option<f64>,
    /// Steps inside the mesh differ from the naive reference at this `h`.
    pub flagged: bool,
}

fn time_scheme<T: Real>(
    field: &FemField<T>,
    seeds: &[Vec3<T>],
    cfg: &TraceConfig<T>,
    repetitions: usize,
) -> Result<(f64, usize), FieldError> {
    let mut best = f64::INFINITY;
    let mut steps = 0;
    for _ in 0..repetitions.max(1) {
        let start = Instant::now();
        steps = 0;
        for &s in seeds {
            steps += rk2_trace(field, s, cfg)?.steps_inside;
        }
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok((best, steps))
}

/// One naive reference row plus one row per error bound, for every `h`.
pub fn cmd_bench<T: Real>(
    field: &FemField<T>,
    seeds: &[Vec3<T>],
    cfg: &BenchConfig<T>,
) -> Result<Vec<BenchRecord>, FieldError> {
    let mut rows = Vec::new();
    for &h in &cfg.h_list {
        let n_steps = (cfg.duration / h).ceil().to_usize().unwrap_or(1).max(1);
        let naive_cfg = TraceConfig::new(h, n_steps, Scheme::Naive);
        let (naive_s, naive_steps) = time_scheme(field, seeds, &naive_cfg, cfg.repetitions)?;
        rows.push(BenchRecord {
            scheme: "naive".into(),
            h: h.to_f64_lossy(),
            err_max: None,
            seconds: naive_s,
            steps_inside: naive_steps,
            speedup: Some(1.0),
            flagged: false,
        });
        for &e in &cfg.err_list {
            let tc = TraceConfig::new(h, n_steps, Scheme::GuidedChecked(e));
            let (s, steps) = time_scheme(field, seeds, &tc, cfg.repetitions)?;
            let flagged = steps != naive_steps;
            if flagged {
                log::warn!(
                    "h={h} err={e}: {steps} steps inside vs {naive_steps} for naive; no speedup reported"
                );
            }
            rows.push(BenchRecord {
                scheme: "checked".into(),
                h: h.to_f64_lossy(),
                err_max: Some(e.to_f64_lossy()),
                seconds: s,
                steps_inside: steps,
                speedup: (!flagged).then(|| naive_s / s),
                flagged,
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRecord]) -> String {
    let mut s = String::from("scheme,h,err_max,seconds,steps_inside,speedup,flag\n");
    for r in rows {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.scheme,
            r.h,
            opt(r.err_max),
            r.seconds,
            r.steps_inside,
            opt(r.speedup),
            if r.flagged { "unequal_steps" } else { "" }
        )
        .unwrap();
    }
    s
}

/// Text table: one row per `h` with the naive time, then `time (speedup)`
/// per error bound.
pub fn bench_table(rows: &[BenchRecord]) -> String {
    let mut errs: Vec<f64> = rows.iter().filter_map(|r| r.err_max).collect();
    errs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    errs.dedup();
    let mut hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    hs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    hs.dedup();
    let mut s = format!("{:>8} {:>10}", "h", "naive");
    for e in &errs {
        write!(s, " {:>18}", format!("err={e:e}")).unwrap();
    }
    s.push('\n');
    for h in hs {
        let naive = rows.iter().find(|r| r.h == h && r.err_max.is_none());
        write!(s, "{h:>8} {:>10.4}", naive.map_or(f64::NAN, |r| r.seconds)).unwrap();
        for e in &errs {
            let cell = match rows.iter().find(|r| r.h == h && r.err_max == Some(*e)) {
                Some(r) => match r.speedup {
                    Some(x) => format!("{:.4} ({x:.2})", r.seconds),
                    None => format!("{:.4} (n/a)", r.seconds),
                },
                None => "-".into(),
            };
            write!(s, " {cell:>18}").unwrap();
        }
        s.push('\n');
    }
    s
}
