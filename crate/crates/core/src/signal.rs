//! Post-processing of measured or simulated traces.
//!
//! A [`Trace`] is a uniformly sampled scalar time series with a unit label.
//! The median filter reproduces the zero-padded behavior of the reference
//! implementation used on the measured signals, so reprocessed traces are
//! bit-comparable.

use std::io::{self, Write};

use thiserror::Error;

/// Uniformly sampled time series of one named scalar quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// Time of the first sample (s).
    pub t0: f64,
    /// Sample interval (s), positive.
    pub dt: f64,
    pub values: Vec<f64>,
    /// Unit label carried as metadata, e.g. `t_mode_K` or `delta_p_dB`.
    pub label: String,
}

impl Trace {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>, label: impl Into<String>) -> Self {
        Self {
            t0,
            dt,
            values,
            label: label.into(),
        }
    }

    /// Time of sample `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the first sample at or after `t`.
    pub fn index_at_or_after(&self, t: f64) -> usize {
        if t <= self.t0 {
            return 0;
        }
        let raw = (t - self.t0) / self.dt;
        let idx = raw.ceil();
        // tolerate rounding when t sits exactly on the grid
        if (raw - raw.round()).abs() < 1e-9 {
            raw.round() as usize
        } else {
            idx as usize
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("median filter window must be odd and >= 1 (got {0})")]
    InvalidWindow(usize),
    #[error("dB conversion requires positive values (got {0})")]
    NonPositiveValue(f64),
    #[error("dB conversion requires a positive baseline (got {0})")]
    NonPositiveBaseline(f64),
    #[error("decay fit needs at least {needed} samples after t_start (got {got})")]
    TooFewSamples { needed: usize, got: usize },
    #[error("decay fit failed: {0}")]
    FitFailure(String),
    #[error("trace CSV line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Sliding median with the input zero-padded at both edges; the time grid is
/// unchanged. `window` must be odd.
pub fn median_filter(trace: &Trace, window: usize) -> Result<Trace, SignalError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(SignalError::InvalidWindow(window));
    }
    if window == 1 {
        return Ok(trace.clone());
    }
    let half = window / 2;
    let n = trace.values.len();
    let mut out = Vec::with_capacity(n);
    let mut buf: Vec<f64> = Vec::with_capacity(window);
    for i in 0..n {
        buf.clear();
        for k in 0..window {
            let j = i as isize + k as isize - half as isize;
            if j < 0 || j >= n as isize {
                buf.push(0.0);
            } else {
                buf.push(trace.values[j as usize]);
            }
        }
        buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(buf[half]);
    }
    Ok(Trace {
        t0: trace.t0,
        dt: trace.dt,
        values: out,
        label: trace.label.clone(),
    })
}

/// Pointwise `10·log10(sample/baseline)`.
pub fn to_db_ratio(trace: &Trace, baseline: f64) -> Result<Trace, SignalError> {
    if !(baseline.is_finite() && baseline > 0.0) {
        return Err(SignalError::NonPositiveBaseline(baseline));
    }
    let mut values = Vec::with_capacity(trace.values.len());
    for &v in &trace.values {
        if !(v.is_finite() && v > 0.0) {
            return Err(SignalError::NonPositiveValue(v));
        }
        values.push(10.0 * (v / baseline).log10());
    }
    Ok(Trace {
        t0: trace.t0,
        dt: trace.dt,
        values,
        label: format!("{}_dB", trace.label),
    })
}

/// Global minimum and its time; ties break toward the earliest sample.
///
/// Panics on an empty trace (violates the trace invariant).
pub fn cooling_depth(trace: &Trace) -> (f64, f64) {
    assert!(
        !trace.values.is_empty(),
        "cooling_depth requires a nonempty trace"
    );
    let mut best = trace.values[0];
    let mut best_idx = 0;
    for (i, &v) in trace.values.iter().enumerate().skip(1) {
        if v < best {
            best = v;
            best_idx = i;
        }
    }
    (best, trace.time_at(best_idx))
}

/// Least-squares fit of `v(t) = v∞ + (v(t_start) − v∞)·exp(−(t−t_start)/τ)`
/// over the samples from `t_start` to the end of the trace.
///
/// `v∞` is fixed to the mean of the final 5 % of the window and the amplitude
/// to the first sample, leaving τ as the only free parameter, found by a
/// golden-section search on ln τ. Fails when the recovery amplitude is zero
/// or the RMS residual exceeds 10 % of the amplitude.
pub fn fit_decay_time(trace: &Trace, t_start: f64) -> Result<f64, SignalError> {
    let start_idx = trace.index_at_or_after(t_start);
    let m = trace.values.len().saturating_sub(start_idx);
    if m < 10 {
        return Err(SignalError::TooFewSamples { needed: 10, got: m });
    }
    let values = &trace.values[start_idx..];
    let n_tail = ((0.05 * m as f64).ceil() as usize).max(1);
    let v_inf = values[m - n_tail..].iter().sum::<f64>() / n_tail as f64;
    let amplitude = values[0] - v_inf;
    if amplitude == 0.0 {
        return Err(SignalError::FitFailure(
            "zero recovery amplitude".to_string(),
        ));
    }

    let dt = trace.dt;
    let span = (m - 1) as f64 * dt;
    let ssr = |ln_tau: f64| -> f64 {
        let tau = ln_tau.exp();
        let mut acc = 0.0;
        for (k, &v) in values.iter().enumerate() {
            let model = v_inf + amplitude * (-(k as f64 * dt) / tau).exp();
            let r = v - model;
            acc += r * r;
        }
        acc
    };

    // golden-section search on ln(tau)
    let mut lo = (dt / 100.0).ln();
    let mut hi = (100.0 * span).ln();
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = ssr(x1);
    let mut f2 = ssr(x2);
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = ssr(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = ssr(x2);
        }
    }
    let ln_tau = 0.5 * (lo + hi);
    let tau = ln_tau.exp();

    let rms = (ssr(ln_tau) / m as f64).sqrt();
    if rms > 0.1 * amplitude.abs() {
        return Err(SignalError::FitFailure(format!(
            "RMS residual {rms:.3e} exceeds 10% of recovery amplitude {:.3e}",
            amplitude.abs()
        )));
    }
    Ok(tau)
}

/// Writes the two-column CSV form `time_s,<label>` with one header line.
pub fn write_trace_csv(trace: &Trace, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "time_s,{}", trace.label)?;
    for (i, v) in trace.values.iter().enumerate() {
        writeln!(w, "{:.9e},{:.9e}", trace.time_at(i), v)?;
    }
    Ok(())
}

/// Reads the two-column CSV form produced by [`write_trace_csv`]. Requires at
/// least two rows and a uniform time grid.
pub fn read_trace_csv(text: &str) -> Result<Trace, SignalError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(SignalError::Csv {
        line: 1,
        message: "missing header".to_string(),
    })?;
    let mut cols = header.split(',');
    let first = cols.next().unwrap_or("").trim();
    if first != "time_s" {
        return Err(SignalError::Csv {
            line: 1,
            message: format!("first column must be time_s (got {first})"),
        });
    }
    let label = cols
        .next()
        .ok_or(SignalError::Csv {
            line: 1,
            message: "missing value column header".to_string(),
        })?
        .trim()
        .to_string();

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let parse = |tok: Option<&str>| -> Result<f64, SignalError> {
            tok.ok_or(SignalError::Csv {
                line: idx + 1,
                message: "expected two columns".to_string(),
            })?
            .trim()
            .parse::<f64>()
            .map_err(|e| SignalError::Csv {
                line: idx + 1,
                message: e.to_string(),
            })
        };
        times.push(parse(cells.next())?);
        values.push(parse(cells.next())?);
    }
    if times.len() < 2 {
        return Err(SignalError::Csv {
            line: 1,
            message: "need at least two data rows to infer the sample interval".to_string(),
        });
    }
    let dt = times[1] - times[0];
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SignalError::Csv {
            line: 3,
            message: format!("non-increasing time grid (dt = {dt})"),
        });
    }
    for (k, pair) in times.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if ((step - dt) / dt).abs() > 1e-6 {
            return Err(SignalError::Csv {
                line: k + 3,
                message: format!("non-uniform sampling: step {step} vs {dt}"),
            });
        }
    }
    Ok(Trace {
        t0: times[0],
        dt,
        values,
        label,
    })
}
