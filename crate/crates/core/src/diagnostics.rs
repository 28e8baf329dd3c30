//! Statistics over fields and scalar time series: norms, mode traces,
//! periodograms, burst detection, tail probabilities and convergence orders.

use crate::field::SpectralField;
use crate::grid::Wavevector;
use crate::spectral::Spectral;
use crate::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Scalar series sampled at strictly increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Precondition(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("times must be strictly increasing".into()));
        }
        Ok(TimeSeries {
            label: label.into(),
            times,
            values,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Samples with `t >= t0`.
    pub fn from_time(&self, t0: f64) -> TimeSeries {
        let start = self.times.partition_point(|&t| t < t0);
        TimeSeries {
            label: self.label.clone(),
            times: self.times[start..].to_vec(),
            values: self.values[start..].to_vec(),
        }
    }

    /// Common spacing, or an error when the sampling is not uniform.
    pub fn sample_interval(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::Precondition("need at least two samples".into()));
        }
        let span = self.times[self.len() - 1] - self.times[0];
        let dt = span / (self.len() - 1) as f64;
        let uniform = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
        if !uniform {
            return Err(Error::Precondition(format!(
                "series {:?} is not uniformly sampled",
                self.label
            )));
        }
        Ok(dt)
    }
}

/// Enstrophy `||omega||^2` and palinstrophy `||grad omega||^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldNorms {
    pub enstrophy: f64,
    pub palinstrophy: f64,
}

impl FieldNorms {
    /// `||omega||`
    pub fn l2_norm(&self) -> f64 {
        self.enstrophy.sqrt()
    }

    /// `||grad omega||`
    pub fn gradient_norm(&self) -> f64 {
        self.palinstrophy.sqrt()
    }
}

/// Squared `L^2` norms of a vorticity and of its gradient.
pub fn field_norms(spectral: &Spectral, omega: &SpectralField) -> Result<FieldNorms> {
    if !omega.is_finite() {
        return Err(Error::NumericFault("field norms"));
    }
    Ok(FieldNorms {
        enstrophy: spectral.sobolev_norm_sq(omega, 0, 1.0)?,
        palinstrophy: spectral.sobolev_norm_sq(omega, 1, 1.0)?,
    })
}

/// Fourier coefficient of `omega` at `k`.
pub fn mode_trace(omega: &SpectralField, k: Wavevector) -> Result<Complex64> {
    omega.coeff(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    None,
    Hann,
}

impl Window {
    fn weights(&self, n: usize) -> Vec<f64> {
        match self {
            Window::None => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
                .collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Window::None => "none",
            Window::Hann => "hann",
        }
    }
}

/// One-sided power per frequency bin.
#[derive(Clone, Debug, PartialEq)]
pub struct Periodogram {
    /// Cycles per unit time.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub window: Window,
    pub sample_interval: f64,
}

/// Periodogram of the mean-removed series.
///
/// Power is normalised so that, without a window, the bins sum to the
/// (population) variance of the series; with a window the sum equals the
/// windowed mean square divided by the mean square of the window.
pub fn periodogram(series: &TimeSeries, window: Window) -> Result<Periodogram> {
    let n = series.len();
    if n < 8 {
        return Err(Error::Precondition(format!(
            "periodogram needs at least 8 samples, got {n}"
        )));
    }
    let dt = series.sample_interval()?;
    let mean = series.values().iter().sum::<f64>() / n as f64;
    let w = window.weights(n);
    let w_sq: f64 = w.iter().map(|v| v * v).sum();
    let mut buf: Vec<Complex64> = series
        .values()
        .iter()
        .zip(&w)
        .map(|(&v, &wi)| Complex64::new((v - mean) * wi, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = 1.0 / (n as f64 * w_sq);
    let bins = n / 2 + 1;
    let mut power = Vec::with_capacity(bins);
    let mut frequencies = Vec::with_capacity(bins);
    for (j, c) in buf.iter().take(bins).enumerate() {
        let paired = j != 0 && !(n % 2 == 0 && j == n / 2);
        let factor = if paired { 2.0 } else { 1.0 };
        power.push(factor * c.norm_sqr() * norm);
        frequencies.push(j as f64 / (n as f64 * dt));
    }
    Ok(Periodogram {
        frequencies,
        power,
        window,
        sample_interval: dt,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurstEvent {
    pub onset: f64,
    pub end: f64,
    pub peak: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BurstReport {
    pub events: Vec<BurstEvent>,
    /// Onset-to-onset gaps between consecutive events.
    pub intervals: Vec<f64>,
}

/// Median of the samples with `t >= spin_up`, scaled by 1.5.
pub fn default_burst_threshold(series: &TimeSeries, spin_up: f64) -> Result<f64> {
    let tail = series.from_time(spin_up);
    if tail.is_empty() {
        return Err(Error::Precondition("no samples after spin-up".into()));
    }
    let mut v = tail.values().to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    let median = if v.len() % 2 == 0 {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    };
    Ok(1.5 * median)
}

/// Finds maximal excursions strictly above `threshold`.
///
/// An excursion starts at the first sample above the threshold and ends at
/// the first sample back at or below it (or at the last sample if the series
/// ends inside it). Excursions whose gap (previous end to next onset) is
/// shorter than `min_separation` are merged.
pub fn detect_bursts(series: &TimeSeries, threshold: f64, min_separation: f64) -> Result<BurstReport> {
    let min = series.values().iter().copied().fold(f64::INFINITY, f64::min);
    if series.is_empty() || !(threshold > min) {
        return Err(Error::Precondition(format!(
            "burst threshold {threshold} must exceed the series minimum {min}"
        )));
    }
    let (t, v) = (series.times(), series.values());
    let mut raw: Vec<BurstEvent> = Vec::new();
    let mut current: Option<BurstEvent> = None;
    for i in 0..t.len() {
        match (&mut current, v[i] > threshold) {
            (None, true) => {
                current = Some(BurstEvent {
                    onset: t[i],
                    end: t[i],
                    peak: v[i],
                })
            }
            (Some(ev), true) => ev.peak = ev.peak.max(v[i]),
            (Some(ev), false) => {
                ev.end = t[i];
                raw.push(*ev);
                current = None;
            }
            (None, false) => {}
        }
    }
    if let Some(mut ev) = current {
        ev.end = t[t.len() - 1];
        // a lone trailing sample has no measurable extent
        if ev.end > ev.onset {
            raw.push(ev);
        }
    }
    let mut events: Vec<BurstEvent> = Vec::new();
    for ev in raw {
        match events.last_mut() {
            Some(last) if ev.onset - last.end < min_separation => {
                last.end = ev.end;
                last.peak = last.peak.max(ev.peak);
            }
            _ => events.push(ev),
        }
    }
    let intervals = events.windows(2).map(|w| w[1].onset - w[0].onset).collect();
    Ok(BurstReport { events, intervals })
}

/// Closed band `[lo, hi]`; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Self {
        Band { lo, hi }
    }

    pub fn at_least(lo: f64) -> Self {
        Band {
            lo,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Fraction of post-spin-up samples inside each band.
pub fn tail_probabilities(series: &TimeSeries, bands: &[Band], spin_up: f64) -> Result<Vec<f64>> {
    if let Some(b) = bands.iter().find(|b| !(b.lo <= b.hi)) {
        return Err(Error::Precondition(format!("band [{}, {}] is not ordered", b.lo, b.hi)));
    }
    let tail = series.from_time(spin_up);
    if tail.is_empty() {
        return Err(Error::Precondition(format!(
            "no samples left after discarding t < {spin_up}"
        )));
    }
    let n = tail.len() as f64;
    Ok(bands
        .iter()
        .map(|b| tail.values().iter().filter(|&&v| b.contains(v)).count() as f64 / n)
        .collect())
}

/// Observed orders `log(e_{i-1}/e_i) / log(k_{i-1}/k_i)` for consecutive
/// rows; `None` where an error is zero or non-finite.
pub fn convergence_order(errors: &[(f64, f64)]) -> Result<Vec<Option<f64>>> {
    if errors.windows(2).any(|w| !(w[1].0 < w[0].0) || w[1].0 <= 0.0) {
        return Err(Error::Precondition("step sizes must be positive and strictly decreasing".into()));
    }
    Ok(errors
        .windows(2)
        .map(|w| {
            let ((k0, e0), (k1, e1)) = (w[0], w[1]);
            let defined = e0 > 0.0 && e1 > 0.0 && e0.is_finite() && e1.is_finite();
            defined.then(|| (e0 / e1).ln() / (k0 / k1).ln())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldRole;
    use crate::Grid;
    use std::f64::consts::PI;

    fn series(values: Vec<f64>) -> TimeSeries {
        let times = (0..values.len()).map(|i| i as f64).collect();
        TimeSeries::new("s", times, values).unwrap()
    }

    #[test]
    fn norms_of_simple_fields() {
        let s = Spectral::new(Grid::periodic_2d(16).unwrap());
        let w = s.project(FieldRole::Vorticity, |_, y, _| y.sin());
        let n = field_norms(&s, &w).unwrap();
        assert!((n.enstrophy - 2.0 * PI * PI).abs() < 1e-12);
        assert!((n.palinstrophy - 2.0 * PI * PI).abs() < 1e-12);
        let w = s.project(FieldRole::Vorticity, |_, y, _| (2.0 * y).sin());
        let n = field_norms(&s, &w).unwrap();
        assert!((n.enstrophy - 2.0 * PI * PI).abs() < 1e-12);
        assert!((n.palinstrophy - 8.0 * PI * PI).abs() < 1e-11);
        let z = SpectralField::zeros(*s.grid(), FieldRole::Vorticity);
        assert_eq!(field_norms(&s, &z).unwrap(), FieldNorms { enstrophy: 0.0, palinstrophy: 0.0 });
    }

    #[test]
    fn mode_trace_examples() {
        let s = Spectral::new(Grid::periodic_2d(16).unwrap());
        let k = Wavevector::new_2d(0, 1);
        let w = s.project(FieldRole::Vorticity, |_, y, _| 2.0 * y.cos());
        assert!((mode_trace(&w, k).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let w = s.project(FieldRole::Vorticity, |x, _, _| x.sin());
        assert!(mode_trace(&w, k).unwrap().norm() < 1e-15);
        let w = s.project(FieldRole::Vorticity, |_, y, _| y.sin());
        assert!((mode_trace(&w, k).unwrap() - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!(mode_trace(&w, Wavevector::new_2d(0, 8)).is_err());
    }

    #[test]
    fn periodogram_of_pure_tone() {
        let n = 64;
        let dt = 0.5;
        let f0 = 5.0 / (n as f64 * dt);
        let a = 1.7;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let values = times.iter().map(|t| a * (2.0 * PI * f0 * t).sin()).collect();
        let p = periodogram(&TimeSeries::new("tone", times, values).unwrap(), Window::None).unwrap();
        for (j, (&f, &pw)) in p.frequencies.iter().zip(&p.power).enumerate() {
            if j == 5 {
                assert!((f - f0).abs() < 1e-14);
                assert!((pw - a * a / 2.0).abs() < 1e-12);
            } else {
                assert!(pw < 1e-24);
            }
        }
    }

    #[test]
    fn periodogram_of_constant_is_zero() {
        let p = periodogram(&series(vec![3.5; 16]), Window::Hann).unwrap();
        assert!(p.power.iter().all(|&v| v < 1e-28));
    }

    #[test]
    fn periodogram_preconditions() {
        assert!(periodogram(&series(vec![1.0; 7]), Window::None).is_err());
        let ts = TimeSeries::new("u", (0..10).map(|i| (i * i) as f64).collect(), vec![0.0; 10]).unwrap();
        assert!(periodogram(&ts, Window::None).is_err());
    }

    #[test]
    fn bursts_on_rectangular_bumps() {
        let mut v = vec![1.0; 100];
        for x in &mut v[10..15] {
            *x = 5.0;
        }
        for x in &mut v[50..53] {
            *x = 6.0;
        }
        let r = detect_bursts(&series(v.clone()), 2.0, 10.0).unwrap();
        assert_eq!(r.events.len(), 2);
        assert_eq!(r.events[0], BurstEvent { onset: 10.0, end: 15.0, peak: 5.0 });
        assert_eq!(r.intervals, vec![40.0]);
        let merged = detect_bursts(&series(v), 2.0, 40.0).unwrap();
        assert_eq!(merged.events.len(), 1);
        assert_eq!(merged.events[0].peak, 6.0);
        assert!(merged.intervals.is_empty());
    }

    #[test]
    fn bursts_below_threshold_and_bad_threshold() {
        assert!(detect_bursts(&series(vec![1.0; 10]), 2.0, 1.0).unwrap().events.is_empty());
        assert!(detect_bursts(&series(vec![1.0; 10]), 0.5, 1.0).is_err());
    }

    #[test]
    fn default_threshold_is_one_and_a_half_median() {
        let s = series(vec![100.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(default_burst_threshold(&s, 1.0).unwrap(), 3.75);
        assert!(default_burst_threshold(&s, 10.0).is_err());
    }

    #[test]
    fn tail_probability_counting() {
        let s = series(vec![10.0; 20]);
        assert_eq!(tail_probabilities(&s, &[Band::at_least(12.6)], 0.0).unwrap(), vec![0.0]);
        let s = series(vec![1.0, 13.0, 2.0, 12.6, 3.0, 4.0, 15.0, 5.0, 6.0, 7.0]);
        let p = tail_probabilities(&s, &[Band::at_least(12.6), Band::new(2.0, 4.0)], 0.0).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-15);
        assert!((p[1] - 0.3).abs() < 1e-15);
        assert!(tail_probabilities(&s, &[Band::at_least(1.0)], 100.0).is_err());
        assert!(tail_probabilities(&s, &[Band::new(3.0, 1.0)], 0.0).is_err());
    }

    #[test]
    fn tail_probability_discards_spin_up() {
        let s = series(vec![20.0, 20.0, 1.0, 1.0]);
        assert_eq!(tail_probabilities(&s, &[Band::at_least(12.6)], 2.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn convergence_orders() {
        let o = convergence_order(&[(0.0125, 2.553669e-04), (0.00625, 6.363869e-05)]).unwrap();
        assert!((o[0].unwrap() - 2.00).abs() < 0.01);
        let o = convergence_order(&[(0.05, 5.040908e-05), (0.025, 1.231334e-05)]).unwrap();
        assert!((o[0].unwrap() - 2.03).abs() < 0.005);
        let rows: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&k| (k, 3.0 * k * k)).collect();
        for o in convergence_order(&rows).unwrap() {
            assert!((o.unwrap() - 2.0).abs() < 1e-12);
        }
        assert_eq!(convergence_order(&[(0.1, 1.0), (0.05, 0.0)]).unwrap(), vec![None]);
        assert!(convergence_order(&[(0.1, 1.0), (0.2, 0.5)]).is_err());
        assert!(convergence_order(&[(0.1, 1.0)]).unwrap().is_empty());
    }
}
