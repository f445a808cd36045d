//! Scale schedules and classification of `ε → 0` limits.
//!
//! A limit is estimated by evaluating the sequence on a geometric schedule
//! `ε_k = ε₀·qᵏ` and classifying the trace. Two facts about finite precision
//! shape the estimator:
//!
//! * composing a dilatation with its inverse at scale ε loses about
//!   `ulp/εᵖ` absolute accuracy (p = 1 for isotropic structures, p = 2 for the
//!   vertical Heisenberg direction), so deep in the schedule the residuals
//!   stop shrinking and start growing;
//! * most sequences met here have an asymptotic expansion in powers of ε,
//!   so Richardson steps remove the leading error terms.
//!
//! The estimator therefore (1) detects the order of the leading error term
//! from the residual ratios and applies up to two Richardson steps, (2) cuts
//! the trace where residuals reach their floor, and (3) classifies the tail
//! of the remaining trace.

use serde::{Deserialize, Serialize};

use crate::dilatation::Scale;
use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsSchedule {
    pub eps0: f64,
    pub ratio: f64,
    pub steps: usize,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule {
            eps0: 0.5,
            ratio: 0.5,
            steps: 30,
        }
    }
}

impl EpsSchedule {
    pub const MIN_STEPS: usize = 4;

    pub fn new(eps0: f64, ratio: f64, steps: usize) -> Result<Self> {
        let s = EpsSchedule { eps0, ratio, steps };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0.is_finite() && self.eps0 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "schedule eps0 must be positive, got {}",
                self.eps0
            )));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidInput(format!(
                "schedule ratio must lie in (0,1), got {}",
                self.ratio
            )));
        }
        if self.steps < Self::MIN_STEPS {
            return Err(Error::InvalidInput(format!(
                "schedule needs at least {} steps, got {}",
                Self::MIN_STEPS,
                self.steps
            )));
        }
        Ok(())
    }

    pub fn eps(&self, k: usize) -> f64 {
        self.eps0 * self.ratio.powi(k as i32)
    }

    pub fn points(&self) -> Vec<Scale> {
        (0..self.steps).map(|k| Scale::of(self.eps(k))).collect()
    }

    pub fn smallest(&self) -> f64 {
        self.eps(self.steps - 1)
    }

    /// Same ratio and length, shifted so the first point does not exceed
    /// `limit`. Returns `None` when `limit <= 0`.
    pub fn starting_below(&self, limit: f64) -> Option<EpsSchedule> {
        if limit.is_nan() || limit <= 0.0 {
            return None;
        }
        let mut eps0 = self.eps0;
        while eps0 > limit {
            eps0 *= self.ratio;
        }
        Some(EpsSchedule {
            eps0,
            ratio: self.ratio,
            steps: self.steps,
        })
    }

    pub fn with_steps(&self, steps: usize) -> EpsSchedule {
        EpsSchedule { steps, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitStatus {
    Converged,
    Oscillating,
    Diverging,
    Inconclusive,
}

impl std::fmt::Display for LimitStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LimitStatus::Converged => "converged",
            LimitStatus::Oscillating => "oscillating",
            LimitStatus::Diverging => "diverging",
            LimitStatus::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitOptions {
    pub tol: f64,
    pub tail_len: usize,
    /// Tail diameter above which a bounded, non-convergent trace is called
    /// oscillating.
    pub osc_floor: f64,
    pub divergence_bound: f64,
    /// Maximum number of Richardson steps applied to the trace.
    pub max_richardson: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions::with_tol(1e-6)
    }
}

impl LimitOptions {
    pub fn with_tol(tol: f64) -> Self {
        LimitOptions {
            tol,
            tail_len: 8,
            osc_floor: 10.0 * tol,
            divergence_bound: 1e6,
            max_richardson: 2,
        }
    }

    /// Residuals below this level are treated as rounding noise.
    pub fn noise_floor(&self) -> f64 {
        1e-2 * self.tol
    }
}

/// Values whose limits can be estimated.
pub trait LimitValue: Clone + std::fmt::Debug {
    fn magnitude(&self) -> f64;
    fn all_finite(&self) -> bool;
    /// `wa * a + wb * b`.
    fn combine(a: &Self, wa: f64, b: &Self, wb: f64) -> Self;
}

impl LimitValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn combine(a: &f64, wa: f64, b: &f64, wb: f64) -> f64 {
        wa * a + wb * b
    }
}

impl LimitValue for Point {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn combine(a: &Point, wa: f64, b: &Point, wb: f64) -> Point {
        Point::combine(a, wa, b, wb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate<V> {
    /// Raw trace `(ε_k, value_k)`.
    pub samples: Vec<(f64, V)>,
    pub value: V,
    pub status: LimitStatus,
    /// Distance between the last two values of the effective trace.
    pub residual: f64,
    /// Diameter of the last `tail_len` raw values.
    pub tail_diameter: f64,
    /// Richardson steps applied before classification.
    pub refinements: usize,
    /// Scale at which a non-finite value appeared, if any.
    pub witness_eps: Option<f64>,
}

impl<V> LimitEstimate<V> {
    pub fn converged(&self) -> bool {
        self.status == LimitStatus::Converged
    }

    /// Residual if converged, `+∞` otherwise.
    pub fn effective_residual(&self) -> f64 {
        if self.converged() {
            self.residual
        } else {
            f64::INFINITY
        }
    }
}

/// One Richardson step under a first-order error model:
/// `(v_next − q·v_k) / (1 − q)`.
pub fn richardson_extrapolate<V: LimitValue>(v_k: &V, v_next: &V, q: f64) -> Result<V> {
    richardson_step(v_k, v_next, q, 1)
}

/// Richardson step for an error term of order `εᵖ`.
pub fn richardson_step<V: LimitValue>(v_k: &V, v_next: &V, q: f64, order: u32) -> Result<V> {
    let qp = q.powi(order as i32);
    if !(qp.is_finite()) || (1.0 - qp).abs() < f64::EPSILON {
        return Err(Error::InvalidInput(format!(
            "Richardson ratio must differ from 1, got q = {q}"
        )));
    }
    let w = 1.0 / (1.0 - qp);
    Ok(V::combine(v_next, w, v_k, -qp * w))
}

/// Estimates `lim_{ε→0} seq(ε)` along `schedule`.
pub fn estimate_limit<V, F, M>(seq: F, metric: M, schedule: &EpsSchedule, opts: &LimitOptions) -> LimitEstimate<V>
where
    V: LimitValue,
    F: Fn(Scale) -> V,
    M: Fn(&V, &V) -> f64,
{
    let mut samples: Vec<(f64, V)> = Vec::with_capacity(schedule.steps);
    for eps in schedule.points() {
        let v = seq(eps);
        if !v.all_finite() {
            let value = v.clone();
            samples.push((eps.value(), v));
            return LimitEstimate {
                samples,
                value,
                status: LimitStatus::Diverging,
                residual: f64::INFINITY,
                tail_diameter: f64::INFINITY,
                refinements: 0,
                witness_eps: Some(eps.value()),
            };
        }
        samples.push((eps.value(), v));
    }
    classify(samples, &metric, schedule.ratio, opts)
}

/// Classifies an already evaluated trace. `samples` must be ordered by
/// decreasing ε with constant ratio `q`.
pub fn classify<V, M>(samples: Vec<(f64, V)>, metric: &M, q: f64, opts: &LimitOptions) -> LimitEstimate<V>
where
    V: LimitValue,
    M: Fn(&V, &V) -> f64,
{
    let raw: Vec<V> = samples.iter().map(|(_, v)| v.clone()).collect();
    let n = raw.len();
    let tail_start = n.saturating_sub(opts.tail_len);
    let tail_diameter = diameter(&raw[tail_start..], metric);

    let inconclusive = |samples: Vec<(f64, V)>, value: V| LimitEstimate {
        samples,
        value,
        status: LimitStatus::Inconclusive,
        residual: f64::INFINITY,
        tail_diameter,
        refinements: 0,
        witness_eps: None,
    };
    if n < EpsSchedule::MIN_STEPS {
        let value = raw.last().cloned().expect("non-empty trace");
        return inconclusive(samples, value);
    }

    if let Some(k) = raw.iter().position(|v| !v.all_finite()) {
        let value = raw[k].clone();
        let eps = samples[k].0;
        return LimitEstimate {
            samples,
            value,
            status: LimitStatus::Diverging,
            residual: f64::INFINITY,
            tail_diameter: f64::INFINITY,
            refinements: 0,
            witness_eps: Some(eps),
        };
    }
    let tail_max = raw[tail_start..].iter().map(LimitValue::magnitude).fold(0.0, f64::max);
    if tail_max > opts.divergence_bound {
        let value = raw[n - 1].clone();
        let residual = metric(&raw[n - 2], &raw[n - 1]);
        return LimitEstimate {
            samples,
            value,
            status: LimitStatus::Diverging,
            residual,
            tail_diameter,
            refinements: 0,
            witness_eps: None,
        };
    }

    let eta = opts.noise_floor();
    let mut seq = raw.clone();
    let mut refinements = 0;
    while refinements < opts.max_richardson && seq.len() > EpsSchedule::MIN_STEPS {
        let Some(order) = detect_order(&seq, metric, q, eta) else {
            break;
        };
        let refined: Vec<V> = seq
            .windows(2)
            .map(|w| richardson_step(&w[0], &w[1], q, order).expect("q < 1"))
            .collect();
        if !improves(&refined, metric, q, order, eta) {
            break;
        }
        seq = refined;
        refinements += 1;
    }

    let r: Vec<f64> = seq.windows(2).map(|w| metric(&w[0], &w[1])).collect();
    // Effective end: the last index of the first run of smallest
    // (noise-floored) residuals. Beyond it, rounding dominates.
    let floored = |x: f64| if x < eta { 0.0 } else { x };
    let min_r = r.iter().copied().map(floored).fold(f64::INFINITY, f64::min);
    let first = r
        .iter()
        .position(|&x| floored(x) <= min_r)
        .expect("non-empty residuals");
    let mut end = first;
    while end + 1 < r.len() && floored(r[end + 1]) <= min_r {
        end += 1;
    }
    let residual = r[end];
    let window_start = (end + 2).saturating_sub(opts.tail_len);
    let monotone = r[window_start..=end].windows(2).all(|w| w[1] <= w[0] + eta);
    // Value: the point whose neighbouring residuals are jointly smallest,
    // earliest among those already at rounding level. A single tiny residual
    // deep in the noise is a coincidence, not accuracy.
    let local = |k: usize| {
        let lo = k.saturating_sub(1);
        let hi = (k + 1).min(end);
        let m = r[lo..=hi].iter().copied().fold(0.0, f64::max);
        if m < 1e-3 * eta {
            0.0
        } else {
            m
        }
    };
    let candidates = if end >= 2 { 1..=end - 1 } else { 0..=end };
    let best = candidates
        .map(|k| (k, local(k)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .expect("non-empty residuals");
    let effective_len = end + 2;

    if residual < opts.tol && monotone && effective_len >= EpsSchedule::MIN_STEPS - 1 {
        let value = seq[best + 1].clone();
        return LimitEstimate {
            samples,
            value,
            status: LimitStatus::Converged,
            residual,
            tail_diameter,
            refinements,
            witness_eps: None,
        };
    }

    let value = raw[n - 1].clone();
    let status = if tail_diameter > opts.osc_floor {
        LimitStatus::Oscillating
    } else {
        LimitStatus::Inconclusive
    };
    LimitEstimate {
        samples,
        value,
        status,
        residual,
        tail_diameter,
        refinements,
        witness_eps: None,
    }
}

fn diameter<V, M: Fn(&V, &V) -> f64>(values: &[V], metric: &M) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            d = d.max(metric(&values[i], &values[j]));
        }
    }
    d
}

const LEADING_RUN: usize = 7;

/// Whether a Richardson step of order `p` removed the leading error term:
/// the refined residuals must either drop below the signal level at once or
/// shrink at a rate of order above `p`. A term like `ε·e^{iθ ln ε}` has
/// residual ratio `q` but survives the step.
fn improves<V, M: Fn(&V, &V) -> f64>(refined: &[V], metric: &M, q: f64, order: u32, eta: f64) -> bool {
    match leading_ratio(refined, metric, eta) {
        None => true,
        Some(m) => m <= q.powf(order as f64 + 0.5),
    }
}

/// Median residual ratio over the last steps of the longest run of
/// decreasing residuals before the trace first reaches the signal level,
/// where the asymptotic term dominates; `None` when the run is too short to
/// tell.
fn leading_ratio<V, M: Fn(&V, &V) -> f64>(seq: &[V], metric: &M, eta: f64) -> Option<f64> {
    let signal = 100.0 * eta;
    let mut r: Vec<f64> = seq.windows(2).map(|w| metric(&w[0], &w[1])).collect();
    r.truncate(r.iter().position(|&x| x <= signal).unwrap_or(r.len()));
    let mut best: &[f64] = &[];
    let mut start = 0;
    for k in 0..r.len() {
        if k > 0 && r[k] >= r[k - 1] {
            start = k;
        }
        if k - start + 1 > best.len() {
            best = &r[start..=k];
        }
    }
    let run: Vec<f64> = best.windows(2).map(|w| w[1] / w[0]).collect();
    let mut ratios = run[run.len().saturating_sub(LEADING_RUN)..].to_vec();
    if ratios.len() < 3 {
        return None;
    }
    ratios.sort_by(f64::total_cmp);
    Some(ratios[ratios.len() / 2])
}

/// Order `p` of the leading error term when the leading run of residual
/// ratios is consistent with `qᵖ`.
fn detect_order<V, M: Fn(&V, &V) -> f64>(seq: &[V], metric: &M, q: f64, eta: f64) -> Option<u32> {
    let median = leading_ratio(seq, metric, eta)?;
    if median.is_nan() || median <= 0.0 {
        return None;
    }
    let p = median.ln() / q.ln();
    let rounded = p.round();
    if (1.0..=3.0).contains(&rounded) && (p - rounded).abs() <= 0.15 {
        Some(rounded as u32)
    } else {
        None
    }
}

/// Least-squares power-law fit `v ≈ C·εᵖ` of a trace expected to vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Number of trace points used for the fit.
    pub points: usize,
    /// Last value of the clean (non-increasing) part of the trace.
    pub last: f64,
    pub vanishes: bool,
}

/// Decides whether a nonnegative trace tends to zero as ε → 0.
///
/// The clean part of the trace is its longest non-increasing prefix (the
/// rounding regime shows up as growth at tiny ε). The trace vanishes if the
/// clean part ends below `tol`, or if it spans at least six points and its
/// log-log slope over the last `tail_len` points above the noise floor is at
/// least 0.25.
pub fn fit_decay(samples: &[(f64, f64)], tol: f64, tail_len: usize) -> DecayFit {
    let eta = 1e-2 * tol;
    let mut end = 0;
    while end + 1 < samples.len() && samples[end + 1].1 <= samples[end].1 + eta {
        end += 1;
    }
    let clean = &samples[..=end];
    let last = clean[end].1;
    let signal: Vec<&(f64, f64)> = clean.iter().filter(|(e, v)| *v > eta && *e > 0.0).collect();
    let fit_pts: Vec<(f64, f64)> = signal[signal.len().saturating_sub(tail_len)..]
        .iter()
        .map(|(e, v)| (e.ln(), v.ln()))
        .collect();
    let (exponent, prefactor) = if fit_pts.len() >= 2 {
        let n = fit_pts.len() as f64;
        let mx = fit_pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = fit_pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = fit_pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = fit_pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        (slope, (my - slope * mx).exp())
    } else {
        (f64::NAN, f64::NAN)
    };
    let vanishes = last.abs() < tol || (clean.len() >= 6 && exponent >= 0.25);
    DecayFit {
        exponent,
        prefactor,
        points: fit_pts.len(),
        last,
        vanishes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_metric(a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    fn est(f: impl Fn(f64) -> f64) -> LimitEstimate<f64> {
        estimate_limit(
            |e: Scale| f(e.value()),
            abs_metric,
            &EpsSchedule::default(),
            &LimitOptions::default(),
        )
    }

    #[test]
    fn affine_sequence_converges_exactly() {
        let e = est(|eps| 1.0 + eps);
        assert_eq!(e.status, LimitStatus::Converged);
        assert_eq!(e.value, 1.0);
        assert!(e.refinements >= 1);
    }

    #[test]
    fn log_sine_oscillates() {
        let e = est(|eps| eps.ln().sin());
        assert_eq!(e.status, LimitStatus::Oscillating);
    }

    #[test]
    fn reciprocal_diverges() {
        let e = est(|eps| 1.0 / eps);
        assert_eq!(e.status, LimitStatus::Diverging);
    }

    #[test]
    fn non_finite_value_is_diverging_with_witness() {
        let e = est(|eps| if eps < 1e-3 { f64::NAN } else { 2.0 });
        assert_eq!(e.status, LimitStatus::Diverging);
        let w = e.witness_eps.unwrap();
        assert!(w < 1e-3 && w > 2.5e-4);
    }

    #[test]
    fn constant_sequence_has_zero_residual() {
        let e = est(|_| 3.25);
        assert_eq!(e.status, LimitStatus::Converged);
        assert_eq!(e.residual, 0.0);
        assert_eq!(e.value, 3.25);
    }

    #[test]
    fn second_order_sequence_converges() {
        let e = est(|eps| 2.0 - eps * eps);
        assert_eq!(e.status, LimitStatus::Converged);
        assert!((e.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slow_sequence_is_not_converged() {
        // sqrt(eps) at eps ~ 1e-9 is still ~3e-5 away from the limit.
        let e = est(|eps| eps.sqrt());
        assert_ne!(e.status, LimitStatus::Converged);
    }

    #[test]
    fn noisy_first_order_sequence_stops_at_noise_floor() {
        // Cancellation noise growing like 1e-16/ε², the Heisenberg pattern.
        let e = est(|eps| {
            let noise = 1e-16 / (eps * eps) * ((1.0 / eps).ln() * 7.3).sin();
            1.0 + 0.3 * eps + 0.7 * eps * eps + noise
        });
        assert_eq!(e.status, LimitStatus::Converged);
        assert!((e.value - 1.0).abs() < 1e-7, "{}", e.value);
    }

    #[test]
    fn richardson_examples() {
        assert_eq!(richardson_extrapolate(&1.5, &1.25, 0.5).unwrap(), 1.0);
        assert_eq!(richardson_extrapolate(&4.0, &4.0, 0.5).unwrap(), 4.0);
        // 1+ε² is second order: the first-order step does not remove it.
        let v = richardson_extrapolate(&1.25, &1.0625, 0.5).unwrap();
        assert_eq!(v, 0.875);
        assert!(richardson_extrapolate(&1.0, &2.0, 1.0).is_err());
        assert!((richardson_step(&1.25, &1.0625, 0.5, 2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_validation() {
        assert!(EpsSchedule::new(0.5, 0.5, 3).is_err());
        assert!(EpsSchedule::new(0.0, 0.5, 10).is_err());
        assert!(EpsSchedule::new(0.5, 1.0, 10).is_err());
        let s = EpsSchedule::new(0.5, 0.5, 10).unwrap();
        assert_eq!(s.eps(3), 0.0625);
        let shifted = s.starting_below(0.1).unwrap();
        assert_eq!(shifted.eps0, 0.0625);
        assert_eq!(shifted.steps, 10);
        assert!(s.starting_below(0.0).is_none());
    }

    #[test]
    fn decay_fit_recovers_square_root() {
        let s = EpsSchedule::default();
        let trace: Vec<(f64, f64)> = (0..s.steps)
            .map(|k| {
                let e = s.eps(k);
                (e, 2.0 * (e * (1.0 - e)).sqrt())
            })
            .collect();
        let fit = fit_decay(&trace, 1e-6, 8);
        assert!(fit.vanishes);
        assert!((fit.exponent - 0.5).abs() < 1e-3);
        assert!((fit.prefactor - 2.0).abs() < 1e-2);
    }

    #[test]
    fn decay_fit_rejects_positive_limit() {
        let s = EpsSchedule::default();
        let trace: Vec<(f64, f64)> = (0..s.steps).map(|k| (s.eps(k), 1.0 + s.eps(k))).collect();
        assert!(!fit_decay(&trace, 1e-6, 8).vanishes);
    }
}
