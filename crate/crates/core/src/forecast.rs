//! Rolling-origin dynamic h-step out-of-sample forecasting for all three
//! model families, including the threshold-model reconstruction of regional
//! growth from the national path.
//!
//! Model parameters are estimated once on the training sample; as the origin
//! advances only the conditioning data grows. Forecasts never touch regional
//! observations beyond the origin, while the national path is taken as given
//! through the target date.

use serde::{Deserialize, Serialize};

use crate::arma::{arma_forecast, psi_weights, ArmaFit};
use crate::error::{Error, Result};
use crate::series::{demean, hpa, log_ratio, AlignedPair, DemeanedRatio, QuarterDate, QuarterlySeries};
use crate::unitroot::{heaviside, MtarResult};

/// Training cutoff, evaluation end, and forecast horizons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecastProtocol {
    pub train_end: QuarterDate,
    pub sample_end: QuarterDate,
    pub horizons: Vec<usize>,
}

impl ForecastProtocol {
    pub fn new(
        train_end: QuarterDate,
        sample_end: QuarterDate,
        horizons: Vec<usize>,
    ) -> Result<Self> {
        if train_end >= sample_end {
            return Err(Error::InvalidParameter {
                detail: format!("train_end {train_end} must precede sample_end {sample_end}"),
            });
        }
        if horizons.is_empty() || horizons.contains(&0) {
            return Err(Error::InvalidParameter {
                detail: "horizons must be positive".into(),
            });
        }
        let mut horizons = horizons;
        horizons.sort_unstable();
        horizons.dedup();
        Ok(Self {
            train_end,
            sample_end,
            horizons,
        })
    }
}

/// One rolling-origin forecast aligned with its realized value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelEntry {
    pub origin: QuarterDate,
    pub target: QuarterDate,
    pub predicted: f64,
    pub realized: f64,
    /// Two-sigma forecast band half-width.
    pub band_halfwidth: f64,
}

/// All rolling h-step forecasts for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPanel {
    pub model_name: String,
    pub horizon: usize,
    pub entries: Vec<PanelEntry>,
}

impl ForecastPanel {
    /// CSV body: `origin,target,predicted,realized,band`. Non-finite
    /// realized values (scenario forecasts) serialize as empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("origin,target,predicted,realized,band\n");
        for e in &self.entries {
            let realized = if e.realized.is_finite() {
                format!("{}", e.realized)
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.origin, e.target, e.predicted, realized, e.band_halfwidth
            ));
        }
        out
    }

    /// Parse a CSV body produced by [`ForecastPanel::to_csv`]. Comment lines
    /// starting with `#` are skipped.
    pub fn from_csv(model_name: &str, horizon: usize, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("origin,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::PanelMismatch {
                    detail: format!("expected 5 fields, got {}: {line:?}", fields.len()),
                });
            }
            let parse_f = |s: &str| -> Result<f64> {
                if s.is_empty() {
                    return Ok(f64::NAN);
                }
                s.parse().map_err(|_| Error::Numeric {
                    detail: format!("cannot parse {s:?} as a number"),
                })
            };
            entries.push(PanelEntry {
                origin: fields[0].parse()?,
                target: fields[1].parse()?,
                predicted: parse_f(fields[2])?,
                realized: parse_f(fields[3])?,
                band_halfwidth: parse_f(fields[4])?,
            });
        }
        Ok(Self {
            model_name: model_name.to_string(),
            horizon,
            entries,
        })
    }
}

/// Full-sample data prepared for rolling forecasts: growth series for both
/// the regional and national indices plus the demeaned log ratio. The ratio
/// mean comes from the training window only.
#[derive(Debug, Clone)]
pub struct ForecastInputs {
    pub regional_hpa: QuarterlySeries,
    pub national_hpa: QuarterlySeries,
    pub ratio: DemeanedRatio,
}

impl ForecastInputs {
    pub fn from_levels(pair: &AlignedPair, train_end: QuarterDate) -> Result<Self> {
        if !pair.regional().covers(train_end) {
            return Err(Error::BadWindow);
        }
        let regional_hpa = hpa(pair.regional())?;
        let national_hpa = hpa(pair.national())?;
        let ratio_series = log_ratio(pair)?;
        let ratio = demean(&ratio_series, Some((ratio_series.start(), train_end)))?;
        Ok(Self {
            regional_hpa,
            national_hpa,
            ratio,
        })
    }
}

/// Data visible to a model when forecasting from one origin: actual regional
/// data through the origin, actual national data through origin + horizon.
#[derive(Debug)]
pub struct OriginContext<'a> {
    pub origin: QuarterDate,
    /// Regional growth through the origin.
    pub regional_history: &'a [f64],
    /// National growth through the origin.
    pub national_history: &'a [f64],
    /// National growth over (origin, origin + horizon].
    pub national_future: &'a [f64],
    /// Demeaned log ratio through the origin.
    pub ratio_history: &'a [f64],
}

/// One model's h-step path from a single origin.
#[derive(Debug, Clone)]
pub struct ForecastPath {
    pub predicted: Vec<f64>,
    pub band_halfwidth: Vec<f64>,
}

/// A model that can produce dynamic h-step forecasts of regional growth.
pub trait DynamicForecaster {
    fn name(&self) -> &str;
    fn forecast(&self, ctx: &OriginContext<'_>, horizon: usize) -> Result<ForecastPath>;
}

/// Rolling panels plus any protocol warnings (e.g. horizons that do not fit
/// the evaluation window).
#[derive(Debug, Clone)]
pub struct RollingForecasts {
    pub panels: Vec<ForecastPanel>,
    pub warnings: Vec<String>,
}

/// Produce rolling-origin h-step panels for one model under a protocol.
///
/// For each horizon h and each origin T = train_end, train_end+1, ... with
/// T + h <= sample_end, the model forecasts conditioning on actual regional
/// data through T and actual national data through T + h; the h-step value
/// is recorded against the realized regional growth at T + h.
pub fn rolling_forecasts(
    model: &dyn DynamicForecaster,
    protocol: &ForecastProtocol,
    inputs: &ForecastInputs,
) -> Result<RollingForecasts> {
    let reg = &inputs.regional_hpa;
    let nat = &inputs.national_hpa;
    if reg.start() != nat.start() || reg.len() != nat.len() {
        return Err(Error::Misaligned {
            detail: "regional and national growth series must align".into(),
        });
    }
    if !reg.covers(protocol.sample_end) {
        return Err(Error::BadWindow);
    }
    if !reg.covers(protocol.train_end) {
        return Err(Error::BadWindow);
    }

    let mut panels = Vec::with_capacity(protocol.horizons.len());
    let mut warnings = Vec::new();
    for &h in &protocol.horizons {
        let mut entries = Vec::new();
        if protocol.train_end.add_quarters(h as i64) > protocol.sample_end {
            warnings.push(format!(
                "horizon {h} exceeds the evaluation window; panel for {} is empty",
                model.name()
            ));
            panels.push(ForecastPanel {
                model_name: model.name().to_string(),
                horizon: h,
                entries,
            });
            continue;
        }
        let mut origin = protocol.train_end;
        while origin.add_quarters(h as i64) <= protocol.sample_end {
            let oi = reg.index_of(origin).expect("origin inside growth series");
            let ri = inputs
                .ratio
                .series()
                .index_of(origin)
                .expect("origin inside ratio series");
            let ctx = OriginContext {
                origin,
                regional_history: &reg.values()[..=oi],
                national_history: &nat.values()[..=oi],
                national_future: &nat.values()[oi + 1..=oi + h],
                ratio_history: &inputs.ratio.values()[..=ri],
            };
            let path = model.forecast(&ctx, h)?;
            if path.predicted.len() != h || path.band_halfwidth.len() != h {
                return Err(Error::PanelMismatch {
                    detail: format!(
                        "model {} returned a path of length {} for horizon {h}",
                        model.name(),
                        path.predicted.len()
                    ),
                });
            }
            let target = origin.add_quarters(h as i64);
            entries.push(PanelEntry {
                origin,
                target,
                predicted: path.predicted[h - 1],
                realized: reg.value_at(target).expect("target inside growth series"),
                band_halfwidth: path.band_halfwidth[h - 1],
            });
            origin = origin.next();
        }
        panels.push(ForecastPanel {
            model_name: model.name().to_string(),
            horizon: h,
            entries,
        });
    }
    Ok(RollingForecasts { panels, warnings })
}

/// Iterate the threshold recursion forward from the end of a demeaned ratio
/// history: each step classifies the latest (actual or forecast) change,
/// predicts the next change with the innovation set to zero, and feeds the
/// forecast back into the level and lag buffer.
///
/// Returns the forecast ratio changes and the indicator path.
fn mtar_delta_path(
    coefficients: &[f64],
    lags: usize,
    ratio_history: &[f64],
    horizon: usize,
) -> Result<(Vec<f64>, Vec<bool>)> {
    if coefficients.len() != 2 + lags {
        return Err(Error::InvalidParameter {
            detail: format!(
                "expected {} coefficients for {} lags, got {}",
                2 + lags,
                lags,
                coefficients.len()
            ),
        });
    }
    let need = lags.max(1);
    let n = ratio_history.len();
    if n < need + 1 {
        return Err(Error::InsufficientData {
            needed: need + 1,
            got: n,
        });
    }
    // recent[j] = change at T - j, most recent first
    let mut recent: Vec<f64> = (0..need)
        .map(|j| ratio_history[n - 1 - j] - ratio_history[n - 2 - j])
        .collect();
    let mut level = ratio_history[n - 1];
    let mut deltas = Vec::with_capacity(horizon);
    let mut indicators = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let up = heaviside(recent[0]) == 1;
        let rho = if up { coefficients[0] } else { coefficients[1] };
        let mut dy = rho * level;
        for j in 1..=lags {
            dy += coefficients[1 + j] * recent[j - 1];
        }
        level += dy;
        recent.insert(0, dy);
        recent.truncate(need);
        deltas.push(dy);
        indicators.push(up);
    }
    Ok((deltas, indicators))
}

/// Threshold-model forecast of regional growth: the forecast ratio change
/// plus the national growth path.
pub fn mtar_dynamic_forecast(
    fit: &MtarResult,
    ratio_history: &DemeanedRatio,
    national_future: &[f64],
    horizon: usize,
) -> Result<Vec<f64>> {
    if national_future.len() < horizon {
        return Err(Error::MissingExogenous {
            detail: format!(
                "need {horizon} national growth values, got {}",
                national_future.len()
            ),
        });
    }
    let (deltas, _) = mtar_delta_path(
        &fit.fit.coefficients,
        fit.lags,
        ratio_history.values(),
        horizon,
    )?;
    Ok(deltas
        .iter()
        .zip(national_future)
        .map(|(d, n)| d + n)
        .collect())
}

/// Two-sigma band half-widths for the threshold forecast, from the linear
/// forward recursion conditional on the forecast indicator path. The
/// indicator is treated as fixed, so the bands are approximate.
pub fn mtar_band_halfwidths(
    coefficients: &[f64],
    lags: usize,
    sigma2: f64,
    indicator_path: &[bool],
) -> Vec<f64> {
    let ld = lags.max(1);
    let dim = 1 + ld;
    // state: [level, d_t, d_{t-1}, ..., d_{t-ld+1}]
    let mut p = vec![vec![0.0; dim]; dim];
    let mut out = Vec::with_capacity(indicator_path.len());
    for &up in indicator_path {
        let rho = if up { coefficients[0] } else { coefficients[1] };
        let mut a = vec![vec![0.0; dim]; dim];
        a[0][0] = 1.0 + rho;
        a[1][0] = rho;
        a[0][1..=lags].copy_from_slice(&coefficients[2..2 + lags]);
        a[1][1..=lags].copy_from_slice(&coefficients[2..2 + lags]);
        for i in 2..dim {
            a[i][i - 1] = 1.0;
        }
        // P <- A P A' + sigma2 * g g', with g = e_level + e_delta
        let mut ap = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for l in 0..dim {
                    s += a[i][l] * p[l][j];
                }
                ap[i][j] = s;
            }
        }
        let mut next = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for l in 0..dim {
                    s += ap[i][l] * a[j][l];
                }
                next[i][j] = s;
            }
        }
        next[0][0] += sigma2;
        next[0][1] += sigma2;
        next[1][0] += sigma2;
        next[1][1] += sigma2;
        p = next;
        out.push(2.0 * p[1][1].max(0.0).sqrt());
    }
    out
}

/// Two-sigma band half-widths for an ARMA/ARMAX forecast, accumulated
/// through the moving-average representation.
pub fn arma_band_halfwidths(fit: &ArmaFit, horizon: usize) -> Vec<f64> {
    let psi = psi_weights(fit, horizon);
    let sigma = fit.sigma2.max(0.0).sqrt();
    let mut acc = 0.0;
    psi.iter()
        .map(|w| {
            acc += w * w;
            2.0 * sigma * acc.sqrt()
        })
        .collect()
}

/// Threshold model handle for rolling forecasts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MtarForecaster {
    pub coefficients: Vec<f64>,
    pub lags: usize,
    pub sigma2: f64,
}

impl MtarForecaster {
    pub fn from_result(result: &MtarResult) -> Self {
        Self {
            coefficients: result.fit.coefficients.clone(),
            lags: result.lags,
            sigma2: result.fit.sigma2,
        }
    }
}

impl DynamicForecaster for MtarForecaster {
    fn name(&self) -> &str {
        "mtar"
    }

    fn forecast(&self, ctx: &OriginContext<'_>, horizon: usize) -> Result<ForecastPath> {
        if ctx.national_future.len() < horizon {
            return Err(Error::MissingExogenous {
                detail: format!(
                    "need {horizon} national growth values, got {}",
                    ctx.national_future.len()
                ),
            });
        }
        let (deltas, indicators) =
            mtar_delta_path(&self.coefficients, self.lags, ctx.ratio_history, horizon)?;
        let predicted = deltas
            .iter()
            .zip(ctx.national_future)
            .map(|(d, n)| d + n)
            .collect();
        let band_halfwidth =
            mtar_band_halfwidths(&self.coefficients, self.lags, self.sigma2, &indicators);
        Ok(ForecastPath {
            predicted,
            band_halfwidth,
        })
    }
}

/// ARMA or ARMAX model handle for rolling forecasts.
#[derive(Debug, Clone)]
pub struct ArmaForecaster {
    fit: ArmaFit,
    name: String,
}

impl ArmaForecaster {
    pub fn new(fit: ArmaFit) -> Self {
        let name = if fit.spec.exogenous { "armax" } else { "arma" };
        Self {
            fit,
            name: name.to_string(),
        }
    }

    pub fn with_name(fit: ArmaFit, name: impl Into<String>) -> Self {
        Self {
            fit,
            name: name.into(),
        }
    }

    pub fn fit(&self) -> &ArmaFit {
        &self.fit
    }
}

impl DynamicForecaster for ArmaForecaster {
    fn name(&self) -> &str {
        &self.name
    }

    fn forecast(&self, ctx: &OriginContext<'_>, horizon: usize) -> Result<ForecastPath> {
        let exog_history = self.fit.spec.exogenous.then_some(ctx.national_history);
        let exog_future = self.fit.spec.exogenous.then_some(ctx.national_future);
        let predicted = arma_forecast(
            &self.fit,
            ctx.regional_history,
            exog_history,
            exog_future,
            horizon,
        )?;
        Ok(ForecastPath {
            predicted,
            band_halfwidth: arma_band_halfwidths(&self.fit, horizon),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arma::ArmaSpec;
    use crate::series::{QuarterlySeries, SeriesKind};
    use crate::unitroot::{mtar_test, CriticalValueTable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn qd(y: i32, q: u8) -> QuarterDate {
        QuarterDate::new(y, q).unwrap()
    }

    fn levels_from_growth(start: QuarterDate, base: f64, growth: &[f64], label: &str) -> QuarterlySeries {
        let mut v = vec![base];
        for g in growth {
            let next = v.last().unwrap() * g.exp();
            v.push(next);
        }
        QuarterlySeries::new(start, v, label, SeriesKind::IndexLevel).unwrap()
    }

    fn synthetic_pair(n_growth: usize, seed: u64) -> AlignedPair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nat_g: Vec<f64> = (0..n_growth)
            .map(|_| 0.01 + 0.005 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let reg_g: Vec<f64> = nat_g
            .iter()
            .map(|g| g + 0.008 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let start = qd(1976, 1);
        let national = levels_from_growth(start, 20.0, &nat_g, "USA");
        let regional = levels_from_growth(start, 25.0, &reg_g, "R1");
        AlignedPair::new(regional, national).unwrap()
    }

    struct PerfectOracle {
        series: QuarterlySeries,
    }

    impl DynamicForecaster for PerfectOracle {
        fn name(&self) -> &str {
            "oracle"
        }
        fn forecast(&self, ctx: &OriginContext<'_>, horizon: usize) -> Result<ForecastPath> {
            let predicted = (1..=horizon)
                .map(|k| {
                    self.series
                        .value_at(ctx.origin.add_quarters(k as i64))
                        .expect("oracle sees the whole sample")
                })
                .collect();
            Ok(ForecastPath {
                predicted,
                band_halfwidth: vec![0.0; horizon],
            })
        }
    }

    fn protocol() -> ForecastProtocol {
        ForecastProtocol::new(qd(2008, 4), qd(2012, 2), vec![1, 4, 8]).unwrap()
    }

    #[test]
    fn rolling_counts_match_evaluation_window() {
        // 146 quarterly levels from 1976Q1 through 2012Q2
        let pair = synthetic_pair(145, 1);
        assert_eq!(pair.regional().end(), qd(2012, 2));
        let inputs = ForecastInputs::from_levels(&pair, qd(2008, 4)).unwrap();
        let oracle = PerfectOracle {
            series: inputs.regional_hpa.clone(),
        };
        let out = rolling_forecasts(&oracle, &protocol(), &inputs).unwrap();
        let counts: Vec<(usize, usize)> = out
            .panels
            .iter()
            .map(|p| (p.horizon, p.entries.len()))
            .collect();
        assert_eq!(counts, vec![(1, 14), (4, 11), (8, 7)]);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn first_eight_step_entry_targets_two_years_out() {
        let pair = synthetic_pair(145, 2);
        let inputs = ForecastInputs::from_levels(&pair, qd(2008, 4)).unwrap();
        let oracle = PerfectOracle {
            series: inputs.regional_hpa.clone(),
        };
        let out = rolling_forecasts(&oracle, &protocol(), &inputs).unwrap();
        let p8 = out.panels.iter().find(|p| p.horizon == 8).unwrap();
        assert_eq!(p8.entries[0].origin, qd(2008, 4));
        assert_eq!(p8.entries[0].target, qd(2010, 4));
    }

    #[test]
    fn perfect_oracle_predictions_equal_realized() {
        let pair = synthetic_pair(145, 3);
        let inputs = ForecastInputs::from_levels(&pair, qd(2008, 4)).unwrap();
        let oracle = PerfectOracle {
            series: inputs.regional_hpa.clone(),
        };
        let out = rolling_forecasts(&oracle, &protocol(), &inputs).unwrap();
        for panel in &out.panels {
            for e in &panel.entries {
                assert_eq!(e.predicted, e.realized);
            }
        }
    }

    #[test]
    fn panel_realized_values_come_from_source_series() {
        let pair = synthetic_pair(145, 4);
        let inputs = ForecastInputs::from_levels(&pair, qd(2008, 4)).unwrap();
        let oracle = PerfectOracle {
            series: inputs.regional_hpa.clone(),
        };
        let out = rolling_forecasts(&oracle, &protocol(), &inputs).unwrap();
        for panel in &out.panels {
            for e in &panel.entries {
                assert_eq!(e.target, e.origin.add_quarters(panel.horizon as i64));
                assert_eq!(e.realized, inputs.regional_hpa.value_at(e.target).unwrap());
            }
        }
    }

    #[test]
    fn oversized_horizon_yields_empty_panel_with_warning() {
        let pair = synthetic_pair(40, 5);
        let train_end = pair.regional().end().add_quarters(-2);
        let inputs = ForecastInputs::from_levels(&pair, train_end).unwrap();
        let proto =
            ForecastProtocol::new(train_end, pair.regional().end(), vec![8]).unwrap();
        let oracle = PerfectOracle {
            series: inputs.regional_hpa.clone(),
        };
        let out = rolling_forecasts(&oracle, &proto, &inputs).unwrap();
        assert_eq!(out.panels.len(), 1);
        assert!(out.panels[0].entries.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    fn zero_fit(lags: usize) -> MtarForecaster {
        MtarForecaster {
            coefficients: vec![0.0; 2 + lags],
            lags,
            sigma2: 0.0004,
        }
    }

    #[test]
    fn zero_coefficients_forecast_equals_national_path() {
        let ratio = vec![0.0; 20];
        let national = [0.01, 0.02, -0.005, 0.0];
        let m = zero_fit(4);
        let ctx = OriginContext {
            origin: qd(2000, 1),
            regional_history: &[],
            national_history: &[],
            national_future: &national,
            ratio_history: &ratio,
        };
        let path = m.forecast(&ctx, 4).unwrap();
        assert_eq!(path.predicted, national.to_vec());
    }

    #[test]
    fn mtar_forecast_matches_hand_recursion() {
        // compact case: one lagged difference, hand-picked coefficients
        let coeffs = [-0.2, -0.5, 0.3];
        let hist = [0.05, 0.02, 0.06, 0.01, 0.04, 0.08, 0.03, 0.07, 0.02, 0.05];
        let (deltas, ind) = mtar_delta_path(&coeffs, 1, &hist, 3).unwrap();

        // hand computation
        let mut y = 0.05;
        let mut d_prev: f64 = 0.05 - 0.02; // change at T
        let mut expect = Vec::new();
        for _ in 0..3 {
            let rho = if d_prev >= 0.0 { -0.2 } else { -0.5 };
            let dy = rho * y + 0.3 * d_prev;
            y += dy;
            expect.push(dy);
            d_prev = dy;
        }
        for (a, b) in deltas.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14, "{deltas:?} vs {expect:?}");
        }
        assert!(ind[0]);
    }

    #[test]
    fn mtar_forecast_geometric_closed_form() {
        // all lag coefficients zero and b1 = b2 = b: the forecast change
        // decays geometrically, dy_{T+k} = b (1+b)^{k-1} y_T
        let b = -0.3;
        let coeffs = [b, b, 0.0, 0.0, 0.0, 0.0];
        let hist = [0.1, 0.2, 0.15, 0.3, 0.25, 0.4];
        let y_t = 0.4;
        let (deltas, _) = mtar_delta_path(&coeffs, 4, &hist, 6).unwrap();
        for (k, d) in deltas.iter().enumerate() {
            let expect = b * (1.0 + b).powi(k as i32) * y_t;
            assert!((d - expect).abs() < 1e-12, "step {k}: {d} vs {expect}");
        }
    }

    #[test]
    fn mtar_dynamic_forecast_agrees_with_forecaster_and_adds_national() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let mut dev = 0.0f64;
        let mut prev = 0.0f64;
        let vals: Vec<f64> = (0..200)
            .map(|_| {
                let rho = if prev >= 0.0 { -0.1 } else { -0.4 };
                let dy = rho * dev + 0.01 * rng.sample::<f64, _>(StandardNormal);
                dev += dy;
                prev = dy;
                dev
            })
            .collect();
        let series =
            QuarterlySeries::new(qd(1950, 1), vals, "y", SeriesKind::LogRatio).unwrap();
        let ratio = demean(&series, None).unwrap();
        let fit = mtar_test(&ratio, &CriticalValueTable::enders_2001(), 4).unwrap();

        let national = [0.011, -0.004, 0.02, 0.007];
        let fc = mtar_dynamic_forecast(&fit, &ratio, &national, 4).unwrap();

        let model = MtarForecaster::from_result(&fit);
        let ctx = OriginContext {
            origin: series.end(),
            regional_history: &[],
            national_history: &[],
            national_future: &national,
            ratio_history: ratio.values(),
        };
        let path = model.forecast(&ctx, 4).unwrap();
        assert_eq!(fc, path.predicted);

        // the national path enters additively, date by date
        let zero = mtar_dynamic_forecast(&fit, &ratio, &[0.0; 4], 4).unwrap();
        for ((with, without), nat) in fc.iter().zip(&zero).zip(&national) {
            assert!((with - without - nat).abs() < 1e-15);
        }
        assert!(matches!(
            mtar_dynamic_forecast(&fit, &ratio, &national[..2], 4),
            Err(Error::MissingExogenous { .. })
        ));
    }

    #[test]
    fn one_step_band_is_two_sigma_for_all_models() {
        let sigma2 = 0.0009f64;
        let m = MtarForecaster {
            coefficients: vec![-0.1, -0.4, 0.2, 0.1, 0.0, 0.0],
            lags: 4,
            sigma2,
        };
        let bands = mtar_band_halfwidths(&m.coefficients, m.lags, m.sigma2, &[true]);
        assert!((bands[0] - 2.0 * sigma2.sqrt()).abs() < 1e-12);

        let fit = ArmaFit {
            spec: ArmaSpec::new(1, 1, true, false).unwrap(),
            intercept: 0.0,
            phi: vec![0.5],
            theta: vec![0.2],
            beta_exog: None,
            sigma2,
            loglik: 0.0,
            aic: 0.0,
            residuals: vec![],
            converged: true,
            sample_window: None,
        };
        let bands = arma_band_halfwidths(&fit, 3);
        assert!((bands[0] - 2.0 * sigma2.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_model_band_is_flat() {
        let fit = ArmaFit {
            spec: ArmaSpec::new(0, 0, true, false).unwrap(),
            intercept: 0.5,
            phi: vec![],
            theta: vec![],
            beta_exog: None,
            sigma2: 0.04,
            loglik: 0.0,
            aic: 0.0,
            residuals: vec![],
            converged: true,
            sample_window: None,
        };
        let bands = arma_band_halfwidths(&fit, 6);
        for b in bands {
            assert!((b - 2.0 * 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn ar1_band_matches_closed_form() {
        let phi = 0.7;
        let sigma2 = 0.25;
        let fit = ArmaFit {
            spec: ArmaSpec::new(1, 0, true, false).unwrap(),
            intercept: 0.0,
            phi: vec![phi],
            theta: vec![],
            beta_exog: None,
            sigma2,
            loglik: 0.0,
            aic: 0.0,
            residuals: vec![],
            converged: true,
            sample_window: None,
        };
        let bands = arma_band_halfwidths(&fit, 8);
        for (i, b) in bands.iter().enumerate() {
            let var: f64 = (0..=i).map(|k| phi.powi(2 * k as i32)).sum::<f64>() * sigma2;
            let expect = 2.0 * var.sqrt();
            assert!((b - expect).abs() < 1e-10, "h={}: {b} vs {expect}", i + 1);
        }
    }

    #[test]
    fn arma_bands_grow_monotonically_for_stationary_fits() {
        let fit = ArmaFit {
            spec: ArmaSpec::new(2, 1, true, false).unwrap(),
            intercept: 0.0,
            phi: vec![0.5, -0.2],
            theta: vec![0.4],
            beta_exog: None,
            sigma2: 0.01,
            loglik: 0.0,
            aic: 0.0,
            residuals: vec![],
            converged: true,
            sample_window: None,
        };
        let bands = arma_band_halfwidths(&fit, 12);
        for w in bands.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn mtar_bands_never_fall_below_one_step_width() {
        // The conditional threshold recursion is not monotone in h (strong
        // mean reversion can shrink the step variance after a build-up), but
        // every step's error contains a fresh innovation, so the one-step
        // width is a floor.
        let coeffs = [-0.05, -0.4, 0.3, 0.2, -0.1, 0.05];
        let ind = vec![true, false, true, true, false, false, true, false];
        let mbands = mtar_band_halfwidths(&coeffs, 4, 0.0001, &ind);
        let floor = 2.0 * 0.0001f64.sqrt();
        for b in &mbands {
            assert!(*b >= floor - 1e-12, "{mbands:?}");
        }
    }

    #[test]
    fn mtar_bands_match_monte_carlo_propagation() {
        // independent check of the linearized band recursion: simulate the
        // same conditional recursion with random innovations and compare
        // the sample standard deviation of each step's error
        let coeffs = [-0.05, -0.4, 0.3, 0.2, -0.1, 0.05];
        let lags = 4;
        let sigma = 0.01f64;
        let ind = [true, false, true, true, false, true];
        let h = ind.len();
        let bands = mtar_band_halfwidths(&coeffs, lags, sigma * sigma, &ind);

        let paths = 200_000;
        let mut sum = vec![0.0; h];
        let mut sumsq = vec![0.0; h];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..paths {
            let mut level = 0.0;
            let mut recent = [0.0f64; 4];
            for (k, &up) in ind.iter().enumerate() {
                let rho = if up { coeffs[0] } else { coeffs[1] };
                let mut dy = rho * level;
                for j in 1..=lags {
                    dy += coeffs[1 + j] * recent[j - 1];
                }
                dy += sigma * rng.sample::<f64, _>(StandardNormal);
                level += dy;
                recent.rotate_right(1);
                recent[0] = dy;
                sum[k] += dy;
                sumsq[k] += dy * dy;
            }
        }
        for k in 0..h {
            let mean = sum[k] / paths as f64;
            let var = sumsq[k] / paths as f64 - mean * mean;
            let expect = 2.0 * var.sqrt();
            assert!(
                (bands[k] - expect).abs() < 0.02 * expect,
                "step {k}: band {} vs simulated {expect}",
                bands[k]
            );
        }
    }

    fn fit_models(inputs: &ForecastInputs, train_end: QuarterDate) -> (ArmaForecaster, ArmaForecaster, MtarForecaster) {
        let reg = &inputs.regional_hpa;
        let nat = &inputs.national_hpa;
        let ti = reg.index_of(train_end).unwrap();
        let train_reg = QuarterlySeries::new(
            reg.start(),
            reg.values()[..=ti].to_vec(),
            "reg",
            SeriesKind::GrowthRate,
        )
        .unwrap();
        let train_nat = QuarterlySeries::new(
            nat.start(),
            nat.values()[..=ti].to_vec(),
            "nat",
            SeriesKind::GrowthRate,
        )
        .unwrap();
        let arma = crate::arma::fit_arma(
            &train_reg,
            ArmaSpec::new(1, 0, true, false).unwrap(),
            None,
        )
        .unwrap();
        let armax = crate::arma::fit_arma(
            &train_reg,
            ArmaSpec::new(1, 0, true, true).unwrap(),
            Some(&train_nat),
        )
        .unwrap();
        let ri = inputs.ratio.series().index_of(train_end).unwrap();
        let train_ratio_series = QuarterlySeries::new(
            inputs.ratio.series().start(),
            inputs.ratio.series().values()[..=ri].to_vec(),
            "ratio",
            SeriesKind::LogRatio,
        )
        .unwrap();
        let train_ratio = demean(&train_ratio_series, None).unwrap();
        let mtar = mtar_test(&train_ratio, &CriticalValueTable::enders_2001(), 4).unwrap();
        (
            ArmaForecaster::new(arma),
            ArmaForecaster::new(armax),
            MtarForecaster::from_result(&mtar),
        )
    }

    #[test]
    fn no_lookahead_in_any_model() {
        let pair = synthetic_pair(145, 7);
        let train_end = qd(2008, 4);
        let inputs = ForecastInputs::from_levels(&pair, train_end).unwrap();
        let (arma, armax, mtar) = fit_models(&inputs, train_end);
        let proto = ForecastProtocol::new(train_end, qd(2012, 2), vec![4]).unwrap();

        let base: Vec<ForecastPanel> = [&arma as &dyn DynamicForecaster, &armax, &mtar]
            .iter()
            .map(|m| rolling_forecasts(*m, &proto, &inputs).unwrap().panels[0].clone())
            .collect();

        // perturb a regional level three quarters after the first origin
        let mut reg_values = pair.regional().values().to_vec();
        let idx = pair.regional().index_of(train_end.add_quarters(3)).unwrap();
        reg_values[idx] *= 1.3;
        let perturbed_pair = AlignedPair::new(
            QuarterlySeries::new(pair.regional().start(), reg_values, "R1", SeriesKind::IndexLevel)
                .unwrap(),
            pair.national().clone(),
        )
        .unwrap();
        let perturbed = ForecastInputs::from_levels(&perturbed_pair, train_end).unwrap();
        for (m, b) in [&arma as &dyn DynamicForecaster, &armax, &mtar]
            .iter()
            .zip(&base)
        {
            let p = rolling_forecasts(*m, &proto, &perturbed).unwrap().panels[0].clone();
            // the first origin is train_end: regional data after it must not matter
            assert_eq!(p.entries[0].predicted.to_bits(), b.entries[0].predicted.to_bits());
        }

        // perturb the national level at the 4-step target date: ARMA is
        // untouched, MTAR and ARMAX both respond (the threshold model adds
        // the national growth dated at the target, so only that date's
        // growth enters its h-step value)
        let mut nat_values = pair.national().values().to_vec();
        let idx = pair.national().index_of(train_end.add_quarters(4)).unwrap();
        nat_values[idx] *= 1.2;
        let perturbed_pair = AlignedPair::new(
            pair.regional().clone(),
            QuarterlySeries::new(pair.national().start(), nat_values, "USA", SeriesKind::IndexLevel)
                .unwrap(),
        )
        .unwrap();
        let perturbed = ForecastInputs::from_levels(&perturbed_pair, train_end).unwrap();
        let arma_p = rolling_forecasts(&arma, &proto, &perturbed).unwrap().panels[0].clone();
        assert_eq!(
            arma_p.entries[0].predicted.to_bits(),
            base[0].entries[0].predicted.to_bits()
        );
        let armax_p = rolling_forecasts(&armax, &proto, &perturbed).unwrap().panels[0].clone();
        assert_ne!(armax_p.entries[0].predicted, base[1].entries[0].predicted);
        let mtar_p = rolling_forecasts(&mtar, &proto, &perturbed).unwrap().panels[0].clone();
        assert_ne!(mtar_p.entries[0].predicted, base[2].entries[0].predicted);
    }

    #[test]
    fn panel_csv_round_trip() {
        let panel = ForecastPanel {
            model_name: "arma".into(),
            horizon: 4,
            entries: vec![
                PanelEntry {
                    origin: qd(2008, 4),
                    target: qd(2009, 4),
                    predicted: 0.0123,
                    realized: -0.004,
                    band_halfwidth: 0.02,
                },
                PanelEntry {
                    origin: qd(2009, 1),
                    target: qd(2010, 1),
                    predicted: 0.011,
                    realized: 0.002,
                    band_halfwidth: 0.021,
                },
            ],
        };
        let csv = panel.to_csv();
        let back = ForecastPanel::from_csv("arma", 4, &csv).unwrap();
        assert_eq!(back, panel);
    }
}
