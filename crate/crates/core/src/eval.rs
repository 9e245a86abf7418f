//! Forecast-quality metrics (RMSFE with its bias-variance decomposition),
//! pairwise winner aggregation, and forecast-encompassing tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::ForecastPanel;
use crate::linreg::{f_test_restrictions, ols_fit, DesignMatrix, FTestResult, OlsFit};

/// Root mean square forecast error with its exact decomposition
/// `value^2 = bias^2 + error_variance` (population 1/n variance).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RmsfeResult {
    pub value: f64,
    pub n: usize,
    pub bias: f64,
    pub error_variance: f64,
}

pub fn rmsfe(panel: &ForecastPanel) -> Result<RmsfeResult> {
    if panel.entries.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let errors: Vec<f64> = panel
        .entries
        .iter()
        .map(|e| e.predicted - e.realized)
        .collect();
    let n = errors.len();
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / n as f64;
    let bias = errors.iter().sum::<f64>() / n as f64;
    let error_variance = errors.iter().map(|e| (e - bias).powi(2)).sum::<f64>() / n as f64;
    Ok(RmsfeResult {
        value: mse.sqrt(),
        n,
        bias,
        error_variance,
    })
}

/// Pairwise winner between two models, overall and per horizon. `None`
/// means an exact tie.
#[derive(Debug, Clone, Serialize)]
pub struct PairwiseWinner {
    pub model_a: String,
    pub model_b: String,
    pub winner: Option<String>,
    /// (horizon, per-horizon winner) with `None` for equal RMSFE.
    pub per_horizon: Vec<(usize, Option<String>)>,
}

/// RMSFE per (model, horizon) plus all pairwise winners.
#[derive(Debug, Clone, Serialize)]
pub struct WinnerTable {
    pub rmsfe: Vec<(String, usize, RmsfeResult)>,
    pub pairs: Vec<PairwiseWinner>,
}

/// Panels for one model across horizons.
#[derive(Debug, Clone)]
pub struct ModelPanels {
    pub model_name: String,
    pub panels: Vec<ForecastPanel>,
}

fn check_comparable(a: &ForecastPanel, b: &ForecastPanel) -> Result<()> {
    if a.horizon != b.horizon || a.entries.len() != b.entries.len() {
        return Err(Error::PanelMismatch {
            detail: format!(
                "{} h={} ({} entries) vs {} h={} ({} entries)",
                a.model_name,
                a.horizon,
                a.entries.len(),
                b.model_name,
                b.horizon,
                b.entries.len()
            ),
        });
    }
    for (x, y) in a.entries.iter().zip(&b.entries) {
        if x.origin != y.origin || x.target != y.target {
            return Err(Error::PanelMismatch {
                detail: format!(
                    "origin/target mismatch at {} vs {}",
                    x.origin, y.origin
                ),
            });
        }
    }
    Ok(())
}

/// Compare models pairwise by RMSFE. A model wins a pair when it has the
/// strictly lower RMSFE at a strict majority of horizons; with no majority
/// the winner of the longest decided horizon is taken; a full tie is
/// reported explicitly as `None`.
pub fn winner_table(models: &[ModelPanels]) -> Result<WinnerTable> {
    if models.len() < 2 {
        return Err(Error::InvalidParameter {
            detail: "winner table needs at least two models".into(),
        });
    }
    let mut rmsfe_rows = Vec::new();
    for m in models {
        for p in &m.panels {
            rmsfe_rows.push((m.model_name.clone(), p.horizon, rmsfe(p)?));
        }
    }

    let mut pairs = Vec::new();
    for i in 0..models.len() {
        for j in (i + 1)..models.len() {
            let a = &models[i];
            let b = &models[j];
            if a.panels.len() != b.panels.len() {
                return Err(Error::PanelMismatch {
                    detail: format!(
                        "{} has {} panels, {} has {}",
                        a.model_name,
                        a.panels.len(),
                        b.model_name,
                        b.panels.len()
                    ),
                });
            }
            let mut per_horizon = Vec::new();
            for (pa, pb) in a.panels.iter().zip(&b.panels) {
                check_comparable(pa, pb)?;
                let ra = rmsfe(pa)?.value;
                let rb = rmsfe(pb)?.value;
                let winner = if ra < rb {
                    Some(a.model_name.clone())
                } else if rb < ra {
                    Some(b.model_name.clone())
                } else {
                    None
                };
                per_horizon.push((pa.horizon, winner));
            }
            per_horizon.sort_by_key(|&(h, _)| h);
            let wins_a = per_horizon
                .iter()
                .filter(|(_, w)| w.as_deref() == Some(a.model_name.as_str()))
                .count();
            let wins_b = per_horizon
                .iter()
                .filter(|(_, w)| w.as_deref() == Some(b.model_name.as_str()))
                .count();
            let winner = if wins_a > wins_b {
                Some(a.model_name.clone())
            } else if wins_b > wins_a {
                Some(b.model_name.clone())
            } else {
                // no majority: fall back to the longest decided horizon
                per_horizon
                    .iter()
                    .rev()
                    .find_map(|(_, w)| w.clone())
            };
            pairs.push(PairwiseWinner {
                model_a: a.model_name.clone(),
                model_b: b.model_name.clone(),
                winner,
                per_horizon,
            });
        }
    }
    Ok(WinnerTable {
        rmsfe: rmsfe_rows,
        pairs,
    })
}

/// Outcome of a forecast-encompassing comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Model1Encompasses,
    Model2Encompasses,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self, model1: &str, model2: &str) -> String {
        match self {
            Verdict::Model1Encompasses => model1.to_string(),
            Verdict::Model2Encompasses => model2.to_string(),
            Verdict::Inconclusive => "inconclusive".to_string(),
        }
    }
}

/// Encompassing regression of realizations on both forecasts, with the two
/// joint restriction tests.
#[derive(Debug, Clone, Serialize)]
pub struct EncompassingResult {
    pub regression: OlsFit,
    /// H0: intercept 0, weight 1 on forecast 1, weight 0 on forecast 2.
    pub test1: FTestResult,
    /// H0: intercept 0, weight 0 on forecast 1, weight 1 on forecast 2.
    pub test2: FTestResult,
    pub verdict: Verdict,
    pub confidence: f64,
}

/// Regress realized values on an intercept and two competing forecasts and
/// test the joint restrictions that all weight sits on one of them.
///
/// Model 1 encompasses model 2 when its restriction survives while the
/// other's is rejected at `confidence`; symmetrically for model 2; anything
/// else is inconclusive. Collinear forecasts produce a dedicated error.
pub fn encompassing_test(
    realized: &[f64],
    forecast1: &[f64],
    forecast2: &[f64],
    confidence: f64,
) -> Result<EncompassingResult> {
    let n = realized.len();
    if forecast1.len() != n || forecast2.len() != n {
        return Err(Error::DimensionMismatch {
            detail: format!(
                "lengths {} / {} / {}",
                n,
                forecast1.len(),
                forecast2.len()
            ),
        });
    }
    if n < 5 {
        return Err(Error::InsufficientData { needed: 5, got: n });
    }
    if !(0.0..1.0).contains(&confidence) || confidence <= 0.0 {
        return Err(Error::InvalidParameter {
            detail: format!("confidence {confidence} must lie in (0, 1)"),
        });
    }
    if forecast1
        .iter()
        .zip(forecast2)
        .all(|(a, b)| (a - b).abs() <= f64::EPSILON * a.abs().max(b.abs()).max(1.0))
    {
        return Err(Error::CollinearForecasts);
    }
    let x = DesignMatrix::from_columns(
        vec!["const".into(), "forecast1".into(), "forecast2".into()],
        vec![vec![1.0; n], forecast1.to_vec(), forecast2.to_vec()],
    )?;
    let regression = match ols_fit(&x, realized) {
        Ok(f) => f,
        Err(Error::RankDeficient { .. }) => return Err(Error::CollinearForecasts),
        Err(e) => return Err(e),
    };
    let identity = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ];
    let test1 = f_test_restrictions(&regression, &x, realized, &identity, &[0.0, 1.0, 0.0])?;
    let test2 = f_test_restrictions(&regression, &x, realized, &identity, &[0.0, 0.0, 1.0])?;

    let alpha = 1.0 - confidence;
    let reject1 = test1.p_value < alpha;
    let reject2 = test2.p_value < alpha;
    let verdict = match (reject1, reject2) {
        (false, true) => Verdict::Model1Encompasses,
        (true, false) => Verdict::Model2Encompasses,
        _ => Verdict::Inconclusive,
    };
    Ok(EncompassingResult {
        regression,
        test1,
        test2,
        verdict,
        confidence,
    })
}

/// Combined verdict across horizons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OverallVerdict {
    pub verdict: Verdict,
    /// Set when conclusive per-horizon verdicts disagree.
    pub conflict: bool,
}

/// Aggregate per-horizon verdicts: a model wins overall when every
/// conclusive verdict names it; conflicting conclusive verdicts are
/// inconclusive with the conflict flag set.
pub fn overall_encompassing(per_horizon: &[Verdict]) -> OverallVerdict {
    let conclusive: Vec<Verdict> = per_horizon
        .iter()
        .copied()
        .filter(|v| *v != Verdict::Inconclusive)
        .collect();
    if conclusive.is_empty() {
        return OverallVerdict {
            verdict: Verdict::Inconclusive,
            conflict: false,
        };
    }
    let first = conclusive[0];
    if conclusive.iter().all(|v| *v == first) {
        OverallVerdict {
            verdict: first,
            conflict: false,
        }
    } else {
        OverallVerdict {
            verdict: Verdict::Inconclusive,
            conflict: true,
        }
    }
}
