//! `evaluate`: RMSFE tables with pairwise winners, and the forecast
//! encompassing tests between the threshold and baseline models.

use anyhow::{Context, Result};
use hpiconv_core::eval::{
    encompassing_test, overall_encompassing, winner_table, ModelPanels, Verdict,
};
use hpiconv_core::forecast::ForecastPanel;
use hpiconv_core::Error as CoreError;
use serde::Serialize;

use crate::commands::panel_file_name;
use crate::config::RunConfig;
use crate::output::OutputSet;

const MODELS: [&str; 3] = ["arma", "armax", "mtar"];

/// Caveats attached to every evaluation report.
const NOTES: &str = "encompassing tests use classical OLS F-statistics; multi-step forecast \
errors overlap and are serially correlated, which the tests do not correct for, and \
long-horizon panels can be very short";

#[derive(Serialize)]
struct RmsfeRow {
    region: String,
    model: String,
    horizon: usize,
    rmsfe: f64,
    bias: f64,
    error_variance: f64,
    n: usize,
}

#[derive(Serialize)]
struct WinnerRow {
    region: String,
    model_a: String,
    model_b: String,
    winner: String,
    per_horizon: Vec<(usize, String)>,
}

#[derive(Serialize)]
struct EncompassingRow {
    region: String,
    horizon: usize,
    f_mtar: Option<f64>,
    p_mtar: Option<f64>,
    f_arma: Option<f64>,
    p_arma: Option<f64>,
    n: usize,
    verdict: String,
    diagnostic: Option<String>,
}

#[derive(Serialize)]
struct OverallRow {
    region: String,
    per_horizon: Vec<(usize, String)>,
    overall: String,
    conflict: bool,
}

#[derive(Serialize)]
struct ProtocolEcho {
    train_end: Option<String>,
    sample_end: Option<String>,
    horizons: Vec<usize>,
}

#[derive(Serialize)]
struct EvaluationReport {
    notes: &'static str,
    confidence: f64,
    protocol: ProtocolEcho,
    rmsfe: Vec<RmsfeRow>,
    winners: Vec<WinnerRow>,
    encompassing: Vec<EncompassingRow>,
    overall: Vec<OverallRow>,
}

fn verdict_label(v: Verdict) -> String {
    v.label("mtar", "arma")
}

fn read_panel(out: &OutputSet, region: &str, model: &str, horizon: usize) -> Result<ForecastPanel> {
    let path = out.dir().join(panel_file_name(region, model, horizon, "csv"));
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read {} (run `forecast` first)", path.display()))?;
    Ok(ForecastPanel::from_csv(model, horizon, &text)?)
}

pub fn run(config: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let regions = config.require_regions()?.to_vec();
    let confidence = config.verdict_confidence();
    let mut report = EvaluationReport {
        notes: NOTES,
        confidence,
        protocol: ProtocolEcho {
            train_end: config.train_end.map(|d| d.to_string()),
            sample_end: config.sample_end.map(|d| d.to_string()),
            horizons: config.horizons.clone(),
        },
        rmsfe: Vec::new(),
        winners: Vec::new(),
        encompassing: Vec::new(),
        overall: Vec::new(),
    };

    for region in &regions {
        let mut model_panels = Vec::new();
        for model in MODELS {
            let panels: Vec<ForecastPanel> = config
                .horizons
                .iter()
                .map(|&h| read_panel(out, region, model, h))
                .collect::<Result<_>>()?;
            model_panels.push(ModelPanels {
                model_name: model.to_string(),
                panels,
            });
        }

        let table = winner_table(&model_panels)
            .with_context(|| format!("winner table for region {region}"))?;
        for (model, horizon, r) in &table.rmsfe {
            report.rmsfe.push(RmsfeRow {
                region: region.clone(),
                model: model.clone(),
                horizon: *horizon,
                rmsfe: r.value,
                bias: r.bias,
                error_variance: r.error_variance,
                n: r.n,
            });
        }
        for p in &table.pairs {
            report.winners.push(WinnerRow {
                region: region.clone(),
                model_a: p.model_a.clone(),
                model_b: p.model_b.clone(),
                winner: p.winner.clone().unwrap_or_else(|| "tie".into()),
                per_horizon: p
                    .per_horizon
                    .iter()
                    .map(|(h, w)| (*h, w.clone().unwrap_or_else(|| "tie".into())))
                    .collect(),
            });
        }

        // encompassing: threshold model vs the baseline, per horizon
        let mtar_panels = &model_panels[2].panels;
        let arma_panels = &model_panels[0].panels;
        let mut verdicts = Vec::new();
        let mut per_horizon_labels = Vec::new();
        for (pm, pa) in mtar_panels.iter().zip(arma_panels) {
            let realized: Vec<f64> = pa.entries.iter().map(|e| e.realized).collect();
            let f_mtar: Vec<f64> = pm.entries.iter().map(|e| e.predicted).collect();
            let f_arma: Vec<f64> = pa.entries.iter().map(|e| e.predicted).collect();
            let row = match encompassing_test(&realized, &f_mtar, &f_arma, confidence) {
                Ok(res) => {
                    verdicts.push(res.verdict);
                    EncompassingRow {
                        region: region.clone(),
                        horizon: pm.horizon,
                        f_mtar: Some(res.test1.statistic),
                        p_mtar: Some(res.test1.p_value),
                        f_arma: Some(res.test2.statistic),
                        p_arma: Some(res.test2.p_value),
                        n: realized.len(),
                        verdict: verdict_label(res.verdict),
                        diagnostic: None,
                    }
                }
                Err(e @ (CoreError::CollinearForecasts | CoreError::InsufficientData { .. })) => {
                    verdicts.push(Verdict::Inconclusive);
                    EncompassingRow {
                        region: region.clone(),
                        horizon: pm.horizon,
                        f_mtar: None,
                        p_mtar: None,
                        f_arma: None,
                        p_arma: None,
                        n: realized.len(),
                        verdict: "inconclusive".into(),
                        diagnostic: Some(e.to_string()),
                    }
                }
                Err(e) => {
                    return Err(e).with_context(|| {
                        format!("encompassing test for region {region} h={}", pm.horizon)
                    })
                }
            };
            per_horizon_labels.push((row.horizon, row.verdict.clone()));
            report.encompassing.push(row);
        }
        let overall = overall_encompassing(&verdicts);
        report.overall.push(OverallRow {
            region: region.clone(),
            per_horizon: per_horizon_labels,
            overall: verdict_label(overall.verdict),
            conflict: overall.conflict,
        });
    }

    if config.wants("csv") {
        let mut body = String::from("region,model,horizon,rmsfe,bias,error_variance,n\n");
        for r in &report.rmsfe {
            body.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.region, r.model, r.horizon, r.rmsfe, r.bias, r.error_variance, r.n
            ));
        }
        out.write_csv("rmsfe.csv", &body)?;

        let mut body = String::from("region,model_a,model_b,winner\n");
        for w in &report.winners {
            body.push_str(&format!(
                "{},{},{},{}\n",
                w.region, w.model_a, w.model_b, w.winner
            ));
        }
        out.write_csv("winners.csv", &body)?;

        let mut body = String::from(
            "region,horizon,f_mtar,p_mtar,f_arma,p_arma,n,verdict\n",
        );
        for e in &report.encompassing {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            body.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                e.region,
                e.horizon,
                fmt(e.f_mtar),
                fmt(e.p_mtar),
                fmt(e.f_arma),
                fmt(e.p_arma),
                e.n,
                e.verdict
            ));
        }
        let mut overall_body = String::from("region,");
        let hs: Vec<String> = config.horizons.iter().map(|h| format!("h{h}")).collect();
        overall_body.push_str(&hs.join(","));
        overall_body.push_str(",overall,conflict\n");
        for o in &report.overall {
            overall_body.push_str(&o.region);
            for (_, v) in &o.per_horizon {
                overall_body.push(',');
                overall_body.push_str(v);
            }
            overall_body.push_str(&format!(",{},{}\n", o.overall, o.conflict));
        }
        body.push_str(&overall_body);
        out.write_csv("encompassing.csv", &body)?;
    }
    if config.wants("json") {
        out.write_json("evaluation.json", &report)?;
    }
    Ok(())
}
