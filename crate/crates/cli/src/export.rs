//! Plot-ready data series: CSV plus a small declarative plot description.

use std::f64::consts::TAU;

use serde::Serialize;

use qevote_core::analysis::{
    bin_mass, delta_grid, pr_win_given_bad, rounds_threshold, survival_lower_bound, three_bin_mass,
    SUITE_DIMS,
};
use qevote_core::qcore::povm_density;

use crate::config::{ExportSpec, SeriesName};

/// Rendering hints for external tools.
#[derive(Debug, Clone, Serialize)]
pub struct PlotSpec {
    pub data: String,
    pub mark: &'static str,
    pub x: &'static str,
    pub y: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<[&'static str; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_y: Option<bool>,
}

pub struct Series {
    pub csv: String,
    pub plot: PlotSpec,
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn plot(data: &str, x: &'static str, y: Vec<&'static str>) -> PlotSpec {
    PlotSpec {
        data: data.to_string(),
        mark: "line",
        x,
        y,
        group: None,
        band: None,
        log_y: None,
    }
}

pub fn file_stem(name: SeriesName) -> &'static str {
    match name {
        SeriesName::BinMass => "bin-mass",
        SeriesName::PovmDensity => "povm-density",
        SeriesName::Survival => "survival",
        SeriesName::RoundsThreshold => "rounds-threshold",
    }
}

pub fn export(spec: &ExportSpec) -> anyhow::Result<Series> {
    let data = format!("{}.csv", file_stem(spec.series));
    Ok(match spec.series {
        SeriesName::BinMass => {
            let dims: Vec<usize> = spec.dim.map_or(SUITE_DIMS.to_vec(), |d| vec![d]);
            let mut rows = Vec::new();
            for dim in dims {
                for delta in delta_grid(dim) {
                    rows.push(vec![
                        dim.to_string(),
                        format!("{delta:.12}"),
                        format!("{:.12}", bin_mass(delta, dim, 0)?.value),
                        format!("{:.12}", three_bin_mass(delta, dim)?.value),
                    ]);
                }
            }
            let mut p = plot(&data, "delta", vec!["single_bin", "three_bin"]);
            p.group = Some("dim");
            Series {
                csv: table(&["dim", "delta", "single_bin", "three_bin"], rows)?,
                plot: p,
            }
        }
        SeriesName::PovmDensity => {
            let dim = spec.dim.unwrap_or(8);
            let points = 1024;
            let rows = (0..points)
                .map(|i| {
                    let phi = TAU * i as f64 / points as f64;
                    vec![
                        format!("{phi:.12}"),
                        format!("{:.12}", povm_density(phi, dim)),
                    ]
                })
                .collect();
            Series {
                csv: table(&["phi", "density"], rows)?,
                plot: plot(&data, "phi", vec!["density"]),
            }
        }
        SeriesName::Survival => {
            let n = spec.voters.unwrap_or(4);
            let t = spec.corrupted.unwrap_or(n / 2);
            let lower = survival_lower_bound(n, t)?.to_f64();
            let rows = (0..=8u32)
                .map(|d0| {
                    let p = pr_win_given_bad(n, t, d0)?;
                    Ok(vec![
                        d0.to_string(),
                        p.to_string(),
                        format!("{:.12e}", p.to_f64()),
                        format!("{lower:.12e}"),
                    ])
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let mut p = plot(&data, "delta0", vec!["probability", "lower_bound"]);
            p.log_y = Some(true);
            Series {
                csv: table(&["delta0", "exact", "probability", "lower_bound"], rows)?,
                plot: p,
            }
        }
        SeriesName::RoundsThreshold => {
            let max = spec.max_rounds.unwrap_or(64).max(2);
            let rows = (2..=max)
                .map(|rho| {
                    Ok(vec![
                        rho.to_string(),
                        format!("{:.12}", rounds_threshold(rho)?),
                    ])
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            Series {
                csv: table(&["rounds", "threshold"], rows)?,
                plot: plot(&data, "rounds", vec!["threshold"]),
            }
        }
    })
}
