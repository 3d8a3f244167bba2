//! Library side of the command-line tool: running seed ensembles, analysing
//! run directories, parameter sweeps and reproducible manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SimConfig;
use crate::engine::{run, Tallies};
use crate::error::{Error, Result};
use crate::io::{self, fmt_sig};
use crate::stats::{
    avalanche_statistics, empirical_pdf, excess_kurtosis, fit_pdf, normalized_returns,
    qgaussian, weighted_average_price, AvalancheStats, QGaussianFit, DEFAULT_BIN_WIDTH,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.txt";

/// Everything needed to reproduce a `run` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// SHA-256 of every artifact, keyed by path relative to `out_dir`.
    pub checksums: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: RunManifest = serde_json::from_str(&text)?;
        manifest.config.validate()?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BuySellFractions {
    pub fund_buy: f64,
    pub fund_sell: f64,
    pub chart_buy: f64,
    pub chart_sell: f64,
}

impl From<&Tallies> for BuySellFractions {
    fn from(t: &Tallies) -> Self {
        BuySellFractions {
            fund_buy: t.fundamentalists.buy_fraction(),
            fund_sell: t.fundamentalists.sell_fraction(),
            chart_buy: t.chartists.buy_fraction(),
            chart_sell: t.chartists.sell_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub n_returns: usize,
    pub r_av: f64,
    pub r_stdev: f64,
    pub excess_kurtosis: f64,
    pub fit: Option<QGaussianFit>,
    pub fit_error: Option<String>,
}

/// Analysis of one run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub bin_width: f64,
    /// Keyed by `p1`, `p2` and `p12` (the weighted average).
    pub series: BTreeMap<String, SeriesSummary>,
    pub avalanches: Option<AvalancheStats>,
    pub fractions: Option<BuySellFractions>,
    pub tallies: Option<Tallies>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSeries {
    pub median_q: Option<f64>,
    pub median_excess_kurtosis: f64,
}

/// Aggregate over the seeds of one `run` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub seeds: Vec<u64>,
    pub series: BTreeMap<String, EnsembleSeries>,
    /// Pooled over all seeds.
    pub fractions: BuySellFractions,
    pub median_decade_span: f64,
    pub runs: BTreeMap<String, RunSummary>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

pub fn seed_dir_name(seed: u64) -> String {
    format!("seed-{seed}")
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Simulates `cfg` once and writes its CSV artifacts into `dir`.
pub fn run_single(cfg: &SimConfig, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let record = run(cfg)?;
    if record.floor_hits > 0 {
        log::warn!("seed {}: price floor hit on {} steps", cfg.seed, record.floor_hits);
    }
    io::write_file(&dir.join(CONFIG_FILE), &cfg.to_text())?;
    io::write_file(&dir.join("prices.csv"), &io::prices_csv(&record))?;
    io::write_file(&dir.join("avalanches.csv"), &io::avalanches_csv(&record))?;
    io::write_file(&dir.join("books.csv"), &io::books_csv(&record))?;
    io::write_file(&dir.join("agents.csv"), &io::agents_csv(&record.agents))?;
    io::write_file(&dir.join("tallies.csv"), &io::tallies_csv(&record.tallies))?;
    log::info!("seed {}: {} steps written to {}", cfg.seed, record.rows.len(), dir.display());
    Ok(())
}

/// Runs one simulation per seed (in parallel), analyses each, and writes the
/// ensemble summary and manifest into `out`.
pub fn run_command(cfg: &SimConfig, seeds: &[u64], out: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(Error::Input("at least one seed is required".into()));
    }
    create_dir(out)?;

    let summaries: Vec<(u64, RunSummary)> = seeds
        .par_iter()
        .map(|&seed| {
            let dir = out.join(seed_dir_name(seed));
            let seeded = SimConfig { seed, ..cfg.clone() };
            run_single(&seeded, &dir)?;
            Ok((seed, analyze_command(&dir)?))
        })
        .collect::<Result<_>>()?;

    let ensemble = aggregate(seeds, &summaries);
    io::write_file(&out.join(SUMMARY_FILE), &to_json(&ensemble)?)?;

    let mut checksums = BTreeMap::new();
    for &seed in seeds {
        let name = seed_dir_name(seed);
        for file in ["prices.csv", "avalanches.csv", "books.csv", "agents.csv", "tallies.csv", "pdf.csv", SUMMARY_FILE] {
            let rel = format!("{name}/{file}");
            checksums.insert(rel.clone(), sha256_file(&out.join(&rel))?);
        }
    }
    checksums.insert(SUMMARY_FILE.to_string(), sha256_file(&out.join(SUMMARY_FILE))?);

    let manifest = RunManifest {
        config: cfg.clone(),
        seeds: seeds.to_vec(),
        out_dir: out.to_path_buf(),
        checksums,
    };
    io::write_file(&out.join(MANIFEST_FILE), &to_json(&manifest)?)?;
    Ok(manifest)
}

/// Re-runs a manifest into `out` and reports artifacts whose checksum differs.
pub fn replay_manifest(manifest: &RunManifest, out: &Path) -> Result<Vec<String>> {
    let fresh = run_command(&manifest.config, &manifest.seeds, out)?;
    Ok(manifest
        .checksums
        .iter()
        .filter(|(k, v)| fresh.checksums.get(*k) != Some(*v))
        .map(|(k, _)| k.clone())
        .collect())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn aggregate(seeds: &[u64], summaries: &[(u64, RunSummary)]) -> EnsembleSummary {
    let mut series = BTreeMap::new();
    for key in ["p1", "p2", "p12"] {
        let qs: Vec<f64> = summaries
            .iter()
            .filter_map(|(_, s)| s.series.get(key)?.fit.map(|f| f.q))
            .collect();
        let ks: Vec<f64> = summaries
            .iter()
            .filter_map(|(_, s)| s.series.get(key).map(|x| x.excess_kurtosis))
            .collect();
        series.insert(
            key.to_string(),
            EnsembleSeries {
                median_q: median(&qs),
                median_excess_kurtosis: median(&ks).unwrap_or(f64::NAN),
            },
        );
    }
    let mut pooled = Tallies::default();
    for (_, s) in summaries {
        if let Some(t) = &s.tallies {
            for (acc, g) in [
                (&mut pooled.fundamentalists, &t.fundamentalists),
                (&mut pooled.chartists, &t.chartists),
            ] {
                acc.buy += g.buy;
                acc.sell += g.sell;
                acc.slots += g.slots;
            }
        }
    }
    let spans: Vec<f64> = summaries
        .iter()
        .filter_map(|(_, s)| s.avalanches.as_ref().map(|a| a.decade_span))
        .collect();
    EnsembleSummary {
        seeds: seeds.to_vec(),
        series,
        fractions: BuySellFractions::from(&pooled),
        median_decade_span: median(&spans).unwrap_or(0.0),
        runs: summaries
            .iter()
            .map(|(seed, s)| (seed_dir_name(*seed), s.clone()))
            .collect(),
    }
}

/// Returns, PDF and q-Gaussian fit of one price series.
pub fn analyze_series(prices: &[f64], bin_width: f64) -> Result<(SeriesSummary, crate::stats::Pdf)> {
    let returns = normalized_returns(prices)?;
    let pdf = empirical_pdf(&returns.normalized, bin_width)?;
    let (fit, fit_error) = match fit_pdf(&pdf) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = SeriesSummary {
        n_returns: returns.raw.len(),
        r_av: returns.r_av,
        r_stdev: returns.r_stdev,
        excess_kurtosis: excess_kurtosis(&returns.normalized)?,
        fit,
        fit_error,
    };
    Ok((summary, pdf))
}

/// Analyses `dir/prices.csv` (plus avalanche and tally files when present),
/// writing `pdf.csv` and `summary.json` next to it.
pub fn analyze_command(dir: &Path) -> Result<RunSummary> {
    let prices_path = dir.join("prices.csv");
    if !prices_path.exists() {
        return Err(Error::MissingInput(prices_path));
    }
    let table = io::read_prices(&prices_path)?;
    let config_path = dir.join(CONFIG_FILE);
    let average = if config_path.exists() {
        let cfg = SimConfig::load(&config_path)?;
        weighted_average_price(&table.p1, &table.p2, cfg.q1_0, cfg.q2_0)?
    } else {
        table.p_avg.clone()
    };

    let bin_width = DEFAULT_BIN_WIDTH;
    let mut series = BTreeMap::new();
    let mut pdf_out = String::from(io::PDF_HEADER);
    pdf_out.push('\n');
    let gauss = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    for (key, prices) in [("p1", &table.p1), ("p2", &table.p2), ("p12", &average)] {
        let (summary, pdf) = analyze_series(prices, bin_width)?;
        for (&x, &d) in pdf.centers.iter().zip(&pdf.densities) {
            let model = summary
                .fit
                .map(|f| fmt_sig(qgaussian(x, f.amp, f.q, f.beta_fit)))
                .unwrap_or_default();
            let _ = writeln!(pdf_out, "{key},{},{},{},{model}", fmt_sig(x), fmt_sig(d), fmt_sig(gauss(x)));
        }
        series.insert(key.to_string(), summary);
    }
    io::write_file(&dir.join("pdf.csv"), &pdf_out)?;

    let avalanche_path = dir.join("avalanches.csv");
    let avalanches = if avalanche_path.exists() {
        let sizes = io::read_avalanches(&avalanche_path)?;
        if sizes.is_empty() {
            None
        } else {
            Some(avalanche_statistics(&sizes)?)
        }
    } else {
        None
    };
    let tallies_path = dir.join("tallies.csv");
    let tallies = if tallies_path.exists() {
        Some(io::read_tallies(&tallies_path)?)
    } else {
        None
    };

    let summary = RunSummary {
        bin_width,
        series,
        avalanches,
        fractions: tallies.as_ref().map(BuySellFractions::from),
        tallies,
    };
    io::write_file(&dir.join(SUMMARY_FILE), &to_json(&summary)?)?;
    Ok(summary)
}

/// Runs the ensemble once per value of `param`, each into `out/<param>=<value>`.
pub fn sweep_command(
    cfg: &SimConfig,
    param: &str,
    values: &[String],
    seeds: &[u64],
    out: &Path,
) -> Result<BTreeMap<String, EnsembleSummary>> {
    if param == "seed" {
        return Err(Error::config(param, "sweep seeds with --seed instead"));
    }
    if values.is_empty() {
        return Err(Error::Input("no sweep values given".into()));
    }
    let mut results = BTreeMap::new();
    for value in values {
        let mut point = cfg.clone();
        point.set(param, value)?;
        point.validate()?;
        let dir = out.join(format!("{param}={value}"));
        run_command(&point, seeds, &dir)?;
        let text = fs::read_to_string(dir.join(SUMMARY_FILE)).map_err(|e| Error::io(&dir, e))?;
        results.insert(format!("{param}={value}"), serde_json::from_str(&text)?);
    }
    let digest: BTreeMap<&String, serde_json::Value> = results
        .iter()
        .map(|(k, s): (&String, &EnsembleSummary)| {
            (
                k,
                serde_json::json!({ "series": s.series, "fractions": s.fractions, "median_decade_span": s.median_decade_span }),
            )
        })
        .collect();
    io::write_file(&out.join("sweep.json"), &to_json(&digest)?)?;
    Ok(results)
}
