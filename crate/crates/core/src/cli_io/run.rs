use std::path::PathBuf;

use super::config::{Command, RunConfig};
use super::table::{format_value, grid_hash, write_tables, OutputTable};
use crate::error::Result;
use crate::experiments::{
    critical_locus, dos_comparison, lambda_scan, nm_scan, qsl_heatmap, size_scaling, QuenchSetup, ScanResult,
};
use crate::quench::{decompose_quench, decoherence_series, energy_moments, strength_and_a};
use crate::spectral::{level_curves, PhaseSpaceGrid};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

impl RunConfig {
    fn setup(&self) -> QuenchSetup {
        QuenchSetup {
            n: self.n,
            alpha: self.alpha,
            angles: self.angles,
            frame: self.frame,
            dt: self.dt.value(),
        }
    }
}

struct Header {
    lines: Vec<(String, String)>,
}

impl Header {
    fn new(cfg: &RunConfig) -> Self {
        let mut lines = vec![
            ("lmg-qsl".to_string(), VERSION.to_string()),
            ("command".to_string(), cfg.command.name().to_string()),
        ];
        lines.extend(cfg.entries().into_iter().map(|(k, v)| (k.to_string(), v)));
        Header { lines }
    }

    fn grid(&mut self, name: &str, values: &[f64]) {
        self.lines.push((format!("sha256 {name} grid"), grid_hash(values)));
        self.lines.push((format!("{name} points"), values.len().to_string()));
    }

    fn note(&mut self, key: &str, value: f64) {
        self.lines.push((key.to_string(), format_value(value)));
    }

    fn table(&self, name: &str, columns: &[&str]) -> OutputTable {
        let mut t = OutputTable::new(name, columns);
        t.metadata = self.lines.clone();
        t
    }
}

fn scan_table(header: &Header, name: &str, result: &ScanResult) -> OutputTable {
    let mut t = header.table(name, &["lambda", "tau_qsl", "tau_qsl_ratio", "gamma_inf", "nm", "dt"]);
    for (lambda, s) in result.grid.values.iter().zip(&result.samples) {
        t.push(vec![*lambda, s.tau_qsl, s.tau_qsl / s.tau_e, s.gamma_inf, s.nm, s.dt]);
    }
    t.meta("argmax lambda", format_value(result.argmax_location()));
    t.meta("max value", format_value(result.max_value()));
    t
}

/// Computes every table for `cfg` without touching the disk.
pub fn run(cfg: &RunConfig) -> Result<Vec<OutputTable>> {
    let mut header = Header::new(cfg);
    let tables = match cfg.command {
        Command::Spectrum => {
            let alphas = cfg.alpha_grid()?;
            header.grid("alpha", &alphas.values);
            let curves = level_curves(cfg.n, &alphas.values)?;
            let levels: Vec<String> = (0..curves.levels.len()).map(|k| format!("e_{k}")).collect();
            let curvs: Vec<String> = (0..curves.levels.len()).map(|k| format!("k_{k}")).collect();
            let mut cols = vec!["alpha"];
            cols.extend(levels.iter().map(String::as_str));
            let mut level_table = header.table("spectrum_levels", &cols);
            for (i, &a) in curves.alphas.iter().enumerate() {
                let mut row = vec![a];
                row.extend(curves.levels.iter().map(|l| l[i]));
                level_table.push(row);
            }
            let mut cols = vec!["alpha"];
            cols.extend(curvs.iter().map(String::as_str));
            let mut curv_table = header.table("spectrum_curvature", &cols);
            for (i, &a) in curves.curvature_alphas().iter().enumerate() {
                let mut row = vec![a];
                row.extend(curves.curvature.iter().map(|c| c[i]));
                curv_table.push(row);
            }
            vec![level_table, curv_table]
        }
        Command::Dos => {
            let grid = PhaseSpaceGrid {
                theta: cfg.phase_grid,
                phi: cfg.phase_grid,
            };
            let cmp = dos_comparison(cfg.n, cfg.alpha, cfg.bins, grid)?;
            header.grid("energy", &cmp.histogram.energies);
            header.note("l1 distance", cmp.l1_distance);
            let profile = |name: &str, p: &crate::spectral::DensityProfile| {
                let mut t = header.table(name, &["energy", "lower_edge", "upper_edge", "density", "normalized"]);
                let normalized = p.normalized();
                for (i, &e) in p.energies.iter().enumerate() {
                    t.push(vec![e, p.lower_edge(i), p.upper_edge(i), p.density[i], normalized[i]]);
                }
                t.meta("argmax energy", format_value(p.energies[p.argmax()]));
                t
            };
            vec![
                profile("dos_histogram", &cmp.histogram),
                profile("dos_classical", &cmp.classical),
            ]
        }
        Command::Quench => {
            let dec = decompose_quench(cfg.n, cfg.alpha, cfg.lambda, cfg.frame)?;
            let (mean, var) = energy_moments(&dec);
            header.note("mean energy", mean);
            header.note("energy variance", var);
            let strength = strength_and_a(&dec, cfg.bins)?;
            header.grid("energy", &strength.edges);
            let mut s_table = header.table("quench_strength", &["energy", "lower_edge", "upper_edge", "omega", "a"]);
            for (i, e) in strength.centers().into_iter().enumerate() {
                s_table.push(vec![e, strength.edges[i], strength.edges[i + 1], strength.omega[i], strength.a[i]]);
            }
            let series = decoherence_series(&dec, cfg.tau_e, cfg.dt.value())?;
            let mut m_table = header.table("quench_series", &["t", "re_m", "im_m", "abs_m", "rate"]);
            m_table.meta("dt", format_value(series.dt));
            for (i, m) in series.m.iter().enumerate() {
                m_table.push(vec![series.time(i), m.re, m.im, m.norm(), series.rate(i)]);
            }
            vec![s_table, m_table]
        }
        Command::QslScan | Command::NmScan => {
            let grid = cfg.lambda_grid()?;
            header.grid("lambda", &grid.values);
            let setup = cfg.setup();
            if cfg.command == Command::QslScan {
                vec![scan_table(&header, "qsl_scan", &lambda_scan(&grid, &setup, cfg.tau_e)?)]
            } else {
                vec![scan_table(&header, "nm_scan", &nm_scan(&grid, &setup, cfg.tau_e)?)]
            }
        }
        Command::Scaling => {
            let sizes = cfg.size_grid()?;
            header.grid("n", &sizes.iter().map(|&n| n as f64).collect::<Vec<_>>());
            let result = size_scaling(&sizes, &cfg.setup(), cfg.tau_e)?;
            let mut points = header.table("scaling", &["n", "tau_qsl", "tau_qsl_ratio", "one_minus_ratio"]);
            for (&n, s) in sizes.iter().zip(&result.samples) {
                let ratio = s.tau_qsl / s.tau_e;
                points.push(vec![n as f64, s.tau_qsl, ratio, 1.0 - ratio]);
            }
            let mut fit = header.table("scaling_fit", &["mu", "intercept", "rss", "count"]);
            fit.push(vec![result.fit.mu, result.fit.intercept, result.fit.rss, result.fit.count as f64]);
            vec![points, fit]
        }
        Command::CriticalLocus => {
            let alphas = cfg.alpha_grid()?;
            header.grid("alpha", &alphas.values);
            let l = cfg.lambdas;
            let locus = critical_locus(&alphas.values, &cfg.setup(), cfg.tau_e, (l.min, l.max, l.step))?;
            let mut t = header.table("critical_locus", &["alpha", "lambda_c_numeric", "lambda_c_analytic"]);
            for p in locus {
                t.push(vec![p.alpha, p.numeric, p.analytic]);
            }
            vec![t]
        }
        Command::Heatmap => {
            let taus = cfg.tau_grid()?;
            let lambdas = cfg.lambda_grid()?;
            header.grid("tau_e", &taus.values);
            header.grid("lambda", &lambdas.values);
            let map = qsl_heatmap(&taus, &lambdas, &cfg.setup())?;
            let mut cells = header.table("heatmap", &["tau_e", "lambda", "tau_qsl"]);
            for (i, &tau) in taus.values.iter().enumerate() {
                for (&lambda, &v) in lambdas.values.iter().zip(map.row(i)) {
                    cells.push(vec![tau, lambda, v]);
                }
            }
            let mut rows = header.table("heatmap_rows", &["tau_e", "lambda_argmax", "tau_qsl_max"]);
            for ((&tau, &j), max) in taus.values.iter().zip(&map.row_argmax).zip(map.row_max()) {
                rows.push(vec![tau, lambdas.values[j], max]);
            }
            vec![cells, rows]
        }
    };
    Ok(tables)
}

/// Computes and writes every table, returning the written paths.
pub fn execute(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let tables = run(cfg)?;
    write_tables(&tables, &cfg.output, cfg.format)
}
