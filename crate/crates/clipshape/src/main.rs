//! Batch front end: sweep orchestration, CSV/JSON/SVG emission.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use clipshape::clipopt::{self, KGrid};
use clipshape::constellation::{self, Constellation};
use clipshape::error::{Error, Result};
use clipshape::infometrics::{awgn_capacity, Method, MetricConfig};
use clipshape::linkmodel::{self, LinkScenario};
use clipshape::report::{self, Series};
use clipshape::shaping;
use clipshape::waveform::{self, WaveformSpec};

#[derive(Parser, Debug)]
#[command(name = "clipshape", version, about = "Shaped-QAM clipping analysis sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON config file (flat keys; missing keys take defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV/JSON/SVG artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    k_min: Option<f64>,

    #[arg(long, global = true)]
    k_max: Option<f64>,

    #[arg(long, global = true)]
    k_step: Option<f64>,

    /// PMF family for single-family commands.
    #[arg(long, global = true, value_enum)]
    pmf: Option<PmfKind>,

    /// Target entropy in bits/symbol for the shaped families.
    #[arg(long, global = true)]
    entropy: Option<f64>,

    #[arg(long, global = true)]
    dac_bits: Option<u32>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "CLIPSHAPE_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Cmd {
    /// AIR vs true SNR for the standard PMF families.
    Air,
    /// Back-to-back digital SNR vs clipping ratio.
    B2bSweep,
    /// PAPR vs clipping ratio.
    PaprSweep,
    /// Transmit power vs clipping ratio.
    PowerSweep,
    /// Link budget vs clipping ratio, plus NGMI vs loss at the optimum.
    BudgetSweep,
    /// Both clipping optimizers with a JSON summary.
    Optimize,
    /// PAPR feasible-region table between the PPC and MB bounds.
    Region,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Air => "air",
            Cmd::B2bSweep => "b2b-sweep",
            Cmd::PaprSweep => "papr-sweep",
            Cmd::PowerSweep => "power-sweep",
            Cmd::BudgetSweep => "budget-sweep",
            Cmd::Optimize => "optimize",
            Cmd::Region => "region",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PmfKind {
    /// Uniform 64QAM.
    Ud,
    /// Maxwell-Boltzmann 64QAM at the target entropy.
    Mb,
    /// BA-optimized 64QAM (implicit peak constraint), entropy-matched.
    Ppc,
    /// BA-optimized 60QAM at equal peak, entropy-matched.
    Ppc60,
}

/// Flat run configuration; every field has a default and can come from the
/// JSON file or a CLI override.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    // waveform
    sps: usize,
    alpha: f64,
    span_symbols: usize,
    dac_bits: u32,
    clip_ratio: f64,
    num_symbols: usize,
    seed: u64,
    // link scenario
    peak_power_dbm: f64,
    noise_floor_dbm: f64,
    loss_db_min: f64,
    loss_db_max: f64,
    fec_threshold: f64,
    m_bits: usize,
    // metrics
    method: Method,
    quadrature_order: usize,
    mc_symbols: usize,
    // clipping grid
    k_min: f64,
    k_max: f64,
    k_step: f64,
    // family selection
    pmf: PmfKind,
    entropy: f64,
    // sweep axes
    snr_db_min: f64,
    snr_db_max: f64,
    snr_db_step: f64,
    loss_db_step: f64,
}

impl Default for Config {
    fn default() -> Self {
        let w = WaveformSpec::default();
        let s = LinkScenario::default();
        let m = MetricConfig::default();
        let g = KGrid::default();
        Config {
            sps: w.sps,
            alpha: w.alpha,
            span_symbols: w.span_symbols,
            dac_bits: w.dac_bits,
            clip_ratio: w.clip_ratio,
            num_symbols: w.num_symbols,
            seed: w.seed,
            peak_power_dbm: s.peak_power_dbm,
            noise_floor_dbm: s.noise_floor_dbm,
            loss_db_min: s.loss_db_min,
            loss_db_max: s.loss_db_max,
            fec_threshold: s.fec_threshold,
            m_bits: s.m_bits,
            method: m.method,
            quadrature_order: m.quadrature_order,
            mc_symbols: m.mc_symbols,
            k_min: g.k_min,
            k_max: g.k_max,
            k_step: g.k_step,
            pmf: PmfKind::Mb,
            entropy: 4.3,
            snr_db_min: 6.0,
            snr_db_max: 18.0,
            snr_db_step: 1.0,
            loss_db_step: 1.0,
        }
    }
}

impl Config {
    fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let body = std::fs::read_to_string(path)?;
        if body.trim().is_empty() {
            return Ok(Config::default());
        }
        serde_json::from_str(&body).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn apply_cli(&mut self, cli: &Cli) {
        if let Some(v) = cli.seed {
            self.seed = v;
        }
        if let Some(v) = cli.k_min {
            self.k_min = v;
        }
        if let Some(v) = cli.k_max {
            self.k_max = v;
        }
        if let Some(v) = cli.k_step {
            self.k_step = v;
        }
        if let Some(v) = cli.pmf {
            self.pmf = v;
        }
        if let Some(v) = cli.entropy {
            self.entropy = v;
        }
        if let Some(v) = cli.dac_bits {
            self.dac_bits = v;
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |field: &str, detail: String| Err(Error::Config(format!("{field}: {detail}")));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha", format!("must be in (0, 1], got {}", self.alpha));
        }
        if self.sps < 2 {
            return bad("sps", format!("must be >= 2, got {}", self.sps));
        }
        if self.span_symbols == 0 {
            return bad("span_symbols", "must be >= 1".into());
        }
        if self.dac_bits < 4 {
            return bad("dac_bits", format!("must be >= 4, got {}", self.dac_bits));
        }
        if !(self.clip_ratio > 0.0) {
            return bad("clip_ratio", "must be > 0".into());
        }
        if self.num_symbols == 0 {
            return bad("num_symbols", "must be >= 1".into());
        }
        if !(self.fec_threshold > 0.0 && self.fec_threshold < 1.0) {
            return bad("fec_threshold", format!("must be in (0, 1), got {}", self.fec_threshold));
        }
        if !(self.loss_db_max > self.loss_db_min) {
            return bad("loss_db_max", "must exceed loss_db_min".into());
        }
        if self.m_bits == 0 {
            return bad("m_bits", "must be >= 1".into());
        }
        if self.quadrature_order < 8 {
            return bad("quadrature_order", "must be >= 8".into());
        }
        if self.method == Method::MonteCarlo && self.mc_symbols < 10_000 {
            return bad("mc_symbols", "must be >= 10000".into());
        }
        if !(self.k_min > 0.0 && self.k_step > 0.0 && self.k_max >= self.k_min) {
            return bad("k_min", "need 0 < k_min <= k_max and k_step > 0".into());
        }
        if !(self.entropy > 2.0 && self.entropy <= 6.0) {
            return bad("entropy", format!("must be in (2, 6] bits, got {}", self.entropy));
        }
        if !(self.snr_db_step > 0.0 && self.snr_db_max >= self.snr_db_min) {
            return bad("snr_db_min", "need snr_db_min <= snr_db_max and snr_db_step > 0".into());
        }
        if !(self.loss_db_step > 0.0) {
            return bad("loss_db_step", "must be > 0".into());
        }
        Ok(())
    }

    fn waveform_spec(&self) -> WaveformSpec {
        WaveformSpec {
            sps: self.sps,
            alpha: self.alpha,
            span_symbols: self.span_symbols,
            dac_bits: self.dac_bits,
            clip_ratio: self.clip_ratio,
            num_symbols: self.num_symbols,
            seed: self.seed,
        }
    }

    fn scenario(&self) -> LinkScenario {
        LinkScenario {
            peak_power_dbm: self.peak_power_dbm,
            noise_floor_dbm: self.noise_floor_dbm,
            loss_db_min: self.loss_db_min,
            loss_db_max: self.loss_db_max,
            fec_threshold: self.fec_threshold,
            m_bits: self.m_bits,
        }
    }

    fn metric(&self) -> MetricConfig {
        MetricConfig {
            method: self.method,
            quadrature_order: self.quadrature_order,
            mc_symbols: self.mc_symbols,
            seed: self.seed,
        }
    }

    fn grid(&self) -> KGrid {
        KGrid { k_min: self.k_min, k_max: self.k_max, k_step: self.k_step }
    }

    fn snr_grid(&self) -> Vec<f64> {
        let mut v = Vec::new();
        let mut s = self.snr_db_min;
        while s <= self.snr_db_max + 1e-9 {
            v.push(s);
            s += self.snr_db_step;
        }
        v
    }

    /// Builds the selected PMF family.
    fn build_pmf(&self, kind: PmfKind) -> Result<(String, Constellation)> {
        let base = constellation::make_square_qam(64)?;
        match kind {
            PmfKind::Ud => Ok(("ud64".into(), base)),
            PmfKind::Mb => {
                let nu = constellation::fit_mb_to_entropy(&base, self.entropy)?;
                Ok((format!("mb{}", self.entropy), base.mb_pmf(nu)?))
            }
            PmfKind::Ppc => {
                let (c, _) = shaping::ba_pmf_for_entropy(&base, self.entropy, 0.02)?;
                Ok((format!("ppc{}", self.entropy), c))
            }
            PmfKind::Ppc60 => {
                let sixty = constellation::make_60qam(98f64.sqrt())?;
                let (c, _) = shaping::ba_pmf_for_entropy(&sixty, self.entropy, 0.02)?;
                Ok((format!("ppc60-{}", self.entropy), c))
            }
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoBudget { .. } => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    cfg.apply_cli(cli);
    cfg.validate()?;
    if let Some(t) = cli.threads {
        // Ignore the error when a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    std::fs::create_dir_all(&cli.out)?;
    write_manifest(&cli.out, cli.command, &cfg)?;
    match cli.command {
        Cmd::Air => cmd_air(&cli.out, &cfg),
        Cmd::B2bSweep => cmd_b2b(&cli.out, &cfg),
        Cmd::PaprSweep => cmd_papr(&cli.out, &cfg),
        Cmd::PowerSweep => cmd_power(&cli.out, &cfg),
        Cmd::BudgetSweep => cmd_budget(&cli.out, &cfg),
        Cmd::Optimize => cmd_optimize(&cli.out, &cfg),
        Cmd::Region => cmd_region(&cli.out, &cfg),
    }
}

fn write_manifest(out: &Path, cmd: Cmd, cfg: &Config) -> Result<()> {
    let manifest = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "config": cfg,
    });
    report::write_manifest(&out.join(report::MANIFEST_NAME), &manifest)
}

/// AIR vs true SNR for the five standard families plus the Gaussian capacity.
fn cmd_air(out: &Path, cfg: &Config) -> Result<()> {
    let metric = cfg.metric();
    let base = constellation::make_square_qam(64)?;
    let snrs = cfg.snr_grid();
    let nv_for = |c: &Constellation, snr_db: f64| c.average_power() / 10f64.powf(snr_db / 10.0);

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut series: Vec<Series> = Vec::new();
    let mut push_curve = |label: &str, pts: Vec<(f64, f64)>, rows: &mut Vec<Vec<String>>| {
        for &(x, y) in &pts {
            rows.push(vec![label.to_string(), report::cell(x), report::cell(y)]);
        }
        series.push(Series { label: label.to_string(), points: pts });
    };

    let cap: Vec<(f64, f64)> = snrs.iter().map(|&s| (s, awgn_capacity(s))).collect();
    push_curve("capacity", cap, &mut rows);

    for (label, c) in [
        ("ud64".to_string(), base.clone()),
        {
            let nu = constellation::fit_mb_to_entropy(&base, cfg.entropy)?;
            (format!("mb{}", cfg.entropy), base.mb_pmf(nu)?)
        },
    ] {
        let grid: Vec<f64> = snrs.iter().map(|&s| nv_for(&c, s)).collect();
        let pts = shaping::air_curve(&c, &grid, &metric)?
            .into_iter()
            .map(|p| (p.true_snr_db, p.mi_bits))
            .collect();
        push_curve(&label, pts, &mut rows);
    }

    for (label, c) in [
        ("ba-ppc64".to_string(), base.clone()),
        ("ba-60qam".to_string(), constellation::make_60qam(98f64.sqrt())?),
    ] {
        let grid: Vec<f64> = snrs.iter().map(|&s| nv_for(&c, s)).collect();
        let pts = shaping::ba_air_curve(&c, &grid, 1e-9, 5000, &metric)?
            .into_iter()
            .map(|p| (p.true_snr_db, p.mi_bits))
            .collect();
        push_curve(&label, pts, &mut rows);
    }

    report::write_csv(&out.join("air.csv"), &["family", "true_snr_db", "mi_bits"], &rows)?;
    let svg = report::render_line_chart("AIR vs true SNR", "true SNR (dB)", "AIR (bits/sym)", &series);
    report::write_svg(&out.join("air.svg"), &svg)
}

fn single_family_k_sweep(
    cfg: &Config,
    objective: impl Fn(&waveform::DigitalWaveform, f64) -> Result<f64> + Sync,
) -> Result<(String, Vec<(f64, f64)>)> {
    let (label, c) = cfg.build_pmf(cfg.pmf)?;
    let w = waveform::generate(&c, &cfg.waveform_spec())?;
    let pts = cfg
        .grid()
        .values()
        .into_iter()
        .map(|k| objective(&w, k).map(|v| (k, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok((label, pts))
}

fn write_k_sweep(
    out: &Path,
    file_stem: &str,
    col: &str,
    y_label: &str,
    label: &str,
    pts: Vec<(f64, f64)>,
) -> Result<()> {
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|&(k, v)| vec![report::cell(k), report::cell(v)])
        .collect();
    report::write_csv(&out.join(format!("{file_stem}.csv")), &["k", col], &rows)?;
    let series = [Series { label: label.to_string(), points: pts }];
    let svg = report::render_line_chart(file_stem, "clipping ratio k", y_label, &series);
    report::write_svg(&out.join(format!("{file_stem}.svg")), &svg)
}

fn cmd_b2b(out: &Path, cfg: &Config) -> Result<()> {
    let dac_bits = cfg.dac_bits;
    let (label, pts) =
        single_family_k_sweep(cfg, |w, k| waveform::digital_snr_of(w, k, dac_bits))?;
    write_k_sweep(out, "b2b", "digital_snr_db", "digital SNR (dB)", &label, pts)
}

fn cmd_papr(out: &Path, cfg: &Config) -> Result<()> {
    let (label, pts) =
        single_family_k_sweep(cfg, |w, k| waveform::papr(&waveform::clip(w, k)?))?;
    write_k_sweep(out, "papr", "papr_db", "PAPR (dB)", &label, pts)
}

fn cmd_power(out: &Path, cfg: &Config) -> Result<()> {
    let scen = cfg.scenario();
    let (label, pts) = single_family_k_sweep(cfg, |w, k| {
        linkmodel::tx_power_dbm(&waveform::clip(w, k)?, &scen)
    })?;
    write_k_sweep(out, "power", "tx_power_dbm", "Tx power (dBm)", &label, pts)
}

fn cmd_budget(out: &Path, cfg: &Config) -> Result<()> {
    let (label, c) = cfg.build_pmf(cfg.pmf)?;
    let scen = cfg.scenario();
    let metric = cfg.metric();
    let r = clipopt::optimize_e2e(&c, &cfg.waveform_spec(), &scen, &cfg.grid(), &metric)?;

    let rows: Vec<Vec<String>> = r
        .curve
        .iter()
        .map(|p| vec![report::cell(p.k), report::cell_opt(p.objective_db)])
        .collect();
    report::write_csv(&out.join("budget.csv"), &["k", "budget_db"], &rows)?;
    let series = [Series {
        label: label.clone(),
        points: r
            .curve
            .iter()
            .filter_map(|p| p.objective_db.map(|b| (p.k, b)))
            .collect(),
    }];
    let svg =
        report::render_line_chart("link budget vs k", "clipping ratio k", "budget (dB)", &series);
    report::write_svg(&out.join("budget.svg"), &svg)?;

    // NGMI vs loss at the optimal k.
    let w = waveform::generate(&c, &cfg.waveform_spec())?;
    let clipped = waveform::clip(&w, r.k_star)?;
    let dig = waveform::digital_snr_of(&w, r.k_star, cfg.dac_bits)?;
    let tx = linkmodel::tx_power_dbm(&clipped, &scen)?;
    let mut losses = Vec::new();
    let mut l = scen.loss_db_min;
    while l <= scen.loss_db_max + 1e-9 {
        losses.push(l);
        l += cfg.loss_db_step;
    }
    let ngmis = linkmodel::ngmi_vs_loss(&c, dig, tx, &scen, &losses, &metric)?;
    let rows: Vec<Vec<String>> = losses
        .iter()
        .zip(&ngmis)
        .map(|(&l, &n)| vec![report::cell(r.k_star), report::cell(l), report::cell(n)])
        .collect();
    report::write_csv(&out.join("ngmi_vs_loss.csv"), &["k", "loss_db", "ngmi"], &rows)?;
    let series = [Series {
        label: format!("{label} @ k*={}", r.k_star),
        points: losses.iter().zip(&ngmis).map(|(&l, &n)| (l, n)).collect(),
    }];
    let svg = report::render_line_chart("NGMI vs link loss", "loss (dB)", "NGMI", &series);
    report::write_svg(&out.join("ngmi_vs_loss.svg"), &svg)
}

fn cmd_optimize(out: &Path, cfg: &Config) -> Result<()> {
    let (label, c) = cfg.build_pmf(cfg.pmf)?;
    let spec = cfg.waveform_spec();
    let grid = cfg.grid();
    let b2b = clipopt::optimize_b2b(&c, &spec, &grid)?;
    let e2e = clipopt::optimize_e2e(&c, &spec, &cfg.scenario(), &grid, &cfg.metric())?;

    for (stem, col, r) in [("b2b", "digital_snr_db", &b2b), ("budget", "budget_db", &e2e)] {
        let rows: Vec<Vec<String>> = r
            .curve
            .iter()
            .map(|p| vec![report::cell(p.k), report::cell_opt(p.objective_db)])
            .collect();
        report::write_csv(&out.join(format!("{stem}.csv")), &["k", col], &rows)?;
    }
    let summary = serde_json::json!({
        "pmf": label,
        "b2b": { "k_star": b2b.k_star, "digital_snr_db": b2b.objective_at_star },
        "e2e": { "k_star": e2e.k_star, "budget_db": e2e.objective_at_star },
        "curve": e2e.curve,
    });
    let mut body = serde_json::to_string_pretty(&summary)?;
    body.push('\n');
    std::fs::write(out.join("optimize.json"), body)?;
    Ok(())
}

fn cmd_region(out: &Path, cfg: &Config) -> Result<()> {
    let base = constellation::make_square_qam(64)?;
    let (ppc, _) = shaping::ba_pmf_for_entropy(&base, cfg.entropy, 0.02)?;
    let nu = constellation::fit_mb_to_entropy(&base, cfg.entropy)?;
    let mb = base.mb_pmf(nu)?;
    let family = vec![ppc, base, mb];
    let rows = clipopt::feasible_region(&family, &cfg.waveform_spec(), &cfg.grid())?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                report::cell(r.k),
                report::cell(r.papr_lower_db),
                report::cell(r.member_paprs_db[1]),
                report::cell(r.papr_upper_db),
            ]
        })
        .collect();
    report::write_csv(
        &out.join("region.csv"),
        &["k", "papr_ppc_db", "papr_ud_db", "papr_mb_db"],
        &csv_rows,
    )?;
    let mk = |label: &str, f: fn(&clipopt::RegionRow) -> f64| Series {
        label: label.to_string(),
        points: rows.iter().map(|r| (r.k, f(r))).collect(),
    };
    let series = [
        mk("ppc (lower)", |r| r.papr_lower_db),
        mk("ud64", |r| r.member_paprs_db[1]),
        mk("mb (upper)", |r| r.papr_upper_db),
    ];
    let svg = report::render_line_chart("PAPR region vs k", "clipping ratio k", "PAPR (dB)", &series);
    report::write_svg(&out.join("region.svg"), &svg)
}
