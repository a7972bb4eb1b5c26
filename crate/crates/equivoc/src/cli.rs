//! Command-line surface: argument parsing, curve sweeps and report output.
//!
//! Each subcommand is turned into a [`SweepConfig`], so a batch file for the
//! `sweep` subcommand is simply a list of the same configs in JSON. Grid
//! points are evaluated on a rayon pool and written in grid order, which keeps
//! output byte-identical across runs and thread counts.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{critical_rate, equiv_limit, exponent, Sign};
use crate::dist::{JointSource, S_EPS};
use crate::error::{domain, Error, Result};
use crate::hashing::{all_functions_family, toeplitz_family, HashFamily};
use crate::measures::{
    arimoto_mi, cond_renyi_h, cond_renyi_h_up, security_measure, sibson_mi, Form,
};
use crate::oneshot::{verify, write_reports_csv, Summary};
use crate::second_order::{case_b_closed_form, case_c_bounds, GaussianSpec};
use crate::spectrum::{tail_table, write_tail_csv};

const GRID_LIMIT: usize = 10_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Measures,
    Equivocation,
    Exponents,
    SecondOrder,
    OneShotVerify,
    Spectrum,
}

/// One fully specified run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub command: CommandKind,
    pub source: PathBuf,
    #[serde(default)]
    pub s: Vec<f64>,
    #[serde(default)]
    pub r_grid: Option<String>,
    #[serde(default)]
    pub l_grid: Option<String>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub c: Vec<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strict: bool,
    /// Optional path for the JSON export of the hash family used.
    #[serde(default)]
    pub export_family: Option<PathBuf>,
}

#[derive(Parser, Debug)]
#[command(name = "equivoc", version, about = "Rényi equivocation measures, limits and one-shot bound checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Source matrix, JSON {"p": [[...]]} or CSV (rows = A, columns = E).
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long, value_enum, default_value_t = Units::Nats)]
    pub units: Units,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for grid evaluation (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Treat reported (non-asserted) bound failures as errors.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Conditional entropies, security measures and mutual informations per s.
    Measures {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0.5,1")]
        s: Vec<f64>,
    },
    /// Equivocation limits over a rate grid.
    Equivocation {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.5")]
        s: Vec<f64>,
        /// LO:HI:STEP or a comma list, nats/symbol.
        #[arg(long, allow_hyphen_values = true)]
        r_grid: String,
    },
    /// Exponents of the equivocation over a rate grid.
    Exponents {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.5")]
        s: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        r_grid: String,
    },
    /// Second-order limits and bounds over an L grid.
    SecondOrder {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.5")]
        s: Vec<f64>,
        /// LO:HI:STEP or a comma list, nats/√symbol.
        #[arg(long, allow_hyphen_values = true)]
        l_grid: String,
    },
    /// Checks every one-shot bound against exact values for a hash family.
    OneShotVerify {
        #[command(flatten)]
        common: Common,
        /// all:M, toeplitz:IN:OUT:K (K = 0 enumerates the full family) or file:PATH.
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.25,0.5,0.75,1")]
        s: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1.01,1.5,3")]
        c: Vec<f64>,
        /// Collision parameter ε; defaults to max(1, certified ε).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        export_family: Option<PathBuf>,
    },
    /// Exact tails of the entropy density against the Chernoff bound.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "25,50,100,200")]
        n: Vec<usize>,
        #[arg(long, allow_hyphen_values = true)]
        r_grid: String,
    },
    /// Runs a batch of configurations from a JSON file.
    Sweep {
        /// JSON list of run configurations, or {"runs": [...]}.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

impl Common {
    fn config(&self, command: CommandKind) -> SweepConfig {
        SweepConfig {
            command,
            source: self.source.clone(),
            s: Vec::new(),
            r_grid: None,
            l_grid: None,
            n: Vec::new(),
            family: None,
            c: Vec::new(),
            epsilon: None,
            units: self.units,
            out: self.out.clone(),
            format: self.format,
            seed: self.seed,
            strict: self.strict,
            export_family: None,
        }
    }
}

/// Turns parsed arguments into run configurations plus a thread count.
pub fn configs_from_cli(cli: Cli) -> Result<(Vec<SweepConfig>, usize)> {
    Ok(match cli.command {
        Command::Measures { common, s } => {
            (vec![SweepConfig { s, ..common.config(CommandKind::Measures) }], common.jobs)
        }
        Command::Equivocation { common, s, r_grid } => (
            vec![SweepConfig { s, r_grid: Some(r_grid), ..common.config(CommandKind::Equivocation) }],
            common.jobs,
        ),
        Command::Exponents { common, s, r_grid } => (
            vec![SweepConfig { s, r_grid: Some(r_grid), ..common.config(CommandKind::Exponents) }],
            common.jobs,
        ),
        Command::SecondOrder { common, s, l_grid } => (
            vec![SweepConfig { s, l_grid: Some(l_grid), ..common.config(CommandKind::SecondOrder) }],
            common.jobs,
        ),
        Command::OneShotVerify { common, family, s, c, epsilon, export_family } => (
            vec![SweepConfig {
                s,
                c,
                epsilon,
                family: Some(family),
                export_family,
                ..common.config(CommandKind::OneShotVerify)
            }],
            common.jobs,
        ),
        Command::Spectrum { common, n, r_grid } => (
            vec![SweepConfig { n, r_grid: Some(r_grid), ..common.config(CommandKind::Spectrum) }],
            common.jobs,
        ),
        Command::Sweep { config, jobs } => (load_batch(&config)?, jobs),
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Batch {
    List(Vec<SweepConfig>),
    Wrapped { runs: Vec<SweepConfig> },
}

pub fn load_batch(path: &Path) -> Result<Vec<SweepConfig>> {
    let text = std::fs::read_to_string(path)?;
    let batch: Batch = serde_json::from_str(&text)?;
    let runs = match batch {
        Batch::List(r) => r,
        Batch::Wrapped { runs } => runs,
    };
    if runs.is_empty() {
        return Err(domain("batch contains no runs"));
    }
    Ok(runs)
}

/// Parses LO:HI:STEP (inclusive, points lo + i·step) or a comma list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Parse(format!("grid '{spec}': {why}"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.len() {
        1 => spec.split(',').map(num).collect::<Result<Vec<f64>>>()?,
        3 => {
            let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || !(hi >= lo) {
                return Err(bad("need HI ≥ LO and STEP > 0"));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            if count > GRID_LIMIT {
                return Err(bad("too many points"));
            }
            (0..count).map(|i| lo + step * i as f64).collect()
        }
        _ => return Err(bad("expected LO:HI:STEP or a comma list")),
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(bad("empty or non-finite"));
    }
    Ok(grid)
}

/// all:M, toeplitz:IN:OUT:K or file:PATH.
pub fn parse_family(spec: &str, a_size: usize, seed: u64) -> Result<HashFamily> {
    let bad = |why: &str| Error::Parse(format!("family '{spec}': {why}"));
    let parts: Vec<&str> = spec.splitn(2, ':').collect();
    let int = |x: &str| x.trim().parse::<usize>().map_err(|_| bad("not an integer"));
    match parts.as_slice() {
        ["all", m] => all_functions_family(a_size, int(m)?),
        ["toeplitz", rest] => {
            let nums: Vec<usize> = rest.split(':').map(int).collect::<Result<_>>()?;
            let [inb, outb, k] = nums[..] else {
                return Err(bad("expected toeplitz:IN:OUT:K"));
            };
            let sample = if k == 0 { None } else { Some(k) };
            toeplitz_family(inb as u32, outb as u32, seed, sample)
        }
        ["file", path] => HashFamily::from_path(path),
        _ => Err(bad("expected all:M, toeplitz:IN:OUT:K or file:PATH")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Unit {
    Plain,
    Nats,
}

/// Rows of optional values; `None` marks a point outside a formula's domain.
struct Table {
    columns: Vec<(&'static str, Unit)>,
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    fn convert(&mut self, units: Units) {
        if units == Units::Nats {
            return;
        }
        let ln2 = std::f64::consts::LN_2;
        for row in &mut self.rows {
            for (v, (_, u)) in row.iter_mut().zip(&self.columns) {
                if *u == Unit::Nats {
                    *v = v.map(|x| x / ln2);
                }
            }
        }
    }

    fn write<W: Write>(&self, format: Format, units: Units, out: W) -> Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(self.columns.iter().map(|(n, _)| *n))?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()))?;
                }
                w.flush()?;
            }
            Format::Json => {
                let doc = serde_json::json!({
                    "units": units,
                    "columns": self.columns.iter().map(|(n, _)| *n).collect::<Vec<_>>(),
                    "rows": self.rows,
                });
                let mut out = out;
                serde_json::to_writer_pretty(&mut out, &doc)?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// What a run found, for the process exit status.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOutcome {
    pub asserted_failures: usize,
    pub reported: usize,
}

impl RunOutcome {
    pub fn exit_code(&self, strict: bool) -> u8 {
        if self.asserted_failures > 0 || (strict && self.reported > 0) {
            2
        } else {
            0
        }
    }
}

fn need_grid(g: &Option<String>, name: &str) -> Result<Vec<f64>> {
    parse_grid(g.as_deref().ok_or_else(|| domain(format!("{name} is required")))?)
}

fn need_s(s: &[f64]) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(domain("at least one s value is required"));
    }
    Ok(s.to_vec())
}

fn pairs(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn measures_table(src: &JointSource, s: &[f64]) -> Table {
    use Unit::*;
    let rows = s
        .par_iter()
        .map(|&s| {
            vec![
                Some(s),
                cond_renyi_h(src, s, None).ok(),
                cond_renyi_h_up(src, s).ok(),
                security_measure(src, s, Form::Std).ok(),
                security_measure(src, s, Form::Up).ok(),
                sibson_mi(src, s).ok(),
                arimoto_mi(src, s).ok(),
                critical_rate(src, s, Form::Std).ok(),
                critical_rate(src, s, Form::Up).ok(),
            ]
        })
        .collect();
    Table {
        columns: vec![
            ("s", Plain),
            ("h", Nats),
            ("h_up", Nats),
            ("c", Nats),
            ("c_up", Nats),
            ("sibson_mi", Nats),
            ("arimoto_mi", Nats),
            ("critical_rate", Nats),
            ("critical_rate_up", Nats),
        ],
        rows,
    }
}

fn equivocation_table(src: &JointSource, s: &[f64], r: &[f64]) -> Table {
    use Unit::*;
    let rows = pairs(s, r)
        .par_iter()
        .map(|&(s, r)| {
            let f = |sign, form| equiv_limit(src, s, r, sign, form).ok();
            vec![
                Some(s),
                Some(r),
                f(Sign::Plus, Form::Std),
                f(Sign::Plus, Form::Up),
                f(Sign::Minus, Form::Std),
                f(Sign::Minus, Form::Up),
            ]
        })
        .collect();
    Table {
        columns: vec![
            ("s", Plain),
            ("r", Nats),
            ("plus_std", Nats),
            ("plus_up", Nats),
            ("minus_std", Nats),
            ("minus_up", Nats),
        ],
        rows,
    }
}

fn exponents_table(src: &JointSource, s: &[f64], r: &[f64]) -> Table {
    use Unit::*;
    let rows = pairs(s, r)
        .par_iter()
        .map(|&(s, r)| {
            let f = |sign, form| exponent(src, s, r, sign, form).ok().map(|e| e.value);
            vec![
                Some(s),
                Some(r),
                f(Sign::Plus, Form::Std),
                f(Sign::Plus, Form::Up),
                f(Sign::Minus, Form::Std),
                f(Sign::Minus, Form::Up),
            ]
        })
        .collect();
    Table {
        columns: vec![
            ("s", Plain),
            ("r", Nats),
            ("plus_std", Nats),
            ("plus_up", Nats),
            ("minus_std", Nats),
            ("minus_up", Nats),
        ],
        rows,
    }
}

fn second_order_table(src: &JointSource, s: &[f64], l: &[f64]) -> Table {
    use Unit::*;
    let g = GaussianSpec::of(src);
    let rows = pairs(s, l)
        .par_iter()
        .map(|&(s, l)| {
            let shannon = s.abs() < S_EPS;
            let case_a = (!shannon && s > 0.0 && s <= 1.0).then(|| if l >= 0.0 { l } else { -s * l });
            let case_b = shannon.then(|| case_b_closed_form(l, g.v));
            let cs = case_c_bounds(s, l, &g, Form::Std).ok();
            let cu = case_c_bounds(s, l, &g, Form::Up).ok();
            vec![
                Some(s),
                Some(l),
                case_a,
                case_b,
                cs.map(|b| b.lower),
                cs.map(|b| b.upper),
                cu.map(|b| b.lower),
                cu.map(|b| b.upper),
            ]
        })
        .collect();
    Table {
        columns: vec![
            ("s", Plain),
            ("l", Nats),
            ("case_a", Nats),
            ("case_b", Nats),
            ("c_std_lower", Nats),
            ("c_std_upper", Nats),
            ("c_up_lower", Nats),
            ("c_up_upper", Nats),
        ],
        rows,
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Executes one configuration and writes its output.
pub fn run(config: &SweepConfig) -> Result<RunOutcome> {
    let src = JointSource::from_path(&config.source)?;
    let mut outcome = RunOutcome::default();
    match config.command {
        CommandKind::Measures => {
            let mut t = measures_table(&src, &need_s(&config.s)?);
            t.convert(config.units);
            t.write(config.format, config.units, open_out(&config.out)?)?;
        }
        CommandKind::Equivocation => {
            let r = need_grid(&config.r_grid, "r_grid")?;
            let mut t = equivocation_table(&src, &need_s(&config.s)?, &r);
            t.convert(config.units);
            t.write(config.format, config.units, open_out(&config.out)?)?;
        }
        CommandKind::Exponents => {
            let r = need_grid(&config.r_grid, "r_grid")?;
            let mut t = exponents_table(&src, &need_s(&config.s)?, &r);
            t.convert(config.units);
            t.write(config.format, config.units, open_out(&config.out)?)?;
        }
        CommandKind::SecondOrder => {
            let l = need_grid(&config.l_grid, "l_grid")?;
            let mut t = second_order_table(&src, &need_s(&config.s)?, &l);
            t.convert(config.units);
            t.write(config.format, config.units, open_out(&config.out)?)?;
        }
        CommandKind::Spectrum => {
            let r = need_grid(&config.r_grid, "r_grid")?;
            if config.n.is_empty() {
                return Err(domain("at least one n is required"));
            }
            let mut rows = tail_table(&src, &config.n, &r)?;
            if config.units == Units::Bits {
                rows.iter_mut().for_each(|x| x.r /= std::f64::consts::LN_2);
            }
            let mut out = open_out(&config.out)?;
            match config.format {
                Format::Csv => write_tail_csv(&rows, out)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut out, &serde_json::json!({ "units": config.units, "rows": rows }))?;
                    writeln!(out)?;
                }
            }
        }
        CommandKind::OneShotVerify => {
            let spec = config.family.as_deref().ok_or_else(|| domain("family is required"))?;
            let family = parse_family(spec, src.a_size(), config.seed)?;
            if let Some(p) = &config.export_family {
                std::fs::write(p, family.to_json_string())?;
            }
            let certified = family.certified_epsilon().ok_or(Error::UncertifiedFamily)?;
            let eps = config.epsilon.unwrap_or(certified.max(1.0));
            let c = if config.c.is_empty() { vec![1.01, 1.5, 3.0] } else { config.c.clone() };
            let reports = verify(&src, &family, &config.s, &c, eps)?;
            let summary = Summary::of(&reports);
            outcome.asserted_failures = summary.asserted_failures();
            outcome.reported = summary.reported();
            for v in &summary.violations {
                log::warn!(
                    "{} {:?}: s={} c={:?} member={:?} lhs={} rhs={}",
                    v.kind.name(),
                    v.status,
                    v.s,
                    v.c,
                    v.member,
                    v.lhs,
                    v.rhs
                );
            }
            let mut out = open_out(&config.out)?;
            match config.format {
                Format::Csv => write_reports_csv(&reports, out)?,
                Format::Json => {
                    let doc = serde_json::json!({ "summary": summary, "reports": reports });
                    serde_json::to_writer_pretty(&mut out, &doc)?;
                    writeln!(out)?;
                }
            }
        }
    }
    Ok(outcome)
}

/// Runs configurations in order on a pool of `jobs` threads (0 = default)
/// and returns the process exit status.
pub fn run_all(configs: &[SweepConfig], jobs: usize) -> u8 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    pool.install(|| {
        let mut code = 0;
        for cfg in configs {
            match run(cfg) {
                Ok(o) => code = code.max(o.exit_code(cfg.strict)),
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            }
        }
        code
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("0:1.4:0.01").unwrap();
        assert_eq!(g.len(), 141);
        assert!((g[140] - 1.4).abs() < 1e-12);
        assert_eq!(parse_grid("0.1,0.5").unwrap(), vec![0.1, 0.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a:b").is_err());
    }

    #[test]
    fn families() {
        assert_eq!(parse_family("all:2", 2, 0).unwrap().len(), 4);
        assert_eq!(parse_family("toeplitz:2:1:0", 4, 0).unwrap().len(), 4);
        assert_eq!(parse_family("toeplitz:3:1:5", 8, 0).unwrap().certified_epsilon(), None);
        assert!(parse_family("bogus:2", 2, 0).is_err());
    }

    #[test]
    fn exit_codes() {
        let o = RunOutcome { asserted_failures: 0, reported: 3 };
        assert_eq!(o.exit_code(false), 0);
        assert_eq!(o.exit_code(true), 2);
        assert_eq!(RunOutcome { asserted_failures: 1, reported: 0 }.exit_code(false), 2);
    }

    #[test]
    fn batch_shapes() {
        let one = r#"[{"command": "measures", "source": "x.json", "s": [0.5]}]"#;
        let b: Batch = serde_json::from_str(one).unwrap();
        assert!(matches!(b, Batch::List(ref v) if v.len() == 1));
        let wrapped = r#"{"runs": [{"command": "second-order", "source": "x.json", "l_grid": "0:1:0.5"}]}"#;
        let b: Batch = serde_json::from_str(wrapped).unwrap();
        assert!(matches!(b, Batch::Wrapped { ref runs } if runs[0].command == CommandKind::SecondOrder));
    }
}
