use std::fs;

use rdd_core::cct::{self, BandwidthRule, DEFAULT_RATE};
use rdd_core::dgp::{
    check_assumption1, check_assumption2, AssumptionCertificate, Clause, ConditionalLaw, Dgp, Law,
    DEFAULT_GRID,
};
use rdd_core::montecarlo::{
    adversarial_demo, estimator_diagnostics, power_curve, size_profile, CellResult,
    ExperimentSpec, TestKind,
};
use sha2::{Digest, Sha256};

use crate::config::ConfigFile;
use crate::format::{Table, Value};
use crate::ingest::ingest_csv;
use crate::{CliError, Command, Report, RunArgs};

const DEFAULT_ALPHA: f64 = 0.05;
const DEFAULT_REPS: usize = 1000;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_SIZES: [usize; 3] = [500, 2000, 8000];
const DEFAULT_SCHEDULE: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn dispatch(command: &Command) -> Result<Report, CliError> {
    let args = command.args();
    if args.workers == Some(0) {
        return Err(config_err("--workers must be at least 1"));
    }
    let bytes = fs::read(&args.data)
        .map_err(|e| config_err(format!("{}: {e}", args.data.display())))?;
    let digest = digest(command, args, &bytes);
    match command {
        Command::Test(_) => test(args, digest),
        other => {
            let text = String::from_utf8(bytes)
                .map_err(|_| config_err(format!("{}: not UTF-8", args.data.display())))?;
            let config = ConfigFile::parse(&text)?;
            match other {
                Command::Simulate(_) => simulate(args, &config, digest),
                Command::Adversarial(_) => adversarial(args, &config, digest),
                Command::CheckDgp(_) => check_dgp(&config, digest),
                Command::Diagnose(_) => diagnose(args, &config, digest),
                Command::Test(_) => unreachable!("handled above"),
            }
        }
    }
}

/// SHA-256 over the input bytes and every setting that can change the
/// output. Worker count and output directory are left out on purpose.
fn digest(command: &Command, args: &RunArgs, data: &[u8]) -> String {
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:e}"));
    let canonical = format!(
        "command={}\ndata={}\ntheta0={}\nalpha={}\nbandwidth_c={}\nbandwidth_r={}\nbandwidth_fixed={}\nseed={}\nreps={}\nn={:?}\n",
        command.name(),
        hex(&Sha256::digest(data)),
        opt(args.theta0),
        opt(args.alpha),
        opt(args.bandwidth_c),
        opt(args.bandwidth_r),
        opt(args.bandwidth_fixed),
        args.seed.map_or("-".into(), |s| s.to_string()),
        args.reps.map_or("-".into(), |s| s.to_string()),
        args.n,
    );
    hex(&Sha256::digest(canonical.as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Explicit bandwidth settings; `None` means the default `c = sd(Z)`, `r = 1/5`.
#[derive(Debug, Clone, Copy)]
enum Bandwidth {
    Default,
    Rate { c: Option<f64>, r: f64 },
    Fixed(f64),
}

fn bandwidth(c: Option<f64>, r: Option<f64>, fixed: Option<f64>) -> Result<Bandwidth, CliError> {
    let choice = match (c, r, fixed) {
        (None, None, None) => return Ok(Bandwidth::Default),
        (_, _, Some(h)) if c.is_some() || r.is_some() => {
            return Err(config_err(format!(
                "a fixed bandwidth ({h}) excludes --bandwidth-c and --bandwidth-r"
            )))
        }
        (_, _, Some(h)) => Bandwidth::Fixed(h),
        (c, r, None) => Bandwidth::Rate { c, r: r.unwrap_or(DEFAULT_RATE) },
    };
    let probe = match choice {
        Bandwidth::Fixed(h) => BandwidthRule::Fixed { h },
        Bandwidth::Rate { c, r } => BandwidthRule::Rate { c: c.unwrap_or(1.0), r },
        Bandwidth::Default => unreachable!(),
    };
    probe.validate().map_err(|e| config_err(e.to_string()))?;
    Ok(choice)
}

fn check_alpha(alpha: f64) -> Result<f64, CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(config_err(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_theta0(theta0: f64) -> Result<f64, CliError> {
    if theta0.is_finite() {
        Ok(theta0)
    } else {
        Err(config_err(format!("theta0 must be finite, got {theta0}")))
    }
}

fn test(args: &RunArgs, digest: String) -> Result<Report, CliError> {
    if args.seed.is_some() || args.reps.is_some() || !args.n.is_empty() {
        return Err(config_err("--seed, --reps and --n do not apply to `test`"));
    }
    let theta0 = check_theta0(args.theta0.unwrap_or(0.0))?;
    let alpha = check_alpha(args.alpha.unwrap_or(DEFAULT_ALPHA))?;
    let sample = ingest_csv(&args.data)?;
    let rule = match bandwidth(args.bandwidth_c, args.bandwidth_r, args.bandwidth_fixed)? {
        Bandwidth::Default => BandwidthRule::default_for(&sample),
        Bandwidth::Rate { c, r } => BandwidthRule::Rate { c: c.unwrap_or(sample.z_std_dev()), r },
        Bandwidth::Fixed(h) => BandwidthRule::Fixed { h },
    };
    let r = cct::cct_test(&sample, &rule, theta0, alpha)?;
    let table = Table::record(
        "test",
        vec![
            ("n", sample.len().into()),
            ("h", r.h.into()),
            ("n_plus", r.n_plus.into()),
            ("n_minus", r.n_minus.into()),
            ("theta_hat", r.theta_hat.into()),
            ("se", r.se.into()),
            ("theta0", r.theta0.into()),
            ("statistic", r.statistic.into()),
            ("p_value", r.p_value.into()),
            ("alpha", r.alpha.into()),
            ("reject", r.reject.into()),
        ],
    );
    Ok(Report {
        command: "test".into(),
        digest,
        seed: None,
        warnings: Vec::new(),
        tables: vec![table],
    })
}

/// Resolved simulation settings: flags first, then the config file, then
/// defaults.
struct Settings {
    theta0: f64,
    alpha: f64,
    seed: u64,
    reps: usize,
    sizes: Vec<usize>,
    tests: Vec<TestKind>,
    bandwidth: Option<BandwidthRule>,
    workers: Option<usize>,
}

fn settings(args: &RunArgs, config: &ConfigFile) -> Result<Settings, CliError> {
    let e = &config.experiment;
    let reps = args.reps.or(e.reps).unwrap_or(DEFAULT_REPS);
    if reps == 0 {
        return Err(config_err("replications must be at least 1"));
    }
    let sizes = if !args.n.is_empty() {
        args.n.clone()
    } else {
        e.n.clone().unwrap_or_else(|| DEFAULT_SIZES.to_vec())
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(config_err("sample sizes must be non-empty and at least 1"));
    }
    let tests = e.tests.clone().unwrap_or_else(|| vec![TestKind::Cct]);
    if tests.is_empty() {
        return Err(config_err("experiment.tests is empty"));
    }
    if let Some(t) = tests.iter().find(|t| !matches!(t, TestKind::Cct | TestKind::Conventional)) {
        return Err(config_err(format!("unknown test {}", t.name())));
    }
    // Flags replace the whole bandwidth block of the file.
    let flags = args.bandwidth_c.is_some() || args.bandwidth_r.is_some() || args.bandwidth_fixed.is_some();
    let choice = if flags {
        bandwidth(args.bandwidth_c, args.bandwidth_r, args.bandwidth_fixed)?
    } else {
        bandwidth(e.bandwidth_c, e.bandwidth_r, e.bandwidth_fixed)?
    };
    let rule = match choice {
        Bandwidth::Default => None,
        Bandwidth::Fixed(h) => Some(BandwidthRule::Fixed { h }),
        Bandwidth::Rate { c: Some(c), r } => Some(BandwidthRule::Rate { c, r }),
        Bandwidth::Rate { c: None, r } if r == DEFAULT_RATE => None,
        Bandwidth::Rate { c: None, .. } => {
            return Err(config_err("in simulations a bandwidth rate needs an explicit scale c"))
        }
    };
    Ok(Settings {
        theta0: check_theta0(args.theta0.or(e.theta0).unwrap_or(0.0))?,
        alpha: check_alpha(args.alpha.or(e.alpha).unwrap_or(DEFAULT_ALPHA))?,
        seed: args.seed.or(e.seed).unwrap_or(DEFAULT_SEED),
        reps,
        sizes,
        tests,
        bandwidth: rule,
        workers: args.workers,
    })
}

impl Settings {
    fn spec(&self, dgps: Vec<(String, Law)>) -> ExperimentSpec {
        ExperimentSpec {
            dgps,
            sample_sizes: self.sizes.clone(),
            replications: self.reps,
            theta0: self.theta0,
            alpha: self.alpha,
            bandwidth: self.bandwidth,
            tests: self.tests.clone(),
            master_seed: self.seed,
            workers: self.workers,
        }
    }
}

/// Radius on which a law's own constants are stated.
fn own_radius(law: &Law) -> f64 {
    let r = match law {
        Law::Plain(d) => d.kappa,
        Law::Spliced(s) => s.kappa(),
    };
    r.min(law.density().inner_radius())
}

fn certify(law: &Law, kappa: Option<f64>, grid: usize) -> rdd_core::Result<AssumptionCertificate> {
    check_assumption1(law, kappa.unwrap_or_else(|| own_radius(law)), grid)
}

fn certificate_warnings(name: &str, law: &Law, out: &mut Vec<String>) {
    match certify(law, None, DEFAULT_GRID) {
        Ok(cert) => {
            for v in &cert.violations {
                out.push(format!(
                    "dgp {name}: condition {} fails at z = {} (value {})",
                    v.clause,
                    Value::Num(v.z).short(),
                    Value::Num(v.value).short(),
                ));
            }
        }
        Err(e) => out.push(format!("dgp {name}: cannot certify ({})", e)),
    }
}

fn select(config: &ConfigFile, names: Option<&[String]>) -> Result<Vec<(String, Law)>, CliError> {
    let catalog = config.catalog()?;
    let names: Vec<String> = match names {
        Some(n) => n.to_vec(),
        None => catalog.keys().cloned().collect(),
    };
    if names.is_empty() {
        return Err(config_err("no DGPs selected"));
    }
    names
        .into_iter()
        .map(|n| match catalog.get(&n) {
            Some(law) => Ok((n, *law)),
            None => Err(config_err(format!("unknown dgp {n}"))),
        })
        .collect()
}

fn cell_table(name: &str, cells: &[CellResult]) -> Table {
    let mut t = Table::new(
        name,
        &[
            "dgp", "offset", "n", "test", "h", "rejection_rate", "mc_se", "successes", "errors",
            "mean_statistic", "ks_distance",
        ],
    );
    for c in cells {
        t.push(vec![
            c.dgp.clone().into(),
            c.offset.into(),
            c.n.into(),
            c.test.name().into(),
            c.h.into(),
            c.rejection_rate.into(),
            c.mc_se.into(),
            c.successes.into(),
            c.error_count.into(),
            c.mean_statistic.into(),
            c.ks_distance.into(),
        ]);
    }
    t
}

fn is_null(law: &Law, theta0: f64) -> bool {
    (law.theta() - theta0).abs() <= 1e-12 * theta0.abs().max(1.0)
}

fn simulate(args: &RunArgs, config: &ConfigFile, digest: String) -> Result<Report, CliError> {
    let s = settings(args, config)?;
    let dgps = select(config, config.experiment.dgps.as_deref())?;
    let mut warnings = Vec::new();
    for (name, law) in &dgps {
        certificate_warnings(name, law, &mut warnings);
    }
    let mut tables = Vec::new();
    match &config.experiment.offsets {
        Some(offsets) => {
            let res = power_curve(&s.spec(dgps), offsets)?;
            tables.push(cell_table("power", &res.cells));
        }
        None => {
            let (nulls, alts): (Vec<_>, Vec<_>) = dgps.into_iter().partition(|(_, l)| is_null(l, s.theta0));
            if !nulls.is_empty() {
                let profile = size_profile(&s.spec(nulls))?;
                tables.push(cell_table("size", &profile.result.cells));
                let mut sup = Table::new("size_sup", &["n", "test", "rejection_rate", "mc_se", "dgp"]);
                for e in &profile.sup_row {
                    sup.push(vec![e.n.into(), e.test.name().into(), e.rate.into(), e.mc_se.into(), e.dgp.clone().into()]);
                }
                tables.push(sup);
            }
            if !alts.is_empty() {
                let res = power_curve(&s.spec(alts), &[])?;
                tables.push(cell_table("power", &res.cells));
            }
        }
    }
    Ok(Report { command: "simulate".into(), digest, seed: Some(s.seed), warnings, tables })
}

fn plain(config: &ConfigFile, name: &str) -> Result<Dgp, CliError> {
    let catalog = config.catalog()?;
    match catalog.get(name) {
        Some(Law::Plain(d)) => Ok(*d),
        Some(Law::Spliced(_)) => Err(config_err(format!("{name} must be a plain dgp, not a splice"))),
        None => Err(config_err(format!("unknown dgp {name}"))),
    }
}

fn adversarial(args: &RunArgs, config: &ConfigFile, digest: String) -> Result<Report, CliError> {
    let section = config
        .adversarial
        .as_ref()
        .ok_or_else(|| config_err("missing [adversarial] section"))?;
    let s = settings(args, config)?;
    let alt = plain(config, &section.alt)?;
    let null = plain(config, &section.null)?;
    let n = args.n.first().copied().or(section.n).unwrap_or(s.sizes[0]);
    let schedule = section.schedule.clone().unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec());
    if schedule.is_empty() || schedule.iter().any(|m| !(*m > 0.0)) {
        return Err(config_err("adversarial.schedule needs positive masses"));
    }
    let mut warnings = Vec::new();
    certificate_warnings(&section.null, &Law::Plain(null), &mut warnings);
    certificate_warnings(&section.alt, &Law::Plain(alt), &mut warnings);
    let table = adversarial_demo(&alt, &null, &schedule, n, &s.spec(Vec::new()))?;

    let head = Table::record(
        "adversarial",
        vec![
            ("alt", section.alt.clone().into()),
            ("null", section.null.clone().into()),
            ("n", table.n.into()),
            ("test", table.test.name().into()),
            ("h", table.h.into()),
            ("alt_rejection_rate", table.alt.rate.into()),
            ("alt_mc_se", table.alt.se.into()),
            ("null_rejection_rate", table.null.rate.into()),
            ("null_mc_se", table.null.se.into()),
        ],
    );
    let mut rows = Table::new(
        "adversarial_rows",
        &[
            "mass", "epsilon_tilde", "epsilon_mass", "total_variation", "tv_bound", "n_tv",
            "spliced_rate", "spliced_se", "errors", "abs_diff", "allowed",
        ],
    );
    for r in &table.rows {
        rows.push(vec![
            r.mass.into(),
            r.epsilon_tilde.into(),
            r.epsilon_mass.into(),
            r.total_variation.into(),
            r.tv_bound.into(),
            r.coupling.into(),
            r.spliced_rate.into(),
            r.spliced_se.into(),
            r.spliced_errors.into(),
            r.difference.into(),
            r.allowed.into(),
        ]);
    }
    Ok(Report {
        command: "adversarial".into(),
        digest,
        seed: Some(s.seed),
        warnings,
        tables: vec![head, rows],
    })
}

fn check_dgp(config: &ConfigFile, digest: String) -> Result<Report, CliError> {
    let c = &config.check;
    let grid = c.grid.unwrap_or(DEFAULT_GRID);
    if grid == 0 {
        return Err(config_err("check.grid must be at least 1"));
    }
    let uniform = match (c.kappa_tilde, c.l_tilde, c.u_tilde) {
        (None, None, None) => None,
        (Some(k), Some(l), Some(u)) if k > 0.0 && l > 0.0 && u > 0.0 => Some((k, l, u)),
        _ => return Err(config_err("kappa_tilde, l_tilde and u_tilde must be given together and be positive")),
    };
    let dgps = select(config, config.experiment.dgps.as_deref())?;
    let mut warnings = Vec::new();
    let mut certs = Table::new(
        "certificates",
        &[
            "dgp", "holds", "kappa", "L", "U", "density_lo", "density_hi", "fourth_moment_hi",
            "derivative_hi", "variance_lo", "variance_hi", "violations",
        ],
    );
    let mut violations = Table::new("violations", &["dgp", "condition", "z", "value"]);
    let mut uniform_table = Table::new("uniform_constants", &["dgp", "kappa_tilde", "l_tilde", "u_tilde", "holds"]);
    for (name, law) in &dgps {
        let cert = certify(law, c.kappa, grid)?;
        let bound = |cl: Clause| cert.bound(cl).map_or((f64::NAN, f64::NAN), |b| (b.lower, b.upper));
        let (dl, dh) = bound(Clause::Density);
        let (_, fh) = bound(Clause::FourthMoment);
        let (_, mh) = bound(Clause::MeanDerivatives);
        let (vl, vh) = bound(Clause::Variance);
        certs.push(vec![
            name.clone().into(),
            cert.holds.into(),
            cert.kappa_used.into(),
            cert.l.into(),
            cert.u.into(),
            dl.into(),
            dh.into(),
            fh.into(),
            mh.into(),
            vl.into(),
            vh.into(),
            cert.violations.len().into(),
        ]);
        for v in &cert.violations {
            violations.push(vec![name.clone().into(), v.clause.to_string().into(), v.z.into(), v.value.into()]);
            warnings.push(format!(
                "dgp {name}: condition {} fails at z = {} (value {})",
                v.clause,
                Value::Num(v.z).short(),
                Value::Num(v.value).short()
            ));
        }
        if let Some((k, l, u)) = uniform {
            let holds = check_assumption2(law, k, l, u)?;
            if !holds {
                warnings.push(format!("dgp {name}: uniform constants (kappa {k}, L {l}, U {u}) do not hold"));
            }
            uniform_table.push(vec![name.clone().into(), k.into(), l.into(), u.into(), holds.into()]);
        }
    }
    let mut tables = vec![certs, violations];
    if uniform.is_some() {
        tables.push(uniform_table);
    }
    Ok(Report { command: "check-dgp".into(), digest, seed: None, warnings, tables })
}

fn diagnose(args: &RunArgs, config: &ConfigFile, digest: String) -> Result<Report, CliError> {
    let section = config
        .diagnose
        .as_ref()
        .ok_or_else(|| config_err("missing [diagnose] section"))?;
    let s = settings(args, config)?;
    let sizes = if !args.n.is_empty() {
        s.sizes.clone()
    } else {
        section.n.clone().unwrap_or_else(|| s.sizes.clone())
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(config_err("diagnose.n must be non-empty and at least 1"));
    }
    let reps = args.reps.or(section.reps).unwrap_or(s.reps);
    if reps == 0 {
        return Err(config_err("replications must be at least 1"));
    }
    let law = *config
        .catalog()?
        .get(&section.dgp)
        .ok_or_else(|| config_err(format!("unknown dgp {}", section.dgp)))?;
    let mut warnings = Vec::new();
    certificate_warnings(&section.dgp, &law, &mut warnings);
    let rows = estimator_diagnostics(&law, &sizes, reps, s.bandwidth, s.seed, s.workers)?;
    let mut t = Table::new(
        "diagnostics",
        &[
            "n", "h", "successes", "errors", "bias", "bias_se", "predicted_bias", "bias_ratio",
            "variance_ratio", "variance_ratio_se", "ks_distance",
        ],
    );
    for r in &rows {
        t.push(vec![
            r.n.into(),
            r.h.into(),
            r.successes.into(),
            r.error_count.into(),
            r.bias.into(),
            r.bias_se.into(),
            r.predicted_bias.into(),
            r.bias_ratio.into(),
            r.variance_ratio.into(),
            r.variance_ratio_se.into(),
            r.ks_distance.into(),
        ]);
    }
    Ok(Report { command: "diagnose".into(), digest, seed: Some(s.seed), warnings, tables: vec![t] })
}

