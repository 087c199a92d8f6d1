//! Command implementations behind the `kicked-kerr` binary. Each command
//! writes its files into `<output.dir>/<command>/` together with a
//! `manifest.json` of content hashes.

pub mod config;
pub mod output;

use std::path::PathBuf;

use kicked_kerr::classical::{bifurcation_scan, RNG_ALGORITHM};
use kicked_kerr::dynamics::{run_kicked_evolution, sweep_runs, KickSeriesRecord, SnapshotSchedule};
use kicked_kerr::entropy::entropy_sweep;
use kicked_kerr::fock::mean_photon_number;
use kicked_kerr::tsa::{
    embed, estimate_delay, estimate_embedding_dim, recurrence_matrix, rqa_measures,
    threshold_for_recurrence_rate, Series,
};
use kicked_kerr::wigner::{negativity_delta, wigner_grid};
use thiserror::Error;

pub use config::RunConfig;
use output::{csv, num, read_column, Artifacts, ResultManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{failed} of {total} runs failed")]
    Partial { failed: usize, total: usize },
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) | CliError::Verify(_) => 3,
            CliError::Partial { .. } => 4,
        }
    }
}

impl From<kicked_kerr::Error> for CliError {
    fn from(e: kicked_kerr::Error) -> Self {
        use kicked_kerr::Error as E;
        match e.root() {
            E::InvalidParameter(_)
            | E::SeriesTooShort { .. }
            | E::WindowTooShort { .. }
            | E::IndexOutOfRange { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Bifurcation,
    DeltaSeries,
    Wigner,
    Rqa,
    EntropySweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bifurcation => "bifurcation",
            Command::DeltaSeries => "delta-series",
            Command::Wigner => "wigner",
            Command::Rqa => "rqa",
            Command::EntropySweep => "entropy-sweep",
        }
    }
}

/// Runs one command. Partial sweep failures still write every file and the
/// manifest before returning [`CliError::Partial`].
pub fn run(command: Command, config: &RunConfig) -> Result<ResultManifest, CliError> {
    config.validate()?;
    let dir = config.output.dir.join(command.name());
    let mut out = Artifacts::open(&dir)?;
    let failures = match command {
        Command::Bifurcation => bifurcation(config, &mut out)?,
        Command::DeltaSeries => delta_series(config, &mut out)?,
        Command::Wigner => wigner(config, &mut out)?,
        Command::Rqa => rqa(config, &mut out)?,
        Command::EntropySweep => entropy(config, &mut out)?,
    };
    let manifest = out.finish(command.name(), config.emit())?;
    match failures {
        Some((failed, total)) if failed == total => Err(CliError::Numerical(format!(
            "all {total} runs failed; see {}",
            dir.join("failures.csv").display()
        ))),
        Some((failed, total)) if failed > 0 => Err(CliError::Partial { failed, total }),
        _ => Ok(manifest),
    }
}

type Failures = Option<(usize, usize)>;

fn model_meta(c: &RunConfig) -> Vec<(&'static str, String)> {
    let m = &c.model;
    vec![
        ("chi", num(m.chi)),
        ("gamma", num(m.gamma)),
        ("period", num(m.period)),
        ("kicks", m.kicks.to_string()),
        ("dim", m.dim.to_string()),
        ("substeps", m.substeps.to_string()),
        ("grid", grid_desc(&c.grid)),
    ]
}

fn grid_desc(g: &kicked_kerr::wigner::PhaseGrid) -> String {
    format!(
        "[{}, {}] x [{}, {}], {} x {}",
        num(g.re_min),
        num(g.re_max),
        num(g.im_min),
        num(g.im_max),
        g.n_re,
        g.n_im
    )
}

fn eps_tag(eps: f64) -> String {
    format!("{eps:.4}")
}

fn bifurcation(c: &RunConfig, out: &mut Artifacts) -> Result<Failures, CliError> {
    let b = &c.bifurcation;
    let eps = b.epsilons.values()?;
    let data = bifurcation_scan(&eps, &c.classical, b.transient, b.retained, b.mode)?;
    let p = &c.classical;
    let meta = vec![
        ("chi", num(p.chi)),
        ("gamma", num(p.gamma)),
        ("period", num(p.period)),
        ("n_traj", p.n_traj.to_string()),
        ("radius", num(p.radius)),
        ("spot", format!("{:?}", p.spot).to_lowercase()),
        ("seed", p.seed.to_string()),
        ("rng", RNG_ALGORITHM.to_string()),
        ("transient", b.transient.to_string()),
        ("retained", b.retained.to_string()),
        ("mode", format!("{:?}", b.mode)),
    ];
    let rows = data.epsilons.iter().zip(&data.samples).flat_map(|(e, s)| {
        s.iter()
            .enumerate()
            .map(move |(i, v)| vec![num(*e), i.to_string(), num(*v)])
    });
    out.write("bifurcation.csv", &csv(&meta, &["epsilon", "sample_index", "energy"], rows))?;
    let counts = data.cluster_counts(b.cluster_tol);
    let mut meta = meta;
    meta.push(("cluster_tol", num(b.cluster_tol)));
    out.write(
        "clusters.csv",
        &csv(
            &meta,
            &["epsilon", "clusters"],
            eps.iter().zip(counts).map(|(e, n)| vec![num(*e), n.to_string()]),
        ),
    )?;
    Ok(None)
}

fn series_csv(c: &RunConfig, rec: &KickSeriesRecord) -> String {
    let mut meta = vec![("epsilon", num(rec.params.epsilon))];
    meta.extend(model_meta(c));
    meta.push(("max_guard_population", num(rec.max_guard_population)));
    let rows = (0..rec.len()).map(|k| {
        vec![
            (k + 1).to_string(),
            num(rec.delta[k]),
            num(rec.delta_n[k]),
            num(rec.mean_n[k]),
            num(rec.trace_defect[k]),
        ]
    });
    csv(&meta, &["kick", "delta", "delta_n", "mean_n", "trace_defect"], rows)
}

fn write_failures(out: &mut Artifacts, failed: &[(f64, String)]) -> Result<(), CliError> {
    if failed.is_empty() {
        return Ok(());
    }
    let rows = failed
        .iter()
        .map(|(e, msg)| vec![num(*e), format!("\"{}\"", msg.replace('"', "'"))]);
    out.write("failures.csv", &csv(&[], &["epsilon", "error"], rows))
}

fn delta_series(c: &RunConfig, out: &mut Artifacts) -> Result<Failures, CliError> {
    let eps = &c.delta_series.epsilons;
    if eps.is_empty() {
        return Err(CliError::Config("delta_series.epsilons is empty".into()));
    }
    let runs = sweep_runs(eps, &c.model, &c.grid);
    let mut failed = Vec::new();
    for (e, run) in eps.iter().zip(runs) {
        match run {
            Ok(rec) => out.write(&format!("delta_series_eps{}.csv", eps_tag(*e)), &series_csv(c, &rec))?,
            Err(err) => failed.push((*e, err.to_string())),
        }
    }
    write_failures(out, &failed)?;
    Ok(Some((failed.len(), eps.len())))
}

fn wigner(c: &RunConfig, out: &mut Artifacts) -> Result<Failures, CliError> {
    let w = &c.wigner;
    if w.kick > c.model.kicks {
        return Err(kicked_kerr::Error::IndexOutOfRange {
            index: w.kick,
            limit: c.model.kicks,
        }
        .into());
    }
    let params = kicked_kerr::dynamics::ModelParams {
        epsilon: w.epsilon,
        kicks: w.kick.max(1),
        ..c.model.clone()
    };
    let rec = run_kicked_evolution(&params, &c.grid, &SnapshotSchedule::at([w.kick]))?;
    let rho = rec.snapshot(w.kick).expect("scheduled snapshot is stored");
    let n = mean_photon_number(rho);
    let grid = c.grid.widened_for(n);
    let field = wigner_grid(rho, &grid)?;
    let mut meta = vec![("epsilon", num(w.epsilon)), ("kick", w.kick.to_string())];
    meta.extend(model_meta(c));
    meta.extend([
        ("re_min", num(grid.re_min)),
        ("re_max", num(grid.re_max)),
        ("im_min", num(grid.im_min)),
        ("im_max", num(grid.im_max)),
        ("n_re", grid.n_re.to_string()),
        ("n_im", grid.n_im.to_string()),
        ("mean_n", num(n)),
        ("integral", num(field.integral())),
        ("min", num(field.min())),
        ("delta", num(negativity_delta(&field))),
    ]);
    let values = field.values();
    let rows = (0..grid.n_im).flat_map(|j| {
        let grid = &grid;
        (0..grid.n_re).map(move |i| vec![num(grid.re_at(i)), num(grid.im_at(j)), num(values[(i, j)])])
    });
    out.write(
        &format!("wigner_eps{}_kick{}.csv", eps_tag(w.epsilon), w.kick),
        &csv(&meta, &["re", "im", "w"], rows),
    )?;
    Ok(None)
}

fn rqa(c: &RunConfig, out: &mut Artifacts) -> Result<Failures, CliError> {
    let r = &c.rqa;
    let (raw, source) = match &r.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (Series::new(read_column(&text, "delta_n")?, c.model.period), path.display().to_string())
        }
        None => {
            let rec = run_kicked_evolution(&c.model.with_epsilon(r.epsilon), &c.grid, &SnapshotSchedule::none())?;
            (rec.delta_n_series(), format!("computed at epsilon = {}", num(r.epsilon)))
        }
    };
    let s = raw.skip(r.transient);
    let delay = estimate_delay(&s)?;
    let tau = r.tau.unwrap_or(delay.tau);
    let fnn = estimate_embedding_dim(&s, tau, r.max_dim)?;
    let d = r.dim.unwrap_or(fnn.d);
    let tr = embed(&s, tau, d)?;
    let eps_thr = match r.eps_thr {
        Some(e) => e,
        None => threshold_for_recurrence_rate(&tr, r.recurrence_rate, r.norm)?,
    };
    let matrix = recurrence_matrix(&tr, eps_thr, r.norm)?;
    let report = rqa_measures(&matrix, r.l_min, r.theiler)?;

    let mut meta = vec![("source", source), ("transient", r.transient.to_string())];
    meta.extend(model_meta(c));
    let mut summary = String::new();
    for (k, v) in &meta {
        summary += &format!("{k} = {v}\n");
    }
    summary += &format!(
        "series_len = {}\nseries_mean = {}\nseries_std = {}\ntau = {tau}\ntau_estimated = {}\nmi_minimum_found = {}\nmi_bins = {}\n\
         embedding_dim = {d}\nembedding_dim_estimated = {}\nfnn_converged = {}\n\
         norm = {}\neps_thr = {}\n",
        s.len(),
        num(s.values.iter().sum::<f64>() / s.len() as f64),
        num(s.std_dev()),
        delay.tau,
        delay.minimum_found,
        delay.bins,
        fnn.d,
        fnn.converged,
        r.norm.name(),
        num(eps_thr),
    );
    summary += &report.to_key_value();
    out.write("rqa_report.txt", &summary)?;

    let mi_rows = delay
        .mutual_information
        .iter()
        .enumerate()
        .map(|(lag, v)| vec![lag.to_string(), num(*v)]);
    out.write("mutual_information.csv", &csv(&meta, &["lag", "mi"], mi_rows))?;
    let fnn_rows = fnn
        .fractions
        .iter()
        .enumerate()
        .map(|(i, f)| vec![(i + 1).to_string(), num(*f)]);
    out.write("false_neighbors.csv", &csv(&meta, &["dim", "fraction"], fnn_rows))?;
    let mut rp_meta = meta.clone();
    rp_meta.extend([
        ("tau", tau.to_string()),
        ("embedding_dim", d.to_string()),
        ("n", matrix.n().to_string()),
        ("eps_thr", num(eps_thr)),
        ("norm", r.norm.name().to_string()),
    ]);
    out.write(
        "recurrence_points.csv",
        &csv(&rp_meta, &["i", "j"], matrix.coordinates().map(|(i, j)| vec![i.to_string(), j.to_string()])),
    )?;
    rp_meta.extend([("l_min", r.l_min.to_string()), ("theiler", r.theiler.to_string())]);
    out.write(
        "diagonal_histogram.csv",
        &csv(
            &rp_meta,
            &["length", "count"],
            report.diag_histogram.iter().map(|(l, n)| vec![l.to_string(), n.to_string()]),
        ),
    )?;
    Ok(None)
}

fn entropy(c: &RunConfig, out: &mut Artifacts) -> Result<Failures, CliError> {
    let e = &c.entropy;
    let eps = e.epsilons.values()?;
    let data = entropy_sweep(&eps, &c.model, &c.grid, &e.window)?;
    let mut meta = model_meta(c);
    meta.extend([
        ("t_min", data.t_min.to_string()),
        ("t_max", data.t_max.to_string()),
        ("taper", format!("{:?}", e.window.taper).to_lowercase()),
    ]);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let rows = data.points.iter().map(|p| {
        vec![
            num(p.epsilon),
            opt(p.entropy),
            opt(p.normalized()),
            p.bins.to_string(),
            p.degenerate.to_string(),
            opt(p.mean_n),
        ]
    });
    out.write(
        "entropy_sweep.csv",
        &csv(&meta, &["epsilon", "entropy", "normalized", "bins", "degenerate", "mean_n"], rows),
    )?;
    let failed: Vec<(f64, String)> = data
        .points
        .iter()
        .filter_map(|p| p.error.clone().map(|m| (p.epsilon, m)))
        .collect();
    write_failures(out, &failed)?;
    let (r, ch) = (e.regular_band, e.chaotic_band);
    let summary = format!(
        "regular_band = [{}, {}]\nchaotic_band = [{}, {}]\nregular_mean_step = {}\n\
         chaotic_mean_step = {}\nsmoothness_ratio = {}\nfailures = {}\n",
        num(r.0),
        num(r.1),
        num(ch.0),
        num(ch.1),
        opt(data.mean_abs_step(r.0, r.1)),
        opt(data.mean_abs_step(ch.0, ch.1)),
        opt(data.smoothness_ratio(r, ch)),
        data.failures(),
    );
    out.write("summary.txt", &summary)?;
    Ok(Some((failed.len(), eps.len())))
}

/// Directory a command writes into.
pub fn command_dir(config: &RunConfig, command: Command) -> PathBuf {
    config.output.dir.join(command.name())
}
