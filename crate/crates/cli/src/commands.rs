use std::path::Path;
use std::time::Instant;

use slpm::eval::{
    distribution_summaries, global_mean_predictor, pooled_position_variance, survival_slope, LogHistogram,
};
use slpm::init::CrossBlock;
use slpm::simulate::{average_network, draw_params, homogeneous_network, sample_edges, Mixing, PositionLaw};
use slpm::{
    fit as fit_model, initialize_state, log_abs_loss, reconstruct, FitConfig, Hyperparams, InitConfig, InitMethod,
    Side, SimulationConfig, WeightMatrix,
};

use crate::error::CliError;
use crate::formats::{num, read_matrix, write_matrix, Format, LabeledMatrix};
use crate::manifest::RunManifest;
use crate::output::OutputSet;
use crate::report::{parse_f64, parse_usize, Report, Table};
use crate::{
    CrossArg, EmbedArgs, EvaluateArgs, FitArgs, InitArg, ModelArg, NetworkArg, PositionsArg, SimulateArgs,
};

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn finish(mut outputs: OutputSet, mut manifest: RunManifest, out: &Path, start: Instant) -> Result<(), CliError> {
    manifest.threads = slpm::par::current_threads();
    manifest.wall_time = start.elapsed().as_secs_f64();
    outputs.add(out.join("manifest.txt"), manifest.render());
    for p in outputs.paths() {
        eprintln!("slpm: writing {}", p.display());
    }
    outputs.commit()
}

fn position_table(
    state: &slpm::VariationalState,
    side: Side,
    labels: &[String],
    degrees: &[f64],
) -> Table {
    let k = state.components();
    let mut header = vec!["label".to_string(), "degree".to_string()];
    header.extend((1..=k).map(|c| format!("alpha_{c}")));
    header.extend((1..=k).map(|c| format!("beta_{c}")));
    let mut t = Table { header, rows: Vec::new() };
    for node in 0..state.nodes(side) {
        let mut row = vec![labels[node].clone(), num(degrees[node])];
        row.extend((0..k).map(|c| num(state.alpha(side, node, c))));
        row.extend((0..k).map(|c| num(state.beta(side, node, c))));
        t.push(row);
    }
    t
}

fn column_sums(x: &WeightMatrix) -> Vec<f64> {
    x.col_sums()
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let start = Instant::now();
    if args.dims == 0 {
        return Err(CliError::Usage("--dims must be at least 1".into()));
    }
    let bytes = read_bytes(&args.input)?;
    let format = args.format.unwrap_or_else(|| Format::detect(&args.input));
    let LabeledMatrix { mut matrix, row_labels, col_labels } =
        read_matrix(&args.input, Some(format), args.absent_as_missing)?;
    if args.square {
        matrix = matrix.into_unipartite(args.no_self_loops)?;
    }

    let hyper = Hyperparams::symmetric(args.dims, args.delta, args.a, args.b)?;
    let init_config = InitConfig {
        method: match args.init {
            InitArg::Mds => InitMethod::Mds,
            InitArg::Random => InitMethod::Random,
        },
        cross: match args.init_cross {
            CrossArg::Recip => CrossBlock::Reciprocal,
            CrossArg::Raw => CrossBlock::Raw,
        },
        epsilon: args.init_eps,
        seed: args.seed,
        ..InitConfig::default()
    };
    let fit_config = FitConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        seed: args.seed,
        mixing_threshold: args.tau,
        ..FitConfig::default()
    };
    let (init, diag) = initialize_state(&matrix, &hyper, &init_config)?;
    let (state, fit_report) = fit_model(&matrix, &hyper, &init, &fit_config)?;

    let mut manifest = RunManifest::new("fit");
    manifest.input(&args.input.display().to_string(), &bytes);
    manifest.flag("format", format.extension());
    manifest.flag("dims", args.dims);
    manifest.flag("delta", num(args.delta));
    manifest.flag("a", num(args.a));
    manifest.flag("b", num(args.b));
    manifest.flag("tol", num(args.tol));
    manifest.flag("max_iter", args.max_iter);
    manifest.flag("seed", args.seed);
    manifest.flag("init", if args.init == InitArg::Mds { "mds" } else { "random" });
    manifest.flag("init_cross", if args.init_cross == CrossArg::Recip { "recip" } else { "raw" });
    manifest.flag("init_eps", num(args.init_eps));
    manifest.flag("square", args.square);
    manifest.flag("no_self_loops", args.no_self_loops);
    manifest.flag("absent_as_missing", args.absent_as_missing);
    manifest.flag("tau", num(args.tau));
    let hash = manifest.hash();

    let (m, n, k) = state.dims();
    let mut r = Report::new("slpm fit report");
    r.scalar("manifest_hash", &hash);
    r.scalar("version", env!("CARGO_PKG_VERSION"));
    r.scalar("rows", m);
    r.scalar("cols", n);
    r.scalar("components", k);
    r.scalar("observed_entries", matrix.observed_count());
    r.scalar("square", matrix.is_square_mode());
    r.scalar("exclude_diagonal", matrix.excludes_diagonal());
    r.scalar("iterations", fit_report.iterations);
    r.scalar("converged", fit_report.converged);
    r.real("free_energy", *fit_report.free_energy_trace.last().expect("trace is never empty"));
    r.real("mixing_threshold", args.tau);
    r.scalar("effective_k", fit_report.effective_k);
    r.scalar("k_strict", fit_report.k_strict);
    r.scalar("floored_steps", fit_report.floored_steps);
    if let Some(stress) = diag.stress {
        r.real("init_stress", stress);
        r.scalar("init_mds_iterations", diag.mds_iterations);
    }
    r.scalar("init_degenerate_dissimilarities", diag.degenerate_dissimilarities);
    r.scalar(
        "init_unit_variance_fallback",
        if diag.unit_variance_fallback.is_empty() { "none".to_string() } else { diag.unit_variance_fallback.join(",") },
    );
    r.scalar("position_variance", "sample variance of sender and receiver means pooled per component");

    let variances = pooled_position_variance(&state);
    let mut mixing = Table::new(&[
        "rank",
        "component",
        "proportion",
        "dirichlet",
        "gamma_shape",
        "gamma_rate",
        "position_variance",
    ]);
    for (rank, (&c, &p)) in fit_report.component_order.iter().zip(&fit_report.sorted_mixing).enumerate() {
        mixing.push(vec![
            (rank + 1).to_string(),
            (c + 1).to_string(),
            num(p),
            num(state.dirichlet[c]),
            num(state.gamma_shape[c]),
            num(state.gamma_rate[c]),
            num(variances[c]),
        ]);
    }
    r.table("mixing", mixing);
    let mut trace = Table::new(&["sweep", "free_energy"]);
    for (s, f) in fit_report.free_energy_trace.iter().enumerate() {
        trace.push(vec![s.to_string(), num(*f)]);
    }
    r.table("free_energy_trace", trace);
    r.table("senders", position_table(&state, Side::Sender, &row_labels, &matrix.row_sums()));
    r.table("receivers", position_table(&state, Side::Receiver, &col_labels, &column_sums(&matrix)));

    let recon = LabeledMatrix { matrix: reconstruct(&state)?, row_labels, col_labels };
    let mut outputs = OutputSet::default();
    outputs.add(args.out.join("report.txt"), r.render());
    let mut recon_text = write_matrix(&recon, format);
    if format == Format::MatrixMarket {
        recon_text = recon_text.replacen('\n', &format!("\n% manifest {hash}\n"), 1);
    }
    outputs.add(args.out.join(format!("reconstruction.{}", format.extension())), recon_text);
    eprintln!(
        "slpm: {} sweeps, converged {}, F = {}, effective K = {}",
        fit_report.iterations,
        fit_report.converged,
        num(*fit_report.free_energy_trace.last().unwrap()),
        fit_report.effective_k
    );
    finish(outputs, manifest, &args.out, start)
}

fn parse_mixing(value: &str, k: usize, hyper: f64) -> Result<Mixing, CliError> {
    match value {
        "uniform" => Ok(Mixing::Uniform),
        "dirichlet" => Ok(Mixing::Dirichlet(hyper)),
        list => {
            let p = list
                .split(',')
                .map(|s| parse_f64(s.trim(), "--mixing"))
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| CliError::Usage(format!("--mixing '{list}': expected uniform, dirichlet or proportions")))?;
            if p.len() != k {
                return Err(CliError::Usage(format!("--mixing lists {} proportions for {k} dimensions", p.len())));
            }
            Ok(Mixing::Fixed(p))
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("simulate");
    manifest.flag("model", if args.model == ModelArg::Slpm { "slpm" } else { "homogeneous" });
    manifest.flag("M", args.m);
    manifest.flag("N", args.n);
    manifest.flag("seed", args.seed);
    manifest.flag("format", args.format.extension());
    let mut truth = Report::new("slpm simulation ground truth");

    let data = match args.model {
        ModelArg::Homogeneous => {
            truth.scalar("model", "homogeneous");
            truth.scalar("rates", "Gamma(1, 1)");
            homogeneous_network(args.m, args.n, args.seed)?
        }
        ModelArg::Slpm => {
            let config = SimulationConfig {
                m: args.m,
                n: args.n,
                k: args.k_true,
                mixing: parse_mixing(&args.mixing, args.k_true, args.hyper)?,
                positions: match args.positions {
                    PositionsArg::Normal => PositionLaw::StandardNormal,
                    PositionsArg::Gamma => PositionLaw::GammaHierarchy { a: args.hyper, b: args.hyper },
                },
                seed: args.seed,
            };
            manifest.flag("Ktrue", args.k_true);
            manifest.flag("mixing", &args.mixing);
            manifest.flag("positions", if args.positions == PositionsArg::Normal { "normal" } else { "gamma" });
            manifest.flag("hyper", num(args.hyper));
            manifest.flag("network", if args.network == NetworkArg::Average { "average" } else { "sampled" });
            let (mut params, resampled) = draw_params(&config)?;
            let data = match args.network {
                NetworkArg::Average => average_network(&params)?,
                NetworkArg::Sampled => sample_edges(&mut params, args.seed)?,
            };
            truth.scalar("model", "slpm");
            truth.scalar("network", if args.network == NetworkArg::Average { "average" } else { "sampled" });
            truth.scalar("components", params.k);
            truth.scalar("resampled_positions", resampled);
            let mut comp = Table::new(&["component", "mixing", "precision"]);
            for c in 0..params.k {
                comp.push(vec![(c + 1).to_string(), num(params.mixing[c]), num(params.precisions[c])]);
            }
            truth.table("components", comp);
            for (name, pos, count, prefix) in [("senders", &params.u, params.m, "s"), ("receivers", &params.v, params.n, "r")] {
                let mut header = vec!["label".to_string()];
                header.extend((1..=params.k).map(|c| format!("position_{c}")));
                let mut t = Table { header, rows: Vec::new() };
                for node in 0..count {
                    let mut row = vec![format!("{prefix}{}", node + 1)];
                    row.extend(pos[node * params.k..(node + 1) * params.k].iter().map(|&x| num(x)));
                    t.push(row);
                }
                truth.table(name, t);
            }
            if !params.allocations.is_empty() {
                let mut t = Table::new(&["sender", "receiver", "component"]);
                for (idx, z) in params.allocations.iter().enumerate() {
                    t.push(vec![(idx / params.n + 1).to_string(), (idx % params.n + 1).to_string(), (z + 1).to_string()]);
                }
                truth.table("allocations", t);
            }
            data
        }
    };
    let hash = manifest.hash();
    truth.scalars.insert(0, ("manifest_hash".into(), hash.clone()));
    let labeled = LabeledMatrix::unlabeled(data);
    let mut matrix_text = write_matrix(&labeled, args.format);
    if args.format == Format::MatrixMarket {
        matrix_text = matrix_text.replacen('\n', &format!("\n% manifest {hash}\n"), 1);
    }
    let mut outputs = OutputSet::default();
    outputs.add(args.out.join(format!("matrix.{}", args.format.extension())), matrix_text);
    outputs.add(args.out.join("truth.txt"), truth.render());
    finish(outputs, manifest, &args.out, start)
}

fn histogram_table(h: &LogHistogram) -> Table {
    let mut t = Table::new(&["log10_centre", "log10_frequency", "count"]);
    for (b, &count) in h.counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let centre = 0.5 * (h.log10_edges[b] + h.log10_edges[b + 1]);
        t.push(vec![num(centre), num((count as f64 / h.positive_count() as f64).log10()), count.to_string()]);
    }
    t
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    if args.estimate.is_none() && args.report.is_none() {
        return Err(CliError::Usage("give --estimate, --report or both".into()));
    }
    let mut manifest = RunManifest::new("evaluate");
    let truth_bytes = read_bytes(&args.truth)?;
    manifest.input(&args.truth.display().to_string(), &truth_bytes);
    let truth = read_matrix(&args.truth, args.format, args.absent_as_missing)?.matrix;

    let mut r = Report::new("slpm evaluation");
    r.scalar("rows", truth.rows());
    r.scalar("cols", truth.cols());
    r.scalar("observed_entries", truth.observed_count());
    if let Some(est_path) = &args.estimate {
        manifest.input(&est_path.display().to_string(), &read_bytes(est_path)?);
        let estimate = read_matrix(est_path, args.format, args.absent_as_missing)?.matrix;
        r.real("loss", log_abs_loss(&truth, &estimate)?);
        r.real("baseline_loss", log_abs_loss(&truth, &global_mean_predictor(&truth)?)?);
        r.scalar("baseline", "global mean of observed weights");
    }
    if let Some(report_path) = &args.report {
        let bytes = read_bytes(report_path)?;
        manifest.input(&report_path.display().to_string(), &bytes);
        let text = String::from_utf8(bytes).map_err(|_| CliError::Input("report is not UTF-8".into()))?;
        let fit = Report::parse(&text)?;
        let mixing = fit.get_table("mixing").ok_or_else(|| CliError::Input("report has no [mixing] table".into()))?;
        let col = mixing.column("proportion").ok_or_else(|| CliError::Input("[mixing] lacks proportion".into()))?;
        let props: Vec<f64> =
            mixing.rows.iter().map(|row| parse_f64(&row[col], "mixing proportion")).collect::<Result<_, _>>()?;
        let k_strict = fit.get("k_strict").ok_or_else(|| CliError::Input("report lacks k_strict".into()))?;
        r.scalar("k_strict", parse_usize(k_strict, "k_strict")?);
        r.real("tau", args.tau);
        r.scalar("k_tau", props.iter().filter(|&&p| p > args.tau).count());
        let mut t = Table::new(&["rank", "proportion"]);
        for (rank, p) in props.iter().enumerate() {
            t.push(vec![(rank + 1).to_string(), num(*p)]);
        }
        r.table("sorted_mixing", t);
    }
    manifest.flag("tau", num(args.tau));
    manifest.flag("bins", args.bins);
    manifest.flag("absent_as_missing", args.absent_as_missing);

    let summary = distribution_summaries(&truth, args.bins);
    let weights: Vec<f64> = truth.observed_values().collect();
    r.scalar("zero_weights", summary.weights.zeros);
    r.scalar("zero_degrees", summary.degrees.zeros);
    for (key, values) in [("weight_survival_slope", weights), ("degree_survival_slope", truth.row_sums())] {
        match survival_slope(&values, 0.01, 0.1) {
            Some(s) => r.real(key, s),
            None => r.scalar(key, "NA"),
        }
    }
    r.table("weight_histogram", histogram_table(&summary.weights));
    r.table("degree_histogram", histogram_table(&summary.degrees));

    let hash = manifest.hash();
    r.scalars.insert(0, ("manifest_hash".into(), hash));
    let text = r.render();
    print!("{text}");
    match &args.out {
        Some(out) => {
            let mut outputs = OutputSet::default();
            outputs.add(out.join("evaluation.txt"), text);
            finish(outputs, manifest, out, start)
        }
        None => Ok(()),
    }
}

pub fn export_embedding(args: &EmbedArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let bytes = read_bytes(&args.report)?;
    let mut manifest = RunManifest::new("export-embedding");
    manifest.input(&args.report.display().to_string(), &bytes);
    let text = String::from_utf8(bytes).map_err(|_| CliError::Input("report is not UTF-8".into()))?;
    let fit = Report::parse(&text)?;
    let missing = |what: &str| CliError::Input(format!("report has no {what}"));
    let mixing = fit.get_table("mixing").ok_or_else(|| missing("[mixing] table"))?;
    if mixing.rows.len() < 2 {
        return Err(CliError::Input("an embedding needs at least two components".into()));
    }
    let comp_col = mixing.column("component").ok_or_else(|| missing("component column"))?;
    let prop_col = mixing.column("proportion").ok_or_else(|| missing("proportion column"))?;
    let top: Vec<(usize, &str)> = mixing.rows[..2]
        .iter()
        .map(|row| Ok((parse_usize(&row[comp_col], "component")?, row[prop_col].as_str())))
        .collect::<Result<_, CliError>>()?;

    let hash = manifest.hash();
    let mut out = format!("# manifest {hash}\n");
    for (axis, (c, p)) in ["x", "y"].iter().zip(&top) {
        out.push_str(&format!("# {axis}: component {c}, mixing proportion {p}\n"));
    }
    out.push_str("side\tlabel\tdegree\tx\ty\n");
    for side in ["senders", "receivers"] {
        let t = fit.get_table(side).ok_or_else(|| missing(&format!("[{side}] table")))?;
        let cols: Vec<usize> = top
            .iter()
            .map(|(c, _)| t.column(&format!("alpha_{c}")).ok_or_else(|| missing(&format!("alpha_{c} in [{side}]"))))
            .collect::<Result<_, _>>()?;
        let (label, degree) = (
            t.column("label").ok_or_else(|| missing("label column"))?,
            t.column("degree").ok_or_else(|| missing("degree column"))?,
        );
        let side_name = if side == "senders" { "sender" } else { "receiver" };
        for row in &t.rows {
            out.push_str(&format!("{side_name}\t{}\t{}\t{}\t{}\n", row[label], row[degree], row[cols[0]], row[cols[1]]));
        }
    }
    let mut outputs = OutputSet::default();
    outputs.add(args.out.join("embedding.tsv"), out);
    finish(outputs, manifest, &args.out, start)
}
