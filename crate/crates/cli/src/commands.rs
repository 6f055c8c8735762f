use clusterloop::experiment::{
    delay_scan, event_rate, linspace, run_sweep, sample_detections, AnalysisBasis, FringeSpec,
    OverlapModel, SweepAxis, SweepGrid, SweepMetric, SweepRow,
};
use clusterloop::growth::{full_report, grow_full, reduced_report, GrowthMode, MeasurementBasis};
use clusterloop::metrics::{entanglement_length, visibility2, visibility3, LengthOutcome};
use clusterloop::noise::NoiseConfig;
use clusterloop::qstate::{DensityMatrix, PureState, DEFAULT_DENSE_CAP};
use clusterloop::C64;
use serde_json::Value;

use crate::config::{CliError, CliResult, Search};
use crate::format::{num, Report, Table};

/// Text ready to write, plus what a plot script needs.
pub struct Output {
    pub text: String,
    pub table: Option<(Table, Vec<usize>)>,
    pub cap_reached: bool,
}

impl Output {
    fn json(report: &Report) -> Self {
        Output {
            text: report.to_json(),
            table: None,
            cap_reached: false,
        }
    }

    fn csv(table: Table, plot_columns: Vec<usize>, cap_reached: bool) -> Self {
        Output {
            text: table.to_csv(),
            table: Some((table, plot_columns)),
            cap_reached,
        }
    }
}

fn describe_noise(report: &mut Report, cfg: &NoiseConfig) {
    report
        .float("modes", cfg.num_modes)
        .float("depol", cfg.depolarizing_p)
        .float("pbs_th2", cfg.pbs.t_h * cfg.pbs.t_h)
        .float("pbs_rv2", cfg.pbs.r_v * cfg.pbs.r_v)
        .set(
            "cnot_eps",
            cfg.cnot_epsilon.map_or(Value::Null, Value::from),
        )
        .float("two_photon", cfg.two_photon_p)
        .float("phase_deg", cfg.loop_phase.to_degrees());
}

fn mode_name(mode: GrowthMode) -> &'static str {
    match mode {
        GrowthMode::Cluster => "cluster",
        GrowthMode::Ghz => "ghz",
    }
}

/// Principal eigenvector of `rho` with the first non-negligible amplitude made real and positive.
fn dominant_amplitudes(rho: &DensityMatrix) -> (Vec<C64>, f64) {
    let eig = rho.entries().clone().symmetric_eigen();
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let v: Vec<C64> = eig.eigenvectors.column(k).iter().copied().collect();
    let pivot = v
        .iter()
        .find(|a| a.norm() > 1e-9)
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let fix = pivot.conj() / pivot.norm();
    (v.into_iter().map(|a| a * fix).collect(), rho.purity())
}

pub fn grow(
    n: usize,
    cfg: &NoiseConfig,
    mode: GrowthMode,
    basis: MeasurementBasis,
    full: bool,
    dump: bool,
) -> CliResult<Output> {
    let dense = full || dump;
    let merit = if dense {
        full_report(n, cfg, mode, basis)?
    } else {
        reduced_report(n, cfg, basis, mode)?
    };
    let mut report = Report::new("grow");
    report
        .set("n", n)
        .set("mode", mode_name(mode))
        .set("basis", basis.name())
        .set("backend", if dense { "dense" } else { "reduced" })
        .float("c_end", merit.c_end)
        .set("fidelity", merit.fidelity.map_or(Value::Null, Value::from))
        .float("postselect_prob", merit.postselect_prob())
        .float("ln_postselect", merit.ln_postselect)
        .float("conditioning_prob", merit.ln_conditioning.exp());
    describe_noise(&mut report, cfg);

    if n <= 3 || dump {
        let state = grow_full(n, cfg, mode)?.state;
        match n {
            2 => {
                report.float("v2", visibility2(&state)?.v2);
            }
            3 => {
                let v = visibility3(&state)?;
                report.float("v2", v.v2).float("v3", v.visibility());
            }
            _ => {}
        }
        if dump {
            let (amps, purity) = dominant_amplitudes(&state);
            let mut labels = Vec::new();
            let mut re = Vec::new();
            let mut im = Vec::new();
            for (i, a) in amps.iter().enumerate() {
                if a.norm() > 1e-12 {
                    labels.push(Value::from(PureState::basis_label(i, n)));
                    re.push(a.re);
                    im.push(a.im);
                }
            }
            report
                .float("purity", purity)
                .set("amp_labels", Value::Array(labels))
                .floats("amp_re", &re)
                .floats("amp_im", &im);
        }
    }
    Ok(Output::json(&report))
}

fn length_cell(outcome: LengthOutcome) -> String {
    match outcome {
        LengthOutcome::Finite(l) => l.to_string(),
        LengthOutcome::CapReached(_) => "cap".into(),
    }
}

pub fn length(cfg: &NoiseConfig, search: &Search) -> CliResult<Output> {
    let threshold = search.threshold_for(cfg);
    let res = entanglement_length(cfg, search.basis, threshold, search.cap)?;
    let mut table = Table::new([
        "axis_value",
        "L",
        "threshold",
        "basis",
        "last_above",
        "first_below",
    ]);
    table.push(vec![
        num(cfg.num_modes),
        length_cell(res.length),
        num(threshold),
        search.basis.name().into(),
        res.last_above.map_or(String::new(), |n| n.to_string()),
        res.first_below.map_or(String::new(), |n| n.to_string()),
    ]);
    Ok(Output::csv(table, vec![1], res.length.is_cap()))
}

pub struct AxisRange {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub log: bool,
}

impl AxisRange {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        if self.points == 0 {
            return Err(CliError::Usage("--points must be positive".into()));
        }
        if self.log {
            if !(self.from > 0.0 && self.to > 0.0) {
                return Err(CliError::Usage(
                    "log spacing needs positive end points".into(),
                ));
            }
            Ok(linspace(self.from.ln(), self.to.ln(), self.points)
                .into_iter()
                .map(f64::exp)
                .collect())
        } else {
            Ok(linspace(self.from, self.to, self.points))
        }
    }
}

fn opt_cell(x: Option<f64>) -> String {
    x.map_or(String::new(), num)
}

pub fn fig2(baseline: &NoiseConfig, search: &Search, range: &AxisRange) -> CliResult<Output> {
    let threshold = search.threshold_for(baseline);
    let grid = SweepGrid {
        axis: SweepAxis::Modes,
        values: range.values()?,
        metric: SweepMetric::Length,
        baseline: *baseline,
        basis: search.basis,
        threshold: Some(threshold),
        cap: search.cap,
        n: 2,
    };
    let rows = run_sweep(&grid)?;
    let mut table = Table::new(["axis_value", "L", "threshold", "basis"]);
    let mut cap_reached = false;
    for row in &rows {
        let l = row.length.expect("length metric");
        cap_reached |= l.is_cap();
        table.push(vec![
            num(row.value),
            length_cell(l),
            num(threshold),
            search.basis.name().into(),
        ]);
    }
    Ok(Output::csv(table, vec![1], cap_reached))
}

pub fn sweep(
    baseline: &NoiseConfig,
    search: &Search,
    axis: SweepAxis,
    metric: SweepMetric,
    n: usize,
    range: &AxisRange,
) -> CliResult<Output> {
    let grid = SweepGrid {
        axis,
        values: range.values()?,
        metric,
        baseline: *baseline,
        basis: search.basis,
        threshold: search.threshold,
        cap: search.cap,
        n,
    };
    let rows = run_sweep(&grid)?;
    let mut table = Table::new([
        axis.name(),
        "n",
        "L",
        "c_end",
        "fidelity",
        "postselect_prob",
        "success_bound",
        "basis",
    ]);
    let mut cap_reached = false;
    for SweepRow {
        value,
        n,
        length,
        c_end,
        fidelity,
        postselect_prob,
        success_bound,
        ..
    } in rows
    {
        cap_reached |= length.is_some_and(|l| l.is_cap());
        table.push(vec![
            num(value),
            n.map_or(String::new(), |n| n.to_string()),
            length.map_or(String::new(), length_cell),
            opt_cell(c_end),
            opt_cell(fidelity),
            opt_cell(postselect_prob),
            opt_cell(success_bound),
            search.basis.name().into(),
        ]);
    }
    let column = match metric {
        SweepMetric::Length => 2,
        SweepMetric::EndToEnd => 3,
        SweepMetric::SuccessBound => 6,
    };
    Ok(Output::csv(table, vec![column], cap_reached))
}

pub fn fringe(
    photons: usize,
    phase_deg: f64,
    model: OverlapModel,
    range: &AxisRange,
) -> CliResult<Output> {
    let spec = FringeSpec {
        delays: range.values()?,
        model,
        photons,
        phase: phase_deg.to_radians(),
    };
    let points = delay_scan(&spec)?;
    let labels: Vec<String> = points
        .first()
        .map(|p| {
            p.report
                .outcome_probs
                .iter()
                .map(|(l, _)| format!("P_{l}"))
                .collect()
        })
        .unwrap_or_default();
    let v_name = if photons == 2 { "v2" } else { "v3" };
    let mut header = vec![
        "delay".to_string(),
        "indistinguishability".into(),
        "coincidence_prob".into(),
        v_name.into(),
    ];
    header.extend(labels);
    let mut table = Table::new(header);
    for pt in &points {
        let mut row = vec![
            num(pt.delay),
            num(pt.indistinguishability),
            num(pt.coincidence_prob),
            num(pt.report.visibility()),
        ];
        row.extend(pt.report.outcome_probs.iter().map(|(_, p)| num(*p)));
        table.push(row);
    }
    Ok(Output::csv(table, vec![3], false))
}

pub struct SampleRequest {
    pub n: usize,
    pub mode: GrowthMode,
    pub shots: u64,
    pub seed: u64,
    pub analysis: AnalysisBasis,
}

pub fn sample(cfg: &NoiseConfig, req: &SampleRequest) -> CliResult<Output> {
    if req.n > DEFAULT_DENSE_CAP {
        return Err(clusterloop::Error::Capacity {
            requested: req.n,
            cap: DEFAULT_DENSE_CAP,
        }
        .into());
    }
    let state = grow_full(req.n, cfg, req.mode)?.state;
    let rep = sample_detections(&state, req.shots, req.seed, req.analysis)?;
    let mut report = Report::new("sample");
    report
        .set("n", req.n)
        .set("mode", mode_name(req.mode))
        .set(
            "analysis",
            if req.analysis == AnalysisBasis::PM {
                "pm"
            } else {
                "hv"
            },
        )
        .set("shots", rep.shots)
        .set("seed", rep.seed)
        .set("labels", Value::from(rep.labels.clone()))
        .floats("probabilities", &rep.probabilities)
        .set("counts", Value::from(rep.counts.clone()))
        .floats("count_errors", &rep.count_errors())
        .floats("frequencies", &rep.frequencies())
        .set(
            "visibility",
            rep.visibility.map_or(Value::Null, Value::from),
        )
        .set(
            "visibility_error",
            rep.visibility_error.map_or(Value::Null, Value::from),
        )
        .set("slot_histogram", Value::from(rep.slot_histogram.clone()))
        .float("truncated_mass", rep.truncated_mass);
    describe_noise(&mut report, cfg);
    Ok(Output::json(&report))
}

pub fn rate(eta: f64, pulse_rate: f64, n_from: usize, n_to: usize) -> CliResult<Output> {
    if n_to < n_from {
        return Err(CliError::Usage("--n-to must not be below --n".into()));
    }
    let ns: Vec<usize> = (n_from..=n_to).collect();
    let rates = ns
        .iter()
        .map(|&n| event_rate(eta, pulse_rate, n))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut report = Report::new("rate");
    report
        .float("eta", eta)
        .float("pulse_rate", pulse_rate)
        .set("formula", "eta^n * pulse_rate")
        .set("n", Value::from(ns))
        .floats("rate", &rates);
    Ok(Output::json(&report))
}
