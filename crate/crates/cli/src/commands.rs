use std::path::Path;

use ghostshield::detection::{
    analyze_visibility, detection_curve, detection_probability, evaluate_d_fixed, false_alarm_probability,
    single_photon_worst_case, visibility, worst_case_d, JammingScenario, SearchSettings,
};
use ghostshield::ghostsim::{
    compute_metrics, estimate_weight, measure_region_visibility, recover, simulate_clean, simulate_pair_varying,
    CountImage, ImageMeta, ImageMetrics, Intrusion, RegionKind, Scene,
};
use ghostshield::pnm;
use ghostshield::polarization::BellDiagonalParams;
use ghostshield::raster::Raster;
use serde::Serialize;

use crate::config::{resolve_region, ExperimentConfig, Weight, WorstCaseMode};
use crate::error::{CliError, CliResult};
use crate::output::{sig6, OutputDir};

#[derive(Serialize)]
struct Mu {
    mu_x: f64,
    mu_y: f64,
    mu_z: f64,
}

impl From<BellDiagonalParams> for Mu {
    fn from(p: BellDiagonalParams) -> Self {
        Self { mu_x: p.mu_x, mu_y: p.mu_y, mu_z: p.mu_z }
    }
}

#[derive(Serialize)]
struct Settings {
    mu_points: usize,
    theta_points: usize,
    level_band: f64,
    refine_tol: f64,
    max_refine_evals: usize,
    r_bounds: [f64; 2],
    root_tol: f64,
}

impl From<SearchSettings> for Settings {
    fn from(s: SearchSettings) -> Self {
        Self {
            mu_points: s.mu_points,
            theta_points: s.theta_points,
            level_band: s.level_band,
            refine_tol: s.refine_tol,
            max_refine_evals: s.max_refine_evals,
            r_bounds: [s.r_bounds.0, s.r_bounds.1],
            root_tol: s.root_tol,
        }
    }
}

#[derive(Serialize)]
struct CurveWitness {
    pair: String,
    level: f64,
    d: Option<f64>,
    thetas: Option<[f64; 2]>,
    intruder: Option<Mu>,
    r: Option<f64>,
    achieved_level: Option<f64>,
}

pub fn detect_curve(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<String> {
    let noise = cfg.noise()?;
    let params = cfg.test_params()?;
    let search = cfg.search_settings();
    let mut csv = String::from("pair_name,level,d,p_detect,p_false_alarm,note\n");
    let mut witnesses = Vec::new();
    for pair in &cfg.pairs {
        let (a, b) = (pair.first.build()?, pair.second.build()?);
        for point in detection_curve((&a, &b), &cfg.curve.levels, &noise, &params, &search)? {
            let level = sig6(point.level);
            match point.value {
                Some(v) => {
                    csv += &format!(
                        "{},{level},{},{},{},\n",
                        pair.name,
                        sig6(v.d),
                        sig6(v.p_detect),
                        sig6(v.p_false_alarm)
                    );
                    witnesses.push(CurveWitness {
                        pair: pair.name.clone(),
                        level: point.level,
                        d: Some(v.d),
                        thetas: Some(v.worst.thetas),
                        intruder: Some(v.worst.intruder.into()),
                        r: Some(v.worst.r),
                        achieved_level: Some(v.worst.level),
                    });
                }
                None => {
                    csv += &format!("{},{level},,,,infeasible level\n", pair.name);
                    witnesses.push(CurveWitness {
                        pair: pair.name.clone(),
                        level: point.level,
                        d: None,
                        thetas: None,
                        intruder: None,
                        r: None,
                        achieved_level: None,
                    });
                }
            }
        }
    }
    let path = out.write("curve.csv", csv.as_bytes())?;
    out.write_json("curve_witnesses.json", &witnesses)?;
    Ok(format!("wrote {} rows to {}", witnesses.len(), path.display()))
}

#[derive(Serialize)]
struct PairWorstCase {
    mode: &'static str,
    pair: String,
    target_level: Option<f64>,
    d: f64,
    p_detect: f64,
    p_false_alarm: f64,
    gap: f64,
    thetas: [f64; 2],
    intruder: Mu,
    r: f64,
    achieved_level: f64,
    v_clean: f64,
    v_jammed: f64,
    settings: Settings,
}

#[derive(Serialize)]
struct SinglePhotonWorstCase {
    mode: &'static str,
    d: f64,
    p_detect: f64,
    p_false_alarm: f64,
    theta: f64,
    r: f64,
    intruder_alpha: f64,
    intruder_beta: f64,
    overlap: f64,
    v_clean: f64,
    v_jammed: f64,
    settings: Settings,
}

pub fn worst_case(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<String> {
    let noise = cfg.noise()?;
    let params = cfg.test_params()?;
    let search = cfg.search_settings();
    let wc = &cfg.worst_case;
    match wc.mode {
        WorstCaseMode::Pair => {
            let (a, b) = cfg.pair(&wc.pair)?;
            let target = wc.constrained.then_some(wc.target_level);
            let w = worst_case_d(&a, &b, target, &noise, &search)?;
            let report = PairWorstCase {
                mode: "pair",
                pair: wc.pair.clone(),
                target_level: target,
                d: w.d,
                p_detect: detection_probability(w.d, &params),
                p_false_alarm: false_alarm_probability(w.d, &params),
                gap: w.gap,
                thetas: w.thetas,
                intruder: w.intruder.into(),
                r: w.r,
                achieved_level: w.level,
                v_clean: w.v_clean,
                v_jammed: w.v_jammed,
                settings: search.into(),
            };
            out.write_json("worst_case.json", &report)?;
            Ok(format!(
                "d = {}  P_d = {}  P_err = {}\nthetas = ({}, {})  intruder mu = ({}, {}, {})  r = {}  level = {}",
                sig6(report.d),
                sig6(report.p_detect),
                sig6(report.p_false_alarm),
                sig6(w.thetas[0]),
                sig6(w.thetas[1]),
                sig6(w.intruder.mu_x),
                sig6(w.intruder.mu_y),
                sig6(w.intruder.mu_z),
                sig6(w.r),
                sig6(w.level)
            ))
        }
        WorstCaseMode::SinglePhoton => {
            let (d, w) = single_photon_worst_case(wc.r, &noise, &search)?;
            let report = SinglePhotonWorstCase {
                mode: "single-photon",
                d,
                p_detect: detection_probability(d, &params),
                p_false_alarm: false_alarm_probability(d, &params),
                theta: w.theta,
                r: w.r,
                intruder_alpha: w.intruder.alpha,
                intruder_beta: w.intruder.beta,
                overlap: w.overlap,
                v_clean: w.v_clean,
                v_jammed: w.v_jammed,
                settings: search.into(),
            };
            out.write_json("worst_case.json", &report)?;
            Ok(format!(
                "d = {}  P_d = {}  theta = {}  intruder (alpha, beta) = ({}, {})  overlap = {}",
                sig6(d),
                sig6(report.p_detect),
                sig6(w.theta),
                sig6(w.intruder.alpha),
                sig6(w.intruder.beta),
                sig6(w.overlap)
            ))
        }
    }
}

#[derive(Serialize)]
struct MetricsJson {
    mean_dark_per_pixel: f64,
    noise_level: f64,
    signal_mean: f64,
    snr: f64,
    residual_false_mean: f64,
}

impl From<ImageMetrics> for MetricsJson {
    fn from(m: ImageMetrics) -> Self {
        Self {
            mean_dark_per_pixel: m.mean_dark_per_pixel,
            noise_level: m.noise_level,
            signal_mean: m.signal_mean,
            snr: m.snr,
            residual_false_mean: m.residual_false_mean,
        }
    }
}

#[derive(Serialize)]
struct SimulationReport {
    seed: u64,
    scene_digest: String,
    clean: MetricsJson,
    recovered: MetricsJson,
    overlap_visibility: Option<f64>,
    predicted_clean_visibility: f64,
    predicted_jammed_visibility: f64,
    predicted_d: f64,
}

fn round_counts(img: &Raster<f64>) -> Raster<u64> {
    img.map(|v| v.round() as u64)
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<String> {
    let scene = cfg.scene()?;
    let (rho1, rho2) = cfg.pair(&cfg.simulate.pair)?;
    let analyzers = cfg.analyzer_config()?;
    let rho_e = cfg.intruder.state.build()?;
    let intrusion = Intrusion::new(rho_e.clone(), cfg.intruder.r)?;
    let (j1, j2) =
        simulate_pair_varying(&scene, &rho1, &rho2, &intrusion, cfg.intruder.false_gain, &analyzers, cfg.seed)?;
    let clean = simulate_clean(&scene, &rho1, &analyzers, cfg.seed)?;
    let recovered = recover(&j1, &j2, 1.0)?;
    let metrics = compute_metrics(&clean, &recovered, &scene)?;

    let overlap = scene.region(RegionKind::Overlap);
    let overlap_visibility =
        if overlap.is_empty() { None } else { Some(measure_region_visibility(&j1, &j2, &overlap)?) };
    let scenario = JammingScenario::new(rho1, rho2, rho_e, cfg.intruder.r, analyzers)?;
    let [p1, p2, _] = scenario.probabilities()?;
    let [q1, q2] = scenario.jammed_probabilities()?;
    let report = SimulationReport {
        seed: cfg.seed,
        scene_digest: scene.digest(),
        clean: metrics.clean.into(),
        recovered: metrics.recovered.into(),
        overlap_visibility,
        predicted_clean_visibility: visibility(p1, p2)?,
        predicted_jammed_visibility: visibility(q1, q2)?,
        predicted_d: evaluate_d_fixed(&scenario, &cfg.noise()?)?,
    };

    let (enc, png) = (cfg.output.pgm_encoding, cfg.output.png);
    out.write_gray("jammed_1", j1.counts(), enc, png)?;
    out.write_gray("jammed_2", j2.counts(), enc, png)?;
    out.write_gray("recovered", &round_counts(&recovered.image), enc, png)?;
    out.write_gray("clean", clean.counts(), enc, png)?;
    out.write_json("metrics.json", &report)?;
    Ok(format!(
        "clean: dark/pixel = {}  noise = {}  snr = {}\nrecovered: noise = {}  snr = {}  false residual = {}\noverlap visibility = {}",
        sig6(metrics.clean.mean_dark_per_pixel),
        sig6(metrics.clean.noise_level),
        sig6(metrics.clean.snr),
        sig6(metrics.recovered.noise_level),
        sig6(metrics.recovered.snr),
        sig6(metrics.recovered.residual_false_mean),
        overlap_visibility.map_or("n/a".into(), sig6)
    ))
}

#[derive(Serialize)]
struct AnalysisReport {
    verdict: &'static str,
    v_expected: f64,
    v_alternative: f64,
    v_observed: f64,
    d: f64,
    p_detect: f64,
    p_false_alarm: f64,
    region_pixels: usize,
    weight_used: f64,
}

fn read_image(path: &Path) -> CliResult<CountImage> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let counts = pnm::read_pgm(std::io::BufReader::new(file))
        .map_err(|source| CliError::Input { path: path.into(), source })?;
    Ok(CountImage::new(counts, ImageMeta { label: path.display().to_string(), ..Default::default() }))
}

fn regions_for(spec: &str, scene: &Scene, shape: (usize, usize)) -> CliResult<Vec<usize>> {
    if scene.shape() != shape {
        return Err(ghostshield::Error::ShapeMismatch { left: shape, right: scene.shape() }.into());
    }
    resolve_region(spec, scene)
}

pub fn analyze(cfg: &ExperimentConfig, first: &Path, second: &Path, out: &mut OutputDir) -> CliResult<String> {
    let img1 = read_image(first)?;
    let img2 = read_image(second)?;
    img1.counts().ensure_same_shape(img2.counts())?;
    let scene = cfg.scene()?;
    let region = regions_for(&cfg.analyze.region, &scene, img1.shape())?;
    let v_observed = measure_region_visibility(&img1, &img2, &region)?;
    let a = &cfg.analyze;
    let report = analyze_visibility(a.expected_visibility, a.alternative_visibility, v_observed, &cfg.noise()?, &cfg.test_params()?)?;

    let weight = match cfg.weight_mode()? {
        Weight::Fixed(w) => w,
        Weight::Estimate => estimate_weight(&img1, &img2, &regions_for(&a.weight_region, &scene, img1.shape())?)?,
    };
    let recovered = recover(&img1, &img2, weight)?;
    out.write_gray("recovered", &round_counts(&recovered.image), cfg.output.pgm_encoding, cfg.output.png)?;
    out.write_json(
        "analysis.json",
        &AnalysisReport {
            verdict: report.verdict.as_str(),
            v_expected: report.v_expected,
            v_alternative: a.alternative_visibility,
            v_observed,
            d: report.d,
            p_detect: report.p_detect,
            p_false_alarm: report.p_false_alarm,
            region_pixels: region.len(),
            weight_used: weight,
        },
    )?;
    Ok(format!(
        "verdict: {}  observed visibility = {}  d = {}  P_d = {}  P_err = {}  weight = {}",
        report.verdict.as_str(),
        sig6(v_observed),
        sig6(report.d),
        sig6(report.p_detect),
        sig6(report.p_false_alarm),
        sig6(weight)
    ))
}
