//! Check registry: every suite turns the library diagnostics into records.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use kslab::convergence::*;
use kslab::energy::*;
use kslab::graphform::*;
use kslab::poincare::*;
use kslab::smoothing::*;
use kslab::space::{check_mass_bounds, estimate_doubling, CenterPolicy, CloudOrigin, DoublingProfile};
use kslab::{MeasuredPointCloud, ScalarField, ScaleGrid, SpaceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::bundle::{CheckRecord, SpaceInfo, Status, Summary, WalkDimInfo};
use crate::config::{ExperimentConfig, Suite, Tolerances, WalkDim};

/// Modes kept by partial eigensolves.
const SPECTRUM_MODES: usize = 60;
/// First perturbation mode of the liminf probe.
const PROBE_START: usize = 20;
/// Band of the random compactness family.
const COMPACTNESS_BAND: usize = 20;

type CsvFile = (String, String);

fn csv_of(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> String {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn factor(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        1.0
    } else {
        (a / b).max(b / a)
    }
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

struct Record {
    suite: Suite,
    name: String,
    theorem: &'static str,
    status: Status,
    constant: Option<f64>,
    details: BTreeMap<String, Value>,
    csv: Option<CsvFile>,
}

impl Record {
    fn new(suite: Suite, name: impl Into<String>, theorem: &'static str) -> Self {
        Record {
            suite,
            name: name.into(),
            theorem,
            status: Status::Skipped,
            constant: None,
            details: BTreeMap::new(),
            csv: None,
        }
    }

    fn detail(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.details.insert(key.into(), v.into());
        self
    }

    fn judge(mut self, constant: f64, pass: bool) -> Self {
        self.constant = Some(constant);
        self.status = if pass { Status::Pass } else { Status::Fail };
        self
    }

    fn skip(self, reason: &str) -> Self {
        self.detail("skipped", reason)
    }

    fn failed(mut self, err: impl ToString) -> Self {
        self.status = Status::Fail;
        self.detail("error", err.to_string())
    }

    fn attach(mut self, file: String, body: String) -> Self {
        self.csv = Some((file, body));
        self
    }
}

/// Runs one check body, turning library errors into a failed record.
fn attempt(base: Record, body: impl FnOnce(Record) -> kslab::Result<Record>) -> Record {
    let (suite, name, theorem) = (base.suite, base.name.clone(), base.theorem);
    body(base).unwrap_or_else(|e| Record::new(suite, name, theorem).failed(e))
}

pub struct Context {
    cfg: ExperimentConfig,
    tol: Tolerances,
    seed: u64,
    cloud: MeasuredPointCloud,
    grid: ScaleGrid,
    form: Option<GraphDirichletForm>,
    spectrum: OnceCell<Result<Spectrum, String>>,
    doubling: OnceCell<Result<DoublingProfile, String>>,
    d_w: WalkDimInfo,
    fields: Vec<(String, ScalarField)>,
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, String> {
        let cloud = cfg.build_space()?;
        let grid = cfg.scale_grid(&cloud)?;
        if grid.admissible(&cloud).len() < 2 {
            return Err(format!(
                "scale grid keeps fewer than 2 admissible scales above {:e}",
                cloud.min_scale()
            ));
        }
        let form = default_form(&cloud).ok();
        let mut ctx = Context {
            tol: cfg.tolerances,
            seed: cfg.seed(),
            cfg,
            cloud,
            grid,
            form,
            spectrum: OnceCell::new(),
            doubling: OnceCell::new(),
            d_w: WalkDimInfo {
                value: 2.0,
                provenance: String::new(),
                ks_scaling: None,
                eigen_ratio: None,
                agree: None,
            },
            fields: Vec::new(),
        };
        ctx.fields = ctx.test_fields().map_err(|e| e.to_string())?;
        ctx.d_w = ctx.resolve_walk_dim();
        Ok(ctx)
    }

    pub fn space_info(&self) -> SpaceInfo {
        SpaceInfo::of(&self.cfg.space, &self.cloud)
    }

    fn spectrum(&self) -> Result<&Spectrum, String> {
        let form = self.form.as_ref().ok_or("no reference form for this space")?;
        self.spectrum
            .get_or_init(|| {
                let opts = SpectrumOptions {
                    k_max: SPECTRUM_MODES,
                    ..Default::default()
                };
                spectrum(form, &opts).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn doubling(&self) -> Result<&DoublingProfile, String> {
        self.doubling
            .get_or_init(|| {
                let policy = match self.cloud.origin() {
                    CloudOrigin::SquareGrid { .. } => CenterPolicy::Interior,
                    _ => CenterPolicy::All,
                };
                estimate_doubling(&self.cloud, 200, &self.grid.scales(), self.seed, policy).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn eigenfield(&self, k: usize) -> Result<ScalarField, String> {
        let s = self.spectrum()?;
        let v = s.vectors.get(k).ok_or_else(|| format!("spectrum has no mode {k}"))?;
        ScalarField::new(v.clone()).map_err(|e| e.to_string())
    }

    /// Named nonconstant fields used across suites.
    fn test_fields(&self) -> kslab::Result<Vec<(String, ScalarField)>> {
        let c = &self.cloud;
        let mut out = Vec::new();
        match c.origin() {
            CloudOrigin::IntervalGrid { .. } => {
                out.push(("x".into(), ScalarField::from_coords(c, |p| p[0])?));
                out.push(("x_squared".into(), ScalarField::from_coords(c, |p| p[0] * p[0])?));
                out.push(("sin_pi_x".into(), ScalarField::from_coords(c, |p| (PI * p[0]).sin())?));
            }
            CloudOrigin::SquareGrid { .. } => {
                out.push(("x".into(), ScalarField::from_coords(c, |p| p[0])?));
                out.push((
                    "sin_sin".into(),
                    ScalarField::from_coords(c, |p| (PI * p[0]).sin() * (PI * p[1]).sin())?,
                ));
            }
            CloudOrigin::Gasket { .. } if self.form.is_some() => {
                for k in 1..=3 {
                    let u = self
                        .eigenfield(k)
                        .map_err(kslab::Error::Internal)?;
                    out.push((format!("u{k}"), u));
                }
            }
            _ => {
                if c.dim().is_some() {
                    out.push(("x".into(), ScalarField::from_coords(c, |p| p[0])?));
                    if c.dim() >= Some(2) {
                        out.push(("y".into(), ScalarField::from_coords(c, |p| p[1])?));
                    }
                }
                out.push(("dist_to_0".into(), ScalarField::from_ids(c, |i| c.dist(0, i))?));
            }
        }
        out.retain(|(_, f)| !f.is_constant(1e-14));
        if out.is_empty() {
            return Err(kslab::Error::AllFieldsConstant);
        }
        Ok(out)
    }

    /// Coarser cloud with half the resolution, for the eigenvalue-ratio fit.
    fn coarse_form(&self) -> Option<GraphDirichletForm> {
        let spec = match self.cloud.origin() {
            CloudOrigin::Gasket { level } if *level >= 2 => SpaceSpec::Gasket(level - 1),
            CloudOrigin::IntervalGrid { n } if n % 2 == 1 && *n >= 9 => SpaceSpec::IntervalGrid(n.div_ceil(2)),
            _ => return None,
        };
        default_form(&spec.build().ok()?).ok()
    }

    fn resolve_walk_dim(&self) -> WalkDimInfo {
        let fields: Vec<ScalarField> = self.fields.iter().map(|(_, f)| f.clone()).collect();
        let ks = fit_walk_dimension(&self.cloud, &fields, &self.grid).ok().map(|f| f.d_w_hat);
        let eigen = match (&self.form, self.coarse_form()) {
            (Some(fine), Some(coarse)) => eigen_walk_dimension(&coarse, fine).ok().map(|f| f.d_w_hat),
            _ => None,
        };
        let agree = match (ks, eigen) {
            (Some(a), Some(b)) => Some((a - b).abs() <= self.tol.walk_dim_agreement),
            _ => None,
        };
        let (value, provenance) = match self.cfg.d_w {
            WalkDim::Value(v) => (v, "explicit".to_string()),
            WalkDim::Fit(_) => match (eigen, ks) {
                (Some(e), _) => (e, "eigen_ratio".to_string()),
                (None, Some(k)) => (k, "ks_scaling".to_string()),
                (None, None) => (2.0, "default".to_string()),
            },
        };
        // energies are only defined for d_w >= 2
        let (value, provenance) = if value < 2.0 {
            (2.0, format!("{provenance}, clamped to 2"))
        } else {
            (value, provenance)
        };
        WalkDimInfo {
            value,
            provenance,
            ks_scaling: ks,
            eigen_ratio: eigen,
            agree,
        }
    }

    pub fn run(&self, suites: &[Suite]) -> (Summary, Vec<CsvFile>) {
        let mut records = Vec::new();
        for &s in suites {
            records.extend(match s {
                Suite::Doubling => self.doubling_suite(),
                Suite::Energy => self.energy_suite(),
                Suite::Smoothing => self.smoothing_suite(),
                Suite::Poincare => self.poincare_suite(),
                Suite::Graphform => self.graphform_suite(),
                Suite::Convergence => self.convergence_suite(),
                Suite::All => unreachable!("expanded by the caller"),
            });
        }
        let mut files = Vec::new();
        let checks: Vec<CheckRecord> = records
            .into_iter()
            .map(|r| {
                let csv = r.csv.map(|(name, body)| {
                    let name = format!("{}_{}.csv", r.suite, name);
                    files.push((name.clone(), body));
                    name
                });
                CheckRecord {
                    suite: r.suite,
                    name: r.name,
                    theorem: r.theorem.to_string(),
                    status: r.status,
                    constant: r.constant,
                    details: r.details,
                    csv,
                }
            })
            .collect();
        let pass = checks.iter().all(|c| c.status != Status::Fail);
        let summary = Summary {
            version: env!("CARGO_PKG_VERSION").to_string(),
            // the output location does not change results
            config: ExperimentConfig { out: None, ..self.cfg.clone() },
            space: self.space_info(),
            d_w: self.d_w.clone(),
            checks,
            pass,
        };
        (summary, files)
    }

    fn d_w(&self) -> f64 {
        self.d_w.value
    }

    // ---- doubling ----

    fn doubling_suite(&self) -> Vec<Record> {
        let s = Suite::Doubling;
        let limit = self.tol.doubling_max.or(match self.cloud.origin() {
            CloudOrigin::IntervalGrid { .. } => Some(2.1),
            CloudOrigin::SquareGrid { .. } => Some(4.4),
            _ => None,
        });
        let doubling = match self.doubling() {
            Ok(p) => {
                let pass = p.c_doubling.is_finite() && limit.is_none_or(|l| p.c_doubling <= l);
                Record::new(s, "volume_doubling", "volume doubling")
                    .judge(p.c_doubling, pass)
                    .detail("q_fit", p.q_fit)
                    .detail("limit", limit.map(Value::from).unwrap_or(Value::Null))
                    .detail("samples", p.samples.len())
                    .attach("volume_doubling".into(), csv_of(|w| p.write_csv(w)))
            }
            Err(e) => Record::new(s, "volume_doubling", "volume doubling").failed(e),
        };
        let bounds = match self.doubling() {
            Ok(p) => attempt(Record::new(s, "mass_lower_bound", "lower mass bound mu(B(x,r)) >= c r^Q"), |r| {
                let m = check_mass_bounds(p, p.q_fit)?;
                Ok(r.judge(m.worst_c, m.holds).detail("q", m.q))
            }),
            Err(e) => Record::new(s, "mass_lower_bound", "lower mass bound mu(B(x,r)) >= c r^Q").failed(e),
        };
        vec![doubling, bounds]
    }

    // ---- energy ----

    fn energy_suite(&self) -> Vec<Record> {
        let s = Suite::Energy;
        let mut out = Vec::new();
        let mut limits = Vec::new();
        for (name, f) in &self.fields {
            out.push(attempt(
                Record::new(s, format!("comparability_{name}"), "sup over scales bounded by liminf"),
                |r| {
                    let sw = energy_sweep(&self.cloud, f, self.d_w(), &Region::All, &self.grid)?;
                    let ratio = comparability_ratio(&sw)?;
                    limits.push((name.clone(), sw.proxies.fitted_limit));
                    Ok(r.judge(ratio, ratio <= self.tol.comparability_max)
                        .detail("liminf_proxy", sw.proxies.liminf_proxy)
                        .detail("limsup_proxy", sw.proxies.limsup_proxy)
                        .detail("sup_all", sw.proxies.sup_all)
                        .detail("fitted_limit", sw.proxies.fitted_limit)
                        .attach(format!("sweep_{name}"), csv_of(|w| sw.write_csv(w))))
                },
            ));
        }
        // closed-form limits on Euclidean grids with d_w = 2
        let targets: &[(&str, f64)] = match self.cloud.origin() {
            CloudOrigin::IntervalGrid { .. } => &[("x", 1.0 / 3.0), ("x_squared", 4.0 / 9.0), ("sin_pi_x", PI * PI / 6.0)],
            CloudOrigin::SquareGrid { .. } => &[("x", 0.25)],
            _ => &[],
        };
        let calib = Record::new(s, "limit_calibration", "energy limit equals a constant times the Dirichlet energy");
        out.push(if targets.is_empty() {
            calib.skip("no closed-form limit for this space")
        } else if self.d_w() != 2.0 {
            calib.skip("closed-form limits assume d_w = 2")
        } else {
            let mut worst = 0.0f64;
            let mut rec = calib;
            for (name, target) in targets {
                if let Some((_, lim)) = limits.iter().find(|(n, _)| n == name) {
                    worst = worst.max((lim / target - 1.0).abs());
                    rec = rec.detail(name, json!({ "fitted_limit": lim, "target": target }));
                }
            }
            rec.judge(worst, worst <= self.tol.calibration_rel)
        });
        let fields: Vec<ScalarField> = self.fields.iter().map(|(_, f)| f.clone()).collect();
        out.push(attempt(
            Record::new(s, "walk_dimension_scaling", "walk dimension from energy scaling"),
            |r| {
                let fit = fit_walk_dimension(&self.cloud, &fields, &self.grid)?;
                Ok(r.judge(fit.d_w_hat, fit.d_w_hat.is_finite())
                    .detail("residual", fit.residual)
                    .detail("estimates", fit.estimates.clone()))
            },
        ));
        out
    }

    // ---- smoothing ----

    fn step_field(&self) -> kslab::Result<ScalarField> {
        let c = &self.cloud;
        let cut = 0.37 * c.diameter();
        ScalarField::from_ids(c, |i| if c.dist(0, i) < cut { 0.0 } else { 1.0 })
    }

    fn smoothing_suite(&self) -> Vec<Record> {
        let s = Suite::Smoothing;
        let diam = self.cloud.diameter();
        let floor = self.cloud.min_scale();
        let mut out = Vec::new();
        let mut eps: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|e| e * diam).filter(|&e| e >= floor).collect();
        if eps.len() < 2 {
            // coarse clouds: stay near the resolution, where nets still hold many balls
            eps = vec![2.0 * floor, std::f64::consts::SQRT_2 * floor, floor];
        }
        let moll = Record::new(s, "mollifier_estimates", "mollifier L2 and Lipschitz estimates");
        out.push(if eps.len() < 2 {
            moll.skip("fewer than two resolvable epsilons")
        } else {
            attempt(moll, |r| {
                let f = self.step_field()?;
                let reps = eps
                    .iter()
                    .map(|&e| mollifier_estimates(&self.cloud, &f, e))
                    .collect::<kslab::Result<Vec<_>>>()?;
                let lip: Vec<f64> = reps.iter().map(|r| r.lip_bound_ratio).collect();
                let l2: Vec<f64> = reps.iter().map(|r| r.l2_bound_ratio).collect();
                let errs: Vec<f64> = reps.iter().map(|r| r.l2_error()).collect();
                let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
                let worst = spread(&lip).max(spread(&l2));
                let mut csv = String::from("epsilon,lip_ratio,l2_ratio,l2_error\n");
                for r in &reps {
                    csv.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.epsilon, r.lip_bound_ratio, r.l2_bound_ratio, r.l2_error()));
                }
                Ok(r.judge(worst, worst <= self.tol.mollifier_stability && decreasing)
                    .detail("field", "step")
                    .detail("lip_ratios", lip)
                    .detail("l2_ratios", l2)
                    .detail("l2_errors", errs)
                    .attach("mollifier_estimates".into(), csv))
            })
        });
        let cut = Record::new(s, "controlled_cutoff", "controlled cutoff functions");
        let e1 = (diam / 8.0).max(2.0 * floor);
        let e2 = e1 / 2.0;
        out.push(if e1 > diam / 2.0 {
            cut.skip("cloud too coarse for two dyadic epsilons")
        } else {
            attempt(cut, |r| {
                let mut worst = Vec::new();
                let mut csv = String::from("epsilon,center,quotient\n");
                for e in [e1, e2] {
                    let pou = partition_of_unity(&self.cloud, &build_net(&self.cloud, e)?)?;
                    let rep = check_controlled_cutoff(&self.cloud, &pou, self.d_w(), &self.grid)?;
                    for (c, q) in pou.net.centers.iter().zip(&rep.quotients) {
                        csv.push_str(&format!("{e:e},{c},{q:e}\n"));
                    }
                    worst.push(rep.worst);
                }
                let f = factor(worst[0], worst[1]);
                Ok(r.judge(f, f <= self.tol.cutoff_stability)
                    .detail("epsilons", vec![e1, e2])
                    .detail("worst", worst)
                    .attach("controlled_cutoff".into(), csv))
            })
        });
        out
    }

    // ---- poincare ----

    fn poincare_suite(&self) -> Vec<Record> {
        let s = Suite::Poincare;
        let (fname, f) = &self.fields[0];
        let balls = sample_balls(&self.cloud, DEFAULT_CENTERS, DEFAULT_LAMBDA, false, self.seed);
        let mut out = Vec::new();
        for (mode, tag, theorem) in [
            (PoincareMode::Lip, "lip", "2-Poincare inequality, Lipschitz slopes"),
            (PoincareMode::Ks, "ks", "2-Poincare inequality, Korevaar-Schoen energies"),
            (PoincareMode::EnergyMeasure, "em", "2-Poincare inequality, energy measures"),
        ] {
            let name = format!("poincare_{tag}");
            let rec = Record::new(s, name.clone(), theorem);
            if mode == PoincareMode::EnergyMeasure && self.form.is_none() {
                out.push(rec.skip("no reference form for this space"));
                continue;
            }
            out.push(attempt(rec, |r| {
                let mut opts = PoincareOptions::new(mode, self.d_w());
                opts.grid = Some(self.grid);
                let rep = poincare_check(&self.cloud, f, &opts, &balls, self.form.as_ref())?;
                let ok = rep.c_best.is_finite() && rep.samples.iter().any(|s| s.ratio.is_some());
                Ok(r.judge(rep.c_best, ok)
                    .detail("field", fname.as_str())
                    .detail("lambda", rep.lambda)
                    .detail("samples", rep.samples.len())
                    .attach(name, csv_of(|w| rep.write_csv(w))))
            }));
        }
        let radius = self.cloud.diameter() / 4.0;
        out.push(attempt(
            Record::new(s, "maximal_weak_l2", "maximal function is weak-L2 bounded"),
            |r| {
                let m = maximal_function(&self.cloud, f, radius, self.d_w(), &radius_grid(&self.cloud), &self.grid)?;
                let rep = weak_l2_check(&self.cloud, &m, f, self.d_w(), &default_thresholds(&m), &self.grid)?;
                let mut csv = String::from("threshold,quotient\n");
                for (t, q) in rep.thresholds.iter().zip(&rep.quotients) {
                    csv.push_str(&format!("{t:e},{q:e}\n"));
                }
                Ok(r.judge(rep.max_quotient, rep.max_quotient.is_finite())
                    .detail("R", radius)
                    .detail("energy", rep.energy)
                    .attach("maximal_weak_l2".into(), csv))
            },
        ));
        let rho = (self.cloud.diameter() / 8.0).max(4.0 * self.cloud.min_scale());
        let tele = Record::new(s, "telescoping", "telescoping estimate via the maximal function");
        out.push(if rho > self.cloud.diameter() / 2.0 {
            tele.skip("cloud too coarse for a dyadic chain")
        } else {
            attempt(tele, |r| {
                let x = self.cloud.len() / 3;
                let rep = telescoping_bound(&self.cloud, f, x, rho, self.d_w(), DEFAULT_LAMBDA, &self.grid)?;
                Ok(r.judge(rep.c_report, rep.c_report <= self.tol.telescope_c)
                    .detail("center", x)
                    .detail("rho", rho)
                    .detail("lhs", rep.lhs)
                    .detail("rhs", rep.rhs))
            })
        });
        out
    }

    // ---- graphform ----

    fn heat_window(&self, spec: &Spectrum) -> TimeWindow {
        let unit = self.cloud.mesh().powf(self.d_w());
        let mut t_max = 160.0 * unit;
        if let Some(gap) = spec.gap() {
            t_max = t_max.min(1.0 / gap);
        }
        TimeWindow {
            t_min: t_max / 10.0,
            t_max,
            count: 10,
            tail_cutoff: TAIL_CUTOFF,
            metric: match self.cloud.origin() {
                CloudOrigin::Gasket { .. } => PairMetric::Geodesic,
                _ => PairMetric::Cloud,
            },
        }
    }

    fn graphform_suite(&self) -> Vec<Record> {
        let s = Suite::Graphform;
        let names = [
            ("spectrum", "spectral decomposition of the generator"),
            ("walk_dimension_agreement", "walk dimension from eigenvalue ratios"),
            ("heat_kernel_fit", "sub-Gaussian heat kernel estimates"),
            ("intrinsic_metric", "intrinsic metric comparable to the metric"),
            ("gamma_vs_lip", "energy density bounded by the Lipschitz slope"),
        ];
        let Some(form) = self.form.as_ref() else {
            return names
                .iter()
                .map(|(n, t)| Record::new(s, *n, t).skip("no reference form for this space"))
                .collect();
        };
        let mut out = Vec::new();
        let spec = match self.spectrum() {
            Ok(sp) => sp,
            Err(e) => return vec![Record::new(s, names[0].0, names[0].1).failed(e)],
        };
        out.push(
            Record::new(s, names[0].0, names[0].1)
                .judge(spec.max_residual(), spec.max_residual() <= 1e-6)
                .detail("modes", spec.len())
                .detail("complete", spec.complete)
                .detail("gap", spec.gap().map(Value::from).unwrap_or(Value::Null))
                .attach("spectrum".into(), csv_of(|w| spec.write_csv(w))),
        );

        let agree = Record::new(s, names[1].0, names[1].1);
        out.push(match (self.d_w.eigen_ratio, self.d_w.ks_scaling) {
            (Some(e), Some(k)) => agree
                .judge((e - k).abs(), (e - k).abs() <= self.tol.walk_dim_agreement)
                .detail("eigen_ratio", e)
                .detail("ks_scaling", k),
            _ => agree.skip("needs a coarser level of the same family"),
        });

        let heat = Record::new(s, names[2].0, names[2].1);
        let heat_ok = matches!(self.cloud.origin(), CloudOrigin::Gasket { .. } | CloudOrigin::IntervalGrid { .. });
        out.push(if !heat_ok || !spec.complete {
            heat.skip("heat-kernel fit runs on complete spectra of gaskets and interval grids")
        } else {
            attempt(heat, |r| {
                let n = self.cloud.len();
                let (sx, sy) = (n / 30 + 1, n / 100 + 1);
                let pairs: Vec<(usize, usize)> = (0..n)
                    .step_by(sx)
                    .flat_map(|x| (0..n).step_by(sy).map(move |y| (x, y)))
                    .collect();
                let fit = fit_subgaussian(form, spec, &self.cloud, &self.heat_window(spec), &pairs)?;
                let gap = (fit.beta_fit - fit.tied_exponent()).abs();
                Ok(r.judge(fit.residual, fit.residual <= self.tol.heat_residual_max && gap <= self.tol.heat_exponent_tol)
                    .detail("d_s_fit", fit.d_s_fit)
                    .detail("d_w_fit", fit.d_w_fit)
                    .detail("beta_fit", fit.beta_fit)
                    .detail("tied_exponent", fit.tied_exponent())
                    .detail("samples", fit.samples)
                    .detail("dropped", fit.dropped)
                    .detail("window", json!([fit.window.t_min, fit.window.t_max])))
            })
        });

        out.push(attempt(Record::new(s, names[3].0, names[3].1), |r| {
            let far = (0..self.cloud.len())
                .max_by(|&a, &b| self.cloud.dist(0, a).total_cmp(&self.cloud.dist(0, b)).then(b.cmp(&a)))
                .unwrap_or(0);
            let d = intrinsic_metric(form, 0, far, 50)?;
            let base = self.cloud.dist(0, far);
            let ratio = d.lower / base;
            Ok(r.judge(ratio, ratio.is_finite() && ratio > 0.0 && d.lower <= d.upper * (1.0 + 1e-12))
                .detail("target", far)
                .detail("lower", d.lower)
                .detail("upper", d.upper)
                .detail("distance", base))
        }));

        let gl = Record::new(s, names[4].0, names[4].1);
        out.push(match self.cloud.origin() {
            CloudOrigin::IntervalGrid { .. } | CloudOrigin::SquareGrid { .. } => attempt(gl, |r| {
                let f = ScalarField::from_coords(&self.cloud, |p| p[0])?;
                let rep = gamma_vs_lip_check(form, &self.cloud, &f, self.cloud.min_scale())?;
                let expect = 1.0;
                Ok(r.judge(rep.c_best, (rep.c_best / expect - 1.0).abs() <= self.tol.gamma_lip_rel)
                    .detail("expected", expect)
                    .detail("r_loc", rep.r_loc))
            }),
            _ => gl.skip("defined for grid forms only"),
        });
        out
    }

    // ---- convergence ----

    fn convergence_suite(&self) -> Vec<Record> {
        let s = Suite::Convergence;
        let mut out = Vec::new();
        let (fname, f) = self
            .fields
            .iter()
            .find(|(n, _)| n == "sin_pi_x" || n == "u1")
            .unwrap_or(&self.fields[0]);
        let oracle = || match &self.form {
            Some(form) => Oracle::Form(form),
            None => Oracle::FittedLimit(self.grid),
        };
        out.push(attempt(
            Record::new(s, "mosco_recovery", "recovery sequences reach the limit energy"),
            |r| {
                let win = self.grid.window_scales(&self.cloud)?;
                let pairs = self.recovery_pairs(&win);
                let rec = recovery_check(&self.cloud, f, self.d_w(), &pairs, oracle())?;
                let ok = rec.recovery_margin.is_finite() && rec.stability <= self.tol.mosco_stability && rec.trend_ok;
                Ok(r.judge(rec.recovery_margin, ok)
                    .detail("field", fname.as_str())
                    .detail("pairs", json!(pairs))
                    .detail("margins", rec.margins.clone())
                    .detail("stability", rec.stability)
                    .detail("l2_errors", rec.l2_errors.clone()))
            },
        ));
        let lim = Record::new(s, "mosco_liminf", "liminf inequality along weakly convergent sequences");
        out.push(match self.spectrum() {
            Err(e) => lim.skip(&e),
            Ok(spec) if spec.len() < PROBE_START + self.grid.window + 10 => lim.skip("spectrum too short for probes"),
            Ok(spec) => attempt(lim, |r| {
                let win = self.grid.window_scales(&self.cloud)?;
                let rep = weak_liminf_probe(
                    &self.cloud,
                    f,
                    self.d_w(),
                    spec,
                    &win,
                    PROBE_START,
                    Amplitude::EnergyNormalized(1.0),
                    oracle(),
                )?;
                let margin = rep.liminf_margin.unwrap_or(f64::INFINITY);
                let ok = rep.weak_null_ok && (rep.liminf_margin.is_none() || rep.stability <= self.tol.mosco_stability);
                Ok(r.judge(margin, ok)
                    .detail("field", fname.as_str())
                    .detail("modes", rep.modes.clone())
                    .detail("margins", rep.margins.clone())
                    .detail("stability", rep.stability)
                    .detail("weak_null_max", rep.weak_null_max))
            }),
        });
        let comp = Record::new(s, "compactness", "energy-bounded families are precompact in L2");
        out.push(match self.spectrum() {
            Err(e) => comp.skip(&e),
            Ok(spec) if spec.len() <= COMPACTNESS_BAND => comp.skip("spectrum too short"),
            Ok(spec) => attempt(comp, |r| {
                let fields = self.band_limited_family(spec)?;
                let cap = fields
                    .iter()
                    .map(|g| energy_load(&self.cloud, g, self.d_w(), &self.grid))
                    .collect::<kslab::Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                let p = compactness_probe(&self.cloud, &fields, self.d_w(), cap, self.tol.compactness_delta, &self.grid)?;
                // finite nets are all a finite family can show; ask for some clustering
                Ok(r.judge(p.net_size as f64, p.net_size < p.family_size)
                    .detail("family", p.family_size)
                    .detail("cap", p.cap)
                    .detail("delta", p.delta))
            }),
        });
        out.push(attempt(
            Record::new(s, "sobolev_embedding", "Sobolev embedding or sup-norm interpolation"),
            |r| {
                let q = self.doubling().map_err(kslab::Error::Internal)?.q_fit;
                let fields: Vec<ScalarField> = self.fields.iter().map(|(_, g)| g.clone()).collect();
                let rep = sobolev_check(&self.cloud, &fields, self.d_w(), q, &self.grid)?;
                Ok(r.judge(rep.max_quotient, rep.max_quotient.is_finite())
                    .detail("q_dim", rep.q_dim)
                    .detail("branch", serde_json::to_value(rep.branch).unwrap_or(Value::Null))
                    .detail("quotients", rep.quotients.clone()))
            },
        ));
        out
    }

    /// `eps_n = diam / 20 * 2^-n`, never below the window scale it is paired with.
    fn recovery_pairs(&self, win: &[f64]) -> Vec<(f64, f64)> {
        let top = self.cloud.diameter() / 20.0;
        win.iter()
            .enumerate()
            .map(|(k, &r)| ((top * 0.5f64.powi(k as i32)).max(r), r))
            .collect()
    }

    /// Random fields in the span of modes `1..=COMPACTNESS_BAND`, normalized
    /// to unit form energy.
    fn band_limited_family(&self, spec: &Spectrum) -> kslab::Result<Vec<ScalarField>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.cloud.len();
        (0..self.tol.compactness_fields)
            .map(|_| {
                let a: Vec<f64> = (1..=COMPACTNESS_BAND).map(|_| rng.gen::<f64>() - 0.5).collect();
                let e: f64 = a.iter().enumerate().map(|(i, c)| c * c * spec.eigenvalues[i + 1]).sum();
                let mut v = vec![0.0; n];
                for (i, c) in a.iter().enumerate() {
                    for (vj, uj) in v.iter_mut().zip(&spec.vectors[i + 1]) {
                        *vj += c / e.sqrt() * uj;
                    }
                }
                ScalarField::new(v)
            })
            .collect()
    }
}

impl Context {
    pub fn fields(&self) -> &[(String, ScalarField)] {
        &self.fields
    }

    pub fn cloud(&self) -> &MeasuredPointCloud {
        &self.cloud
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn walk_dim(&self) -> f64 {
        self.d_w.value
    }
}
