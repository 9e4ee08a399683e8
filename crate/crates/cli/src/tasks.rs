use quasispec::operator::validate_invariance;
use quasispec::pattern::frequency_table;
use quasispec::rational::{self, Rational};
use quasispec::spectra::{
    eigenspace_run, ground_state_run, ids_run, logdet_run, moment_run, norm_check, uniform_convergence_diag,
    AnalyticCdf, RunOptions,
};
use quasispec::{Error, InfiniteGraph, PatternOperator};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Task};

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(check: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Verdict { check: check.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub report: Value,
    pub verdicts: Vec<Verdict>,
    pub files: Vec<(String, String)>,
    /// A resource guard stopped the task before completion.
    pub partial: bool,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        !self.partial && self.verdicts.iter().all(|v| v.passed)
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn parse_rational(s: &Option<String>) -> Option<Rational> {
    s.as_deref().map(|s| rational::parse(s).expect("validated"))
}

/// Runs one validated experiment. Library errors other than resource limits
/// are returned; hitting a limit yields a partial outcome.
pub fn run(cfg: &ExperimentConfig, g: &InfiniteGraph, opts: &RunOptions) -> Result<Outcome, Error> {
    match run_inner(cfg, g, opts) {
        Err(Error::LimitExceeded { what, limit, actual }) => Ok(Outcome {
            report: json!({ "error": format!("{what}: {actual} exceeds limit {limit}") }),
            verdicts: vec![Verdict::new("resource guard", false, format!("{what}: {actual} exceeds limit {limit}"))],
            files: Vec::new(),
            partial: true,
        }),
        other => other,
    }
}

fn run_inner(cfg: &ExperimentConfig, g: &InfiniteGraph, opts: &RunOptions) -> Result<Outcome, Error> {
    let mut out = Outcome::default();
    let op = match &cfg.operator {
        Some(spec) => {
            let discovery = g.folner_window(*cfg.levels.last().expect("validated"));
            Some(spec.build(g, Some(&discovery))?)
        }
        None => None,
    };
    if let Some(op) = &op {
        structural_checks(cfg, op, opts, &mut out)?;
        if !out.verdicts.iter().all(|v| v.passed) {
            out.report = json!({ "skipped": "operator failed structural checks" });
            return Ok(out);
        }
    }
    let name = &cfg.name;
    let p = &cfg.params;
    match cfg.task {
        Task::Census | Task::Frequencies => {
            let r = p.radius.unwrap_or(1);
            let levels = if cfg.task == Task::Census {
                vec![*cfg.levels.last().expect("validated")]
            } else {
                cfg.levels.clone()
            };
            let table = frequency_table(g, &levels, r)?;
            let top = table.levels.len() - 1;
            let total: Rational = table.codes().iter().map(|c| table.frequency(top, c)).sum();
            out.verdicts.push(Verdict::new(
                "frequencies sum to 1",
                total == rational::int(1),
                format!("{} patterns", table.levels[top].counts.len()),
            ));
            if let Some(expected) = &p.expect_frequencies {
                let mut got: Vec<Rational> = table.levels[top].counts.keys().map(|c| table.frequency(top, c)).collect();
                got.sort();
                let want: Vec<Rational> = expected.iter().map(|s| rational::parse(s)).collect::<Result<_, _>>()?;
                let mut want = want;
                want.sort();
                out.verdicts.push(Verdict::new(
                    "expected frequencies",
                    got == want,
                    got.iter().map(rational::to_string).collect::<Vec<_>>().join(" "),
                ));
            }
            if let Some(slack) = p.frequency_slack {
                let mut worst: f64 = 0.0;
                let mut ok = true;
                for i in 1..table.levels.len() {
                    let allowed = slack / table.levels[i - 1].size as f64;
                    for c in table.codes() {
                        let d = rational::to_f64(&(table.frequency(i, &c) - table.frequency(i - 1, &c))).abs();
                        worst = worst.max(d * table.levels[i - 1].size as f64);
                        ok &= d <= allowed;
                    }
                }
                out.verdicts.push(Verdict::new(
                    "frequency drift",
                    ok,
                    format!("worst drift {worst:.3}/|Q| (slack {slack})"),
                ));
            }
            out.files.push((format!("{name}_frequencies.csv"), table.to_csv()));
            out.report = json!({
                "radius": r,
                "levels": table.levels.iter().map(|l| json!({
                    "level": l.level,
                    "size": l.size,
                    "patterns": l.counts.len(),
                })).collect::<Vec<_>>(),
                "convergence_indicator": table.convergence_indicator(),
            });
        }
        Task::Moments => {
            let op = op.as_ref().expect("validated");
            let k = p.k.unwrap_or(2);
            let rep = moment_run(op, &cfg.levels, k, opts)?;
            out.verdicts.push(Verdict::new(
                "moment error bound",
                rep.all_within_bound,
                format!("{} levels", rep.levels.len()),
            ));
            out.verdicts.push(Verdict::new("consecutive moments", rep.consecutive_consistent, ""));
            let float_ok = rep.levels.iter().all(|l| l.float_consistent != Some(false));
            out.verdicts.push(Verdict::new("float moments", float_ok, ""));
            if let Some(expect) = parse_rational(&p.expect) {
                out.verdicts.push(Verdict::new(
                    "moment limit",
                    rep.extrapolated == expect,
                    format!("extrapolated {} expected {}", rep.extrapolated, expect),
                ));
            }
            let mut csv = String::from("level,size,boundary,section_moment,walk_moment,error_bound\n");
            for l in &rep.levels {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    l.level, l.size, l.boundary, l.section_moment, l.walk_moment, l.error_bound
                ));
            }
            out.files.push((format!("{name}_moments.csv"), csv));
            out.report = to_value(&rep);
        }
        Task::Ids | Task::Converge => {
            let op = op.as_ref().expect("validated");
            let reference = p.reference.as_ref().map(|_| AnalyticCdf::z_laplacian());
            let est = ids_run(op, &cfg.levels, reference.as_ref(), opts)?;
            if est.partial {
                out.partial = true;
                out.verdicts.push(Verdict::new(
                    "resource guard",
                    false,
                    format!("levels {:?} exceed the dense limit", est.skipped_levels),
                ));
            }
            let top = est.levels.last().map_or(1, |l| l.size);
            for l in &est.levels {
                out.files.push((format!("{name}_staircase_n{}.csv", l.level), l.staircase.to_csv()));
            }
            if cfg.task == Task::Ids {
                out.verdicts.push(Verdict::new(
                    "N(K) = 1",
                    est.levels.iter().all(|l| l.within_norm_bound),
                    format!("K = {}", est.norm_bound),
                ));
                if p.check_cauchy.unwrap_or(true) {
                    out.verdicts.push(Verdict::new(
                        "sup distances decrease",
                        est.cauchy.windows(2).all(|w| w[1] < w[0]),
                        format!("{:?}", est.cauchy),
                    ));
                }
                if let (Some(c), Some(last)) = (p.max_final_distance_per_size, est.reference_distances.last()) {
                    let tol = c / top as f64;
                    out.verdicts.push(Verdict::new(
                        "distance to reference",
                        *last <= tol,
                        format!("{last:.3e} <= {tol:.3e}"),
                    ));
                }
                out.verdicts.push(Verdict::new(
                    "atom consistency",
                    est.atoms.iter().all(|a| a.consistent),
                    format!("{} atoms", est.atoms.len()),
                ));
                out.report = to_value(&est);
            } else {
                let stairs: Vec<_> = est.levels.iter().map(|l| l.staircase.clone()).collect();
                let k = est.norm_bound;
                let diag = uniform_convergence_diag(&stairs, -k, k, opts)?;
                out.verdicts.push(Verdict::new(
                    "uniform convergence",
                    diag.passed,
                    format!("certificate {:.3e}", diag.certificate),
                ));
                let mut csv = String::from("pair,sup_distance,pointwise\n");
                for (i, (d, pw)) in diag.sup_distances.iter().zip(&diag.pointwise).enumerate() {
                    csv.push_str(&format!("{i},{d:.12e},{pw:.12e}\n"));
                }
                out.files.push((format!("{name}_convergence.csv"), csv));
                out.report = to_value(&diag);
            }
        }
        Task::GroundState => {
            let op = op.as_ref().expect("validated");
            let rep = ground_state_run(op, &cfg.levels, opts)?;
            if let Some(min) = parse_rational(&p.min_density) {
                out.verdicts.push(Verdict::new(
                    "ground-state density",
                    rep.levels.iter().all(|l| l.density >= min),
                    rep.levels.iter().map(|l| rational::to_string(&l.density)).collect::<Vec<_>>().join(" "),
                ));
            }
            let mut csv = String::from("level,size,kernel_dim,density\n");
            for l in &rep.levels {
                csv.push_str(&format!("{},{},{},{}\n", l.level, l.size, l.kernel_dim, l.density));
            }
            out.files.push((format!("{name}_kernels.csv"), csv));
            out.report = to_value(&rep);
        }
        Task::Eigenspace => {
            let op = op.as_ref().expect("validated");
            let lambda = parse_rational(&p.lambda).unwrap_or_else(|| rational::int(0));
            let rep = eigenspace_run(op, &lambda, &cfg.levels, opts)?;
            out.verdicts.push(Verdict::new(
                "kernel comparison",
                rep.all_within_bound,
                rep.levels
                    .iter()
                    .map(|l| format!("{}/{}<={}", l.kernel_dim, l.squared_kernel_dim, l.boundary))
                    .collect::<Vec<_>>()
                    .join(" "),
            ));
            let mut csv = String::from("level,size,kernel_dim,squared_kernel_dim,boundary\n");
            for l in &rep.levels {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    l.level, l.size, l.kernel_dim, l.squared_kernel_dim, l.boundary
                ));
            }
            out.files.push((format!("{name}_eigenspace.csv"), csv));
            out.report = to_value(&rep);
        }
        Task::Logdet => {
            let op = op.as_ref().expect("validated");
            let rep = logdet_run(op, &cfg.levels, opts)?;
            let count = rep.levels.iter().filter(|l| l.nonnegative).count();
            out.verdicts.push(Verdict::new(
                "logdet >= 0",
                rep.all_nonnegative,
                format!("{count}/{}", rep.levels.len()),
            ));
            let tol = p.identity_tol.unwrap_or(1e-3);
            out.verdicts.push(Verdict::new(
                "staircase identity",
                rep.max_identity_gap <= tol,
                format!("gap {:.3e} <= {tol:.0e}", rep.max_identity_gap),
            ));
            let mut csv = String::from("level,size,rank,det1,logdet,fk_estimate,staircase_identity\n");
            for l in &rep.levels {
                csv.push_str(&format!(
                    "{},{},{},{},{:.12e},{:.12e},{:.12e}\n",
                    l.level,
                    l.size,
                    l.determinant.rank,
                    l.determinant.det1,
                    l.determinant.logdet,
                    l.fk_estimate,
                    l.staircase_identity
                ));
            }
            out.files.push((format!("{name}_logdet.csv"), csv));
            out.report = to_value(&rep);
        }
    }
    Ok(out)
}

/// Pattern invariance on the smallest window and the norm bound on every
/// level that fits the float path.
fn structural_checks(
    cfg: &ExperimentConfig,
    op: &PatternOperator,
    opts: &RunOptions,
    out: &mut Outcome,
) -> Result<(), Error> {
    let g = op.graph();
    let samples = cfg.params.invariance_samples.unwrap_or(4);
    let inv = validate_invariance(op, &g.folner_window(cfg.levels[0]), samples)?;
    let detail = match inv.violations.first() {
        Some(v) => format!(
            "{} violations, first A({},{}) = {} but A({},{}) = {}",
            inv.violations.len(),
            v.x,
            v.y,
            v.value,
            v.x_image,
            v.y_image,
            v.image_value
        ),
        None => format!("{} entries over {} isomorphisms", inv.entries_checked, inv.isomorphisms_checked),
    };
    out.verdicts.push(Verdict::new("pattern invariance", inv.passed(), detail));
    let levels: Vec<u32> =
        cfg.levels.iter().copied().filter(|&n| g.folner_window(n).len() <= opts.dense_limit).collect();
    if !levels.is_empty() {
        let checks = norm_check(op, &levels, opts)?;
        let worst = checks.iter().map(|c| c.operator_norm).fold(0.0, f64::max);
        out.verdicts.push(Verdict::new(
            "norm bound",
            checks.iter().all(|c| c.ok),
            format!("max |B_n| {worst:.4} <= {}", rational::to_string(&op.norm_bound())),
        ));
    }
    Ok(())
}
