//! One dispatcher per experiment, each mapping config params onto a
//! library routine and rendering the outcome as a JSON summary plus
//! CSV rows.
//!
//! Numbers are written through the standard float formatter, which
//! emits the shortest string that parses back to the same value, so
//! reruns under the same seed reproduce data.csv byte for byte.

use serde_json::{json, Value};

use rotlab_core::cover::{CoverPoint, LiftedMap, MapFamily};
use rotlab_core::farey::{enclosing_farey, fractions_in_interval, FareyInterval, Rational};
use rotlab_core::flows::{check_flow_linearity, check_slowdown, VectorField};
use rotlab_core::lines::{area_between, search_line, verify_line_translation, EssentialLine};
use rotlab_core::orbits::{find_orbit, perturbation_sweep, pseudo_rotation_test, OrbitSearchOptions};
use rotlab_core::rotation::{
    check_morphism, check_prop12, point_rotation, return_map_stats, rotation_set_with,
    RecurrenceOptions, SampleParams,
};

use crate::config::{Experiment, Params, RunConfig};

pub struct Output {
    pub result: Value,
    pub rows: Vec<String>,
}

#[derive(Debug)]
pub enum RunError {
    /// Bad or missing configuration; exit code 2.
    Config(String),
    /// Library failure; exit code 3 for numerical outcomes, 2 for
    /// precondition violations.
    Core(rotlab_core::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(e) => {
                if e.is_numerical() {
                    3
                } else {
                    2
                }
            }
        }
    }

    pub fn message(&self) -> String {
        match self {
            RunError::Config(m) => m.clone(),
            RunError::Core(e) => e.to_string(),
        }
    }
}

impl From<rotlab_core::Error> for RunError {
    fn from(e: rotlab_core::Error) -> Self {
        RunError::Core(e)
    }
}

type RunResult<T> = Result<T, RunError>;

/// data.csv column line for each experiment. Written even when the
/// run fails, so a failed run leaves a parseable empty table.
pub fn csv_header(x: Experiment) -> &'static str {
    match x {
        Experiment::Rotset => "index,x0,u0,value,converged",
        Experiment::Rotnum => "index,return_time",
        Experiment::Farey => "num,den,value",
        Experiment::LineVerify => "index,offset,position",
        Experiment::LineSearch => "u,x",
        Experiment::Perorb => "step,x,u",
        Experiment::PseudoTest => "num,den,value,found,residual,x,u",
        Experiment::Sweep => "theta,has_orbit,p,q,residual,seconds",
        Experiment::FlowCheck => "t,mean,stderr,fitted",
        Experiment::AreaCheck => "x0,area,defect",
        Experiment::ReturnStats => "index,nu,tau",
        Experiment::MorphismCheck => "component,mean,stderr",
        Experiment::Prop12Check => "which,lo,hi,mean,stderr",
    }
}

pub fn run(cfg: &RunConfig, seed: u64) -> RunResult<Output> {
    match cfg.experiment {
        Experiment::Rotset => rotset(cfg, seed),
        Experiment::Rotnum => rotnum(cfg),
        Experiment::Farey => farey(cfg),
        Experiment::LineVerify => line_verify(cfg),
        Experiment::LineSearch => line_search(cfg, seed),
        Experiment::Perorb => perorb(cfg),
        Experiment::PseudoTest => pseudo_test(cfg, seed),
        Experiment::Sweep => sweep(cfg, seed),
        Experiment::FlowCheck => flow_check(cfg, seed),
        Experiment::AreaCheck => area_check(cfg, seed),
        Experiment::ReturnStats => return_stats(cfg),
        Experiment::MorphismCheck => morphism_check(cfg, seed),
        Experiment::Prop12Check => prop12_check(cfg, seed),
    }
}

/// Cheap structural check used by `rotlab validate`: families build,
/// required params are present and parse.
pub fn validate(cfg: &RunConfig) -> RunResult<()> {
    if let Some(m) = &cfg.map {
        m.build()?;
    }
    if let Some(m) = &cfg.map_b {
        m.build()?;
    }
    if let Some(f) = &cfg.field {
        f.build()?;
    }
    let p = &cfg.params;
    match cfg.experiment {
        Experiment::Rotset | Experiment::PseudoTest | Experiment::AreaCheck
        | Experiment::ReturnStats | Experiment::Rotnum | Experiment::Prop12Check => {
            need_map(cfg)?;
        }
        Experiment::Farey => {
            req(p.lo, "lo")?;
            req(p.hi, "hi")?;
        }
        Experiment::LineVerify => {
            need_map(cfg)?;
            req(p.n, "n")?;
            req(p.rho, "rho")?;
        }
        Experiment::LineSearch => {
            need_map(cfg)?;
            interval_of(p)?;
        }
        Experiment::Perorb => {
            need_map(cfg)?;
            req(p.p, "p")?;
            req(p.q, "q")?;
        }
        Experiment::Sweep => {
            base_family(cfg)?;
            req(p.theta_min, "theta_min")?;
            req(p.theta_max, "theta_max")?;
            req(p.theta_steps, "theta_steps")?;
        }
        Experiment::FlowCheck => {
            need_field(cfg)?;
            if p.ts.as_ref().map_or(true, |ts| ts.is_empty()) {
                return Err(RunError::Config("params.ts needs at least one time".into()));
            }
        }
        Experiment::MorphismCheck => {
            need_map(cfg)?;
            if cfg.map_b.is_none() {
                return Err(RunError::Config(
                    "[map_b] table is required for morphism-check".into(),
                ));
            }
        }
    }
    Ok(())
}

fn req<T: Copy>(v: Option<T>, name: &str) -> RunResult<T> {
    v.ok_or_else(|| RunError::Config(format!("params.{name} is required for this experiment")))
}

fn base_family(cfg: &RunConfig) -> RunResult<&MapFamily> {
    cfg.map
        .as_ref()
        .ok_or_else(|| RunError::Config("[map] table is required for this experiment".into()))
}

fn need_map(cfg: &RunConfig) -> RunResult<LiftedMap> {
    Ok(base_family(cfg)?.build()?)
}

fn need_field(cfg: &RunConfig) -> RunResult<VectorField> {
    Ok(cfg
        .field
        .as_ref()
        .ok_or_else(|| RunError::Config("[field] table is required for this experiment".into()))?
        .build()?)
}

fn recurrence(p: &Params) -> RecurrenceOptions {
    let d = RecurrenceOptions::default();
    RecurrenceOptions {
        max_iter: p.max_iter.unwrap_or(d.max_iter),
        recur_tol: p.recur_tol.unwrap_or(d.recur_tol),
        spread_tol: p.spread_tol.unwrap_or(d.spread_tol),
        backward: p.backward.unwrap_or(d.backward),
    }
}

fn sample_params(p: &Params, seed: u64) -> SampleParams {
    SampleParams {
        n_samples: p.n_samples.unwrap_or(1024),
        seed,
        recurrence: recurrence(p),
    }
}

fn orbit_opts(p: &Params) -> OrbitSearchOptions {
    let d = OrbitSearchOptions::default();
    OrbitSearchOptions {
        grid: p.grid.unwrap_or(d.grid),
        grid_cap: p.grid_cap.unwrap_or(d.grid_cap),
        max_newton: p.max_newton.unwrap_or(d.max_newton),
        residual_tol: p.residual_tol.unwrap_or(d.residual_tol),
        max_den: p.max_den.unwrap_or(d.max_den),
    }
}

fn parse_rational(s: &str) -> RunResult<Rational> {
    let err = || RunError::Config(format!("cannot parse rational {s:?}; expected \"p/q\""));
    let (num, den) = s.split_once('/').ok_or_else(err)?;
    let num: i64 = num.trim().parse().map_err(|_| err())?;
    let den: i64 = den.trim().parse().map_err(|_| err())?;
    Ok(Rational::new(num, den)?)
}

fn interval_of(p: &Params) -> RunResult<FareyInterval> {
    let [ls, rs] = p
        .interval
        .as_ref()
        .ok_or_else(|| RunError::Config("params.interval = [\"p/q\", \"p'/q'\"] is required".into()))?;
    Ok(FareyInterval::new(parse_rational(ls)?, parse_rational(rs)?)?)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n)
        .map(|j| a + (b - a) * j as f64 / (n - 1) as f64)
        .collect()
}

fn rotset(cfg: &RunConfig, seed: u64) -> RunResult<Output> {
    let map = need_map(cfg)?;
    let set = rotation_set_with(&map, &sample_params(&cfg.params, seed))?;
    let rows = set
        .samples
        .iter()
        .map(|s| format!("{},{},{},{},{}", s.index, s.x0, s.u0, s.value, s.converged))
        .collect();
    Ok(Output {
        result: json!({
            "interval": set.interval,
            "mean": set.mean,
            "stderr": set.stderr,
            "converged": set.converged,
            "total": set.total,
            "seed": seed,
        }),
        rows,
    })
}

fn rotnum(cfg: &RunConfig) -> RunResult<Output> {
    let map = need_map(cfg)?;
    let p = &cfg.params;
    let z = CoverPoint::new(p.x.unwrap_or(0.0), p.u.unwrap_or(0.5));
    let pr = point_rotation(&map, z, &recurrence(p))?;
    let rows = pr
        .return_times
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{i},{t}"))
        .collect();
    Ok(Output {
        result: json!({
            "value": pr.value,
            "plain_quotient": pr.plain_quotient,
            "converged": pr.converged,
            "no_return": pr.no_return,
            "recurrence_gap": pr.recurrence_gap,
            "returns": pr.return_times.len(),
            "backward_value": pr.backward_value,
        }),
        rows,
    })
}

fn farey(cfg: &RunConfig) -> RunResult<Output> {
    let p = &cfg.params;
    let lo = req(p.lo, "lo")?;
    let hi = req(p.hi, "hi")?;
    let max_den = p.max_den.unwrap_or(1000);
    let iv = enclosing_farey(lo, hi, max_den)?;
    let fr = fractions_in_interval(lo, hi, max_den)?;
    let rows = fr
        .iter()
        .map(|r| format!("{},{},{}", r.num(), r.den(), r.as_f64()))
        .collect();
    Ok(Output {
        result: json!({
            "left": iv.left().to_string(),
            "right": iv.right().to_string(),
            "mediant": iv.mediant()?.to_string(),
            "left_value": iv.left().as_f64(),
            "right_value": iv.right().as_f64(),
            "fractions": fr.len(),
        }),
        rows,
    })
}

fn line_verify(cfg: &RunConfig) -> RunResult<Output> {
    let map = need_map(cfg)?;
    let p = &cfg.params;
    let n = req(p.n, "n")?;
    let rho = req(p.rho, "rho")?;
    let line = EssentialLine::vertical(p.x0.unwrap_or(0.0));
    let rep = verify_line_translation(&map, &line, n, rho)?;
    let rows = (0..rep.offsets.len())
        .map(|i| format!("{},{},{}", i, rep.offsets[i], rep.positions[i]))
        .collect();
    Ok(Output {
        result: json!({
            "offsets": rep.offsets,
            "positions": rep.positions,
            "min_pair_gap": rep.min_pair_gap,
            "order": rep.order.to_string(),
            "expected": rep.expected.to_string(),
            "matches_rigid": rep.matches_rigid,
        }),
        rows,
    })
}

fn line_search(cfg: &RunConfig, seed: u64) -> RunResult<Output> {
    let map = need_map(cfg)?;
    let p = &cfg.params;
    let iv = interval_of(p)?;
    let budget = p.budget.unwrap_or(2000);
    let line = search_line(&map, &iv, budget, seed)?;
    let rows: Vec<String> = line.points().map(|pt| format!("{},{}", pt.u, pt.x)).collect();
    let (mut xlo, mut xhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for pt in line.points() {
        xlo = xlo.min(pt.x);
        xhi = xhi.max(pt.x);
    }
    Ok(Output {
        result: json!({
            "interval": [iv.left().to_string(), iv.right().to_string()],
            "vertices": rows.len(),
            "min_height": line.min_height(),
            "max_height": line.max_height(),
            "x_range": [xlo, xhi],
        }),
        rows,
    })
}

fn perorb(cfg: &RunConfig) -> RunResult<Output> {
    let map = need_map(cfg)?;
    let pars = &cfg.params;
    let p = req(pars.p, "p")?;
    let q = req(pars.q, "q")?;
    let rec = find_orbit(&map, p, q, &orbit_opts(pars))?;
    let mut rows = Vec::new();
    if rec.found {
        let mut z = rec.point;
        rows.push(format!("0,{},{}", z.x, z.u));
        for i in 1..=rec.q {
            z = map.evaluate(z)?;
            rows.push(format!("{},{},{}", i, z.x, z.u));
        }
    }
    Ok(Output {
        result: json!({
            "p": rec.p,
            "q": rec.q,
            "found": rec.found,
            "x": rec.point.x,
            "u": rec.point.u,
            "residual": rec.residual,
            "resolution": rec.resolution,
        }),
        rows,
    })
}

fn pseudo_test(cfg: &RunConfig, seed: u64) -> RunResult<Output> {
    let map = need_map(cfg)?;
    let rep = pseudo_rotation_test(&map, &sample_params(&cfg.params, seed), &orbit_opts(&cfg.params))?;
    let rows = rep
        .candidates
        .iter()
        .zip(&rep.orbits)
        .map(|(r, o)| {
            format!(
                "{},{},{},{},{},{},{}",
                r.num(),
                r.den(),
                r.as_f64(),
                o.found,
                o.residual,
                o.point.x,
                o.point.u
            )
        })
        .collect();
    Ok(Output {
        result: json!({
            "interval": rep.interval,
            "inflated": rep.inflated,
            "mean": rep.mean,
            "stderr": rep.stderr,
            "candidates": rep.candidates.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "found_any": rep.found_any,
        }),
        rows,
    })
}

fn sweep(cfg: &RunConfig, seed: u64) -> RunResult<Output> {
    let base = base_family(cfg)?;
    let p = &cfg.params;
    let thetas = linspace(
        req(p.theta_min, "theta_min")?,
        req(p.theta_max, "theta_max")?,
        req(p.theta_steps, "theta_steps")?,
    );
    let rows_out = perturbation_sweep(base, &thetas, &sample_params(p, seed), &orbit_opts(p))?;

    // The seconds column is pinned to zero: wall time varies run to
    // run and data.csv must reproduce byte for byte. Real timing goes
    // to meta.json.
    let mut rows = Vec::with_capacity(rows_out.len());
    for r in &rows_out {
        let (op, oq, ores) = match &r.orbit {
            Some(o) => (o.p.to_string(), o.q.to_string(), o.residual.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        rows.push(format!("{},{},{},{},{},0.000000", r.theta, r.has_orbit, op, oq, ores));
    }

    // Locked intervals: maximal runs of consecutive detected thetas.
    let mut locked = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=rows_out.len() {
        let on = i < rows_out.len() && rows_out[i].has_orbit;
        match (run_start, on) {
            (None, true) => run_start = Some(i),
            (Some(s), false) => {
                let slice = &rows_out[s..i];
                let mut fractions: Vec<String> = Vec::new();
                for r in slice {
                    if let Some(o) = &r.orbit {
                        let f = format!("{}/{}", o.p, o.q);
                        if !fractions.contains(&f) {
                            fractions.push(f);
                        }
                    }
                }
                locked.push(json!({
                    "theta_lo": slice[0].theta,
                    "theta_hi": slice[slice.len() - 1].theta,
                    "count": slice.len(),
                    "fractions": fractions,
                }));
                run_start = None;
            }
            _ => {}
        }
    }

    let detected = rows_out.iter().filter(|r| r.has_orbit).count();
    let errors = rows_out.iter().filter(|r| r.error.is_some()).count();
    Ok(Output {
        result: json!({
            "thetas": rows_out.len(),
            "detected": detected,
            "errors": errors,
            "locked": locked,
        }),
        rows,
    })
}

fn flow_check(cfg: &RunConfig, seed: u64) -> RunResult<Output> {
    let field = need_field(cfg)?;
    let p = &cfg.params;
    let ts = p
        .ts
        .clone()
        .ok_or_else(|| RunError::Config("params.ts is required for flow-check".into()))?;
    let step = p.step.unwrap_or(1e-3);
    let sp = sample_params(p, seed);
    let rep = check_flow_linearity(&field, &ts, step, &sp)?;
    let rows = rep
        .ts
        .iter()
        .zip(rep.means.iter().zip(&rep.stderrs))
        .map(|(t, (m, s))| format!("{},{},{},{}", t, m, s, rep.slope * t))
        .collect();
    let slowdown = match p.t_max {
        Some(t_max) => {
            let sd = check_slowdown(&field, sp.n_samples, t_max, step, seed)?;
            json!({
                "max_speed": sd.max_speed,
                "worst_excess": sd.worst_excess,
                "min_displacement": sd.min_displacement,
                "samples": sd.samples,
            })
        }
        None => Value::Null,
    };
    Ok(Output {
        result: json!({
            "ts": rep.ts,
            "means": rep.means,
            "stderrs": rep.stderrs,
            "slope": rep.slope,
            "max_deviation": rep.max_deviation,
            "slowdown": slowdown,
        }),
        rows,
    })
}

fn area_check(cfg: &RunConfig, seed: u64) -> RunResult<Output> {
    let map = need_map(cfg)?;
    let p = &cfg.params;
    let x0s = p.x0s.clone().unwrap_or_else(|| vec![0.0]);
    if x0s.is_empty() {
        return Err(RunError::Config("params.x0s needs at least one position".into()));
    }
    let set = rotation_set_with(&map, &sample_params(p, seed))?;
    let mut rows = Vec::with_capacity(x0s.len());
    let mut areas = Vec::with_capacity(x0s.len());
    for &x0 in &x0s {
        let a = area_between(&map, x0)?;
        rows.push(format!("{},{},{}", x0, a, a - set.mean));
        areas.push(a);
    }
    let max_defect = areas.iter().map(|a| (a - set.mean).abs()).fold(0.0f64, f64::max);
    let spread = areas.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - areas.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Output {
        result: json!({
            "mean": set.mean,
            "stderr": set.stderr,
            "areas": areas,
            "max_defect": max_defect,
            "spread": spread,
        }),
        rows,
    })
}

fn return_stats(cfg: &RunConfig) -> RunResult<Output> {
    let map = need_map(cfg)?;
    let p = &cfg.params;
    let x0 = p.x0.unwrap_or(0.0);
    let line = EssentialLine::vertical(x0);
    let z = CoverPoint::new(p.x.unwrap_or(x0 + 1e-6), p.u.unwrap_or(0.5));
    let horizon = p.horizon.unwrap_or(100_000);
    let st = return_map_stats(&map, &line, z, horizon)?;
    let rows = st
        .nu
        .iter()
        .zip(&st.tau)
        .enumerate()
        .map(|(i, (nu, tau))| format!("{i},{nu},{tau}"))
        .collect();
    Ok(Output {
        result: json!({
            "nu_star": st.nu_star,
            "tau_star": st.tau_star,
            "estimate": st.rotation_estimate(),
            "returns": st.nu.len(),
            "steps": st.steps,
        }),
        rows,
    })
}

fn morphism_check(cfg: &RunConfig, seed: u64) -> RunResult<Output> {
    let f = need_map(cfg)?;
    let g = cfg
        .map_b
        .as_ref()
        .ok_or_else(|| RunError::Config("[map_b] table is required for morphism-check".into()))?
        .build()?;
    let rep = check_morphism(&f, &g, &sample_params(&cfg.params, seed))?;
    let rows = vec![
        format!("composed,{},{}", rep.composed.mean, rep.composed.stderr),
        format!("outer,{},{}", rep.outer.mean, rep.outer.stderr),
        format!("inner,{},{}", rep.inner.mean, rep.inner.stderr),
    ];
    Ok(Output {
        result: json!({
            "composed": {"mean": rep.composed.mean, "stderr": rep.composed.stderr},
            "outer": {"mean": rep.outer.mean, "stderr": rep.outer.stderr},
            "inner": {"mean": rep.inner.mean, "stderr": rep.inner.stderr},
            "defect": rep.defect,
            "combined_stderr": rep.combined_stderr,
        }),
        rows,
    })
}

fn prop12_check(cfg: &RunConfig, seed: u64) -> RunResult<Output> {
    let map = need_map(cfg)?;
    let p = &cfg.params;
    let k = p.k.unwrap_or(1);
    let q = p.q.unwrap_or(2);
    let rep = check_prop12(&map, k, q, &sample_params(p, seed))?;
    let rows = [
        ("base", &rep.base),
        ("translated", &rep.translated),
        ("powered", &rep.powered),
    ]
    .iter()
    .map(|(name, s)| format!("{},{},{},{},{}", name, s.interval[0], s.interval[1], s.mean, s.stderr))
    .collect();
    let set_json = |s: &rotlab_core::rotation::RotationSet| {
        json!({"interval": s.interval, "mean": s.mean, "stderr": s.stderr})
    };
    Ok(Output {
        result: json!({
            "k": rep.k,
            "q": rep.q,
            "translate_defect": rep.translate_defect,
            "power_defect": rep.power_defect,
            "base": set_json(&rep.base),
            "translated": set_json(&rep.translated),
            "powered": set_json(&rep.powered),
        }),
        rows,
    })
}
