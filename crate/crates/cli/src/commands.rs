use std::sync::Arc;

use nalgebra::Point2;
use rayon::prelude::*;
use serde_json::{json, Value};
use uc_lab::config::{LabConfig, SCHEMA_VERSION};
use uc_lab::estimator::{
    fit_family, propagation_check, BallRadii, Regime, ThreeBallProbe, ThreeRegionProbe, INEQUALITY_HEADER,
};
use uc_lab::experiments::{
    cauchy_experiment, extremal_family, global_propagation_experiment, positive_measure_experiment, runge_experiment,
    smallness_sweep, solution_family, HarmonicBasis,
};
use uc_lab::geometry::{
    audit_lemmas, ball_chain, propagation_scales, random_admissible, vitali_cover, DomainSpec, Interface,
};
use uc_lab::rng::stream;
use uc_lab::solver::{
    build_mesh, io, verify_transmission, DirichletSolver, DiscreteField, ExactFlatSolution, Mesh, PiecewiseCoefficients,
};

use crate::error::{CliError, Result};
use crate::output::{num, Artifacts};
use crate::Command;

pub const TABLE: &str = "table.csv";
pub const SUMMARY: &str = "summary.json";

/// Resolved inputs shared by every command.
pub struct Run {
    pub cfg: LabConfig,
    pub seed: u64,
}

struct Setup {
    spec: DomainSpec,
    coeffs: PiecewiseCoefficients,
    mesh: Arc<Mesh>,
}

impl Run {
    fn setup(&self) -> Result<Setup> {
        let spec = self.cfg.domain()?;
        let coeffs = self.cfg.coefficients()?;
        let mesh = Arc::new(build_mesh(&spec, self.cfg.mesh_size)?);
        Ok(Setup { spec, coeffs, mesh })
    }

    /// Closed-form mode used as boundary data; exact when Σ is a horizontal line.
    fn oracle(&self, spec: &DomainSpec) -> Result<(ExactFlatSolution, bool)> {
        let c = &self.cfg.coefficients;
        let bb = spec.omega.bbox();
        let (y0, exact) = match spec.interface.as_ref() {
            Interface::Flat { y0 } => (*y0, true),
            other => (other.height(0.5 * (bb.min.x + bb.max.x)), false),
        };
        Ok((ExactFlatSolution::new(c.a_plus, c.a_minus, self.cfg.solve.k, y0)?, exact))
    }

    fn family(&self, s: &Setup, family: &uc_lab::experiments::FamilyConfig) -> Result<Vec<DiscreteField>> {
        let basis = HarmonicBasis::full(s.mesh.clone(), &s.coeffs)?;
        let c = &self.cfg.coefficients;
        Ok(solution_family(&basis, &s.spec.interface, c.a_plus, c.a_minus, family, &mut stream(self.seed, 0))?)
    }

    pub fn execute(&self, command: Command, out: &mut Artifacts) -> Result<()> {
        let summary = match command {
            Command::Mesh => self.mesh(out)?,
            Command::Solve => self.solve(out)?,
            Command::Regions => self.regions(out)?,
            Command::Cover => self.cover(out)?,
            Command::Chain => self.chain(out)?,
            Command::ThreeBalls => self.three_balls(out)?,
            Command::ThreeRegion => self.three_region(out)?,
            Command::Propagate => self.propagate(out)?,
            Command::Sweep => self.sweep(out)?,
            Command::Cauchy => self.cauchy(out)?,
            Command::Runge => self.runge(out)?,
            Command::PositiveMeasure => self.positive_measure(out)?,
        };
        let mut doc = json!({ "schema_version": SCHEMA_VERSION, "command": command.name() });
        if let (Value::Object(d), Value::Object(s)) = (&mut doc, summary) {
            d.extend(s);
        }
        out.json(SUMMARY, &doc)
    }

    fn mesh(&self, out: &mut Artifacts) -> Result<Value> {
        let s = self.setup()?;
        out.add("mesh.txt", mesh_bytes(&s.mesh)?);
        Ok(json!({
            "nodes": s.mesh.n_nodes(),
            "triangles": s.mesh.n_triangles(),
            "interface_edges": s.mesh.interface_edges.len(),
            "boundary_edges": s.mesh.boundary_edges.len(),
            "max_diameter": s.mesh.max_diameter(),
            "min_angle": s.mesh.min_angle(),
            "area": s.mesh.total_area(),
        }))
    }

    fn solve(&self, out: &mut Artifacts) -> Result<Value> {
        let s = self.setup()?;
        let (oracle, exact) = self.oracle(&s.spec)?;
        let solver = DirichletSolver::new(s.mesh.clone(), &s.coeffs)?;
        let u = solver.solve_trace(|p| oracle.value(p), None)?;
        if !u.is_finite() {
            return Err(CliError::Numerical("solution has non-finite values".into()));
        }
        let transmission = verify_transmission(&u, &s.coeffs);
        let errors = exact.then(|| {
            json!({
                "l2": u.l2_error(|p| oracle.value(p)),
                "h1": u.h1_error(|p| oracle.value(p), |p| oracle.gradient(p)),
            })
        });
        let mut field = Vec::new();
        io::write_field_csv(&u, &mut field).map_err(|e| CliError::Numerical(e.to_string()))?;
        out.add("field.csv", field);
        out.add("mesh.txt", mesh_bytes(&s.mesh)?);
        Ok(json!({
            "nodes": s.mesh.n_nodes(),
            "max_diameter": s.mesh.max_diameter(),
            "k": self.cfg.solve.k,
            "exact_oracle": exact,
            "errors": errors,
            "transmission": transmission,
            "galerkin_residual": solver.galerkin_residual(&u.values, None),
        }))
    }

    fn regions(&self, out: &mut Artifacts) -> Result<Value> {
        let spec = self.cfg.domain()?;
        let params = self.cfg.params()?;
        let chart = self.cfg.chart(&spec)?;
        let rc = &self.cfg.regions;
        let configured = audit_lemmas(&params, &chart, rc.samples, &mut stream(self.seed, 0))?;
        let random = (1..=rc.random_sets as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = stream(self.seed, k);
                let curved = k % 2 == 0;
                let (p, c) = random_admissible(&mut rng, curved);
                audit_lemmas(&p, &c, rc.samples, &mut rng).map(|a| (k, curved, a))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let sets: Vec<_> = std::iter::once((0, !chart.is_flat(), configured)).chain(random).collect();
        let rows = sets.iter().flat_map(|(k, curved, a)| {
            [
                ("safe_ball_u2", a.safe_ball_u2),
                ("bounding_ball_u3", a.bounding_ball_u3),
                ("clearance_u1", a.clearance_u1),
            ]
            .into_iter()
            .map(move |(name, c)| {
                format!(
                    "{k},{name},{curved},{},{},{},{},{}",
                    num(c.bound),
                    c.draws,
                    c.tested,
                    c.violations,
                    c.out_of_chart
                )
            })
        });
        out.csv(TABLE, "set,lemma,curved,bound,draws,tested,violations,out_of_chart", rows);
        let scales = propagation_scales(&params, &chart, spec.h).ok();
        Ok(json!({
            "params": params,
            "sets": sets.len(),
            "total_violations": sets.iter().map(|(_, _, a)| a.violations()).sum::<usize>(),
            "configured": configured,
            "propagation_scales_at_h": scales,
        }))
    }

    fn cover(&self, out: &mut Artifacts) -> Result<Value> {
        let spec = self.cfg.domain()?;
        let cc = &self.cfg.cover;
        let nu = match cc.nu {
            Some(nu) => nu,
            None => propagation_scales(&self.cfg.params()?, &self.cfg.chart(&spec)?, cc.step)?.nu,
        };
        let cover = vitali_cover(&spec, nu, cc.step)?;
        out.csv(TABLE, "index,x,y", points(&cover.centers));
        Ok(json!({
            "step": cc.step,
            "nu": nu,
            "count": cover.len(),
            "radius": cover.radius,
            "sigma_length": cover.sigma_length,
            "count_constant": cover.count_constant,
            "count_bound": cover.count_bound(),
            "coverage_radius": cover.coverage_radius(),
            "min_separation": cover.min_separation(),
        }))
    }

    fn chain(&self, out: &mut Artifacts) -> Result<Value> {
        let spec = self.cfg.domain()?;
        let c = &self.cfg.chain;
        let chain = ball_chain(&spec, pt(c.x0), pt(c.y), c.r1)?;
        out.csv(TABLE, "index,x,y", points(&chain.centers));
        Ok(json!({
            "r1": c.r1,
            "steps": chain.steps(),
            "steps_bound": spec.omega.area() / (std::f64::consts::PI * c.r1 * c.r1),
            "nesting_excess": chain.nesting_excess(3.0 * c.r1),
            "min_separation": chain.min_separation(),
        }))
    }

    fn three_balls(&self, out: &mut Artifacts) -> Result<Value> {
        let s = self.setup()?;
        let tb = &self.cfg.three_balls;
        let radii = BallRadii::new(tb.radii.r1, tb.radii.r2, tb.radii.r3)?;
        let probe = ThreeBallProbe::new(&s.mesh, &s.spec.omega, pt(tb.center), radii)?;
        let fields = self.family(&s, &tb.family)?;
        let samples: Vec<_> = fields.par_iter().map(|f| probe.sample(f, tb.eps)).collect();
        let regime = tb.h0.map(|h0| Regime::classify(radii.r1, radii.r2, radii.r3, h0));
        let (fit, reports) = fit_family(&samples, tb.delta_min, regime)?;
        out.csv(TABLE, INEQUALITY_HEADER, fields.iter().zip(&reports).map(|(f, r)| r.csv_row(&f.label)));
        Ok(json!({
            "center": tb.center,
            "radii": radii,
            "family_size": fields.len(),
            "fit": fit,
            "min_slack": reports.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
            "violations": reports.iter().filter(|r| !r.holds()).count(),
        }))
    }

    fn three_region(&self, out: &mut Artifacts) -> Result<Value> {
        let s = self.setup()?;
        let params = self.cfg.params()?;
        let chart = self.cfg.chart(&s.spec)?;
        let rc = &self.cfg.region_check;
        let probe = ThreeRegionProbe::new(&s.mesh, params, &chart)?;
        let fields = self.family(&s, &rc.family)?;
        let reports: Vec<_> = fields.par_iter().map(|f| probe.check(f, rc.eps, rc.c_max)).collect();
        out.csv(TABLE, INEQUALITY_HEADER, fields.iter().zip(&reports).map(|(f, r)| r.csv_row(&f.label)));
        Ok(json!({
            "params": params,
            "xi": params.xi(),
            "xi_complement": params.xi_complement(),
            "measures": probe.measures(),
            "family_size": fields.len(),
            "max_constant": reports.iter().map(|r| r.fitted_c).fold(0.0, f64::max),
            "cap_exceeded": reports.iter().filter(|r| r.cmax_margin.is_some_and(|m| m < 0.0)).count(),
        }))
    }

    fn propagate(&self, out: &mut Artifacts) -> Result<Value> {
        let s = self.setup()?;
        let pc = &self.cfg.propagate;
        let fields = self.family(&s, &pc.family)?;
        let outcome = propagation_check(&fields, &s.spec, pt(pc.x0), pc.r, pc.step, pc.eps, &pc.options)?;
        out.csv(TABLE, INEQUALITY_HEADER, fields.iter().zip(&outcome.fields).map(|(f, c)| c.report.csv_row(&f.label)));
        let modulus = match &pc.modulus {
            Some(gc) => {
                let basis = HarmonicBasis::full(s.mesh.clone(), &s.coeffs)?;
                let fam = extremal_family(&basis, &s.spec, gc)?;
                let pairs: Vec<_> = fam.into_iter().map(|(f, p)| (p.eta, f)).collect();
                let g = global_propagation_experiment(&s.spec, pt(gc.x0), gc.r, &pairs, gc)?;
                out.csv(
                    "modulus.csv",
                    "eta,t,value,energy_norm,ball_norm",
                    g.rows.iter().map(|r| {
                        format!(
                            "{},{},{},{},{}",
                            num(r.eta),
                            num(r.t),
                            num(r.value),
                            num(r.energy_norm),
                            num(r.ball_norm)
                        )
                    }),
                );
                Some(g.fit)
            }
            None => None,
        };
        let fields_summary: Vec<_> = fields
            .iter()
            .zip(&outcome.fields)
            .map(|(f, c)| {
                json!({
                    "label": f.label,
                    "bound": c.bound,
                    "links_checked": c.links_checked,
                    "link_violations": c.link_violations,
                    "worst_link_slack": c.worst_link_slack,
                })
            })
            .collect();
        Ok(json!({
            "geometry": outcome.geometry,
            "fit": outcome.fit,
            "c_raw": outcome.c_raw,
            "c_aug": outcome.c_aug,
            "bound": outcome.bound,
            "empirical": outcome.empirical,
            "fields": fields_summary,
            "modulus": modulus,
        }))
    }

    fn sweep(&self, out: &mut Artifacts) -> Result<Value> {
        let s = self.setup()?;
        let basis = HarmonicBasis::full(s.mesh.clone(), &s.coeffs)?;
        let (o, _) = smallness_sweep(&basis, &s.spec, &self.cfg.sweep, &mut stream(self.seed, 0))?;
        out.csv(
            TABLE,
            "eta,objective,dual_bound,bound,slack,holds,dual_holds",
            o.rows.iter().map(|r| {
                format!(
                    "{},{},{},{},{},{},{}",
                    num(r.eta),
                    num(r.objective),
                    num(r.dual_bound),
                    num(r.bound),
                    num(r.slack),
                    r.holds,
                    r.dual_holds
                )
            }),
        );
        Ok(json!({
            "a_plus": self.cfg.coefficients.a_plus,
            "a_minus": self.cfg.coefficients.a_minus,
            "violations": o.violations,
            "constant": o.constant,
            "exponent": o.exponent,
            "tau": o.tau,
            "c_aug": o.c_aug,
            "cubes": o.cubes,
            "max_steps": o.max_steps,
            "link_violations": o.link_violations,
            "family_size": o.family_size,
        }))
    }

    fn cauchy(&self, out: &mut Artifacts) -> Result<Value> {
        let s = self.setup()?;
        let (oracle, exact) = self.oracle(&s.spec)?;
        let solver = DirichletSolver::new(s.mesh.clone(), &s.coeffs)?;
        let truth = solver.solve_trace(|p| oracle.value(p), None)?;
        let mut cfg = self.cfg.cauchy.clone();
        cfg.seed = self.seed;
        let f = |p: Point2<f64>| oracle.value(p);
        let o = cauchy_experiment(s.mesh.clone(), &s.coeffs, &cfg, &truth, exact.then_some(&f as _))?;
        out.csv(
            TABLE,
            "eta,h,error,alpha,misfit,control_norm",
            o.rows.iter().map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    num(r.eta),
                    num(r.h),
                    num(r.error),
                    num(r.alpha),
                    num(r.misfit),
                    num(r.control_norm)
                )
            }),
        );
        Ok(json!({
            "exact_oracle": exact,
            "fem_error": o.fem_error,
            "holder": o.holder,
            "modulus": o.modulus,
            "h_violations": o.h_violations,
            "energy": o.energy,
            "noise_factor": o.noise_factor,
            "gamma_nodes": o.gamma_nodes,
            "control_nodes": o.control_nodes,
        }))
    }

    fn runge(&self, out: &mut Artifacts) -> Result<Value> {
        let s = self.setup()?;
        let o = runge_experiment(s.mesh.clone(), &s.coeffs, &self.cfg.runge)?;
        out.csv(
            TABLE,
            "eps,alpha,error,control_norm",
            o.rows.iter().map(|r| format!("{},{},{},{}", num(r.eps), num(r.alpha), num(r.error), num(r.control_norm))),
        );
        Ok(json!({
            "class": o.class,
            "floor_error": o.floor_error,
            "reference_control": o.reference_control,
            "residual": o.residual,
            "power_fit": o.power_fit,
            "exp_fit": o.exp_fit,
            "monotone_violations": o.monotone_violations,
        }))
    }

    fn positive_measure(&self, out: &mut Artifacts) -> Result<Value> {
        let s = self.setup()?;
        let basis = HarmonicBasis::full(s.mesh.clone(), &s.coeffs)?;
        let (o, _) = positive_measure_experiment(&basis, &s.spec, &self.cfg.positive_measure)?;
        out.csv(
            TABLE,
            "eta,objective,dual_bound,set_norm,ball_norm,certified_bound",
            o.rows.iter().map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    num(r.eta),
                    num(r.objective),
                    num(r.dual_bound),
                    num(r.set_norm),
                    num(r.ball_norm),
                    num(r.certified_bound)
                )
            }),
        );
        Ok(json!({
            "measure": o.measure,
            "ball_center": o.ball_center,
            "ball_radius": o.ball_radius,
            "step": o.step,
            "fit": o.fit,
            "certificate_violations": o.certificate_violations,
        }))
    }
}

fn pt(p: [f64; 2]) -> Point2<f64> {
    Point2::new(p[0], p[1])
}

fn points(ps: &[Point2<f64>]) -> impl Iterator<Item = String> + '_ {
    ps.iter().enumerate().map(|(i, p)| format!("{i},{},{}", num(p.x), num(p.y)))
}

fn mesh_bytes(mesh: &Mesh) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    io::write_mesh(mesh, &mut bytes).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(bytes)
}
