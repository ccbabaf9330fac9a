//! Error norms, convergence studies and the named test presets.
//!
//! A preset bundles a system, its initial data, domain, boundary rule and the
//! default run parameters. [`run_preset`] writes plot-ready solution profiles
//! and convergence tables into an output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AderError, Result};
use crate::models::{
    euler_system, leveque_yee_system, linear_system, nonlinear_system, shu_osher_initial_with_amplitude, BalanceLaw,
    Euler,
    PrimitiveState, State,
};
use crate::nodal::gauss_legendre;
use crate::reconstruction::{Boundary, CellField, WenoReconstructor};
use crate::scheme::{project_initial, RunOutcome, Scheme, SchemeConfig};

/// Cell count of the Shu–Osher reference solution.
pub const SHU_OSHER_REFERENCE_CELLS: usize = 2000;
/// Order of the Shu–Osher reference solution.
pub const SHU_OSHER_REFERENCE_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorNorms {
    pub linf: f64,
    pub l1: f64,
    pub l2: f64,
}

/// Distances between the reconstructed field and a reference function on one
/// solution component. Cell integrals use 5-point Gauss quadrature and the
/// maximum norm is taken over the same samples.
pub fn error_norms<const N: usize>(
    field: &CellField<N>,
    weno: &WenoReconstructor,
    reference: impl Fn(f64) -> Result<State<N>>,
    component: usize,
) -> Result<ErrorNorms> {
    let (gx, gw) = gauss_legendre(5);
    let polys = weno.reconstruct_range(field, 0, field.n_cells())?;
    let mut norms = ErrorNorms::default();
    for (i, poly) in polys.iter().enumerate() {
        let x0 = field.x_left + i as f64 * field.dx;
        for (x, w) in gx.iter().zip(&gw) {
            let numeric = poly.evaluate(x - 0.5, 0)[component];
            let exact = reference(x0 + x * field.dx)?[component];
            let e = (numeric - exact).abs();
            norms.linf = norms.linf.max(e);
            norms.l1 += w * e * field.dx;
            norms.l2 += w * e * e * field.dx;
        }
    }
    norms.l2 = norms.l2.sqrt();
    Ok(norms)
}

/// Point evaluation of the piecewise polynomial reconstruction of `field`.
/// Points outside the domain are clamped to the boundary cells.
pub fn field_sampler<const N: usize>(
    field: &CellField<N>,
    weno: &WenoReconstructor,
) -> Result<impl Fn(f64) -> State<N>> {
    let polys = weno.reconstruct_range(field, 0, field.n_cells())?;
    let (x_left, dx, n) = (field.x_left, field.dx, field.n_cells());
    Ok(move |x: f64| {
        let s = (x - x_left) / dx;
        let i = (s.floor().max(0.0) as usize).min(n - 1);
        let xi = (s - i as f64 - 0.5).clamp(-0.5, 0.5);
        polys[i].evaluate(xi, 0)
    })
}

/// `log2(e_coarse / e_fine)` between consecutive entries whose meshes differ
/// by a factor of two. `None` marks an undefined order.
pub fn empirical_orders(meshes: &[usize], errors: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for i in 1..errors.len() {
        if meshes[i] != 2 * meshes[i - 1] {
            continue;
        }
        let (coarse, fine) = (errors[i - 1], errors[i]);
        if coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite() {
            out[i] = Some((coarse / fine).log2());
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub errors: ErrorNorms,
    pub order_linf: Option<f64>,
    pub order_l1: Option<f64>,
    pub order_l2: Option<f64>,
    pub steps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub system: String,
    pub order: usize,
    pub component: usize,
    pub rows: Vec<ConvergenceRow>,
}

fn fmt_order(o: Option<f64>) -> String {
    o.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

impl ConvergenceReport {
    /// Fills the order columns from the error columns.
    pub fn with_orders(mut self) -> Self {
        let meshes: Vec<usize> = self.rows.iter().map(|r| r.cells).collect();
        let pick = |f: fn(&ErrorNorms) -> f64| -> Vec<f64> { self.rows.iter().map(|r| f(&r.errors)).collect() };
        let linf = empirical_orders(&meshes, &pick(|e| e.linf));
        let l1 = empirical_orders(&meshes, &pick(|e| e.l1));
        let l2 = empirical_orders(&meshes, &pick(|e| e.l2));
        for (i, row) in self.rows.iter_mut().enumerate() {
            row.order_linf = linf[i];
            row.order_l1 = l1[i];
            row.order_l2 = l2[i];
        }
        self
    }

    /// Aligned table. The timing column is optional so that numeric content
    /// can be compared across machines and thread counts.
    pub fn to_text(&self, timing: bool) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} order {} component {}", self.system, self.order, self.component);
        let _ = write!(
            s,
            "{:>6} {:>12} {:>6} {:>12} {:>6} {:>12} {:>6} {:>7}",
            "N", "Linf", "ord", "L1", "ord", "L2", "ord", "steps"
        );
        if timing {
            let _ = write!(s, " {:>10}", "cpu[s]");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(
                s,
                "{:>6} {:>12.3e} {:>6} {:>12.3e} {:>6} {:>12.3e} {:>6} {:>7}",
                r.cells,
                r.errors.linf,
                fmt_order(r.order_linf),
                r.errors.l1,
                fmt_order(r.order_l1),
                r.errors.l2,
                fmt_order(r.order_l2),
                r.steps
            );
            if timing {
                let _ = write!(s, " {:>10.4}", r.seconds);
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("cells,linf,order_linf,l1,order_l1,l2,order_l2,steps,seconds\n");
        let o = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6}"));
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.10e},{},{:.10e},{},{:.10e},{},{},{:.6}",
                r.cells,
                r.errors.linf,
                o(r.order_linf),
                r.errors.l1,
                o(r.order_l1),
                r.errors.l2,
                o(r.order_l2),
                r.steps,
                r.seconds
            );
        }
        s
    }
}

/// Everything needed to run one test problem.
pub struct Problem<'a, const N: usize, S: BalanceLaw<N>> {
    pub system: &'a S,
    pub domain: (f64, f64),
    pub boundary: Boundary,
    pub initial: &'a (dyn Fn(f64) -> State<N> + Sync),
    pub t_out: f64,
    /// Component used for error norms.
    pub component: usize,
}

impl<const N: usize, S: BalanceLaw<N>> Problem<'_, N, S> {
    pub fn solve(&self, order: usize, cells: usize, config: &SchemeConfig) -> Result<(RunOutcome<N>, WenoReconstructor)> {
        let mut cfg = *config;
        cfg.degree = order_to_degree(order)?;
        let scheme = Scheme::new(self.system, cfg)?;
        let field = project_initial(cells, self.domain.0, self.domain.1, self.boundary, self.initial)?;
        let outcome = scheme.run(field, self.t_out)?;
        Ok((outcome, scheme.weno().clone()))
    }

    /// Errors against the exact solution at `t_out`.
    pub fn errors(&self, outcome: &RunOutcome<N>, weno: &WenoReconstructor) -> Result<ErrorNorms> {
        error_norms(
            &outcome.field,
            weno,
            |x| self.system.exact_solution(x, outcome.time),
            self.component,
        )
    }

    pub fn convergence(&self, order: usize, meshes: &[usize], config: &SchemeConfig) -> Result<ConvergenceReport> {
        let mut rows = Vec::with_capacity(meshes.len());
        for &cells in meshes {
            let (outcome, weno) = self.solve(order, cells, config)?;
            let errors = self.errors(&outcome, &weno)?;
            log::info!(
                "{} order {order} N={cells}: L1 {:.3e} ({} steps, {:.3}s)",
                self.system.name(),
                errors.l1,
                outcome.steps,
                outcome.cpu_seconds()
            );
            rows.push(ConvergenceRow {
                cells,
                errors,
                order_linf: None,
                order_l1: None,
                order_l2: None,
                steps: outcome.steps,
                seconds: outcome.cpu_seconds(),
            });
        }
        Ok(ConvergenceReport {
            system: self.system.name().to_string(),
            order,
            component: self.component,
            rows,
        }
        .with_orders())
    }
}

/// Scheme order `M + 1` to reconstruction degree `M`.
pub fn order_to_degree(order: usize) -> Result<usize> {
    if (2..=5).contains(&order) {
        Ok(order - 1)
    } else {
        Err(AderError::Config(format!("order must lie in 2..=5, got {order}")))
    }
}

/// Position where the first component first crosses `level`, scanning from
/// the left, by linear interpolation between cell centres.
pub fn front_position<const N: usize>(field: &CellField<N>, component: usize, level: f64) -> Option<f64> {
    let v: Vec<f64> = field.averages.iter().map(|q| q[component]).collect();
    v.windows(2).enumerate().find_map(|(i, w)| {
        let (a, b) = (w[0] - level, w[1] - level);
        if a == 0.0 {
            return Some(field.cell_center(i as isize));
        }
        if a * b < 0.0 {
            let x0 = field.cell_center(i as isize);
            Some(x0 + field.dx * a / (a - b))
        } else {
            None
        }
    })
}

/// Plot-ready profile: one line per cell, `x v1 ... vm`.
pub fn profile_text<const N: usize>(field: &CellField<N>, values: impl Fn(&State<N>) -> Vec<f64>) -> String {
    let mut s = String::new();
    for (i, q) in field.averages.iter().enumerate() {
        let _ = write!(s, "{:.12e}", field.cell_center(i as isize));
        for v in values(q) {
            let _ = write!(s, " {v:.12e}");
        }
        s.push('\n');
    }
    s
}

/// Named test problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Linear,
    Nonlinear,
    LevequeYee,
    EulerSmooth,
    ShuOsher,
}

impl FromStr for Preset {
    type Err = AderError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Self::Linear),
            "nonlinear" => Ok(Self::Nonlinear),
            "leveque-yee" | "levequeyee" | "stiff" => Ok(Self::LevequeYee),
            "euler-smooth" | "euler" => Ok(Self::EulerSmooth),
            "shu-osher" | "shuosher" => Ok(Self::ShuOsher),
            other => Err(AderError::Config(format!(
                "unknown system `{other}` (expected linear, nonlinear, leveque-yee, euler-smooth or shu-osher)"
            ))),
        }
    }
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Linear,
        Preset::Nonlinear,
        Preset::LevequeYee,
        Preset::EulerSmooth,
        Preset::ShuOsher,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Nonlinear => "nonlinear",
            Self::LevequeYee => "leveque-yee",
            Self::EulerSmooth => "euler-smooth",
            Self::ShuOsher => "shu-osher",
        }
    }

    pub fn defaults(self) -> RunSettings {
        let (domain, cfl, t_out, boundary, beta, meshes, cells) = match self {
            Self::Linear => ((0.0, 1.0), 0.9, 1.0, Boundary::Periodic, Some(-1.0), vec![8, 16, 32, 64, 128], 64),
            Self::Nonlinear => ((0.0, 1.0), 0.9, 0.1, Boundary::Periodic, Some(-1.0), vec![32, 64, 128, 256, 512], 128),
            Self::LevequeYee => ((0.0, 1.0), 0.2, 0.3, Boundary::Transmissive, Some(-10000.0), vec![300], 300),
            Self::EulerSmooth => ((0.0, 1.0), 0.9, 1.0, Boundary::Periodic, None, vec![8, 16, 32, 64, 128], 64),
            Self::ShuOsher => ((-1.0, 1.0), 0.5, 0.47, Boundary::Transmissive, None, vec![300], 300),
        };
        RunSettings {
            system: self,
            orders: vec![2, 3, 4, 5],
            cells,
            meshes,
            cfl,
            t_out,
            beta,
            amplitude: (self == Self::ShuOsher).then_some(1.0),
            boundary,
            domain,
        }
    }
}

/// Resolved run parameters of a preset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub system: Preset,
    pub orders: Vec<usize>,
    pub cells: usize,
    pub meshes: Vec<usize>,
    pub cfl: f64,
    pub t_out: f64,
    pub beta: Option<f64>,
    /// Density-wave amplitude of the Shu–Osher data.
    pub amplitude: Option<f64>,
    pub boundary: Boundary,
    pub domain: (f64, f64),
}

/// Overrides read from the command line or a configuration file. Keys match
/// the command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub system: Option<String>,
    pub order: Option<usize>,
    pub orders: Option<Vec<usize>>,
    pub cells: Option<usize>,
    pub meshes: Option<Vec<usize>>,
    pub cfl: Option<f64>,
    pub tout: Option<f64>,
    pub beta: Option<f64>,
    pub amplitude: Option<f64>,
    pub bc: Option<Boundary>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AderError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Fields set in `other` take precedence.
    pub fn merged(self, other: Overrides) -> Overrides {
        Overrides {
            system: other.system.or(self.system),
            order: other.order.or(self.order),
            orders: other.orders.or(self.orders),
            cells: other.cells.or(self.cells),
            meshes: other.meshes.or(self.meshes),
            cfl: other.cfl.or(self.cfl),
            tout: other.tout.or(self.tout),
            beta: other.beta.or(self.beta),
            amplitude: other.amplitude.or(self.amplitude),
            bc: other.bc.or(self.bc),
            out: other.out.or(self.out),
        }
    }

    pub fn resolve(&self) -> Result<RunSettings> {
        let preset: Preset = self
            .system
            .as_deref()
            .ok_or_else(|| AderError::Config("missing `system`".into()))?
            .parse()?;
        let mut s = preset.defaults();
        if let Some(o) = self.order {
            s.orders = vec![o];
        }
        if let Some(o) = &self.orders {
            s.orders = o.clone();
        }
        if let Some(c) = self.cells {
            s.cells = c;
        }
        if let Some(m) = &self.meshes {
            s.meshes = m.clone();
        }
        if let Some(c) = self.cfl {
            s.cfl = c;
        }
        if let Some(t) = self.tout {
            s.t_out = t;
        }
        if let Some(b) = self.beta {
            if s.beta.is_none() {
                return Err(AderError::Config(format!("system `{}` has no beta parameter", preset.name())));
            }
            s.beta = Some(b);
        }
        if let Some(a) = self.amplitude {
            if s.amplitude.is_none() {
                return Err(AderError::Config(format!("system `{}` has no amplitude parameter", preset.name())));
            }
            s.amplitude = Some(a);
        }
        if let Some(bc) = self.bc {
            s.boundary = bc;
        }
        for &o in &s.orders {
            order_to_degree(o)?;
        }
        if s.cells == 0 || s.meshes.contains(&0) {
            return Err(AderError::Config("cell counts must be positive".into()));
        }
        if !(s.t_out > 0.0) {
            return Err(AderError::Config(format!("tout must be positive, got {}", s.t_out)));
        }
        Ok(s)
    }
}

/// Parses `2..5`, `2..=5` or `2,3,4`.
pub fn parse_list(text: &str) -> Result<Vec<usize>> {
    let bad = || AderError::Config(format!("cannot parse list `{text}`"));
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let b = b.trim_start_matches('=');
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

fn euler_conserved(eos: &Euler, w: PrimitiveState) -> State<3> {
    State::<3>::new(w.rho, w.rho * w.u, w.p / (eos.gamma - 1.0) + 0.5 * w.rho * w.u * w.u)
}

fn euler_primitive_values(eos: &Euler) -> impl Fn(&State<3>) -> Vec<f64> + '_ {
    move |q| {
        let u = q[1] / q[0];
        let p = (eos.gamma - 1.0) * (q[2] - 0.5 * q[0] * u * u);
        vec![q[0], u, p]
    }
}

/// Files written and summaries produced by [`run_preset`].
#[derive(Debug, Clone, Default)]
pub struct PresetArtifacts {
    pub files: Vec<PathBuf>,
    pub reports: Vec<ConvergenceReport>,
    pub summary: Vec<String>,
}

/// What [`run_preset`] should do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// One run per order on `settings.cells`.
    Solve,
    /// A run per order and mesh, with convergence tables.
    Converge,
}

fn write_file(out: &Path, name: &str, text: &str, artifacts: &mut PresetArtifacts) -> Result<()> {
    let path = out.join(name);
    fs::write(&path, text)?;
    artifacts.files.push(path);
    Ok(())
}

struct Emit<'a> {
    out: &'a Path,
    task: Task,
    settings: &'a RunSettings,
    config: SchemeConfig,
}

impl Emit<'_> {
    fn run<const N: usize, S: BalanceLaw<N>>(
        &self,
        problem: &Problem<'_, N, S>,
        values: &dyn Fn(&State<N>) -> Vec<f64>,
        has_exact: bool,
        artifacts: &mut PresetArtifacts,
    ) -> Result<Vec<(usize, RunOutcome<N>, WenoReconstructor)>> {
        let name = self.settings.system.name();
        let mut finals = Vec::new();
        for &order in &self.settings.orders {
            match self.task {
                Task::Converge if has_exact => {
                    let report = problem.convergence(order, &self.settings.meshes, &self.config)?;
                    write_file(self.out, &format!("{name}_order{order}_convergence.txt"), &report.to_text(true), artifacts)?;
                    write_file(self.out, &format!("{name}_order{order}_convergence.csv"), &report.to_csv(), artifacts)?;
                    artifacts.summary.push(report.to_text(true));
                    artifacts.reports.push(report);
                }
                _ => {
                    let meshes = match self.task {
                        Task::Solve => vec![self.settings.cells],
                        Task::Converge => self.settings.meshes.clone(),
                    };
                    for cells in meshes {
                        let (outcome, weno) = problem.solve(order, cells, &self.config)?;
                        write_file(
                            self.out,
                            &format!("{name}_order{order}_n{cells}.dat"),
                            &profile_text(&outcome.field, values),
                            artifacts,
                        )?;
                        let mut line = format!(
                            "{name} order {order} N={cells}: t={:.6} steps={} cpu={:.3}s",
                            outcome.time,
                            outcome.steps,
                            outcome.cpu_seconds()
                        );
                        if has_exact {
                            let e = problem.errors(&outcome, &weno)?;
                            let _ = write!(line, " Linf={:.3e} L1={:.3e} L2={:.3e}", e.linf, e.l1, e.l2);
                        }
                        artifacts.summary.push(line);
                        finals.push((order, outcome, weno));
                    }
                }
            }
        }
        Ok(finals)
    }
}

/// Runs a preset and writes its artifacts into `out`.
pub fn run_preset(settings: &RunSettings, task: Task, out: &Path) -> Result<PresetArtifacts> {
    fs::create_dir_all(out)?;
    let mut artifacts = PresetArtifacts::default();
    let emit = Emit {
        out,
        task,
        settings,
        config: SchemeConfig::with_order(settings.orders.first().copied().unwrap_or(2), settings.cfl),
    };
    let beta = settings.beta.unwrap_or(-1.0);
    let (domain, boundary, t_out) = (settings.domain, settings.boundary, settings.t_out);
    let all = |q: &State<2>| q.iter().copied().collect::<Vec<f64>>();

    match settings.system {
        Preset::Linear => {
            let system = linear_system(1.0, beta);
            let initial = |x: f64| system.exact_solution(x, 0.0).expect("closed form");
            let problem = Problem { system: &system, domain, boundary, initial: &initial, t_out, component: 0 };
            emit.run(&problem, &all, true, &mut artifacts)?;
        }
        Preset::Nonlinear => {
            let system = nonlinear_system(beta)?;
            let initial = |x: f64| system.exact_solution(x, 0.0).expect("initial data is explicit");
            let problem = Problem { system: &system, domain, boundary, initial: &initial, t_out, component: 0 };
            emit.run(&problem, &all, true, &mut artifacts)?;
        }
        Preset::LevequeYee => {
            let system = leveque_yee_system(beta);
            let initial = |x: f64| system.initial(x);
            let problem = Problem { system: &system, domain, boundary, initial: &initial, t_out, component: 0 };
            let finals = emit.run(&problem, &|q: &State<1>| vec![q[0]], false, &mut artifacts)?;
            for (order, outcome, _) in finals {
                let front = front_position(&outcome.field, 0, 0.5);
                artifacts.summary.push(format!(
                    "leveque-yee order {order}: front at {} (exact {:.4})",
                    front.map_or_else(|| "none".into(), |x| format!("{x:.4}")),
                    system.x_step + outcome.time
                ));
            }
        }
        Preset::EulerSmooth => {
            let system = euler_system(1.4)?;
            let initial = |x: f64| system.exact_solution(x, 0.0).expect("positive density");
            let problem = Problem { system: &system, domain, boundary, initial: &initial, t_out, component: 0 };
            emit.run(&problem, &euler_primitive_values(&system), true, &mut artifacts)?;
        }
        Preset::ShuOsher => {
            let system = euler_system(1.4)?;
            let amplitude = settings.amplitude.unwrap_or(1.0);
            let initial = |x: f64| euler_conserved(&system, shu_osher_initial_with_amplitude(x, amplitude));
            let problem = Problem { system: &system, domain, boundary, initial: &initial, t_out, component: 0 };
            let values = euler_primitive_values(&system);
            let finals = emit.run(&problem, &values, false, &mut artifacts)?;

            let (reference, ref_weno) =
                problem.solve(SHU_OSHER_REFERENCE_ORDER, SHU_OSHER_REFERENCE_CELLS, &emit.config)?;
            write_file(
                out,
                &format!("shu-osher_reference_order{SHU_OSHER_REFERENCE_ORDER}_n{SHU_OSHER_REFERENCE_CELLS}.dat"),
                &profile_text(&reference.field, &values),
                &mut artifacts,
            )?;
            let sample = field_sampler(&reference.field, &ref_weno)?;
            for (order, outcome, weno) in finals {
                let d = error_norms(&outcome.field, &weno, |x| Ok(sample(x)), 0)?;
                artifacts.summary.push(format!(
                    "shu-osher order {order} N={}: density L1 distance to reference {:.4e}",
                    outcome.field.n_cells(),
                    d.l1
                ));
            }
        }
    }
    Ok(artifacts)
}
