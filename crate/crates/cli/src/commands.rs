//! The six subcommands: solve, evaluate, stability, simulate, fig2, fig3.

use crate::config::ExperimentConfig;
use crate::report::{json_object, kv_line, sig12, write_output, Csv};
use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;
use std::path::PathBuf;
use wncs_core::oracle;
use wncs_core::sim::{estimate_cost, SimConfig};
use wncs_core::smdp::{solve_rvi, Policy, RviSolution, SmdpSpec};
use wncs_core::stability::{stability_report, variable_length_stable};
use wncs_core::{ChannelModel64, Error as CoreError, SystemModel64};

/// Resolved invocation: config plus command-line overrides.
pub struct Context64 {
    pub cfg: ExperimentConfig,
    pub out_dir: PathBuf,
    pub n: usize,
    pub m: usize,
    pub seeds: Option<Vec<u64>>,
}

/// Where a policy for evaluate/simulate comes from.
pub enum PolicySource {
    /// Solve the decision process first.
    Optimal,
    /// Fixed packet length for every state.
    Fixed(usize),
    /// Read a CSV written by `solve`.
    Csv(PathBuf),
}

impl Context64 {
    fn system(&self) -> Result<SystemModel64> {
        self.system_with_depth(self.n + self.m)
    }

    fn system_with_depth(&self, d_max: usize) -> Result<SystemModel64> {
        self.cfg.system_model_with_depth(d_max)
    }

    fn channel(&self) -> Result<ChannelModel64> {
        self.cfg.channel_model()
    }

    fn seeds(&self) -> Result<Vec<u64>> {
        if let Some(s) = &self.seeds {
            return Ok(s.clone());
        }
        Ok(self.cfg.sim_block()?.seeds.clone())
    }

    /// Refuses instances that no policy can stabilize; the truncated solver
    /// would otherwise return a gain that is purely a truncation artifact.
    fn stability_gate(&self, system: &SystemModel64, channel: &ChannelModel64) -> Result<()> {
        let verdict = variable_length_stable(system, channel, self.m)?;
        if !verdict.stable {
            return Err(anyhow::Error::new(CoreError::Divergence(format!(
                "no packet length can stabilize this loop: min over l of g(l)*rho^(2l) = {} \
                 (>= 1, variable-length stability condition violated); the average-cost \
                 iteration cannot converge on the untruncated problem",
                verdict.min_product
            ))));
        }
        Ok(())
    }

    fn solve_at(&self, n: usize) -> Result<(SmdpSpec<f64>, RviSolution<f64>)> {
        let system = self.system_with_depth(n + self.m)?;
        let channel = self.channel()?;
        self.stability_gate(&system, &channel)?;
        let spec = SmdpSpec::new(system, channel, n, self.m)?;
        let sol = solve_rvi(
            &spec.transform()?,
            self.cfg.solver.epsilon,
            self.cfg.solver.max_iters,
        )?;
        Ok((spec, sol))
    }

    fn resolve_policy(&self, source: &PolicySource, n: usize) -> Result<(String, Policy<f64>)> {
        match source {
            PolicySource::Optimal => {
                let (_, sol) = self.solve_at(n)?;
                Ok(("optimal".into(), sol.policy))
            }
            PolicySource::Fixed(l0) => Ok((format!("fixed l0={l0}"), Policy::fixed(*l0, n)?)),
            PolicySource::Csv(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read policy {}", path.display()))?;
                let pol = Policy::<f64>::from_csv(&text)?;
                let mut lengths = pol.lengths().to_vec();
                // adapt to the requested truncation: states beyond the table
                // reuse the last action, extra states are dropped
                lengths.resize(n, *lengths.last().expect("non-empty policy"));
                Ok((path.display().to_string(), Policy::from_lengths(lengths)?))
            }
        }
    }
}

pub fn cmd_solve(ctx: &Context64) -> Result<()> {
    let (spec, sol) = ctx.solve_at(ctx.n)?;
    let policy_path = write_output(&ctx.out_dir, "policy.csv", &sol.policy.to_csv())?;
    let summary = json_object(&[
        ("n", json!(spec.n_states())),
        ("m", json!(spec.m_actions())),
        ("epsilon", json!(ctx.cfg.solver.epsilon)),
        ("max_iters", json!(ctx.cfg.solver.max_iters)),
        ("gain", json!(sol.gain)),
        ("iterations", json!(sol.iterations)),
        ("final_span", json!(sol.final_span)),
    ]);
    write_output(&ctx.out_dir, "solve_summary.json", &summary)?;
    println!(
        "{}",
        kv_line(&[
            ("n", spec.n_states().to_string()),
            ("m", spec.m_actions().to_string()),
            ("gain", sig12(sol.gain)),
            ("iterations", sol.iterations.to_string()),
            ("policy", policy_path.display().to_string()),
        ])
    );
    Ok(())
}

pub fn cmd_evaluate(ctx: &Context64, source: &PolicySource) -> Result<()> {
    let system = ctx.system()?;
    let channel = ctx.channel()?;
    let (label, policy) = ctx.resolve_policy(source, ctx.n)?;
    let spec = SmdpSpec::new(system, channel, ctx.n, ctx.m.max(max_len(&policy)))?;
    let gain = spec.evaluate_policy(&policy)?;
    let summary = json_object(&[
        ("n", json!(ctx.n)),
        ("policy", json!(label)),
        ("gain", json!(gain)),
    ]);
    write_output(&ctx.out_dir, "evaluate_summary.json", &summary)?;
    println!(
        "{}",
        kv_line(&[
            ("n", ctx.n.to_string()),
            ("policy", label),
            ("gain", sig12(gain)),
        ])
    );
    Ok(())
}

fn max_len(policy: &Policy<f64>) -> usize {
    *policy.lengths().iter().max().expect("non-empty policy")
}

pub fn cmd_stability(ctx: &Context64) -> Result<()> {
    let system = ctx.system()?;
    let channel = ctx.channel()?;
    let report = stability_report(&system, &channel, ctx.m)?;
    let mut csv = Csv::new(&["l", "g", "rho2l", "product", "stable"]);
    for rec in &report.per_length {
        csv.row(&[
            rec.l.to_string(),
            sig12(rec.g),
            sig12(rec.rho_2l),
            sig12(rec.product),
            rec.stable.to_string(),
        ]);
        if rec.boundary_warning {
            println!(
                "warning: product for l={} sits at the stability boundary within 1e-15",
                rec.l
            );
        }
    }
    let path = write_output(&ctx.out_dir, "stability.csv", &csv.into_string())?;
    let v = &report.variable;
    println!(
        "variable-length: {} (min product {} at l={}, searched 1..={}{}) -> {}",
        if v.stable { "stable" } else { "unstable" },
        sig12(v.min_product),
        v.best_l,
        v.searched_l_max,
        if v.exact_over_all_lengths {
            ", exact over all lengths"
        } else {
            ""
        },
        path.display()
    );
    Ok(())
}

pub fn cmd_fig2(ctx: &Context64, n_list: Option<Vec<usize>>) -> Result<()> {
    let n_list = n_list.unwrap_or_else(|| ctx.cfg.solver.fig2_n_list.clone());
    if n_list.is_empty() {
        bail!("fig2 needs at least one truncation level");
    }
    let mut solutions = Vec::new();
    for &n in &n_list {
        if n < ctx.m {
            bail!("fig2 truncation N={n} is below M={}", ctx.m);
        }
        let (_, sol) = ctx.solve_at(n)?;
        solutions.push((n, sol));
    }
    let rows = n_list.iter().copied().min().expect("non-empty list");
    let header: Vec<String> = std::iter::once("d".to_string())
        .chain(n_list.iter().map(|n| format!("l_n{n}")))
        .collect();
    let mut csv = Csv::new(&header.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    for d in 1..=rows {
        let mut row = vec![d.to_string()];
        for (_, sol) in &solutions {
            row.push(sol.policy.lengths()[d - 1].to_string());
        }
        csv.row(&row);
    }
    let path = write_output(&ctx.out_dir, "fig2_policies.csv", &csv.into_string())?;
    let gains = solutions
        .iter()
        .map(|(n, sol)| (format!("gain_n{n}"), sig12(sol.gain)))
        .collect::<Vec<_>>();
    println!(
        "{} -> {}",
        kv_line(
            &gains
                .iter()
                .map(|(k, v)| (k.as_str(), v.clone()))
                .collect::<Vec<_>>()
        ),
        path.display()
    );
    Ok(())
}

pub fn cmd_simulate(ctx: &Context64, source: &PolicySource) -> Result<()> {
    let sim = ctx.cfg.sim_block()?.clone();
    let seeds = ctx.seeds()?;
    let system = ctx.system()?;
    let channel = ctx.channel()?;
    let (label, policy) = ctx.resolve_policy(source, ctx.n)?;
    let cfg = SimConfig::new(system, channel, policy, sim.t, sim.warmup, seeds)?;
    let report = estimate_cost(&cfg)?;

    let mut csv = Csv::new(&["seed", "mean_cost", "slots_counted", "packets", "diverged_at"]);
    for rec in &report.per_seed {
        csv.row(&[
            rec.seed.to_string(),
            sig12(rec.mean_cost),
            rec.slots_counted.to_string(),
            rec.packets_sent.to_string(),
            rec.diverged_at.map(|s| s.to_string()).unwrap_or_default(),
        ]);
    }
    write_output(&ctx.out_dir, "sim_seeds.csv", &csv.into_string())?;

    let mut hist = Csv::new(&["d", "count"]);
    for (&d, &c) in &report.aoi_histogram {
        hist.row(&[d.to_string(), c.to_string()]);
    }
    write_output(&ctx.out_dir, "aoi_histogram.csv", &hist.into_string())?;

    let success: serde_json::Map<String, serde_json::Value> = report
        .success_by_length
        .iter()
        .map(|(&l, &(att, suc))| {
            (
                l.to_string(),
                json!({"attempts": att, "successes": suc}),
            )
        })
        .collect();
    let summary = json_object(&[
        ("policy", json!(label)),
        ("t", json!(cfg.horizon)),
        ("warmup", json!(cfg.warmup)),
        ("seed_count", json!(cfg.seeds.len())),
        ("pooled_mean", json!(report.pooled_mean)),
        ("pooled_std_err", json!(report.pooled_std_err)),
        ("any_diverged", json!(report.any_diverged)),
        ("success_by_length", serde_json::Value::Object(success)),
    ]);
    write_output(&ctx.out_dir, "sim_summary.json", &summary)?;
    println!(
        "{}",
        kv_line(&[
            ("policy", label),
            ("pooled_mean", sig12(report.pooled_mean)),
            ("pooled_std_err", sig12(report.pooled_std_err)),
            ("diverged", report.any_diverged.to_string()),
        ])
    );
    Ok(())
}

pub fn cmd_fig3(ctx: &Context64) -> Result<()> {
    let sim = ctx.cfg.sim_block()?.clone();
    let seeds = ctx.seeds()?;
    let channel = ctx.channel()?;
    let n_eval = ctx.n.max(200);
    let system_eval = ctx.system_with_depth(n_eval + ctx.m)?;

    let mut csv = Csv::new(&[
        "l",
        "status",
        "analytic_j",
        "analytic_error_bound",
        "stationary_j",
        "solver_gain",
        "mc_mean",
        "mc_stderr",
        "mc_diverged",
    ]);
    let mut best_fixed: Option<(usize, f64)> = None;
    let mut fixed_json = serde_json::Map::new();

    for l in 1..=ctx.m {
        let product = channel.error_prob(l)? * system_eval.rho().powi(2 * l as i32);
        if product >= 1.0 {
            csv.row(&[
                l.to_string(),
                "divergent".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
            fixed_json.insert(l.to_string(), json!({"status": "divergent"}));
            continue;
        }
        let oracle_cost = oracle::fixed_length_cost(&system_eval, &channel, l, 1e-12)?;
        let spec = SmdpSpec::new(system_eval.clone(), channel.clone(), n_eval, l)?;
        let stationary = spec.evaluate_policy(&Policy::fixed(l, n_eval)?)?;
        let mc_cfg = SimConfig::new(
            system_eval.clone(),
            channel.clone(),
            Policy::fixed(l, 1)?,
            sim.t,
            sim.warmup,
            seeds.clone(),
        )?;
        let mc = estimate_cost(&mc_cfg)?;
        csv.row(&[
            l.to_string(),
            "stable".into(),
            sig12(oracle_cost.j),
            sig12(oracle_cost.truncation_error_bound),
            sig12(stationary),
            String::new(),
            sig12(mc.pooled_mean),
            sig12(mc.pooled_std_err),
            mc.any_diverged.to_string(),
        ]);
        fixed_json.insert(
            l.to_string(),
            json!({
                "status": "stable",
                "analytic_j": oracle_cost.j,
                "semi_analytic": oracle_cost.semi_analytic,
                "stationary_j": stationary,
                "mc_mean": mc.pooled_mean,
                "mc_stderr": mc.pooled_std_err,
            }),
        );
        if best_fixed.is_none_or(|(_, j)| oracle_cost.j < j) {
            best_fixed = Some((l, oracle_cost.j));
        }
    }

    let (_, var_sol) = ctx.solve_at(ctx.n)?;
    let mc_var_cfg = SimConfig::new(
        system_eval.clone(),
        channel.clone(),
        var_sol.policy.clone(),
        sim.t,
        sim.warmup,
        seeds.clone(),
    )?;
    let mc_var = estimate_cost(&mc_var_cfg)?;
    csv.row(&[
        "variable".into(),
        "stable".into(),
        String::new(),
        String::new(),
        String::new(),
        sig12(var_sol.gain),
        sig12(mc_var.pooled_mean),
        sig12(mc_var.pooled_std_err),
        mc_var.any_diverged.to_string(),
    ]);

    let (best_l, best_j) = best_fixed
        .ok_or_else(|| anyhow!("no stable fixed length among 1..={}; nothing to compare", ctx.m))?;
    let saving = 1.0 - var_sol.gain / best_j;
    let mc_best = fixed_json
        .get(&best_l.to_string())
        .and_then(|v| v.get("mc_mean"))
        .and_then(|v| v.as_f64())
        .expect("best fixed row exists");
    let mc_saving = 1.0 - mc_var.pooled_mean / mc_best;

    let path = write_output(&ctx.out_dir, "fig3_costs.csv", &csv.into_string())?;
    let summary = json_object(&[
        ("fixed", serde_json::Value::Object(fixed_json)),
        ("variable_gain", json!(var_sol.gain)),
        ("variable_mc_mean", json!(mc_var.pooled_mean)),
        ("variable_mc_stderr", json!(mc_var.pooled_std_err)),
        ("best_fixed_l", json!(best_l)),
        ("best_fixed_j", json!(best_j)),
        ("saving_vs_best_fixed", json!(saving)),
        ("mc_saving_vs_best_fixed", json!(mc_saving)),
    ]);
    write_output(&ctx.out_dir, "fig3_summary.json", &summary)?;
    println!(
        "saving: 1 - J_var/J_fixed(l={best_l}) = {} (Monte Carlo estimate {}) -> {}",
        sig12(saving),
        sig12(mc_saving),
        path.display()
    );
    Ok(())
}
