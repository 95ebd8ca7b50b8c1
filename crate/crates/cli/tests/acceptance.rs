//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use fadetrack_cli::verify::{channel_statistics, growth_ratio, information_vs_gain, second_moment_quadrature, sigma_point_linear};
use fadetrack_cli::{run, Cli, Command, CommonArgs, Format};
use fadetrack_core::filter::FilterVariant;
use fadetrack_core::numerics::truncated_normal_second_moment;
use fadetrack_core::sim::{
    energy_change_rate, run_monte_carlo, run_monte_carlo_with, run_single, stability_margin, BoundConstants, LinkMode,
    MetricsReport, MonteCarloOutput, PerNode, ScenarioConfig,
};

struct Suite {
    failures: usize,
}

impl Suite {
    fn record(&mut self, id: u32, name: &str, started: Instant, result: Result<String, String>) {
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                self.failures += 1;
                println!("criterion {id:>2} FAIL  {name} [{secs:.1}s]: {detail}");
            }
        }
    }
}

fn check(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn with_q(cfg: &ScenarioConfig, q: f64) -> LinkMode {
    let nominal = cfg.link.power_mw();
    LinkMode::Q { q, nominal_power_mw: nominal }
}

fn ss(r: &MetricsReport) -> (f64, f64) {
    (r.steady_state.rmse_position_m, r.steady_state.rmse_position_se_m)
}

fn c5_ordering(cfg: &ScenarioConfig) -> (Result<String, String>, MonteCarloOutput) {
    let mut outs: Vec<MonteCarloOutput> = FilterVariant::ALL.iter().map(|&v| run_monte_carlo(cfg, v, 1).expect("runs")).collect();
    let nfc = outs.pop().unwrap();
    let efc = outs.pop().unwrap();
    let fc = outs.pop().unwrap();
    let (f, fse) = ss(&fc.report);
    let (e, ese) = ss(&efc.report);
    let (n, nse) = ss(&nfc.report);
    let v = fc.report.steady_state.rmse_velocity_m_per_s;
    let gap_fe = (f - e) / fse.hypot(ese);
    let gap_nf = (n - f) / nse.hypot(fse);
    let ratio_p = (f / 12.824).max(12.824 / f);
    let ratio_v = (v / 6.693).max(6.693 / v);
    let failed = fc.report.failures.len() + efc.report.failures.len() + nfc.report.failures.len();
    let ok = e <= f && f <= n && gap_fe > 3.0 && gap_nf > 3.0 && n >= 10.0 * f && ratio_p <= 3.0 && ratio_v <= 3.0 && failed == 0;
    let detail = format!(
        "eFc {e:.3} m <= Fc {f:.3} m <= nFc {n:.3} m; gaps {gap_fe:.1} and {gap_nf:.1} SE; nFc/Fc {:.1}; \
         Fc {f:.3} m vs 12.824 (x{ratio_p:.2}), {v:.3} m/s vs 6.693 (x{ratio_v:.2}); {failed} failed runs",
        n / f
    );
    (check(ok, detail), fc)
}

fn c6_monotone(cfg: &ScenarioConfig) -> Result<String, String> {
    let qs = [0.1, 0.3, 0.5, 0.7, 1.0];
    let reports: Vec<MetricsReport> = qs
        .iter()
        .map(|&q| run_monte_carlo_with(cfg, &with_q(cfg, q), FilterVariant::Fc, 1).expect("runs").report)
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let (p, se) = ss(r);
        parts.push(format!("q={} {p:.3}±{se:.3}", qs[i]));
        if i > 0 {
            let (prev, pse) = ss(&reports[i - 1]);
            ok &= p <= prev + 2.0 * se.hypot(pse);
        }
    }
    check(ok, parts.join(", "))
}

fn c7_energy(cfg: &ScenarioConfig) -> Result<String, String> {
    let mut short = cfg.clone();
    short.runs = 2;
    short.steps = 10;
    short.steady_state_window = 5;
    let energy = |u: f64| {
        run_monte_carlo_with(&short, &LinkMode::Power { power_mw: u }, FilterVariant::Fc, 1)
            .expect("runs")
            .report
            .energy
    };
    let reference = energy(400.0);
    let reported = [-76.16, -69.75, -65.00, -58.50];
    let mut ok = true;
    let mut parts = Vec::new();
    for (u, published) in [93.0, 118.0, 140.0, 168.0].into_iter().zip(reported) {
        let rate = energy_change_rate(&energy(u), &reference).unwrap_or(f64::NAN);
        let pct = 100.0 * rate;
        ok &= rate == u / 400.0 - 1.0 && (pct - published).abs() <= 1.0;
        parts.push(format!("{u} mW {pct:+.2}% (reported {published:+.2}%)"));
    }
    check(ok, parts.join(", "))
}

fn c8_positivity(cfg: &ScenarioConfig, fc: &MonteCarloOutput) -> Result<String, String> {
    let min_eig = fc.runs.iter().flat_map(|r| r.eig_min.iter().flatten().copied()).fold(f64::INFINITY, f64::min);
    let (first, last) = growth_ratio(&fc.runs, cfg.steady_state_window);
    let mut diag = cfg.clone();
    diag.stability_diagnostics = true;
    let bc = BoundConstants::from_scenario(cfg);
    let margin = run_single(&diag, &diag.network_model(0, &diag.link), FilterVariant::Fc, 0)
        .and_then(|r| stability_margin(&r.diffusion, &bc))
        .map_or_else(
            |e| format!("margin unavailable ({e})"),
            |s| format!("margin report-only: max ratio {:?}, {} steps indeterminate", s.max_ratio, s.indeterminate),
        );
    check(
        min_eig > 0.0 && fc.report.failures.is_empty() && last <= 10.0 * first,
        format!("min eigenvalue {min_eig:.3}; late/early max eigenvalue {:.3}; {margin}", last / first),
    )
}

fn c9_workers() -> Result<String, String> {
    let dir = tempfile::tempdir().expect("tempdir");
    let summary = |workers: usize| {
        let out = dir.path().join(format!("w{workers}"));
        let args = CommonArgs {
            scenario: None,
            overrides: vec![],
            out: out.clone(),
            workers: Some(workers),
            format: Format::Json,
        };
        let outcome = run(&Cli { command: Command::Simulate(args) }).expect("simulate");
        assert_eq!(outcome.exit_code, 0);
        std::fs::read(out.join("summary.json")).expect("summary")
    };
    let (a, b) = (summary(1), summary(8));
    check(a == b, format!("summary.json {} bytes, identical: {}", a.len(), a == b))
}

fn c10_degenerate(cfg: &ScenarioConfig) -> Result<String, String> {
    let mut c = cfg.clone();
    c.sensors.estimation_error_scale = PerNode::Constant(1e-12);
    c.sensors.estimation_error_bound = PerNode::Constant(1e-12);
    let model = c.network_model(0, &c.link);
    let fc = run_single(&c, &model, FilterVariant::Fc, 0).map_err(|e| e.to_string())?;
    let efc = run_single(&c, &model, FilterVariant::EFc, 0).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (a, b) in fc.estimates.iter().zip(&efc.estimates) {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((&x.x - &y.x).amax() / y.x.amax().max(1.0));
            worst = worst.max((&x.p - &y.p).amax() / y.p.amax().max(1.0));
        }
    }
    check(worst <= 1e-8 && fc.steps() == 100, format!("{} steps, largest relative difference {worst:.2e}", fc.steps()))
}

fn main() -> ExitCode {
    let cfg = ScenarioConfig::reference();
    let mut suite = Suite { failures: 0 };

    let t = Instant::now();
    let e = information_vs_gain(cfg.master_seed, 1000);
    suite.record(1, "information form equals gain form", t, check(e <= 1e-10, format!("1000 instances, max rel diff {e:.2e} <= 1e-10")));

    let t = Instant::now();
    let e = sigma_point_linear(cfg.master_seed, 1000);
    suite.record(2, "sigma points reproduce F P F' + Q", t, check(e <= 1e-9, format!("1000 instances, max rel diff {e:.2e} <= 1e-9")));

    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for s in [1.0, 10f64.sqrt(), 20f64.sqrt()] {
        let q = second_moment_quadrature(s, 0.1);
        worst = worst.max((truncated_normal_second_moment(s, 0.1) - q).abs() / q);
    }
    suite.record(3, "truncated second moment vs quadrature", t, check(worst <= 1e-8, format!("max rel err {worst:.2e} <= 1e-8")));

    let t = Instant::now();
    let z = channel_statistics(cfg.master_seed, 1_000_000);
    suite.record(4, "channel statistics, 1e6 draws", t, check(z <= 3.0, format!("largest |z| {z:.2} <= 3")));

    let t = Instant::now();
    let (r5, fc) = c5_ordering(&cfg);
    suite.record(5, "variant ordering at q = 0.5", t, r5);

    let t = Instant::now();
    suite.record(6, "RMSE non-increasing in q", t, c6_monotone(&cfg));

    let t = Instant::now();
    suite.record(7, "energy change rates", t, c7_energy(&cfg));

    let t = Instant::now();
    suite.record(8, "covariance positivity and boundedness", t, c8_positivity(&cfg, &fc));

    let t = Instant::now();
    suite.record(9, "workers 1 vs 8 byte-identical", t, c9_workers());

    let t = Instant::now();
    suite.record(10, "Fc equals eFc without estimation error", t, c10_degenerate(&cfg));

    println!("acceptance: {} of 10 criteria passed", 10 - suite.failures);
    if suite.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
