use latent_rank::dsl::presets::{ResidualLabeling, SbMtmm};
use latent_rank::estimation::FitConfig;
use latent_rank::identification::{rank_scan, RankTolerance};
use latent_rank::report::{
    figure2_svg, figure3_svg, params_csv, rank_scan_csv, records_csv, shapiro_histogram_csv, shapiro_summary_csv,
    summary_csv, summary_json,
};
use latent_rank::simulation::{run_experiment, shapiro_experiment, Experiment, SimConfig};

fn config() -> SimConfig {
    SimConfig {
        experiment: Experiment::SbMtmm,
        n_grid: vec![100, 1000],
        delta_grid: vec![0.0, 0.3],
        nsim: 3,
        seed: 5,
        fit: FitConfig::default(),
    }
}

#[test]
fn records_csv_layout() {
    let cfg = config();
    let (records, _) = run_experiment(&cfg).unwrap();
    let csv = records_csv(&cfg, &records);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 12);
    assert!(lines[0].starts_with("experiment,n,delta,rep,converged,stop_reason,admissible,l11,"));
    assert!(lines[0].ends_with(",phi6,loss"));
    let cols = lines[0].split(',').count();
    assert_eq!(cols, 7 + 24 + 1);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == cols));
    assert!(lines[1].starts_with("SBMTMM,100,0,0,"));
}

#[test]
fn summaries_are_deterministic() {
    let cfg = config();
    let (ra, sa) = run_experiment(&cfg).unwrap();
    let (rb, sb) = run_experiment(&cfg).unwrap();
    assert_eq!(records_csv(&cfg, &ra), records_csv(&cfg, &rb));
    assert_eq!(summary_csv(&sa), summary_csv(&sb));
    assert_eq!(summary_json(&sa), summary_json(&sb));
    assert_eq!(figure3_svg(&sa), figure3_svg(&sb));
    assert_eq!(summary_csv(&sa).lines().count(), 5);
    assert_eq!(params_csv(&sa).lines().count(), 1 + 4 * 24 * 3);
    let json: serde_json::Value = serde_json::from_str(&summary_json(&sa)).unwrap();
    assert_eq!(json["conditions"].as_array().unwrap().len(), 4);
}

#[test]
fn figure3_has_series_per_delta_and_panel() {
    let (_, s) = run_experiment(&config()).unwrap();
    let svg = figure3_svg(&s);
    assert!(svg.starts_with("<svg "));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 2 * 2);
    assert_eq!(svg.matches("<circle").count(), 2 * 4);
    assert!(svg.contains("δ = 0.3"));
}

#[test]
fn shapiro_outputs() {
    let cfg = SimConfig {
        experiment: Experiment::Shapiro,
        n_grid: vec![200],
        delta_grid: vec![],
        nsim: 20,
        seed: 1,
        fit: FitConfig::default(),
    };
    let (_, _, sums) = shapiro_experiment(&cfg, 8).unwrap();
    let hist = shapiro_histogram_csv(&sums);
    assert_eq!(hist.lines().count(), 1 + 8);
    let total: usize = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 20);
    assert_eq!(shapiro_summary_csv(&sums).lines().count(), 2);
    let svg = figure2_svg(&sums);
    assert_eq!(svg.matches("<rect").count(), 1 + 1 + 8);
}

#[test]
fn rank_scan_table() {
    let sb = SbMtmm::<f64>::new(ResidualLabeling::PerVariable);
    let rows = rank_scan(&sb.spec, |d| sb.population_theta(d), &[0.0, 0.3], RankTolerance::Default);
    let csv = rank_scan_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "delta,smallest_singular_value,rank,condition_number");
    assert!(lines[1].starts_with("0,") && lines[1].contains(",23,"));
    assert!(lines[2].starts_with("0.3,") && lines[2].contains(",24,"));
}
