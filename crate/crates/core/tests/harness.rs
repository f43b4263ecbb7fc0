use tvtomo::harness::{emit, logistic_crossing, run_plan, ExperimentPlan, PhaseGrid};

fn small_plan() -> ExperimentPlan {
    let mut plan = ExperimentPlan::new(2, vec![12, 16], vec![0.04, 0.12, 0.3], 3, 3);
    plan.master_seed = 11;
    plan.phantom.contained = true;
    plan
}

fn run_with_threads(plan: &ExperimentPlan, threads: usize) -> PhaseGrid {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| run_plan(plan).unwrap())
}

#[test]
fn results_do_not_depend_on_the_thread_count() {
    let plan = small_plan();
    let a = run_with_threads(&plan, 1);
    let b = run_with_threads(&plan, 3);
    assert_eq!(a.cells, b.cells);
    assert_eq!(a.skips, b.skips);
    assert_eq!(a.cells.len(), 6);
    for c in &a.cells {
        assert_eq!(c.trials + c.skipped, 3);
        assert!(c.successes <= c.trials);
    }
}

#[test]
fn plan_round_trips_through_json() {
    let plan = small_plan();
    let text = serde_json::to_string(&plan).unwrap();
    assert_eq!(serde_json::from_str::<ExperimentPlan>(&text).unwrap(), plan);
    // omitted optional sections fall back to defaults
    let minimal = r#"{"dim":2,"d_values":[10],"rho_values":[0.1],"num_dirs":3,"trials_per_cell":1,
        "cosupport_known":false,"perturbed":false,"master_seed":0}"#;
    let parsed: ExperimentPlan = serde_json::from_str(minimal).unwrap();
    assert!(!parsed.phantom.contained);
    assert!(parsed.validate().is_ok());
}

#[test]
fn emits_csv_and_svg() {
    let grid = run_with_threads(&small_plan(), 1);
    let dir = tempfile::tempdir().unwrap();
    let files = emit(&grid, &dir.path().join("grid")).unwrap();
    assert_eq!(files.len(), 2);
    let mut reader = csv::Reader::from_path(&files[0]).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers, &csv::StringRecord::from(vec!["d", "rho", "trials", "successes", "rate"]));
    assert_eq!(reader.records().count(), grid.cells.len());
    let svg = std::fs::read_to_string(&files[1]).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<rect").count(), 1 + grid.cells.iter().filter(|c| c.trials > 0).count());
}

#[test]
fn crossing_moves_with_the_data() {
    let early = [(0.1, 10, 10), (0.2, 5, 10), (0.3, 0, 10), (0.4, 0, 10)];
    let late = [(0.1, 10, 10), (0.2, 10, 10), (0.3, 5, 10), (0.4, 0, 10)];
    assert!(logistic_crossing(&early).unwrap() < logistic_crossing(&late).unwrap());
}
