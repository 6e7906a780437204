use nslr::bench::{run_matrix, trial_seed, BenchConfig};
use nslr::data::{gen_example2, serialize_libsvm, Spec2};

#[test]
fn averages_are_trial_means() {
    let cfg = BenchConfig::from_toml(
        r#"
trials = 3
seed = 2
solvers = ["nslr", "iht"]
timing = false
[source]
kind = "example2"
[sweep]
p = [50, 80]
n = [40]
s = [4]
rho = [0.5]
[solver]
max_iter = 30
"#,
    )
    .unwrap();
    let results = run_matrix(&cfg).unwrap();
    assert_eq!(results.len(), 4);
    assert_eq!(results[0].cell.p, 50);
    assert_eq!(results[2].cell.p, 80);
    for (k, r) in results.iter().enumerate() {
        let cell_index = k / 2;
        let avg = r.averages.unwrap();
        let runs: Vec<_> = r.trials.iter().map(|t| t.run.as_ref().unwrap()).collect();
        let mean = runs.iter().map(|x| x.indicators.loss).sum::<f64>() / 3.0;
        assert!((avg.loss - mean).abs() <= 1e-15);
        let ser = runs.iter().map(|x| x.indicators.ser).sum::<f64>() / 3.0;
        assert!((avg.ser - ser).abs() <= 1e-15);
        assert_eq!(avg.time_seconds, 0.0);
        for t in &r.trials {
            assert_eq!(t.seed, trial_seed(2, cell_index, t.trial));
        }
        // the generated data matches a direct call with the same seed
        let direct = gen_example2(Spec2 { n: 40, p: r.cell.p, s: 4, rho: 0.5, seed: r.trials[0].seed }).unwrap();
        let solved = r.solver.run(&direct.train, &r.solver_config).unwrap();
        assert_eq!(solved.loss, runs[0].indicators.loss);
    }
}

#[test]
fn file_source_scores_the_test_split() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_example2(Spec2 { n: 60, p: 30, s: 3, rho: 0.3, seed: 4 }).unwrap();
    let path = dir.path().join("d.svm");
    serialize_libsvm(&data.train, std::fs::File::create(&path).unwrap()).unwrap();
    let cfg = BenchConfig::from_toml(&format!(
        "solvers = [\"nslr\"]\n[source]\nkind = \"libsvm\"\npath = {:?}\ntrain_size = 45\np = 30\n[sweep]\ns = [3]\n",
        path.to_str().unwrap()
    ))
    .unwrap();
    let results = run_matrix(&cfg).unwrap();
    assert_eq!(results.len(), 1);
    assert_eq!((results[0].cell.p, results[0].cell.n), (30, 45));
    let avg = results[0].averages.unwrap();
    assert!(avg.ser_test.is_some() && avg.loss_test.is_some());
}

#[test]
fn failing_cells_are_recorded() {
    let cfg = BenchConfig::from_toml(
        "solvers = [\"nslr\"]\n[source]\nkind = \"example2\"\n[sweep]\np = [5]\nn = [10]\ns = [8]\n",
    )
    .unwrap();
    let results = run_matrix(&cfg).unwrap();
    assert!(results[0].failed());
    assert!(results[0].trials[0].error.as_deref().unwrap().contains("s = 8"));
}
