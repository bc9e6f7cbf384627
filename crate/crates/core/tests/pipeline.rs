use lll_lca::apps::coloring::{coloring_instance, uncolor_and_greedy};
use lll_lca::harness::dimacs::{parse_dimacs, write_dimacs};
use lll_lca::harness::edgelist::{parse_graph, write_graph};
use lll_lca::harness::experiment::Problem;
use lll_lca::harness::gen::{gen_clustered_bipartite, gen_ksat};
use lll_lca::lca::{LcaConfig, LcaSession};
use lll_lca::lll::check_general_lll;
use lll_lca::mt::{resample_full, resample_full_with, MtOptions, Trajectory};
use lll_lca::rng::substream;
use lll_lca::witness::{witness_tree, WitnessTree};

#[test]
fn dimacs_to_consistent_answers() {
    let cnf = parse_dimacs(&write_dimacs(&gen_ksat(400, 8, 20, 21).unwrap())).unwrap();
    let problem = Problem::sat(&cnf).unwrap();
    let eps = check_general_lll(&problem.instance, &problem.measure, &problem.psi).unwrap().epsilon;
    assert!(eps > 0.0);
    for trial in 0..10 {
        let config = LcaConfig::new(20, 0.1, eps).seed(21, trial);
        let mut session = LcaSession::open(&problem.instance, &problem.measure, &problem.psi, &config).unwrap();
        let mut rng = substream(21, &[trial, 99]);
        for x in rand::seq::index::sample(&mut rng, 400, 20) {
            assert!(session.query(x).unwrap().value().is_some());
        }
        let final_state = session.continue_to_completion(1_000_000).unwrap();
        assert!(cnf.satisfied_by(&final_state.to_full().unwrap()));
        assert!(session.verify_consistency(&final_state).unwrap().consistent);
    }
}

#[test]
fn trajectory_logs_and_trees_round_trip() {
    let problem = Problem::sat(&gen_ksat(60, 4, 3, 2).unwrap()).unwrap();
    let mut rng = substream(2, &[]);
    let run = resample_full_with(&problem.instance, &problem.measure, &mut rng, MtOptions::new(100_000));
    assert!(run.terminated);
    let parsed = Trajectory::from_log(&run.to_log()).unwrap();
    assert_eq!(parsed, run);
    assert_eq!(parsed.replay(&problem.instance).unwrap(), run.final_state);
    let w = run.witness_sequence();
    for k in 1..=w.len() {
        let t = witness_tree(&problem.instance, &w, k).unwrap();
        assert_eq!(WitnessTree::parse(&t.encode()).unwrap(), t);
        assert!(t.levels_independent(&problem.instance));
    }
}

#[test]
fn coloring_pipeline_from_edge_list() {
    let g = parse_graph(&write_graph(&gen_clustered_bipartite(10, 4, 0.7, 3).unwrap())).unwrap();
    let setup = coloring_instance(&g, g.neighborhood_deficiency() as f64).unwrap();
    let mut rng = substream(3, &[]);
    let run = resample_full(&setup.instance, &setup.measure, &mut rng, 100_000);
    assert!(run.terminated);
    let colors = uncolor_and_greedy(&g, &run.final_state.to_full().unwrap(), setup.palette).unwrap();
    assert!(g.is_proper(&colors));
}
