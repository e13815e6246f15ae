use std::sync::OnceLock;

use rand::Rng;
use spgmm::data::{Method, ModelSpec, PanelData, Priors};
use spgmm::eval::{
    dic3_from, draw_subset, effective_sample_size, evaluate, lcid_rows, log_cpo, log_density_matrix, lpml_from, permute_draw,
    prepared_for, relabel, CriteriaOpts, MarginalDensityOpts,
};
use spgmm::gibbs::{describe, fit, McmcOptions, PosteriorDraws};
use spgmm::kernels::RngStream;
use spgmm::simulator::{scenario_config, simulate_dataset, Scenario};

struct Fixture {
    data: PanelData,
    draws: PosteriorDraws,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let data = simulate_dataset(&scenario_config(Scenario::S0), 300, 17, None).unwrap();
        let opts = McmcOptions { iterations: 1400, burn_in: 800, seed: 5, store_latents: false, ..McmcOptions::default() };
        let draws = fit(&data, &ModelSpec::new(2, Method::Mnar), &Priors::default(), &opts).unwrap();
        Fixture { data, draws }
    })
}

fn index(draws: &PosteriorDraws, name: &str) -> usize {
    draws.param_index(name).unwrap_or_else(|| panic!("no parameter {name}"))
}

#[test]
fn relabeling_an_aligned_chain_changes_nothing() {
    let f = fixture();
    let first = relabel(&f.draws).unwrap();
    assert!(first.swap_fraction < 0.05, "fit switched labels in {} of draws", first.swap_fraction);
    let again = relabel(&first.draws).unwrap();
    assert_eq!(again.swap_fraction, 0.0);
    assert!(again.permutations.iter().flatten().all(|p| p == &vec![0, 1]));
}

#[test]
fn constructed_label_swaps_are_undone() {
    let f = fixture();
    let base = relabel(&f.draws).unwrap().draws;
    let mut rng = RngStream::new(99, 0);
    let mut swapped = base.clone();
    let mut flips = 0;
    for chain in swapped.chains.iter_mut() {
        for d in chain.iter_mut() {
            if rng.gen_bool(0.5) {
                *d = permute_draw(&base, d, &[1, 0]).unwrap();
                flips += 1;
            }
        }
    }
    let share = flips as f64 / base.total() as f64;
    let out = relabel(&swapped).unwrap();
    assert!((out.swap_fraction - share).abs() < 1e-12 || (out.swap_fraction - (1.0 - share)).abs() < 1e-12);
    assert!((out.swap_fraction - 0.5).abs() < 0.1, "swap fraction {}", out.swap_fraction);

    // the restored outcome-2 intercept of class 1 sits on one side of the class midpoint
    let i1 = index(&out.draws, "eta_r2_k1_1_1");
    let i2 = index(&out.draws, "eta_r2_k2_1_1");
    let (a, b): (Vec<f64>, Vec<f64>) = out.draws.all().map(|d| (d.params[i1], d.params[i2])).unzip();
    let mid = 0.5 * (describe(&a).0 + describe(&b).0);
    let above = a.iter().filter(|v| **v > mid).count();
    assert!(above == 0 || above == a.len(), "class-1 trace straddles the midpoint in {above} of {} draws", a.len());

    // and matches the unswapped chain draw for draw, up to one global relabeling
    let same = base.all().zip(out.draws.all()).filter(|(x, y)| x.params == y.params).count();
    assert!(same == base.total() || same == 0, "{same} of {} draws restored", base.total());
}

#[test]
fn criteria_do_not_depend_on_labels() {
    let f = fixture();
    let opts = CriteriaOpts { max_draws: Some(60), ..Default::default() };
    let mut swapped = f.draws.clone();
    for chain in swapped.chains.iter_mut() {
        for (g, d) in chain.iter_mut().enumerate() {
            if g % 3 == 0 {
                *d = permute_draw(&f.draws, d, &[1, 0]).unwrap();
            }
        }
    }
    let a = evaluate(&f.draws, &f.data, &opts, "a").unwrap();
    let b = evaluate(&swapped, &f.data, &opts, "b").unwrap();
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1.0);
    assert!(close(a.lpml, b.lpml), "{} vs {}", a.lpml, b.lpml);
    assert!(close(a.dic3, b.dic3), "{} vs {}", a.dic3, b.dic3);
    assert!(close(a.n_eff, b.n_eff));
    assert!((a.bic - b.bic).abs() < 1e-6 * a.bic.abs(), "{} vs {}", a.bic, b.bic);
}

#[test]
fn criteria_bounds_on_a_fitted_model() {
    let f = fixture();
    let prep = prepared_for(&f.draws, &f.data).unwrap();
    let subset = draw_subset(f.draws.total(), Some(100));
    let ld = log_density_matrix(&f.draws, &prep, &subset, &MarginalDensityOpts::default()).unwrap();
    let ids: Vec<String> = prep.patients.iter().map(|p| p.id.clone()).collect();
    let cpo = log_cpo(&ld, &ids).unwrap();
    for (i, c) in cpo.iter().enumerate() {
        let max = ld.iter().map(|row| row[i]).fold(f64::NEG_INFINITY, f64::max);
        assert!(*c <= max + 1e-12);
    }
    // DIC3 ≥ −2 Σ log f̂: the effective number of parameters is nonnegative
    let g = ld.len() as f64;
    let fit_term: f64 = (0..prep.n())
        .map(|i| spgmm::kernels::log_sum_exp(&ld.iter().map(|row| row[i]).collect::<Vec<_>>()) - g.ln())
        .sum();
    assert!(dic3_from(&ld) >= -2.0 * fit_term);
    assert!(lpml_from(&ld, &ids).unwrap() <= fit_term);
    let n_eff = effective_sample_size(&f.draws, &prep).unwrap();
    let visits: usize = prep.patients.iter().map(|p| p.n_visits()).sum();
    assert!(n_eff >= prep.n() as f64 && n_eff <= visits as f64, "{n_eff}");
}

#[test]
fn lcid_rows_compare_prior_and_posterior() {
    let f = fixture();
    let rows = lcid_rows(&f.draws, 3).unwrap();
    let mut keys: Vec<(String, String)> = rows.iter().map(|r| (r.parameter.clone(), r.source.clone())).collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 4);
    let values = |param: &str, source: &str| -> Vec<f64> {
        rows.iter().filter(|r| r.parameter == param && r.source == source).map(|r| r.value).collect()
    };
    let name = &f.draws.meta.param_names[1];
    let (_, prior_sd, _, _) = describe(&values(name, "prior"));
    let (_, post_sd, _, _) = describe(&values(name, "posterior"));
    assert!((prior_sd - 1.0).abs() < 0.05, "prior sd {prior_sd}");
    assert!(post_sd < 0.5 * prior_sd, "posterior sd {post_sd}");
}
