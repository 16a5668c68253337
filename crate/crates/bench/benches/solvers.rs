use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use superrep_core::dyadic::DyadicClaim;
use superrep_core::finite::{abstract_price, FiniteMarket};
use superrep_core::passage::{h2_criterion, squared_gain_tau_law};
use superrep_core::solvers::{dual_price_m1, primal_price, primal_price_lp};
use superrep_core::stopped_pair::{simulate_stopped_pair, McConfig, StoppedPairSpec};

fn bench_primal(c: &mut Criterion) {
    let mut group = c.benchmark_group("primal_price");
    for n in [100u32, 1000, 10_000] {
        let h = DyadicClaim::f(n);
        group.bench_with_input(BenchmarkId::new("bisection", n), &n, |b, &n| {
            b.iter(|| primal_price(&h, 10.0, n).unwrap().price)
        });
    }
    let h = DyadicClaim::f(50);
    group.bench_function("lp_oracle_n50", |b| {
        b.iter(|| primal_price_lp(&h, 10.0, 50).unwrap().price)
    });
    group.finish();
}

fn bench_dual(c: &mut Criterion) {
    let h = DyadicClaim::f(10_000);
    c.bench_function("dual_price_m1_n1e4", |b| {
        b.iter(|| dual_price_m1(&h, 10_000).unwrap().value)
    });
}

fn bench_abstract_price(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let market = FiniteMarket::random_with_separating_element(8, 4, &mut rng);
    let f: Vec<f64> = (0..market.states()).map(|_| rng.random_range(-1.0..1.0)).collect();
    c.bench_function("abstract_price_m8_j4", |b| {
        b.iter(|| abstract_price(&market, &f).unwrap().price)
    });
}

fn bench_passage(c: &mut Criterion) {
    let law = squared_gain_tau_law();
    c.bench_function("passage_cdf_t2", |b| b.iter(|| law.cdf(2.0).unwrap()));
    let grid: Vec<f64> = (1..=12).map(|k| 2.0 * k as f64).collect();
    c.bench_function("h2_criterion_a3", |b| {
        b.iter(|| h2_criterion(3.0, &grid).unwrap().growth_rate)
    });
}

fn bench_monte_carlo(c: &mut Criterion) {
    let spec = StoppedPairSpec::new(3.0).unwrap();
    let mc = McConfig { paths: 2000, ..McConfig::default() };
    let mut group = c.benchmark_group("stopped_pair");
    group.sample_size(10);
    group.bench_function("simulate_2k_paths", |b| {
        b.iter(|| simulate_stopped_pair(&spec, &mc).unwrap().e_p_x_inf.value)
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_primal,
    bench_dual,
    bench_abstract_price,
    bench_passage,
    bench_monte_carlo
);
criterion_main!(benches);
