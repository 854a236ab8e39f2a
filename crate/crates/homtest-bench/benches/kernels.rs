use criterion::{criterion_group, criterion_main, Criterion};
use homtest_core::evalmap::{gamma_k_bruteforce, CodewordSpace};
use homtest_core::oracle::{agreements, FunctionGenerator};
use homtest_core::{EvalMapCtx, GroupDescriptor, QueryFunction, RngStream, TestKind, TestSpec};
use num_rational::BigRational;

const CAP: u128 = 1_000_000;

fn hom_space(g: GroupDescriptor, h: GroupDescriptor) -> CodewordSpace {
    CodewordSpace::Hom { domain: g, codomain: h }
}

fn corrupted(ctx: &EvalMapCtx, seed: u64) -> QueryFunction {
    let mut rng = RngStream::new(seed);
    FunctionGenerator::CorruptedCodeword {
        index: 1,
        alpha: BigRational::new(1.into(), 2.into()),
    }
    .generate(ctx, &mut rng)
    .unwrap()
}

fn bench_delta_exact(c: &mut Criterion) {
    let ctx = EvalMapCtx::new(
        hom_space(GroupDescriptor::Cyclic(27), GroupDescriptor::Cyclic(9)),
        4,
        CAP,
    )
    .unwrap();
    let f = corrupted(&ctx, 7);
    let spec = TestSpec::new(TestKind::Ker, ctx, true).unwrap();
    c.bench_function("delta_exact z27_z9 k4", |b| {
        b.iter(|| spec.delta_exact(&f).unwrap())
    });
}

fn bench_stab_table_build(c: &mut Criterion) {
    c.bench_function("stab table build D(5) k3", |b| {
        b.iter(|| {
            let ctx = EvalMapCtx::new(CodewordSpace::DihedralAut { p: 5 }, 3, CAP).unwrap();
            TestSpec::new(TestKind::Dihedral, ctx, true).unwrap()
        })
    });
}

fn bench_agreements(c: &mut Criterion) {
    let ctx = EvalMapCtx::new(
        hom_space(GroupDescriptor::Cyclic(27), GroupDescriptor::Cyclic(27)),
        2,
        CAP,
    )
    .unwrap();
    let f = corrupted(&ctx, 11);
    c.bench_function("agreements z27_z27", |b| b.iter(|| agreements(&ctx, &f).unwrap()));
}

fn bench_gamma_bruteforce(c: &mut Criterion) {
    let g = GroupDescriptor::Cyclic(8);
    let h = GroupDescriptor::Cyclic(8);
    c.bench_function("gamma_4 z8_z8 bruteforce", |b| {
        b.iter(|| gamma_k_bruteforce(&g, &h, 4).unwrap())
    });
}

criterion_group!(
    benches,
    bench_delta_exact,
    bench_stab_table_build,
    bench_agreements,
    bench_gamma_bruteforce
);
criterion_main!(benches);
