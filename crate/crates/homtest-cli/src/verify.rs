//! The `verify` subcommand: runs the brute-force oracle matrix over all
//! built-in families up to a group-order budget and reports one row per
//! check instance.

use homtest_core::evalmap::{
    binom_collapse_check, conjugacy_class_sizes, gamma_k_bruteforce, gamma_k_closed_cyclic,
    gamma_k_multiplicative, hom_p_ranks, rho_k_bruteforce, rho_k_dihedral, trho_k_class_formula,
    trho_k_extraspecial, trho_k_scan, trho_k_symmetric, CodewordSpace,
};
use homtest_core::oracle::{
    self, verify_aut_inner_identities, verify_eta_decomposition, verify_lift_consistency,
    verify_moment_identity,
};
use homtest_core::sampler::{rj_count, tv_distance, vspace_tuple_distribution};
use homtest_core::{
    Enumeration, Error, EvalMapCtx, GroupDescriptor, Result, RngStream, TestKind,
};
use num_rational::BigRational;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct VerifyRow {
    pub check: String,
    pub instance: String,
    /// "pass", "fail" or "skip" (order above the budget).
    pub status: String,
    pub detail: String,
}

fn row(check: &str, instance: String, ok: bool, detail: String) -> VerifyRow {
    VerifyRow {
        check: check.into(),
        instance,
        status: if ok { "pass" } else { "fail" }.into(),
        detail,
    }
}

fn skip(check: &str, instance: String, order: u128) -> VerifyRow {
    VerifyRow {
        check: check.into(),
        instance,
        status: "skip".into(),
        detail: format!("group order {order} above --max-order"),
    }
}

type Check = Box<dyn Fn() -> Result<Vec<VerifyRow>> + Send + Sync>;

fn moment_checks(max_order: u128, seed: u64, cap: u128) -> Check {
    Box::new(move || {
        let pairs = [
            (GroupDescriptor::Cyclic(4), GroupDescriptor::Cyclic(4)),
            (GroupDescriptor::Cyclic(8), GroupDescriptor::Cyclic(2)),
            (GroupDescriptor::Cyclic(9), GroupDescriptor::Cyclic(3)),
            (GroupDescriptor::Cyclic(6), GroupDescriptor::Cyclic(6)),
            (
                GroupDescriptor::VectorSpace { q: 2, n: 2 },
                GroupDescriptor::VectorSpace { q: 2, n: 1 },
            ),
        ];
        let mut rows = Vec::new();
        for (g, h) in pairs {
            let name = format!("{g}->{h}");
            if g.order() > max_order {
                rows.push(skip("moment-identity", name, g.order()));
                continue;
            }
            let mut ok = true;
            let mut rng = RngStream::substream(seed, 1);
            for k in 1..=3 {
                let ctx = EvalMapCtx::new(
                    CodewordSpace::Hom { domain: g.clone(), codomain: h.clone() },
                    k,
                    cap,
                )?;
                for _ in 0..5 {
                    let f = oracle::FunctionGenerator::UniformRandom.generate(&ctx, &mut rng)?;
                    ok &= verify_moment_identity(&ctx, &f)?;
                }
            }
            rows.push(row("moment-identity", name, ok, "k=1..3, 5 random f per k".into()));
        }
        Ok(rows)
    })
}

fn gamma_checks(max_order: u128, cap: u128) -> Check {
    let _ = cap;
    Box::new(move || {
        let mut rows = Vec::new();
        for p in [2u64, 3] {
            for r in 1..=2u32 {
                let g = GroupDescriptor::Cyclic(p.pow(r));
                for h in [
                    GroupDescriptor::Cyclic(p),
                    GroupDescriptor::Cyclic(p * p),
                    GroupDescriptor::DirectSum(vec![
                        GroupDescriptor::Cyclic(p),
                        GroupDescriptor::Cyclic(p),
                    ]),
                ] {
                    let name = format!("{g}->{h}");
                    if g.order() > max_order {
                        rows.push(skip("gamma-closed-form", name, g.order()));
                        continue;
                    }
                    let ranks = hom_p_ranks(&h, p);
                    let mut ok = true;
                    for k in 1..=4 {
                        ok &= gamma_k_closed_cyclic(p, r, &ranks, k)?
                            == gamma_k_bruteforce(&g, &h, k)?;
                    }
                    rows.push(row("gamma-closed-form", name, ok, "k=1..4".into()));
                }
            }
        }
        for n in [6u64, 12] {
            let g = GroupDescriptor::Cyclic(n);
            let name = format!("{g}->{g}");
            if g.order() > max_order {
                rows.push(skip("gamma-multiplicative", name, g.order()));
                continue;
            }
            let mut ok = true;
            for k in 1..=4 {
                ok &= gamma_k_multiplicative(&g, &g, k)? == gamma_k_bruteforce(&g, &g, k)?;
            }
            rows.push(row("gamma-multiplicative", name, ok, "k=1..4".into()));
        }
        Ok(rows)
    })
}

fn eta_checks(max_order: u128, seed: u64, cap: u128) -> Check {
    Box::new(move || {
        let pairs = [
            (GroupDescriptor::Cyclic(9), GroupDescriptor::Cyclic(3)),
            (
                GroupDescriptor::VectorSpace { q: 2, n: 2 },
                GroupDescriptor::VectorSpace { q: 2, n: 1 },
            ),
        ];
        let mut rows = Vec::new();
        for (g, h) in pairs {
            let name = format!("{g}->{h}");
            if g.order() > max_order {
                rows.push(skip("eta-decomposition", name, g.order()));
                continue;
            }
            let ok = verify_eta_decomposition(&g, &h, 2, 5, seed, cap)?;
            rows.push(row("eta-decomposition", name, ok, "k=2, 5 random f".into()));
        }
        Ok(rows)
    })
}

fn aut_checks(max_order: u128, seed: u64, cap: u128) -> Check {
    Box::new(move || {
        let spaces = [
            (CodewordSpace::DihedralAut { p: 5 }, 10u128),
            (CodewordSpace::Inner { group: GroupDescriptor::Symmetric { n: 4 } }, 24),
            (CodewordSpace::Inner { group: GroupDescriptor::Extraspecial { p: 3, r: 3 } }, 27),
        ];
        let mut rows = Vec::new();
        for (space, order) in spaces {
            let name = space.to_string();
            if order > max_order {
                rows.push(skip("aut-moment-identity", name, order));
                continue;
            }
            let ok = verify_aut_inner_identities(&space, 2, 3, seed, cap)?;
            rows.push(row("aut-moment-identity", name, ok, "k=2, 3 random f".into()));
        }
        Ok(rows)
    })
}

fn mass_constant_checks(max_order: u128, cap: u128) -> Check {
    Box::new(move || {
        let mut rows = Vec::new();
        for p in [5u64, 7] {
            let name = format!("aut:D({p})");
            if (2 * p) as u128 > max_order {
                rows.push(skip("rho-closed-form", name, (2 * p) as u128));
                continue;
            }
            let mut ok = true;
            for k in 2..=4 {
                let ctx = EvalMapCtx::new(CodewordSpace::DihedralAut { p }, k, cap)?;
                ok &= rho_k_dihedral(p, k)? == rho_k_bruteforce(&ctx)?;
            }
            rows.push(row("rho-closed-form", name, ok, "k=2..4".into()));
        }
        for g in [
            GroupDescriptor::Symmetric { n: 3 },
            GroupDescriptor::Symmetric { n: 4 },
            GroupDescriptor::Extraspecial { p: 3, r: 3 },
        ] {
            let name = format!("inn:{g}");
            if g.order() > max_order {
                rows.push(skip("trho-class-formula", name, g.order()));
                continue;
            }
            let dom = Enumeration::new(&g, cap)?;
            let sizes = conjugacy_class_sizes(&dom)?;
            let mut ok = true;
            for k in 2..=3 {
                let via_classes =
                    trho_k_class_formula(&sizes, g.order(), g.center_order(), k)?;
                ok &= via_classes == trho_k_scan(&dom, k)?;
                match &g {
                    GroupDescriptor::Symmetric { n } => {
                        ok &= via_classes == trho_k_symmetric(*n, k)?
                    }
                    GroupDescriptor::Extraspecial { p, r } => {
                        ok &= via_classes == trho_k_extraspecial(*p, *r, k)?
                    }
                    _ => {}
                }
            }
            rows.push(row("trho-class-formula", name, ok, "k=2..3".into()));
        }
        Ok(rows)
    })
}

fn lift_checks(max_order: u128, seed: u64, cap: u128) -> Check {
    Box::new(move || {
        let spaces = [
            (
                CodewordSpace::Lifted {
                    big: GroupDescriptor::GeneralLinear { n: 2, q: 3 },
                    proj: homtest_core::ProjectionSpec::Det,
                    base_codomain: GroupDescriptor::Cyclic(2),
                },
                2u32,
            ),
            (
                CodewordSpace::Lifted {
                    big: GroupDescriptor::Extraspecial { p: 3, r: 3 },
                    proj: homtest_core::ProjectionSpec::AbelianizeModP,
                    base_codomain: GroupDescriptor::VectorSpace { q: 3, n: 1 },
                },
                3,
            ),
        ];
        let mut rows = Vec::new();
        for (space, k) in spaces {
            let name = space.to_string();
            let order = space.domain().order();
            if order > max_order {
                rows.push(skip("lift-consistency", name, order));
                continue;
            }
            let ctx = EvalMapCtx::new(space, k, cap)?;
            let rep = verify_lift_consistency(&ctx, 50, 3, seed)?;
            rows.push(row(
                "lift-consistency",
                name,
                rep.all_ok(),
                format!(
                    "kernel={} gamma-product={} pushdown={}",
                    rep.kernel_ok, rep.gamma_product_ok, rep.pushdown_ok
                ),
            ));
        }
        Ok(rows)
    })
}

fn vspace_checks(max_order: u128, cap: u128) -> Check {
    Box::new(move || {
        let mut rows = Vec::new();
        let mut ok = true;
        for k in 1..=8u64 {
            for j in 0..k {
                ok &= binom_collapse_check(k, j) == 0;
            }
        }
        rows.push(row("binomial-collapse", "j<k<=8".into(), ok, String::new()));
        for (q, n) in [(2u64, 2usize), (2, 3), (3, 2)] {
            let name = format!("V({q},{n}) k=3");
            let order = (q as u128).pow(n as u32);
            if order > max_order {
                rows.push(skip("relation-level-census", name, order));
                continue;
            }
            let mut counted = 0u128;
            let elems = GroupDescriptor::VectorSpace { q, n }.enumerate(cap)?;
            let mut idx = vec![0usize; 3];
            loop {
                let xs: Vec<_> = idx.iter().map(|&i| elems[i].clone()).collect();
                if let Some(j) = homtest_core::sampler::classify_relation_level(q, n, &xs)? {
                    counted += 1;
                    let _ = j;
                }
                if !homtest_core::evalmap::advance(&mut idx, elems.len()) {
                    break;
                }
            }
            let by_formula: u128 = (1..=3u32)
                .map(|j| rj_count(q, n, 3, j).unwrap_or(0))
                .sum();
            rows.push(row(
                "relation-level-census",
                name,
                counted == by_formula,
                format!("enumerated {counted}, formula {by_formula}"),
            ));
        }
        for n in [3usize, 4] {
            let name = format!("V(2,{n}) k=3");
            if (1u128 << n) > max_order {
                rows.push(skip("sampler-tv-bound", name, 1u128 << n));
                continue;
            }
            let exact = vspace_tuple_distribution(2, n, 3, true)?;
            let relaxed = vspace_tuple_distribution(2, n, 3, false)?;
            let tv = tv_distance(&exact, &relaxed);
            let bound = BigRational::new(4.into(), (1u64 << n).into());
            rows.push(row(
                "sampler-tv-bound",
                name,
                tv <= bound,
                format!("tv={tv} bound={bound}"),
            ));
        }
        Ok(rows)
    })
}

fn list_checks(max_order: u128, seed: u64, cap: u128) -> Check {
    Box::new(move || {
        let g = GroupDescriptor::Cyclic(27);
        let name = format!("{g}->{g}");
        if g.order() > max_order {
            return Ok(vec![skip("list-size-bound", name, g.order())]);
        }
        let ctx = EvalMapCtx::new(
            CodewordSpace::Hom { domain: g.clone(), codomain: g },
            2,
            cap,
        )?;
        let mut rng = RngStream::substream(seed, 2);
        let mut ok = true;
        for _ in 0..20 {
            let f = oracle::FunctionGenerator::UniformRandom.generate(&ctx, &mut rng)?;
            for den in 2..=5u64 {
                let eps = BigRational::new(1.into(), den.into());
                ok &= oracle::list_decode(&ctx, &f, &eps)?.satisfied;
            }
        }
        Ok(vec![row("list-size-bound", name, ok, "20 random f, eps=1/2..1/5".into())])
    })
}

fn sandwich_checks(max_order: u128, seed: u64, cap: u128) -> Check {
    Box::new(move || {
        let g = GroupDescriptor::Cyclic(27);
        let name = format!("{g}->Z/9");
        if g.order() > max_order {
            return Ok(vec![skip("agreement-sandwich", name, g.order())]);
        }
        let space = CodewordSpace::Hom { domain: g, codomain: GroupDescriptor::Cyclic(9) };
        let ctx = EvalMapCtx::new(space.clone(), 2, cap)?;
        let mut rng = RngStream::substream(seed, 3);
        let gen = oracle::FunctionGenerator::CorruptedCodeword {
            index: 1,
            alpha: BigRational::new(1.into(), 2.into()),
        };
        let f = gen.generate(&ctx, &mut rng)?;
        let rep = oracle::verify_max_agreement_sandwich(TestKind::Ker, &space, &f, &[3, 4], cap)?;
        Ok(vec![row(
            "agreement-sandwich",
            name,
            rep.all_ok,
            "corrupt(alpha=1/2), k=3..4".into(),
        )])
    })
}

/// Runs the whole matrix; rows within a check stay in declaration order.
pub fn run_verify(max_order: u128, seed: u64, cap: u128, workers: usize) -> Result<Vec<VerifyRow>> {
    let checks: Vec<Check> = vec![
        moment_checks(max_order, seed, cap),
        gamma_checks(max_order, cap),
        eta_checks(max_order, seed, cap),
        aut_checks(max_order, seed, cap),
        mass_constant_checks(max_order, cap),
        lift_checks(max_order, seed, cap),
        vspace_checks(max_order, cap),
        list_checks(max_order, seed, cap),
        sandwich_checks(max_order, seed, cap),
    ];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Unsupported(format!("worker pool: {e}")))?;
    let results: Vec<Result<Vec<VerifyRow>>> =
        pool.install(|| checks.par_iter().map(|c| c()).collect());
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn verify_csv(rows: &[VerifyRow]) -> String {
    let mut out = String::from("check,instance,status,detail\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},\"{}\"\n",
            r.check,
            r.instance,
            r.status,
            r.detail.replace('"', "'"),
        ));
    }
    out
}

pub fn verify_json(rows: &[VerifyRow]) -> serde_json::Value {
    serde_json::json!(rows
        .iter()
        .map(|r| serde_json::json!({
            "check": r.check,
            "instance": r.instance,
            "status": r.status,
            "detail": r.detail,
        }))
        .collect::<Vec<_>>())
}
