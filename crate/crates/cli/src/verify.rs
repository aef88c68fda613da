//! The `verify-all` suite: every executable theorem check on one problem.

use gspear::geometry::{gnorm_dominance_check, default_t_grid};
use gspear::gnorm::g_norm_chain_check;
use gspear::hilbert::{hilbert_analyze, BOUND_SLACK};
use gspear::indices::{index_chain_check, invariance_check};
use gspear::report::{Json, ToJson};
use gspear::spear::{relative_spear_check, spear_check, theorem_equiv_check, verify_isometry, Verdict};
use gspear::{Matrix, OperatorSpec, SpaceSpec};

use crate::{Outcome, Setup};

fn status(ok: Option<bool>) -> &'static str {
    match ok {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "skipped",
    }
}

/// Coordinate reversal when it is an isometry of `s`, the identity otherwise.
fn reversal(s: &SpaceSpec) -> OperatorSpec {
    let n = s.dim();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, n - 1 - i)] = gspear::linalg::c(1.0);
    }
    OperatorSpec::on(s, m)
        .ok()
        .filter(|u| verify_isometry(u).is_ok())
        .unwrap_or_else(|| OperatorSpec::identity(s))
}

pub(crate) fn verify_all(s: &Setup) -> Outcome<(Json, bool)> {
    let ctx = &s.ctx;
    let deck = s.deck(s.samples)?;
    let mut rows: Vec<(&str, Option<bool>, Json)> = Vec::new();

    let mut consistent = 0;
    for t in &deck {
        consistent += theorem_equiv_check(t, ctx)?.consistent as usize;
    }
    rows.push((
        "equivalence",
        Some(consistent == deck.len()),
        Json::obj().with("consistent", consistent).with("deck", deck.len()),
    ));

    let mut chain_ok = 0;
    for t in &deck {
        chain_ok += g_norm_chain_check(t, ctx)?.ok as usize;
    }
    rows.push(("norm_chain", Some(chain_ok == deck.len()), Json::obj().with("ok", chain_ok).with("deck", deck.len())));

    let g = ctx.g();
    let (u1, u2) = (reversal(g.domain()), reversal(g.codomain()));
    let inv = invariance_check(ctx, &u1, &u2, s.samples, s.seed)?;
    rows.push(("invariance", Some(inv.ok), inv.to_json()));

    let idx = index_chain_check(ctx, s.samples, s.seed)?;
    rows.push((
        "index_chain",
        Some(idx.product_ok && idx.collapse_ok),
        Json::obj()
            .with("nG", idx.ng.value)
            .with("n1", idx.n1.value)
            .with("n2", idx.n2.value)
            .with("product_ok", idx.product_ok)
            .with("collapse_ok", idx.collapse_ok),
    ));

    let sp = spear_check(g, s.samples, s.seed, s.tol, ctx.budget())?;
    let rel = relative_spear_check(ctx, s.samples, s.seed)?;
    let implied = sp.verdict != Verdict::PlausibleYes || rel.verdict == Verdict::PlausibleYes;
    rows.push((
        "spear_implies_relative",
        Some(implied),
        Json::obj().with("spear", sp.to_json()).with("relative", rel.to_json()),
    ));

    if g.is_euclidean() {
        let a = hilbert_analyze(ctx, &deck, &s.delta_grid, s.tol, s.seed)?;
        let ok = a.conditions.agree()
            && a.distance_checks.iter().all(|d| d.violations == 0 && d.max_dist_sq <= d.bound + BOUND_SLACK);
        let c = &a.conditions;
        rows.push((
            "hilbert_conditions",
            Some(ok),
            Json::obj()
                .with("gap", c.gap)
                .with("concentration", c.concentration)
                .with("gnorm_on_e", c.gnorm_on_e)
                .with("max_gnorm_dev", a.max_gnorm_dev)
                .with("warning", a.warning.clone()),
        ));
    } else {
        rows.push(("hilbert_conditions", None, Json::obj().with("reason", "G is not Euclidean")));
    }

    let dom = gnorm_dominance_check(ctx, ctx, &default_t_grid(), s.samples.min(20), s.seed)?;
    rows.push((
        "dominance",
        Some(!dom.modulus.limit_ok || dom.dominance_ok),
        Json::obj()
            .with("limit_ok", dom.modulus.limit_ok)
            .with("dominance_ok", dom.dominance_ok)
            .with("max_excess", dom.max_excess),
    ));

    let all = rows.iter().all(|(_, ok, _)| *ok != Some(false));
    let checks = rows.into_iter().fold(Json::obj(), |acc, (name, ok, detail)| {
        acc.with(name, Json::obj().with("status", status(ok)).with("detail", detail))
    });
    Ok((Json::obj().with("all_pass", all).with("seed", s.seed).with("checks", checks), all))
}
