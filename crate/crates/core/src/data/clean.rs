use super::cohort::Cohort;
use crate::error::{Error, Result};

pub const DEFAULT_MIN_COVERAGE: f64 = 0.5;

/// Remove sparse features, then (with `complete_case`) every record missing a
/// retained feature. Nothing is ever imputed.
pub fn drop_missing(cohort: &Cohort, feature_min_coverage: f64, complete_case: bool) -> Result<Cohort> {
    if !(0.0..=1.0).contains(&feature_min_coverage) {
        return Err(Error::Config(format!("feature_min_coverage must lie in [0, 1], got {feature_min_coverage}")));
    }
    let n = cohort.len();
    let measured = cohort.measured_features();
    let dropped: Vec<&String> = measured
        .iter()
        .filter(|f| {
            let present = cohort.records.iter().filter(|r| r.measured(f).is_some()).count();
            n == 0 || (present as f64) / (n as f64) < feature_min_coverage
        })
        .collect();

    let feature_manifest: Vec<String> =
        cohort.feature_manifest.iter().filter(|f| !dropped.contains(f)).cloned().collect();
    let kept_measured: Vec<&String> = measured.iter().filter(|f| !dropped.contains(f)).collect();

    let records = cohort
        .records
        .iter()
        .filter(|r| !complete_case || kept_measured.iter().all(|f| r.measured(f).is_some()))
        .map(|r| {
            let mut r = r.clone();
            r.labs.retain(|k, _| !dropped.contains(&k));
            r
        })
        .collect::<Vec<_>>();

    if records.is_empty() {
        return Err(Error::EmptyOutput("no records survive missing-value removal".into()));
    }
    if feature_manifest.is_empty() {
        return Err(Error::EmptyOutput("no features survive missing-value removal".into()));
    }
    Ok(Cohort { records, feature_manifest, comorbidity_levels: cohort.comorbidity_levels.clone() })
}

/// Pick the `keep`-sized combination of candidate biomarkers available for the
/// most patients. Returns the cohort restricted to records complete in that
/// combination, with the other candidates removed, plus the winning names.
/// Ties go to the lexicographically smallest (sorted) combination.
pub fn select_biomarker_subset(cohort: &Cohort, candidates: &[String], keep: usize) -> Result<(Cohort, Vec<String>)> {
    for c in candidates {
        if !cohort.feature_manifest.contains(c) {
            return Err(Error::Schema { missing: vec![c.clone()] });
        }
    }
    if keep == 0 || keep > candidates.len() {
        return Err(Error::Config(format!("cannot keep {keep} of {} biomarkers", candidates.len())));
    }

    let mut best: Option<(usize, Vec<String>)> = None;
    for combo in combinations(candidates.len(), keep) {
        let mut names: Vec<String> = combo.iter().map(|&i| candidates[i].clone()).collect();
        names.sort();
        let count = cohort.records.iter().filter(|r| names.iter().all(|b| r.labs.contains_key(b))).count();
        let better = match &best {
            None => true,
            Some((c, n)) => count > *c || (count == *c && names < *n),
        };
        if better {
            best = Some((count, names));
        }
    }
    let (_, chosen) = best.expect("at least one combination");

    let excluded: Vec<&String> = candidates.iter().filter(|c| !chosen.contains(c)).collect();
    let records = cohort
        .records
        .iter()
        .filter(|r| chosen.iter().all(|b| r.labs.contains_key(b)))
        .map(|r| {
            let mut r = r.clone();
            r.labs.retain(|k, _| !excluded.contains(&k));
            r
        })
        .collect();
    let feature_manifest = cohort.feature_manifest.iter().filter(|f| !excluded.contains(f)).cloned().collect();
    // keep manifest order for the chosen names
    let chosen_in_order = candidates.iter().filter(|c| chosen.contains(c)).cloned().collect();
    Ok((Cohort { records, feature_manifest, comorbidity_levels: cohort.comorbidity_levels.clone() }, chosen_in_order))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}
