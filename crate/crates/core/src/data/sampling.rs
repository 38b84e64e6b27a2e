use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};

use super::cohort::Stratum;
use super::matrix::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Per-stratum undersampling targets; strata not named are kept in full.
pub type StratumTargets = BTreeMap<Stratum, usize>;

pub fn default_undersample_targets() -> StratumTargets {
    [(Stratum::Mild, 55), (Stratum::Moderate, 55), (Stratum::Severe, 55)].into_iter().collect()
}

/// Parse `mild=55,moderate=55,severe=55`.
pub fn parse_targets(spec: &str) -> Result<StratumTargets> {
    let mut out = StratumTargets::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, count) =
            part.split_once('=').ok_or_else(|| Error::Config(format!("expected stratum=count, got `{part}`")))?;
        let stratum = name.parse::<Stratum>().map_err(|s| Error::Config(format!("unknown stratum `{s}`")))?;
        let count = count.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad count in `{part}`")))?;
        out.insert(stratum, count);
    }
    Ok(out)
}

pub fn format_targets(targets: &StratumTargets) -> String {
    targets.iter().map(|(s, c)| format!("{s}={c}")).collect::<Vec<_>>().join(",")
}

fn rows_by_stratum(ds: &Dataset) -> BTreeMap<Stratum, Vec<usize>> {
    let mut groups: BTreeMap<Stratum, Vec<usize>> = BTreeMap::new();
    for (i, &s) in ds.matrix.strata.iter().enumerate() {
        groups.entry(s).or_default().push(i);
    }
    groups
}

/// Randomly undersample the named strata to their targets, without
/// replacement. Unnamed strata (the minority class) survive intact; the result
/// is shuffled by `seed`.
pub fn undersample_majority(ds: &Dataset, targets: &StratumTargets, seed: u64) -> Result<Dataset> {
    let groups = rows_by_stratum(ds);
    for (&stratum, &want) in targets {
        let have = groups.get(&stratum).map_or(0, Vec::len);
        if want > have {
            return Err(Error::Sampling { stratum: stratum.to_string(), available: have, requested: want });
        }
    }
    let mut rng = rng::stream(seed);
    let mut chosen = Vec::new();
    for (stratum, rows) in &groups {
        match targets.get(stratum) {
            Some(&want) => {
                let mut picked: Vec<usize> =
                    index::sample(&mut rng, rows.len(), want).into_iter().map(|k| rows[k]).collect();
                picked.sort_unstable();
                chosen.extend(picked);
            }
            None => chosen.extend(rows.iter().copied()),
        }
    }
    chosen.shuffle(&mut rng);
    Ok(ds.select_rows(&chosen))
}

/// Largest-remainder apportionment of `total` across groups of the given sizes.
/// Remainder ties go to the earlier group.
pub fn apportion(sizes: &[usize], fraction: f64, total: usize) -> Vec<usize> {
    let quotas: Vec<f64> = sizes.iter().map(|&s| s as f64 * fraction).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().take(total.saturating_sub(assigned)) {
        counts[g] += 1;
    }
    counts
}

/// Stratified train/validation split preserving the outcome-stratum mix.
pub fn stratified_split(ds: &Dataset, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::Split(format!("val_fraction must lie in (0, 1), got {val_fraction}")));
    }
    let groups = rows_by_stratum(ds);
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let total = (ds.len() as f64 * val_fraction).round() as usize;
    let counts = apportion(&sizes, val_fraction, total);

    let mut rng = rng::stream(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for ((stratum, rows), &k) in groups.iter().zip(&counts) {
        if k == 0 || k >= rows.len() {
            return Err(Error::Split(format!(
                "stratum `{stratum}` with {} rows cannot be placed on both sides",
                rows.len()
            )));
        }
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        val.extend_from_slice(&shuffled[..k]);
        train.extend_from_slice(&shuffled[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((ds.select_rows(&train), ds.select_rows(&val)))
}
