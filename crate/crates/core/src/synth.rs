//! Seeded generator for a synthetic admission cohort.
//!
//! The generated cohort has the published shape: 815 raw records (390 mild,
//! 160 moderate, 84 severe, 181 dead), of which 600 are complete in the 33
//! core features, and four sparsely measured biomarkers whose best
//! three-marker combination (D-D dimer, hs-CRP, Ferritin) covers 331 patients.
//!
//! Each patient draws a disease level from their outcome stratum. Routine labs
//! share that level (so they are correlated), each biomarker draws its own
//! level, and age is drawn per stratum independently of the labs. Lab medians
//! interpolate on the log scale between published alive and deceased medians.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Cohort, PatientRecord, Schema, Stratum, AGE, GENDER};
use crate::rng::{self, StageRng};

pub const DEFAULT_SEED: u64 = 20_210_815;

/// Raw records per stratum.
pub const RAW_COUNTS: [(Stratum, usize); 4] =
    [(Stratum::Mild, 390), (Stratum::Moderate, 160), (Stratum::Severe, 84), (Stratum::Dead, 181)];
/// Records complete in every core feature.
pub const COMPLETE_COUNTS: [(Stratum, usize); 4] =
    [(Stratum::Mild, 250), (Stratum::Moderate, 99), (Stratum::Severe, 81), (Stratum::Dead, 170)];
/// Complete records that also carry D-D dimer, hs-CRP and Ferritin.
pub const BIOMARKER_COUNTS: [(Stratum, usize); 4] =
    [(Stratum::Mild, 88), (Stratum::Moderate, 60), (Stratum::Severe, 73), (Stratum::Dead, 110)];

const DD: &str = "D-D dimer";
const CRP: &str = "hs-CRP";
const LDH: &str = "LDH";
const FERRITIN: &str = "Ferritin";

/// Extra records (outside the 331) holding each biomarker, as half-open
/// ranges over the shuffled remainder. The ranges never share all three.
const EXTRA_DD: (usize, usize) = (0, 65);
const EXTRA_CRP: (usize, usize) = (40, 99);
const EXTRA_FERRITIN: (usize, usize) = (80, 147);
const LDH_IN_SUBSET: usize = 240;
const LDH_EXTRA: usize = 65;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Spread of the shared disease level within a stratum.
    pub level_sd: f64,
    /// Spread of each biomarker's own level within a stratum.
    pub biomarker_level_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { seed: DEFAULT_SEED, level_sd: 0.5, biomarker_level_sd: 0.45 }
    }
}

fn level(s: Stratum) -> f64 {
    match s {
        Stratum::Mild => 0.0,
        Stratum::Moderate => 0.35,
        Stratum::Severe => 0.65,
        Stratum::Dead => 1.0,
    }
}

/// Median-anchored log-normal lab: `lo` at level `at_lo`, `hi` at level `at_hi`.
struct LabModel {
    name: &'static str,
    lo: f64,
    hi: f64,
    /// Residual sd on the log scale.
    noise: f64,
    decimals: i32,
}

// anchors: mean level of alive patients (0.2) and of deceased ones (1.0)
const ALIVE_LEVEL: f64 = 0.2;
const DEAD_LEVEL: f64 = 1.0;

const LABS: &[LabModel] = &[
    LabModel { name: "AST/SGOT", lo: 41.4, hi: 55.1, noise: 0.42, decimals: 1 },
    LabModel { name: "Alkaline phosphatase", lo: 92.4, hi: 109.77, noise: 0.26, decimals: 2 },
    LabModel { name: "Platelet Count", lo: 1.62, hi: 1.85, noise: 0.38, decimals: 2 },
    LabModel { name: "RBC Count", lo: 4.41, hi: 4.42, noise: 0.1, decimals: 2 },
    LabModel { name: "SGPT", lo: 39.6, hi: 41.38, noise: 0.6, decimals: 1 },
    LabModel { name: "Serum Potassium", lo: 4.5, hi: 4.5, noise: 0.1, decimals: 2 },
    LabModel { name: "Urea", lo: 25.1, hi: 48.05, noise: 0.33, decimals: 1 },
    LabModel { name: "WBC Count", lo: 6800.0, hi: 11300.0, noise: 0.3, decimals: -2 },
    LabModel { name: "Creatinine", lo: 1.0, hi: 1.33, noise: 0.2, decimals: 2 },
    LabModel { name: "Hemoglobin", lo: 12.5, hi: 12.25, noise: 0.11, decimals: 1 },
    LabModel { name: "Mean Corpuscular Hemoglobin", lo: 28.7, hi: 28.55, noise: 0.07, decimals: 1 },
    LabModel { name: "Mean Corpuscular Volume", lo: 90.4, hi: 88.25, noise: 0.06, decimals: 1 },
    LabModel { name: "Serum Sodium", lo: 140.0, hi: 137.75, noise: 0.03, decimals: 1 },
    LabModel { name: "Direct Bilirubin", lo: 0.28, hi: 0.3, noise: 0.35, decimals: 2 },
    LabModel { name: "Indirect Bilirubin", lo: 0.35, hi: 0.42, noise: 0.4, decimals: 2 },
];

// anchors: mean level of non-severe (0.14) and severe (0.87) patients
const NON_SEVERE_LEVEL: f64 = 0.14;
const SEVERE_LEVEL: f64 = 0.87;

const BIOMARKERS: &[LabModel] = &[
    LabModel { name: DD, lo: 354.0, hi: 780.0, noise: 0.35, decimals: 0 },
    LabModel { name: CRP, lo: 24.75, hi: 62.0, noise: 0.45, decimals: 2 },
    LabModel { name: LDH, lo: 250.0, hi: 450.0, noise: 0.3, decimals: 0 },
    LabModel { name: FERRITIN, lo: 244.0, hi: 544.0, noise: 0.8, decimals: 1 },
];

fn round_to(v: f64, decimals: i32) -> f64 {
    let p = 10f64.powi(decimals);
    (v * p).round() / p
}

fn draw(rng: &mut StageRng, m: &LabModel, z: f64, at_lo: f64, at_hi: f64) -> f64 {
    let t = (z - at_lo) / (at_hi - at_lo);
    let log_median = m.lo.ln() + t * (m.hi.ln() - m.lo.ln());
    let eps: f64 = Normal::new(0.0, m.noise).expect("finite sd").sample(rng);
    let floor = 10f64.powi(-m.decimals.max(0));
    round_to((log_median + eps).exp(), m.decimals).max(floor)
}

fn normal(rng: &mut StageRng, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("finite sd").sample(rng)
}

fn age(rng: &mut StageRng, s: Stratum) -> u32 {
    let (mean, sd) = match s {
        Stratum::Mild => (43.0, 14.0),
        Stratum::Moderate => (51.0, 14.0),
        Stratum::Severe => (56.0, 14.0),
        Stratum::Dead => (70.0, 11.0),
    };
    normal(rng, mean, sd).round().clamp(18.0, 95.0) as u32
}

fn comorbidities(rng: &mut StageRng, names: &[String], z: f64) -> BTreeSet<String> {
    // baseline prevalence, raised with disease level
    let base = |name: &str| match name {
        "hypertension" => (0.22, 0.25),
        "diabetes" => (0.18, 0.2),
        "cardiac disease" => (0.05, 0.1),
        "chronic kidney disease" => (0.03, 0.08),
        "chronic liver disease" => (0.02, 0.03),
        "lung disease" => (0.04, 0.06),
        "morbid obesity" => (0.03, 0.03),
        "hypothyroidism" => (0.05, 0.02),
        _ => (0.03, 0.0),
    };
    names
        .iter()
        .filter(|n| {
            let (p0, slope) = base(n);
            rng.random::<f64>() < (p0 + slope * z.clamp(0.0, 1.5)).min(0.95)
        })
        .cloned()
        .collect()
}

fn symptoms(rng: &mut StageRng, z: f64) -> BTreeSet<String> {
    [("fever", 0.6, 0.1), ("cough", 0.45, 0.1), ("breathlessness", 0.15, 0.45), ("fatigue", 0.3, 0.1)]
        .into_iter()
        .filter(|(_, p, slope)| rng.random::<f64>() < p + slope * z.clamp(0.0, 1.0))
        .map(|(s, _, _)| s.to_string())
        .collect()
}

/// White-cell differential in percent; neutrophils take the remainder.
fn differential(rng: &mut StageRng, z: f64) -> BTreeMap<&'static str, f64> {
    let t = (z - ALIVE_LEVEL) / (DEAD_LEVEL - ALIVE_LEVEL);
    let lognorm = |rng: &mut StageRng, lo: f64, hi: f64, sd: f64| {
        (lo.ln() + t * (hi.ln() - lo.ln()) + normal(rng, 0.0, sd)).exp()
    };
    let mut lymph = lognorm(rng, 21.0, 9.0, 0.45).round().clamp(1.0, 70.0);
    let mut mono = lognorm(rng, 6.0, 4.0, 0.45).round().clamp(0.0, 20.0);
    let eos = lognorm(rng, 2.0, 1.0, 0.5).round().clamp(0.0, 10.0);
    let baso = f64::from(u8::from(rng.random::<f64>() < 0.12));
    if lymph + mono + eos + baso > 80.0 {
        lymph = (lymph * 0.7).round().max(1.0);
        mono = (mono * 0.7).round();
    }
    let neut = 100.0 - lymph - mono - eos - baso;
    BTreeMap::from([
        ("Lymphocyte(%)", lymph),
        ("Monocytes(%)", mono),
        ("Eosinophils(%)", eos),
        ("Basophil(%)", baso),
        ("Neutrophils(%)", neut),
        ("N/L Ratio", round_to(neut / lymph, 2)),
    ])
}

fn core_record(
    rng: &mut StageRng,
    id: usize,
    s: Stratum,
    comorbidity_names: &[String],
    cfg: &SynthConfig,
) -> PatientRecord {
    let z = level(s) + normal(rng, 0.0, cfg.level_sd);
    let mut labs = BTreeMap::new();
    for m in LABS {
        labs.insert(m.name.to_string(), draw(rng, m, z, ALIVE_LEVEL, DEAD_LEVEL));
    }
    let total = round_to(labs["Direct Bilirubin"] + labs["Indirect Bilirubin"], 2);
    labs.insert("Total Bilirubin".into(), total);
    let hct = round_to(labs["Hemoglobin"] * 3.15 * normal(rng, 0.0, 0.03).exp(), 1);
    labs.insert("Hematocrit(%)".into(), hct);
    for (k, v) in differential(rng, z) {
        labs.insert(k.to_string(), v);
    }
    let female_p = if s == Stratum::Dead { 0.3 } else { 0.38 };
    PatientRecord {
        patient_id: format!("P{id:04}"),
        age: Some(age(rng, s)),
        gender: if rng.random::<f64>() < female_p { "F" } else { "M" }.into(),
        outcome: s,
        labs,
        symptoms: symptoms(rng, z),
        comorbidities: comorbidities(rng, comorbidity_names, z),
    }
}

fn biomarker(rng: &mut StageRng, name: &str, s: Stratum, cfg: &SynthConfig) -> f64 {
    let m = BIOMARKERS.iter().find(|m| m.name == name).expect("known biomarker");
    let z = level(s) + normal(rng, 0.0, cfg.biomarker_level_sd);
    draw(rng, m, z, NON_SEVERE_LEVEL, SEVERE_LEVEL)
}

/// Generate the synthetic cohort. The same config always yields the same cohort.
pub fn generate(schema: &Schema, cfg: &SynthConfig) -> Cohort {
    let mut rng = rng::stage_stream(cfg.seed, "synth");
    let comorbidity_names = schema.comorbidity_names();
    let core_labs: Vec<String> =
        schema.measurement_names().into_iter().filter(|n| !schema.biomarker_names().contains(n)).collect();

    let mut records = Vec::new();
    let mut in_subset = Vec::new();
    let mut others = Vec::new();
    for ((s, raw), ((_, complete), (_, with_bio))) in
        RAW_COUNTS.iter().zip(COMPLETE_COUNTS.iter().zip(BIOMARKER_COUNTS.iter()))
    {
        for k in 0..*raw {
            let mut r = core_record(&mut rng, records.len(), *s, &comorbidity_names, cfg);
            if k >= *complete {
                // incomplete: one to three routine measurements (or age) missing
                let n_missing = rng.random_range(1..=3);
                for _ in 0..n_missing {
                    let j = rng.random_range(0..=core_labs.len());
                    if j == core_labs.len() {
                        r.age = None;
                    } else {
                        r.labs.remove(&core_labs[j]);
                    }
                }
                if r.age.is_some() && core_labs.iter().all(|l| r.labs.contains_key(l)) {
                    r.labs.remove(&core_labs[0]);
                }
            }
            if k < *with_bio {
                in_subset.push(records.len());
            } else {
                others.push(records.len());
            }
            records.push(r);
        }
    }

    for &i in &in_subset {
        let s = records[i].outcome;
        for name in [DD, CRP, FERRITIN] {
            let v = biomarker(&mut rng, name, s, cfg);
            records[i].labs.insert(name.into(), v);
        }
    }
    let mut ldh_subset = in_subset.clone();
    ldh_subset.shuffle(&mut rng);
    for &i in &ldh_subset[..LDH_IN_SUBSET] {
        let v = biomarker(&mut rng, LDH, records[i].outcome, cfg);
        records[i].labs.insert(LDH.into(), v);
    }
    others.shuffle(&mut rng);
    for (name, (a, b)) in [(DD, EXTRA_DD), (CRP, EXTRA_CRP), (FERRITIN, EXTRA_FERRITIN)] {
        for &i in &others[a..b] {
            let v = biomarker(&mut rng, name, records[i].outcome, cfg);
            records[i].labs.insert(name.into(), v);
        }
    }
    let mut ldh_others = others.clone();
    ldh_others.shuffle(&mut rng);
    for &i in &ldh_others[..LDH_EXTRA] {
        let v = biomarker(&mut rng, LDH, records[i].outcome, cfg);
        records[i].labs.insert(LDH.into(), v);
    }

    records.shuffle(&mut rng);
    for (k, r) in records.iter_mut().enumerate() {
        r.patient_id = format!("P{:04}", k + 1);
    }

    let mut feature_manifest = vec![AGE.to_string(), GENDER.to_string()];
    feature_manifest.extend(schema.measurement_names());
    feature_manifest.extend(comorbidity_names.iter().cloned());
    Cohort { records, feature_manifest, comorbidity_levels: comorbidity_names }
}

/// The generated cohort rendered as the bundled CSV file.
pub fn generate_csv(schema: &Schema, cfg: &SynthConfig) -> String {
    let mut buf = format!("# Synthetic admission cohort from triage::synth (seed {}). Not patient data.\n", cfg.seed)
        .into_bytes();
    generate(schema, cfg).write_csv(&mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8 csv")
}
