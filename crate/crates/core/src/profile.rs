//! Dataset characteristics extracted from a delimited table.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{Schema, Violation};
use crate::store::Graph;
use crate::term::{Term, Triple};
use crate::vocab::{class, da, prop, RDF_TYPE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetType {
    Categorical,
    Numerical,
}

impl TargetType {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetType::Categorical => "categorical",
            TargetType::Numerical => "numerical",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub name: String,
    pub n_instances: usize,
    pub n_features: usize,
    pub n_numeric: usize,
    pub n_categorical: usize,
    pub pct_missing: f64,
    pub target_type: TargetType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imbalance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_target: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ProfileOptions {
    pub delimiter: u8,
    /// A numeric target with at most this many distinct values is treated as categorical.
    pub categorical_threshold: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { delimiter: b',', categorical_threshold: 10 }
    }
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("target column {0:?} not found")]
    MissingTarget(String),
    #[error("table has no data rows")]
    Empty,
    #[error("target column {0:?} has no values")]
    TargetAllMissing(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "?"
}

fn parse_num(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn profile_file(path: impl AsRef<Path>, target: &str, opts: &ProfileOptions) -> Result<DatasetProfile, ProfileError> {
    let path = path.as_ref();
    let name = path.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    profile_reader(&name, std::fs::File::open(path)?, target, opts)
}

/// Profiles a table with a header row and a designated target column.
pub fn profile_reader(
    name: &str,
    reader: impl Read,
    target: &str,
    opts: &ProfileOptions,
) -> Result<DatasetProfile, ProfileError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(opts.delimiter).has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let target_idx =
        headers.iter().position(|h| h == target).ok_or_else(|| ProfileError::MissingTarget(target.to_string()))?;
    let n_features = headers.len() - 1;

    let mut n_rows = 0usize;
    let mut missing = 0usize;
    let mut numeric = vec![true; headers.len()];
    let mut target_values: Vec<String> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        n_rows += 1;
        for (i, cell) in rec.iter().enumerate() {
            if i == target_idx {
                if !is_missing(cell) {
                    target_values.push(cell.trim().to_string());
                }
                continue;
            }
            if is_missing(cell) {
                missing += 1;
            } else if numeric[i] && parse_num(cell).is_none() {
                numeric[i] = false;
            }
        }
    }
    if n_rows == 0 {
        return Err(ProfileError::Empty);
    }
    if target_values.is_empty() {
        return Err(ProfileError::TargetAllMissing(target.to_string()));
    }
    let n_numeric = (0..headers.len()).filter(|&i| i != target_idx && numeric[i]).count();
    let cells = n_rows * n_features;
    let pct_missing = if cells == 0 { 0.0 } else { missing as f64 / cells as f64 };

    let numeric_target: Option<Vec<f64>> = target_values.iter().map(|v| parse_num(v)).collect();
    let categorical = match &numeric_target {
        None => true,
        Some(vals) => {
            let distinct: BTreeSet<u64> = vals.iter().map(|v| v.to_bits()).collect();
            distinct.len() <= opts.categorical_threshold
        }
    };

    let mut p = DatasetProfile {
        name: name.to_string(),
        n_instances: n_rows,
        n_features,
        n_numeric,
        n_categorical: n_features - n_numeric,
        pct_missing,
        target_type: if categorical { TargetType::Categorical } else { TargetType::Numerical },
        n_classes: None,
        imbalance: None,
        std_target: None,
    };
    if categorical {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for v in &target_values {
            // numeric labels compare by value ("1" and "1.0" are one class)
            let key = parse_num(v).map_or_else(|| v.clone(), |x| x.to_string());
            *counts.entry(key).or_default() += 1;
        }
        let max = *counts.values().max().expect("nonempty");
        let min = *counts.values().min().expect("nonempty");
        p.n_classes = Some(counts.len());
        p.imbalance = Some(max as f64 / min as f64);
    } else {
        let vals = numeric_target.expect("numerical target");
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        p.std_target = Some(var.sqrt());
    }
    Ok(p)
}

impl DatasetProfile {
    pub fn is_valid(&self) -> bool {
        let cat = self.target_type == TargetType::Categorical;
        self.n_numeric + self.n_categorical == self.n_features
            && (0.0..=1.0).contains(&self.pct_missing)
            && self.n_classes.is_some() == cat
            && self.imbalance.is_some() == cat
            && self.imbalance.is_none_or(|r| r >= 1.0)
            && self.std_target.is_some() == !cat
            && self.std_target.is_none_or(|s| s >= 0.0)
    }

    /// Characteristic triples (excluding the type triple) for `entity`.
    pub fn characteristic_triples(&self, entity: &str) -> Vec<Triple> {
        let mut out = vec![
            Triple::with_literal(entity, prop::DATASET_NAME, Term::string(&self.name)),
            Triple::with_literal(entity, prop::N_INSTANCES, Term::integer(self.n_instances as i64)),
            Triple::with_literal(entity, prop::N_FEATURES, Term::integer(self.n_features as i64)),
            Triple::with_literal(entity, prop::N_NUMERIC, Term::integer(self.n_numeric as i64)),
            Triple::with_literal(entity, prop::N_CATEGORICAL, Term::integer(self.n_categorical as i64)),
            Triple::with_literal(entity, prop::PCT_MISSING, Term::float(self.pct_missing)),
            Triple::with_literal(entity, prop::TARGET_TYPE, Term::string(self.target_type.as_str())),
        ];
        if let Some(n) = self.n_classes {
            out.push(Triple::with_literal(entity, prop::N_CLASSES, Term::integer(n as i64)));
        }
        if let Some(r) = self.imbalance {
            out.push(Triple::with_literal(entity, prop::IMBALANCE, Term::float(r)));
        }
        if let Some(s) = self.std_target {
            out.push(Triple::with_literal(entity, prop::STD_TARGET, Term::float(s)));
        }
        out
    }

    /// Key-value rendering for terminals.
    pub fn to_key_values(&self) -> String {
        let mut s = format!(
            "name: {}\nn_instances: {}\nn_features: {}\nn_numeric: {}\nn_categorical: {}\npct_missing: {}\ntarget_type: {}\n",
            self.name,
            self.n_instances,
            self.n_features,
            self.n_numeric,
            self.n_categorical,
            self.pct_missing,
            self.target_type.as_str()
        );
        if let Some(n) = self.n_classes {
            s.push_str(&format!("n_classes: {n}\n"));
        }
        if let Some(r) = self.imbalance {
            s.push_str(&format!("imbalance: {r}\n"));
        }
        if let Some(v) = self.std_target {
            s.push_str(&format!("std_target: {v}\n"));
        }
        s
    }

    /// Rebuilds a profile from a dataset entity's characteristic triples.
    pub fn from_graph(g: &Graph, entity: &Term) -> Option<DatasetProfile> {
        let lit = |p: &str| g.object(entity, p);
        let int = |p: &str| lit(p).and_then(|t| t.as_f64()).map(|v| v as usize);
        let target_type = match lit(prop::TARGET_TYPE)?.lexical() {
            "categorical" => TargetType::Categorical,
            "numerical" => TargetType::Numerical,
            _ => return None,
        };
        Some(DatasetProfile {
            name: lit(prop::DATASET_NAME)?.lexical().to_string(),
            n_instances: int(prop::N_INSTANCES)?,
            n_features: int(prop::N_FEATURES)?,
            n_numeric: int(prop::N_NUMERIC)?,
            n_categorical: int(prop::N_CATEGORICAL)?,
            pct_missing: lit(prop::PCT_MISSING)?.as_f64()?,
            target_type,
            n_classes: int(prop::N_CLASSES),
            imbalance: lit(prop::IMBALANCE).and_then(|t| t.as_f64()),
            std_target: lit(prop::STD_TARGET).and_then(|t| t.as_f64()),
        })
    }
}

/// IRI of the dataset entity for a dataset name.
pub fn dataset_iri(name: &str) -> String {
    let local: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    da(&format!("dataset-{local}"))
}

/// Records a profile in the store and returns the dataset entity. Annotating
/// the same dataset name again reuses the entity and replaces stale values.
pub fn annotate(g: &mut Graph, schema: &Schema, p: &DatasetProfile) -> Result<Term, Violation> {
    let iri = dataset_iri(&p.name);
    let entity = Term::Iri(iri.clone());
    let mut triples = vec![Triple::iris(&iri, RDF_TYPE, class::DATASET)];
    triples.extend(p.characteristic_triples(&iri));

    let stale: Vec<Triple> = g
        .find(Some(&entity), None, None)
        .into_iter()
        .filter(|t| t.object.is_literal() && !triples.contains(t))
        .collect();
    let mut scratch = g.clone();
    for t in &stale {
        scratch.remove(t);
    }
    schema.validate_batch(&scratch, &triples)?;
    for t in &stale {
        g.remove(t);
    }
    g.extend(triples).expect("validated triples are well-formed");
    Ok(entity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(csv: &str, target: &str) -> Result<DatasetProfile, ProfileError> {
        profile_reader("t", csv.as_bytes(), target, &ProfileOptions::default())
    }

    #[test]
    fn complete_table_has_no_missing() {
        let p = prof("a,b,y\n1,x,0\n2,y,1\n", "y").unwrap();
        assert_eq!(p.pct_missing, 0.0);
        assert_eq!((p.n_numeric, p.n_categorical), (1, 1));
        assert_eq!(p.target_type, TargetType::Categorical);
        assert!(p.is_valid());
    }

    #[test]
    fn missing_markers() {
        let p = prof("a,b,y\n,?,0\n2,y,1\n", "y").unwrap();
        assert_eq!(p.pct_missing, 0.5);
        // a blank numeric cell keeps the column numeric
        assert_eq!(p.n_numeric, 1);
    }

    #[test]
    fn errors() {
        assert!(matches!(prof("a,b\n1,2\n", "y"), Err(ProfileError::MissingTarget(_))));
        assert!(matches!(prof("a,y\n", "y"), Err(ProfileError::Empty)));
        assert!(matches!(prof("a,y\n1,?\n2,\n", "y"), Err(ProfileError::TargetAllMissing(_))));
    }

    #[test]
    fn one_row_numeric_target() {
        let csv = "a,y\n1,3.5\n";
        let opts = ProfileOptions { categorical_threshold: 0, ..Default::default() };
        let p = profile_reader("t", csv.as_bytes(), "y", &opts).unwrap();
        assert_eq!(p.target_type, TargetType::Numerical);
        assert_eq!(p.std_target, Some(0.0));
    }

    #[test]
    fn threshold_decides_numeric_targets() {
        let rows: String = (0..30).map(|i| format!("{i},{}\n", i % 11)).collect();
        let p = prof(&format!("a,y\n{rows}"), "y").unwrap();
        assert_eq!(p.target_type, TargetType::Numerical);
        let rows: String = (0..30).map(|i| format!("{i},{}\n", i % 10)).collect();
        let p = prof(&format!("a,y\n{rows}"), "y").unwrap();
        assert_eq!(p.target_type, TargetType::Categorical);
        assert_eq!(p.n_classes, Some(10));
    }

    #[test]
    fn semicolon_delimiter() {
        let opts = ProfileOptions { delimiter: b';', ..Default::default() };
        let p = profile_reader("t", "a;y\n1;u\n2;v\n2;v\n".as_bytes(), "y", &opts).unwrap();
        assert_eq!(p.n_classes, Some(2));
        assert_eq!(p.imbalance, Some(2.0));
    }

    #[test]
    fn annotate_counts_and_idempotence() {
        let schema = Schema::bootstrap();
        let mut g = schema.graph().clone();
        let base = g.len();
        let p = prof("a,b,y\n1,x,0\n2,y,1\n3,y,1\n", "y").unwrap();
        annotate(&mut g, &schema, &p).unwrap();
        assert_eq!(g.len() - base, 10, "9 characteristics + 1 type");
        annotate(&mut g, &schema, &p).unwrap();
        assert_eq!(g.len() - base, 10);

        let num = DatasetProfile {
            name: "n".into(),
            n_instances: 5,
            n_features: 2,
            n_numeric: 2,
            n_categorical: 0,
            pct_missing: 0.0,
            target_type: TargetType::Numerical,
            n_classes: None,
            imbalance: None,
            std_target: Some(1.5),
        };
        let e = annotate(&mut g, &schema, &num).unwrap();
        assert!(g.objects(&e, prop::N_CLASSES).is_empty());
        assert_eq!(g.find(Some(&e), None, None).len(), 9);
        assert_eq!(DatasetProfile::from_graph(&g, &e), Some(num));
    }

    #[test]
    fn reannotating_changed_profile_replaces_values() {
        let schema = Schema::bootstrap();
        let mut g = schema.graph().clone();
        let mut p = prof("a,y\n1,u\n2,v\n", "y").unwrap();
        let e = annotate(&mut g, &schema, &p).unwrap();
        p.n_instances = 99;
        annotate(&mut g, &schema, &p).unwrap();
        assert_eq!(g.objects(&e, prop::N_INSTANCES), vec![Term::integer(99)]);
    }
}
