//! Finite hypothesis classes over a finite input domain.
//!
//! A class is a list of label rows, one per hypothesis, each of length
//! `domain_size`. Rows are deduplicated at construction (first occurrence
//! wins), so hypothesis indices are stable and two hypotheses never agree
//! everywhere. Domain points are `Input::Index(0..domain_size)`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{Input, Label, LabeledSample};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ClassDoc", into = "ClassDoc")]
pub struct FiniteClass {
    domain: usize,
    rows: Vec<Vec<Label>>,
    names: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct ClassDoc {
    domain: usize,
    hypotheses: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
}

impl TryFrom<ClassDoc> for FiniteClass {
    type Error = Error;

    fn try_from(doc: ClassDoc) -> Result<Self> {
        let rows = doc
            .hypotheses
            .into_iter()
            .map(|r| r.into_iter().map(Label::from_bit).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidClass(e.to_string()))?;
        FiniteClass::new(doc.domain, rows, doc.names)
    }
}

impl From<FiniteClass> for ClassDoc {
    fn from(class: FiniteClass) -> Self {
        ClassDoc {
            domain: class.domain,
            hypotheses: class
                .rows
                .iter()
                .map(|r| r.iter().map(|l| l.as_bit()).collect())
                .collect(),
            names: class.names,
        }
    }
}

impl FiniteClass {
    /// Build a class from label rows. Rows must all have length `domain`;
    /// duplicate rows are dropped, keeping the first occurrence (and its
    /// name, when names are given).
    pub fn new(domain: usize, rows: Vec<Vec<Label>>, names: Option<Vec<String>>) -> Result<Self> {
        if domain == 0 {
            return Err(Error::InvalidClass("domain must be non-empty".into()));
        }
        if rows.is_empty() {
            return Err(Error::InvalidClass("class must have a hypothesis".into()));
        }
        if let Some(ns) = &names {
            if ns.len() != rows.len() {
                return Err(Error::InvalidClass(format!(
                    "{} names for {} hypotheses",
                    ns.len(),
                    rows.len()
                )));
            }
        }
        let mut seen = HashSet::new();
        let mut kept_rows = Vec::with_capacity(rows.len());
        let mut kept_names = names.as_ref().map(|_| Vec::new());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != domain {
                return Err(Error::InvalidClass(format!(
                    "hypothesis {i} has {} labels for a domain of {domain}",
                    row.len()
                )));
            }
            if seen.insert(row.clone()) {
                if let (Some(kn), Some(ns)) = (kept_names.as_mut(), names.as_ref()) {
                    kn.push(ns[i].clone());
                }
                kept_rows.push(row);
            }
        }
        Ok(FiniteClass {
            domain,
            rows: kept_rows,
            names: kept_names,
        })
    }

    pub fn domain_size(&self) -> usize {
        self.domain
    }

    /// Number of (distinct) hypotheses.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, h: usize) -> Result<&[Label]> {
        self.rows
            .get(h)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                what: "hypothesis",
                got: h,
                size: self.rows.len(),
            })
    }

    pub fn name(&self, h: usize) -> Option<&str> {
        self.names.as_ref().and_then(|ns| ns.get(h)).map(String::as_str)
    }

    /// Label assigned by hypothesis `h` to domain point `x`.
    pub fn evaluate(&self, h: usize, x: usize) -> Result<Label> {
        let row = self.row(h)?;
        row.get(x).copied().ok_or(Error::IndexOutOfRange {
            what: "domain point",
            got: x,
            size: self.domain,
        })
    }

    /// As `evaluate`, but taking the crate-wide input type (must be an id).
    pub fn predict(&self, h: usize, x: &Input) -> Result<Label> {
        let idx = x.as_index().ok_or_else(|| {
            Error::InvalidArgument("finite-class input must be a domain id".into())
        })?;
        self.evaluate(h, idx)
    }

    /// Indices of hypotheses consistent with every example in `s`.
    /// Inputs must be domain ids; out-of-range ids are an error.
    pub fn consistent_hypotheses(&self, s: &LabeledSample) -> Result<Vec<usize>> {
        // Validate inputs once so an empty result always means "no consistent
        // hypothesis", never "bad input".
        for e in s {
            let idx = e.x.as_index().ok_or_else(|| {
                Error::InvalidArgument("finite-class input must be a domain id".into())
            })?;
            if idx >= self.domain {
                return Err(Error::IndexOutOfRange {
                    what: "domain point",
                    got: idx,
                    size: self.domain,
                });
            }
        }
        Ok((0..self.rows.len())
            .filter(|&h| {
                s.iter().all(|e| {
                    self.rows[h][e.x.as_index().unwrap()] == e.y
                })
            })
            .collect())
    }

    /// True if at least one hypothesis labels all of `s` correctly.
    pub fn is_realizable(&self, s: &LabeledSample) -> Result<bool> {
        Ok(!self.consistent_hypotheses(s)?.is_empty())
    }

    /// Thresholds on an ordered m-point domain: hypotheses t = 0..=m with
    /// h_t(x) = 1[x >= t], so t = 0 is all-ones and t = m is all-zeros.
    pub fn thresholds(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidClass("domain must be non-empty".into()));
        }
        let rows = (0..=m)
            .map(|t| {
                (0..m)
                    .map(|x| Label::from_bool(x >= t))
                    .collect::<Vec<_>>()
            })
            .collect();
        let names = (0..=m).map(|t| format!("ge-{t}")).collect();
        FiniteClass::new(m, rows, Some(names))
    }

    /// The all-zeros hypothesis plus the m singleton indicators
    /// h_t(x) = 1[x == t]. Hypothesis 0 is the zero function.
    pub fn point_functions(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidClass("domain must be non-empty".into()));
        }
        let mut rows = vec![vec![Label::Zero; m]];
        let mut names = vec!["zero".to_string()];
        for t in 0..m {
            let mut row = vec![Label::Zero; m];
            row[t] = Label::One;
            rows.push(row);
            names.push(format!("point-{t}"));
        }
        FiniteClass::new(m, rows, Some(names))
    }

    /// Every labeling of an m-point domain (2^m hypotheses). Hypothesis `h`
    /// labels point `x` with bit `x` of `h`.
    pub fn full(m: usize) -> Result<Self> {
        if m == 0 || m > 20 {
            return Err(Error::InvalidClass(format!(
                "full class supports domains of 1..=20 points, got {m}"
            )));
        }
        let rows = (0u32..1 << m)
            .map(|h| {
                (0..m)
                    .map(|x| Label::from_bool(h >> x & 1 == 1))
                    .collect()
            })
            .collect();
        FiniteClass::new(m, rows, None)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: ClassDoc = serde_json::from_str(text)?;
        FiniteClass::try_from(doc)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        FiniteClass::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ClassDoc::from(self.clone()))?)
    }
}
