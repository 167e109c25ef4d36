//! Augmented Dictionary Values: per-entry precomputed feature outputs.
//!
//! An ADV holds one output slot per dictionary entry of its column, dead
//! entries included. Slots come either from a fitted [`FeatureSpec`] or from
//! a [`LearnedMapping`] imported from downstream analysis.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::featurize::{CompiledSpec, FeatureSpec, Output};
use crate::store::{Column, ColumnTable};
use crate::value::Value;

/// Original value to output pairs learned elsewhere.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnedMapping {
    pairs: Vec<(Value, f32)>,
    provenance: String,
    #[serde(skip)]
    index: HashMap<Value, f32>,
}

impl LearnedMapping {
    pub fn new(pairs: Vec<(Value, f32)>, provenance: impl Into<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(pairs.len());
        for (v, out) in &pairs {
            if index.insert(v.clone(), *out).is_some() {
                return Err(Error::InvalidParameter(format!("value {v} is mapped twice")));
            }
        }
        Ok(Self {
            pairs,
            provenance: provenance.into(),
            index,
        })
    }

    pub fn pairs(&self) -> &[(Value, f32)] {
        &self.pairs
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn get(&self, value: &Value) -> Option<f32> {
        self.index.get(value).copied()
    }

    /// Re-types the keys for a column dictionary.
    fn typed_for(&self, dict: &Dictionary) -> Result<Self> {
        let pairs = self
            .pairs
            .iter()
            .map(|(v, o)| Ok((dict.check_value(v.clone())?, *o)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs, self.provenance.clone())
    }

    fn rebuild_index(&mut self) {
        self.index = self.pairs.iter().cloned().collect();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum AdvSource {
    Spec { spec: CompiledSpec },
    Learned { mapping: LearnedMapping },
}

/// Distribution statistics over an ADV's count-weighted distinct outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvStats {
    /// Shannon entropy in bits.
    pub entropy: f64,
    /// Gini-Simpson index `1 - sum p_i^2`.
    pub diversity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adv {
    name: String,
    source: AdvSource,
    /// Output width per slot (1 for scalars).
    width: usize,
    /// `width` floats per dictionary entry, in code order.
    outputs: Vec<f32>,
    default_output: f32,
    stats: Option<AdvStats>,
}

impl Adv {
    /// Fits `spec` to `dict` and fills one slot per entry.
    pub fn from_spec(name: impl Into<String>, spec: &FeatureSpec, dict: &Dictionary) -> Result<Self> {
        let compiled = CompiledSpec::compile(spec, dict)?;
        Self::from_compiled(name, compiled, dict)
    }

    pub fn from_compiled(name: impl Into<String>, spec: CompiledSpec, dict: &Dictionary) -> Result<Self> {
        let width = spec.width();
        let mut adv = Self {
            name: name.into(),
            source: AdvSource::Spec { spec },
            width,
            outputs: Vec::with_capacity(dict.len() * width),
            default_output: 0.0,
            stats: None,
        };
        adv.fill(dict)?;
        Ok(adv)
    }

    pub fn from_mapping(
        name: impl Into<String>,
        mapping: &LearnedMapping,
        default_output: f32,
        dict: &Dictionary,
    ) -> Result<Self> {
        let mut adv = Self {
            name: name.into(),
            source: AdvSource::Learned {
                mapping: mapping.typed_for(dict)?,
            },
            width: 1,
            outputs: Vec::with_capacity(dict.len()),
            default_output,
            stats: None,
        };
        adv.fill(dict)?;
        Ok(adv)
    }

    fn fill(&mut self, dict: &Dictionary) -> Result<()> {
        for e in dict.entries() {
            let slot = self.compute_slot(&e.value, e.code)?;
            self.push_slot(&slot);
        }
        if dict.total_live_rows() > 0 {
            self.refresh_stats(dict)?;
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &AdvSource {
        &self.source
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn default_output(&self) -> f32 {
        self.default_output
    }

    pub fn len(&self) -> usize {
        self.outputs.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn slot(&self, code: u32) -> Option<&[f32]> {
        let start = code as usize * self.width;
        self.outputs.get(start..start + self.width)
    }

    pub fn outputs(&self) -> &[f32] {
        &self.outputs
    }

    /// Whether slots hold bucket indices that may be one-hot expanded.
    pub fn is_index_valued(&self) -> bool {
        match &self.source {
            AdvSource::Spec { spec } => spec.is_index_valued(),
            AdvSource::Learned { .. } => true,
        }
    }

    /// The output this ADV defines for `value` (with code `code`), computed
    /// from its source rather than read from a slot.
    pub fn compute_slot(&self, value: &Value, code: u32) -> Result<Vec<f32>> {
        Ok(match &self.source {
            AdvSource::Spec { spec } => match spec.apply(value, code)? {
                Output::Scalar(x) => vec![x],
                Output::Vector(v) => v.to_vec(),
            },
            AdvSource::Learned { mapping } => vec![mapping.get(value).unwrap_or(self.default_output)],
        })
    }

    pub(crate) fn push_slot(&mut self, slot: &[f32]) {
        debug_assert_eq!(slot.len(), self.width);
        self.outputs.extend_from_slice(slot);
    }

    /// Adds the slot for a dictionary entry appended at `code`.
    pub fn maintain_on_insert(&mut self, value: &Value, code: u32) -> Result<()> {
        if code as usize != self.len() {
            return Err(Error::CodeOutOfRange {
                code: code.into(),
                len: self.len(),
            });
        }
        let slot = self.compute_slot(value, code)?;
        self.push_slot(&slot);
        self.mark_stale();
        Ok(())
    }

    pub fn mark_stale(&mut self) {
        self.stats = None;
    }

    pub fn is_stale(&self) -> bool {
        self.stats.is_none()
    }

    /// Last computed statistics, `None` if stale.
    pub fn stats(&self) -> Option<AdvStats> {
        self.stats
    }

    pub fn compute_stats(&self, dict: &Dictionary) -> Result<AdvStats> {
        if self.len() != dict.len() {
            return Err(Error::ShapeMismatch(format!(
                "ADV {} has {} slots for {} dictionary entries",
                self.name,
                self.len(),
                dict.len()
            )));
        }
        let total = dict.total_live_rows();
        if total == 0 {
            return Err(Error::EmptyColumn);
        }
        let mut weights: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for e in dict.live_entries() {
            let slot = self.slot(e.code).expect("slot per entry");
            let key = slot.iter().map(|x| x.to_bits()).collect();
            *weights.entry(key).or_default() += e.count;
        }
        Ok(stats_from_weights(weights.values().copied(), total))
    }

    pub fn refresh_stats(&mut self, dict: &Dictionary) -> Result<AdvStats> {
        let s = self.compute_stats(dict)?;
        self.stats = Some(s);
        Ok(s)
    }

    /// Rebuilds the ADV for a renumbered dictionary where new code `k` was
    /// old code `order[k]`.
    pub(crate) fn reindexed(&self, order: &[u32], dict: &Dictionary) -> Result<Self> {
        let source = match &self.source {
            AdvSource::Spec {
                spec: CompiledSpec::Embedding { table },
            } => AdvSource::Spec {
                spec: CompiledSpec::Embedding {
                    table: table.permuted(order)?,
                },
            },
            other => other.clone(),
        };
        let mut adv = Self {
            name: self.name.clone(),
            source,
            width: self.width,
            outputs: Vec::with_capacity(order.len() * self.width),
            default_output: self.default_output,
            stats: None,
        };
        match &adv.source {
            AdvSource::Spec {
                spec: CompiledSpec::OneHot,
            } => adv.fill(dict)?,
            _ => {
                for &old in order {
                    let slot = self.slot(old).ok_or(Error::CodeOutOfRange {
                        code: old.into(),
                        len: self.len(),
                    })?;
                    adv.outputs.extend_from_slice(slot);
                }
                if dict.total_live_rows() > 0 {
                    adv.refresh_stats(dict)?;
                }
            }
        }
        Ok(adv)
    }

    pub(crate) fn rebuild_index(&mut self) {
        if let AdvSource::Learned { mapping } = &mut self.source {
            mapping.rebuild_index();
        }
    }
}

/// Entropy and Gini-Simpson diversity of a distribution given as counts.
pub fn stats_from_weights(weights: impl IntoIterator<Item = u64>, total: u64) -> AdvStats {
    let mut entropy = 0.0;
    let mut sum_sq = 0.0;
    for w in weights {
        if w == 0 {
            continue;
        }
        let p = w as f64 / total as f64;
        entropy -= p * p.log2();
        sum_sq += p * p;
    }
    AdvStats {
        entropy: entropy.max(0.0),
        diversity: (1.0 - sum_sq).max(0.0),
    }
}

impl ColumnTable {
    /// Registers an ADV computed from `spec` with one pass over the column
    /// dictionary.
    pub fn register_adv(&mut self, column: &str, name: &str, spec: &FeatureSpec) -> Result<&Adv> {
        let col = self.column(column)?;
        Self::check_name(col.name(), col.adv(name).is_some(), name)?;
        let adv = Adv::from_spec(name, spec, col.dictionary())?;
        Ok(self.attach(column, adv))
    }

    pub fn import_learned_mapping(
        &mut self,
        column: &str,
        name: &str,
        mapping: &LearnedMapping,
        default_output: f32,
    ) -> Result<&Adv> {
        let col = self.column(column)?;
        Self::check_name(col.name(), col.adv(name).is_some(), name)?;
        let adv = Adv::from_mapping(name, mapping, default_output, col.dictionary())?;
        Ok(self.attach(column, adv))
    }

    /// Attaches an already-built ADV, e.g. one restored from a snapshot.
    pub fn attach_adv(&mut self, column: &str, adv: Adv) -> Result<&Adv> {
        let col = self.column(column)?;
        Self::check_name(col.name(), col.adv(adv.name()).is_some(), adv.name())?;
        if adv.len() != col.dictionary().len() {
            return Err(Error::ShapeMismatch(format!(
                "ADV {} has {} slots for {} dictionary entries",
                adv.name(),
                adv.len(),
                col.dictionary().len()
            )));
        }
        Ok(self.attach(column, adv))
    }

    fn check_name(column: &str, taken: bool, name: &str) -> Result<()> {
        if taken {
            return Err(Error::DuplicateName {
                column: column.to_owned(),
                name: name.to_owned(),
            });
        }
        Ok(())
    }

    fn attach(&mut self, column: &str, adv: Adv) -> &Adv {
        let col = self.column_mut(column).expect("column checked by caller");
        col.advs.push(adv);
        col.advs.last().expect("just pushed")
    }

    pub fn drop_adv(&mut self, column: &str, name: &str) -> Result<Adv> {
        let col = self.column_mut(column)?;
        let i = col
            .advs
            .iter()
            .position(|a| a.name() == name)
            .ok_or_else(|| Error::UnknownFeature(format!("{column}.{name}")))?;
        Ok(col.advs.remove(i))
    }

    pub fn adv(&self, column: &str, name: &str) -> Result<&Adv> {
        self.column(column)?
            .adv(name)
            .ok_or_else(|| Error::UnknownFeature(format!("{column}.{name}")))
    }

    /// Returns current statistics, recomputing them if stale.
    pub fn adv_stats(&mut self, column: &str, name: &str) -> Result<AdvStats> {
        let col = self.column_mut(column)?;
        let Column { dict, advs, .. } = col;
        let adv = advs
            .iter_mut()
            .find(|a| a.name() == name)
            .ok_or_else(|| Error::UnknownFeature(format!("{column}.{name}")))?;
        match adv.stats() {
            Some(s) => Ok(s),
            None => adv.refresh_stats(dict),
        }
    }

    /// Recomputes every stale ADV statistic on columns with live rows.
    pub fn refresh_adv_stats(&mut self) -> Result<()> {
        let names: Vec<(String, String)> = self
            .columns()
            .iter()
            .filter(|c| c.dictionary().total_live_rows() > 0)
            .flat_map(|c| {
                c.advs()
                    .iter()
                    .map(|a| (c.name().to_owned(), a.name().to_owned()))
            })
            .collect();
        for (c, a) in names {
            self.adv_stats(&c, &a)?;
        }
        Ok(())
    }
}
