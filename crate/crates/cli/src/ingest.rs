//! Dataset loaders: generic rating triplets, MovieLens `::` files,
//! demographics sidecars, and feature attachment with coverage checks.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use visreg_core::analysis::{DemographicTable, Subject};
use visreg_core::types::Rating;
use visreg_core::{FeatureStore, RatingMatrix, RatingScale};

use crate::error::{CliError, CliResult};

/// Bijection between external 64-bit ids and dense indices, assigned in
/// first-appearance order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdMap {
    to_index: HashMap<u64, u32>,
    to_external: Vec<u64>,
}

impl IdMap {
    pub fn new() -> Self {
        IdMap::default()
    }

    pub fn intern(&mut self, external: u64) -> u32 {
        if let Some(&idx) = self.to_index.get(&external) {
            return idx;
        }
        let idx = self.to_external.len() as u32;
        self.to_external.push(external);
        self.to_index.insert(external, idx);
        idx
    }

    pub fn get(&self, external: u64) -> Option<u32> {
        self.to_index.get(&external).copied()
    }

    pub fn external(&self, index: u32) -> u64 {
        self.to_external[index as usize]
    }

    pub fn externals(&self) -> &[u64] {
        &self.to_external
    }

    pub fn len(&self) -> usize {
        self.to_external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_external.is_empty()
    }

    pub fn from_externals(externals: Vec<u64>) -> CliResult<Self> {
        let mut map = IdMap::new();
        for &e in &externals {
            map.intern(e);
        }
        if map.len() != externals.len() {
            return Err(CliError::usage("id list contains duplicates"));
        }
        Ok(map)
    }
}

/// A loaded dataset with its id mappings and optional side information.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub ratings: RatingMatrix,
    pub features: Option<FeatureStore>,
    pub demographics: Option<DemographicTable>,
    /// Group label legend for the demographics table.
    pub group_names: Vec<String>,
    pub rater_ids: IdMap,
    pub item_ids: IdMap,
    /// (rater, item) pairs that appeared more than once; last value won.
    pub duplicate_count: usize,
}

struct TripletAccumulator {
    rater_ids: IdMap,
    item_ids: IdMap,
    triplets: Vec<Rating>,
    position: HashMap<(u32, u32), usize>,
    duplicates: usize,
}

impl TripletAccumulator {
    fn new() -> Self {
        TripletAccumulator {
            rater_ids: IdMap::new(),
            item_ids: IdMap::new(),
            triplets: Vec::new(),
            position: HashMap::new(),
            duplicates: 0,
        }
    }

    fn push(&mut self, rater_ext: u64, item_ext: u64, value: f64) {
        let rater = self.rater_ids.intern(rater_ext);
        let item = self.item_ids.intern(item_ext);
        match self.position.get(&(rater, item)) {
            Some(&pos) => {
                // duplicate: last occurrence wins, position stays put
                self.triplets[pos].value = value;
                self.duplicates += 1;
            }
            None => {
                self.position.insert((rater, item), self.triplets.len());
                self.triplets.push(Rating { rater, item, value });
            }
        }
    }

    fn finish(self, scale: RatingScale) -> CliResult<DatasetBundle> {
        let ratings = RatingMatrix::new(
            self.rater_ids.len(),
            self.item_ids.len(),
            self.triplets,
            scale,
        )?;
        Ok(DatasetBundle {
            ratings,
            features: None,
            demographics: None,
            group_names: Vec::new(),
            rater_ids: self.rater_ids,
            item_ids: self.item_ids,
            duplicate_count: self.duplicates,
        })
    }
}

fn parse_id(field: &str, line_no: usize, what: &str) -> CliResult<u64> {
    field.trim().parse::<u64>().map_err(|_| {
        CliError::usage(format!("line {line_no}: {what} id `{field}` is not an integer"))
    })
}

fn parse_value(field: &str, line_no: usize) -> CliResult<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        CliError::usage(format!("line {line_no}: rating `{field}` is not a number"))
    })
}

fn check_scale(value: f64, scale: RatingScale, line_no: usize) -> CliResult<()> {
    if !scale.contains(value) {
        if scale == RatingScale::Binary && value == 0.0 {
            return Err(CliError::usage(format!(
                "line {line_no}: rating 0 is not a binary value; unknown ratings are absent, not zero"
            )));
        }
        return Err(CliError::usage(format!(
            "line {line_no}: rating {value} is not on the declared scale"
        )));
    }
    Ok(())
}

/// Loads `rater_id,item_id,value` CSV triplets.
pub fn load_triplets(path: &Path, scale: RatingScale) -> CliResult<DatasetBundle> {
    let content = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut acc = TripletAccumulator::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let (r, it, v) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(r), Some(it), Some(v), None) => (r, it, v),
            _ => {
                return Err(CliError::usage(format!(
                    "line {line_no}: expected `rater_id,item_id,value`, got `{line}`"
                )))
            }
        };
        let rater = parse_id(r, line_no, "rater")?;
        let item = parse_id(it, line_no, "item")?;
        let value = parse_value(v, line_no)?;
        check_scale(value, scale, line_no)?;
        acc.push(rater, item, value);
    }
    if acc.triplets.is_empty() {
        return Err(CliError::usage(format!("{}: no ratings", path.display())));
    }
    acc.finish(scale)
}

/// Loads MovieLens `UserID::MovieID::Rating::Timestamp` lines; timestamps
/// are discarded and duplicates resolve to the last occurrence.
pub fn load_movielens(path: &Path) -> CliResult<DatasetBundle> {
    let content = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut acc = TripletAccumulator::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 4 {
            return Err(CliError::usage(format!(
                "line {line_no}: expected `UserID::MovieID::Rating::Timestamp`, got `{line}`"
            )));
        }
        let user = parse_id(fields[0], line_no, "user")?;
        let movie = parse_id(fields[1], line_no, "movie")?;
        let value = parse_value(fields[2], line_no)?;
        check_scale(value, RatingScale::Stars, line_no)?;
        acc.push(user, movie, value);
    }
    if acc.triplets.is_empty() {
        return Err(CliError::usage(format!("{}: no ratings", path.display())));
    }
    acc.finish(RatingScale::Stars)
}

/// Orders feature rows by the item map. Every item must be covered; rows
/// for unknown items are counted and ignored.
pub fn align_features(
    rows: &[(u64, Vec<f64>)],
    item_ids: &IdMap,
) -> CliResult<(FeatureStore, usize)> {
    if rows.is_empty() {
        return Err(CliError::usage("feature file holds no vectors"));
    }
    let dim = rows[0].1.len();
    let mut by_item: Vec<Option<&Vec<f64>>> = vec![None; item_ids.len()];
    let mut ignored = 0;
    for (ext, vector) in rows {
        if vector.len() != dim {
            return Err(CliError::usage(format!(
                "feature vector for item {ext} has dimension {} but expected {dim}",
                vector.len()
            )));
        }
        match item_ids.get(*ext) {
            Some(idx) => by_item[idx as usize] = Some(vector),
            None => ignored += 1,
        }
    }
    let missing: Vec<u64> = by_item
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_none())
        .map(|(i, _)| item_ids.external(i as u32))
        .collect();
    if !missing.is_empty() {
        let preview: Vec<String> = missing.iter().take(8).map(u64::to_string).collect();
        return Err(CliError::usage(format!(
            "features cover {} of {} items; {} missing (first: {})",
            item_ids.len() - missing.len(),
            item_ids.len(),
            missing.len(),
            preview.join(", ")
        )));
    }
    let mut data = Vec::with_capacity(item_ids.len() * dim);
    for v in by_item {
        data.extend_from_slice(v.unwrap());
    }
    Ok((FeatureStore::new(item_ids.len(), dim, data)?, ignored))
}

/// Attaches per-item features to a bundle.
pub fn attach_features(bundle: &mut DatasetBundle, rows: &[(u64, Vec<f64>)]) -> CliResult<usize> {
    let (store, ignored) = align_features(rows, &bundle.item_ids)?;
    bundle.features = Some(store);
    Ok(ignored)
}

/// Loads `subject_id,age,group` demographics. Subject ids are matched
/// against raters and items independently; one id may fill both roles.
pub fn load_demographics(path: &Path, bundle: &mut DatasetBundle) -> CliResult<()> {
    let content = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut raters = vec![Subject::default(); bundle.rater_ids.len()];
    let mut items = vec![Subject::default(); bundle.item_ids.len()];
    let mut group_names: Vec<String> = Vec::new();
    let mut group_codes: HashMap<String, u32> = HashMap::new();

    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::usage(format!(
                "line {line_no}: expected `subject_id,age,group`, got `{line}`"
            )));
        }
        let subject = parse_id(fields[0], line_no, "subject")?;
        let age: f64 = fields[1].trim().parse().map_err(|_| {
            CliError::usage(format!("line {line_no}: age `{}` is not a number", fields[1]))
        })?;
        let group_label = fields[2].trim().to_string();
        let group = *group_codes.entry(group_label.clone()).or_insert_with(|| {
            group_names.push(group_label);
            (group_names.len() - 1) as u32
        });
        let subj = Subject { age: Some(age), group: Some(group) };
        if let Some(idx) = bundle.rater_ids.get(subject) {
            raters[idx as usize] = subj;
        }
        if let Some(idx) = bundle.item_ids.get(subject) {
            items[idx as usize] = subj;
        }
    }

    bundle.demographics = Some(DemographicTable::new(raters, items));
    bundle.group_names = group_names;
    Ok(())
}

/// Canonical demographics serialization: raters in index order, then
/// items not already covered by a shared id; subjects with no data are
/// skipped.
pub fn save_demographics(path: &Path, bundle: &DatasetBundle) -> CliResult<()> {
    let demo = bundle
        .demographics
        .as_ref()
        .ok_or_else(|| CliError::usage("bundle holds no demographics"))?;
    let mut out = String::new();
    let mut written: std::collections::HashSet<u64> = std::collections::HashSet::new();
    let mut push = |ext: u64, subject: &Subject, out: &mut String| {
        if written.contains(&ext) {
            return;
        }
        if let Some(age) = subject.age {
            let group = subject
                .group
                .and_then(|g| bundle.group_names.get(g as usize))
                .cloned()
                .unwrap_or_default();
            out.push_str(&format!("{ext},{age},{group}\n"));
            written.insert(ext);
        }
    };
    for (i, subject) in demo.raters.iter().enumerate() {
        push(bundle.rater_ids.external(i as u32), subject, &mut out);
    }
    for (i, subject) in demo.items.iter().enumerate() {
        push(bundle.item_ids.external(i as u32), subject, &mut out);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Counts removed during [`filter_dataset`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterReport {
    pub removed_items: usize,
    pub removed_raters: usize,
    pub rounds: usize,
}

/// Removes items that received fewer than `min_received` ratings and
/// subjects outside the age bounds, iterating to a fixed point.
///
/// An external id present in both the rater and the item map is one user
/// in two roles: removing the item side also removes the ratings that
/// user gave, which can push other items under the threshold.
pub fn filter_dataset(
    bundle: &DatasetBundle,
    min_received: usize,
    age_bounds: Option<(f64, f64)>,
) -> CliResult<(DatasetBundle, FilterReport)> {
    let num_raters = bundle.rater_ids.len();
    let num_items = bundle.item_ids.len();
    let mut keep_rater = vec![true; num_raters];
    let mut keep_item = vec![true; num_items];
    let mut report = FilterReport::default();

    // age bounds apply once up front; they do not depend on the ratings
    if let (Some((lo, hi)), Some(demo)) = (age_bounds, &bundle.demographics) {
        for (i, subject) in demo.raters.iter().enumerate() {
            if let Some(age) = subject.age {
                if age < lo || age > hi {
                    keep_rater[i] = false;
                }
            }
        }
        for (i, subject) in demo.items.iter().enumerate() {
            if let Some(age) = subject.age {
                if age < lo || age > hi {
                    keep_item[i] = false;
                }
            }
        }
    }
    // removing an item removes the same user's rater role, and vice versa
    let sync_roles = |keep_rater: &mut [bool], keep_item: &mut [bool]| {
        for r in 0..num_raters {
            if !keep_rater[r] {
                if let Some(i) = bundle.item_ids.get(bundle.rater_ids.external(r as u32)) {
                    keep_item[i as usize] = false;
                }
            }
        }
        for i in 0..num_items {
            if !keep_item[i] {
                if let Some(r) = bundle.rater_ids.get(bundle.item_ids.external(i as u32)) {
                    keep_rater[r as usize] = false;
                }
            }
        }
    };
    sync_roles(&mut keep_rater, &mut keep_item);

    loop {
        report.rounds += 1;
        let mut received = vec![0usize; num_items];
        for t in bundle.ratings.triplets() {
            if keep_rater[t.rater as usize] && keep_item[t.item as usize] {
                received[t.item as usize] += 1;
            }
        }
        let mut changed = false;
        for i in 0..num_items {
            if keep_item[i] && received[i] < min_received {
                keep_item[i] = false;
                changed = true;
            }
        }
        if changed {
            sync_roles(&mut keep_rater, &mut keep_item);
        } else {
            break;
        }
    }

    report.removed_items = keep_item.iter().filter(|k| !**k).count();
    report.removed_raters = keep_rater.iter().filter(|k| !**k).count();

    // rebuild with compacted indices in original first-appearance order
    let mut rater_ids = IdMap::new();
    let mut rater_remap = vec![u32::MAX; num_raters];
    for r in 0..num_raters {
        if keep_rater[r] {
            rater_remap[r] = rater_ids.intern(bundle.rater_ids.external(r as u32));
        }
    }
    let mut item_ids = IdMap::new();
    let mut item_remap = vec![u32::MAX; num_items];
    for i in 0..num_items {
        if keep_item[i] {
            item_remap[i] = item_ids.intern(bundle.item_ids.external(i as u32));
        }
    }

    let triplets: Vec<Rating> = bundle
        .ratings
        .triplets()
        .iter()
        .filter(|t| keep_rater[t.rater as usize] && keep_item[t.item as usize])
        .map(|t| Rating {
            rater: rater_remap[t.rater as usize],
            item: item_remap[t.item as usize],
            value: t.value,
        })
        .collect();
    let ratings = RatingMatrix::new(rater_ids.len(), item_ids.len(), triplets, bundle.ratings.scale())?;

    let features = match &bundle.features {
        Some(fs) => {
            let kept: Vec<usize> =
                (0..num_items).filter(|&i| keep_item[i]).collect();
            Some(visreg_core::eval::select_features(fs, &kept)?)
        }
        None => None,
    };
    let demographics = bundle.demographics.as_ref().map(|demo| {
        let raters = (0..num_raters)
            .filter(|&r| keep_rater[r])
            .map(|r| demo.raters[r])
            .collect();
        let items = (0..num_items)
            .filter(|&i| keep_item[i])
            .map(|i| demo.items[i])
            .collect();
        DemographicTable::new(raters, items)
    });

    Ok((
        DatasetBundle {
            ratings,
            features,
            demographics,
            group_names: bundle.group_names.clone(),
            rater_ids,
            item_ids,
            duplicate_count: bundle.duplicate_count,
        },
        report,
    ))
}
